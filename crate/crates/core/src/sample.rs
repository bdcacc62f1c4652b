//! Seeded sampling helpers.
//!
//! Every random draw in the crate goes through ChaCha8 (`rand_chacha`), seeded
//! with `seed_from_u64(seed)` and one stream per sample index. Sample `i` is
//! therefore the same no matter how many threads evaluate the batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::treeplex::Treeplex;

pub type SampleRng = ChaCha8Rng;

/// Generator for sample number `stream` under `seed`.
pub fn rng_for(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw from the symmetric Dirichlet(1) distribution on the `k`-simplex.
pub fn dirichlet_ones<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            let e: f64 = rng.sample(Exp1);
            e.max(1e-300)
        })
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|e| *e /= total);
    v
}

/// Interior sequence-form strategy with Dirichlet(1) behavior at every decision point.
pub fn interior_strategy<R: Rng + ?Sized>(t: &Treeplex, rng: &mut R) -> Vec<f64> {
    let mut behavioral = vec![1.0; t.num_sequences()];
    for dp in t.decision_points() {
        let d = dirichlet_ones(rng, dp.num_actions());
        behavioral[dp.sequences()].copy_from_slice(&d);
    }
    t.sequence_form(&behavioral)
}

/// Standard normal vector.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}
