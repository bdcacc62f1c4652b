use std::sync::Arc;

use efgfom::dgf::{DgfKind, ProximalSetup};
use efgfom::games::{generate_kuhn, matrix_game};
use efgfom::oracle::{brute_force_gap, treeplex_vertices};
use efgfom::sample::{interior_strategy, rng_for};
use efgfom::scext::matching_pennies;
use efgfom::solver::{
    excessive_gap, run, saddle_gap, Algorithm, Egt, EgtAs, EgtAsConfig, MirrorProx, RunOptions, SaddlePointProblem,
};
use proptest::prelude::*;

fn kuhn(kind: DgfKind) -> SaddlePointProblem {
    SaddlePointProblem::from_game(&generate_kuhn(), kind).unwrap()
}

#[test]
fn kuhn_uniform_gap_matches_enumeration() {
    let g = generate_kuhn();
    let p = kuhn(DgfKind::Dge);
    let xs = treeplex_vertices(&g.treeplex_x, 1000).unwrap();
    let ys = treeplex_vertices(&g.treeplex_y, 1000).unwrap();
    let (x, y) = (g.treeplex_x.uniform_strategy(), g.treeplex_y.uniform_strategy());
    let expected = brute_force_gap(p.matrix(), &xs, &ys, &x, &y);
    assert!(expected > 0.1);
    assert!((saddle_gap(&p, &x, &y) - expected).abs() < 1e-12);
}

#[test]
fn pennies_equilibrium() {
    let p = SaddlePointProblem::from_chains(&matching_pennies(), DgfKind::Dge).unwrap();
    assert!(saddle_gap(&p, &[0.5, 0.5], &[0.5, 0.5]).abs() < 1e-12);
    assert!((saddle_gap(&p, &[1.0, 0.0], &[0.5, 0.5]) - 1.0).abs() < 1e-12);
    assert!(SaddlePointProblem::from_chains(&matching_pennies(), DgfKind::DilatedEuclidean).is_err());
}

#[test]
fn pennies_matrix_game_and_chain_agree() {
    let g = matrix_game("pennies", &[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    let tree = SaddlePointProblem::from_game(&g, DgfKind::Dge).unwrap();
    let chain = SaddlePointProblem::from_chains(&matching_pennies(), DgfKind::Dge).unwrap();
    let a = run(&tree, &RunOptions::new(Algorithm::MirrorProx, 50)).unwrap();
    let b = run(&chain, &RunOptions::new(Algorithm::MirrorProx, 50)).unwrap();
    for (l, r) in a.log.iter().zip(&b.log) {
        assert!((l.gap - r.gap).abs() < 1e-12);
    }
}

#[test]
fn mp_solves_pennies() {
    let p = SaddlePointProblem::from_chains(&matching_pennies(), DgfKind::Dge).unwrap();
    let r = run(&p, &RunOptions::new(Algorithm::MirrorProx, 2000)).unwrap();
    assert!(r.final_gap <= 1e-3);
    assert!((r.x[0] - 0.5).abs() < 1e-3 && (r.y[0] - 0.5).abs() < 1e-3);
}

#[test]
fn egt_as_solves_kuhn_within_budget() {
    let p = kuhn(DgfKind::Dge);
    let r = run(&p, &RunOptions::new(Algorithm::EgtAs, 2000)).unwrap();
    let first = r.log.iter().find(|l| l.gap <= 1e-3).expect("gap reaches 1e-3");
    assert!(first.gradient_computations <= 2000);
    assert_eq!(r.bound_satisfied, None);
}

#[test]
fn egt_and_mp_stay_under_their_bounds() {
    for kind in [DgfKind::Dge, DgfKind::DilatedEntropy] {
        let p = kuhn(kind);
        for alg in [Algorithm::Egt, Algorithm::MirrorProx] {
            let r = run(&p, &RunOptions::new(alg, 300)).unwrap();
            assert_eq!(r.bound_satisfied, Some(true), "{alg} {kind}");
            assert!(r.log.iter().all(|l| l.gap >= -1e-9));
            assert!(r.log.windows(2).all(|w| w[0].gradient_computations <= w[1].gradient_computations));
        }
    }
}

#[test]
fn egt_iterates_stay_feasible_and_interior() {
    for kind in [DgfKind::Dge, DgfKind::DilatedEntropy] {
        let p = kuhn(kind);
        let mut s = Egt::initialize(&p).unwrap();
        assert!(excessive_gap(&p, &s.x, &s.y, s.mu_x, s.mu_y).unwrap() >= -1e-9);
        for _ in 0..500 {
            s.iterate(&p).unwrap();
            assert!(p.x.is_feasible(&s.x, 1e-7) && p.y.is_feasible(&s.y, 1e-7));
            assert!(s.x.iter().chain(&s.y).all(|&v| v > 1e-300));
        }
        let mut m = MirrorProx::initialize(&p).unwrap();
        for _ in 0..200 {
            m.iterate(&p).unwrap();
            assert!(m.z_x.iter().chain(&m.z_y).all(|&v| v > 1e-300));
            assert!(p.x.is_feasible(&m.avg_x, 1e-7) && p.y.is_feasible(&m.avg_y, 1e-7));
        }
    }
}

#[test]
fn egt_as_keeps_the_invariant() {
    let p = kuhn(DgfKind::DilatedEntropy);
    let mut s = EgtAs::initialize(&p, EgtAsConfig::default()).unwrap();
    assert!(s.fitted_mu >= 1e-6);
    for _ in 0..200 {
        s.step(&p).unwrap();
        assert!(s.excessive_gap(&p).unwrap() >= 0.0);
        assert!(excessive_gap(&p, s.x(), s.y(), s.mu_x(), s.mu_y()).unwrap() >= -1e-9);
    }
}

#[test]
fn zero_matrix_runs() {
    let g = matrix_game("zero", &[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    let p = SaddlePointProblem::from_game(&g, DgfKind::Dge).unwrap();
    assert_eq!(p.opnorm(), 0.0);
    for alg in [Algorithm::Egt, Algorithm::MirrorProx, Algorithm::EgtAs] {
        let r = run(&p, &RunOptions::new(alg, 20)).unwrap();
        assert_eq!(r.final_gap, 0.0);
    }
}

#[test]
fn dilated_euclidean_solves_kuhn() {
    let p = kuhn(DgfKind::DilatedEuclidean);
    let r = run(&p, &RunOptions::new(Algorithm::Egt, 200)).unwrap();
    assert_eq!(r.bound_satisfied, Some(true));
    assert!(r.final_gap < r.log[0].gap);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Weak duality on arbitrary strategy pairs, and agreement with enumeration.
    #[test]
    fn gap_is_nonnegative(seed in any::<u64>()) {
        let g = generate_kuhn();
        let p = SaddlePointProblem::new(
            Arc::new(ProximalSetup::new(g.treeplex_x.clone(), DgfKind::Dge)),
            Arc::new(ProximalSetup::new(g.treeplex_y.clone(), DgfKind::Dge)),
            g.payoff_matrix(),
        ).unwrap();
        let x = interior_strategy(&g.treeplex_x, &mut rng_for(seed, 0));
        let y = interior_strategy(&g.treeplex_y, &mut rng_for(seed, 1));
        let gap = saddle_gap(&p, &x, &y);
        prop_assert!(gap >= -1e-9);
        let xs = treeplex_vertices(&g.treeplex_x, 1000).unwrap();
        let ys = treeplex_vertices(&g.treeplex_y, 1000).unwrap();
        prop_assert!((gap - brute_force_gap(p.matrix(), &xs, &ys, &x, &y)).abs() < 1e-12);
    }
}
