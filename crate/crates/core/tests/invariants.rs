mod common;

use std::sync::Arc;

use common::{arb_chain, arb_treeplex, small_suite};
use efgfom::dgf::{DgfKind, ProximalSetup, Regularizer};
use efgfom::games::generate_kuhn;
use efgfom::oracle::{chain_vertices, treeplex_vertices};
use efgfom::scext::{ChainDgf, ChainDgfKind};
use efgfom::validate::{chain_checks, equivalence_checks, treeplex_checks, Check};
use proptest::prelude::*;

fn failures(checks: &[Check]) -> Vec<&Check> {
    checks.iter().filter(|c| !c.passed).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_treeplexes_pass_the_suite(t in arb_treeplex(8), seed in any::<u64>()) {
        let t = Arc::new(t);
        let checks = treeplex_checks("random", &t, &small_suite(seed));
        prop_assert!(failures(&checks).is_empty(), "{:#?}", failures(&checks));
    }

    #[test]
    fn random_chains_pass_the_suite(c in arb_chain(6), seed in any::<u64>()) {
        let checks = chain_checks("random", &Arc::new(c), &small_suite(seed));
        prop_assert!(failures(&checks).is_empty(), "{:#?}", failures(&checks));
    }

    #[test]
    fn treeplex_encoding_is_equivalent(t in arb_treeplex(8), seed in any::<u64>()) {
        let checks = equivalence_checks("random", &Arc::new(t), &small_suite(seed));
        prop_assert!(failures(&checks).is_empty(), "{:#?}", failures(&checks));
    }

    /// Both entropy DGFs vanish at their minimizer, the uniform strategy.
    #[test]
    fn uniform_strategy_is_the_center(t in arb_treeplex(8)) {
        let t = Arc::new(t);
        let uniform = t.uniform_strategy();
        for kind in [DgfKind::Dge, DgfKind::DilatedEntropy] {
            let d = ProximalSetup::new(t.clone(), kind);
            let c = d.center().unwrap();
            prop_assert!(c.iter().zip(&uniform).all(|(a, b)| (a - b).abs() < 1e-12));
            prop_assert!(d.value(&uniform).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn linear_maximize_matches_enumeration(t in arb_treeplex(6), g in prop::collection::vec(-5.0f64..5.0, 64)) {
        let g = &g[..t.num_sequences().min(64)];
        prop_assume!(g.len() == t.num_sequences());
        let vertices = treeplex_vertices(&t, 5_000).unwrap();
        let best = vertices.iter().map(|v| v.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((t.linear_maximize(g).1 - best).abs() < 1e-9);
    }

    #[test]
    fn chain_linear_maximize_matches_enumeration(c in arb_chain(5), g in prop::collection::vec(-5.0f64..5.0, 15)) {
        let g = &g[..c.dim()];
        let vertices = chain_vertices(&c, 5_000).unwrap();
        let best = vertices.iter().map(|v| v.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((c.linear_maximize(g).1 - best).abs() < 1e-9);
        prop_assert!(vertices.iter().all(|v| c.is_feasible(v, 1e-12)));
    }
}

#[test]
fn kuhn_diameters() {
    let g = generate_kuhn();
    let dge = ProximalSetup::new(g.treeplex_x.clone(), DgfKind::Dge);
    assert!((dge.diameter_bound() - 343.0 * 2f64.ln()).abs() < 1e-9);
    let ent = ProximalSetup::new(g.treeplex_x.clone(), DgfKind::DilatedEntropy);
    // 2^{D+2} · M_Q² · log 2, scaled by M_Q = 7 with depth D = 2.
    assert!((ent.diameter_bound() - 16.0 * 343.0 * 2f64.ln()).abs() < 1e-9);
}

#[test]
fn chain_scaling_matches_mx() {
    let g = generate_kuhn();
    let (chain, _) = efgfom::scext::chain_from_treeplex(&g.treeplex_x);
    let chain = Arc::new(chain);
    for kind in [ChainDgfKind::Dge, ChainDgfKind::DilatedEntropy] {
        let d = ChainDgf::new(chain.clone(), kind);
        assert_eq!(d.scale(), 6.0);
        assert_eq!(d.max_l1(), 6.0);
    }
}
