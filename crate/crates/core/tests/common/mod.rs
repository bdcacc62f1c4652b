#![allow(dead_code)]

use std::collections::BTreeSet;

use efgfom::scext::{ScExtChain, ScaleCoeff};
use efgfom::treeplex::{DecisionPointSpec, ParentRef, Treeplex};
use efgfom::validate::SuiteConfig;
use proptest::prelude::*;

/// Each entry is `(parent pick, action count)`; pick 0 hangs the decision
/// point off the empty sequence, pick `k` off the `k`-th existing sequence.
pub fn treeplex_from_picks(picks: &[(usize, usize)]) -> Treeplex {
    let mut specs = Vec::new();
    let mut sequences: Vec<(String, usize)> = Vec::new();
    for (j, &(pick, actions)) in picks.iter().enumerate() {
        let id = format!("d{j}");
        let parent = match pick % (sequences.len() + 1) {
            0 => ParentRef::Empty,
            k => {
                let (dp, a) = sequences[k - 1].clone();
                ParentRef::Sequence { decision_point: dp, action: a }
            }
        };
        let labels: Vec<String> = (0..actions).map(|a| format!("a{a}")).collect();
        let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        specs.push(DecisionPointSpec::new(id.clone(), parent, &labels));
        sequences.extend((0..actions).map(|a| (id.clone(), a)));
    }
    Treeplex::new(specs).expect("picks always describe a tree")
}

pub fn arb_treeplex(max_dps: usize) -> impl Strategy<Value = Treeplex> {
    prop::collection::vec((0usize..64, 1usize..=3), 1..=max_dps).prop_map(|p| treeplex_from_picks(&p))
}

/// `(size, [(ref block pick, ref index pick, weight)])` per block.
type BlockPicks = Vec<(usize, Vec<(usize, usize, f64)>)>;

pub fn chain_from_picks(picks: &BlockPicks) -> ScExtChain {
    let sizes: Vec<usize> = picks.iter().map(|p| p.0).collect();
    let mut h = Vec::new();
    for (k, (_, refs)) in picks.iter().enumerate().skip(1) {
        let mut seen = BTreeSet::new();
        let mut coeffs: Vec<ScaleCoeff> = refs
            .iter()
            .filter_map(|&(b, i, v)| {
                let b = b % k;
                let i = i % sizes[b];
                seen.insert((b, i)).then_some(ScaleCoeff { ref_block: b, ref_index: i, value: v })
            })
            .collect();
        if coeffs.is_empty() {
            continue;
        }
        // Every coordinate is at most 1, so weights summing to at most 1 keep h ≤ 1.
        let total: f64 = coeffs.iter().map(|c| c.value).sum();
        if total > 1.0 {
            coeffs.iter_mut().for_each(|c| c.value /= total);
        }
        h.push((k, coeffs));
    }
    ScExtChain::new(&sizes, h).expect("normalized picks describe a valid chain")
}

pub fn arb_chain(max_blocks: usize) -> impl Strategy<Value = ScExtChain> {
    let refs = prop::collection::vec((0usize..16, 0usize..16, 0.05f64..=1.0), 0..=2);
    prop::collection::vec((1usize..=3, refs), 1..=max_blocks).prop_map(|p| chain_from_picks(&p))
}

/// A line of `d` two-action decision points; action 0 continues.
pub fn line_treeplex(d: usize) -> Treeplex {
    treeplex_from_picks(&(0..d).map(|j| (if j == 0 { 0 } else { 2 * j - 1 }, 2)).collect::<Vec<_>>())
}

pub fn small_suite(seed: u64) -> SuiteConfig {
    SuiteConfig {
        seed,
        dilatability_samples: 20,
        hessian_samples: 10,
        gradient_samples: 10,
        conjugate_samples: 10,
        oracle_samples: 20,
        identity_samples: 10,
        diameter_pairs: 50,
        vertex_limit: 2_000,
    }
}
