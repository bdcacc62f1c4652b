//! Brute-force references for small instances: vertex enumeration and
//! best-response gaps over pure strategies.

use crate::scext::ScExtChain;
use crate::sparse::CsrMatrix;
use crate::treeplex::{Treeplex, EMPTY};

/// All pure sequence-form strategies, or `None` if there are more than `limit`.
pub fn treeplex_vertices(t: &Treeplex, limit: usize) -> Option<Vec<Vec<f64>>> {
    let sets = below(t, EMPTY, limit)?;
    Some(
        sets.into_iter()
            .map(|chosen| {
                let mut x = vec![0.0; t.num_sequences()];
                x[EMPTY] = 1.0;
                for s in chosen {
                    x[s] = 1.0;
                }
                x
            })
            .collect(),
    )
}

/// Sets of sequences played below `sigma` by some pure strategy reaching it.
fn below(t: &Treeplex, sigma: usize, limit: usize) -> Option<Vec<Vec<usize>>> {
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for &j in t.children(sigma) {
        let mut options = Vec::new();
        for s in t.decision_point(j).sequences() {
            for mut rest in below(t, s, limit)? {
                rest.push(s);
                options.push(rest);
                if options.len() > limit {
                    return None;
                }
            }
        }
        if combos.len() * options.len() > limit {
            return None;
        }
        combos = combos
            .iter()
            .flat_map(|c| options.iter().map(move |o| c.iter().chain(o).copied().collect()))
            .collect();
    }
    Some(combos)
}

/// All vertices of a chain (one pure choice per block), or `None` past `limit`.
pub fn chain_vertices(chain: &ScExtChain, limit: usize) -> Option<Vec<Vec<f64>>> {
    let count = chain.blocks().iter().try_fold(1usize, |acc, b| acc.checked_mul(b.size))?;
    if count > limit {
        return None;
    }
    let mut out = Vec::with_capacity(count);
    let mut choice = vec![0usize; chain.num_blocks()];
    loop {
        let mut x = vec![0.0; chain.dim()];
        for (k, &c) in choice.iter().enumerate() {
            let h = chain.scaling(k, &x);
            x[chain.coord(k, c)] = h;
        }
        out.push(x);
        let mut k = 0;
        loop {
            if k == choice.len() {
                return Some(out);
            }
            choice[k] += 1;
            if choice[k] < chain.blocks()[k].size {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// `max_v xᵀAv − min_u uᵀAy` over the given vertex lists.
pub fn brute_force_gap(a: &CsrMatrix, xs: &[Vec<f64>], ys: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
    let best_y = ys.iter().map(|v| a.bilinear(x, v)).fold(f64::NEG_INFINITY, f64::max);
    let best_x = xs.iter().map(|u| a.bilinear(u, y)).fold(f64::INFINITY, f64::min);
    best_y - best_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::generate_kuhn;
    use crate::scext::chain_from_treeplex;

    #[test]
    fn kuhn_has_27_pure_strategies() {
        let g = generate_kuhn();
        let v = treeplex_vertices(&g.treeplex_x, 1000).unwrap();
        assert_eq!(v.len(), 27);
        assert!(v.iter().all(|x| g.treeplex_x.is_strategy(x, 0.0)));
        assert!(treeplex_vertices(&g.treeplex_x, 10).is_none());
    }

    #[test]
    fn chain_and_treeplex_vertices_agree_on_l1() {
        let g = generate_kuhn();
        let (chain, _) = chain_from_treeplex(&g.treeplex_y);
        let cv = chain_vertices(&chain, 10_000).unwrap();
        let best = cv.iter().map(|x| x.iter().sum::<f64>()).fold(0.0, f64::max);
        assert_eq!(best, chain.max_l1());
    }
}
