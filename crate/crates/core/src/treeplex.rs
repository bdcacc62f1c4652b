//! Sequence-form strategy polytopes ("treeplexes").
//!
//! A treeplex is built from a list of decision points, each naming its parent
//! sequence. After construction the decision points are stored in top-down
//! order (every decision point comes after the decision point owning its parent
//! sequence) and sequences are numbered contiguously per decision point, with
//! index 0 reserved for the empty sequence. Reversing the decision point order
//! gives a valid bottom-up order, which is what all the dynamic programs below
//! rely on.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Index of the empty sequence.
pub const EMPTY: usize = 0;

/// Label used for the empty sequence in files and reports.
pub const EMPTY_LABEL: &str = "∅";

/// Reference to a parent sequence used while building a treeplex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParentRef {
    Empty,
    Sequence { decision_point: String, action: usize },
}

/// Unvalidated description of one decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPointSpec {
    pub id: String,
    pub parent: ParentRef,
    pub actions: Vec<String>,
}

impl DecisionPointSpec {
    pub fn new(id: impl Into<String>, parent: ParentRef, actions: &[&str]) -> Self {
        Self {
            id: id.into(),
            parent,
            actions: actions.iter().map(|a| a.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub id: String,
    /// Parent sequence index ([`EMPTY`] for root decision points).
    pub parent: usize,
    pub actions: Vec<String>,
    /// Index of the sequence for action 0; actions occupy a contiguous range.
    pub first_seq: usize,
}

impl DecisionPoint {
    #[inline]
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    #[inline]
    pub fn sequences(&self) -> std::ops::Range<usize> {
        self.first_seq..self.first_seq + self.actions.len()
    }
}

/// An immutable, validated sequence-form decision structure for one player.
#[derive(Debug, Clone, PartialEq)]
pub struct Treeplex {
    decision_points: Vec<DecisionPoint>,
    /// Owning decision point of each sequence; `usize::MAX` for the empty sequence.
    seq_owner: Vec<usize>,
    /// Decision points whose parent is the given sequence.
    children: Vec<Vec<usize>>,
    index_by_id: HashMap<String, usize>,
}

impl Treeplex {
    /// Builds and validates a treeplex. Decision points may be given in any
    /// order; children keep the relative order in which they were listed.
    pub fn new(specs: Vec<DecisionPointSpec>) -> Result<Self> {
        let mut input_index: HashMap<&str, usize> = HashMap::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            if input_index.insert(spec.id.as_str(), i).is_some() {
                return Err(Error::DuplicateParentClaim { index: i, id: spec.id.clone() });
            }
            if spec.actions.is_empty() {
                return Err(Error::EmptyActionSet { index: i, id: spec.id.clone() });
            }
        }

        // Children keyed by (parent input index, action); None is the empty sequence.
        let mut root_children = Vec::new();
        let mut seq_children: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut parent_input: Vec<Option<usize>> = vec![None; specs.len()];
        for (i, spec) in specs.iter().enumerate() {
            match &spec.parent {
                ParentRef::Empty => root_children.push(i),
                ParentRef::Sequence { decision_point, action } => {
                    let Some(&p) = input_index.get(decision_point.as_str()) else {
                        return Err(Error::CyclicStructure {
                            index: i,
                            id: spec.id.clone(),
                            detail: format!("parent decision point '{decision_point}' does not exist"),
                        });
                    };
                    if *action >= specs[p].actions.len() {
                        return Err(Error::CyclicStructure {
                            index: i,
                            id: spec.id.clone(),
                            detail: format!(
                                "parent sequence '{decision_point}' action {action} does not exist"
                            ),
                        });
                    }
                    parent_input[i] = Some(p);
                    seq_children.entry((p, *action)).or_default().push(i);
                }
            }
        }

        // Depth-first preorder from the empty sequence.
        let mut order = Vec::with_capacity(specs.len());
        let mut visited = vec![false; specs.len()];
        let mut stack: Vec<usize> = root_children.iter().rev().copied().collect();
        while let Some(i) = stack.pop() {
            if visited[i] {
                return Err(Error::DuplicateParentClaim { index: i, id: specs[i].id.clone() });
            }
            visited[i] = true;
            order.push(i);
            for a in (0..specs[i].actions.len()).rev() {
                if let Some(ch) = seq_children.get(&(i, a)) {
                    stack.extend(ch.iter().rev().copied());
                }
            }
        }
        if let Some(i) = visited.iter().position(|v| !v) {
            return Err(Error::CyclicStructure {
                index: i,
                id: specs[i].id.clone(),
                detail: "not reachable from the empty sequence".into(),
            });
        }

        let mut new_index = vec![0usize; specs.len()];
        for (pos, &i) in order.iter().enumerate() {
            new_index[i] = pos;
        }

        drop(input_index);
        let mut specs: Vec<Option<DecisionPointSpec>> = specs.into_iter().map(Some).collect();
        let mut decision_points: Vec<DecisionPoint> = Vec::with_capacity(order.len());
        let mut seq_owner = vec![usize::MAX];
        let mut next_seq = 1;
        for (pos, &i) in order.iter().enumerate() {
            let spec = specs[i].take().expect("each decision point is visited once");
            let parent = match &spec.parent {
                ParentRef::Empty => EMPTY,
                ParentRef::Sequence { action, .. } => {
                    let p = new_index[parent_input[i].expect("parent resolved above")];
                    decision_points[p].first_seq + action
                }
            };
            let n = spec.actions.len();
            decision_points.push(DecisionPoint {
                id: spec.id,
                parent,
                actions: spec.actions,
                first_seq: next_seq,
            });
            seq_owner.extend(std::iter::repeat_n(pos, n));
            next_seq += n;
        }

        let mut children = vec![Vec::new(); next_seq];
        for (j, dp) in decision_points.iter().enumerate() {
            children[dp.parent].push(j);
        }
        let index_by_id =
            decision_points.iter().enumerate().map(|(j, dp)| (dp.id.clone(), j)).collect();

        let t = Self { decision_points, seq_owner, children, index_by_id };
        t.validate()?;
        Ok(t)
    }

    /// Re-checks every structural invariant. Returns the first violation.
    pub fn validate(&self) -> Result<()> {
        let expected: usize = 1 + self.decision_points.iter().map(|d| d.num_actions()).sum::<usize>();
        let mut next_seq = 1;
        let mut claimed = vec![false; self.decision_points.len()];
        for (j, dp) in self.decision_points.iter().enumerate() {
            if dp.actions.is_empty() {
                return Err(Error::EmptyActionSet { index: j, id: dp.id.clone() });
            }
            if dp.first_seq != next_seq {
                return Err(Error::CyclicStructure {
                    index: j,
                    id: dp.id.clone(),
                    detail: "sequences are not contiguous in top-down order".into(),
                });
            }
            next_seq += dp.num_actions();
            if dp.parent != EMPTY && dp.parent >= dp.first_seq {
                return Err(Error::CyclicStructure {
                    index: j,
                    id: dp.id.clone(),
                    detail: format!("parent sequence {} does not precede the decision point", dp.parent),
                });
            }
        }
        if next_seq != expected || self.seq_owner.len() != expected || self.children.len() != expected {
            return Err(Error::CyclicStructure {
                index: 0,
                id: String::new(),
                detail: format!("sequence count {next_seq} does not match 1 + sum of action counts {expected}"),
            });
        }
        for (sigma, ch) in self.children.iter().enumerate() {
            for &j in ch {
                if claimed[j] || self.decision_points[j].parent != sigma {
                    return Err(Error::DuplicateParentClaim {
                        index: j,
                        id: self.decision_points[j].id.clone(),
                    });
                }
                claimed[j] = true;
            }
        }
        if let Some(j) = claimed.iter().position(|c| !c) {
            return Err(Error::CyclicStructure {
                index: j,
                id: self.decision_points[j].id.clone(),
                detail: "decision point missing from its parent's child set".into(),
            });
        }
        Ok(())
    }

    /// A single decision point with `k` actions under the empty sequence.
    pub fn simplex(k: usize) -> Result<Self> {
        let labels: Vec<String> = (0..k).map(|a| a.to_string()).collect();
        Self::new(vec![DecisionPointSpec { id: "root".into(), parent: ParentRef::Empty, actions: labels }])
    }

    #[inline]
    pub fn num_sequences(&self) -> usize {
        self.seq_owner.len()
    }

    #[inline]
    pub fn num_decision_points(&self) -> usize {
        self.decision_points.len()
    }

    #[inline]
    pub fn decision_points(&self) -> &[DecisionPoint] {
        &self.decision_points
    }

    #[inline]
    pub fn decision_point(&self, j: usize) -> &DecisionPoint {
        &self.decision_points[j]
    }

    /// Decision points whose parent sequence is `sigma` (the set C_σ).
    #[inline]
    pub fn children(&self, sigma: usize) -> &[usize] {
        &self.children[sigma]
    }

    /// Decision point owning a non-empty sequence.
    #[inline]
    pub fn owner(&self, sigma: usize) -> Option<usize> {
        self.seq_owner.get(sigma).copied().filter(|&j| j != usize::MAX)
    }

    pub fn top_down_order(&self) -> std::ops::Range<usize> {
        0..self.decision_points.len()
    }

    pub fn bottom_up_order(&self) -> std::iter::Rev<std::ops::Range<usize>> {
        (0..self.decision_points.len()).rev()
    }

    pub fn decision_point_index(&self, id: &str) -> Option<usize> {
        self.index_by_id.get(id).copied()
    }

    pub fn sequence_index(&self, id: &str, action: usize) -> Option<usize> {
        let dp = &self.decision_points[self.decision_point_index(id)?];
        (action < dp.num_actions()).then(|| dp.first_seq + action)
    }

    /// `"<decision point id>/<action label>"`, or [`EMPTY_LABEL`].
    pub fn sequence_label(&self, sigma: usize) -> String {
        match self.owner(sigma) {
            None => EMPTY_LABEL.to_string(),
            Some(j) => {
                let dp = &self.decision_points[j];
                format!("{}/{}", dp.id, dp.actions[sigma - dp.first_seq])
            }
        }
    }

    /// Inverse of [`Treeplex::sequence_label`].
    pub fn sequence_by_label(&self, label: &str) -> Option<usize> {
        if label == EMPTY_LABEL {
            return Some(EMPTY);
        }
        let (id, action) = label.rsplit_once('/')?;
        let dp = &self.decision_points[self.decision_point_index(id)?];
        let a = dp.actions.iter().position(|l| l == action)?;
        Some(dp.first_seq + a)
    }

    pub fn max_actions(&self) -> usize {
        self.decision_points.iter().map(|d| d.num_actions()).max().unwrap_or(1)
    }

    /// Whether `x` satisfies the sequence-form constraints within `tol`.
    pub fn is_strategy(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.num_sequences() && self.residual(x) <= tol
    }

    /// Largest violation of `x ≥ 0`, `x_∅ = 1` and the flow constraints;
    /// infinite for non-finite input.
    pub fn residual(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.num_sequences());
        if x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let negativity = x.iter().fold(0.0, |m: f64, &v| m.max(-v));
        let flow = self.decision_points.iter().fold(0.0, |m: f64, dp| {
            let mass: f64 = x[dp.sequences()].iter().sum();
            m.max((mass - x[dp.parent]).abs())
        });
        negativity.max(flow).max((x[EMPTY] - 1.0).abs())
    }

    /// Maximum ℓ1 norm over the polytope (M_Q).
    pub fn max_l1(&self) -> f64 {
        let ones = vec![1.0; self.num_sequences()];
        self.linear_maximize(&ones).1
    }

    /// Maximum number of decision points on a root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut below = vec![0usize; self.num_decision_points()];
        for j in self.bottom_up_order() {
            let dp = &self.decision_points[j];
            below[j] = 1 + dp
                .sequences()
                .flat_map(|s| self.children[s].iter())
                .map(|&c| below[c])
                .max()
                .unwrap_or(0);
        }
        self.children[EMPTY].iter().map(|&j| below[j]).max().unwrap_or(0)
    }

    /// Maximizes `g·x` over the polytope; returns a maximizing vertex and the value.
    /// Ties are broken towards the lowest action index.
    pub fn linear_maximize(&self, g: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(g.len(), self.num_sequences(), "gradient length");
        let mut v = g.to_vec();
        let mut choice = vec![0usize; self.num_decision_points()];
        for j in self.bottom_up_order() {
            let dp = &self.decision_points[j];
            let mut best = 0;
            let mut best_val = v[dp.first_seq];
            for a in 1..dp.num_actions() {
                if v[dp.first_seq + a] > best_val {
                    best = a;
                    best_val = v[dp.first_seq + a];
                }
            }
            choice[j] = best;
            v[dp.parent] += best_val;
        }
        let mut x = vec![0.0; self.num_sequences()];
        x[EMPTY] = 1.0;
        for j in self.top_down_order() {
            let dp = &self.decision_points[j];
            x[dp.first_seq + choice[j]] = x[dp.parent];
        }
        (x, v[EMPTY])
    }

    /// Sequence-form strategy from per-sequence local action probabilities.
    /// `behavioral[σ]` is the probability of σ's action at its decision point;
    /// entry 0 is ignored.
    pub fn sequence_form(&self, behavioral: &[f64]) -> Vec<f64> {
        assert_eq!(behavioral.len(), self.num_sequences(), "behavioral length");
        let mut x = vec![0.0; self.num_sequences()];
        x[EMPTY] = 1.0;
        for dp in &self.decision_points {
            let parent = x[dp.parent];
            for s in dp.sequences() {
                x[s] = parent * behavioral[s];
            }
        }
        x
    }

    /// The strategy playing uniformly at every decision point.
    pub fn uniform_strategy(&self) -> Vec<f64> {
        let mut behavioral = vec![1.0; self.num_sequences()];
        for dp in &self.decision_points {
            let p = 1.0 / dp.num_actions() as f64;
            behavioral[dp.sequences()].fill(p);
        }
        self.sequence_form(&behavioral)
    }

    /// Local (behavioral) probabilities of a sequence-form strategy; decision
    /// points with zero reach get the uniform distribution.
    pub fn behavioral(&self, x: &[f64]) -> Vec<f64> {
        let mut b = vec![1.0; self.num_sequences()];
        for dp in &self.decision_points {
            let parent = x[dp.parent];
            for s in dp.sequences() {
                b[s] = if parent > 0.0 { x[s] / parent } else { 1.0 / dp.num_actions() as f64 };
            }
        }
        b
    }
}

impl fmt::Display for Treeplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "treeplex(|J|={}, |Σ|={}, depth={})",
            self.num_decision_points(),
            self.num_sequences(),
            self.depth()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(dp: &str, a: usize) -> ParentRef {
        ParentRef::Sequence { decision_point: dp.into(), action: a }
    }

    /// Three decision points in a line; action 0 continues, action 1 stops.
    pub(crate) fn chain3() -> Treeplex {
        Treeplex::new(vec![
            DecisionPointSpec::new("d1", ParentRef::Empty, &["go", "stop"]),
            DecisionPointSpec::new("d2", seq("d1", 0), &["go", "stop"]),
            DecisionPointSpec::new("d3", seq("d2", 0), &["go", "stop"]),
        ])
        .unwrap()
    }

    #[test]
    fn smallest_treeplex() {
        let t = Treeplex::simplex(2).unwrap();
        assert_eq!(t.num_sequences(), 3);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.max_l1(), 2.0);
        t.validate().unwrap();
    }

    #[test]
    fn chain_stats() {
        let t = chain3();
        assert_eq!(t.depth(), 3);
        assert_eq!(t.max_l1(), 4.0);
        assert_eq!(t.num_sequences(), 7);
    }

    #[test]
    fn children_listed_out_of_order_are_sorted_top_down() {
        let t = Treeplex::new(vec![
            DecisionPointSpec::new("d3", seq("d2", 0), &["a", "b"]),
            DecisionPointSpec::new("d2", seq("d1", 1), &["a", "b"]),
            DecisionPointSpec::new("d1", ParentRef::Empty, &["a", "b"]),
        ])
        .unwrap();
        assert_eq!(t.decision_point(0).id, "d1");
        assert_eq!(t.decision_point(2).id, "d3");
        assert_eq!(t.decision_point(1).parent, 2);
        assert_eq!(t.sequence_by_label("d3/b"), Some(6));
        assert_eq!(t.sequence_label(3), "d2/a");
    }

    #[test]
    fn missing_parent_is_rejected() {
        let err = Treeplex::new(vec![
            DecisionPointSpec::new("d1", ParentRef::Empty, &["a"]),
            DecisionPointSpec::new("d2", seq("nope", 0), &["a"]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::CyclicStructure { index: 1, .. }), "{err}");

        let err = Treeplex::new(vec![
            DecisionPointSpec::new("d1", ParentRef::Empty, &["a"]),
            DecisionPointSpec::new("d2", seq("d1", 3), &["a"]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::CyclicStructure { .. }));
    }

    #[test]
    fn cycle_is_rejected() {
        let err = Treeplex::new(vec![
            DecisionPointSpec::new("d1", ParentRef::Empty, &["a"]),
            DecisionPointSpec::new("d2", seq("d3", 0), &["a"]),
            DecisionPointSpec::new("d3", seq("d2", 0), &["a"]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::CyclicStructure { .. }));
    }

    #[test]
    fn duplicate_and_empty_are_rejected() {
        let err = Treeplex::new(vec![
            DecisionPointSpec::new("d1", ParentRef::Empty, &["a"]),
            DecisionPointSpec::new("d1", ParentRef::Empty, &["a"]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateParentClaim { index: 1, .. }));
        let err = Treeplex::new(vec![DecisionPointSpec::new("d1", ParentRef::Empty, &[])]).unwrap_err();
        assert!(matches!(err, Error::EmptyActionSet { index: 0, .. }));
    }

    #[test]
    fn linear_maximize_simplex() {
        let t = Treeplex::simplex(2).unwrap();
        let (x, v) = t.linear_maximize(&[0.0, 3.0, 1.0]);
        assert_eq!(x, vec![1.0, 1.0, 0.0]);
        assert_eq!(v, 3.0);
        let (x, v) = t.linear_maximize(&[0.0, 0.0, 0.0]);
        assert_eq!(v, 0.0);
        assert_eq!(x, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn strategy_predicate() {
        let t = chain3();
        assert!(t.is_strategy(&t.uniform_strategy(), 1e-12));
        assert!(!t.is_strategy(&vec![0.0; t.num_sequences()], 1e-9));
        assert!(!t.is_strategy(&[1.0], 1e-9));
        let mut x = t.uniform_strategy();
        x[1] += 1e-3;
        assert!(!t.is_strategy(&x, 1e-6));
    }

    #[test]
    fn behavioral_round_trip() {
        let t = chain3();
        let x = t.uniform_strategy();
        let b = t.behavioral(&x);
        let y = t.sequence_form(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
