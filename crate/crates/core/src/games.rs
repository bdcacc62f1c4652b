//! Benchmark games as sequence-form bilinear saddle-point problems, plus the
//! portable JSON game format.
//!
//! Convention: player 1 (rows, `x`) minimizes and player 2 (columns, `y`)
//! maximizes `xᵀAy`, where each entry of `A` is player 2's payoff at a leaf
//! times the probability of the chance outcomes leading to it.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::treeplex::{DecisionPointSpec, ParentRef, Treeplex, EMPTY_LABEL};

pub const GAME_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    pub name: String,
    pub treeplex_x: Arc<Treeplex>,
    pub treeplex_y: Arc<Treeplex>,
    /// Sorted by `(row, col)`, each pair at most once.
    pub payoff: Vec<PayoffEntry>,
}

impl GameInstance {
    pub fn new(
        name: impl Into<String>,
        treeplex_x: Treeplex,
        treeplex_y: Treeplex,
        mut payoff: Vec<PayoffEntry>,
    ) -> Result<Self> {
        payoff.sort_by_key(|e| (e.row, e.col));
        for (k, e) in payoff.iter().enumerate() {
            if e.row >= treeplex_x.num_sequences() || e.col >= treeplex_y.num_sequences() {
                return Err(Error::InvalidParameter(format!(
                    "payoff entry ({}, {}) outside {}x{}",
                    e.row,
                    e.col,
                    treeplex_x.num_sequences(),
                    treeplex_y.num_sequences()
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::InvalidParameter(format!("payoff entry ({}, {}) is not finite", e.row, e.col)));
            }
            if k > 0 && payoff[k - 1].row == e.row && payoff[k - 1].col == e.col {
                return Err(Error::InvalidParameter(format!("duplicate payoff entry ({}, {})", e.row, e.col)));
            }
        }
        Ok(Self { name: name.into(), treeplex_x: Arc::new(treeplex_x), treeplex_y: Arc::new(treeplex_y), payoff })
    }

    /// Number of stored payoff entries, one per terminal pair of last sequences.
    pub fn leaves(&self) -> usize {
        self.payoff.len()
    }

    pub fn payoff_matrix(&self) -> CsrMatrix {
        let triplets: Vec<_> = self.payoff.iter().map(|e| (e.row, e.col, e.value)).collect();
        CsrMatrix::from_triplets(self.treeplex_x.num_sequences(), self.treeplex_y.num_sequences(), &triplets)
            .expect("payoff entries validated on construction")
    }

    /// Player 2's expected payoff `xᵀAy`.
    pub fn expected_value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.payoff.iter().map(|e| x[e.row] * e.value * y[e.col]).sum()
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.payoff.iter().fold(0.0, |m, e| m.max(e.value.abs()))
    }
}

// ---------------------------------------------------------------------------
// Poker generators

#[derive(Debug, Clone)]
struct PokerRules {
    ranks: usize,
    copies: usize,
    bet_sizes: Vec<i64>,
    raise_cap: usize,
    ante: i64,
}

fn rank_name(ranks: usize, r: usize) -> String {
    // Small decks end at the king (J, Q, K for three ranks); thirteen add the ace.
    const NAMES: &[u8] = b"23456789TJQKA";
    if ranks <= NAMES.len() {
        let top = if ranks == NAMES.len() { NAMES.len() } else { NAMES.len() - 1 };
        (NAMES[top - ranks + r] as char).to_string()
    } else {
        format!("r{r}")
    }
}

type Prob = Ratio<i64>;

struct PlayerBuilder {
    specs: Vec<DecisionPointSpec>,
    index: HashMap<String, usize>,
}

impl PlayerBuilder {
    fn new() -> Self {
        Self { specs: Vec::new(), index: HashMap::new() }
    }

    fn visit(&mut self, id: String, parent: &ParentRef, actions: &[char]) {
        if let Some(&i) = self.index.get(&id) {
            debug_assert_eq!(&self.specs[i].parent, parent, "perfect recall violated at {id}");
            return;
        }
        self.index.insert(id.clone(), self.specs.len());
        self.specs.push(DecisionPointSpec {
            id,
            parent: parent.clone(),
            actions: actions.iter().map(|c| c.to_string()).collect(),
        });
    }
}

struct PokerBuilder<'a> {
    rules: &'a PokerRules,
    players: [PlayerBuilder; 2],
    leaves: BTreeMap<(ParentRef, ParentRef), Prob>,
}

#[derive(Clone)]
struct HandState {
    cards: [usize; 2],
    public: Option<usize>,
    deck: Vec<usize>,
    round: usize,
    /// Betting history of the whole hand, rounds separated by the public card.
    history: String,
    round_history: String,
    contrib: [i64; 2],
    bets: usize,
    to_act: usize,
    last: [ParentRef; 2],
    prob: Prob,
}

impl PokerBuilder<'_> {
    fn infoset_id(&self, s: &HandState) -> String {
        let me = s.to_act;
        format!("P{}:{}:{}", me + 1, rank_name(self.rules.ranks, s.cards[me]), s.history)
    }

    fn leaf(&mut self, s: &HandState, p2_payoff: i64) {
        let key = (s.last[0].clone(), s.last[1].clone());
        *self.leaves.entry(key).or_insert_with(|| Ratio::from_integer(0)) += s.prob * p2_payoff;
    }

    fn strength(&self, card: usize, public: Option<usize>) -> (usize, usize) {
        match public {
            Some(p) if p == card => (1, card),
            _ => (0, card),
        }
    }

    fn showdown(&mut self, s: &HandState) {
        let a = self.strength(s.cards[0], s.public);
        let b = self.strength(s.cards[1], s.public);
        let payoff = match b.cmp(&a) {
            std::cmp::Ordering::Greater => s.contrib[0],
            std::cmp::Ordering::Less => -s.contrib[1],
            std::cmp::Ordering::Equal => 0,
        };
        self.leaf(s, payoff);
    }

    fn end_round(&mut self, s: HandState) {
        if s.round + 1 == self.rules.bet_sizes.len() {
            return self.showdown(&s);
        }
        let total: usize = s.deck.iter().sum();
        for card in 0..s.deck.len() {
            if s.deck[card] == 0 {
                continue;
            }
            let mut next = s.clone();
            next.prob = s.prob * Ratio::new(s.deck[card] as i64, total as i64);
            next.deck[card] -= 1;
            next.public = Some(card);
            next.round += 1;
            next.history.push_str(&format!("|{}:", rank_name(self.rules.ranks, card)));
            next.round_history.clear();
            next.bets = 0;
            next.to_act = 0;
            self.betting(next);
        }
    }

    fn betting(&mut self, s: HandState) {
        let me = s.to_act;
        let other = 1 - me;
        let facing = s.contrib[other] > s.contrib[me];
        let mut actions = Vec::with_capacity(3);
        if facing {
            actions.push('c');
            if s.bets < self.rules.raise_cap {
                actions.push('r');
            }
            actions.push('f');
        } else {
            actions.push('k');
            if s.bets < self.rules.raise_cap {
                actions.push('b');
            }
        }
        let id = self.infoset_id(&s);
        self.players[me].visit(id.clone(), &s.last[me], &actions);

        for (a, &act) in actions.iter().enumerate() {
            let mut next = s.clone();
            next.last[me] = ParentRef::Sequence { decision_point: id.clone(), action: a };
            next.history.push(act);
            next.round_history.push(act);
            next.to_act = other;
            match act {
                'k' => {
                    if s.round_history.is_empty() {
                        self.betting(next);
                    } else {
                        self.end_round(next);
                    }
                }
                'b' | 'r' => {
                    next.contrib[me] = s.contrib[other] + self.rules.bet_sizes[s.round];
                    next.bets += 1;
                    self.betting(next);
                }
                'c' => {
                    next.contrib[me] = s.contrib[other];
                    self.end_round(next);
                }
                'f' => {
                    let payoff = if me == 0 { s.contrib[0] } else { -s.contrib[1] };
                    self.leaf(&next, payoff);
                }
                _ => unreachable!(),
            }
        }
    }
}

fn generate_poker(name: &str, rules: PokerRules) -> Result<GameInstance> {
    let mut b = PokerBuilder {
        rules: &rules,
        players: [PlayerBuilder::new(), PlayerBuilder::new()],
        leaves: BTreeMap::new(),
    };
    let deck = vec![rules.copies; rules.ranks];
    let total = (rules.ranks * rules.copies) as i64;
    for c1 in 0..rules.ranks {
        let p1 = Ratio::new(deck[c1] as i64, total);
        let mut deck1 = deck.clone();
        deck1[c1] -= 1;
        for c2 in 0..rules.ranks {
            if deck1[c2] == 0 {
                continue;
            }
            let p2 = Ratio::new(deck1[c2] as i64, total - 1);
            let mut deck2 = deck1.clone();
            deck2[c2] -= 1;
            b.betting(HandState {
                cards: [c1, c2],
                public: None,
                deck: deck2,
                round: 0,
                history: String::new(),
                round_history: String::new(),
                contrib: [rules.ante, rules.ante],
                bets: 0,
                to_act: 0,
                last: [ParentRef::Empty, ParentRef::Empty],
                prob: p1 * p2,
            });
        }
    }

    let PokerBuilder { players: [px, py], leaves, .. } = b;
    let tx = Treeplex::new(px.specs)?;
    let ty = Treeplex::new(py.specs)?;
    let resolve = |t: &Treeplex, r: &ParentRef| match r {
        ParentRef::Empty => 0,
        ParentRef::Sequence { decision_point, action } => {
            t.sequence_index(decision_point, *action).expect("generated sequence exists")
        }
    };
    let payoff = leaves
        .iter()
        .map(|((rx, ry), v)| PayoffEntry {
            row: resolve(&tx, rx),
            col: resolve(&ty, ry),
            value: *v.numer() as f64 / *v.denom() as f64,
        })
        .collect();
    GameInstance::new(name, tx, ty, payoff)
}

/// Kuhn poker: three cards, antes of 1, a single bet of 1.
pub fn generate_kuhn() -> GameInstance {
    generate_poker(
        "kuhn",
        PokerRules { ranks: 3, copies: 1, bet_sizes: vec![1], raise_cap: 1, ante: 1 },
    )
    .expect("kuhn generator is well-formed")
}

/// Leduc poker with `ranks` ranks, two copies each; two betting rounds with bet
/// sizes 1 and 2 and at most two bets per round.
pub fn generate_leduc(ranks: usize) -> Result<GameInstance> {
    if ranks < 2 {
        return Err(Error::InvalidParameter(format!("leduc needs at least 2 ranks, got {ranks}")));
    }
    generate_poker(
        &format!("leduc{ranks}"),
        PokerRules { ranks, copies: 2, bet_sizes: vec![1, 2], raise_cap: 2, ante: 1 },
    )
}

/// A matrix game: each player picks a row/column once.
pub fn matrix_game(name: &str, matrix: &[Vec<f64>]) -> Result<GameInstance> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter("matrix game needs a non-empty rectangular matrix".into()));
    }
    let tx = Treeplex::simplex(rows)?;
    let ty = Treeplex::simplex(cols)?;
    let mut payoff = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                payoff.push(PayoffEntry { row: 1 + i, col: 1 + j, value: v });
            }
        }
    }
    GameInstance::new(name, tx, ty, payoff)
}

// ---------------------------------------------------------------------------
// JSON format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    version: u32,
    #[serde(default)]
    name: Option<String>,
    players: Vec<PlayerFile>,
    payoffs: Vec<PayoffFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerFile {
    decision_points: Vec<DecisionPointFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionPointFile {
    id: String,
    parent_sequence: String,
    actions: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffFile {
    row: String,
    col: String,
    value: f64,
}

pub(crate) fn json_error(context: &str, err: serde_json::Error) -> Error {
    Error::ParseError {
        context: format!("{context}:{}:{}", err.line(), err.column()),
        message: err.to_string(),
    }
}

fn player_to_file(t: &Treeplex) -> PlayerFile {
    PlayerFile {
        decision_points: t
            .decision_points()
            .iter()
            .map(|dp| DecisionPointFile {
                id: dp.id.clone(),
                parent_sequence: t.sequence_label(dp.parent),
                actions: dp.actions.clone(),
            })
            .collect(),
    }
}

fn player_from_file(p: PlayerFile, player: usize) -> Result<Treeplex> {
    let actions: HashMap<&str, &[String]> =
        p.decision_points.iter().map(|d| (d.id.as_str(), d.actions.as_slice())).collect();
    let mut specs = Vec::with_capacity(p.decision_points.len());
    for (i, d) in p.decision_points.iter().enumerate() {
        let parent = if d.parent_sequence == EMPTY_LABEL {
            ParentRef::Empty
        } else {
            let Some((id, label)) = d.parent_sequence.rsplit_once('/') else {
                return Err(Error::ParseError {
                    context: format!("players[{player}].decision_points[{i}].parent_sequence"),
                    message: format!("expected '<id>/<action>' or '{EMPTY_LABEL}', got '{}'", d.parent_sequence),
                });
            };
            let action = match actions.get(id) {
                Some(acts) => acts.iter().position(|a| a == label).ok_or_else(|| Error::ParseError {
                    context: format!("players[{player}].decision_points[{i}].parent_sequence"),
                    message: format!("decision point '{id}' has no action '{label}'"),
                })?,
                // Left for the structural check to report.
                None => 0,
            };
            ParentRef::Sequence { decision_point: id.to_string(), action }
        };
        specs.push(DecisionPointSpec { id: d.id.clone(), parent, actions: d.actions.clone() });
    }
    Treeplex::new(specs)
}

pub fn game_to_json(g: &GameInstance) -> String {
    let file = GameFile {
        version: GAME_FORMAT_VERSION,
        name: Some(g.name.clone()),
        players: vec![player_to_file(&g.treeplex_x), player_to_file(&g.treeplex_y)],
        payoffs: g
            .payoff
            .iter()
            .map(|e| PayoffFile {
                row: g.treeplex_x.sequence_label(e.row),
                col: g.treeplex_y.sequence_label(e.col),
                value: e.value,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("game serializes")
}

pub fn game_from_json(text: &str, context: &str) -> Result<GameInstance> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| json_error(context, e))?;
    let version = value.get("version").and_then(|v| v.as_u64()).ok_or_else(|| Error::ParseError {
        context: format!("{context}: version"),
        message: "missing or non-integer 'version'".into(),
    })?;
    if version != GAME_FORMAT_VERSION as u64 {
        return Err(Error::SchemaVersionMismatch { found: version as u32, expected: GAME_FORMAT_VERSION });
    }
    let file: GameFile = serde_json::from_value(value).map_err(|e| Error::ParseError {
        context: context.to_string(),
        message: e.to_string(),
    })?;
    if file.players.len() != 2 {
        return Err(Error::ParseError {
            context: format!("{context}: players"),
            message: format!("expected 2 players, found {}", file.players.len()),
        });
    }
    let mut players = file.players.into_iter();
    let tx = player_from_file(players.next().unwrap(), 0)?;
    let ty = player_from_file(players.next().unwrap(), 1)?;
    let mut payoff = Vec::with_capacity(file.payoffs.len());
    for (k, p) in file.payoffs.iter().enumerate() {
        let row = tx.sequence_by_label(&p.row).ok_or_else(|| Error::ParseError {
            context: format!("payoffs[{k}].row"),
            message: format!("unknown sequence '{}'", p.row),
        })?;
        let col = ty.sequence_by_label(&p.col).ok_or_else(|| Error::ParseError {
            context: format!("payoffs[{k}].col"),
            message: format!("unknown sequence '{}'", p.col),
        })?;
        payoff.push(PayoffEntry { row, col, value: p.value });
    }
    GameInstance::new(file.name.unwrap_or_else(|| "game".into()), tx, ty, payoff)
}

pub fn save_game(g: &GameInstance, path: &Path) -> Result<()> {
    std::fs::write(path, game_to_json(g)).map_err(|e| Error::io(path, e))
}

pub fn load_game(path: &Path) -> Result<GameInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    game_from_json(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_sizes() {
        let g = generate_kuhn();
        assert_eq!(g.treeplex_x.num_decision_points(), 6);
        assert_eq!(g.treeplex_y.num_decision_points(), 6);
        assert_eq!(g.treeplex_x.num_sequences(), 13);
        assert_eq!(g.treeplex_y.num_sequences(), 13);
        assert_eq!(g.leaves(), 30);
        assert!((g.max_abs_payoff() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kuhn_action_order() {
        let g = generate_kuhn();
        let root = g.treeplex_x.decision_point(0);
        assert_eq!(root.id, "P1:J:");
        assert_eq!(root.actions, vec!["k", "b"]);
        let facing = g.treeplex_x.decision_point_index("P1:J:kb").unwrap();
        assert_eq!(g.treeplex_x.decision_point(facing).actions, vec!["c", "f"]);
        assert_eq!(g.treeplex_x.depth(), 2);
    }

    #[test]
    fn leduc3_sizes() {
        let g = generate_leduc(3).unwrap();
        assert_eq!(g.treeplex_x.num_decision_points(), 144);
        assert_eq!(g.treeplex_y.num_decision_points(), 144);
        assert_eq!(g.treeplex_x.num_sequences(), 337);
        assert_eq!(g.treeplex_y.num_sequences(), 337);
        assert_eq!(g.leaves(), 1116);
    }

    #[test]
    fn leduc_rejects_one_rank() {
        assert!(matches!(generate_leduc(1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn matrix_game_is_a_game() {
        let g = matrix_game("pennies", &[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(g.leaves(), 4);
        let u = g.treeplex_x.uniform_strategy();
        assert_eq!(g.expected_value(&u, &u), 0.0);
    }

    #[test]
    fn round_trip_and_errors() {
        let g = generate_kuhn();
        let text = game_to_json(&g);
        let back = game_from_json(&text, "mem").unwrap();
        assert_eq!(back, g);

        let truncated = &text[..text.len() / 2];
        assert!(matches!(game_from_json(truncated, "mem"), Err(Error::ParseError { .. })));

        let bumped = text.replacen("\"version\": 1", "\"version\": 9", 1);
        assert!(matches!(game_from_json(&bumped, "mem"), Err(Error::SchemaVersionMismatch { found: 9, .. })));
    }

    #[test]
    fn hand_written_one_by_one() {
        let text = r#"{
            "version": 1,
            "players": [
                {"decision_points": [{"id": "r", "parent_sequence": "∅", "actions": ["only"]}]},
                {"decision_points": [{"id": "c", "parent_sequence": "∅", "actions": ["only"]}]}
            ],
            "payoffs": [{"row": "r/only", "col": "c/only", "value": 0.5}]
        }"#;
        let g = game_from_json(text, "mem").unwrap();
        assert_eq!(g.treeplex_x.num_sequences(), 2);
        assert_eq!(g.payoff, vec![PayoffEntry { row: 1, col: 1, value: 0.5 }]);
    }
}
