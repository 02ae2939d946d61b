//! Probability semi-distributions over the next symbol.
//!
//! A semi-distribution assigns each context a per-symbol "probability"
//! whose total may fall short of 1; the deficiency `1 - Σ_x ν(x|h)` is the
//! implicit halt/refusal mass and never gets a symbol of its own. Policies
//! are semi-distributions that only ever get evaluated at action positions.

use crate::alphabet::{Alphabet, Parity, Symbol};
use crate::history::History;
use std::sync::Arc;
use thiserror::Error;

/// Tolerance for per-context mass sums: `Σ_x ν(x|h) ≤ 1 + MASS_SLACK`.
pub const MASS_SLACK: f64 = 1e-12;

/// A conditional next-symbol predictor with per-context mass at most 1.
///
/// Implementations must be pure functions of the context: all values in
/// `[0, 1]`, summing to at most `1 + MASS_SLACK` over the alphabet.
pub trait SemiDistribution: Send + Sync {
    /// `ν(symbol | history)`.
    fn prob(&self, history: &History, symbol: Symbol) -> f64;

    fn alphabet(&self) -> Alphabet;

    /// The full conditional row at `history`, in symbol order.
    fn dist_at(&self, history: &History) -> Vec<f64> {
        self.alphabet()
            .symbols()
            .map(|s| self.prob(history, s))
            .collect()
    }

    /// Total symbol mass at `history`; the remainder is halt mass.
    fn mass_at(&self, history: &History) -> f64 {
        self.dist_at(history).iter().sum()
    }
}

impl SemiDistribution for Arc<dyn SemiDistribution> {
    fn prob(&self, history: &History, symbol: Symbol) -> f64 {
        (**self).prob(history, symbol)
    }
    fn alphabet(&self) -> Alphabet {
        (**self).alphabet()
    }
}

/// Joint probability of a whole history: `∏_i ν(x_i | x_{<i})`.
///
/// The empty history has probability 1. Products longer than 32 symbols are
/// accumulated in log space.
pub fn joint_probability(d: &dyn SemiDistribution, h: &History) -> f64 {
    if h.len() <= 32 {
        let mut p = 1.0;
        for i in 0..h.len() {
            p *= d.prob(&h.prefix(i), h.get(i).unwrap());
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    } else {
        let mut log_p = 0.0f64;
        for i in 0..h.len() {
            let q = d.prob(&h.prefix(i), h.get(i).unwrap());
            if q == 0.0 {
                return 0.0;
            }
            log_p += q.ln();
        }
        log_p.exp()
    }
}

/// Walks every context up to `depth` symbols and checks the mass bound.
/// Returns the first offending context, if any.
pub fn find_mass_violation(d: &dyn SemiDistribution, depth: usize) -> Option<(History, f64)> {
    fn walk(d: &dyn SemiDistribution, h: &History, depth: usize) -> Option<(History, f64)> {
        let mass = d.mass_at(h);
        if !(0.0..=1.0 + MASS_SLACK).contains(&mass) {
            return Some((h.clone(), mass));
        }
        if depth == 0 {
            return None;
        }
        for s in d.alphabet().symbols() {
            if let Some(v) = walk(d, &h.child(s), depth - 1) {
                return Some(v);
            }
        }
        None
    }
    walk(d, &History::empty(), depth)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredictorError {
    #[error("weight row has {got} symbol weights, alphabet needs {want}")]
    RowWidth { got: usize, want: usize },
    #[error("probability row invalid: {0}")]
    BadProbabilities(String),
    #[error("context table needs {want} rows for depth {depth}, got {got}")]
    TableSize { want: usize, got: usize, depth: usize },
    #[error("finite-state predictor invalid: {0}")]
    BadMachine(String),
}

/// One conditional row stored as integer weights with an explicit halt
/// column. Decoded probabilities are `w_x / (Σ w + halt)`; an all-zero row
/// is the pure-halt row. Integer weights keep the row exactly encodable in
/// the toy language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightRow {
    pub weights: Vec<u8>,
    pub halt: u8,
}

impl WeightRow {
    pub fn new(weights: Vec<u8>, halt: u8) -> Self {
        WeightRow { weights, halt }
    }

    /// A proper (halt-free) row; panics if all weights are zero.
    pub fn proper(weights: Vec<u8>) -> Self {
        assert!(weights.iter().any(|&w| w > 0), "all-zero proper row");
        WeightRow { weights, halt: 0 }
    }

    pub fn uniform(k: usize) -> Self {
        WeightRow {
            weights: vec![1; k],
            halt: 0,
        }
    }

    /// Deterministic row: all mass on `symbol`.
    pub fn constant(k: usize, symbol: Symbol) -> Self {
        let mut weights = vec![0; k];
        weights[symbol as usize] = 1;
        WeightRow { weights, halt: 0 }
    }

    pub fn total(&self) -> u32 {
        self.weights.iter().map(|&w| w as u32).sum::<u32>() + self.halt as u32
    }

    pub fn prob(&self, symbol: Symbol) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.weights[symbol as usize] as f64 / total as f64
    }

    pub fn probs(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| self.prob_of(w)).collect()
    }

    fn prob_of(&self, w: u8) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            w as f64 / total as f64
        }
    }
}

/// One state of a finite-state predictor: what it emits and where each
/// consumed symbol sends it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FsmState {
    pub emission: WeightRow,
    pub next: Vec<u8>,
}

/// The concrete predictor families.
///
/// The weight-backed variants round-trip through the toy language; the
/// float-backed ones are for hand-built scenario models and have no
/// encoding (asking for one is an error there).
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    /// `1/|X|` on every symbol in every context.
    Uniform { alphabet: Alphabet },
    /// All mass on one symbol in every context.
    Constant { alphabet: Alphabet, symbol: Symbol },
    /// One row used at every context (an i.i.d. source).
    Iid { alphabet: Alphabet, row: WeightRow },
    /// Separate rows for action positions and observation positions.
    ParityIid {
        alphabet: Alphabet,
        action: WeightRow,
        observation: WeightRow,
    },
    /// Rows keyed by the last `depth` symbols (older positions padded
    /// with symbol 0). Row index is the radix-|X| value of the window,
    /// oldest symbol most significant.
    ContextTable {
        alphabet: Alphabet,
        depth: usize,
        rows: Vec<WeightRow>,
    },
    /// Finite-state predictor: emit the current state's row, then follow
    /// the consumed symbol's transition.
    Fsm {
        alphabet: Alphabet,
        start: u8,
        states: Vec<FsmState>,
    },
    /// Arbitrary per-symbol probabilities, same in every context.
    FloatIid { alphabet: Alphabet, probs: Vec<f64> },
    /// Arbitrary per-symbol probabilities split by position parity.
    FloatParity {
        alphabet: Alphabet,
        action: Vec<f64>,
        observation: Vec<f64>,
    },
}

impl Predictor {
    /// Bernoulli-style i.i.d. source over the binary alphabet: `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Predictor, PredictorError> {
        Predictor::float_iid(Alphabet::binary(), vec![1.0 - p, p])
    }

    pub fn float_iid(alphabet: Alphabet, probs: Vec<f64>) -> Result<Predictor, PredictorError> {
        validate_row(&probs, alphabet.size())?;
        Ok(Predictor::FloatIid { alphabet, probs })
    }

    pub fn float_parity(
        alphabet: Alphabet,
        action: Vec<f64>,
        observation: Vec<f64>,
    ) -> Result<Predictor, PredictorError> {
        validate_row(&action, alphabet.size())?;
        validate_row(&observation, alphabet.size())?;
        Ok(Predictor::FloatParity {
            alphabet,
            action,
            observation,
        })
    }

    pub fn iid(alphabet: Alphabet, row: WeightRow) -> Result<Predictor, PredictorError> {
        check_row_width(&row, alphabet.size())?;
        Ok(Predictor::Iid { alphabet, row })
    }

    pub fn parity_iid(
        alphabet: Alphabet,
        action: WeightRow,
        observation: WeightRow,
    ) -> Result<Predictor, PredictorError> {
        check_row_width(&action, alphabet.size())?;
        check_row_width(&observation, alphabet.size())?;
        Ok(Predictor::ParityIid {
            alphabet,
            action,
            observation,
        })
    }

    pub fn context_table(
        alphabet: Alphabet,
        depth: usize,
        rows: Vec<WeightRow>,
    ) -> Result<Predictor, PredictorError> {
        let want = alphabet.size().pow(depth as u32);
        if rows.len() != want {
            return Err(PredictorError::TableSize {
                want,
                got: rows.len(),
                depth,
            });
        }
        for row in &rows {
            check_row_width(row, alphabet.size())?;
        }
        Ok(Predictor::ContextTable {
            alphabet,
            depth,
            rows,
        })
    }

    pub fn fsm(alphabet: Alphabet, start: u8, states: Vec<FsmState>) -> Result<Predictor, PredictorError> {
        if states.is_empty() {
            return Err(PredictorError::BadMachine("no states".into()));
        }
        if (start as usize) >= states.len() {
            return Err(PredictorError::BadMachine(format!(
                "start state {start} out of range"
            )));
        }
        for st in &states {
            check_row_width(&st.emission, alphabet.size())?;
            if st.next.len() != alphabet.size() {
                return Err(PredictorError::BadMachine(format!(
                    "transition row has {} entries, need {}",
                    st.next.len(),
                    alphabet.size()
                )));
            }
            if st.next.iter().any(|&n| (n as usize) >= states.len()) {
                return Err(PredictorError::BadMachine("transition target out of range".into()));
            }
        }
        Ok(Predictor::Fsm {
            alphabet,
            start,
            states,
        })
    }

    fn context_row_index(&self, h: &History, depth: usize, k: usize) -> usize {
        let mut idx = 0usize;
        let n = h.len();
        for i in 0..depth {
            // window position i is the (depth - i)-th most recent symbol;
            // positions before the start of the history read as symbol 0
            let pos = (n + i).checked_sub(depth);
            let sym = match pos {
                Some(p) if p < n => h.get(p).unwrap() as usize,
                _ => 0,
            };
            idx = idx * k + sym;
        }
        idx
    }
}

fn check_row_width(row: &WeightRow, want: usize) -> Result<(), PredictorError> {
    if row.weights.len() != want {
        return Err(PredictorError::RowWidth {
            got: row.weights.len(),
            want,
        });
    }
    Ok(())
}

fn validate_row(probs: &[f64], want: usize) -> Result<(), PredictorError> {
    if probs.len() != want {
        return Err(PredictorError::RowWidth {
            got: probs.len(),
            want,
        });
    }
    let mut sum = 0.0;
    for &p in probs {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(PredictorError::BadProbabilities(format!("entry {p}")));
        }
        sum += p;
    }
    if sum > 1.0 + MASS_SLACK {
        return Err(PredictorError::BadProbabilities(format!("mass {sum} > 1")));
    }
    Ok(())
}

impl SemiDistribution for Predictor {
    fn prob(&self, history: &History, symbol: Symbol) -> f64 {
        match self {
            Predictor::Uniform { alphabet } => 1.0 / alphabet.size() as f64,
            Predictor::Constant { symbol: c, .. } => {
                if symbol == *c {
                    1.0
                } else {
                    0.0
                }
            }
            Predictor::Iid { row, .. } => row.prob(symbol),
            Predictor::ParityIid {
                action, observation, ..
            } => match history.next_parity() {
                Parity::Action => action.prob(symbol),
                Parity::Observation => observation.prob(symbol),
            },
            Predictor::ContextTable {
                alphabet,
                depth,
                rows,
            } => {
                let idx = self.context_row_index(history, *depth, alphabet.size());
                rows[idx].prob(symbol)
            }
            Predictor::Fsm { start, states, .. } => {
                let mut state = *start as usize;
                for &s in history.symbols() {
                    state = states[state].next[s as usize] as usize;
                }
                states[state].emission.prob(symbol)
            }
            Predictor::FloatIid { probs, .. } => probs[symbol as usize],
            Predictor::FloatParity {
                action, observation, ..
            } => match history.next_parity() {
                Parity::Action => action[symbol as usize],
                Parity::Observation => observation[symbol as usize],
            },
        }
    }

    fn alphabet(&self) -> Alphabet {
        match self {
            Predictor::Uniform { alphabet }
            | Predictor::Constant { alphabet, .. }
            | Predictor::Iid { alphabet, .. }
            | Predictor::ParityIid { alphabet, .. }
            | Predictor::ContextTable { alphabet, .. }
            | Predictor::Fsm { alphabet, .. }
            | Predictor::FloatIid { alphabet, .. }
            | Predictor::FloatParity { alphabet, .. } => *alphabet,
        }
    }
}
