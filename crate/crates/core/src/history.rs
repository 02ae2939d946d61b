//! Immutable interleaved action/observation histories.

use crate::alphabet::{Alphabet, Parity, Symbol};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HistoryError {
    #[error("symbol {symbol} at index {index} outside alphabet of size {alphabet}")]
    SymbolOutOfRange {
        symbol: Symbol,
        index: usize,
        alphabet: usize,
    },
}

/// A finite interleaved sequence `a_1 o_1 a_2 o_2 ...` of symbol indices.
///
/// Histories are values: extending one yields a new history, so cached
/// per-prefix quantities elsewhere stay valid. With 1-based timesteps,
/// action `a_t` lives at 0-based index `2t-2` and observation `o_t` at
/// `2t-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct History {
    symbols: Vec<Symbol>,
}

impl History {
    pub fn empty() -> Self {
        History::default()
    }

    pub fn new(symbols: Vec<Symbol>) -> Self {
        History { symbols }
    }

    pub fn checked(symbols: Vec<Symbol>, alphabet: &Alphabet) -> Result<Self, HistoryError> {
        for (index, &symbol) in symbols.iter().enumerate() {
            if !alphabet.contains(symbol) {
                return Err(HistoryError::SymbolOutOfRange {
                    symbol,
                    index,
                    alphabet: alphabet.size(),
                });
            }
        }
        Ok(History { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn get(&self, index: usize) -> Option<Symbol> {
        self.symbols.get(index).copied()
    }

    /// Parity of the next position to be filled.
    pub fn next_parity(&self) -> Parity {
        Parity::of_index(self.len())
    }

    /// Number of completed timesteps (action/observation pairs).
    pub fn completed_steps(&self) -> usize {
        self.len() / 2
    }

    /// A new history with `symbol` appended.
    pub fn child(&self, symbol: Symbol) -> History {
        let mut symbols = Vec::with_capacity(self.len() + 1);
        symbols.extend_from_slice(&self.symbols);
        symbols.push(symbol);
        History { symbols }
    }

    /// A new history with `suffix` appended.
    pub fn extended(&self, suffix: &[Symbol]) -> History {
        let mut symbols = Vec::with_capacity(self.len() + suffix.len());
        symbols.extend_from_slice(&self.symbols);
        symbols.extend_from_slice(suffix);
        History { symbols }
    }

    /// The first `n` symbols as a borrowed view.
    pub fn prefix(&self, n: usize) -> History {
        History {
            symbols: self.symbols[..n].to_vec(),
        }
    }

    /// Action symbols `a_1, a_2, ...` (even 0-based indices).
    pub fn actions(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.symbols.iter().copied().step_by(2)
    }

    /// Observation symbols `o_1, o_2, ...` (odd 0-based indices).
    pub fn observations(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.symbols.iter().copied().skip(1).step_by(2)
    }

    /// The most recent observation, if any pair has produced one.
    pub fn last_observation(&self) -> Option<Symbol> {
        if self.len() < 2 {
            return None;
        }
        let idx = if self.len() % 2 == 0 {
            self.len() - 1
        } else {
            self.len() - 2
        };
        Some(self.symbols[idx])
    }
}

impl std::fmt::Display for History {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl From<&[Symbol]> for History {
    fn from(symbols: &[Symbol]) -> Self {
        History {
            symbols: symbols.to_vec(),
        }
    }
}

impl<const N: usize> From<[Symbol; N]> for History {
    fn from(symbols: [Symbol; N]) -> Self {
        History {
            symbols: symbols.to_vec(),
        }
    }
}
