//! Finite alphabets and position parity for interleaved histories.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a symbol in an [`Alphabet`].
pub type Symbol = u8;

/// Largest supported alphabet. Keeps toy-language symbol fields at most
/// 4 bits wide and every enumeration desk-scale.
pub const MAX_ALPHABET: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("alphabet size {0} out of range (need 2..={MAX_ALPHABET})")]
    SizeOutOfRange(usize),
}

/// A finite symbol set `{0, 1, ..., size-1}` with a stable ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: u8,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self, AlphabetError> {
        if !(2..=MAX_ALPHABET).contains(&size) {
            return Err(AlphabetError::SizeOutOfRange(size));
        }
        Ok(Alphabet { size: size as u8 })
    }

    /// The binary alphabet, ubiquitous in tests.
    pub fn binary() -> Self {
        Alphabet { size: 2 }
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn contains(&self, s: Symbol) -> bool {
        (s as usize) < self.size()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        0..self.size
    }

    /// Bits needed for a fixed-width symbol field in the toy language.
    pub fn symbol_bits(&self) -> usize {
        let mut bits = 0;
        while (1usize << bits) < self.size() {
            bits += 1;
        }
        bits.max(1)
    }
}

/// Whether a sequence position holds an action or an observation.
///
/// Timesteps are 1-based: action `a_t` sits at 0-based index `2t-2`,
/// observation `o_t` at index `2t-1`. Even-length histories are therefore
/// about to emit an action, odd-length ones an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Action,
    Observation,
}

impl Parity {
    /// Parity of the position at 0-based index `i`.
    pub fn of_index(i: usize) -> Parity {
        if i % 2 == 0 {
            Parity::Action
        } else {
            Parity::Observation
        }
    }
}
