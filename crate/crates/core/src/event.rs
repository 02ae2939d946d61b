//! Decidable history predicates and their occurrence bookkeeping.
//!
//! An event is a subset of histories given by a total predicate. With
//! 1-based timesteps, the event *happens at time t* when the predicate
//! holds on the prefix of `2t-2` symbols (the `t-1` completed pairs seen
//! before action `a_t`), and it is *unprecedented at t* if it happened at
//! no earlier time. The predicate families here are exactly the ones the
//! toy language can encode, so every event has a measurable description
//! length.

use crate::alphabet::{Alphabet, Symbol};
use crate::history::History;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventError {
    #[error("timestep {t} out of range for history of length {len} (need 2t-2 <= len and t >= 1)")]
    TimestepOutOfRange { t: usize, len: usize },
}

/// The encodable predicate families.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// Histories with at least `n` symbols — the finite stand-in for the
    /// `E_T = X^T` family. First happens once `n` symbols have accumulated.
    LengthAtLeast(u64),
    /// The most recent observation equals the given symbol.
    LastObsEquals(Symbol),
    /// Some observation so far equals the given symbol.
    AnyObsEquals(Symbol),
    /// Holds on every history (including the empty one).
    Always,
    /// Holds on no history.
    Never,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    kind: EventKind,
}

impl Event {
    pub fn new(kind: EventKind) -> Self {
        Event { kind }
    }

    pub fn length_at_least(n: u64) -> Self {
        Event::new(EventKind::LengthAtLeast(n))
    }

    pub fn last_obs_equals(s: Symbol) -> Self {
        Event::new(EventKind::LastObsEquals(s))
    }

    pub fn any_obs_equals(s: Symbol) -> Self {
        Event::new(EventKind::AnyObsEquals(s))
    }

    pub fn always() -> Self {
        Event::new(EventKind::Always)
    }

    pub fn never() -> Self {
        Event::new(EventKind::Never)
    }

    pub fn kind(&self) -> &EventKind {
        &self.kind
    }

    /// The raw predicate: is `h` in the event set?
    pub fn holds(&self, h: &History) -> bool {
        match &self.kind {
            EventKind::LengthAtLeast(n) => h.len() as u64 >= *n,
            EventKind::LastObsEquals(s) => h.last_observation() == Some(*s),
            EventKind::AnyObsEquals(s) => h.observations().any(|o| o == *s),
            EventKind::Always => true,
            EventKind::Never => false,
        }
    }

    /// Does the event happen at time `t`, i.e. does the predicate hold on
    /// the `2t-2`-symbol prefix of `h`?
    pub fn happens_at(&self, h: &History, t: usize) -> Result<bool, EventError> {
        let need = self.prefix_len(h, t)?;
        Ok(self.holds(&h.prefix(need)))
    }

    /// Has the event happened by time `t` (at any `k <= t`)?
    pub fn has_happened_by(&self, h: &History, t: usize) -> Result<bool, EventError> {
        self.prefix_len(h, t)?;
        for k in 1..=t {
            if self.happens_at(h, k)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Is the event unprecedented at time `t` (never happened by `t-1`)?
    pub fn unprecedented_at(&self, h: &History, t: usize) -> Result<bool, EventError> {
        self.prefix_len(h, t)?;
        if t == 1 {
            return Ok(true);
        }
        Ok(!self.has_happened_by(h, t - 1)?)
    }

    /// Has the event happened at any even prefix of `h` (including `h`
    /// itself when its length is even)? This is the trigger state a switch
    /// policy consults before emitting a symbol after `h`.
    pub fn has_happened_in(&self, h: &History) -> bool {
        let mut n = 0;
        while n <= h.len() {
            if self.holds(&h.prefix(n)) {
                return true;
            }
            n += 2;
        }
        false
    }

    /// Length in bits of the canonical toy-language encoding.
    pub fn description_length_bits(&self, alphabet: &Alphabet) -> u64 {
        crate::toylang::event_code_length(self, alphabet)
    }

    fn prefix_len(&self, h: &History, t: usize) -> Result<usize, EventError> {
        if t == 0 {
            return Err(EventError::TimestepOutOfRange { t, len: h.len() });
        }
        let need = 2 * t - 2;
        if need > h.len() {
            return Err(EventError::TimestepOutOfRange { t, len: h.len() });
        }
        Ok(need)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn happens_at_examines_even_prefix() {
        // length >= 4 over a length-6 history: x_{<2t} at t = 3 has 4 symbols
        let e = Event::length_at_least(4);
        let h = History::from([0, 1, 0, 1, 0, 1]);
        assert!(e.happens_at(&h, 3).unwrap());
        assert!(!e.happens_at(&h, 1).unwrap());
    }

    #[test]
    fn x_pow_t_family_first_happens_at_t() {
        // E_3 holds on prefixes of length >= 3, first reachable at t = 3
        let e = Event::length_at_least(3);
        let h = History::from([0, 0, 0, 0, 0, 0]);
        assert!(e.happens_at(&h, 3).unwrap());
        assert!(e.unprecedented_at(&h, 3).unwrap());
        assert!(!e.unprecedented_at(&h, 4).unwrap());
    }

    #[test]
    fn always_event_is_only_unprecedented_at_first_step() {
        let e = Event::always();
        let h = History::from([0, 1]);
        assert!(e.unprecedented_at(&h, 1).unwrap());
        assert!(!e.unprecedented_at(&h, 2).unwrap());
    }

    #[test]
    fn timestep_range_errors() {
        let e = Event::always();
        let h = History::from([0, 1]);
        assert!(e.happens_at(&h, 0).is_err());
        assert!(e.happens_at(&h, 2).is_ok()); // needs prefix of 2 symbols
        assert!(e.happens_at(&h, 3).is_err()); // would need 4 symbols
    }

    #[test]
    fn unprecedented_then_happened_stays_happened() {
        let e = Event::last_obs_equals(1);
        let h = History::from([0, 0, 0, 1, 0, 0]);
        // o_1 = 0, o_2 = 1, o_3 = 0
        assert!(!e.happens_at(&h, 1).unwrap());
        assert!(!e.happens_at(&h, 2).unwrap()); // prefix [0,0]
        assert!(e.happens_at(&h, 3).unwrap()); // prefix [0,0,0,1]
        assert!(e.unprecedented_at(&h, 3).unwrap());
        assert!(!e.unprecedented_at(&h, 4).unwrap());
        assert!(e.has_happened_by(&h, 4).unwrap());
    }

    #[test]
    fn trigger_state_includes_current_even_prefix() {
        let e = Event::last_obs_equals(1);
        assert!(e.has_happened_in(&History::from([0, 1])));
        assert!(!e.has_happened_in(&History::from([0, 0])));
        // odd-length history: trigger state is that of the last even prefix
        assert!(e.has_happened_in(&History::from([0, 1, 0])));
        assert!(!e.has_happened_in(&History::from([0, 0, 1])));
    }
}
