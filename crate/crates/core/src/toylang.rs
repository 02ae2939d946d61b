//! A complete prefix-free binary language with measurable codeword lengths.
//!
//! Programs decode to integers, event predicates, predictors, utility ids,
//! and switch wrappers. The language is finite and fixed, so the length of
//! the canonical encoding is a computable stand-in for Kolmogorov
//! complexity — always an *upper bound* on the real thing, which is the
//! direction every inequality in this crate needs.
//!
//! Structure: a 3-bit top tag selects the object family, followed by
//! self-delimiting payload fields. Every field grammar is *complete*
//! (every bit pattern parses), so every infinite bit string has exactly
//! one program as a prefix and the Kraft sum `Σ_s 2^{-ℓ(s)}` over the
//! whole language is exactly 1.
//!
//! ```text
//! tag 000  integer      form bit; literal = 5-bit bitlength then value
//!                       bits; power form = literal exponent k, value 2^k
//! tag 001  event        2-bit family: length-at-least(n) | last-obs==c |
//!                       any-obs==c | const (1 bit: always/never)
//! tag 010  predictor    2-bit subform: constant(sym) | iid(row) |
//!                       parity(row,row) | table(depth<=4, |X|^d rows)
//! tag 011  fsm          state count (clamped to 1..=8), 3-bit start,
//!                       per state: row + |X| 3-bit transitions
//! tag 100  switch       event program ++ post-policy program ++ base
//!                       program (inner switch tags read as uniform)
//! tag 101  utility id   integer payload
//! tag 110  catch-all    empty payload, decodes to the uniform predictor
//! tag 111  catch-all    ditto
//! ```
//!
//! Rows are `|X|+1` bytes of integer weights (symbols then halt);
//! probabilities are weights over their total, so decoding never fails.
//! Typed positions coerce: a non-event in a switch trigger slot reads as
//! the never-event, a non-predictor in a policy slot as the uniform
//! predictor. Canonical encodings never exercise the coercions; they
//! exist so the grammar stays complete.

use crate::alphabet::{Alphabet, Symbol};
use crate::event::{Event, EventKind};
use crate::semidist::{FsmState, Predictor, WeightRow};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Largest context-table depth the language encodes.
pub const MAX_TABLE_DEPTH: usize = 4;
/// Largest finite-state predictor the language encodes.
pub const MAX_FSM_STATES: usize = 8;
/// Integers must fit in 31 bits (plus the power-of-two escape).
pub const MAX_LITERAL_BITS: u32 = 31;

const TAG_BITS: u64 = 3;
const TAG_INTEGER: u64 = 0;
const TAG_EVENT: u64 = 1;
const TAG_PREDICTOR: u64 = 2;
const TAG_FSM: u64 = 3;
const TAG_SWITCH: u64 = 4;
const TAG_UTILITY: u64 = 5;
const TAG_CATCHALL_A: u64 = 6;
const TAG_CATCHALL_B: u64 = 7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("object has no toy-language encoding: {0}")]
    Unencodable(String),
    #[error("integer {0} exceeds the literal range (needs < 2^31 or an exact power of two)")]
    IntegerTooLarge(u64),
    #[error("context table depth {0} exceeds {MAX_TABLE_DEPTH}")]
    DepthTooLarge(usize),
    #[error("finite-state predictor has {0} states, limit {MAX_FSM_STATES}")]
    TooManyStates(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("ran out of bits at offset {0}")]
    OutOfBits(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RangeError {
    #[error("empty range: need 1 <= t <= t_max, got t={t}, t_max={t_max}")]
    Empty { t: u64, t_max: u64 },
}

/// A finite binary string; membership in the language is decided by
/// [`decode`] consuming exactly the whole string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ProgramString {
    bits: Vec<bool>,
}

impl ProgramString {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        ProgramString { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_prefix_of(&self, other: &ProgramString) -> bool {
        self.len() <= other.len() && other.bits[..self.len()] == self.bits[..]
    }
}

impl fmt::Display for ProgramString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// What a program decodes to.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodedObject {
    Integer(u64),
    Event(Event),
    Predictor(Predictor),
    UtilityId(u64),
    Switch(SwitchProgram),
}

/// A decoded switch wrapper: run `base` until `trigger` has happened,
/// then answer action queries with `post`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchProgram {
    pub trigger: Event,
    pub post: Predictor,
    pub base: Predictor,
}

// ---------------------------------------------------------------------------
// Bit-level reader / writer
// ---------------------------------------------------------------------------

struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bits: &'a [bool]) -> Self {
        BitReader { bits, pos: 0 }
    }

    fn read_bit(&mut self) -> Result<bool, DecodeError> {
        let b = *self
            .bits
            .get(self.pos)
            .ok_or(DecodeError::OutOfBits(self.pos))?;
        self.pos += 1;
        Ok(b)
    }

    /// Read `n <= 63` bits MSB-first.
    fn read_bits(&mut self, n: usize) -> Result<u64, DecodeError> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }
}

#[derive(Default)]
struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    fn push_bits(&mut self, value: u64, n: usize) {
        for i in (0..n).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }

    fn finish(self) -> ProgramString {
        ProgramString { bits: self.bits }
    }
}

// ---------------------------------------------------------------------------
// Integer code
// ---------------------------------------------------------------------------

fn bitlen(n: u64) -> u32 {
    64 - n.leading_zeros()
}

fn write_int_literal_body(w: &mut BitWriter, n: u64) -> Result<(), EncodeError> {
    let l = bitlen(n);
    if l > MAX_LITERAL_BITS {
        return Err(EncodeError::IntegerTooLarge(n));
    }
    w.push_bits(l as u64, 5);
    if l >= 1 {
        // leading 1 is implied
        w.push_bits(n - (1 << (l - 1)), (l - 1) as usize);
    }
    Ok(())
}

fn read_int_literal_body(r: &mut BitReader) -> Result<u64, DecodeError> {
    let l = r.read_bits(5)?;
    if l == 0 {
        return Ok(0);
    }
    let rest = r.read_bits((l - 1) as usize)?;
    Ok((1u64 << (l - 1)) + rest)
}

fn write_int(w: &mut BitWriter, n: u64) -> Result<(), EncodeError> {
    // canonical form: whichever of literal / power-of-two is shorter
    let literal_ok = bitlen(n) <= MAX_LITERAL_BITS;
    let power = if n.is_power_of_two() {
        Some(n.trailing_zeros() as u64)
    } else {
        None
    };
    let lit_len = if literal_ok {
        Some(int_literal_body_bits(n))
    } else {
        None
    };
    let pow_len = power.map(int_literal_body_bits);
    match (lit_len, pow_len) {
        (Some(a), Some(b)) if b < a => {
            w.push_bits(1, 1);
            write_int_literal_body(w, power.unwrap())
        }
        (Some(_), _) => {
            w.push_bits(0, 1);
            write_int_literal_body(w, n)
        }
        (None, Some(_)) => {
            w.push_bits(1, 1);
            write_int_literal_body(w, power.unwrap())
        }
        (None, None) => Err(EncodeError::IntegerTooLarge(n)),
    }
}

fn read_int(r: &mut BitReader) -> Result<u64, DecodeError> {
    if r.read_bit()? {
        let k = read_int_literal_body(r)?;
        // exponents beyond the u64 range saturate; canonical encodings
        // never produce them
        Ok(1u64 << k.min(63))
    } else {
        read_int_literal_body(r)
    }
}

fn int_literal_body_bits(n: u64) -> u64 {
    5 + (bitlen(n) as u64).saturating_sub(1)
}

/// Bits of the canonical integer codeword (form bit included).
pub fn int_code_length(n: u64) -> u64 {
    let mut best = u64::MAX;
    if bitlen(n) <= MAX_LITERAL_BITS {
        best = 1 + int_literal_body_bits(n);
    }
    if n.is_power_of_two() {
        best = best.min(1 + int_literal_body_bits(n.trailing_zeros() as u64));
    }
    assert!(best != u64::MAX, "integer {n} not encodable");
    best
}

// ---------------------------------------------------------------------------
// Payload codecs
// ---------------------------------------------------------------------------

fn write_symbol(w: &mut BitWriter, s: Symbol, alphabet: &Alphabet) {
    w.push_bits(s as u64, alphabet.symbol_bits());
}

fn read_symbol(r: &mut BitReader, alphabet: &Alphabet) -> Result<Symbol, DecodeError> {
    let v = r.read_bits(alphabet.symbol_bits())?;
    Ok((v % alphabet.size() as u64) as Symbol)
}

fn write_row(w: &mut BitWriter, row: &WeightRow) {
    for &wt in &row.weights {
        w.push_bits(wt as u64, 8);
    }
    w.push_bits(row.halt as u64, 8);
}

fn read_row(r: &mut BitReader, alphabet: &Alphabet) -> Result<WeightRow, DecodeError> {
    let mut weights = Vec::with_capacity(alphabet.size());
    for _ in 0..alphabet.size() {
        weights.push(r.read_bits(8)? as u8);
    }
    let halt = r.read_bits(8)? as u8;
    Ok(WeightRow { weights, halt })
}

fn write_event_payload(w: &mut BitWriter, e: &Event, alphabet: &Alphabet) -> Result<(), EncodeError> {
    match e.kind() {
        EventKind::LengthAtLeast(n) => {
            w.push_bits(0, 2);
            write_int(w, *n)
        }
        EventKind::LastObsEquals(s) => {
            w.push_bits(1, 2);
            write_symbol(w, *s, alphabet);
            Ok(())
        }
        EventKind::AnyObsEquals(s) => {
            w.push_bits(2, 2);
            write_symbol(w, *s, alphabet);
            Ok(())
        }
        EventKind::Always => {
            w.push_bits(3, 2);
            w.push_bits(0, 1);
            Ok(())
        }
        EventKind::Never => {
            w.push_bits(3, 2);
            w.push_bits(1, 1);
            Ok(())
        }
    }
}

fn read_event_payload(r: &mut BitReader, alphabet: &Alphabet) -> Result<Event, DecodeError> {
    Ok(match r.read_bits(2)? {
        0 => Event::length_at_least(read_int(r)?),
        1 => Event::last_obs_equals(read_symbol(r, alphabet)?),
        2 => Event::any_obs_equals(read_symbol(r, alphabet)?),
        _ => {
            if r.read_bit()? {
                Event::never()
            } else {
                Event::always()
            }
        }
    })
}

fn write_predictor_payload(
    w: &mut BitWriter,
    p: &Predictor,
    alphabet: &Alphabet,
) -> Result<(), EncodeError> {
    match p {
        Predictor::Constant { symbol, .. } => {
            w.push_bits(0, 2);
            write_symbol(w, *symbol, alphabet);
            Ok(())
        }
        Predictor::Iid { row, .. } => {
            w.push_bits(1, 2);
            write_row(w, row);
            Ok(())
        }
        Predictor::ParityIid {
            action, observation, ..
        } => {
            w.push_bits(2, 2);
            write_row(w, action);
            write_row(w, observation);
            Ok(())
        }
        Predictor::ContextTable { depth, rows, .. } => {
            if *depth > MAX_TABLE_DEPTH {
                return Err(EncodeError::DepthTooLarge(*depth));
            }
            w.push_bits(3, 2);
            write_int(w, *depth as u64)?;
            for row in rows {
                write_row(w, row);
            }
            Ok(())
        }
        other => Err(EncodeError::Unencodable(format!("{other:?}"))),
    }
}

fn read_predictor_payload(r: &mut BitReader, alphabet: &Alphabet) -> Result<Predictor, DecodeError> {
    Ok(match r.read_bits(2)? {
        0 => Predictor::Constant {
            alphabet: *alphabet,
            symbol: read_symbol(r, alphabet)?,
        },
        1 => Predictor::Iid {
            alphabet: *alphabet,
            row: read_row(r, alphabet)?,
        },
        2 => Predictor::ParityIid {
            alphabet: *alphabet,
            action: read_row(r, alphabet)?,
            observation: read_row(r, alphabet)?,
        },
        _ => {
            let depth = (read_int(r)? as usize).min(MAX_TABLE_DEPTH);
            let count = alphabet.size().pow(depth as u32);
            let mut rows = Vec::with_capacity(count);
            for _ in 0..count {
                rows.push(read_row(r, alphabet)?);
            }
            Predictor::ContextTable {
                alphabet: *alphabet,
                depth,
                rows,
            }
        }
    })
}

fn write_fsm_payload(
    w: &mut BitWriter,
    start: u8,
    states: &[FsmState],
) -> Result<(), EncodeError> {
    if states.len() > MAX_FSM_STATES {
        return Err(EncodeError::TooManyStates(states.len()));
    }
    write_int(w, states.len() as u64)?;
    w.push_bits(start as u64, 3);
    for st in states {
        write_row(w, &st.emission);
        for &n in &st.next {
            w.push_bits(n as u64, 3);
        }
    }
    Ok(())
}

fn read_fsm_payload(r: &mut BitReader, alphabet: &Alphabet) -> Result<Predictor, DecodeError> {
    let raw = read_int(r)?;
    let n = (raw.max(1) as usize).min(MAX_FSM_STATES);
    let start = (r.read_bits(3)? % n as u64) as u8;
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        let emission = read_row(r, alphabet)?;
        let mut next = Vec::with_capacity(alphabet.size());
        for _ in 0..alphabet.size() {
            next.push((r.read_bits(3)? % n as u64) as u8);
        }
        states.push(FsmState { emission, next });
    }
    Ok(Predictor::Fsm {
        alphabet: *alphabet,
        start,
        states,
    })
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

/// Encode an object in its canonical (shortest known) form.
pub fn encode(obj: &DecodedObject, alphabet: &Alphabet) -> Result<ProgramString, EncodeError> {
    let mut w = BitWriter::default();
    write_program(&mut w, obj, alphabet)?;
    Ok(w.finish())
}

fn write_program(
    w: &mut BitWriter,
    obj: &DecodedObject,
    alphabet: &Alphabet,
) -> Result<(), EncodeError> {
    match obj {
        DecodedObject::Integer(n) => {
            w.push_bits(TAG_INTEGER, TAG_BITS as usize);
            write_int(w, *n)
        }
        DecodedObject::Event(e) => {
            w.push_bits(TAG_EVENT, TAG_BITS as usize);
            write_event_payload(w, e, alphabet)
        }
        DecodedObject::Predictor(Predictor::Uniform { .. }) => {
            // the catch-all tag is the canonical uniform predictor
            w.push_bits(TAG_CATCHALL_A, TAG_BITS as usize);
            Ok(())
        }
        DecodedObject::Predictor(Predictor::Fsm { start, states, .. }) => {
            w.push_bits(TAG_FSM, TAG_BITS as usize);
            write_fsm_payload(w, *start, states)
        }
        DecodedObject::Predictor(p) => {
            w.push_bits(TAG_PREDICTOR, TAG_BITS as usize);
            write_predictor_payload(w, p, alphabet)
        }
        DecodedObject::UtilityId(n) => {
            w.push_bits(TAG_UTILITY, TAG_BITS as usize);
            write_int(w, *n)
        }
        DecodedObject::Switch(sw) => {
            w.push_bits(TAG_SWITCH, TAG_BITS as usize);
            write_program(w, &DecodedObject::Event(sw.trigger.clone()), alphabet)?;
            write_program(w, &DecodedObject::Predictor(sw.post.clone()), alphabet)?;
            write_program(w, &DecodedObject::Predictor(sw.base.clone()), alphabet)
        }
    }
}

/// Decode one program from the start of `bits`; returns the object and
/// the number of bits consumed. `bits` is a member of the language iff
/// decoding consumes it exactly.
pub fn decode(bits: &ProgramString, alphabet: &Alphabet) -> Result<(DecodedObject, usize), DecodeError> {
    let mut r = BitReader::new(bits.bits());
    let obj = read_program(&mut r, alphabet, 0)?;
    Ok((obj, r.pos))
}

fn read_program(
    r: &mut BitReader,
    alphabet: &Alphabet,
    nesting: usize,
) -> Result<DecodedObject, DecodeError> {
    let tag = r.read_bits(TAG_BITS as usize)?;
    Ok(match tag {
        TAG_INTEGER => DecodedObject::Integer(read_int(r)?),
        TAG_EVENT => DecodedObject::Event(read_event_payload(r, alphabet)?),
        TAG_PREDICTOR => DecodedObject::Predictor(read_predictor_payload(r, alphabet)?),
        TAG_FSM => DecodedObject::Predictor(read_fsm_payload(r, alphabet)?),
        TAG_SWITCH => {
            if nesting > 0 {
                // switch wrappers do not nest; the inner tag reads as the
                // uniform predictor to keep the grammar finite
                return Ok(DecodedObject::Predictor(Predictor::Uniform {
                    alphabet: *alphabet,
                }));
            }
            let trigger = match read_program(r, alphabet, nesting + 1)? {
                DecodedObject::Event(e) => e,
                _ => Event::never(),
            };
            let post = coerce_predictor(read_program(r, alphabet, nesting + 1)?, alphabet);
            let base = coerce_predictor(read_program(r, alphabet, nesting + 1)?, alphabet);
            DecodedObject::Switch(SwitchProgram {
                trigger,
                post,
                base,
            })
        }
        TAG_UTILITY => DecodedObject::UtilityId(read_int(r)?),
        TAG_CATCHALL_A | TAG_CATCHALL_B => DecodedObject::Predictor(Predictor::Uniform {
            alphabet: *alphabet,
        }),
        _ => unreachable!("3-bit tag"),
    })
}

fn coerce_predictor(obj: DecodedObject, alphabet: &Alphabet) -> Predictor {
    match obj {
        DecodedObject::Predictor(p) => p,
        _ => Predictor::Uniform {
            alphabet: *alphabet,
        },
    }
}

/// `ℓ` of the canonical encoding — the K(·) surrogate used everywhere.
pub fn codeword_length(obj: &DecodedObject, alphabet: &Alphabet) -> Result<u64, EncodeError> {
    Ok(encode(obj, alphabet)?.len() as u64)
}

/// Canonical event codeword length in bits.
///
/// Panics for `LengthAtLeast` thresholds at or beyond 2^31 that are not
/// powers of two; desk-scale events sit far below that.
pub fn event_code_length(e: &Event, alphabet: &Alphabet) -> u64 {
    codeword_length(&DecodedObject::Event(e.clone()), alphabet)
        .expect("event thresholds are desk-scale")
}

// ---------------------------------------------------------------------------
// Kraft accounting
// ---------------------------------------------------------------------------

/// Total weight `Σ 2^{-ℓ(s)}` of a field grammar, split by exact bit
/// length. All masses here are dyadic rationals, so f64 arithmetic on
/// them is exact.
#[derive(Debug, Clone, Default)]
struct LengthMass {
    by_len: BTreeMap<u64, f64>,
}

impl LengthMass {
    fn unit() -> Self {
        let mut by_len = BTreeMap::new();
        by_len.insert(0, 1.0);
        LengthMass { by_len }
    }

    /// A field of `n` free bits: every pattern valid.
    fn free_bits(n: u64) -> Self {
        let mut by_len = BTreeMap::new();
        by_len.insert(n, 1.0);
        LengthMass { by_len }
    }

    /// One fixed `bits`-bit pattern in front of `self`.
    fn tagged(&self, bits: u64) -> Self {
        let scale = 0.5f64.powi(bits as i32);
        LengthMass {
            by_len: self
                .by_len
                .iter()
                .map(|(&l, &m)| (l + bits, m * scale))
                .collect(),
        }
    }

    fn concat(&self, other: &LengthMass) -> Self {
        let mut by_len = BTreeMap::new();
        for (&l1, &m1) in &self.by_len {
            for (&l2, &m2) in &other.by_len {
                *by_len.entry(l1 + l2).or_insert(0.0) += m1 * m2;
            }
        }
        LengthMass { by_len }
    }

    fn add(&self, other: &LengthMass) -> Self {
        let mut by_len = self.by_len.clone();
        for (&l, &m) in &other.by_len {
            *by_len.entry(l).or_insert(0.0) += m;
        }
        LengthMass { by_len }
    }

    fn subtract(&self, other: &LengthMass) -> Self {
        let mut by_len = self.by_len.clone();
        for (&l, &m) in &other.by_len {
            let e = by_len.entry(l).or_insert(0.0);
            *e -= m;
            if *e == 0.0 {
                by_len.remove(&l);
            }
        }
        LengthMass { by_len }
    }

    fn repeat(&self, times: usize) -> Self {
        let mut acc = LengthMass::unit();
        for _ in 0..times {
            acc = acc.concat(self);
        }
        acc
    }

    fn total(&self) -> f64 {
        // ascending-mass order keeps the dyadic sum exact to the last ulp
        self.by_len.values().rev().sum()
    }

    fn total_up_to(&self, depth: u64) -> f64 {
        self.by_len
            .iter()
            .take_while(|(&l, _)| l <= depth)
            .map(|(_, &m)| m)
            .sum()
    }

    fn max_len(&self) -> u64 {
        self.by_len.keys().next_back().copied().unwrap_or(0)
    }
}

fn int_literal_body_mass() -> LengthMass {
    let mut m = LengthMass::default();
    for l in 0u64..=MAX_LITERAL_BITS as u64 {
        let body = LengthMass::free_bits(l.saturating_sub(1)).tagged(5);
        m = m.add(&body);
    }
    m
}

fn int_code_mass() -> LengthMass {
    let body = int_literal_body_mass();
    body.tagged(1).add(&body.tagged(1))
}

/// Mass-by-length of the integer codewords that decode to exactly `v`.
fn int_value_mass(v: u64) -> LengthMass {
    let mut m = LengthMass::default();
    // literal form: exactly one codeword
    if bitlen(v) <= MAX_LITERAL_BITS {
        m = m.add(&LengthMass::unit().tagged(1 + int_literal_body_bits(v)));
    }
    // power form: one codeword per exponent giving v
    if v.is_power_of_two() {
        let k = v.trailing_zeros() as u64;
        m = m.add(&LengthMass::unit().tagged(1 + int_literal_body_bits(k)));
    }
    m
}

/// Integer codewords decoding to values >= `v0`.
fn int_value_mass_at_least(v0: u64) -> LengthMass {
    let mut rest = int_code_mass();
    for v in 0..v0 {
        rest = rest.subtract(&int_value_mass(v));
    }
    rest
}

fn row_mass(k: usize) -> LengthMass {
    LengthMass::free_bits(8 * (k as u64 + 1))
}

fn event_payload_mass(alphabet: &Alphabet) -> LengthMass {
    let sym = LengthMass::free_bits(alphabet.symbol_bits() as u64);
    int_code_mass()
        .tagged(2)
        .add(&sym.tagged(2))
        .add(&sym.tagged(2))
        .add(&LengthMass::free_bits(1).tagged(2))
}

fn predictor_payload_mass(alphabet: &Alphabet) -> LengthMass {
    let k = alphabet.size();
    let sym = LengthMass::free_bits(alphabet.symbol_bits() as u64);
    let row = row_mass(k);
    let mut table = LengthMass::default();
    for d in 0..MAX_TABLE_DEPTH as u64 {
        table = table.add(&int_value_mass(d).concat(&row.repeat(k.pow(d as u32))));
    }
    table = table.add(
        &int_value_mass_at_least(MAX_TABLE_DEPTH as u64)
            .concat(&row.repeat(k.pow(MAX_TABLE_DEPTH as u32))),
    );
    sym.tagged(2)
        .add(&row.tagged(2))
        .add(&row.concat(&row).tagged(2))
        .add(&table.tagged(2))
}

fn fsm_payload_mass(alphabet: &Alphabet) -> LengthMass {
    let k = alphabet.size() as u64;
    let state = row_mass(alphabet.size()).concat(&LengthMass::free_bits(3 * k));
    let mut m = LengthMass::default();
    // raw values 0 and 1 both clamp to one state
    let n1 = int_value_mass(0).add(&int_value_mass(1));
    m = m.add(&n1.concat(&LengthMass::free_bits(3)).concat(&state));
    for n in 2..MAX_FSM_STATES as u64 {
        m = m.add(
            &int_value_mass(n)
                .concat(&LengthMass::free_bits(3))
                .concat(&state.repeat(n as usize)),
        );
    }
    m = m.add(
        &int_value_mass_at_least(MAX_FSM_STATES as u64)
            .concat(&LengthMass::free_bits(3))
            .concat(&state.repeat(MAX_FSM_STATES)),
    );
    m
}

fn inner_program_mass(alphabet: &Alphabet) -> LengthMass {
    // like the top level, but the switch tag has an empty payload
    int_code_mass()
        .tagged(3)
        .add(&event_payload_mass(alphabet).tagged(3))
        .add(&predictor_payload_mass(alphabet).tagged(3))
        .add(&fsm_payload_mass(alphabet).tagged(3))
        .add(&LengthMass::unit().tagged(3)) // nested switch reads as uniform
        .add(&int_code_mass().tagged(3))
        .add(&LengthMass::unit().tagged(3))
        .add(&LengthMass::unit().tagged(3))
}

fn program_mass(alphabet: &Alphabet) -> LengthMass {
    let inner = inner_program_mass(alphabet);
    let switch = inner.concat(&inner).concat(&inner);
    int_code_mass()
        .tagged(3)
        .add(&event_payload_mass(alphabet).tagged(3))
        .add(&predictor_payload_mass(alphabet).tagged(3))
        .add(&fsm_payload_mass(alphabet).tagged(3))
        .add(&switch.tagged(3))
        .add(&int_code_mass().tagged(3))
        .add(&LengthMass::unit().tagged(3))
        .add(&LengthMass::unit().tagged(3))
}

/// `Σ 2^{-ℓ(s)}` over all programs of length at most `depth` bits.
pub fn kraft_sum(alphabet: &Alphabet, depth: u64) -> f64 {
    program_mass(alphabet).total_up_to(depth)
}

/// The Kraft sum over the whole finite language. Completeness forces
/// this to equal 1 exactly.
pub fn kraft_total(alphabet: &Alphabet) -> f64 {
    program_mass(alphabet).total()
}

/// Length in bits of the longest program in the language.
pub fn max_program_length(alphabet: &Alphabet) -> u64 {
    program_mass(alphabet).max_len()
}

// ---------------------------------------------------------------------------
// Simplest-unprecedented-event scan
// ---------------------------------------------------------------------------

/// Codeword length of the length-threshold event with parameter `t`.
pub fn length_event_bits(t: u64) -> u64 {
    // event tag + family bits + integer payload
    3 + 2 + int_code_length(t)
}

/// `min_{T in [t, t_max]} ℓ(E_T)` — the complexity of the simplest event
/// in the length family that has yet to occur.
pub fn simplest_unprecedented_complexity(t: u64, t_max: u64) -> Result<u64, RangeError> {
    if t == 0 || t > t_max {
        return Err(RangeError::Empty { t, t_max });
    }
    Ok((t..=t_max).map(length_event_bits).min().unwrap())
}

/// Suffix minima of `length_event_bits` over `[1, t_max]`: entry `t - 1`
/// holds `min_{T in [t, t_max]} ℓ(E_T)`. One pass instead of a quadratic
/// sweep when the whole staircase is needed.
pub fn simplest_unprecedented_scan(t_max: u64) -> Vec<u64> {
    let n = t_max as usize;
    let mut out = vec![0u64; n];
    let mut best = u64::MAX;
    for t in (1..=n).rev() {
        best = best.min(length_event_bits(t as u64));
        out[t - 1] = best;
    }
    out
}

/// Enumerate every program of length at most `depth` bits by decoding
/// all bit strings. Exhaustive checks (prefix-freeness, enumerated vs
/// analytic Kraft mass) build on this.
pub fn members_up_to(alphabet: &Alphabet, depth: usize) -> Vec<ProgramString> {
    let mut out = Vec::new();
    for len in 1..=depth {
        for v in 0u64..(1u64 << len) {
            let bits: Vec<bool> = (0..len).rev().map(|i| (v >> i) & 1 == 1).collect();
            let s = ProgramString::from_bits(bits);
            if let Ok((_, used)) = decode(&s, alphabet) {
                if used == s.len() {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Human-readable tag table, emitted by the CLI for reproducibility.
pub fn dump_language(alphabet: &Alphabet) -> String {
    let k = alphabet.size();
    let w = alphabet.symbol_bits();
    let mass = program_mass(alphabet);
    format!(
        "prefix-free toy language, alphabet size {k} (symbol fields {w} bits)\n\
         tag 000  integer     form bit + (literal: 5-bit bitlength, value bits) | (power: exponent as literal, decodes to 2^k)\n\
         tag 001  event       2-bit family: 00 length-at-least(int) | 01 last-obs==sym | 10 any-obs==sym | 11 const(1 bit: 0 always, 1 never)\n\
         tag 010  predictor   2-bit subform: 00 constant(sym) | 01 iid(row) | 10 parity(row,row) | 11 table(int depth<=4, {k}^d rows)\n\
         tag 011  fsm         int state count (clamped 1..=8), 3-bit start, per state: row + {k} x 3-bit transitions\n\
         tag 100  switch      event program ++ post-policy program ++ base program (inner switch tag reads as uniform)\n\
         tag 101  utility id  integer payload\n\
         tag 110  catch-all   empty payload, decodes to the uniform predictor\n\
         tag 111  catch-all   empty payload, decodes to the uniform predictor\n\
         row = {n} bytes of weights (symbols then halt); probabilities are weights over their total\n\
         typed slots coerce: non-event trigger -> never, non-predictor policy -> uniform\n\
         kraft total = {total:.15}\n\
         longest program = {max} bits\n",
        n = k + 1,
        total = mass.total(),
        max = mass.max_len(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::History;
    use crate::semidist::SemiDistribution;

    fn bin() -> Alphabet {
        Alphabet::binary()
    }

    #[test]
    fn integer_zero_has_minimal_codeword() {
        // form bit + empty literal header
        assert_eq!(int_code_length(0), 6);
    }

    #[test]
    fn power_of_two_escape_beats_literal() {
        // 2^10 via the power form vs 1000 as a literal
        assert!(int_code_length(1 << 10) < 1 + int_literal_body_bits(1000));
        assert_eq!(int_code_length(1 << 10), 1 + int_literal_body_bits(10));
        // and 2^k is never longer than its predecessor plus slack
        for k in 1..30u32 {
            let p = 1u64 << k;
            assert!(int_code_length(p) <= int_code_length(p - 1) + 1);
        }
    }

    #[test]
    fn event_length_is_tag_plus_fields() {
        // E_8: 3 tag bits + 2 family bits + integer code for 8 = 2^3
        let e = Event::length_at_least(8);
        assert_eq!(int_code_length(8), 7);
        assert_eq!(event_code_length(&e, &bin()), 3 + 2 + 7);
    }

    #[test]
    fn round_trips() {
        let a = bin();
        let a3 = Alphabet::new(3).unwrap();
        let objs = vec![
            (DecodedObject::Integer(0), a),
            (DecodedObject::Integer(1000), a),
            (DecodedObject::Integer(1 << 20), a),
            (DecodedObject::Event(Event::length_at_least(5)), a),
            (DecodedObject::Event(Event::last_obs_equals(1)), a),
            (DecodedObject::Event(Event::any_obs_equals(2)), a3),
            (DecodedObject::Event(Event::always()), a),
            (DecodedObject::Event(Event::never()), a),
            (
                DecodedObject::Predictor(Predictor::Uniform { alphabet: a }),
                a,
            ),
            (
                DecodedObject::Predictor(Predictor::Constant {
                    alphabet: a3,
                    symbol: 2,
                }),
                a3,
            ),
            (
                DecodedObject::Predictor(
                    Predictor::iid(a, WeightRow::new(vec![13, 200], 43)).unwrap(),
                ),
                a,
            ),
            (
                DecodedObject::Predictor(
                    Predictor::parity_iid(
                        a,
                        WeightRow::proper(vec![1, 3]),
                        WeightRow::proper(vec![200, 55]),
                    )
                    .unwrap(),
                ),
                a,
            ),
            (
                DecodedObject::Predictor(
                    Predictor::context_table(
                        a,
                        2,
                        vec![
                            WeightRow::proper(vec![1, 1]),
                            WeightRow::proper(vec![1, 2]),
                            WeightRow::proper(vec![2, 1]),
                            WeightRow::proper(vec![3, 1]),
                        ],
                    )
                    .unwrap(),
                ),
                a,
            ),
            (
                DecodedObject::Predictor(
                    Predictor::fsm(
                        a,
                        1,
                        vec![
                            FsmState {
                                emission: WeightRow::proper(vec![3, 1]),
                                next: vec![0, 1],
                            },
                            FsmState {
                                emission: WeightRow::proper(vec![1, 3]),
                                next: vec![1, 0],
                            },
                        ],
                    )
                    .unwrap(),
                ),
                a,
            ),
            (DecodedObject::UtilityId(7), a),
            (
                DecodedObject::Switch(SwitchProgram {
                    trigger: Event::last_obs_equals(1),
                    post: Predictor::Constant {
                        alphabet: a,
                        symbol: 1,
                    },
                    base: Predictor::Uniform { alphabet: a },
                }),
                a,
            ),
        ];
        for (obj, alphabet) in objs {
            let prog = encode(&obj, &alphabet).unwrap();
            let (back, used) = decode(&prog, &alphabet).unwrap();
            assert_eq!(used, prog.len(), "partial consume for {obj:?}");
            assert_eq!(back, obj);
        }
    }

    #[test]
    fn float_predictors_are_unencodable() {
        let p = Predictor::bernoulli(0.3).unwrap();
        assert!(matches!(
            encode(&DecodedObject::Predictor(p), &bin()),
            Err(EncodeError::Unencodable(_))
        ));
    }

    #[test]
    fn kraft_total_is_exactly_one() {
        for k in [2usize, 3, 4, 5, 8] {
            let a = Alphabet::new(k).unwrap();
            let total = kraft_total(&a);
            assert!(
                (total - 1.0).abs() <= 1e-12,
                "kraft total for |X|={k} was {total}"
            );
        }
    }

    #[test]
    fn kraft_sum_monotone_and_bounded() {
        let a = bin();
        assert_eq!(kraft_sum(&a, 0), 0.0);
        let mut last = 0.0;
        for depth in [3, 4, 6, 9, 12, 20, 40, 100, 400] {
            let s = kraft_sum(&a, depth);
            assert!(s >= last && s <= 1.0 + 1e-12);
            last = s;
        }
        assert!((kraft_sum(&a, max_program_length(&a)) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn exhaustive_prefix_freeness_to_depth_14() {
        let a = bin();
        let members = members_up_to(&a, 14);
        assert!(!members.is_empty());
        for (i, p) in members.iter().enumerate() {
            for q in members.iter().skip(i + 1) {
                assert!(
                    !p.is_prefix_of(q) && !q.is_prefix_of(p),
                    "prefix collision: {p} / {q}"
                );
            }
        }
    }

    #[test]
    fn completeness_every_string_parses_or_needs_more() {
        // no bit pattern is malformed; decoding either finishes within the
        // window or asks for more bits
        let a = bin();
        for len in [6usize, 9, 11] {
            for v in 0u64..(1u64 << len) {
                let bits: Vec<bool> = (0..len).rev().map(|i| (v >> i) & 1 == 1).collect();
                let s = ProgramString::from_bits(bits);
                match decode(&s, &a) {
                    Ok((_, used)) => assert!(used <= s.len()),
                    Err(DecodeError::OutOfBits(_)) => {}
                }
            }
        }
    }

    #[test]
    fn enumerated_mass_matches_analytic_mass_at_depth_14() {
        let a = bin();
        let members = members_up_to(&a, 14);
        let enumerated: f64 = members.iter().map(|p| 0.5f64.powi(p.len() as i32)).sum();
        let analytic = kraft_sum(&a, 14);
        assert!(
            (enumerated - analytic).abs() <= 1e-12,
            "enumerated {enumerated} vs analytic {analytic}"
        );
    }

    #[test]
    fn simplest_event_scan_dips_at_powers_of_two() {
        let scan = simplest_unprecedented_scan(1 << 12);
        // minimum over a superset can only be smaller
        for t in 1..(1 << 12) - 1 {
            assert!(scan[t - 1] <= scan[t]);
        }
        // just above 2^k the next power of two caps the complexity
        for k in 3..11u32 {
            let t = (1u64 << k) + 1;
            assert!(scan[t as usize - 1] <= length_event_bits(1 << (k + 1)));
        }
        assert_eq!(
            simplest_unprecedented_complexity(5, 1 << 12).unwrap(),
            scan[4]
        );
        assert!(simplest_unprecedented_complexity(5, 4).is_err());
        assert!(simplest_unprecedented_complexity(0, 4).is_err());
    }

    #[test]
    fn decoded_fsm_behaves_like_original() {
        let a = bin();
        let p = Predictor::fsm(
            a,
            0,
            vec![
                FsmState {
                    emission: WeightRow::proper(vec![9, 1]),
                    next: vec![0, 1],
                },
                FsmState {
                    emission: WeightRow::proper(vec![1, 9]),
                    next: vec![0, 1],
                },
            ],
        )
        .unwrap();
        let prog = encode(&DecodedObject::Predictor(p.clone()), &a).unwrap();
        let (back, _) = decode(&prog, &a).unwrap();
        let DecodedObject::Predictor(q) = back else {
            panic!("wrong kind")
        };
        for h in [
            History::empty(),
            History::from([0, 1]),
            History::from([1, 1, 0]),
        ] {
            for s in a.symbols() {
                assert_eq!(p.prob(&h, s), q.prob(&h, s));
            }
        }
    }
}
