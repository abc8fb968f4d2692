//! Prefix encoding of example sets, the size δ, the order ⋖ and canonical
//! enumeration of example sets.
//!
//! Layout: `enc(|S|)` followed, for each example in increasing input index,
//! by `enc(N(input))` and `enc(outcode)`, where `enc(n)` is the Elias gamma
//! code of `n + 1` and `outcode` is 0 for ⊥ and `N(output) + 1` otherwise.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::BitString;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("two examples share input {0} with different outputs")]
    Conflict(BitString),
    #[error("string of {0} bits is too long to index")]
    TooLong(usize),
    #[error("truncated encoding")]
    Truncated,
    #[error("trailing bits after the encoded set")]
    Trailing,
    #[error("inputs out of order in encoding")]
    Unordered,
    #[error("malformed witness text: {0}")]
    Syntax(String),
}

/// Longest string the index bijection supports (N fits in a u64).
pub const MAX_STRING_BITS: usize = 62;

/// N(s): value of "1"+s minus one. Length-lexicographic and bijective.
pub fn string_index(s: &BitString) -> Result<u64, CodecError> {
    if s.len() > MAX_STRING_BITS {
        return Err(CodecError::TooLong(s.len()));
    }
    let v = s.bits().iter().fold(1u64, |acc, &b| (acc << 1) | b as u64);
    Ok(v - 1)
}

pub fn string_from_index(n: u64) -> BitString {
    let v = n + 1;
    let width = 63 - v.leading_zeros();
    let mut out = BitString::new();
    out.push_uint(v, width);
    out
}

fn bit_width(v: u64) -> u32 {
    64 - v.leading_zeros()
}

/// Elias gamma code of `n ≥ 1`.
pub fn gamma(n: u64, out: &mut BitString) {
    assert!(n >= 1, "gamma code is defined for positive integers");
    let w = bit_width(n);
    for _ in 1..w {
        out.push(false);
    }
    out.push_uint(n, w);
}

/// Length of `enc(n) = gamma(n + 1)`.
pub fn enc_len(n: u64) -> usize {
    2 * (bit_width(n + 1) as usize) - 1
}

fn enc(n: u64, out: &mut BitString) {
    gamma(n + 1, out);
}

struct Reader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl Reader<'_> {
    fn dec(&mut self) -> Result<u64, CodecError> {
        let mut zeros = 0;
        while !*self.bits.get(self.pos).ok_or(CodecError::Truncated)? {
            zeros += 1;
            self.pos += 1;
        }
        if zeros > 63 {
            return Err(CodecError::Truncated);
        }
        let end = self.pos + zeros + 1;
        let slice = self.bits.get(self.pos..end).ok_or(CodecError::Truncated)?;
        self.pos = end;
        let v = slice.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Ok(v - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Example {
    pub input: BitString,
    /// `None` is ⊥.
    pub output: Option<BitString>,
}

impl Example {
    pub fn new(input: BitString, output: Option<BitString>) -> Example {
        Example { input, output }
    }
}

/// A canonical example set; carries its encoding so δ and ⋖ are cheap.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExampleSet {
    examples: Vec<Example>,
    code: BitString,
}

fn outcode(output: &Option<BitString>) -> Result<u64, CodecError> {
    Ok(match output {
        None => 0,
        Some(o) => string_index(o)? + 1,
    })
}

impl ExampleSet {
    pub fn empty() -> ExampleSet {
        ExampleSet::new(Vec::new()).expect("empty set is canonical")
    }

    /// Canonicalises: sorts by input index, merges identical duplicates and
    /// rejects conflicting ones.
    pub fn new(mut examples: Vec<Example>) -> Result<ExampleSet, CodecError> {
        let mut keyed = Vec::with_capacity(examples.len());
        for e in examples.drain(..) {
            keyed.push((string_index(&e.input)?, e));
        }
        keyed.sort_by_key(|k| k.0);
        let mut out: Vec<Example> = Vec::with_capacity(keyed.len());
        for (_, e) in keyed {
            if let Some(last) = out.last() {
                if last.input == e.input {
                    if last.output != e.output {
                        return Err(CodecError::Conflict(e.input));
                    }
                    continue;
                }
            }
            out.push(e);
        }
        let code = encode_examples(&out)?;
        Ok(ExampleSet {
            examples: out,
            code,
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// δ(S).
    pub fn delta(&self) -> usize {
        self.code.len()
    }

    pub fn encoding(&self) -> &BitString {
        &self.code
    }

    pub fn output_for(&self, input: &BitString) -> Option<&Option<BitString>> {
        self.examples
            .iter()
            .find(|e| &e.input == input)
            .map(|e| &e.output)
    }

    pub fn contains_input(&self, input: &BitString) -> bool {
        self.output_for(input).is_some()
    }

    /// S ∪ {e}; fails if e conflicts with an existing example.
    pub fn with(&self, e: Example) -> Result<ExampleSet, CodecError> {
        let mut v = self.examples.clone();
        v.push(e);
        ExampleSet::new(v)
    }

    pub fn decode(code: &BitString) -> Result<ExampleSet, CodecError> {
        let mut r = Reader {
            bits: code.bits(),
            pos: 0,
        };
        let n = r.dec()?;
        let mut examples = Vec::new();
        let mut prev: Option<u64> = None;
        for _ in 0..n {
            let i = r.dec()?;
            if prev.is_some_and(|p| p >= i) {
                return Err(CodecError::Unordered);
            }
            prev = Some(i);
            let oc = r.dec()?;
            let output = if oc == 0 {
                None
            } else {
                Some(string_from_index(oc - 1))
            };
            examples.push(Example::new(string_from_index(i), output));
        }
        if r.pos != code.len() {
            return Err(CodecError::Trailing);
        }
        ExampleSet::new(examples)
    }

    /// Longest input length (0 for the empty set).
    pub fn max_input_len(&self) -> usize {
        self.examples.iter().map(|e| e.input.len()).max().unwrap_or(0)
    }

    /// Longest halting output length (0 if none).
    pub fn max_output_len(&self) -> usize {
        self.examples
            .iter()
            .filter_map(|e| e.output.as_ref().map(|o| o.len()))
            .max()
            .unwrap_or(0)
    }
}

fn encode_examples(examples: &[Example]) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    enc(examples.len() as u64, &mut out);
    for e in examples {
        enc(string_index(&e.input)?, &mut out);
        enc(outcode(&e.output)?, &mut out);
    }
    Ok(out)
}

pub fn encode_example_set(s: &ExampleSet) -> BitString {
    s.code.clone()
}

impl Ord for ExampleSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.code
            .len()
            .cmp(&other.code.len())
            .then_with(|| self.code.bits().cmp(other.code.bits()))
    }
}

impl PartialOrd for ExampleSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The order ⋖: smaller δ first, ties by the encoded bits.
pub fn witness_precedes(s: &ExampleSet, t: &ExampleSet) -> bool {
    s < t
}

impl fmt::Display for ExampleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, e) in self.examples.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            match &e.output {
                Some(o) => write!(f, "{} -> {}", e.input, o)?,
                None => write!(f, "{} -> _|_", e.input)?,
            }
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for ExampleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExampleSet {
    type Err = CodecError;

    /// Parses `{i->o, i->_|_}`; whitespace is insignificant and an empty
    /// side denotes the empty string.
    fn from_str(text: &str) -> Result<ExampleSet, CodecError> {
        let syntax = |m: &str| CodecError::Syntax(m.to_string());
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let body = compact
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| syntax("expected braces"))?;
        let mut examples = Vec::new();
        if !body.is_empty() {
            for item in body.split(',') {
                let (i, o) = item
                    .split_once("->")
                    .ok_or_else(|| syntax("expected `->` in every example"))?;
                let parse_bits =
                    |s: &str| s.parse::<BitString>().map_err(|e| syntax(&e.to_string()));
                let output = if o == "_|_" { None } else { Some(parse_bits(o)?) };
                examples.push(Example::new(parse_bits(i)?, output));
            }
        }
        ExampleSet::new(examples)
    }
}

/// Length caps applied when enumerating example sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetCaps {
    pub max_bits: usize,
    pub input_len_cap: usize,
    pub output_len_cap: usize,
}

impl SetCaps {
    pub fn new(max_bits: usize, input_len_cap: usize) -> SetCaps {
        SetCaps {
            max_bits,
            input_len_cap,
            output_len_cap: usize::MAX,
        }
    }
}

/// All canonical example sets with δ ≤ `caps.max_bits`, in ⋖ order.
pub fn enumerate_example_sets(caps: SetCaps) -> Vec<ExampleSet> {
    let max_input = (1u64 << (caps.input_len_cap.min(MAX_STRING_BITS) + 1)) - 2;
    let mut out = Vec::new();
    let mut m = 0u64;
    while enc_len(m) + 2 * m as usize <= caps.max_bits {
        let mut current = Vec::new();
        extend_sets(
            &caps,
            max_input,
            0,
            m,
            caps.max_bits - enc_len(m),
            &mut current,
            &mut out,
        );
        m += 1;
    }
    out.sort();
    out
}

fn extend_sets(
    caps: &SetCaps,
    max_input: u64,
    min_input: u64,
    remaining: u64,
    budget: usize,
    current: &mut Vec<Example>,
    out: &mut Vec<ExampleSet>,
) {
    if remaining == 0 {
        out.push(ExampleSet::new(current.clone()).expect("generated sets are canonical"));
        return;
    }
    // Each later example costs at least two bits.
    let reserve = 2 * (remaining as usize - 1);
    let mut i = min_input;
    while i <= max_input && enc_len(i) + 1 + reserve <= budget {
        let after_input = budget - enc_len(i);
        let mut oc = 0u64;
        while enc_len(oc) + reserve <= after_input {
            let output = if oc == 0 {
                None
            } else {
                Some(string_from_index(oc - 1))
            };
            let fits = output.as_ref().is_none_or(|o| o.len() <= caps.output_len_cap);
            if fits {
                current.push(Example::new(string_from_index(i), output));
                extend_sets(
                    caps,
                    max_input,
                    i + 1,
                    remaining - 1,
                    after_input - enc_len(oc),
                    current,
                    out,
                );
                current.pop();
            }
            oc += 1;
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    fn set(text: &str) -> ExampleSet {
        text.parse().unwrap()
    }

    #[test]
    fn string_index_examples() {
        assert_eq!(string_index(&bits("")).unwrap(), 0);
        assert_eq!(string_index(&bits("1")).unwrap(), 2);
        assert_eq!(string_index(&bits("010")).unwrap(), 9);
        for n in 0..200 {
            assert_eq!(string_index(&string_from_index(n)).unwrap(), n);
        }
    }

    #[test]
    fn encoding_examples() {
        let s = set("{0->1}");
        assert_eq!(s.encoding().to_string(), "01001000100");
        assert_eq!(s.delta(), 11);
        let bottom = set("{->_|_}");
        assert_eq!(bottom.encoding().to_string(), "01011");
        assert_eq!(ExampleSet::empty().encoding().to_string(), "1");
        assert_eq!(set("{ -> 1}").delta(), 9);
        assert_eq!(set("{->}").delta(), 7);
    }

    #[test]
    fn order_examples() {
        assert!(witness_precedes(&set("{->_|_}"), &set("{0->1}")));
        let s = set("{0->1}");
        assert!(!witness_precedes(&s, &s));
        assert!(witness_precedes(&ExampleSet::empty(), &s));
    }

    #[test]
    fn text_round_trip_and_conflicts() {
        let s = set("{1 -> 0, -> _|_, 01->}");
        assert_eq!(s.to_string(), "{ -> _|_, 1 -> 0, 01 -> }");
        assert_eq!(s.to_string().parse::<ExampleSet>().unwrap(), s);
        assert!(matches!("{1->0, 1->1}".parse::<ExampleSet>(), Err(CodecError::Conflict(_))));
        assert_eq!(set("{1->0, 1->0}").len(), 1);
        assert!("1->0".parse::<ExampleSet>().is_err());
        assert!("{10}".parse::<ExampleSet>().is_err());
    }

    #[test]
    fn decode_rejects_garbage() {
        assert_eq!(ExampleSet::decode(&bits("")), Err(CodecError::Truncated));
        assert_eq!(ExampleSet::decode(&bits("10")), Err(CodecError::Trailing));
        // Two examples with the same input index.
        let mut b = BitString::new();
        for n in [2u64, 0, 0, 0, 0] {
            enc(n, &mut b);
        }
        assert_eq!(ExampleSet::decode(&b), Err(CodecError::Unordered));
    }

    #[test]
    fn small_enumerations() {
        let one = enumerate_example_sets(SetCaps::new(1, 4));
        assert_eq!(one, vec![ExampleSet::empty()]);
        let five = enumerate_example_sets(SetCaps::new(5, 4));
        assert!(five.contains(&set("{->_|_}")));
        assert!(five.windows(2).all(|w| witness_precedes(&w[0], &w[1])));
    }
}
