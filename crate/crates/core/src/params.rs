//! Time bounds and search caps shared by every operation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::codec::ExampleSet;

/// f(n) = a·n + b, a time bound on the input length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexityFunction {
    pub a: u64,
    pub b: u64,
}

impl ComplexityFunction {
    pub fn eval(&self, n: usize) -> u64 {
        self.a * n as u64 + self.b
    }
}

impl Default for ComplexityFunction {
    fn default() -> Self {
        ComplexityFunction { a: 64, b: 512 }
    }
}

/// ρ and κ of the trie time bound λ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrieBoundParams {
    pub rho: u64,
    pub kappa: u64,
}

impl Default for TrieBoundParams {
    fn default() -> Self {
        TrieBoundParams { rho: 16, kappa: 32 }
    }
}

/// λ(i, S) = ρ·min(ℓ(i), ℓ(i_max)) + ℓ(o_max) + κ.
pub fn lambda_bound(input: &BitString, set: &ExampleSet, trie: &TrieBoundParams) -> u64 {
    let i_len = input.len().min(set.max_input_len()) as u64;
    trie.rho * i_len + set.max_output_len() as u64 + trie.kappa
}

/// Everything that determines a teaching book.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub f: ComplexityFunction,
    pub trie: TrieBoundParams,
    /// Largest witness size δ the teacher and book scan.
    pub max_witness_bits: usize,
    /// Largest program length ℓ the learner scans.
    pub max_prog_bits: usize,
    /// Concepts are compared on every input of at most this many bits.
    pub h_in: usize,
    /// Witness inputs are at most this many bits.
    pub input_len_cap: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            f: ComplexityFunction::default(),
            trie: TrieBoundParams::default(),
            max_witness_bits: 24,
            max_prog_bits: 15,
            h_in: 5,
            input_len_cap: 4,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error("f must not be identically zero")]
    ZeroF,
    #[error("rho and kappa must be positive")]
    TrieBound,
    #[error("input_len_cap ({cap}) must not exceed h_in ({h_in})")]
    InputCap { cap: usize, h_in: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("h_in above 16 is not supported")]
    HInTooLarge,
}

impl Params {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.f.a == 0 && self.f.b == 0 {
            return Err(ParamsError::ZeroF);
        }
        if self.trie.rho == 0 || self.trie.kappa == 0 {
            return Err(ParamsError::TrieBound);
        }
        if self.max_witness_bits == 0 {
            return Err(ParamsError::NonPositive("max_witness_bits"));
        }
        if self.max_prog_bits == 0 {
            return Err(ParamsError::NonPositive("max_prog_bits"));
        }
        if self.h_in > 16 {
            return Err(ParamsError::HInTooLarge);
        }
        if self.input_len_cap > self.h_in {
            return Err(ParamsError::InputCap {
                cap: self.input_len_cap,
                h_in: self.h_in,
            });
        }
        Ok(())
    }

    /// Budget for ⟨i, ·⟩ ∈ S: max{f(ℓ(i)), λ(i, S)}.
    pub fn example_budget(&self, input: &BitString, set: &ExampleSet) -> u64 {
        self.f
            .eval(input.len())
            .max(lambda_bound(input, set, &self.trie))
    }

    /// Budget used when comparing concepts on input `i`: max{f(ℓ(i)), κ}.
    pub fn equiv_budget(&self, input_len: usize) -> u64 {
        self.f.eval(input_len).max(self.trie.kappa)
    }

    /// Canonical text of the book-determining parameters.
    pub fn canonical(&self) -> String {
        format!(
            "f.a={}\nf.b={}\nrho={}\nkappa={}\nmax_witness_bits={}\nmax_prog_bits={}\nh_in={}\ninput_len_cap={}\n",
            self.f.a,
            self.f.b,
            self.trie.rho,
            self.trie.kappa,
            self.max_witness_bits,
            self.max_prog_bits,
            self.h_in,
            self.input_len_cap
        )
    }

    /// SHA-256 of [`Params::canonical`], hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Every input the learner tables cover, in length-lexicographic order.
    pub fn table_inputs(&self) -> Vec<BitString> {
        strings_up_to(self.input_len_cap)
    }
}

/// All binary strings of length ≤ `len` in length-lexicographic order.
pub fn strings_up_to(len: usize) -> Vec<BitString> {
    let count = (1u64 << (len + 1)) - 1;
    (0..count).map(crate::codec::string_from_index).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    #[test]
    fn lambda_examples() {
        let t = TrieBoundParams::default();
        let s: ExampleSet = "{1->0}".parse().unwrap();
        assert_eq!(lambda_bound(&bits("10"), &s, &t), 49);
        assert_eq!(lambda_bound(&bits(""), &ExampleSet::empty(), &t), 32);
        assert_eq!(lambda_bound(&bits("1111"), &s, &t), 49);
    }

    #[test]
    fn validation() {
        assert!(Params::default().validate().is_ok());
        let bad = Params {
            input_len_cap: 6,
            ..Params::default()
        };
        assert!(matches!(bad.validate(), Err(ParamsError::InputCap { .. })));
        assert_eq!(strings_up_to(2).len(), 7);
    }

    #[test]
    fn digest_tracks_parameters() {
        let a = Params::default();
        let b = Params {
            max_prog_bits: 12,
            ..a
        };
        assert_eq!(a.digest(), Params::default().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
