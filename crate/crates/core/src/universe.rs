//! Cached behaviour tables for one language L_B.
//!
//! A universe enumerates every program up to the program cap once and
//! records, per table input, how each program behaves under a budget large
//! enough for every witness query. Learner and equivalence queries then
//! become bitset intersections; anything outside the tables falls back to
//! direct execution.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::bits::BitString;
use crate::codec::{string_index, ExampleSet, MAX_STRING_BITS};
use crate::conditional::Library;
use crate::lang::{enumerate_programs, Compiled, Machine, Program};
use crate::par::{self, Parallelism};
use crate::params::{strings_up_to, Params};

/// Observable behaviour on every input of length ≤ h_in, under the
/// equivalence budget. `None` marks a run still going at the budget.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature(Arc<Vec<Option<BitString>>>);

impl Signature {
    pub fn outcomes(&self) -> &[Option<BitString>] {
        &self.0
    }
}

/// Signature of an already compiled (unfolded) program.
pub fn compute_signature(code: &Compiled, params: &Params, machine: &mut Machine) -> Signature {
    let outcomes = strings_up_to(params.h_in)
        .iter()
        .map(|i| {
            machine
                .run_raw(code, i, params.equiv_budget(i.len()))
                .map(|_| BitString::from_bits(machine.last_output().to_vec()))
        })
        .collect();
    Signature(Arc::new(outcomes))
}

const RUNNING: u64 = 0;
const LONG: u64 = u64::MAX;
const SET_CHUNK: usize = 256;

/// Code of an output: N(o)+1, or `LONG` past the indexable length.
fn output_code(out: &[bool]) -> u64 {
    if out.len() > MAX_STRING_BITS {
        return LONG;
    }
    out.iter().fold(1u64, |acc, &b| (acc << 1) | b as u64)
}

/// Expected-outcome code: 0 for ⊥, N(o)+1 otherwise.
fn expected_code(o: &Option<BitString>) -> u64 {
    match o {
        None => RUNNING,
        Some(o) => output_code(o.bits()),
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    code: u64,
    steps: u32,
}

struct BitSet {
    words: Vec<u64>,
}

pub struct Universe {
    library: Library,
    params: Params,
    par: Parallelism,
    programs: Vec<Program>,
    compiled: Vec<Compiled>,
    inputs: Vec<BitString>,
    table_budget: Vec<u64>,
    columns: Vec<OnceLock<Vec<Cell>>>,
    bitsets: RwLock<HashMap<(usize, u64, u64), Arc<BitSet>>>,
    signatures: Vec<OnceLock<Signature>>,
    sets: Arc<Vec<ExampleSet>>,
    learned: Vec<OnceLock<Vec<Option<u32>>>>,
}

impl Universe {
    pub fn new(
        library: Library,
        params: Params,
        par: Parallelism,
        sets: Arc<Vec<ExampleSet>>,
    ) -> Universe {
        let programs = enumerate_programs(library.context(), params.max_prog_bits);
        let compiled = par::map_slice(par, &programs, |p| {
            Compiled::new(p, &library).expect("enumerated programs are valid")
        });
        let inputs = params.table_inputs();
        // Large enough for f and for λ of any set within the witness cap.
        let table_budget = inputs
            .iter()
            .map(|i| {
                let n = i.len() as u64;
                let lam = params.trie.rho * n + params.max_witness_bits as u64 + params.trie.kappa;
                params.f.eval(i.len()).max(lam).max(params.trie.kappa)
            })
            .collect();
        let columns = (0..inputs.len()).map(|_| OnceLock::new()).collect();
        let signatures = (0..programs.len()).map(|_| OnceLock::new()).collect();
        let learned = (0..sets.len().div_ceil(SET_CHUNK))
            .map(|_| OnceLock::new())
            .collect();
        Universe {
            library,
            params,
            par,
            programs,
            compiled,
            inputs,
            table_budget,
            columns,
            bitsets: RwLock::new(HashMap::new()),
            signatures,
            sets,
            learned,
        }
    }

    pub fn library(&self) -> &Library {
        &self.library
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn programs(&self) -> &[Program] {
        &self.programs
    }

    pub fn program(&self, idx: usize) -> &Program {
        &self.programs[idx]
    }

    pub fn compiled(&self, idx: usize) -> &Compiled {
        &self.compiled[idx]
    }

    /// Position of `p` in ≺ order, if within the cap.
    pub fn index_of(&self, p: &Program) -> Option<usize> {
        if p.context() != self.library.context() {
            return None;
        }
        self.programs.binary_search(p).ok()
    }

    fn column(&self, input: usize) -> &[Cell] {
        self.columns[input].get_or_init(|| {
            let budget = self.table_budget[input];
            let word = &self.inputs[input];
            let chunks = self.compiled.len().div_ceil(512);
            let parts = par::map_range(self.par, chunks, |c| {
                let mut m = Machine::new();
                let end = ((c + 1) * 512).min(self.compiled.len());
                (c * 512..end)
                    .map(|k| match m.run_raw(&self.compiled[k], word, budget) {
                        Some(steps) => Cell {
                            code: output_code(m.last_output()),
                            steps: steps as u32,
                        },
                        None => Cell {
                            code: RUNNING,
                            steps: budget as u32,
                        },
                    })
                    .collect::<Vec<_>>()
            });
            parts.concat()
        })
    }

    /// Programs whose run on `input` matches `expected` within `budget`.
    fn bitset(&self, input: usize, expected: u64, budget: u64) -> Arc<BitSet> {
        let key = (input, expected, budget);
        if let Some(b) = self.bitsets.read().expect("bitset lock").get(&key) {
            return b.clone();
        }
        let column = self.column(input);
        let mut words = vec![0u64; column.len().div_ceil(64)];
        for (k, cell) in column.iter().enumerate() {
            let halted = cell.code != RUNNING && cell.steps as u64 <= budget;
            let ok = if expected == RUNNING {
                !halted
            } else {
                halted && cell.code == expected
            };
            if ok {
                words[k / 64] |= 1 << (k % 64);
            }
        }
        let b = Arc::new(BitSet { words });
        self.bitsets
            .write()
            .expect("bitset lock")
            .entry(key)
            .or_insert(b)
            .clone()
    }

    fn table_index(&self, input: &BitString) -> Option<usize> {
        let n = string_index(input).ok()? as usize;
        (n < self.inputs.len()).then_some(n)
    }

    /// Constraints of `set` as table bitsets, or `None` if some example lies
    /// outside the tables.
    fn set_constraints(&self, set: &ExampleSet) -> Option<Vec<Arc<BitSet>>> {
        let mut out = Vec::with_capacity(set.len());
        for e in set.examples() {
            let k = self.table_index(&e.input)?;
            let budget = self.params.example_budget(&e.input, set);
            let code = expected_code(&e.output);
            if budget > self.table_budget[k] || code == LONG {
                return None;
            }
            out.push(self.bitset(k, code, budget));
        }
        Some(out)
    }

    /// Indices, in order, of programs satisfying every constraint.
    fn first_in(sets: &[Arc<BitSet>], n: usize, from: usize) -> Option<usize> {
        if sets.is_empty() {
            return (from < n).then_some(from);
        }
        let words = n.div_ceil(64);
        let mut w = from / 64;
        let mut mask = if from.is_multiple_of(64) { !0u64 } else { !0u64 << (from % 64) };
        while w < words {
            let mut acc = mask;
            for s in sets {
                acc &= s.words[w];
                if acc == 0 {
                    break;
                }
            }
            if acc != 0 {
                let k = w * 64 + acc.trailing_zeros() as usize;
                return (k < n).then_some(k);
            }
            w += 1;
            mask = !0;
        }
        None
    }

    /// p ⊨_f S by direct execution.
    pub fn compatible_direct(&self, idx: usize, set: &ExampleSet, m: &mut Machine) -> bool {
        set.examples().iter().all(|e| {
            let budget = self.params.example_budget(&e.input, set);
            match (m.run_raw(&self.compiled[idx], &e.input, budget), &e.output) {
                (Some(_), Some(o)) => m.last_output() == o.bits(),
                (None, None) => true,
                _ => false,
            }
        })
    }

    /// Φ(S|B): index of the ≺-first compatible program within the cap.
    pub fn learner(&self, set: &ExampleSet) -> Option<usize> {
        self.learner_from(set, 0)
    }

    /// First compatible program at or after position `from`.
    pub fn learner_from(&self, set: &ExampleSet, from: usize) -> Option<usize> {
        match self.set_constraints(set) {
            Some(c) => Universe::first_in(&c, self.programs.len(), from),
            None => {
                let mut m = Machine::new();
                (from..self.programs.len()).find(|&k| self.compatible_direct(k, set, &mut m))
            }
        }
    }

    /// Every program compatible with `set` that precedes position `before`.
    pub fn compatible_before(&self, set: &ExampleSet, before: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut from = 0;
        while let Some(k) = self.learner_from(set, from) {
            if k >= before {
                break;
            }
            out.push(k);
            from = k + 1;
        }
        out
    }

    pub fn signature(&self, idx: usize) -> &Signature {
        self.signatures[idx].get_or_init(|| {
            compute_signature(&self.compiled[idx], &self.params, &mut Machine::new())
        })
    }

    /// Cheap necessary condition for `signature(idx) == target`, read off
    /// the tables.
    fn table_agrees(&self, idx: usize, target: &Signature) -> bool {
        for (k, expected) in target.outcomes().iter().take(self.inputs.len()).enumerate() {
            let code = expected_code(expected);
            if code == LONG {
                continue;
            }
            let cell = self.column(k)[idx];
            let budget = self.params.equiv_budget(self.inputs[k].len());
            let halted = cell.code != RUNNING && cell.steps as u64 <= budget;
            let ok = if code == RUNNING {
                !halted
            } else {
                halted && cell.code == code
            };
            if !ok {
                return false;
            }
        }
        true
    }

    pub fn equivalent(&self, idx: usize, target: &Signature) -> bool {
        self.table_agrees(idx, target) && self.signature(idx) == target
    }

    /// ≺-first program with the given signature, within the cap.
    pub fn first_equivalent(&self, target: &Signature) -> Option<usize> {
        let mut constraints = Vec::new();
        for (k, expected) in target.outcomes().iter().take(self.inputs.len()).enumerate() {
            let code = expected_code(expected);
            if code != LONG {
                let budget = self.params.equiv_budget(self.inputs[k].len());
                constraints.push(self.bitset(k, code, budget));
            }
        }
        let mut from = 0;
        while let Some(k) = Universe::first_in(&constraints, self.programs.len(), from) {
            if self.signature(k) == target {
                return Some(k);
            }
            from = k + 1;
        }
        None
    }

    /// Learner outputs for the canonical sets of chunk `c`.
    fn learned_chunk(&self, c: usize) -> &[Option<u32>] {
        self.learned[c].get_or_init(|| {
            let start = c * SET_CHUNK;
            let end = (start + SET_CHUNK).min(self.sets.len());
            par::map_slice(self.par, &self.sets[start..end], |s| {
                self.learner(s).map(|k| k as u32)
            })
        })
    }

    /// Learner output for the `k`-th canonical set.
    pub fn learned(&self, k: usize) -> Option<usize> {
        self.learned_chunk(k / SET_CHUNK)[k % SET_CHUNK].map(|v| v as usize)
    }

    pub fn sets(&self) -> &[ExampleSet] {
        &self.sets
    }

    /// Ω(c|B): position of the ⋖-first canonical set whose learner output
    /// has the target signature.
    pub fn teacher(&self, target: &Signature) -> Option<usize> {
        for c in 0..self.learned.len() {
            let chunk = self.learned_chunk(c);
            for (k, out) in chunk.iter().enumerate() {
                if let Some(idx) = out {
                    if self.equivalent(*idx as usize, target) {
                        return Some(c * SET_CHUNK + k);
                    }
                }
            }
        }
        None
    }

    /// Learner outputs for every canonical set, computed eagerly.
    pub fn learn_all(&self) -> Vec<Option<usize>> {
        par::map_range(self.par, self.learned.len(), |c| {
            self.learned_chunk(c).to_vec()
        })
        .concat()
        .into_iter()
        .map(|v| v.map(|x| x as usize))
        .collect()
    }
}
