//! The teacher-learner protocol: f-compatibility, the learner Φ, the
//! teacher Ω, teaching books and trie programs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::bits::BitString;
use crate::codec::{enumerate_example_sets, ExampleSet, SetCaps};
use crate::conditional::Library;
use crate::error::Error;
use crate::lang::{
    enumerate_programs, execute, Compiled, Instruction, LangError, LanguageContext, Machine,
    Outcome, Program,
};
use crate::par::{self, Parallelism};
use crate::params::{strings_up_to, Params};
use crate::universe::{compute_signature, Signature, Universe};

/// p ⊨_f S: every example reproduced within max{f(ℓ(i)), λ(i, S)} steps.
pub fn f_compatible(
    p: &Program,
    set: &ExampleSet,
    params: &Params,
    lib: &Library,
) -> Result<bool, LangError> {
    for e in set.examples() {
        let budget = params.example_budget(&e.input, set);
        let run = execute(p, &e.input, budget, lib)?;
        let ok = match (&run.outcome, &e.output) {
            (Outcome::Halted(o), Some(expected)) => o == expected,
            (Outcome::StillRunning, None) => true,
            _ => false,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Φ(S|B) by plain enumeration: the ≺-first compatible program within
/// `max_prog_bits`. Slow; the engine answers the same question from tables.
pub fn learner(set: &ExampleSet, params: &Params, lib: &Library) -> Option<Program> {
    enumerate_programs(lib.context(), params.max_prog_bits)
        .into_iter()
        .find(|p| f_compatible(p, set, params, lib).unwrap_or(false))
}

/// Outcome classes agree on every input of length ≤ h_in under the
/// equivalence budget. Each program runs with its own library.
pub fn concept_equiv(
    p: &Program,
    p_lib: &Library,
    q: &Program,
    q_lib: &Library,
    params: &Params,
) -> Result<bool, LangError> {
    for input in strings_up_to(params.h_in) {
        let budget = params.equiv_budget(input.len());
        let a = execute(p, &input, budget, p_lib)?.outcome;
        let b = execute(q, &input, budget, q_lib)?.outcome;
        if a != b {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Trie program p̈_S: halts with the paired output on every member of S
/// within λ, diverges on ⊥ members and on every input outside S.
pub fn compile_trie(set: &ExampleSet) -> Program {
    use Instruction::*;
    if set.is_empty() {
        return Program::new(vec![Flip, Open, Close], LanguageContext::BASE)
            .expect("static program");
    }
    let root = Trie::build(set);
    let mut code = Vec::new();
    root.emit(&mut code);
    Program::new(code, LanguageContext::BASE).expect("trie code is balanced")
}

#[derive(Default)]
struct Trie {
    /// `Some(Some(o))` halts with `o`, `Some(None)` is a ⊥ member.
    label: Option<Option<BitString>>,
    zero: Option<Box<Trie>>,
    one: Option<Box<Trie>>,
}

impl Trie {
    fn build(set: &ExampleSet) -> Trie {
        let mut root = Trie::default();
        for e in set.examples() {
            let mut node = &mut root;
            for &b in e.input.bits() {
                let child = if b { &mut node.one } else { &mut node.zero };
                node = child.get_or_insert_with(Box::default);
            }
            node.label = Some(e.output.clone());
        }
        root
    }

    // Entered with the head on a zero cell c and zeros to its right. Cell
    // c+1 is raised as a flag, then c receives the framing bit. Every path
    // either diverges or leaves the head on a zero cell with only zeros to
    // its right, so all enclosing loops exit at once.
    fn emit(&self, code: &mut Vec<Instruction>) {
        use Instruction::*;
        let diverge = [Open, Close];
        code.extend([Right, Flip, Left, In, Open]);
        if self.zero.is_none() && self.one.is_none() {
            code.extend(diverge);
        } else {
            code.extend([In, Open]);
            match &self.one {
                Some(child) => {
                    code.extend([Right, Right]);
                    child.emit(code);
                }
                None => code.extend(diverge),
            }
            code.extend([Close, Right, Open]);
            match &self.zero {
                Some(child) => {
                    code.push(Right);
                    child.emit(code);
                }
                None => code.extend(diverge),
            }
            code.push(Close);
        }
        code.extend([Close, Right, Open]);
        match &self.label {
            Some(Some(out)) => {
                code.push(Right);
                let mut cell = false;
                for &b in out.bits() {
                    if b != cell {
                        code.push(Flip);
                        cell = b;
                    }
                    code.push(Out);
                }
                if cell {
                    code.push(Right);
                }
            }
            _ => code.extend(diverge),
        }
        code.push(Close);
    }
}

/// One row of a teaching book.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BookEntry {
    pub program: Program,
    pub witness: ExampleSet,
    pub signature: Signature,
}

impl BookEntry {
    /// δ of the witness, the concept's teaching size.
    pub fn ts_bits(&self) -> usize {
        self.witness.delta()
    }

    /// ℓ of the program.
    pub fn k_bits(&self) -> usize {
        self.program.bit_len()
    }
}

/// Concepts with their first programs and minimal witnesses, in ⋖ order
/// of the witnesses.
#[derive(Clone, Debug)]
pub struct TeachingBook {
    params: Params,
    entries: Vec<BookEntry>,
    index: HashMap<Signature, usize>,
}

impl TeachingBook {
    /// Builds the lookup index; rejects duplicate concepts.
    pub fn from_entries(params: Params, entries: Vec<BookEntry>) -> Result<TeachingBook, Error> {
        let mut index = HashMap::with_capacity(entries.len());
        for (k, e) in entries.iter().enumerate() {
            if index.insert(e.signature.clone(), k).is_some() {
                return Err(Error::BookFile(format!(
                    "entry {k} repeats the concept of an earlier entry"
                )));
            }
        }
        Ok(TeachingBook {
            params,
            entries,
            index,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn entries(&self) -> &[BookEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, concept: &Signature) -> Option<&BookEntry> {
        self.position(concept).map(|k| &self.entries[k])
    }

    pub fn position(&self, concept: &Signature) -> Option<usize> {
        self.index.get(concept).copied()
    }
}

/// Result of a teacher run: the witness and the program it teaches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Teaching {
    pub witness: ExampleSet,
    pub program: Program,
}

/// Shared caches for one parameter set: the canonical example sets and one
/// behaviour-table universe per library.
pub struct Engine {
    params: Params,
    par: Parallelism,
    sets: OnceLock<Arc<Vec<ExampleSet>>>,
    universes: Mutex<HashMap<Vec<Program>, Arc<Universe>>>,
}

impl Engine {
    pub fn new(params: Params, par: Parallelism) -> Result<Engine, Error> {
        params.validate()?;
        Ok(Engine {
            params,
            par,
            sets: OnceLock::new(),
            universes: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn parallelism(&self) -> Parallelism {
        self.par
    }

    /// Every canonical example set within the witness and input caps, in ⋖
    /// order.
    pub fn sets(&self) -> Arc<Vec<ExampleSet>> {
        self.sets
            .get_or_init(|| {
                Arc::new(enumerate_example_sets(SetCaps::new(
                    self.params.max_witness_bits,
                    self.params.input_len_cap,
                )))
            })
            .clone()
    }

    pub fn universe(&self, lib: &Library) -> Arc<Universe> {
        let sets = self.sets();
        let mut map = self.universes.lock().expect("universe cache lock");
        map.entry(lib.primitives().to_vec())
            .or_insert_with(|| Arc::new(Universe::new(lib.clone(), self.params, self.par, sets)))
            .clone()
    }

    /// Behaviour of `p` (a program of `lib`'s language) on inputs up to h_in.
    pub fn signature(&self, p: &Program, lib: &Library) -> Result<Signature, LangError> {
        let code = Compiled::new(p, lib)?;
        Ok(compute_signature(&code, &self.params, &mut Machine::new()))
    }

    pub fn learner(&self, set: &ExampleSet, lib: &Library) -> Option<Program> {
        let u = self.universe(lib);
        u.learner(set).map(|k| u.program(k).clone())
    }

    /// Ω(c|B): the ⋖-first set within caps whose learner output in L_B is
    /// equivalent to `concept`.
    pub fn teacher(&self, concept: &Signature, lib: &Library) -> Option<Teaching> {
        let u = self.universe(lib);
        u.teacher(concept).map(|k| Teaching {
            witness: u.sets()[k].clone(),
            program: u.program(u.learned(k).expect("teacher hit has a program")).clone(),
        })
    }

    /// ≺-first program of L_B with the concept's behaviour.
    pub fn first_equivalent(&self, concept: &Signature, lib: &Library) -> Option<Program> {
        let u = self.universe(lib);
        u.first_equivalent(concept).map(|k| u.program(k).clone())
    }

    /// Bounded K(c|B) in bits.
    pub fn k_len(&self, concept: &Signature, lib: &Library) -> Option<usize> {
        self.first_equivalent(concept, lib).map(|p| p.bit_len())
    }

    /// Runs the protocol over every set in ⋖ order. Learner outputs are
    /// computed speculatively; insertion decisions are taken in order.
    pub fn build_book(&self) -> TeachingBook {
        let u = self.universe(&Library::empty());
        let learned = u.learn_all();
        let mut distinct: Vec<usize> = learned.iter().flatten().copied().collect();
        distinct.sort_unstable();
        distinct.dedup();
        let sigs = par::map_slice(self.par, &distinct, |&k| u.signature(k).clone());
        let by_program: HashMap<usize, Signature> = distinct.into_iter().zip(sigs).collect();
        let mut seen = HashMap::new();
        let mut entries = Vec::new();
        for (k, out) in learned.iter().enumerate() {
            let Some(idx) = out else { continue };
            let sig = &by_program[idx];
            if seen.contains_key(sig) {
                continue;
            }
            seen.insert(sig.clone(), entries.len());
            entries.push(BookEntry {
                program: u.program(*idx).clone(),
                witness: u.sets()[k].clone(),
                signature: sig.clone(),
            });
        }
        TeachingBook::from_entries(self.params, entries).expect("entries are distinct concepts")
    }

    /// Resolves a base-L program to its concept.
    pub fn concept(&self, p: &Program) -> Result<Signature, LangError> {
        self.signature(p, &Library::empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    fn base(s: &str) -> Program {
        Program::parse(s, LanguageContext::BASE).unwrap()
    }

    fn set(s: &str) -> ExampleSet {
        s.parse().unwrap()
    }

    #[test]
    fn compatibility_examples() {
        let params = Params::default();
        let e = Library::empty();
        assert!(f_compatible(&base("+."), &set("{->1}"), &params, &e).unwrap());
        assert!(f_compatible(&base("@"), &set("{->_|_}"), &params, &e).unwrap());
        assert!(!f_compatible(&base("."), &set("{->1}"), &params, &e).unwrap());
    }

    #[test]
    fn equivalence_examples() {
        let params = Params {
            h_in: 4,
            ..Params::default()
        };
        let e = Library::empty();
        assert!(concept_equiv(&base("+."), &e, &base("+.+"), &e, &params).unwrap());
        assert!(!concept_equiv(&base("."), &e, &base("+."), &e, &params).unwrap());
    }

    #[test]
    fn empty_trie_diverges() {
        assert_eq!(compile_trie(&ExampleSet::empty()).to_string(), "+[]");
    }

    #[test]
    fn singleton_trie() {
        let s = set("{->1}");
        let trie = compile_trie(&s);
        let params = Params::default();
        let e = Library::empty();
        assert!(f_compatible(&trie, &s, &params, &e).unwrap());
        for input in strings_up_to(4).into_iter().skip(1) {
            let r = execute(&trie, &input, 2000, &e).unwrap();
            assert_eq!(r.outcome, Outcome::StillRunning, "input {input}");
        }
        let r = execute(&trie, &bits(""), 2000, &e).unwrap();
        assert_eq!(r.outcome, Outcome::Halted(bits("1")));
    }
}
