//! Curricula over a set of book concepts: counting, enumeration, overall
//! teaching size, the I-search branch-and-bound, an exhaustive oracle and a
//! greedy variant.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Mutex;

use serde::Serialize;

use crate::codec::{enc_len, string_index, ExampleSet};
use crate::conditional::make_library;
use crate::error::Error;
use crate::lang::Machine;
use crate::par;
use crate::params::strings_up_to;
use crate::protocol::{Engine, Teaching, TeachingBook};
use crate::universe::Signature;

/// Largest concept set the solver accepts (library subsets are bitmasks).
pub const MAX_CONCEPTS: usize = 16;
/// Largest concept set the exhaustive oracle accepts (501 curricula).
pub const ORACLE_MAX_CONCEPTS: usize = 5;

/// |Curricula(n)| = n!·Σ_k C(n−1,k)/(k+1)!.
pub fn curriculum_count(n: usize) -> Result<u128, Error> {
    if n == 0 {
        return Err(Error::Precondition("a curriculum needs at least one concept".into()));
    }
    if n > 30 {
        return Err(Error::Precondition("count overflows above 30 concepts".into()));
    }
    let fact = |m: usize| (1..=m as u128).product::<u128>();
    let choose = |a: usize, b: usize| fact(a) / (fact(b) * fact(a - b));
    // n!/(k+1)! is an integer because k+1 ≤ n.
    Ok((0..n)
        .map(|k| choose(n - 1, k) * (fact(n) / fact(k + 1)))
        .sum())
}

/// A partition of concept indices into ordered branches, canonically
/// sorted by first element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Curriculum {
    branches: Vec<Vec<usize>>,
}

impl Curriculum {
    pub fn new(mut branches: Vec<Vec<usize>>) -> Result<Curriculum, Error> {
        let mut seen: Vec<usize> = branches.iter().flatten().copied().collect();
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != total || branches.iter().any(|b| b.is_empty()) {
            return Err(Error::Precondition(
                "branches must be nonempty and pairwise disjoint".into(),
            ));
        }
        branches.sort_by_key(|b| b[0]);
        Ok(Curriculum { branches })
    }

    /// Every concept in its own branch.
    pub fn non_incremental(n: usize) -> Curriculum {
        Curriculum {
            branches: (0..n).map(|k| vec![k]).collect(),
        }
    }

    pub fn branches(&self) -> &[Vec<usize>] {
        &self.branches
    }

    pub fn concept_count(&self) -> usize {
        self.branches.iter().map(|b| b.len()).sum()
    }

    /// Some branch starts with `y` followed by `x`.
    pub fn has_start(&self, y: usize, x: usize) -> bool {
        self.branches.iter().any(|b| b.len() >= 2 && b[0] == y && b[1] == x)
    }

    /// Text form `{a>b>c | d>e | f}`.
    pub fn render(&self, labels: &[String]) -> String {
        let parts: Vec<String> = self
            .branches
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&k| labels[k].as_str())
                    .collect::<Vec<_>>()
                    .join(">")
            })
            .collect();
        format!("{{{}}}", parts.join(" | "))
    }
}

impl fmt::Display for Curriculum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = (0..self.concept_count()).map(|k| k.to_string()).collect();
        f.write_str(&self.render(&labels))
    }
}

/// Every curriculum over `n` concepts, each exactly once. Built by inserting
/// concept `e` into every curriculum over the first `e` concepts, either as
/// a new branch or at any position of an existing branch. The
/// non-incremental curriculum comes first.
pub fn enumerate_curricula(n: usize) -> Vec<Curriculum> {
    if n == 0 {
        return Vec::new();
    }
    let mut current: Vec<Vec<Vec<usize>>> = vec![vec![vec![0]]];
    for e in 1..n {
        let mut next = Vec::new();
        for branches in &current {
            let mut fresh = branches.clone();
            fresh.push(vec![e]);
            next.push(fresh);
            for (b, branch) in branches.iter().enumerate() {
                for pos in (0..=branch.len()).rev() {
                    let mut grown = branches.clone();
                    grown[b].insert(pos, e);
                    next.push(grown);
                }
            }
        }
        current = next;
    }
    current
        .into_iter()
        .map(|b| Curriculum::new(b).expect("insertion keeps a partition"))
        .collect()
}

/// One teaching step of a curriculum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub concept: String,
    pub ts_bits: usize,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CurriculumResult {
    #[serde(skip)]
    pub curriculum: Curriculum,
    #[serde(rename = "curriculum")]
    pub text: String,
    pub total_ts_bits: usize,
    pub per_step: Vec<Step>,
}

/// Work counters of an I-search run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub curricula_total: usize,
    pub curricula_pruned: usize,
    pub curricula_evaluated: usize,
    pub curricula_abandoned: usize,
    pub improvements: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchOutcome {
    pub result: CurriculumResult,
    pub stats: SearchStats,
}

/// What is known about TS(x | library of a concept subset) during I-search.
#[derive(Clone, Copy, Debug)]
enum Known {
    Exact(usize),
    AtLeast(usize),
}

/// A concept set drawn from a book, with memoised conditional teaching.
pub struct CurriculumSolver<'a> {
    engine: &'a Engine,
    book: &'a TeachingBook,
    concepts: Vec<Signature>,
    labels: Vec<String>,
    teach_memo: Mutex<HashMap<(usize, u64), Option<Teaching>>>,
    search_memo: Mutex<HashMap<(usize, u64), Known>>,
}

impl<'a> CurriculumSolver<'a> {
    pub fn new(
        engine: &'a Engine,
        book: &'a TeachingBook,
        concepts: Vec<Signature>,
        labels: Vec<String>,
    ) -> Result<CurriculumSolver<'a>, Error> {
        if concepts.is_empty() || concepts.len() > MAX_CONCEPTS {
            return Err(Error::Precondition(format!(
                "need between 1 and {MAX_CONCEPTS} concepts"
            )));
        }
        if labels.len() != concepts.len() {
            return Err(Error::Precondition("one label per concept".into()));
        }
        let distinct: HashSet<&Signature> = concepts.iter().collect();
        if distinct.len() != concepts.len() {
            return Err(Error::Precondition("concepts must be distinct".into()));
        }
        for c in &concepts {
            book.find(c).ok_or(Error::ConceptNotInBook)?;
        }
        Ok(CurriculumSolver {
            engine,
            book,
            concepts,
            labels,
            teach_memo: Mutex::new(HashMap::new()),
            search_memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn given(&self, mask: u64) -> Vec<Signature> {
        (0..self.len())
            .filter(|k| mask & (1 << k) != 0)
            .map(|k| self.concepts[k].clone())
            .collect()
    }

    /// Teacher for concept `x` given the concepts in `mask`; `None` on cap
    /// exhaustion.
    pub fn teach(&self, x: usize, mask: u64) -> Result<Option<Teaching>, Error> {
        if let Some(t) = self.teach_memo.lock().expect("memo lock").get(&(x, mask)) {
            return Ok(t.clone());
        }
        let lib = make_library(self.book, &self.given(mask))?;
        let t = self.engine.teacher(&self.concepts[x], &lib);
        self.teach_memo
            .lock()
            .expect("memo lock")
            .insert((x, mask), t.clone());
        Ok(t)
    }

    fn teach_required(&self, x: usize, mask: u64) -> Result<Teaching, Error> {
        self.teach(x, mask)?.ok_or_else(|| {
            Error::CapExhausted(format!(
                "no witness within {} bits teaches {} given {:?}",
                self.engine.params().max_witness_bits,
                self.labels[x],
                self.given_labels(mask)
            ))
        })
    }

    fn given_labels(&self, mask: u64) -> Vec<&str> {
        (0..self.len())
            .filter(|k| mask & (1 << k) != 0)
            .map(|k| self.labels[k].as_str())
            .collect()
    }

    /// TS(x) from the book.
    pub fn base_ts(&self, x: usize) -> usize {
        self.book
            .find(&self.concepts[x])
            .expect("checked on construction")
            .ts_bits()
    }

    /// Overall teaching size: each branch grows its own library.
    pub fn curriculum_ts(&self, pi: &Curriculum) -> Result<CurriculumResult, Error> {
        let mut per_step = Vec::new();
        let mut total = 0;
        for branch in pi.branches() {
            let mut mask = 0u64;
            for &x in branch {
                let t = self.teach_required(x, mask)?;
                total += t.witness.delta();
                per_step.push(Step {
                    concept: self.labels[x].clone(),
                    ts_bits: t.witness.delta(),
                    witness: t.witness.to_string(),
                });
                mask |= 1 << x;
            }
        }
        Ok(CurriculumResult {
            curriculum: pi.clone(),
            text: pi.render(&self.labels),
            total_ts_bits: total,
            per_step,
        })
    }

    /// Exhaustive minimum; ties go to the earlier curriculum.
    pub fn brute_force_optimum(&self) -> Result<CurriculumResult, Error> {
        if self.len() > ORACLE_MAX_CONCEPTS {
            return Err(Error::Precondition(format!(
                "the oracle handles at most {ORACLE_MAX_CONCEPTS} concepts"
            )));
        }
        let mut best: Option<CurriculumResult> = None;
        for pi in enumerate_curricula(self.len()) {
            let r = self.curriculum_ts(&pi)?;
            if best.as_ref().is_none_or(|b| r.total_ts_bits < b.total_ts_bits) {
                best = Some(r);
            }
        }
        Ok(best.expect("at least one curriculum"))
    }

    /// Ordered pairs `(y, x)` whose branch start `y → x` can be dropped:
    /// TS(y|x) ≤ TS(y) and TS(x|y) ≥ TS(x). When the reversed test passes
    /// as well the two starts cost the same and neither is dropped. Pairs
    /// with a capped value are kept.
    pub fn pairwise_prune(&self) -> Result<Vec<(usize, usize)>, Error> {
        let n = self.len();
        let cond = |a: usize, b: usize| -> Result<Option<usize>, Error> {
            Ok(self.teach(a, 1 << b)?.map(|t| t.witness.delta()))
        };
        let mut holds = vec![vec![false; n]; n];
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                if let (Some(y_x), Some(x_y)) = (cond(y, x)?, cond(x, y)?) {
                    holds[x][y] = y_x <= self.base_ts(y) && x_y >= self.base_ts(x);
                }
            }
        }
        let mut pruned = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x != y && holds[x][y] && !holds[y][x] {
                    pruned.push((y, x));
                }
            }
        }
        Ok(pruned)
    }

    /// Verifies, for every concept and every single-pair witness within
    /// the caps, that a pair the concept produces only after the budget is
    /// not small enough to matter: δ ≤ Σ TS(x) would break the optimality
    /// argument.
    pub fn check_assumption(&self) -> Result<(), Error> {
        let params = self.engine.params();
        let limit: usize = (0..self.len()).map(|x| self.base_ts(x)).sum();
        let mut machine = Machine::new();
        for (x, sig) in self.concepts.iter().enumerate() {
            let entry = self.book.find(sig).expect("checked on construction");
            let code = crate::lang::Compiled::new(&entry.program, &crate::Library::empty())?;
            for input in strings_up_to(params.input_len_cap) {
                let wide = params
                    .f
                    .eval(input.len())
                    .max(params.trie.rho * input.len() as u64 + params.max_witness_bits as u64 + params.trie.kappa)
                    * 16;
                let Some(steps) = machine.run_raw(&code, &input, wide) else {
                    continue;
                };
                let out = crate::BitString::from_bits(machine.last_output().to_vec());
                let w = ExampleSet::new(vec![crate::Example::new(input.clone(), Some(out))])?;
                if steps > params.example_budget(&input, &w) && w.delta() <= limit {
                    return Err(Error::Assumption {
                        concept: self.labels[x].clone(),
                        witness: w.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Indices of the signature inputs whose ⊥-singleton witness is
    /// smaller than `h` bits.
    fn identification_inputs(&self, h: usize) -> Vec<usize> {
        strings_up_to(self.engine.params().h_in)
            .iter()
            .enumerate()
            .filter(|(_, i)| {
                let n = string_index(i).expect("short input");
                enc_len(1) + enc_len(n) + enc_len(0) < h
            })
            .map(|(k, _)| k)
            .collect()
    }

    /// Scans witnesses of p_x′ in ⋖ order until one identifies `x` or its
    /// size reaches `need`. `Some(δ)` is the conditional teaching size,
    /// `None` means the curriculum cannot beat the incumbent.
    fn search_step(
        &self,
        x: usize,
        mask: u64,
        need: usize,
        ident: &[usize],
    ) -> Result<Option<usize>, Error> {
        let known = self.search_memo.lock().expect("memo lock").get(&(x, mask)).copied();
        match known {
            Some(Known::Exact(d)) => return Ok((d < need).then_some(d)),
            Some(Known::AtLeast(v)) if need <= v => return Ok(None),
            _ => {}
        }
        let lib = make_library(self.book, &self.given(mask))?;
        let u = self.engine.universe(&lib);
        let target = &self.concepts[x];
        let p_x = u.first_equivalent(target).ok_or_else(|| {
            Error::CapExhausted(format!(
                "no program within {} bits is equivalent to {}",
                self.engine.params().max_prog_bits,
                self.labels[x]
            ))
        })?;
        let sets = u.sets();
        let identifies = |q: usize| {
            let a = u.signature(q).outcomes();
            let b = target.outcomes();
            ident.iter().all(|&k| a[k] == b[k])
        };
        // The first member of the I-set is the learner output when it
        // precedes p_x′; the behaviour tables give it exactly.
        let hit = par::find_first(self.engine.parallelism(), sets.len(), 256, |k| {
            let w = &sets[k];
            if w.delta() >= need {
                return true;
            }
            match u.learner(w) {
                Some(q) if q == p_x => true,
                Some(q) if q < p_x => u.learner_from(w, p_x) == Some(p_x) && identifies(q),
                _ => false,
            }
        });
        let mut memo = self.search_memo.lock().expect("memo lock");
        match hit {
            Some(k) if sets[k].delta() < need => {
                let d = sets[k].delta();
                memo.insert((x, mask), Known::Exact(d));
                Ok(Some(d))
            }
            Some(_) => {
                let v = match memo.get(&(x, mask)) {
                    Some(Known::AtLeast(v)) => (*v).max(need),
                    _ => need,
                };
                memo.insert((x, mask), Known::AtLeast(v));
                Ok(None)
            }
            None => Err(Error::CapExhausted(format!(
                "witness cap reached while teaching {} given {:?}",
                self.labels[x],
                self.given_labels(mask)
            ))),
        }
    }

    /// I-search with witness-size limit `h` for identification.
    pub fn i_search(&self, h: usize) -> Result<SearchOutcome, Error> {
        self.check_assumption()?;
        let pruned = self.pairwise_prune()?;
        let ident = self.identification_inputs(h);
        let all = enumerate_curricula(self.len());
        let mut stats = SearchStats {
            curricula_total: all.len(),
            ..SearchStats::default()
        };
        let mut best = Curriculum::non_incremental(self.len());
        let mut best_ts: usize = (0..self.len()).map(|x| self.base_ts(x)).sum();
        for pi in all.into_iter().skip(1) {
            if pruned.iter().any(|&(y, x)| pi.has_start(y, x)) {
                stats.curricula_pruned += 1;
                continue;
            }
            stats.curricula_evaluated += 1;
            let mut ts = 0;
            let mut abandoned = false;
            'branches: for branch in pi.branches() {
                let mut mask = 0u64;
                for &x in branch {
                    match self.search_step(x, mask, best_ts - ts, &ident)? {
                        Some(d) => ts += d,
                        None => {
                            abandoned = true;
                            break 'branches;
                        }
                    }
                    mask |= 1 << x;
                }
            }
            if abandoned {
                stats.curricula_abandoned += 1;
            } else {
                stats.improvements += 1;
                best = pi;
                best_ts = ts;
            }
        }
        let result = self.curriculum_ts(&best)?;
        if result.total_ts_bits != best_ts {
            return Err(Error::Precondition(format!(
                "search total {best_ts} disagrees with the teacher total {}",
                result.total_ts_bits
            )));
        }
        Ok(SearchOutcome { result, stats })
    }

    /// One branch, each step appending the concept whose teaching size
    /// drops the most given what was taught so far; ties go to the concept
    /// that appears first in the book.
    pub fn greedy(&self) -> Result<CurriculumResult, Error> {
        let mut order = Vec::with_capacity(self.len());
        let mut mask = 0u64;
        while order.len() < self.len() {
            let mut best: Option<(i64, usize, usize)> = None;
            for x in (0..self.len()).filter(|x| mask & (1 << x) == 0) {
                let cond = self.teach_required(x, mask)?.witness.delta();
                let gain = self.base_ts(x) as i64 - cond as i64;
                let pos = self.book.position(&self.concepts[x]).expect("in book");
                let better = match best {
                    None => true,
                    Some((g, p, _)) => gain > g || (gain == g && pos < p),
                };
                if better {
                    best = Some((gain, pos, x));
                }
            }
            let (_, _, x) = best.expect("a concept remains");
            order.push(x);
            mask |= 1 << x;
        }
        self.curriculum_ts(&Curriculum::new(vec![order])?)
    }
}
