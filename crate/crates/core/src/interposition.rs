//! Interposition sets, the size/call ranges that confine them, I-safe
//! witness augmentation and the interposing-library construction.
//!
//! Range arithmetic is done in bits: a base instruction is 3 bits and a call
//! is `3 + ⌈log2 |B|⌉` bits, so fractional instruction counts never appear.

use serde::Serialize;

use crate::codec::{Example, ExampleSet};
use crate::conditional::{make_library, Library};
use crate::error::Error;
use crate::lang::{enumerate_programs, execute, unfolded_ninst, Outcome, Program};
use crate::params::Params;
use crate::protocol::{compile_trie, f_compatible, BookEntry, Engine, Teaching, TeachingBook};

/// |Υ| − 1: base instructions other than `@`.
const BASE_SYMBOLS: u128 = 7;
const OP_BITS: usize = 3;

/// Which derivation produced a range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeBasis {
    /// One primitive with more than one instruction.
    SinglePrimitive,
    /// Several primitives.
    MultiPrimitive,
    /// Preconditions not met; nothing is pruned.
    Unconstrained,
}

/// Call-count bounds for one unfolded size `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CallBounds {
    pub i: usize,
    pub j_min: usize,
    pub j_max: usize,
}

/// Size range `[i_min, i_max]` of ninst(∘(q)) and per-size call ranges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScRanges {
    pub basis: RangeBasis,
    pub i_min: usize,
    pub i_max: usize,
    /// Only sizes with a nonempty call range are listed.
    pub j_bounds: Vec<CallBounds>,
    /// Bits per call instruction.
    pub call_bits: usize,
    /// Upper bound on the number of interposed programs.
    pub bound: u128,
}

impl ScRanges {
    fn unconstrained(call_bits: usize, bound: u128) -> ScRanges {
        ScRanges {
            basis: RangeBasis::Unconstrained,
            i_min: 0,
            i_max: usize::MAX,
            j_bounds: Vec::new(),
            call_bits,
            bound,
        }
    }

    /// No program can interpose.
    pub fn is_empty(&self) -> bool {
        self.basis != RangeBasis::Unconstrained && self.j_bounds.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if self.basis == RangeBasis::Unconstrained {
            return true;
        }
        self.j_bounds
            .iter()
            .any(|b| b.i == i && b.j_min <= j && j <= b.j_max)
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc.saturating_mul(n - t) / (t + 1);
    }
    acc
}

/// Emptiness test: `n_b > 1 + (n_b' − 1)·n_a` forces the single-primitive
/// interposition set to be empty.
pub fn is_interposition_impossible(n_a: usize, n_b: usize, n_bp: usize) -> bool {
    n_b > 1 + n_bp.saturating_sub(1) * n_a
}

/// Single-primitive ranges with a given lower size bound.
fn single_ranges(n_a: usize, i_min: usize, n_bp: usize) -> ScRanges {
    let i_max = if n_bp == 0 { 0 } else { 1 + (n_bp - 1) * n_a };
    let mut j_bounds = Vec::new();
    let mut bound: u128 = 0;
    if n_bp > 0 {
        for i in i_min..=i_max {
            let j_min = i.saturating_sub(n_bp).div_ceil(n_a - 1);
            let j_max = i / n_a;
            if j_min > j_max {
                continue;
            }
            j_bounds.push(CallBounds { i, j_min, j_max });
            for j in j_min..=j_max {
                let base = (i - n_a * j) as u128;
                let term = binomial(base + j as u128, j as u128)
                    .saturating_mul(BASE_SYMBOLS.saturating_pow(base as u32));
                bound = bound.saturating_add(term);
            }
        }
    }
    ScRanges {
        basis: RangeBasis::SinglePrimitive,
        i_min,
        i_max,
        j_bounds,
        call_bits: OP_BITS,
        bound,
    }
}

/// Ranges for B = {p_a}: case 1 when `1 < n_a < n_b`, case 2 when
/// `n_a ≥ n_b`.
pub fn sc_ranges_single(n_a: usize, n_b: usize, n_bp: usize) -> Result<ScRanges, Error> {
    if n_a <= 1 {
        return Err(Error::Precondition(format!(
            "the primitive needs more than one instruction (has {n_a})"
        )));
    }
    let i_min = if n_a < n_b { n_b } else { n_a + 1 };
    Ok(single_ranges(n_a, i_min, n_bp))
}

/// Stated cardinality bound for several primitives, summed up to `s_max`
/// instructions.
pub fn multi_bound(library_size: usize, s_max: usize) -> u128 {
    let b = library_size as u128;
    let mut total: u128 = 0;
    for s in 2..=s_max as u32 {
        for t in 1..=s {
            let term = BASE_SYMBOLS
                .saturating_pow(s - t)
                .saturating_mul(b.saturating_pow(t - 1));
            total = total.saturating_add(term);
        }
    }
    b.saturating_mul(total)
}

struct MultiInput {
    library_size: usize,
    call_bits: usize,
    n_min: usize,
    n_max: usize,
    n_c: usize,
    /// ℓ(p′) in bits.
    target_bits: usize,
    /// Case 2 lower size bound allowed (primitives incompatible and base
    /// programs cannot interpose).
    case2_ok: bool,
    /// Interposers must contain at least one call.
    calls_required: bool,
}

fn multi_ranges(m: &MultiInput) -> ScRanges {
    let c = m.call_bits;
    let l = m.target_bits;
    let d = l / c;
    // Largest unfolded size reachable within ℓ(p′) bits.
    let i_max = (0..=d)
        .map(|j| j * m.n_max + (l - j * c) / OP_BITS)
        .max()
        .unwrap_or(0);
    let i_min = if m.n_min <= m.n_c || !m.case2_ok {
        m.n_c
    } else {
        m.n_min + 1
    };
    let floor_j = usize::from(m.calls_required);
    let mut j_bounds = Vec::new();
    for i in i_min..=i_max {
        let mut j_min = floor_j;
        let denom = OP_BITS * m.n_max;
        if c < denom {
            // j·(3·n_max − c) ≥ 3i − ℓ(p′), floored as stated.
            let num = (OP_BITS * i) as i64 - l as i64;
            if num > 0 {
                j_min = j_min.max(num as usize / (denom - c));
            }
        }
        let j_max = i.checked_div(m.n_min).map_or(d, |q| d.min(q));
        if j_min <= j_max {
            j_bounds.push(CallBounds { i, j_min, j_max });
        }
    }
    ScRanges {
        basis: RangeBasis::MultiPrimitive,
        i_min,
        i_max,
        j_bounds,
        call_bits: c,
        bound: multi_bound(m.library_size, l / OP_BITS),
    }
}

/// Ranges for |B| > 1 given p_c (base learner output) and p_c′ (its first
/// equivalent in L_B), assuming every primitive is incompatible with the
/// witness.
pub fn sc_ranges_multi(lib: &Library, p_c: &Program, p_cp: &Program) -> Result<ScRanges, Error> {
    if lib.len() <= 1 {
        return Err(Error::Precondition("needs more than one primitive".into()));
    }
    let ninsts: Vec<usize> = lib.primitives().iter().map(|p| p.ninst()).collect();
    Ok(multi_ranges(&MultiInput {
        library_size: lib.len(),
        call_bits: lib.context().call_bits(),
        n_min: *ninsts.iter().min().expect("nonempty"),
        n_max: *ninsts.iter().max().expect("nonempty"),
        n_c: p_c.ninst(),
        target_bits: p_cp.bit_len(),
        case2_ok: true,
        calls_required: true,
    }))
}

/// `(ℓ, symbols)` comparison usable across contexts.
fn precedes_or_eq(p: &Program, q: &Program) -> bool {
    (p.bit_len(), p.instructions()) <= (q.bit_len(), q.instructions())
}

/// Ranges for pruning the I-set of `target` on `w`, using only the
/// derivations whose side conditions hold for this instance.
pub fn derive_ranges(
    engine: &Engine,
    w: &ExampleSet,
    target: &Program,
    lib: &Library,
) -> Result<ScRanges, Error> {
    let ctx = lib.context();
    let fallback = ScRanges::unconstrained(ctx.call_bits(), u128::MAX);
    if lib.is_empty() {
        return Ok(fallback);
    }
    let Some(p_b) = engine.learner(w, &Library::empty()) else {
        return Ok(fallback);
    };
    let params = engine.params();
    let empty = Library::empty();
    let mut all_incompatible = true;
    for prim in lib.primitives() {
        if f_compatible(prim, w, params, &empty)? {
            all_incompatible = false;
        }
    }
    let base_excluded = precedes_or_eq(target, &p_b);
    let n_b = p_b.ninst();
    if lib.len() == 1 {
        let n_a = lib.primitives()[0].ninst();
        if n_a <= 1 {
            return Ok(fallback);
        }
        let i_min = if n_a < n_b {
            n_b
        } else if all_incompatible && base_excluded {
            n_a + 1
        } else {
            n_b
        };
        return Ok(single_ranges(n_a, i_min, target.ninst()));
    }
    let ninsts: Vec<usize> = lib.primitives().iter().map(|p| p.ninst()).collect();
    Ok(multi_ranges(&MultiInput {
        library_size: lib.len(),
        call_bits: ctx.call_bits(),
        n_min: *ninsts.iter().min().expect("nonempty"),
        n_max: *ninsts.iter().max().expect("nonempty"),
        n_c: n_b,
        target_bits: target.bit_len(),
        case2_ok: all_incompatible && base_excluded,
        calls_required: base_excluded,
    }))
}

/// The I-set together with the ranges used to prune its enumeration.
#[derive(Clone, Debug, Serialize)]
pub struct InterpositionReport {
    #[serde(serialize_with = "ser_programs")]
    pub members: Vec<Program>,
    pub ranges: ScRanges,
    /// Programs preceding the target.
    pub scanned: usize,
    /// Of those, skipped by the ranges without execution.
    pub pruned: usize,
}

impl InterpositionReport {
    pub fn pruned_fraction(&self) -> f64 {
        if self.scanned == 0 {
            0.0
        } else {
            self.pruned as f64 / self.scanned as f64
        }
    }
}

fn ser_programs<S: serde::Serializer>(v: &[Program], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|p| p.to_string()))
}

/// 𝕀_w(p|B) = {q ≺ p : q ⊨_f w}, enumerated with range pruning.
pub fn interposition_set(
    engine: &Engine,
    w: &ExampleSet,
    target: &Program,
    lib: &Library,
) -> Result<InterpositionReport, Error> {
    let params = engine.params();
    if target.context() != lib.context() {
        return Err(crate::lang::LangError::ContextMismatch {
            program: target.context().library_size,
            library: lib.len(),
        }
        .into());
    }
    if !f_compatible(target, w, params, lib)? {
        return Err(Error::Precondition(format!("{target} is not compatible with {w}")));
    }
    let ranges = derive_ranges(engine, w, target, lib)?;
    let mut members = Vec::new();
    let mut scanned = 0;
    let mut pruned = 0;
    for q in enumerate_programs(lib.context(), target.bit_len()) {
        if q >= *target {
            break;
        }
        scanned += 1;
        let i = unfolded_ninst(&q, lib);
        let j = if lib.is_empty() { 0 } else { q.call_count() };
        if !ranges.contains(i, j) {
            pruned += 1;
            continue;
        }
        if f_compatible(&q, w, params, lib)? {
            members.push(q);
        }
    }
    Ok(InterpositionReport {
        members,
        ranges,
        scanned,
        pruned,
    })
}

/// The same set by exhaustive enumeration, for cross-checking.
pub fn interposition_set_unpruned(
    params: &Params,
    w: &ExampleSet,
    target: &Program,
    lib: &Library,
) -> Result<Vec<Program>, Error> {
    let mut out = Vec::new();
    for q in enumerate_programs(lib.context(), target.bit_len()) {
        if q >= *target {
            break;
        }
        if f_compatible(&q, w, params, lib)? {
            out.push(q);
        }
    }
    Ok(out)
}

/// Outcome of `p` on `input` under the budget the pair would get in `set`.
fn pair_for(
    p: &Program,
    input: &crate::bits::BitString,
    set: &ExampleSet,
    params: &Params,
    lib: &Library,
) -> Result<Option<ExampleSet>, Error> {
    let probe = set.with(Example::new(input.clone(), None))?;
    let budget = params.example_budget(input, &probe);
    let output = match execute(p, input, budget, lib)?.outcome {
        Outcome::Halted(o) => Some(o),
        Outcome::StillRunning => None,
    };
    let candidate = set.with(Example::new(input.clone(), output))?;
    Ok(f_compatible(p, &candidate, params, lib)?.then_some(candidate))
}

/// Extends `w` with one distinguishing pair per interposer of `target`
/// until none is left, so the learner in L_B returns `target`'s concept.
pub fn isafe_augment(
    engine: &Engine,
    w: &ExampleSet,
    target: &Program,
    lib: &Library,
) -> Result<ExampleSet, Error> {
    let params = engine.params();
    // Singleton pairs in ⋖ order give the input order.
    let singletons: Vec<ExampleSet> = engine
        .sets()
        .iter()
        .filter(|s| s.len() == 1)
        .cloned()
        .collect();
    let mut inputs = Vec::new();
    for s in &singletons {
        let i = &s.examples()[0].input;
        if !inputs.contains(i) {
            inputs.push(i.clone());
        }
    }
    let mut wbar = w.clone();
    // Budgets depend on the whole set, so repeat until no interposer is left.
    for _round in 0..=inputs.len() {
        let report = interposition_set(engine, &wbar, target, lib)?;
        if report.members.is_empty() {
            let target_sig = engine.signature(target, lib)?;
            let learned = engine.learner(&wbar, lib);
            let ok = match &learned {
                Some(p) => engine.signature(p, lib)? == target_sig,
                None => f_compatible(target, &wbar, params, lib)?,
            };
            if !ok {
                return Err(Error::Precondition(format!(
                    "learner output for {wbar} is not equivalent to {target}"
                )));
            }
            return Ok(wbar);
        }
        for q in &report.members {
            if !f_compatible(q, &wbar, params, lib)? {
                continue;
            }
            let mut best: Option<ExampleSet> = None;
            let mut best_key = None;
            for input in inputs.iter().filter(|i| !wbar.contains_input(i)) {
                let Some(candidate) = pair_for(target, input, &wbar, params, lib)? else {
                    continue;
                };
                if f_compatible(q, &candidate, params, lib)? {
                    continue;
                }
                let added = candidate
                    .examples()
                    .iter()
                    .find(|e| &e.input == input)
                    .expect("pair was added")
                    .clone();
                let key = ExampleSet::new(vec![added])?;
                if best_key.as_ref().is_none_or(|k| key < *k) {
                    best_key = Some(key);
                    best = Some(candidate);
                }
            }
            wbar = best.ok_or_else(|| {
                Error::CapExhausted(format!(
                    "no input within the caps separates {q} from {target}"
                ))
            })?;
        }
    }
    Err(Error::CapExhausted("augmentation did not settle".into()))
}

/// Result of the interposing-library construction.
#[derive(Clone, Debug)]
pub struct InterposingLibrary {
    pub library: Library,
    /// Pairs of the concept covered by the trie.
    pub covered: ExampleSet,
    /// The extra pair that contradicts the concept.
    pub contradiction: Example,
    pub ts_base: usize,
    /// `None` when the teacher in L_B ran out of witnesses, which proves
    /// TS(c|B) exceeds the witness cap.
    pub ts_cond: Option<Teaching>,
    pub max_witness_bits: usize,
}

impl InterposingLibrary {
    /// TS(c|B) > TS(c), exactly or through cap exhaustion.
    pub fn interposes(&self) -> bool {
        match &self.ts_cond {
            Some(t) => t.witness.delta() > self.ts_base,
            None => self.max_witness_bits >= self.ts_base,
        }
    }
}

/// Builds B = [p̈_S′] where S′ holds every small pair of the concept plus
/// one contradicting pair; `@` then wins the concept's own witness.
pub fn interposing_library(engine: &Engine, entry: &BookEntry) -> Result<InterposingLibrary, Error> {
    if entry.program.ninst() < 2 {
        return Err(Error::Precondition(format!(
            "{} has fewer than two instructions",
            entry.program
        )));
    }
    let params = engine.params();
    let budget_cap = entry.ts_bits();
    let outcomes = entry.signature.outcomes();
    let table_inputs = params.table_inputs();
    let mut covered = Vec::new();
    for (k, input) in table_inputs.iter().enumerate() {
        let e = Example::new(input.clone(), outcomes[k].clone());
        if ExampleSet::new(vec![e.clone()])?.delta() <= budget_cap {
            covered.push(e);
        }
    }
    let covered = ExampleSet::new(covered)?;
    let contradiction = engine
        .sets()
        .iter()
        .filter(|s| s.len() == 1)
        .map(|s| s.examples()[0].clone())
        .find(|e| {
            let k = crate::codec::string_index(&e.input).expect("capped input") as usize;
            !covered.contains_input(&e.input) && e.output != outcomes[k]
        })
        .ok_or_else(|| Error::CapExhausted("no fresh contradicting pair within caps".into()))?;
    let trie = compile_trie(&covered.with(contradiction.clone())?);
    let library = Library::new(vec![trie])?.with_labels(vec!["trie".into()]);
    let ts_cond = engine.teacher(&entry.signature, &library);
    Ok(InterposingLibrary {
        library,
        covered,
        contradiction,
        ts_base: entry.ts_bits(),
        ts_cond,
        max_witness_bits: params.max_witness_bits,
    })
}

/// A pair with K(a|b) < K(b|a) and TS(a|b) > TS(b|a).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NonMonotonePair {
    pub a: String,
    pub b: String,
    pub k_a_given_b: usize,
    pub k_b_given_a: usize,
    pub ts_a_given_b: usize,
    pub ts_b_given_a: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NonMonotonicityReport {
    pub pairs_scanned: usize,
    /// Pairs skipped because some value hit a cap.
    pub pairs_capped: usize,
    pub found: Vec<NonMonotonePair>,
}

fn conditional_values(
    engine: &Engine,
    book: &TeachingBook,
    a: &BookEntry,
    b: &BookEntry,
) -> Result<Option<(usize, usize)>, Error> {
    let lib = make_library(book, std::slice::from_ref(&b.signature))?;
    let k = engine.k_len(&a.signature, &lib);
    let ts = engine.teacher(&a.signature, &lib).map(|t| t.witness.delta());
    Ok(k.zip(ts))
}

/// Scans ordered pairs among the first `limit` book entries for the
/// opposite orderings of conditional K and TS. Reported pairs are
/// recomputed with a fresh engine before being accepted.
pub fn nonmonotonicity_scan(
    engine: &Engine,
    book: &TeachingBook,
    limit: usize,
) -> Result<NonMonotonicityReport, Error> {
    let entries = &book.entries()[..book.len().min(limit)];
    let mut report = NonMonotonicityReport::default();
    let checker = Engine::new(*engine.params(), crate::par::Parallelism::Serial)?;
    for (x, a) in entries.iter().enumerate() {
        for b in &entries[x + 1..] {
            report.pairs_scanned += 1;
            let ab = conditional_values(engine, book, a, b)?;
            let ba = conditional_values(engine, book, b, a)?;
            let (Some((k_ab, ts_ab)), Some((k_ba, ts_ba))) = (ab, ba) else {
                report.pairs_capped += 1;
                continue;
            };
            let (first, second, vals) = if k_ab < k_ba && ts_ab > ts_ba {
                (a, b, (k_ab, k_ba, ts_ab, ts_ba))
            } else if k_ba < k_ab && ts_ba > ts_ab {
                (b, a, (k_ba, k_ab, ts_ba, ts_ab))
            } else {
                continue;
            };
            let again = (
                conditional_values(&checker, book, first, second)?,
                conditional_values(&checker, book, second, first)?,
            );
            if again != (Some((vals.0, vals.2)), Some((vals.1, vals.3))) {
                return Err(Error::Precondition(
                    "scan result changed on recomputation".into(),
                ));
            }
            report.found.push(NonMonotonePair {
                a: first.program.to_string(),
                b: second.program.to_string(),
                k_a_given_b: vals.0,
                k_b_given_a: vals.1,
                ts_a_given_b: vals.2,
                ts_b_given_a: vals.3,
            });
        }
    }
    Ok(report)
}
