use std::sync::OnceLock;

use teachsize::book_file::{load_book, save_book, write_book};
use teachsize::conditional::make_library;
use teachsize::curriculum::{enumerate_curricula, CurriculumSolver};
use teachsize::lang::{enumerate_programs, execute, execute_traced, precedes, Instruction, Outcome};
use teachsize::params::strings_up_to;
use teachsize::protocol::{compile_trie, concept_equiv, f_compatible};
use teachsize::{Engine, LanguageContext, Library, Parallelism, Params, Program, Signature, TeachingBook};

fn fixture() -> &'static (Engine, TeachingBook) {
    static CELL: OnceLock<(Engine, TeachingBook)> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = Params {
            max_witness_bits: 20,
            ..Params::default()
        };
        let engine = Engine::new(params, Parallelism::Parallel).unwrap();
        let book = engine.build_book();
        (engine, book)
    })
}

fn base(s: &str) -> Program {
    Program::parse(s, LanguageContext::BASE).unwrap()
}

fn concept(s: &str) -> Signature {
    fixture().0.concept(&base(s)).unwrap()
}

fn has_call(p: &Program) -> bool {
    p.instructions().iter().any(|i| i.is_call())
}

#[test]
fn a_single_call_precedes_longer_call_programs() {
    for size in 1..=3 {
        let ctx = LanguageContext::with_library(size);
        for k in 0..size as u32 {
            let call = Program::new(vec![Instruction::Call(k)], ctx).unwrap();
            for q in enumerate_programs(ctx, 10) {
                if q != call && q.instructions().contains(&Instruction::Call(k)) {
                    assert!(precedes(&call, &q).unwrap(), "{call} vs {q}");
                }
            }
        }
    }
}

#[test]
fn conditional_teachers_reach_the_library() {
    let (engine, book) = fixture();
    let params = engine.params();
    let prims: Vec<_> = book.entries().iter().filter(|e| e.program.ninst() >= 2).take(4).collect();
    let mut checked = 0;
    for b in prims {
        let lib = make_library(book, std::slice::from_ref(&b.signature)).unwrap();
        for c in book.entries().iter().take(30) {
            let Some(t) = engine.teacher(&c.signature, &lib) else { continue };
            if !has_call(&t.program) {
                continue;
            }
            let reached = t.witness.examples().iter().any(|e| {
                let budget = params.example_budget(&e.input, &t.witness);
                execute_traced(&t.program, &e.input, budget, &lib).unwrap().calls_executed > 0
            });
            assert!(reached, "{} on {} never calls into {lib}", t.program, t.witness);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn a_shorter_witness_in_the_library_language_lowers_ts() {
    let (engine, book) = fixture();
    for (c, given) in [(",..", ",."), ("+.,.", ",."), (".,.", ",.")] {
        let c_sig = concept(c);
        let base_ts = book.find(&c_sig).unwrap().ts_bits();
        let lib = make_library(book, &[concept(given)]).unwrap();
        let t = engine.teacher(&c_sig, &lib).unwrap();
        assert!(t.witness.delta() < base_ts, "TS({c}|{given}) = {}", t.witness.delta());
        let learned = engine.learner(&t.witness, &lib).unwrap();
        assert!(concept_equiv(&learned, &lib, &base(c), &Library::empty(), engine.params()).unwrap());
    }
}

#[test]
fn ts_pins() {
    let (engine, book) = fixture();
    let e = book.find(&concept("+.")).unwrap();
    assert_eq!((e.ts_bits(), e.witness.to_string().as_str()), (9, "{ -> 1}"));
    let lib = make_library(book, &[concept(",.")]).unwrap();
    assert_eq!(engine.teacher(&concept(",.."), &lib).unwrap().witness.delta(), 13);
    assert_eq!(book.find(&concept(",..")).unwrap().ts_bits(), 19);
}

/// Base programs keep their meaning in L_B unless they use `@`, which
/// changes from divergence to a call.
#[test]
fn k_does_not_grow_with_a_library_except_through_divergence() {
    let (engine, book) = fixture();
    for b in book.entries().iter().take(12) {
        let lib = make_library(book, std::slice::from_ref(&b.signature)).unwrap();
        for c in book.entries() {
            let first = engine.first_equivalent(&c.signature, &Library::empty()).unwrap();
            if has_call(&first) {
                continue;
            }
            let k = engine.k_len(&c.signature, &lib).unwrap();
            assert!(k <= first.bit_len(), "K({}|{}) = {k}", c.program, b.program);
        }
    }
}

#[test]
fn trie_programs_fit_their_sets() {
    let (engine, _) = fixture();
    let params = engine.params();
    let sets = engine.sets();
    let outside = strings_up_to(params.input_len_cap);
    for set in sets.iter().filter(|s| s.delta() <= 16) {
        let trie = compile_trie(set);
        assert!(f_compatible(&trie, set, params, &Library::empty()).unwrap(), "{set}");
        // Linear in the witness: measured worst case is 291 bits for δ = 13.
        assert!(trie.bit_len() <= 24 * set.delta(), "{set}: {} bits", trie.bit_len());
        for i in outside.iter().filter(|i| !set.contains_input(i)) {
            let run = execute(&trie, i, 4096, &Library::empty()).unwrap();
            assert_eq!(run.outcome, Outcome::StillRunning, "{set} halts on {i}");
        }
    }
}

#[test]
fn no_earlier_set_teaches_a_book_concept() {
    let (engine, book) = fixture();
    let sets = engine.sets();
    let lib = Library::empty();
    for e in book.entries().iter().take(20) {
        let pos = sets.iter().position(|s| *s == e.witness).unwrap();
        for s in &sets[..pos] {
            if let Some(p) = engine.learner(s, &lib) {
                assert!(engine.concept(&p).unwrap() != e.signature, "{s} teaches {}", e.program);
            }
        }
    }
}

#[test]
fn books_rebuild_identically_and_survive_files() {
    let (engine, book) = fixture();
    let again = Engine::new(*engine.params(), Parallelism::Serial).unwrap().build_book();
    assert_eq!(write_book(&again), write_book(book));
    let path = std::env::temp_dir().join(format!("teachsize-laws-{}.tsb", std::process::id()));
    save_book(book, &path).unwrap();
    let loaded = load_book(&path, engine).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(loaded.entries(), book.entries());
}

#[test]
fn isearch_agrees_with_brute_force_and_beats_greedy() {
    let (engine, book) = fixture();
    let labels: Vec<String> = [",.", ",..", "+.,.", ".,."].map(String::from).to_vec();
    let sigs = labels.iter().map(|l| concept(l)).collect();
    let solver = CurriculumSolver::new(engine, book, sigs, labels).unwrap();
    let best = solver.brute_force_optimum().unwrap();
    let found = solver.i_search(100).unwrap();
    assert_eq!(found.result.total_ts_bits, best.total_ts_bits);
    assert_eq!(best.total_ts_bits, 48);
    assert_eq!(found.stats.curricula_total, enumerate_curricula(4).len());
    let greedy = solver.greedy().unwrap();
    assert!(greedy.total_ts_bits > best.total_ts_bits);
    assert_eq!(solver.curriculum_ts(&best.curriculum).unwrap(), best);
}
