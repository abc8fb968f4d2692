mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use teachsize::book_file::{load_book, save_book};
use teachsize::conditional::make_library;
use teachsize::curriculum::{curriculum_count, enumerate_curricula, CurriculumSolver};
use teachsize::interposition::{
    interposing_library, interposition_set, isafe_augment, nonmonotonicity_scan,
    sc_ranges_single,
};
use teachsize::{
    Engine, Error, ExampleSet, LanguageContext, Library, Parallelism, Program, Signature,
    TeachingBook,
};

use config::{ConfigError, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "teachsize",
    version,
    about = "Teaching size, conditional teaching size and curricula for a small bit-tape language"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Config file of `key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Teaching book to load (or write, for `book build`).
    #[arg(long, global = true)]
    book: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t)]
    format: OutputFormat,
    /// Worker thread cap; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Prints the effective configuration as `key=value` lines.
    Config,
    /// Teaching-book operations.
    Book {
        #[command(subcommand)]
        action: BookCommand,
    },
    /// Teaching size of a concept and its witness.
    Ts {
        #[arg(long)]
        concept: String,
    },
    /// Teaching size given a library of concepts.
    CondTs {
        #[arg(long)]
        concept: String,
        /// Concepts for the library, as `[p; q]`.
        #[arg(long, default_value = "[]")]
        given: String,
    },
    /// Length of the first program for a concept.
    K {
        #[arg(long)]
        concept: String,
    },
    /// Program length given a library of concepts.
    CondK {
        #[arg(long)]
        concept: String,
        #[arg(long, default_value = "[]")]
        given: String,
    },
    /// Programs preceding the target that are compatible with a witness.
    Interpose {
        #[arg(long)]
        witness: String,
        /// Target program, in the library's language.
        #[arg(long)]
        target: String,
        /// Library primitives, as `[p; q]`.
        #[arg(long, default_value = "[]")]
        library: String,
    },
    /// Size and call ranges for one primitive.
    Ranges {
        #[arg(long)]
        na: usize,
        #[arg(long)]
        nb: usize,
        #[arg(long)]
        nbp: usize,
    },
    /// Extends a witness until no interposer is left.
    Isafe {
        #[arg(long)]
        witness: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "[]")]
        library: String,
    },
    /// Builds libraries that make concepts harder to teach.
    DemoInterposition {
        /// One concept; otherwise the first `count` eligible book concepts.
        #[arg(long)]
        concept: Option<String>,
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Searches book pairs whose conditional K and TS order oppositely.
    ScanNonmono {
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Counting and listing curricula.
    Curricula {
        #[command(subcommand)]
        action: CurriculaCommand,
    },
    /// Minimal curriculum by branch and bound.
    Isearch {
        /// Concepts, as `[p; q; r]`.
        #[arg(long)]
        concepts: String,
    },
    /// Single-branch curriculum by largest teaching-size drop.
    Greedy {
        #[arg(long)]
        concepts: String,
    },
}

#[derive(Subcommand)]
enum BookCommand {
    /// Builds the book for the current config and writes it.
    Build {
        /// Output path; defaults to `--book`, then `book.tsb`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CurriculaCommand {
    Count {
        #[arg(long)]
        n: usize,
    },
    List {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<teachsize::lang::LangError> for CliError {
    fn from(e: teachsize::lang::LangError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<teachsize::codec::CodecError> for CliError {
    fn from(e: teachsize::codec::CodecError) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            // A concept outside the book needs more witness bits than the cap.
            CliError::Core(e) if e.is_cap_exhaustion() => 1,
            CliError::Core(Error::ConceptNotInBook) => 1,
            _ => 2,
        }
    }
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    command: &'a str,
    digest: &'a str,
    elapsed_ms: f64,
    result: T,
}

struct Session {
    cfg: RunConfig,
    engine: Engine,
    command: String,
    digest: String,
    started: Instant,
}

impl Session {
    fn book(&self) -> Result<TeachingBook, CliError> {
        match &self.cfg.book_path {
            Some(path) => load_book(path, &self.engine).map_err(|e| match e {
                Error::Io(source) => CliError::Io {
                    path: path.clone(),
                    source,
                },
                other => other.into(),
            }),
            None => Ok(self.engine.build_book()),
        }
    }

    fn emit<T: Serialize>(&self, result: T, table: impl FnOnce(&T) -> String) {
        match self.cfg.format {
            OutputFormat::Table => {
                let text = table(&result);
                println!("{}", text.trim_end());
            }
            OutputFormat::Records => {
                let rec = Record {
                    command: &self.command,
                    digest: &self.digest,
                    elapsed_ms: self.started.elapsed().as_secs_f64() * 1e3,
                    result,
                };
                println!("{}", serde_json::to_string(&rec).expect("records serialise"));
            }
        }
    }

    fn concept(&self, text: &str) -> Result<(Program, Signature), CliError> {
        let p = Program::parse(text, LanguageContext::BASE)?;
        let sig = self.engine.concept(&p)?;
        Ok((p, sig))
    }

    fn concepts(&self, list: &str) -> Result<Vec<(Program, Signature)>, CliError> {
        split_list(list)?.iter().map(|t| self.concept(t)).collect()
    }
}

/// Splits `[a; b; c]` into its items.
fn split_list(text: &str) -> Result<Vec<String>, CliError> {
    let t = text.trim();
    let body = t
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| CliError::Usage(format!("expected a list like `[p; q]`, found `{t}`")))?;
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(body.split(';').map(|s| s.trim().to_string()).collect())
}

fn load_config(g: &Global) -> Result<RunConfig, CliError> {
    let mut cfg = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for o in &g.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("`--set {o}`: expected KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if g.threads.is_some() {
        cfg.threads = g.threads;
    }
    cfg.book_path = g.book.clone();
    cfg.format = g.format;
    cfg.check()?;
    cfg.params.validate().map_err(Error::from)?;
    Ok(cfg)
}

fn parallelism(threads: Option<usize>) -> Parallelism {
    #[cfg(feature = "parallel")]
    {
        if let Some(t) = threads {
            // Fails only if a pool exists already, which is fine.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        if threads == Some(1) {
            Parallelism::Serial
        } else {
            Parallelism::Parallel
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Parallelism::Serial
    }
}

fn teaching_table(label: &str, t: &TeachingOut) -> String {
    format!(
        "{label} = {} bits\nwitness {}\nprogram {}",
        t.ts_bits, t.witness, t.program
    )
}

#[derive(Serialize)]
struct TeachingOut {
    concept: String,
    ts_bits: usize,
    witness: String,
    program: String,
}

fn cap_error(what: &str, cap: usize) -> CliError {
    CliError::Core(Error::CapExhausted(format!("{what} exceeds {cap} bits")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.global)?;
    let par = parallelism(cfg.threads);
    let engine = Engine::new(cfg.params, par)?;
    let command: Vec<String> = std::env::args().skip(1).collect();
    let s = Session {
        digest: cfg.params.digest(),
        cfg,
        engine,
        command: command.join(" "),
        started: Instant::now(),
    };
    let params = *s.engine.params();
    match cli.command {
        Command::Config => {
            #[derive(Serialize)]
            struct Effective {
                config: String,
                digest: String,
            }
            s.emit(
                Effective {
                    config: s.cfg.to_text(),
                    digest: s.digest.clone(),
                },
                |e| format!("{}# digest {}", e.config, e.digest),
            );
        }
        Command::Book {
            action: BookCommand::Build { out },
        } => {
            let path = out
                .or_else(|| s.cfg.book_path.clone())
                .unwrap_or_else(|| PathBuf::from("book.tsb"));
            let book = s.engine.build_book();
            save_book(&book, &path).map_err(|e| match e {
                Error::Io(source) => CliError::Io {
                    path: path.clone(),
                    source,
                },
                other => other.into(),
            })?;
            #[derive(Serialize)]
            struct Built {
                path: String,
                entries: usize,
                digest: String,
            }
            s.emit(
                Built {
                    path: path.display().to_string(),
                    entries: book.len(),
                    digest: params.digest(),
                },
                |b| format!("wrote {} entries to {}\ndigest {}", b.entries, b.path, b.digest),
            );
        }
        Command::Ts { concept } => {
            let (p, sig) = s.concept(&concept)?;
            let book = s.book()?;
            let entry = book
                .find(&sig)
                .ok_or_else(|| cap_error(&format!("TS({p})"), params.max_witness_bits))?;
            let out = TeachingOut {
                concept: p.to_string(),
                ts_bits: entry.ts_bits(),
                witness: entry.witness.to_string(),
                program: entry.program.to_string(),
            };
            s.emit(out, |o| teaching_table(&format!("TS({})", o.concept), o));
        }
        Command::CondTs { concept, given } => {
            let (p, sig) = s.concept(&concept)?;
            let given = s.concepts(&given)?;
            let book = s.book()?;
            let sigs: Vec<Signature> = given.iter().map(|g| g.1.clone()).collect();
            let lib = make_library(&book, &sigs)?;
            let t = s
                .engine
                .teacher(&sig, &lib)
                .ok_or_else(|| cap_error(&format!("TS({p}|{lib})"), params.max_witness_bits))?;
            let out = TeachingOut {
                concept: p.to_string(),
                ts_bits: t.witness.delta(),
                witness: t.witness.to_string(),
                program: t.program.to_string(),
            };
            let label = format!("TS({p} | {lib})");
            s.emit(out, |o| teaching_table(&label, o));
        }
        Command::K { concept } => {
            let (p, sig) = s.concept(&concept)?;
            k_command(&s, &p, &sig, &Library::empty())?;
        }
        Command::CondK { concept, given } => {
            let (p, sig) = s.concept(&concept)?;
            let given = s.concepts(&given)?;
            let book = s.book()?;
            let sigs: Vec<Signature> = given.iter().map(|g| g.1.clone()).collect();
            let lib = make_library(&book, &sigs)?;
            k_command(&s, &p, &sig, &lib)?;
        }
        Command::Interpose {
            witness,
            target,
            library,
        } => {
            let (w, target, lib) = witness_target_lib(&witness, &target, &library)?;
            let report = interposition_set(&s.engine, &w, &target, &lib)?;
            s.emit(&report, |r| {
                let mut t = format!(
                    "ranges {:?}: size [{}, {}], bound {}\n",
                    r.ranges.basis,
                    r.ranges.i_min,
                    if r.ranges.i_max == usize::MAX {
                        "inf".to_string()
                    } else {
                        r.ranges.i_max.to_string()
                    },
                    if r.ranges.bound == u128::MAX {
                        "unbounded".to_string()
                    } else {
                        r.ranges.bound.to_string()
                    }
                );
                t += &format!(
                    "scanned {}, pruned {} ({:.1}%)\nmembers ({}):\n",
                    r.scanned,
                    r.pruned,
                    100.0 * r.pruned_fraction(),
                    r.members.len()
                );
                for m in &r.members {
                    t += &format!("  {m}\n");
                }
                t
            });
        }
        Command::Ranges { na, nb, nbp } => {
            let r = sc_ranges_single(na, nb, nbp)?;
            s.emit(&r, |r| {
                if r.is_empty() {
                    "empty (interposition impossible)".to_string()
                } else {
                    let mut t = format!("size [{}, {}], bound {}\n", r.i_min, r.i_max, r.bound);
                    for b in &r.j_bounds {
                        t += &format!("  i={} calls [{}, {}]\n", b.i, b.j_min, b.j_max);
                    }
                    t
                }
            });
        }
        Command::Isafe {
            witness,
            target,
            library,
        } => {
            let (w, target, lib) = witness_target_lib(&witness, &target, &library)?;
            let out = isafe_augment(&s.engine, &w, &target, &lib)?;
            #[derive(Serialize)]
            struct Augmented {
                witness: String,
                delta: usize,
                learner: String,
            }
            let learned = s
                .engine
                .learner(&out, &lib)
                .map(|p| p.to_string())
                .unwrap_or_default();
            s.emit(
                Augmented {
                    witness: out.to_string(),
                    delta: out.delta(),
                    learner: learned,
                },
                |a| format!("witness {} ({} bits)\nlearner {}", a.witness, a.delta, a.learner),
            );
        }
        Command::DemoInterposition { concept, count } => {
            let book = s.book()?;
            let entries: Vec<_> = match concept {
                Some(c) => {
                    let (_, sig) = s.concept(&c)?;
                    vec![book.find(&sig).ok_or(Error::ConceptNotInBook)?.clone()]
                }
                None => book
                    .entries()
                    .iter()
                    .filter(|e| e.program.ninst() >= 2)
                    .take(count)
                    .cloned()
                    .collect(),
            };
            #[derive(Serialize)]
            struct Demo {
                concept: String,
                library: String,
                covered: String,
                contradiction: String,
                ts_bits: usize,
                cond_ts_bits: Option<usize>,
                interposes: bool,
            }
            for e in &entries {
                let r = interposing_library(&s.engine, e)?;
                let one = ExampleSet::new(vec![r.contradiction.clone()])?;
                s.emit(
                    Demo {
                        concept: e.program.to_string(),
                        library: r.library.to_string(),
                        covered: r.covered.to_string(),
                        contradiction: one.to_string(),
                        ts_bits: r.ts_base,
                        cond_ts_bits: r.ts_cond.as_ref().map(|t| t.witness.delta()),
                        interposes: r.interposes(),
                    },
                    |d| {
                        let cond = match d.cond_ts_bits {
                            Some(b) => format!("{b}"),
                            None => format!("> {}", params.max_witness_bits),
                        };
                        format!(
                            "{}: TS = {}, TS(c|B) = {}, interposes: {}\n  covered {} plus {}",
                            d.concept, d.ts_bits, cond, d.interposes, d.covered, d.contradiction
                        )
                    },
                );
            }
        }
        Command::ScanNonmono { limit } => {
            let book = s.book()?;
            let report = nonmonotonicity_scan(&s.engine, &book, limit)?;
            s.emit(&report, |r| {
                let mut t = format!(
                    "scanned {} pairs ({} capped), found {}\n",
                    r.pairs_scanned,
                    r.pairs_capped,
                    r.found.len()
                );
                for p in &r.found {
                    t += &format!(
                        "  a={} b={}: K(a|b)={} < K(b|a)={}, TS(a|b)={} > TS(b|a)={}\n",
                        p.a, p.b, p.k_a_given_b, p.k_b_given_a, p.ts_a_given_b, p.ts_b_given_a
                    );
                }
                t
            });
        }
        Command::Curricula {
            action: CurriculaCommand::Count { n },
        } => {
            let count = curriculum_count(n)?;
            s.emit(count.to_string(), |c| c.clone());
        }
        Command::Curricula {
            action: CurriculaCommand::List { n },
        } => {
            if n > 8 {
                return Err(CliError::Usage("listing is limited to 8 concepts".into()));
            }
            let labels: Vec<String> = (0..n).map(|k| ((b'a' + k as u8) as char).to_string()).collect();
            for pi in enumerate_curricula(n) {
                s.emit(pi.render(&labels), |t| t.clone());
            }
        }
        Command::Isearch { concepts } => {
            let book = s.book()?;
            let solver = solver(&s, &book, &concepts)?;
            let h = match s.cfg.h {
                Some(h) => h,
                None => (0..solver.len()).map(|x| solver.base_ts(x)).sum::<usize>() + 8,
            };
            let out = solver.i_search(h)?;
            s.emit(&out, |o| {
                let mut t = curriculum_table(&o.result);
                let st = &o.stats;
                t += &format!(
                    "curricula {}: pruned {}, evaluated {}, abandoned {}\n",
                    st.curricula_total, st.curricula_pruned, st.curricula_evaluated, st.curricula_abandoned
                );
                t
            });
        }
        Command::Greedy { concepts } => {
            let book = s.book()?;
            let solver = solver(&s, &book, &concepts)?;
            let r = solver.greedy()?;
            s.emit(&r, |r| curriculum_table(r));
        }
    }
    Ok(())
}

fn curriculum_table(r: &teachsize::curriculum::CurriculumResult) -> String {
    let mut t = format!("{}  total {} bits\n", r.text, r.total_ts_bits);
    for step in &r.per_step {
        t += &format!("  {:<12} {:>3} bits  {}\n", step.concept, step.ts_bits, step.witness);
    }
    t
}

fn solver<'a>(
    s: &'a Session,
    book: &'a TeachingBook,
    concepts: &str,
) -> Result<CurriculumSolver<'a>, CliError> {
    let list = s.concepts(concepts)?;
    let labels = list.iter().map(|(p, _)| p.to_string()).collect();
    let sigs = list.into_iter().map(|(_, sig)| sig).collect();
    Ok(CurriculumSolver::new(&s.engine, book, sigs, labels)?)
}

fn k_command(s: &Session, p: &Program, sig: &Signature, lib: &Library) -> Result<(), CliError> {
    let params = s.engine.params();
    let first = s
        .engine
        .first_equivalent(sig, lib)
        .ok_or_else(|| cap_error(&format!("K({p}|{lib})"), params.max_prog_bits))?;
    #[derive(Serialize)]
    struct KOut {
        concept: String,
        library: String,
        k_bits: usize,
        program: String,
    }
    s.emit(
        KOut {
            concept: p.to_string(),
            library: lib.to_string(),
            k_bits: first.bit_len(),
            program: first.to_string(),
        },
        |k| {
            let given = if k.library == "[]" {
                String::new()
            } else {
                format!(" | {}", k.library)
            };
            format!("K({}{given}) = {} bits\nprogram {}", k.concept, k.k_bits, k.program)
        },
    );
    Ok(())
}

fn witness_target_lib(
    witness: &str,
    target: &str,
    library: &str,
) -> Result<(ExampleSet, Program, Library), CliError> {
    let w: ExampleSet = witness.parse()?;
    let lib = Library::parse(library)?;
    let target = Program::parse(target, lib.context())?;
    Ok((w, target, lib))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
