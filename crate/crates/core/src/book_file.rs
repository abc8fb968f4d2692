//! The TSB1 teaching-book file.
//!
//! ```text
//! TSB1
//! version=1
//! alphabet=8
//! f.a=64
//! ...
//! digest=<sha256 of the book-determining parameters>
//! entries=<N>
//! <program hex> <witness hex> <delta> <len>
//! ```
//!
//! Bits are packed most significant first and zero padded to whole bytes;
//! `delta` and `len` give the unpadded lengths of the witness and program.

use std::fmt::Write as _;
use std::path::Path;

use crate::bits::BitString;
use crate::codec::ExampleSet;
use crate::error::Error;
use crate::lang::{LanguageContext, Program};
use crate::params::Params;
use crate::protocol::{BookEntry, Engine, TeachingBook};

pub const MAGIC: &str = "TSB1";
pub const VERSION: u32 = 1;

/// Serialises `book`; equal books give identical bytes.
pub fn write_book(book: &TeachingBook) -> String {
    let p = book.params();
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    writeln!(out, "version={VERSION}").unwrap();
    writeln!(out, "alphabet={}", LanguageContext::BASE.alphabet().len()).unwrap();
    out.push_str(&p.canonical());
    writeln!(out, "digest={}", p.digest()).unwrap();
    writeln!(out, "entries={}", book.len()).unwrap();
    for e in book.entries() {
        writeln!(
            out,
            "{} {} {} {}",
            e.program.to_bitstring().to_hex(),
            e.witness.encoding().to_hex(),
            e.ts_bits(),
            e.k_bits()
        )
        .unwrap();
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BookFile(msg.into())
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, Error> {
    let line = line.ok_or_else(|| bad(format!("missing `{key}`")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| bad(format!("expected `{key}=`, found `{line}`")))
}

/// Parses a TSB1 file for `engine`'s parameters. A book written under a
/// different parameter digest is refused.
pub fn read_book(text: &str, engine: &Engine) -> Result<TeachingBook, Error> {
    let params: Params = *engine.params();
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("not a TSB1 file"));
    }
    let version = header_value(lines.next(), "version")?;
    if version != VERSION.to_string() {
        return Err(bad(format!("unsupported version {version}")));
    }
    let alphabet = header_value(lines.next(), "alphabet")?;
    if alphabet != LanguageContext::BASE.alphabet().len().to_string() {
        return Err(bad(format!("unsupported alphabet size {alphabet}")));
    }
    // The parameter lines are informational; the digest decides.
    for key in params.canonical().lines() {
        let name = key.split('=').next().unwrap_or_default();
        header_value(lines.next(), name)?;
    }
    let found = header_value(lines.next(), "digest")?;
    let expected = params.digest();
    if found != expected {
        return Err(Error::DigestMismatch {
            expected,
            found: found.to_string(),
        });
    }
    let count: usize = header_value(lines.next(), "entries")?
        .parse()
        .map_err(|_| bad("entry count is not a number"))?;
    let mut entries = Vec::with_capacity(count);
    for k in 0..count {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("expected {count} entries, found {k}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [prog_hex, wit_hex, delta, len] = fields[..] else {
            return Err(bad(format!("entry {k}: expected four fields")));
        };
        let delta: usize = delta.parse().map_err(|_| bad(format!("entry {k}: bad delta")))?;
        let len: usize = len.parse().map_err(|_| bad(format!("entry {k}: bad length")))?;
        let prog_bits = BitString::from_hex(prog_hex, len)
            .ok_or_else(|| bad(format!("entry {k}: bad program hex")))?;
        let wit_bits = BitString::from_hex(wit_hex, delta)
            .ok_or_else(|| bad(format!("entry {k}: bad witness hex")))?;
        let program = Program::from_bitstring(&prog_bits, LanguageContext::BASE)?;
        let witness = ExampleSet::decode(&wit_bits)?;
        let signature = engine.concept(&program)?;
        entries.push(BookEntry {
            program,
            witness,
            signature,
        });
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(bad("trailing content after the last entry"));
    }
    TeachingBook::from_entries(params, entries)
}

pub fn save_book(book: &TeachingBook, path: &Path) -> Result<(), Error> {
    std::fs::write(path, write_book(book))?;
    Ok(())
}

pub fn load_book(path: &Path, engine: &Engine) -> Result<TeachingBook, Error> {
    read_book(&std::fs::read_to_string(path)?, engine)
}
