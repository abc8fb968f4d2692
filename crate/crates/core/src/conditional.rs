//! Libraries, the extended language L_B and the conditional measures
//! TS(c|B) and K(c|B).

use std::fmt;

use crate::error::Error;
use crate::lang::{Instruction, LangError, LanguageContext, Program};
use crate::protocol::{Engine, Teaching, TeachingBook};
use crate::universe::Signature;

/// An ordered list of call-free base programs reachable through `@i`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Library {
    primitives: Vec<Program>,
    labels: Vec<String>,
}

/// The diverger that stands in for base `@` inside library primitives.
pub const CANONICAL_DIVERGER: &str = "[]+[]";

impl Library {
    pub fn empty() -> Library {
        Library::default()
    }

    /// Primitives in the given order; each must be a base program without
    /// `@`. Labels default to the program text.
    pub fn new(primitives: Vec<Program>) -> Result<Library, LangError> {
        for p in &primitives {
            if p.context() != LanguageContext::BASE || p.call_count() > 0 {
                return Err(LangError::PrimitiveNotBase);
            }
        }
        let labels = primitives.iter().map(|p| p.to_string()).collect();
        Ok(Library { primitives, labels })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Library {
        assert_eq!(labels.len(), self.primitives.len(), "one label per primitive");
        self.labels = labels;
        self
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Program> {
        self.primitives.get(i)
    }

    pub fn primitives(&self) -> &[Program] {
        &self.primitives
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The language L_B this library induces.
    pub fn context(&self) -> LanguageContext {
        LanguageContext::with_library(self.len())
    }

    /// Parses `[p1; p2; ...]` (base-L program text, `@`-free).
    pub fn parse(text: &str) -> Result<Library, LangError> {
        let t = text.trim();
        let body = t
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or(LangError::Parse {
                ch: t.chars().next().unwrap_or(' '),
                pos: 0,
            })?;
        if body.trim().is_empty() {
            return Ok(Library::empty());
        }
        let programs = body
            .split(';')
            .map(|s| Program::parse(s, LanguageContext::BASE))
            .collect::<Result<Vec<_>, _>>()?;
        Library::new(programs)
    }
}

impl fmt::Display for Library {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, p) in self.primitives.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// A base program as a library primitive: each `@` (which diverges in base
/// L) becomes the canonical diverger so the body stays call-free.
pub fn as_primitive(p: &Program) -> Program {
    let diverger = Program::parse(CANONICAL_DIVERGER, LanguageContext::BASE)
        .expect("canonical diverger parses");
    let mut instrs = Vec::with_capacity(p.ninst());
    for &ins in p.instructions() {
        match ins {
            Instruction::Call(_) => instrs.extend_from_slice(diverger.instructions()),
            other => instrs.push(other),
        }
    }
    Program::new(instrs, LanguageContext::BASE).expect("substitution keeps brackets balanced")
}

/// Library of the book programs for `concepts`, sorted by ≺ so the result
/// depends only on the set of concepts.
pub fn make_library(book: &TeachingBook, concepts: &[Signature]) -> Result<Library, Error> {
    let mut prims: Vec<(Program, String)> = Vec::with_capacity(concepts.len());
    for c in concepts {
        let entry = book.find(c).ok_or(Error::ConceptNotInBook)?;
        let p = as_primitive(&entry.program);
        if !prims.iter().any(|(q, _)| *q == p) {
            prims.push((p, entry.program.to_string()));
        }
    }
    prims.sort_by(|a, b| a.0.cmp(&b.0));
    let (programs, labels): (Vec<_>, Vec<_>) = prims.into_iter().unzip();
    Ok(Library::new(programs)?.with_labels(labels))
}

/// TS(c | given): the teacher in L_B with B built from the given concepts.
/// `None` when the witness cap is exhausted.
pub fn cond_teaching_size(
    engine: &Engine,
    c: &Signature,
    given: &[Signature],
    book: &TeachingBook,
) -> Result<Option<Teaching>, Error> {
    let lib = make_library(book, given)?;
    Ok(engine.teacher(c, &lib))
}

/// p′: the ≺-first L_B program equivalent to `p` (a program of `p_lib`'s
/// language), within the program cap.
pub fn first_equivalent(
    engine: &Engine,
    p: &Program,
    p_lib: &Library,
    lib: &Library,
) -> Result<Option<Program>, Error> {
    let sig = engine.signature(p, p_lib)?;
    Ok(engine.first_equivalent(&sig, lib))
}

/// K(c | given), bounded by the program cap.
pub fn cond_k_len(
    engine: &Engine,
    c: &Signature,
    given: &[Signature],
    book: &TeachingBook,
) -> Result<Option<usize>, Error> {
    let lib = make_library(book, given)?;
    Ok(engine.first_equivalent(c, &lib).map(|p| p.bit_len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_text_round_trip() {
        let lib = Library::parse("[+.; >>]").unwrap();
        assert_eq!(lib.len(), 2);
        assert_eq!(lib.to_string(), "[+.; >>]");
        assert!(Library::parse("[]").unwrap().is_empty());
        assert_eq!(Library::parse("[@]"), Err(LangError::PrimitiveNotBase));
    }

    #[test]
    fn bottom_becomes_canonical_diverger() {
        let p = Program::parse(",[@]", LanguageContext::BASE).unwrap();
        assert_eq!(as_primitive(&p).to_string(), ",[[]+[]]");
    }
}
