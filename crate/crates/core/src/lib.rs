//! Teaching size, conditional teaching size and minimal curricula over a
//! small bit-tape language.
//!
//! The learner returns the first program (shortest, then lexicographic)
//! compatible with a witness set under a time bound; the teacher returns the
//! smallest witness set that makes the learner identify a concept. Libraries
//! of previously learned programs extend the language with `@` calls, which
//! can shrink or grow teaching sizes; the curriculum search finds an order of
//! teaching that minimises the total.

pub mod bits;
pub mod book_file;
pub mod codec;
pub mod conditional;
pub mod curriculum;
pub mod error;
pub mod interposition;
pub mod lang;
pub mod par;
pub mod params;
pub mod protocol;
pub mod universe;

pub use bits::BitString;
pub use codec::{Example, ExampleSet};
pub use conditional::Library;
pub use error::Error;
pub use lang::{LanguageContext, Program};
pub use par::Parallelism;
pub use params::Params;
pub use protocol::{Engine, TeachingBook};
pub use universe::Signature;
