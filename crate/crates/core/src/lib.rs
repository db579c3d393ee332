//! Topic map engine.
//!
//! A topic map is a network of *topics* (proxies for real-world subjects)
//! linked by typed n-ary *associations* and tied into resource space by
//! *occurrences*; names and occurrences can be *scoped* to the contexts in
//! which they are valid. This crate provides the in-memory model, an
//! XTM 1.0 interchange subset (parser and canonical serializer), subject-
//! identity merging with deduplication and an isomorphism oracle, a
//! structural validator, a small conjunctive query language with
//! association traversal, and an inverted-index retrieval layer over topic
//! names. The `tmctl` binary exposes all of it on the command line.

pub mod error;
pub mod export;
pub mod index;
pub mod iri;
pub mod merge;
pub mod model;
pub mod query;
pub mod validate;
pub mod xtm;

pub use error::{Error, Result};
pub use iri::Iri;
pub use model::{
    AssocHandle, Association, EmptyScopeNote, Member, Name, Occurrence, Players, ResourceLink,
    Scope, Topic, TopicMap, TopicRef,
};
