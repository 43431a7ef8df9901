//! The user guide, inlined chapter by chapter.
//!
//! The chapter sources live in `book/src/` at the workspace root and build
//! into a browsable book with `mdbook build book`. Including them here does
//! two jobs at once: the guide shows up in rustdoc next to the API it
//! explains, and — more importantly — every Rust snippet in the book runs
//! under `cargo test` as a doc-test, so the examples cannot drift from the
//! library they document.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/case-files.md")]
pub mod case_files {}

#[doc = include_str!("../../../book/src/linting.md")]
pub mod linting {}

#[doc = include_str!("../../../book/src/defeaters.md")]
pub mod defeaters {}

#[doc = include_str!("../../../book/src/weighing-evidence.md")]
pub mod weighing_evidence {}

#[doc = include_str!("../../../book/src/criticality.md")]
pub mod criticality {}

#[doc = include_str!("../../../book/src/threat-pathways.md")]
pub mod threat_pathways {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
