//! mdbook cannot run listings that depend on workspace crates, so every
//! chapter is included here and `cargo test` runs its code blocks as
//! doc-tests. One module per chapter so a failure names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/spectrum.md")]
pub mod spectrum {}
#[doc = include_str!("../../../book/src/moments.md")]
pub mod moments {}
#[doc = include_str!("../../../book/src/recovery.md")]
pub mod recovery {}
#[doc = include_str!("../../../book/src/targets.md")]
pub mod targets {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
