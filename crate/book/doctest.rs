// mdbook cannot run listings that depend on workspace crates, so every
// chapter is pulled in here as a module doc and `cargo test` checks the
// listings as doctests. One module per chapter, so a failure names its
// chapter.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/layers.md")]
pub mod layers {}
#[doc = include_str!("src/refraction.md")]
pub mod refraction {}
#[doc = include_str!("src/inversion.md")]
pub mod inversion {}
#[doc = include_str!("src/montecarlo.md")]
pub mod montecarlo {}
#[doc = include_str!("src/sfcw.md")]
pub mod sfcw {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
