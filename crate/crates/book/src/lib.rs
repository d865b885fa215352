// mdbook cannot run snippets that depend on workspace crates, so each chapter
// is pulled in as a module doc and `cargo test --doc` runs the code blocks.
// One module per chapter keeps failures traceable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/states.md")]
pub mod states {}
#[doc = include_str!("../../../book/src/network.md")]
pub mod network {}
#[doc = include_str!("../../../book/src/protocol.md")]
pub mod protocol {}
#[doc = include_str!("../../../book/src/distillation.md")]
pub mod distillation {}
#[doc = include_str!("../../../book/src/montecarlo.md")]
pub mod montecarlo {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
