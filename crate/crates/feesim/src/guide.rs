//! The book chapters, compiled as doc-tests.
//!
//! Each module's documentation is a chapter of the mdBook under `book/`.
//! Including the markdown here means every code block in the book is built
//! and run by `cargo test --doc`, so the book cannot drift from the API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/mechanism.md")]
pub mod mechanism_rules {}

#[doc = include_str!("../../../book/src/strategies.md")]
pub mod strategies {}

#[doc = include_str!("../../../book/src/analytics.md")]
pub mod reward_analytics {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation_protocol {}

#[doc = include_str!("../../../book/src/delay.md")]
pub mod response_time {}

#[doc = include_str!("../../../book/src/figures.md")]
pub mod figure_recipes {}
