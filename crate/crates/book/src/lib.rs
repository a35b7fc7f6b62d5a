//! Compiles every snippet in `book/src` as a doctest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/decisions.md")]
pub mod decisions {}

#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}

#[doc = include_str!("../../../book/src/difficulty.md")]
pub mod difficulty {}

#[doc = include_str!("../../../book/src/cascade.md")]
pub mod cascade {}

#[doc = include_str!("../../../book/src/selection.md")]
pub mod selection {}

#[doc = include_str!("../../../book/src/report.md")]
pub mod report {}

#[doc = include_str!("../../../book/src/gateway.md")]
pub mod gateway {}
