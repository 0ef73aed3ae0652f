//! Compiles every listing in `book/src` as a doctest, since mdbook cannot
//! link against workspace crates on its own. One module per chapter so a
//! failure points at the right file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/prediction_subspace.md")]
pub mod prediction_subspace {}

#[doc = include_str!("../../../book/src/observable_operators.md")]
pub mod observable_operators {}

#[doc = include_str!("../../../book/src/learning.md")]
pub mod learning {}

#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
