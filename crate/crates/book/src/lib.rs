//! Every chapter of the guide in `book/src`, plus the README, is included
//! here as a module, so `cargo test --doc -p keypos-book` runs its code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/data-model.md")]
pub mod data_model {}
#[doc = include_str!("../../../book/src/preprocessing.md")]
pub mod preprocessing {}
#[doc = include_str!("../../../book/src/gist.md")]
pub mod gist {}
#[doc = include_str!("../../../book/src/ldb.md")]
pub mod ldb {}
#[doc = include_str!("../../../book/src/bow.md")]
pub mod bow {}
#[doc = include_str!("../../../book/src/localization.md")]
pub mod localization {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
