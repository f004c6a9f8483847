//! The `book/` chapters, compiled so that every example in them stays runnable.
#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/quantum.md")]
pub mod quantum {}

#[doc = include_str!("../../../book/src/molecule.md")]
pub mod molecule {}

#[doc = include_str!("../../../book/src/nscheme.md")]
pub mod nscheme {}

#[doc = include_str!("../../../book/src/elimination.md")]
pub mod elimination {}

#[doc = include_str!("../../../book/src/decoherence.md")]
pub mod decoherence {}

#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
