//! The guide in `book/` compiled as doc-tests, one module per chapter, so a
//! failing snippet points at its chapter.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/partitions.md")]
pub mod partitions {}
#[doc = include_str!("../../../book/src/orthogonalization.md")]
pub mod orthogonalization {}
#[doc = include_str!("../../../book/src/methods.md")]
pub mod methods {}
#[doc = include_str!("../../../book/src/retention.md")]
pub mod retention {}
#[doc = include_str!("../../../book/src/preconditioning.md")]
pub mod preconditioning {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
