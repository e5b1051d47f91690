pub mod bicoherent;
pub mod expr;
pub mod family;
pub mod grid;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod states;
pub mod testfn;
pub mod weak;

pub use bicoherent::{BcsError, BcsState, GrowthFit, Truncation};
pub use expr::{parse, Expr, ParseError};
pub use family::{NormSplit, PbsFamily};
pub use grid::{SampleGrid, DEFAULT_SEED};
pub use poly::ScaledPoly;
pub use quadrature::QuadratureSpec;
pub use report::{CheckRecord, Format, VerificationReport};
pub use states::{LadderOp, Side, StateFn};
pub use testfn::{Bump, CompactFn, TestFunction};
pub use num_complex::Complex64;
