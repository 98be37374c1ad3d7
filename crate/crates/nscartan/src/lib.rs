//! Desk-scale verification of the finite computations behind uniformity
//! bounds for rational points on nonsplit-Cartan-type modular curves:
//! subgroup structure in `GL_2(F_p)`, cusp combinatorics and cuspidal
//! divisor orders, Siegel-unit `q`-expansions with exact cyclotomic
//! coefficients, and the contraction/threshold estimates that turn unit
//! bounds into a height bound for the `j`-invariant.
//!
//! Everything here recomputes its target from first principles at small
//! size; closed-form claims are checked against the enumeration rather
//! than assumed. Where a published closed form disagrees with the
//! enumeration, the discrepancy ledger in [`report`] records both values.

pub mod cusps;
pub mod cyclo;
pub mod fp;
pub mod gl2;
pub mod par;
pub mod qexp;
pub mod report;
pub mod runge;
pub mod units;

pub use fp::{Fp2, PrimeContext};
pub use gl2::{build_subgroup, closure, Mat2, Subgroup, SubgroupKind};
pub use qexp::QExp;
pub use units::{Mode, OrbitLift};
