//! Field-operator models of classical, truncated SU(1,1) and vacuum-seeded
//! interferometers for polarization-rotation sensing.
//!
//! The [`algebra`] layer normal-orders ladder-operator polynomials with
//! arbitrary-precision coefficients. [`circuit`] builds the joint homodyne
//! observable `J` for each interferometer, [`metrology`] turns it into limits
//! of detection, and [`optimize`] / [`sweep`] drive parameter studies.

pub mod algebra;
pub mod circuit;
pub mod closed_form;
pub mod fock;
pub mod jones;
pub mod metrology;
pub mod optimize;
pub mod report;
pub mod scalar;
pub mod sweep;

pub use algebra::{coherent_expectation, CoherentAssignment, LadderFactor, ModeId, Monomial, OperatorExpr};
pub use circuit::{Arms, Circuit, InterferometerParams};
pub use metrology::{LodiReport, MetrologyReport};
pub use scalar::{BigComplex, Precision};
