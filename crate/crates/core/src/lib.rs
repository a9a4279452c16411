//! Plane-sphere Casimir free energy for perfect reflectors beyond the
//! proximity-force approximation (PFA).
//!
//! Everything physical is computed in the dimensionless controls
//! x = L/R (aspect ratio) and tau = L/lambda_T (reduced temperature),
//! with energies reported per k_BT or per hbar*c/L. SI conversion is a
//! thin layer in [`config`].
//!
//! Module map:
//! - [`config`]: geometry/thermal records, physical constants, unit conversion
//! - [`specfun`]: E1, K1, Li3, zeta(3), Bernoulli numbers, the multipole sum A(y)
//! - [`quad`]: adaptive Gauss-Kronrod quadrature and Gauss-Legendre nodes
//! - [`spa`]: generic LO/NTLO saddle-point (Laplace) expansion of g*exp(-R f)
//! - [`perfreq`]: per-Matsubara-frequency round-trip traces and free energies
//! - [`zerofreq`]: zero-frequency TE Nystrom solver and asymptotic forms
//! - [`thermo`]: Matsubara assembly, thermal correction Delta, NTLO entropy
//! - [`report`]: the cross-validation check suite used by the CLI

pub mod config;
pub mod error;
pub mod perfreq;
pub mod quad;
pub mod report;
pub mod spa;
pub mod specfun;
pub mod thermo;
pub mod zerofreq;

pub use config::{EnergyBreakdown, EnergyUnit, Geometry, SpectralPoint, Thermal};
pub use error::{Error, Result};
