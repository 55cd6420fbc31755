//! Strong approximation of iterated Ito and Stratonovich integrals of
//! multiplicity 1 to 4 by multiple Fourier-Legendre and trigonometric series.
//!
//! The deterministic numerics ([`basis`], [`quadrature`], [`coeffs`],
//! [`expand`], [`diagnostics`]) are generic over [`Real`]; the simulation
//! layers ([`oracle`], [`sde`], [`rng`]) work in `f64`.

pub mod basis;
pub mod coeffs;
pub mod diagnostics;
pub mod error;
pub mod expand;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod stats;

pub use basis::{legendre_p, BasisKind, BasisSystem, Interval};
pub use coeffs::{coeff_tensor, fourier_coeff, kernel_norm_sq, trace_sum, CoeffTensor, WeightFn};
pub use error::{Error, Result};
pub use scalar::Real;

pub type Basis = BasisSystem<f64>;
pub type Coeffs = CoeffTensor<f64>;
pub type Weight = WeightFn<f64>;
pub type Table = expand::GaussianTable<f64>;
pub type Deltas = diagnostics::DeltaTable<f64>;
