//! Reflectionless matrix Schrödinger operators with finite-band spectra.
//!
//! Constructs the constant (one band) and elliptic (two band) families,
//! evaluates their Weyl matrices and pencils, and checks the identities
//! that tie them together.

pub mod branch;
pub mod elliptic;
pub mod error;
pub mod flow;
pub mod floquet;
pub mod jet;
pub mod kdv;
pub mod linalg;
pub mod ode;
pub mod pencil;
pub mod poly;
pub mod potential;
pub mod quadrature;
pub mod tolerances;
pub mod weyl;

pub use branch::{BandStructure, Side};
pub use elliptic::EllipticCurve;
pub use error::{Error, Result};
pub use linalg::{CMatrix, SpectralDecomposition};
pub use pencil::{MatrixPencil, PencilQuadruple};
pub use potential::{HochstadtSpec, Potential, PotentialProfile};
pub use tolerances::Tolerances;
pub use weyl::{Divisor, WeylData};
