//! Solver for linearly coupled Mathieu and double-cosine Hill equations.
//!
//! The crate finds the stable Floquet modes of
//!
//! ```text
//! u'' + [A - 2 Q2 cos 2t - 2 Q4 cos 4t] u = G + 2 F cos 2t
//! ```
//!
//! by an expansion in continued matrix inversions, assembles the canonical
//! (Floquet-Lyapunov) transformation that decouples the motion into
//! constant-frequency oscillators, computes the driven periodic response,
//! and evaluates the quantum coherent- and number-state wavefunctions
//! built on the decoupled modes. A direct fixed-step integration of the
//! matrizant serves as the independent oracle throughout.

pub mod continued;
pub mod error;
pub mod inhom;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod quantum;
pub mod transform;

pub use error::{Error, Result};

pub type DMat = nalgebra::DMatrix<f64>;
pub type DVec = nalgebra::DVector<f64>;
pub type CMat = nalgebra::DMatrix<num_complex::Complex64>;
pub type CVec = nalgebra::DVector<num_complex::Complex64>;

pub use num_complex::Complex64;
