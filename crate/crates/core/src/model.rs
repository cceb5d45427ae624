//! System definition shared by all solver modules: the matrices of the
//! coupled parametric-oscillator equation
//!
//! ```text
//! u'' + [A - 2 Q2 cos 2t - 2 Q4 cos 4t] u = G + 2 F cos 2t
//! ```
//!
//! with `A`, `Q2`, `Q4` real symmetric `f x f` matrices and `G`, `F`
//! constant drive vectors. Inputs are validated once; after that the
//! spec is immutable and freely shareable across threads.

use crate::error::{Error, Result};
use crate::{DMat, DVec};

/// Absolute symmetry tolerance. Inputs are user-typed constants, so a
/// near-miss indicates a bug rather than measurement noise.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Validated description of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    f: usize,
    a: DMat,
    q2: DMat,
    q4: DMat,
    g: DVec,
    f_cos: DVec,
}

impl SystemSpec {
    /// Build and validate a homogeneous single-cosine system.
    pub fn new(a: DMat, q2: DMat) -> Result<Self> {
        let f = a.nrows();
        let spec = SystemSpec {
            f,
            a,
            q2,
            q4: DMat::zeros(f, f),
            g: DVec::zeros(f),
            f_cos: DVec::zeros(f),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Add a `2 cos 4t` stiffness term (double-cosine system).
    pub fn with_q4(mut self, q4: DMat) -> Result<Self> {
        self.q4 = q4;
        self.validate()?;
        Ok(self)
    }

    /// Add inhomogeneous drive terms `G + 2 F cos 2t`.
    pub fn with_drive(mut self, g: Option<DVec>, f_cos: Option<DVec>) -> Result<Self> {
        if let Some(g) = g {
            self.g = g;
        }
        if let Some(f_cos) = f_cos {
            self.f_cos = f_cos;
        }
        self.validate()?;
        Ok(self)
    }

    /// Re-check every invariant. Nothing is symmetrized silently; a spec
    /// that validates once validates identically forever.
    pub fn validate(&self) -> Result<()> {
        if self.f == 0 {
            return Err(Error::NonPositiveDimension);
        }
        for (name, m) in [("A", &self.a), ("Q2", &self.q2), ("Q4", &self.q4)] {
            if m.nrows() != self.f || m.ncols() != self.f {
                return Err(Error::DimensionMismatch {
                    name,
                    expected: self.f,
                    found: m.nrows().max(m.ncols()),
                });
            }
            let asym = max_asymmetry(m);
            if asym > SYMMETRY_TOL {
                return Err(Error::AsymmetricMatrix {
                    name,
                    max_asymmetry: asym,
                });
            }
        }
        for (name, v) in [("G", &self.g), ("F", &self.f_cos)] {
            if v.len() != self.f {
                return Err(Error::DimensionMismatch {
                    name,
                    expected: self.f,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.f
    }

    pub fn a(&self) -> &DMat {
        &self.a
    }

    pub fn q2(&self) -> &DMat {
        &self.q2
    }

    pub fn q4(&self) -> &DMat {
        &self.q4
    }

    pub fn g(&self) -> &DVec {
        &self.g
    }

    pub fn f_cos(&self) -> &DVec {
        &self.f_cos
    }

    pub fn has_q4(&self) -> bool {
        self.q4.iter().any(|&x| x != 0.0)
    }

    pub fn has_drive(&self) -> bool {
        self.g.iter().any(|&x| x != 0.0) || self.f_cos.iter().any(|&x| x != 0.0)
    }

    /// Time-dependent stiffness `K(t) = A - 2 Q2 cos 2t - 2 Q4 cos 4t`.
    pub fn stiffness(&self, t: f64) -> DMat {
        let mut k = self.a.clone();
        k -= &self.q2 * (2.0 * (2.0 * t).cos());
        if self.has_q4() {
            k -= &self.q4 * (2.0 * (4.0 * t).cos());
        }
        k
    }

    /// Drive vector `G + 2 F cos 2t`.
    pub fn drive(&self, t: f64) -> DVec {
        &self.g + &self.f_cos * (2.0 * (2.0 * t).cos())
    }
}

/// Validate a raw spec, returning it unchanged when all invariants hold.
pub fn validate_system(raw: SystemSpec) -> Result<SystemSpec> {
    raw.validate()?;
    Ok(raw)
}

fn max_asymmetry(m: &DMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Numerical control knobs shared by the solver modules.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Starting Fourier cutoff N for the continued-inversion chains.
    pub truncation_order: usize,
    /// Relative-change threshold for the adaptive depth doubling.
    pub convergence_tol: f64,
    /// Bisection width for exponent roots.
    pub root_tol: f64,
    /// Residual bound for canonical identity checks.
    pub identity_tol: f64,
    /// Integration substeps per period for the direct oracle.
    pub oracle_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            truncation_order: 8,
            convergence_tol: 1e-12,
            root_tol: 1e-12,
            identity_tol: 1e-9,
            oracle_steps: 4096,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if self.truncation_order < 3 {
            return Err(Error::InvalidTolerance("truncation_order must be >= 3"));
        }
        for (value, name) in [
            (self.convergence_tol, "convergence_tol must be positive"),
            (self.root_tol, "root_tol must be positive"),
            (self.identity_tol, "identity_tol must be positive"),
        ] {
            if value.is_nan() || value <= 0.0 {
                return Err(Error::InvalidTolerance(name));
            }
        }
        if self.oracle_steps == 0 {
            return Err(Error::InvalidTolerance("oracle_steps must be positive"));
        }
        Ok(())
    }
}
