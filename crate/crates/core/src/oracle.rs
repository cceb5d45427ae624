//! Brute-force Floquet reference: integrates the matrizant directly with a
//! fixed-step classical 4th-order scheme, extracts the monodromy matrix,
//! multipliers and characteristic exponents, and classifies stability.
//!
//! Everything here is deliberately independent of the continued-inversion
//! solver; it is the oracle the analytic results are tested against.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SystemSpec;
use crate::{CMat, DMat, DVec};

/// Eigenvector condition-number bound beyond which the monodromy is treated
/// as defective (a parametric-resonance boundary).
pub const DEFECTIVE_COND: f64 = 1e8;

/// Phase-space coefficient matrix of the first-order form `phi' = Pi(t) phi`:
/// zero blocks on the diagonal, identity top-right, `-K(t)` bottom-left.
pub fn pi_matrix(t: f64, spec: &SystemSpec) -> DMat {
    let f = spec.dof();
    let mut m = DMat::zeros(2 * f, 2 * f);
    for i in 0..f {
        m[(i, f + i)] = 1.0;
    }
    let k = spec.stiffness(t);
    for i in 0..f {
        for j in 0..f {
            m[(f + i, j)] = -k[(i, j)];
        }
    }
    m
}

/// Integrate the matrizant `Phi' = Pi(t) Phi`, `Phi(0) = 1`, to `t_end`
/// with the given number of fixed steps.
pub fn integrate_matrizant(spec: &SystemSpec, t_end: f64, steps: usize) -> Result<DMat> {
    assert!(steps >= 64, "matrizant integration needs at least 64 steps");
    let f = spec.dof();
    let phi = DMat::identity(2 * f, 2 * f);
    if t_end == 0.0 {
        return Ok(phi);
    }
    let phi = rk4(phi, t_end, steps, |t, m| pi_matrix(t, spec) * m);
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteResult { t: t_end });
    }
    Ok(phi)
}

/// Integrate a single phase-space state including the drive terms of the
/// spec (which are zero for a homogeneous system).
pub fn integrate_state(spec: &SystemSpec, phi0: &DVec, t_end: f64, steps: usize) -> Result<DVec> {
    assert!(steps >= 64, "state integration needs at least 64 steps");
    let f = spec.dof();
    assert_eq!(phi0.len(), 2 * f, "state must have 2f components");
    if t_end == 0.0 {
        return Ok(phi0.clone());
    }
    let driven = spec.has_drive();
    let phi = rk4(phi0.clone(), t_end, steps, |t, v| {
        let mut dv = pi_matrix(t, spec) * v;
        if driven {
            let d = spec.drive(t);
            for i in 0..f {
                dv[f + i] += d[i];
            }
        }
        dv
    });
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteResult { t: t_end });
    }
    Ok(phi)
}

fn rk4<S, F>(mut y: S, t_end: f64, steps: usize, deriv: F) -> S
where
    S: Clone
        + std::ops::Add<S, Output = S>
        + std::ops::Mul<f64, Output = S>
        + std::ops::AddAssign<S>,
    F: Fn(f64, &S) -> S,
{
    let h = t_end / steps as f64;
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = deriv(t, &y);
        let k2 = deriv(t + 0.5 * h, &(y.clone() + k1.clone() * (0.5 * h)));
        let k3 = deriv(t + 0.5 * h, &(y.clone() + k2.clone() * (0.5 * h)));
        let k4 = deriv(t + h, &(y.clone() + k3.clone() * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}

/// Spectral data of a monodromy matrix.
#[derive(Debug, Clone)]
pub struct FloquetDecomposition {
    /// The monodromy matrix, stored complex for uniform eigen-handling.
    pub monodromy: CMat,
    /// Multipliers sorted by descending modulus, ties by ascending argument.
    pub multipliers: Vec<Complex64>,
    /// Exponents `beta = ln(lambda) / (i pi)` on the principal branch.
    pub exponents: Vec<Complex64>,
    /// Eigenvectors, one column per multiplier.
    pub eigvecs: CMat,
}

/// Diagonalize a (real) monodromy matrix.
pub fn floquet_decompose(monodromy: &DMat) -> Result<FloquetDecomposition> {
    let eigs = monodromy.complex_eigenvalues();
    let mut lambdas: Vec<Complex64> = eigs.iter().copied().collect();
    sort_multipliers(&mut lambdas);

    let mc = linalg::complexify(monodromy);
    let eigvecs = eigenvectors_for(&mc, &lambdas)?;
    let cond = linalg::cond_svd_complex(&eigvecs);
    if !cond.is_finite() || cond > DEFECTIVE_COND {
        return Err(Error::DefectiveMonodromy { cond });
    }

    let exponents = lambdas
        .iter()
        .map(|l| {
            // ln(lambda)/(i pi) with the principal branch of the logarithm
            let ln = Complex64::new(l.norm().ln(), l.arg());
            ln / Complex64::new(0.0, PI)
        })
        .collect();

    Ok(FloquetDecomposition {
        monodromy: mc,
        multipliers: lambdas,
        exponents,
        eigvecs,
    })
}

// Eigenvectors grouped by (near-)repeated multipliers so that semisimple
// degenerate spectra still yield a well-conditioned eigenbasis. A group
// whose candidate vectors fail the eigen-equation exposes a Jordan block.
fn eigenvectors_for(mc: &CMat, lambdas: &[Complex64]) -> Result<CMat> {
    let n = mc.nrows();
    let scale = 1.0 + linalg::max_abs_complex(mc);
    let mut cols: Vec<crate::CVec> = Vec::with_capacity(n);
    let mut i = 0;
    while i < lambdas.len() {
        let mut j = i + 1;
        while j < lambdas.len()
            && (lambdas[j] - lambdas[i]).norm() <= 1e-8 * (1.0 + lambdas[i].norm())
        {
            j += 1;
        }
        let mult = j - i;
        let mean = lambdas[i..j].iter().sum::<Complex64>() / mult as f64;
        let shifted = mc - CMat::identity(n, n) * mean;
        let vecs = linalg::smallest_right_singular_vectors(&shifted, mult);
        for v in &vecs {
            let residual = (&shifted * v).norm();
            if residual > 1e-6 * scale {
                return Err(Error::DefectiveMonodromy {
                    cond: f64::INFINITY,
                });
            }
        }
        cols.extend(vecs);
        i = j;
    }
    Ok(CMat::from_columns(&cols))
}

fn sort_multipliers(lambdas: &mut [Complex64]) {
    // descending |lambda| quantized to 1e-9, ties by ascending arg in [0, 2pi)
    lambdas.sort_by(|a, b| {
        let qa = (a.norm() / 1e-9).round() as i64;
        let qb = (b.norm() / 1e-9).round() as i64;
        qb.cmp(&qa).then_with(|| {
            let arg = |z: &Complex64| {
                let mut th = z.arg();
                if th < 0.0 {
                    th += 2.0 * PI;
                }
                th
            };
            arg(a).partial_cmp(&arg(b)).unwrap()
        })
    });
}

/// Stability class of the periodic system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    Stable,
    Unstable,
    Marginal,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StabilityClass::Stable => "Stable",
            StabilityClass::Unstable => "Unstable",
            StabilityClass::Marginal => "Marginal",
        };
        f.write_str(s)
    }
}

impl FloquetDecomposition {
    /// `|det monodromy - 1|`; the symplectic flow pins the determinant to one.
    pub fn det_residual(&self) -> f64 {
        let det = nalgebra::linalg::LU::new(self.monodromy.clone()).determinant();
        (det - Complex64::new(1.0, 0.0)).norm()
    }
}

/// Largest multiplier modulus.
pub fn max_multiplier_modulus(dec: &FloquetDecomposition) -> f64 {
    dec.multipliers.iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Minimum distance of `arg(lambda)/pi` to the nearest integer, over all
/// multipliers. Zero for a multiplier at +-1, i.e. an integral exponent.
pub fn min_exponent_integer_distance(dec: &FloquetDecomposition) -> f64 {
    dec.multipliers
        .iter()
        .map(|l| {
            let beta = l.arg() / PI;
            (beta - beta.round()).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Classify stability with the given margin.
///
/// Stable requires every multiplier on the unit circle within `margin`
/// and every exponent farther than `margin` from an integer; any
/// multiplier with modulus above `1 + margin` is Unstable; everything in
/// between (integral exponents included) is Marginal.
pub fn classify_stability(dec: &FloquetDecomposition, margin: f64) -> StabilityClass {
    assert!(margin > 0.0 && margin <= 0.1, "margin must lie in (0, 0.1]");
    let max_mod = max_multiplier_modulus(dec);
    if max_mod > 1.0 + margin {
        return StabilityClass::Unstable;
    }
    let circle_ok = dec
        .multipliers
        .iter()
        .all(|l| (l.norm() - 1.0).abs() <= margin);
    let integer_dist = min_exponent_integer_distance(dec);
    if circle_ok && integer_dist > margin {
        StabilityClass::Stable
    } else {
        StabilityClass::Marginal
    }
}

/// Convenience: monodromy, decomposition and class for a spec in one call.
pub fn assess_stability(
    spec: &SystemSpec,
    steps: usize,
    margin: f64,
) -> Result<(FloquetDecomposition, StabilityClass)> {
    let xi = integrate_matrizant(spec, PI, steps)?;
    let dec = floquet_decompose(&xi)?;
    let class = classify_stability(&dec, margin);
    Ok((dec, class))
}

/// The standard skew form J = [[0, -1], [1, 0]] in f-blocks.
pub fn skew_form(f: usize) -> DMat {
    let mut j = DMat::zeros(2 * f, 2 * f);
    for i in 0..f {
        j[(i, f + i)] = -1.0;
        j[(f + i, i)] = 1.0;
    }
    j
}
