//! Configuration-space wavefunctions on the decoupled modes: coherent
//! states, number states (through multidimensional Hermite polynomials),
//! their driven-system counterparts, and finite-difference residuals of
//! the time-dependent Schroedinger equation as a self-test.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::inhom::PeriodicResponse;
use crate::linalg;
use crate::model::SystemSpec;
use crate::transform::FLTransform;
use crate::{CMat, CVec, DVec};

/// Largest single-mode occupation number.
pub const MAX_OCCUPATION: usize = 60;
/// Largest total Hermite degree.
pub const MAX_TOTAL_DEGREE: usize = 120;

// --- multidimensional Hermite polynomials --------------------------------

/// Parameters of the Hermite family `H_n^C`: the symmetric matrix `C` and
/// the evaluation point `x`.
#[derive(Debug, Clone)]
pub struct HermiteParams {
    pub c: CMat,
    pub x: CVec,
}

impl HermiteParams {
    pub fn new(c: CMat, x: CVec) -> Self {
        debug_assert_eq!(c.nrows(), c.ncols());
        debug_assert_eq!(c.nrows(), x.len());
        HermiteParams { c, x }
    }

    /// `C = U^H U^{-t}` and `x = U^{-*} u` for a normalized transform.
    pub fn from_transform(flt: &FLTransform, u: &DVec, t: f64) -> Result<Self> {
        let u_mat = flt.u_at(t);
        let u_inv = u_mat.clone().try_inverse().ok_or(Error::SingularU {
            cond: f64::INFINITY,
        })?;
        let c = u_mat.adjoint() * u_inv.transpose();
        let x = u_inv.conjugate() * linalg::complexify_vec(u);
        Ok(HermiteParams { c, x })
    }

    /// Residuals of the structural identities: `C` symmetric and
    /// `C* C = 1`.
    pub fn identity_residuals(&self) -> (f64, f64) {
        let sym = linalg::max_abs_complex(&(&self.c - self.c.transpose()));
        let f = self.c.nrows();
        let inv = linalg::max_abs_complex(&(self.c.conjugate() * &self.c - CMat::identity(f, f)));
        (sym, inv)
    }
}

/// Evaluate `H_n^C(x)` by the recurrence
/// `H_{n+e_j} = (Cx)_j H_n - sum_k C_jk n_k H_{n-e_k}`, seeded `H_0 = 1`.
pub fn hermite_multidim(n: &[usize], params: &HermiteParams) -> Result<Complex64> {
    let f = params.c.nrows();
    assert_eq!(n.len(), f, "occupation tuple length must match dimension");
    let degree: usize = n.iter().sum();
    if degree > MAX_TOTAL_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree,
            max: MAX_TOTAL_DEGREE,
        });
    }
    let cx = &params.c * &params.x;

    // mixed-radix table over all componentwise-smaller tuples
    let dims: Vec<usize> = n.iter().map(|&k| k + 1).collect();
    let total: usize = dims.iter().product();
    let mut strides = vec![1usize; f];
    for j in 1..f {
        strides[j] = strides[j - 1] * dims[j - 1];
    }
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut m = vec![0usize; f];
        for j in 0..f {
            m[j] = idx % dims[j];
            idx /= dims[j];
        }
        m
    };

    let mut table = vec![Complex64::new(0.0, 0.0); total];
    table[0] = Complex64::new(1.0, 0.0);
    for idx in 1..total {
        let m = decode(idx);
        let j = m.iter().position(|&mj| mj > 0).unwrap();
        let prev_idx = idx - strides[j];
        let prev = decode(prev_idx);
        let mut val = cx[j] * table[prev_idx];
        for k in 0..f {
            if prev[k] > 0 {
                val -= params.c[(j, k)] * (prev[k] as f64) * table[prev_idx - strides[k]];
            }
        }
        table[idx] = val;
    }
    Ok(table[total - 1])
}

fn inv_sqrt_factorial(n: usize) -> f64 {
    if n <= 20 {
        let mut acc = 1.0f64;
        for k in 2..=n {
            acc *= k as f64;
        }
        1.0 / acc.sqrt()
    } else {
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        (-0.5 * ln_fact).exp()
    }
}

// --- states ---------------------------------------------------------------

/// Which state family to evaluate.
#[derive(Debug, Clone)]
pub enum StateKind {
    /// Coherent state with label `zeta(0)`.
    Coherent(CVec),
    /// Number state with one occupation per mode.
    Number(Vec<usize>),
}

/// A quantum state of the (possibly driven) system, tied to the system
/// spec, its normalized transform and optionally the periodic response.
#[derive(Debug, Clone)]
pub struct QuantumState<'a> {
    spec: &'a SystemSpec,
    flt: &'a FLTransform,
    kind: StateKind,
    drive: Option<&'a PeriodicResponse>,
}

impl<'a> QuantumState<'a> {
    pub fn new(spec: &'a SystemSpec, flt: &'a FLTransform, kind: StateKind) -> Result<Self> {
        match &kind {
            StateKind::Coherent(z) => {
                assert_eq!(
                    z.len(),
                    flt.dof(),
                    "coherent label length must match dimension"
                );
            }
            StateKind::Number(ns) => {
                assert_eq!(
                    ns.len(),
                    flt.dof(),
                    "occupation tuple length must match dimension"
                );
                for &n in ns {
                    if n > MAX_OCCUPATION {
                        return Err(Error::OccupationTooLarge {
                            n,
                            max: MAX_OCCUPATION,
                        });
                    }
                }
            }
        }
        Ok(QuantumState {
            spec,
            flt,
            kind,
            drive: None,
        })
    }

    /// Attach the periodic response; amplitudes then solve the driven
    /// problem via the shifted-argument construction.
    pub fn with_drive(mut self, resp: &'a PeriodicResponse) -> Self {
        self.drive = Some(resp);
        self
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn transform(&self) -> &FLTransform {
        self.flt
    }

    pub fn spec(&self) -> &SystemSpec {
        self.spec
    }

    pub fn is_driven(&self) -> bool {
        self.drive.is_some()
    }

    /// Precompute everything needed to evaluate the state at one time.
    pub fn frame(&self, t: f64) -> Result<StateFrame> {
        let mut frame = StateFrame::new(self.flt, t)?;
        if let Some(resp) = self.drive {
            frame.shift = Some(DriveShift {
                u_pi: resp.u_pi(t),
                u_pi_dot: resp.u_pi_dot(t),
                alpha: resp.alpha(t),
            });
        }
        Ok(frame)
    }

    /// Wavefunction amplitude at one configuration-space point.
    pub fn amplitude(&self, u: &DVec, t: f64) -> Result<Complex64> {
        let frame = self.frame(t)?;
        self.amplitude_in_frame(&frame, u)
    }

    /// Amplitude using a prebuilt frame (grid evaluation path).
    pub fn amplitude_in_frame(&self, frame: &StateFrame, u: &DVec) -> Result<Complex64> {
        let (x, prefactor) = match &frame.shift {
            None => (u.clone(), Complex64::new(1.0, 0.0)),
            Some(shift) => {
                let x = u - &shift.u_pi;
                let phase = shift.u_pi_dot.dot(&x) + shift.alpha;
                (x, Complex64::from_polar(1.0, phase))
            }
        };
        let base = match &self.kind {
            StateKind::Coherent(z0) => frame.coherent(z0, &x),
            StateKind::Number(ns) => frame.number(ns, &x)?,
        };
        Ok(prefactor * base)
    }

    /// Gaussian center of the probability density at time `t`.
    pub fn center(&self, t: f64) -> DVec {
        let mut c = match &self.kind {
            StateKind::Coherent(z0) => coherent_center(self.flt, z0, t),
            StateKind::Number(_) => DVec::zeros(self.flt.dof()),
        };
        if let Some(resp) = self.drive {
            c += resp.u_pi(t);
        }
        c
    }

    /// Half-width that safely contains the state along each axis: the
    /// classical turning radius plus `n_sigma` Gaussian widths.
    pub fn support_halfwidth(&self, t: f64, n_sigma: f64) -> Result<DVec> {
        let frame = self.frame(t)?;
        let extent = match &self.kind {
            StateKind::Coherent(_) => 1.0,
            StateKind::Number(ns) => {
                let top = ns.iter().copied().max().unwrap_or(0) as f64;
                (2.0 * top + 1.0).sqrt()
            }
        };
        Ok(frame.axis_sigmas() * (n_sigma + extent))
    }
}

struct DriveShift {
    u_pi: DVec,
    u_pi_dot: DVec,
    alpha: f64,
}

/// Cached per-time quantities for wavefunction evaluation.
pub struct StateFrame {
    t: f64,
    f: usize,
    betas: DVec,
    u_mat: CMat,
    /// `(U^t)^{-1}`
    u_inv_t: CMat,
    /// `U^{-t} V^t`, the Gaussian quadratic form
    gauge: CMat,
    /// `(U^*)^{-1}`
    u_inv_conj: CMat,
    /// `C = U^H U^{-t}`
    c_mat: CMat,
    /// `(2 pi)^{-f/4} det(U U^H)^{-1/4}`
    abs_norm: f64,
    arg_det_u: f64,
    shift: Option<DriveShift>,
}

impl StateFrame {
    pub fn new(flt: &FLTransform, t: f64) -> Result<Self> {
        let f = flt.dof();
        let u_mat = flt.u_at(t);
        let sv = linalg::singular_values_complex(&u_mat);
        let cond = sv[0] / sv[f - 1];
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::SingularU { cond });
        }
        let v_mat = flt.v_at(t);
        let u_inv = u_mat.clone().try_inverse().ok_or(Error::SingularU {
            cond: f64::INFINITY,
        })?;
        let u_inv_t = u_inv.transpose();
        let gauge = &u_inv_t * v_mat.transpose();
        let u_inv_conj = u_inv.conjugate();
        let c_mat = u_mat.adjoint() * &u_inv_t;
        // det(U U^H)^{-1/4} from singular values, always positive real
        let abs_norm = (2.0 * std::f64::consts::PI).powf(-(f as f64) / 4.0)
            * sv.iter().map(|s| 1.0 / s.sqrt()).product::<f64>();
        Ok(StateFrame {
            t,
            f,
            betas: flt.betas().clone(),
            u_mat,
            u_inv_t,
            gauge,
            u_inv_conj,
            c_mat,
            abs_norm,
            arg_det_u: flt.arg_det_u(t),
            shift: None,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn arg_det_u(&self) -> f64 {
        self.arg_det_u
    }

    /// `|N| = (2 pi)^{-f/4} det(U U^H)^{-1/4}`.
    pub fn abs_norm(&self) -> f64 {
        self.abs_norm
    }

    pub fn c_matrix(&self) -> &CMat {
        &self.c_mat
    }

    /// Per-axis Gaussian widths of the density `|psi|^2`, which falls off
    /// as `exp{-u^t (U U^H)^{-1} u / 2}` for the ground state.
    pub fn axis_sigmas(&self) -> DVec {
        let uuh = &self.u_mat * self.u_mat.adjoint();
        DVec::from_iterator(self.f, (0..self.f).map(|j| uuh[(j, j)].re.sqrt()))
    }

    /// Smallest principal Gaussian width.
    pub fn sigma_min(&self) -> f64 {
        let sv = linalg::singular_values_complex(&self.u_mat);
        sv[self.f - 1]
    }

    fn gaussian_exponent(&self, u: &DVec) -> Complex64 {
        let uc = linalg::complexify_vec(u);
        (uc.transpose() * &self.gauge * &uc)[(0, 0)] * Complex64::new(0.0, 0.5)
    }

    /// Coherent-state amplitude with label `zeta(0)` at the frame time.
    /// States carry the exponential normalization `<z|z'> = e^{z* . z'}`,
    /// so the squared norm is `e^{|zeta(0)|^2}`, not one.
    pub fn coherent(&self, zeta0: &CVec, u: &DVec) -> Complex64 {
        let zeta_t = CVec::from_iterator(
            self.f,
            zeta0
                .iter()
                .zip(self.betas.iter())
                .map(|(z, b)| z * Complex64::from_polar(1.0, -b * self.t)),
        );
        let beta_sum: f64 = self.betas.iter().sum();
        let phase = -0.5 * beta_sum * self.t - 0.5 * self.arg_det_u;
        let uc = linalg::complexify_vec(u);
        let linear = (uc.transpose() * &self.u_inv_t * &zeta_t)[(0, 0)];
        let quad_z = (zeta_t.transpose() * &self.c_mat * &zeta_t)[(0, 0)];
        Complex64::from_polar(self.abs_norm, phase)
            * (self.gaussian_exponent(u) + linear - quad_z * 0.5).exp()
    }

    /// Number-state amplitude at the frame time.
    pub fn number(&self, ns: &[usize], u: &DVec) -> Result<Complex64> {
        let params = HermiteParams::new(
            self.c_mat.clone(),
            &self.u_inv_conj * linalg::complexify_vec(u),
        );
        let h = hermite_multidim(ns, &params)?;
        let c_n: f64 = ns.iter().map(|&n| inv_sqrt_factorial(n)).product();
        let phase: f64 = -self
            .betas
            .iter()
            .zip(ns.iter())
            .map(|(b, &n)| (n as f64 + 0.5) * b * self.t)
            .sum::<f64>()
            - 0.5 * self.arg_det_u;
        Ok(Complex64::from_polar(self.abs_norm * c_n, phase) * self.gaussian_exponent(u).exp() * h)
    }
}

/// Expectation of the coordinates in a coherent state: `2 Re(U* zeta(t))`.
pub fn coherent_center(flt: &FLTransform, zeta0: &CVec, t: f64) -> DVec {
    let f = flt.dof();
    let u = flt.u_at(t);
    let zeta_t = CVec::from_iterator(
        f,
        zeta0
            .iter()
            .zip(flt.betas().iter())
            .map(|(z, b)| z * Complex64::from_polar(1.0, -b * t)),
    );
    let w = u.conjugate() * zeta_t;
    DVec::from_iterator(f, w.iter().map(|z| 2.0 * z.re))
}

/// Coherent-state wavefunction of the homogeneous system.
pub fn coherent_wavefunction(
    spec: &SystemSpec,
    flt: &FLTransform,
    zeta0: &CVec,
    u: &DVec,
    t: f64,
) -> Result<Complex64> {
    QuantumState::new(spec, flt, StateKind::Coherent(zeta0.clone()))?.amplitude(u, t)
}

/// Number-state wavefunction of the homogeneous system.
pub fn number_wavefunction(
    spec: &SystemSpec,
    flt: &FLTransform,
    ns: &[usize],
    u: &DVec,
    t: f64,
) -> Result<Complex64> {
    QuantumState::new(spec, flt, StateKind::Number(ns.to_vec()))?.amplitude(u, t)
}

/// Driven-system wavefunction: phase factor times the undriven state at
/// the shifted argument.
pub fn driven_wavefunction(state: &QuantumState, u: &DVec, t: f64) -> Result<Complex64> {
    state.amplitude(u, t)
}

/// Max finite-difference residual of the Schroedinger equation over the
/// given points, normalized by the largest amplitude seen.
pub fn schrodinger_residual(
    state: &QuantumState,
    u_points: &[DVec],
    t: f64,
    h_t: f64,
    h_u: f64,
) -> Result<f64> {
    let frame_0 = state.frame(t)?;
    let sigma_min = frame_0.sigma_min();
    if h_u > sigma_min / 20.0 {
        return Err(Error::GridTooCoarse {
            h: h_u,
            required: sigma_min / 20.0,
        });
    }
    let frame_p = state.frame(t + h_t)?;
    let frame_m = state.frame(t - h_t)?;
    let f = state.flt.dof();
    let k_t = state.spec.stiffness(t);
    let drive_t = if state.is_driven() {
        Some(state.spec.drive(t))
    } else {
        None
    };

    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for u in u_points {
        let psi = state.amplitude_in_frame(&frame_0, u)?;
        peak = peak.max(psi.norm());
        let dpsi_dt = (state.amplitude_in_frame(&frame_p, u)?
            - state.amplitude_in_frame(&frame_m, u)?)
            / Complex64::new(2.0 * h_t, 0.0);
        let mut laplacian = Complex64::new(0.0, 0.0);
        for j in 0..f {
            let mut up = u.clone();
            up[j] += h_u;
            let mut dn = u.clone();
            dn[j] -= h_u;
            laplacian += (state.amplitude_in_frame(&frame_0, &up)?
                + state.amplitude_in_frame(&frame_0, &dn)?
                - psi * 2.0)
                / Complex64::new(h_u * h_u, 0.0);
        }
        let mut potential = 0.5 * u.dot(&(&k_t * u));
        if let Some(d) = &drive_t {
            potential -= d.dot(u);
        }
        let h_psi = laplacian * (-0.5) + psi * potential;
        let residual = (Complex64::new(0.0, 1.0) * dpsi_dt - h_psi).norm();
        worst = worst.max(residual);
    }
    if peak == 0.0 {
        return Ok(0.0);
    }
    Ok(worst / peak)
}

// --- quadrature -----------------------------------------------------------

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for k in 0..m {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = if n == 1 {
                1.0
            } else {
                n as f64 * (x * p1 - p0) / (x * x - 1.0)
            };
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    (nodes, weights)
}

/// `<a|b>` by tensor-product Gauss-Legendre quadrature (supported for one
/// and two degrees of freedom).
pub fn overlap_quadrature(
    a: &QuantumState,
    b: &QuantumState,
    t: f64,
    nodes_per_axis: usize,
) -> Result<Complex64> {
    let f = a.flt.dof();
    assert!(
        f <= 2,
        "quadrature self-tests support up to two degrees of freedom"
    );
    let frame_a = a.frame(t)?;
    let frame_b = b.frame(t)?;

    let center_a = a.center(t);
    let center_b = b.center(t);
    let hw_a = a.support_halfwidth(t, 8.0)?;
    let hw_b = b.support_halfwidth(t, 8.0)?;
    let mut center = DVec::zeros(f);
    let mut halfwidth = DVec::zeros(f);
    for j in 0..f {
        center[j] = 0.5 * (center_a[j] + center_b[j]);
        halfwidth[j] = (hw_a[j] + (center_a[j] - center[j]).abs())
            .max(hw_b[j] + (center_b[j] - center[j]).abs());
    }

    let (xs, ws) = gauss_legendre(nodes_per_axis);
    let mut acc = Complex64::new(0.0, 0.0);
    if f == 1 {
        for (x, w) in xs.iter().zip(ws.iter()) {
            let u = DVec::from_vec(vec![center[0] + halfwidth[0] * x]);
            let va = a.amplitude_in_frame(&frame_a, &u)?;
            let vb = b.amplitude_in_frame(&frame_b, &u)?;
            acc += va.conj() * vb * w;
        }
        acc *= Complex64::new(halfwidth[0], 0.0);
    } else {
        for (x0, w0) in xs.iter().zip(ws.iter()) {
            for (x1, w1) in xs.iter().zip(ws.iter()) {
                let u = DVec::from_vec(vec![
                    center[0] + halfwidth[0] * x0,
                    center[1] + halfwidth[1] * x1,
                ]);
                let va = a.amplitude_in_frame(&frame_a, &u)?;
                let vb = b.amplitude_in_frame(&frame_b, &u)?;
                acc += va.conj() * vb * (w0 * w1);
            }
        }
        acc *= Complex64::new(halfwidth[0] * halfwidth[1], 0.0);
    }
    Ok(acc)
}

/// `integral |psi|^2` by quadrature.
pub fn norm_quadrature(state: &QuantumState, t: f64, nodes_per_axis: usize) -> Result<f64> {
    Ok(overlap_quadrature(state, state, t, nodes_per_axis)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continued::build_mode_set;
    use crate::model::Tolerances;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    fn harmonic(beta: f64) -> (SystemSpec, FLTransform) {
        let spec = SystemSpec::new(dmatrix![beta * beta], dmatrix![0.0]).unwrap();
        let tol = Tolerances::default();
        let flt = FLTransform::new(build_mode_set(&spec, &tol).unwrap(), &tol).unwrap();
        (spec, flt)
    }

    #[test]
    fn hermite_order_zero_is_one() {
        let params = HermiteParams::new(
            CMat::identity(2, 2),
            CVec::from_vec(vec![Complex64::new(0.3, 0.0), Complex64::new(-1.2, 0.0)]),
        );
        let h = hermite_multidim(&[0, 0], &params).unwrap();
        assert_abs_diff_eq!(h.re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hermite_scalar_c2_is_physicists() {
        for x in [-1.3, 0.2, 2.4] {
            let params = HermiteParams::new(
                CMat::from_element(1, 1, Complex64::new(2.0, 0.0)),
                CVec::from_vec(vec![Complex64::new(x, 0.0)]),
            );
            let h1 = hermite_multidim(&[1], &params).unwrap();
            let h2 = hermite_multidim(&[2], &params).unwrap();
            let h3 = hermite_multidim(&[3], &params).unwrap();
            assert_abs_diff_eq!(h1.re, 2.0 * x, epsilon = 1e-12);
            assert_abs_diff_eq!(h2.re, 4.0 * x * x - 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(h3.re, 8.0 * x * x * x - 12.0 * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_low_degree_matches_derivative_formulas() {
        // closed forms from differentiating exp(-x^t C x / 2):
        //   H_{e_j} = (Cx)_j
        //   H_{e_j + e_k} = (Cx)_j (Cx)_k - C_jk
        //   H_{e_i+e_j+e_k} = prod - C_ij (Cx)_k - C_ik (Cx)_j - C_jk (Cx)_i
        let c = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.1, 0.3),
                Complex64::new(-0.2, 0.1),
                Complex64::new(-0.2, 0.1),
                Complex64::new(0.8, -0.4),
            ],
        );
        let x = CVec::from_vec(vec![Complex64::new(0.7, -0.2), Complex64::new(-0.3, 0.5)]);
        let params = HermiteParams::new(c.clone(), x.clone());
        let cx = &c * &x;

        let h10 = hermite_multidim(&[1, 0], &params).unwrap();
        assert!((h10 - cx[0]).norm() < 1e-12);

        let h11 = hermite_multidim(&[1, 1], &params).unwrap();
        assert!((h11 - (cx[0] * cx[1] - c[(0, 1)])).norm() < 1e-12);

        let h20 = hermite_multidim(&[2, 0], &params).unwrap();
        assert!((h20 - (cx[0] * cx[0] - c[(0, 0)])).norm() < 1e-12);

        let h21 = hermite_multidim(&[2, 1], &params).unwrap();
        let expect =
            cx[0] * cx[0] * cx[1] - c[(0, 0)] * cx[1] - c[(0, 1)] * cx[0] - c[(0, 1)] * cx[0];
        assert!((h21 - expect).norm() < 1e-12);

        let h30 = hermite_multidim(&[3, 0], &params).unwrap();
        let expect = cx[0] * cx[0] * cx[0] - c[(0, 0)] * cx[0] * 3.0;
        assert!((h30 - expect).norm() < 1e-12);
    }

    #[test]
    fn hermite_degree_guard() {
        let params = HermiteParams::new(
            CMat::identity(1, 1),
            CVec::from_vec(vec![Complex64::new(0.0, 0.0)]),
        );
        assert!(matches!(
            hermite_multidim(&[121], &params),
            Err(Error::DegreeTooLarge { .. })
        ));
    }

    #[test]
    fn hermite_params_identities_hold_for_transform() {
        let spec = SystemSpec::new(dmatrix![0.5], dmatrix![0.2]).unwrap();
        let tol = Tolerances::default();
        let flt = FLTransform::new(build_mode_set(&spec, &tol).unwrap(), &tol).unwrap();
        let params = HermiteParams::from_transform(&flt, &DVec::from_vec(vec![0.4]), 0.7).unwrap();
        let (sym, inv) = params.identity_residuals();
        assert!(sym < 1e-10, "symmetry residual {sym}");
        assert!(inv < 1e-10, "inverse residual {inv}");
    }

    #[test]
    fn harmonic_ground_state_is_gaussian() {
        let beta = 1.3;
        let (spec, flt) = harmonic(beta);
        for u in [-0.8, 0.0, 0.5] {
            let psi =
                number_wavefunction(&spec, &flt, &[0], &DVec::from_vec(vec![u]), 0.0).unwrap();
            let expect = (beta / std::f64::consts::PI).powf(0.25) * (-0.5 * beta * u * u).exp();
            assert_abs_diff_eq!(psi.re, expect, epsilon = 1e-10);
            assert_abs_diff_eq!(psi.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn coherent_matches_textbook_oscillator_form() {
        let beta = 1.3;
        let (spec, flt) = harmonic(beta);
        let z0 = Complex64::new(0.5, 0.2);
        let (u, t) = (0.3, 0.9);
        let psi = coherent_wavefunction(
            &spec,
            &flt,
            &CVec::from_vec(vec![z0]),
            &DVec::from_vec(vec![u]),
            t,
        )
        .unwrap();
        let zt = z0 * Complex64::from_polar(1.0, -beta * t);
        let expect = (2.0 * std::f64::consts::PI).powf(-0.25)
            * (2.0 * beta).powf(0.25)
            * (Complex64::new(0.0, -0.5 * beta * t)
                + Complex64::new(-0.5 * beta * u * u, 0.0)
                + Complex64::new((2.0 * beta).sqrt() * u, 0.0) * zt
                - zt * zt * 0.5)
                .exp();
        assert!((psi - expect).norm() < 1e-10, "psi {psi} expect {expect}");
    }

    #[test]
    fn ground_coherent_state_is_normalized() {
        let (spec, flt) = harmonic(0.9);
        let state = QuantumState::new(
            &spec,
            &flt,
            StateKind::Coherent(CVec::from_vec(vec![Complex64::new(0.0, 0.0)])),
        )
        .unwrap();
        let n = norm_quadrature(&state, 0.0, 200).unwrap();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn harmonic_residual_is_small() {
        let (spec, flt) = harmonic(1.3);
        let state = QuantumState::new(&spec, &flt, StateKind::Number(vec![0])).unwrap();
        let pts: Vec<DVec> = [-0.9, -0.3, 0.0, 0.4, 1.1]
            .iter()
            .map(|&x| DVec::from_vec(vec![x]))
            .collect();
        let r = schrodinger_residual(&state, &pts, 0.7, 1e-3, 1e-3).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn occupation_guard() {
        let (spec, flt) = harmonic(1.3);
        assert!(matches!(
            QuantumState::new(&spec, &flt, StateKind::Number(vec![61])),
            Err(Error::OccupationTooLarge { .. })
        ));
    }

    #[test]
    fn grid_too_coarse_guard() {
        let (spec, flt) = harmonic(1.3);
        let state = QuantumState::new(&spec, &flt, StateKind::Number(vec![0])).unwrap();
        let pts = [DVec::from_vec(vec![0.0])];
        assert!(matches!(
            schrodinger_residual(&state, &pts, 0.0, 1e-3, 0.5),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre(8);
        // integral of x^6 over [-1,1] = 2/7
        let got: f64 = xs.iter().zip(ws.iter()).map(|(x, w)| w * x.powi(6)).sum();
        assert_abs_diff_eq!(got, 2.0 / 7.0, epsilon = 1e-13);
        // n = 1 degenerates to the midpoint rule
        let (xs, ws) = gauss_legendre(1);
        assert_abs_diff_eq!(xs[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ws[0], 2.0, epsilon = 1e-15);
    }
}
