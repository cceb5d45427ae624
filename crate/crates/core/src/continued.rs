//! Mode solver built on continued matrix inversions.
//!
//! Characteristic exponents are located as zeros of `det Y(beta)` where
//! `Y` is assembled from two half-infinite inversion chains, one running
//! toward positive harmonics and one toward negative harmonics. The same
//! chains then produce the Fourier coefficient vectors of every mode.
//! A five-term generalization handles the double-cosine (two-harmonic
//! Hill) system.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{SystemSpec, Tolerances};
use crate::oracle::{self, FloquetDecomposition, StabilityClass};
use crate::{CVec, DMat, DVec};

/// Hard cap on the truncation depth of the inversion chains.
pub const MAX_DEPTH: usize = 512;
/// Condition-number bound beyond which an inner matrix counts as singular.
pub const COND_LIMIT: f64 = 1e14;
/// Margin used for the stability precheck before any root search.
pub const STABILITY_MARGIN: f64 = 1e-6;
/// A determinant root must reproduce a monodromy multiplier this closely.
pub const MULTIPLIER_MATCH_TOL: f64 = 1e-6;

const KERNEL_RATIO: f64 = 1e-8;

/// `R_2n = A - (2n + beta)^2 * 1`.
pub fn r_matrix(n: i64, beta: f64, spec: &SystemSpec) -> DMat {
    let shift = (2.0 * n as f64 + beta).powi(2);
    let mut m = spec.a().clone();
    for i in 0..spec.dof() {
        m[(i, i)] -= shift;
    }
    m
}

fn invert_checked(w: &DMat, depth: usize) -> Result<DMat> {
    let inv = w.clone().try_inverse().ok_or(Error::SingularInnerMatrix {
        depth,
        cond: f64::INFINITY,
    })?;
    let cond = linalg::cond_frobenius(w, &inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(Error::SingularInnerMatrix { depth, cond });
    }
    Ok(inv)
}

// Single-cosine inversion chain in direction `dir` (+1 towards positive
// harmonics, -1 towards negative ones). Entry m-1 holds the operator
// S_{2m*dir} with S_{2m} = [R_{2m} - Q S_{2(m+1)} Q]^{-1}, truncated by
// S = 0 beyond `depth`.
fn fold_single(spec: &SystemSpec, beta: f64, dir: i64, depth: usize) -> Result<Vec<DMat>> {
    let f = spec.dof();
    let q = spec.q2();
    if q.iter().all(|&x| x == 0.0) {
        // every chain entry only enters sandwiched between zero Q's;
        // the head survives solely through the reported T_2 operator
        let mut chain = vec![DMat::zeros(f, f); depth];
        if dir > 0 {
            chain[0] = invert_checked(&r_matrix(1, beta, spec), 1)?;
        }
        return Ok(chain);
    }
    let mut chain = vec![DMat::zeros(0, 0); depth];
    let mut deeper: Option<DMat> = None;
    for m in (1..=depth).rev() {
        let mut w = r_matrix(dir * m as i64, beta, spec);
        if let Some(s) = &deeper {
            w -= q * s * q;
        }
        let inv = invert_checked(&w, m)?;
        chain[m - 1] = inv.clone();
        deeper = Some(inv);
    }
    Ok(chain)
}

struct SingleOps {
    up: Vec<DMat>,
    down: Vec<DMat>,
    t2: DMat,
    t0_tilde: DMat,
    depth: usize,
}

fn rel_change(new: &DMat, old: &DMat) -> f64 {
    let scale = new.norm();
    if scale == 0.0 {
        (new - old).norm()
    } else {
        (new - old).norm() / scale
    }
}

fn single_ops_at_depth(spec: &SystemSpec, beta: f64, depth: usize) -> Result<SingleOps> {
    let q = spec.q2();
    let up = fold_single(spec, beta, 1, depth)?;
    let down = fold_single(spec, beta, -1, depth)?;
    let t2 = up[0].clone();
    let t0_tilde = r_matrix(0, beta, spec) - q * &down[0] * q;
    Ok(SingleOps {
        up,
        down,
        t2,
        t0_tilde,
        depth,
    })
}

fn converged_single_ops(spec: &SystemSpec, beta: f64, tol: &Tolerances) -> Result<SingleOps> {
    let mut depth = tol.truncation_order.max(3);
    let mut prev = single_ops_at_depth(spec, beta, depth)?;
    loop {
        if depth >= MAX_DEPTH {
            return Err(Error::NoConvergence { n_max: MAX_DEPTH });
        }
        depth *= 2;
        let next = single_ops_at_depth(spec, beta, depth)?;
        if rel_change(&next.t2, &prev.t2) < tol.convergence_tol
            && rel_change(&next.t0_tilde, &prev.t0_tilde) < tol.convergence_tol
        {
            return Ok(next);
        }
        prev = next;
    }
}

/// The two continued-inversion operators `T_2` and `T~_0`, with the
/// truncation depth that achieved convergence.
pub fn t_operators(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<(DMat, DMat, usize)> {
    let ops = converged_single_ops(spec, beta, tol)?;
    Ok((ops.t2, ops.t0_tilde, ops.depth))
}

/// `Y = T~_0 - Q T_2 Q`; exponents are zeros of its determinant.
pub fn y_matrix(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<DMat> {
    let ops = converged_single_ops(spec, beta, tol)?;
    Ok(y_from_single(&ops, spec))
}

fn y_from_single(ops: &SingleOps, spec: &SystemSpec) -> DMat {
    let q = spec.q2();
    &ops.t0_tilde - q * &ops.t2 * q
}

// --- double-cosine (two-harmonic) chains -------------------------------

// Two-term elimination coefficients for the five-term recursion:
// C_{2m} = X_m C_{2(m-1)} + Z_m C_{2(m-2)} (direction-signed indices).
// Entry m-1 holds (X_m, Z_m).
fn fold_xz(spec: &SystemSpec, beta: f64, dir: i64, depth: usize) -> Result<Vec<(DMat, DMat)>> {
    let f = spec.dof();
    let q2 = spec.q2();
    let q4 = spec.q4();
    if q2.iter().all(|&x| x == 0.0) && q4.iter().all(|&x| x == 0.0) {
        return Ok(vec![(DMat::zeros(f, f), DMat::zeros(f, f)); depth]);
    }
    let zero = DMat::zeros(f, f);
    let mut chain = vec![(DMat::zeros(0, 0), DMat::zeros(0, 0)); depth];
    for m in (1..=depth).rev() {
        let (x1, z1) = if m < depth {
            (&chain[m].0, &chain[m].1)
        } else {
            (&zero, &zero)
        };
        let (x2, z2) = if m + 1 < depth {
            (&chain[m + 1].0, &chain[m + 1].1)
        } else {
            (&zero, &zero)
        };
        let w = r_matrix(dir * m as i64, beta, spec) - q2 * x1 - q4 * (x2 * x1 + z2);
        let w_inv = invert_checked(&w, m)?;
        let x = &w_inv * (q2 + (q2 + q4 * x2) * z1);
        let z = &w_inv * q4;
        chain[m - 1] = (x, z);
    }
    Ok(chain)
}

struct DoubleOps {
    up: Vec<(DMat, DMat)>,
    down: Vec<(DMat, DMat)>,
    /// map taking C_0 to C_2
    e_up: DMat,
    /// map taking C_0 to C_{-2}
    e_down: DMat,
    y: DMat,
    depth: usize,
}

fn double_ops_at_depths(
    spec: &SystemSpec,
    beta: f64,
    up_depth: usize,
    down_depth: usize,
) -> Result<DoubleOps> {
    let f = spec.dof();
    let q2 = spec.q2();
    let q4 = spec.q4();
    let up = fold_xz(spec, beta, 1, up_depth)?;
    let down = fold_xz(spec, beta, -1, down_depth)?;
    let (x1, z1) = (&up[0].0, &up[0].1);
    let (x2, z2) = (&up[1].0, &up[1].1);
    let (xm1, zm1) = (&down[0].0, &down[0].1);
    let (xm2, zm2) = (&down[1].0, &down[1].1);
    let eye = DMat::identity(f, f);
    let e_up = invert_checked(&(&eye - z1 * zm1), 1)? * (x1 + z1 * xm1);
    let e_down = invert_checked(&(&eye - zm1 * z1), 1)? * (xm1 + zm1 * x1);
    let y = r_matrix(0, beta, spec)
        - q4 * (z2 + zm2)
        - (q2 + q4 * x2) * &e_up
        - (q2 + q4 * xm2) * &e_down;
    Ok(DoubleOps {
        up,
        down,
        e_up,
        e_down,
        y,
        depth: up_depth.min(down_depth),
    })
}

fn converged_double_ops(spec: &SystemSpec, beta: f64, tol: &Tolerances) -> Result<DoubleOps> {
    let mut depth = tol.truncation_order.max(3);
    let mut prev = double_ops_at_depths(spec, beta, depth, depth)?;
    loop {
        if depth >= MAX_DEPTH {
            return Err(Error::NoConvergence { n_max: MAX_DEPTH });
        }
        depth *= 2;
        let next = double_ops_at_depths(spec, beta, depth, depth)?;
        if rel_change(&next.y, &prev.y) < tol.convergence_tol {
            return Ok(next);
        }
        prev = next;
    }
}

/// Determinant matrix for the double-cosine system. Reduces exactly to
/// [`y_matrix`] when `Q4 = 0`.
pub fn y_matrix_double(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<DMat> {
    Ok(converged_double_ops(spec, beta, tol)?.y)
}

/// The closed-form double-cosine operators with the inner chains truncated
/// at the third harmonic. Used as a structural cross-check of the adaptive
/// chains; production code extends the depth adaptively instead.
#[derive(Debug, Clone)]
pub struct ShallowDoubleOps {
    pub t2: DMat,
    pub q_up: DMat,
    pub t0_tilde: DMat,
    pub q_down: DMat,
}

impl ShallowDoubleOps {
    pub fn y(&self) -> DMat {
        &self.t0_tilde - &self.q_down * &self.t2 * &self.q_up
    }
}

pub fn shallow_double_ops(beta: f64, spec: &SystemSpec) -> Result<ShallowDoubleOps> {
    let q2 = spec.q2();
    let q4 = spec.q4();
    let r = |n: i64| r_matrix(n, beta, spec);
    let r6_inv = invert_checked(&r(3), 3)?;
    let rm4_inv = invert_checked(&r(-2), 2)?;
    let rt4 = invert_checked(&(r(2) - q2 * &r6_inv * q2), 2)?;
    let rt6 = q2 + q2 * &r6_inv * q4;
    let rtm2 = invert_checked(&(r(-1) - q2 * &rm4_inv * q2), 1)?;
    let rtm4 = q2 + q2 * &rm4_inv * q4;
    let t2 = invert_checked(
        &(r(1)
            - q2 * &rt4 * &rt6
            - q4 * &r6_inv * q4
            - q4 * &r6_inv * q2 * &rt4 * &rt6
            - q4 * &rtm2 * q4),
        1,
    )?;
    let q_up = q2 + q2 * &rt4 * q4 + q4 * &r6_inv * q2 * &rt4 * q4 + q4 * &rtm2 * &rtm4;
    let t0_tilde = r(0)
        - q2 * &rtm2 * &rtm4
        - q4 * &rm4_inv * q4
        - q4 * &rm4_inv * q2 * &rtm2 * &rtm4
        - q4 * &rt4 * q4;
    let q_down = q2 + q2 * &rtm2 * q4 + q4 * &rm4_inv * q2 * &rtm2 * q4 + q4 * &rt4 * &rt6;
    Ok(ShallowDoubleOps {
        t2,
        q_up,
        t0_tilde,
        q_down,
    })
}

// --- modes --------------------------------------------------------------

/// One Floquet mode: exponent plus real Fourier coefficient vectors
/// `C_2n` for `|n| <= n_max`.
#[derive(Debug, Clone)]
pub struct Mode {
    beta: f64,
    n_max: i64,
    coeffs: Vec<DVec>,
    residual: f64,
    converged: bool,
    degenerate: bool,
}

impl Mode {
    pub(crate) fn from_parts(
        beta: f64,
        n_max: i64,
        coeffs: Vec<DVec>,
        residual: f64,
        converged: bool,
        degenerate: bool,
    ) -> Self {
        debug_assert_eq!(coeffs.len(), (2 * n_max + 1) as usize);
        Mode {
            beta,
            n_max,
            coeffs,
            residual,
            converged,
            degenerate,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn coeff(&self, n: i64) -> Option<&DVec> {
        if n.abs() > self.n_max {
            None
        } else {
            Some(&self.coeffs[(n + self.n_max) as usize])
        }
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, &DVec)> {
        let n_max = self.n_max;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, c)| (k as i64 - n_max, c))
    }

    /// Worst recursion residual over interior harmonics.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }

    /// `u(0) = sum C_2n`.
    pub fn u0(&self) -> DVec {
        let f = self.coeffs[0].len();
        self.coeffs.iter().fold(DVec::zeros(f), |acc, c| acc + c)
    }

    /// `nu = sum (2n + beta) C_2n`, so `u'(0) = i nu`.
    pub fn nu(&self) -> DVec {
        let f = self.coeffs[0].len();
        self.coeffs().fold(DVec::zeros(f), |acc, (n, c)| {
            acc + c * (2.0 * n as f64 + self.beta)
        })
    }

    /// Diagonal entry of `-2i V^t(0) U(0)` contributed by this mode; its
    /// sign distinguishes a mode from its complex conjugate relabeling.
    pub fn normalization_diagonal(&self) -> f64 {
        2.0 * self.nu().dot(&self.u0())
    }

    /// The complex solution `u(t) = sum C_2n exp(i (2n + beta) t)`.
    pub fn eval_solution(&self, t: f64) -> CVec {
        let f = self.coeffs[0].len();
        let mut out = CVec::zeros(f);
        for (n, c) in self.coeffs() {
            let phase = Complex64::from_polar(1.0, (2.0 * n as f64 + self.beta) * t);
            for i in 0..f {
                out[i] += phase * c[i];
            }
        }
        out
    }

    /// Second derivative of [`Mode::eval_solution`].
    pub fn eval_solution_dd(&self, t: f64) -> CVec {
        let f = self.coeffs[0].len();
        let mut out = CVec::zeros(f);
        for (n, c) in self.coeffs() {
            let w = 2.0 * n as f64 + self.beta;
            let phase = Complex64::from_polar(1.0, w * t) * (-w * w);
            for i in 0..f {
                out[i] += phase * c[i];
            }
        }
        out
    }

    pub(crate) fn scaled(&self, s: f64) -> Mode {
        Mode {
            beta: self.beta,
            n_max: self.n_max,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            residual: self.residual,
            converged: self.converged,
            degenerate: self.degenerate,
        }
    }

    /// Linear combination of equal-exponent modes (kernel-basis rotation).
    pub(crate) fn combine(modes: &[&Mode], weights: &[f64]) -> Mode {
        let n_max = modes.iter().map(|m| m.n_max).max().unwrap();
        let f = modes[0].coeffs[0].len();
        let mut coeffs = vec![DVec::zeros(f); (2 * n_max + 1) as usize];
        for (m, &w) in modes.iter().zip(weights) {
            for (n, c) in m.coeffs() {
                coeffs[(n + n_max) as usize] += c * w;
            }
        }
        Mode {
            beta: modes[0].beta,
            n_max,
            coeffs,
            residual: modes.iter().map(|m| m.residual).fold(0.0, f64::max),
            converged: modes.iter().all(|m| m.converged),
            degenerate: true,
        }
    }
}

/// The full set of `f` stable modes of a system, sorted by exponent.
#[derive(Debug, Clone)]
pub struct ModeSet {
    f: usize,
    modes: Vec<Mode>,
}

impl ModeSet {
    pub(crate) fn new_sorted(f: usize, mut modes: Vec<Mode>) -> Self {
        modes.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap());
        ModeSet { f, modes }
    }

    pub fn dof(&self) -> usize {
        self.f
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.beta).collect()
    }

    /// Largest truncation index used by any mode.
    pub fn truncation(&self) -> i64 {
        self.modes.iter().map(|m| m.n_max).max().unwrap_or(0)
    }

    pub(crate) fn replace_modes(&self, modes: Vec<Mode>) -> ModeSet {
        ModeSet::new_sorted(self.f, modes)
    }
}

// Extract kernel vectors of Y and grow the coefficient tails from the
// stored chains. `step(dir, m, prev, prev2)` returns C at level m given the
// one- and two-step-shallower coefficients.
fn modes_from_kernel<F>(
    beta: f64,
    y: &DMat,
    depth: usize,
    spec: &SystemSpec,
    tol: &Tolerances,
    step: F,
    five_term: bool,
) -> Result<Vec<Mode>>
where
    F: Fn(i64, usize, &DVec, &DVec) -> DVec,
{
    let f = spec.dof();
    let sv = linalg::singular_values(y);
    let smax = sv[0].max(1.0);
    let mut kernel_dim = (0..f).filter(|&i| sv[i] <= KERNEL_RATIO * smax).count();
    kernel_dim = kernel_dim.max(1);
    let kernel = linalg::smallest_right_singular_vectors_real(y, kernel_dim);

    let n_max = depth as i64;
    let mut out = Vec::with_capacity(kernel_dim);
    for c0 in kernel {
        let mut coeffs = vec![DVec::zeros(f); 2 * depth + 1];
        coeffs[depth] = c0.clone();
        for dir in [1i64, -1] {
            let mut prev = c0.clone();
            let mut prev2 = DVec::zeros(f);
            for m in 1..=depth {
                let next = step(dir, m, &prev, &prev2);
                let idx = (n_max + dir * m as i64) as usize;
                coeffs[idx] = next.clone();
                prev2 = prev;
                prev = next;
            }
        }
        let mode = Mode::from_parts(beta, n_max, coeffs, 0.0, true, kernel_dim > 1);
        let residual = mode_recursion_residual(&mode, spec, five_term);
        let converged = residual <= tol.convergence_tol;
        out.push(Mode {
            residual,
            converged,
            ..mode
        });
    }
    Ok(out)
}

// Pointwise recursion residual, worst over the interior harmonics.
fn mode_recursion_residual(mode: &Mode, spec: &SystemSpec, five_term: bool) -> f64 {
    let f = spec.dof();
    let zero = DVec::zeros(f);
    let reach = if five_term { 2 } else { 1 };
    let mut worst: f64 = 0.0;
    for n in -(mode.n_max - reach)..=(mode.n_max - reach) {
        let c = |k: i64| mode.coeff(k).unwrap_or(&zero);
        let mut res = r_matrix(n, mode.beta, spec) * c(n) - spec.q2() * (c(n - 1) + c(n + 1));
        if five_term {
            res -= spec.q4() * (c(n - 2) + c(n + 2));
        }
        worst = worst.max(res.norm());
    }
    worst
}

/// Fourier coefficient vectors of the mode(s) at a converged root `beta`
/// of the single-cosine determinant.
pub fn mode_vectors(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<Vec<Mode>> {
    let ops = converged_single_ops(spec, beta, tol)?;
    let y = y_from_single(&ops, spec);
    let q = spec.q2().clone();
    modes_from_kernel(
        beta,
        &y,
        ops.depth,
        spec,
        tol,
        |dir, m, prev, _| {
            let chain = if dir > 0 { &ops.up } else { &ops.down };
            &chain[m - 1] * (&q * prev)
        },
        false,
    )
}

/// Double-cosine analogue of [`mode_vectors`].
pub fn mode_vectors_double(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<Vec<Mode>> {
    let ops = converged_double_ops(spec, beta, tol)?;
    modes_from_kernel(
        beta,
        &ops.y,
        ops.depth,
        spec,
        tol,
        |dir, m, prev, prev2| {
            if m == 1 {
                let e = if dir > 0 { &ops.e_up } else { &ops.e_down };
                e * prev
            } else {
                let chain = if dir > 0 { &ops.up } else { &ops.down };
                let (x, z) = &chain[m - 1];
                x * prev + z * prev2
            }
        },
        true,
    )
}

fn y_any(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<DMat> {
    if spec.has_q4() {
        y_matrix_double(beta, spec, tol)
    } else {
        y_matrix(beta, spec, tol)
    }
}

fn mode_vectors_any(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<Vec<Mode>> {
    if spec.has_q4() {
        mode_vectors_double(beta, spec, tol)
    } else {
        mode_vectors(beta, spec, tol)
    }
}

// --- root search ---------------------------------------------------------

fn det_y(beta: f64, spec: &SystemSpec, tol: &Tolerances) -> Result<f64> {
    // isolated inner singularities are dodged by a tiny nudge
    match y_any(beta, spec, tol) {
        Ok(y) => Ok(y.determinant()),
        Err(_) => {
            let y = y_any(beta + 1e-9, spec, tol)?;
            Ok(y.determinant())
        }
    }
}

fn bisect_root(
    mut lo: f64,
    mut hi: f64,
    mut s_lo: f64,
    spec: &SystemSpec,
    tol: &Tolerances,
) -> Result<f64> {
    while hi - lo > tol.root_tol {
        let mid = 0.5 * (lo + hi);
        let s_mid = det_y(mid, spec, tol)?;
        if s_mid == 0.0 {
            return Ok(mid);
        }
        if (s_mid > 0.0) == (s_lo > 0.0) {
            lo = mid;
            s_lo = s_mid;
        } else {
            hi = mid;
        }
    }
    // two secant polish steps sharpen the root well below the bisection
    // width, so the kernel extraction sees a cleanly singular Y
    let mut b0 = lo;
    let mut b1 = hi;
    let mut f0 = det_y(b0, spec, tol)?;
    let mut f1 = det_y(b1, spec, tol)?;
    for _ in 0..2 {
        if f1 == f0 {
            break;
        }
        let b2 = b1 - f1 * (b1 - b0) / (f1 - f0);
        if !(b2 > lo - tol.root_tol && b2 < hi + tol.root_tol) {
            break;
        }
        let f2 = det_y(b2, spec, tol)?;
        b0 = b1;
        f0 = f1;
        b1 = b2;
        f1 = f2;
    }
    Ok(if f1.abs() < f0.abs() { b1 } else { b0 })
}

fn scan_segment(
    lo: f64,
    hi: f64,
    step: f64,
    spec: &SystemSpec,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut roots = Vec::new();
    let mut prev_beta = lo;
    let mut prev_s = det_y(lo, spec, tol)?;
    for k in 1..=n {
        let beta = lo + (hi - lo) * k as f64 / n as f64;
        let s = det_y(beta, spec, tol)?;
        if prev_s == 0.0 {
            roots.push(prev_beta);
        } else if s != 0.0 && (s > 0.0) != (prev_s > 0.0) {
            roots.push(bisect_root(prev_beta, beta, prev_s, spec, tol)?);
        }
        prev_beta = beta;
        prev_s = s;
    }
    if prev_s == 0.0 {
        roots.push(prev_beta);
    }
    Ok(roots)
}

fn matches_multiplier(beta: f64, dec: &FloquetDecomposition) -> bool {
    let lam = Complex64::from_polar(1.0, beta * PI);
    dec.multipliers
        .iter()
        .any(|l| (l - lam).norm() <= MULTIPLIER_MATCH_TOL)
}

fn scan_for_modes(
    spec: &SystemSpec,
    tol: &Tolerances,
    dec: &FloquetDecomposition,
    step: f64,
) -> Result<Vec<Mode>> {
    let delta = 10.0 * tol.root_tol;
    let mut candidates = Vec::new();
    for (lo, hi) in [(delta, 1.0 - delta), (1.0 + delta, 2.0 - delta)] {
        candidates.extend(scan_segment(lo, hi, step, spec, tol)?);
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup_by(|a, b| (*a - *b).abs() < 16.0 * tol.root_tol);

    let mut modes = Vec::new();
    for beta in candidates {
        // sign changes caused by poles of the inversion chains do not land
        // on a monodromy multiplier; real roots do
        if !matches_multiplier(beta, dec) {
            continue;
        }
        for mode in mode_vectors_any(beta, spec, tol)? {
            // of the pair {beta, 2 - beta} describing one mode and its
            // conjugate, keep the labeling with positive normalization
            if mode.normalization_diagonal() > 0.0 {
                modes.push(mode);
            }
        }
    }
    Ok(modes)
}

/// Solve for all `f` stable modes: oracle stability precheck, determinant
/// root scan, kernel extraction, conjugate disambiguation.
pub fn build_mode_set(spec: &SystemSpec, tol: &Tolerances) -> Result<ModeSet> {
    tol.validate()?;
    let (dec, class) = oracle::assess_stability(spec, tol.oracle_steps, STABILITY_MARGIN)?;
    match class {
        StabilityClass::Unstable => {
            return Err(Error::UnstableSystem {
                max_modulus: oracle::max_multiplier_modulus(&dec),
            })
        }
        StabilityClass::Marginal => {
            return Err(Error::MarginalSystem {
                distance: oracle::min_exponent_integer_distance(&dec),
            })
        }
        StabilityClass::Stable => {}
    }

    let f = spec.dof();
    let mut found = 0;
    for step in [0.002, 5e-4] {
        let modes = scan_for_modes(spec, tol, &dec, step)?;
        found = modes.len();
        if found == f {
            if let Some(bad) = modes.iter().find(|m| !m.converged()) {
                return Err(Error::ResidualTooLarge {
                    n: 0,
                    residual: bad.residual(),
                });
            }
            return Ok(ModeSet::new_sorted(f, modes));
        }
    }
    Err(Error::RootCountMismatch { found, expected: f })
}

/// The `f` characteristic exponents in `(0, 2)`, sorted ascending.
pub fn find_exponents(spec: &SystemSpec, tol: &Tolerances) -> Result<Vec<f64>> {
    Ok(build_mode_set(spec, tol)?.exponents())
}
