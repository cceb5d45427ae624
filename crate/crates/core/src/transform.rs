//! The canonical Floquet-Lyapunov transformation.
//!
//! From a converged [`ModeSet`] this module builds the periodic matrices
//! `U(t)`, `V(t)`, rescales them so the transformation
//! `phi = Gamma(t) chi` with `Gamma = [[U, U*], [V, V*]]` is canonical,
//! and exposes the closed-form inverse, exact classical propagation,
//! conserved mode actions, the classical generating function and the
//! canonical-identity residuals.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::continued::{Mode, ModeSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Tolerances;
use crate::{CMat, CVec, DMat, DVec};

/// Exponents closer than this are treated as degenerate when the
/// normalization matrix needs a kernel-basis rotation.
const DEGENERACY_TOL: f64 = 1e-8;
/// Condition bound on `U(t)` for operations that invert it.
const SINGULAR_U_COND: f64 = 1e12;

/// Real phase-space point: coordinates and conjugate momenta `p = u'`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub u: DVec,
    pub p: DVec,
}

impl PhaseState {
    pub fn new(u: DVec, p: DVec) -> Self {
        assert_eq!(u.len(), p.len());
        assert!(
            u.iter().chain(p.iter()).all(|x| x.is_finite()),
            "phase-space entries must be finite"
        );
        PhaseState { u, p }
    }

    pub fn norm(&self) -> f64 {
        (self.u.norm_squared() + self.p.norm_squared()).sqrt()
    }
}

/// Decoupled mode coordinates `chi = (xi, zeta)`; for states that come
/// from a real phase-space point, `xi = conj(zeta)`.
#[derive(Debug, Clone)]
pub struct ModeState {
    pub xi: CVec,
    pub zeta: CVec,
}

/// The normalized Floquet-Lyapunov transformation.
#[derive(Debug, Clone)]
pub struct FLTransform {
    modes: ModeSet,
    betas: DVec,
    /// diagonal rescaling applied to each mode column
    scale: DVec,
    /// real Fourier blocks of U(t) = sum U_n e^{i 2 n t}
    u_blocks: Vec<DMat>,
    /// real blocks W_n with V(t) = i sum W_n e^{i 2 n t}
    v_blocks: Vec<DMat>,
    n_max: i64,
    f: usize,
    identity_tol: f64,
}

impl FLTransform {
    /// Normalize the modes canonically and assemble the transformation.
    pub fn new(modes: ModeSet, tol: &Tolerances) -> Result<Self> {
        let mut flt = FLTransform::unnormalized(modes);
        flt.identity_tol = tol.identity_tol;
        flt.normalize_in_place(tol)?;
        Ok(flt)
    }

    /// Assemble without the canonical rescaling. The identity checks then
    /// report how far from canonical the raw mode basis is.
    pub fn unnormalized(modes: ModeSet) -> Self {
        let f = modes.dof();
        let betas = DVec::from_iterator(f, modes.exponents());
        let n_max = modes.truncation();
        let (u_blocks, v_blocks) = assemble_blocks(&modes, n_max);
        FLTransform {
            modes,
            betas,
            scale: DVec::from_element(f, 1.0),
            u_blocks,
            v_blocks,
            n_max,
            f,
            identity_tol: 1e-9,
        }
    }

    fn rebuild_blocks(&mut self) {
        self.n_max = self.modes.truncation();
        let (u, v) = assemble_blocks(&self.modes, self.n_max);
        self.u_blocks = u;
        self.v_blocks = v;
        self.betas = DVec::from_iterator(self.f, self.modes.exponents());
    }

    fn normalize_in_place(&mut self, tol: &Tolerances) -> Result<()> {
        let d = self.normalization_matrix();
        let (off, diag_norm) = off_diagonal(&d);
        if off > tol.identity_tol * diag_norm.max(1e-300) {
            // degenerate exponents leave the kernel basis free; rotate it
            // so the normalization matrix becomes diagonal
            self.rotate_degenerate_blocks(&d)?;
            let d2 = self.normalization_matrix();
            let (off2, diag_norm2) = off_diagonal(&d2);
            if off2 > tol.identity_tol * diag_norm2.max(1e-300) {
                return Err(Error::NonDiagonalScaling { off_diagonal: off2 });
            }
        }
        let d = self.normalization_matrix();
        let mut scale = DVec::zeros(self.f);
        for j in 0..self.f {
            let djj = d[(j, j)];
            if djj <= 0.0 {
                return Err(Error::NonPositiveDiagonal {
                    index: j,
                    value: djj,
                });
            }
            scale[j] = 1.0 / djj.sqrt();
        }
        let rescaled: Vec<Mode> = self
            .modes
            .modes()
            .iter()
            .enumerate()
            .map(|(j, m)| m.scaled(scale[j]))
            .collect();
        self.modes = self.modes.replace_modes(rescaled);
        self.scale = scale;
        self.rebuild_blocks();
        Ok(())
    }

    /// `-2i V^t(0) U(0)`; diagonal with positive entries for a correctly
    /// labeled stable mode basis.
    pub fn normalization_matrix(&self) -> DMat {
        let f = self.f;
        let mut u0 = DMat::zeros(f, f);
        let mut w0 = DMat::zeros(f, f);
        for (j, m) in self.modes.modes().iter().enumerate() {
            u0.set_column(j, &m.u0());
            w0.set_column(j, &m.nu());
        }
        // V(0) = i W(0), so -2i V^t(0) U(0) = 2 W^t(0) U(0)
        2.0 * w0.transpose() * u0
    }

    fn rotate_degenerate_blocks(&mut self, d: &DMat) -> Result<()> {
        let betas: Vec<f64> = self.modes.exponents();
        let mut new_modes: Vec<Mode> = Vec::with_capacity(self.f);
        let mut i = 0;
        while i < self.f {
            let mut j = i + 1;
            while j < self.f && (betas[j] - betas[i]).abs() <= DEGENERACY_TOL {
                j += 1;
            }
            if j - i == 1 {
                new_modes.push(self.modes.modes()[i].clone());
            } else {
                let size = j - i;
                let mut block = DMat::zeros(size, size);
                for a in 0..size {
                    for b in 0..size {
                        block[(a, b)] = 0.5 * (d[(i + a, i + b)] + d[(i + b, i + a)]);
                    }
                }
                let eig = nalgebra::SymmetricEigen::new(block);
                let group: Vec<&Mode> = self.modes.modes()[i..j].iter().collect();
                for a in 0..size {
                    let w: Vec<f64> = (0..size).map(|b| eig.eigenvectors[(b, a)]).collect();
                    new_modes.push(Mode::combine(&group, &w));
                }
            }
            i = j;
        }
        self.modes = self.modes.replace_modes(new_modes);
        self.rebuild_blocks();
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.f
    }

    pub fn betas(&self) -> &DVec {
        &self.betas
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.modes
    }

    /// Diagonal rescaling that was applied to each mode column.
    pub fn scale(&self) -> &DVec {
        &self.scale
    }

    /// `U(t) = sum_n U_n e^{i 2 n t}`.
    pub fn u_at(&self, t: f64) -> CMat {
        self.sum_blocks(&self.u_blocks, t, Complex64::new(1.0, 0.0))
    }

    /// `V(t) = i sum_n (2n + beta_j) C_2n e^{i 2 n t}` columnwise; equals
    /// the time derivative of `U(t) e^{iBt}` stripped of the `e^{iBt}`.
    pub fn v_at(&self, t: f64) -> CMat {
        self.sum_blocks(&self.v_blocks, t, Complex64::new(0.0, 1.0))
    }

    /// `dU/dt`.
    pub fn u_dot_at(&self, t: f64) -> CMat {
        let f = self.f;
        let mut re = DMat::zeros(f, f);
        let mut im = DMat::zeros(f, f);
        for (k, block) in self.u_blocks.iter().enumerate() {
            let n = k as i64 - self.n_max;
            let w = 2.0 * n as f64;
            let (s, c) = (w * t).sin_cos();
            // d/dt e^{i 2 n t} = i w e^{i w t}
            re += block * (-w * s);
            im += block * (w * c);
        }
        complex_from(&re, &im)
    }

    fn sum_blocks(&self, blocks: &[DMat], t: f64, prefactor: Complex64) -> CMat {
        let f = self.f;
        let mut re = DMat::zeros(f, f);
        let mut im = DMat::zeros(f, f);
        for (k, block) in blocks.iter().enumerate() {
            let n = k as i64 - self.n_max;
            let (s, c) = (2.0 * n as f64 * t).sin_cos();
            re += block * c;
            im += block * s;
        }
        complex_from(&re, &im) * prefactor
    }

    /// `Gamma(t) = [[U, U*], [V, V*]]`.
    pub fn gamma(&self, t: f64) -> CMat {
        let f = self.f;
        let u = self.u_at(t);
        let v = self.v_at(t);
        let mut g = CMat::zeros(2 * f, 2 * f);
        for i in 0..f {
            for j in 0..f {
                g[(i, j)] = u[(i, j)];
                g[(i, f + j)] = u[(i, j)].conj();
                g[(f + i, j)] = v[(i, j)];
                g[(f + i, f + j)] = v[(i, j)].conj();
            }
        }
        g
    }

    /// Closed-form inverse `[[i V^H, -i U^H], [-i V^t, i U^t]]`; no matrix
    /// inversion is performed, so this doubles as a normalization check.
    pub fn gamma_inverse(&self, t: f64) -> CMat {
        let f = self.f;
        let u = self.u_at(t);
        let v = self.v_at(t);
        let i_unit = Complex64::new(0.0, 1.0);
        let mut g = CMat::zeros(2 * f, 2 * f);
        for i in 0..f {
            for j in 0..f {
                g[(i, j)] = i_unit * v[(j, i)].conj();
                g[(i, f + j)] = -i_unit * u[(j, i)].conj();
                g[(f + i, j)] = -i_unit * v[(j, i)];
                g[(f + i, f + j)] = i_unit * u[(j, i)];
            }
        }
        g
    }

    /// Map a real phase-space state to mode coordinates.
    pub fn to_modes(&self, state: &PhaseState, t: f64) -> ModeState {
        let u = self.u_at(t);
        let v = self.v_at(t);
        let uc = linalg::complexify_vec(&state.u);
        let pc = linalg::complexify_vec(&state.p);
        let i_unit = Complex64::new(0.0, 1.0);
        let xi = (v.adjoint() * &uc - u.adjoint() * &pc) * i_unit;
        let zeta = (u.transpose() * &pc - v.transpose() * &uc) * i_unit;
        ModeState { xi, zeta }
    }

    /// Map mode coordinates back to phase space. Errors when the result
    /// fails to be real, which signals an inconsistent `xi`/`zeta` pair.
    pub fn from_modes(&self, mstate: &ModeState, t: f64) -> Result<PhaseState> {
        let u = self.u_at(t);
        let v = self.v_at(t);
        let u_c = &u * &mstate.xi + u.conjugate() * &mstate.zeta;
        let p_c = &v * &mstate.xi + v.conjugate() * &mstate.zeta;
        let worst_imag = u_c
            .iter()
            .chain(p_c.iter())
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        let scale = 1.0
            + u_c
                .iter()
                .chain(p_c.iter())
                .map(|z| z.norm())
                .fold(0.0, f64::max);
        if worst_imag > self.identity_tol * scale {
            return Err(Error::NonRealRoundTrip {
                imaginary: worst_imag,
            });
        }
        Ok(PhaseState {
            u: u_c.map(|z| z.re),
            p: p_c.map(|z| z.re),
        })
    }

    /// Exact propagation `Gamma(t) e^{Bt} Gamma^{-1}(0)` applied to a state.
    pub fn propagate(&self, state0: &PhaseState, t: f64) -> Result<PhaseState> {
        let m0 = self.to_modes(state0, 0.0);
        self.from_modes(&self.evolve_modes(&m0, t), t)
    }

    /// Mode evolution `xi_j(t) = xi_j(0) e^{i beta_j t}`, `zeta_j` conjugate.
    pub fn evolve_modes(&self, m: &ModeState, t: f64) -> ModeState {
        let f = self.f;
        let mut xi = m.xi.clone();
        let mut zeta = m.zeta.clone();
        for j in 0..f {
            let phase = Complex64::from_polar(1.0, self.betas[j] * t);
            xi[j] *= phase;
            zeta[j] *= phase.conj();
        }
        ModeState { xi, zeta }
    }

    /// Conserved actions `I_j = Re(zeta_j xi_j)`.
    pub fn mode_actions(&self, m: &ModeState) -> DVec {
        DVec::from_iterator(
            self.f,
            m.zeta.iter().zip(m.xi.iter()).map(|(z, x)| (z * x).re),
        )
    }

    /// Reconstruct the monodromy matrix `Gamma(0) e^{B pi} Gamma^{-1}(0)`.
    pub fn reconstructed_monodromy(&self) -> CMat {
        let f = self.f;
        let mut e_b = CMat::zeros(2 * f, 2 * f);
        for j in 0..f {
            e_b[(j, j)] = Complex64::from_polar(1.0, self.betas[j] * PI);
            e_b[(f + j, f + j)] = Complex64::from_polar(1.0, -self.betas[j] * PI);
        }
        self.gamma(0.0) * e_b * self.gamma_inverse(0.0)
    }

    /// Continuously unwrapped `arg det U(t)`, anchored at the principal
    /// value for the real matrix `U(0)`. A principal-value argument would
    /// jump by 2 pi along the way and wreck the wavefunction phase.
    pub fn arg_det_u(&self, t: f64) -> f64 {
        let det0 = self.u_at(0.0).determinant();
        let base = det0.arg();
        if t == 0.0 {
            return base;
        }
        let mut n = 64usize.max((t.abs() * 128.0).ceil() as usize);
        loop {
            let mut acc = base;
            let mut prev = det0;
            let mut resolved = true;
            for k in 1..=n {
                let s = t * k as f64 / n as f64;
                let det = self.u_at(s).determinant();
                let inc = (det / prev).arg();
                if inc.abs() > std::f64::consts::FRAC_PI_2 {
                    resolved = false;
                    break;
                }
                acc += inc;
                prev = det;
            }
            if resolved {
                return acc;
            }
            n *= 2;
            assert!(n < (1 << 24), "arg det U unwrapping failed to resolve");
        }
    }

    /// Classical generating function `F(u, -i zeta, t)` of the canonical
    /// transformation, in terms of old coordinates and new momenta.
    pub fn generating_function(&self, u: &DVec, zeta: &CVec, t: f64) -> Result<Complex64> {
        let u_mat = self.u_at(t);
        let sv = linalg::singular_values_complex(&u_mat);
        let cond = sv[0] / sv[sv.len() - 1];
        if !cond.is_finite() || cond > SINGULAR_U_COND {
            return Err(Error::SingularU { cond });
        }
        let v_mat = self.v_at(t);
        let u_inv_t = u_mat.transpose().try_inverse().ok_or(Error::SingularU {
            cond: f64::INFINITY,
        })?;
        let uc = linalg::complexify_vec(u);
        let i_unit = Complex64::new(0.0, 1.0);
        let quad_u = quadratic_form(&uc, &(&u_inv_t * v_mat.transpose()), &uc);
        let cross = (uc.transpose() * &u_inv_t * zeta)[(0, 0)];
        let quad_z = quadratic_form(zeta, &(u_mat.adjoint() * &u_inv_t), zeta);
        Ok(quad_u * 0.5 - i_unit * cross + i_unit * quad_z * 0.5)
    }

    /// Maximum residuals of the canonical identities over sample times.
    pub fn check_canonical_identities(&self, sample_times: &[f64]) -> IdentityReport {
        let f = self.f;
        let eye = CMat::identity(f, f);
        let i_unit = Complex64::new(0.0, 1.0);

        let u0 = self.u_at(0.0);
        let v0 = self.v_at(0.0);
        let normalization =
            linalg::max_abs_complex(&(v0.transpose() * &u0 - &eye * (i_unit * 0.5)));

        let mut report = IdentityReport {
            normalization,
            ..IdentityReport::default()
        };

        for &t in sample_times {
            let u = self.u_at(t);
            let v = self.v_at(t);
            let utv = u.transpose() * &v;
            report.symmetry_utv = report
                .symmetry_utv
                .max(linalg::max_abs_complex(&(&utv - utv.transpose())));
            let wr = u.transpose() * v.conjugate() - v.transpose() * u.conjugate() + &eye * i_unit;
            report.wronskian = report.wronskian.max(linalg::max_abs_complex(&wr));

            if let Some(u_inv) = u.clone().try_inverse() {
                let u_inv_t = u_inv.transpose();
                let s = &u_inv_t * v.transpose();
                report.symmetry_gauge = report
                    .symmetry_gauge
                    .max(linalg::max_abs_complex(&(&s - s.transpose())));
                let c = u.adjoint() * &u_inv_t;
                report.symmetry_hermite_arg = report
                    .symmetry_hermite_arg
                    .max(linalg::max_abs_complex(&(&c - c.transpose())));
                let cc = v.adjoint() - u.adjoint() * &u_inv_t * v.transpose() + &u_inv * i_unit;
                report.canonical_condition =
                    report.canonical_condition.max(linalg::max_abs_complex(&cc));
                let u_inv_conj = u_inv.conjugate();
                let m1 = (&u_inv_conj * &u).conjugate();
                report.conjugate_pair = report
                    .conjugate_pair
                    .max(linalg::max_abs_complex(&(&m1 - &c)));
                let prod = &u_inv_conj * &u * &c - &eye;
                report.unitary_product = report.unitary_product.max(linalg::max_abs_complex(&prod));
            } else {
                report.canonical_condition = f64::INFINITY;
            }

            let g = self.gamma(t);
            let gi = self.gamma_inverse(t);
            let j = complex_from(&crate::oracle::skew_form(f), &DMat::zeros(2 * f, 2 * f));
            let mut target = CMat::zeros(2 * f, 2 * f);
            for k in 0..f {
                target[(k, f + k)] = i_unit;
                target[(f + k, k)] = -i_unit;
            }
            let sym = g.transpose() * j * &g - target;
            report.symplectic_form = report.symplectic_form.max(linalg::max_abs_complex(&sym));
            let inv = gi * &g - CMat::identity(2 * f, 2 * f);
            report.inverse_product = report.inverse_product.max(linalg::max_abs_complex(&inv));
        }
        report
    }
}

/// Residuals of the canonical identities, one entry per identity.
#[derive(Debug, Clone, Default)]
pub struct IdentityReport {
    /// `V^t(0) U(0) - i/2`
    pub normalization: f64,
    /// `U^t V` symmetric
    pub symmetry_utv: f64,
    /// `U^t V* - V^t U* = -i`
    pub wronskian: f64,
    /// `V^H - U^H U^{-t} V^t = -i U^{-1}`
    pub canonical_condition: f64,
    /// `U^{-t} V^t` symmetric
    pub symmetry_gauge: f64,
    /// `U^H U^{-t}` symmetric
    pub symmetry_hermite_arg: f64,
    /// `(U^{-*} U)* = U^H U^{-t}`
    pub conjugate_pair: f64,
    /// `U^{-*} U U^H U^{-t} = 1`
    pub unitary_product: f64,
    /// `Gamma^t J Gamma = [[0, i], [-i, 0]]`
    pub symplectic_form: f64,
    /// `Gamma^{-1} Gamma = 1`
    pub inverse_product: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.normalization,
            self.symmetry_utv,
            self.wronskian,
            self.canonical_condition,
            self.symmetry_gauge,
            self.symmetry_hermite_arg,
            self.conjugate_pair,
            self.unitary_product,
            self.symplectic_form,
            self.inverse_product,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("normalization", self.normalization),
            ("symmetry_utv", self.symmetry_utv),
            ("wronskian", self.wronskian),
            ("canonical_condition", self.canonical_condition),
            ("symmetry_gauge", self.symmetry_gauge),
            ("symmetry_hermite_arg", self.symmetry_hermite_arg),
            ("conjugate_pair", self.conjugate_pair),
            ("unitary_product", self.unitary_product),
            ("symplectic_form", self.symplectic_form),
            ("inverse_product", self.inverse_product),
        ]
    }
}

/// Standalone canonical normalization of a mode set, returning the
/// rescaled modes and the diagonal scale that was applied.
pub fn normalize(modes: ModeSet, tol: &Tolerances) -> Result<(ModeSet, DVec)> {
    let flt = FLTransform::new(modes, tol)?;
    Ok((flt.modes.clone(), flt.scale.clone()))
}

/// Assemble `U(t)` and `V(t)` at one time from a mode set (columns in mode
/// order). Convenience wrapper over an owned transform.
pub fn assemble_uv(modes: &ModeSet, t: f64) -> (CMat, CMat) {
    let flt = FLTransform::unnormalized(modes.clone());
    (flt.u_at(t), flt.v_at(t))
}

fn assemble_blocks(modes: &ModeSet, n_max: i64) -> (Vec<DMat>, Vec<DMat>) {
    let f = modes.dof();
    let count = (2 * n_max + 1) as usize;
    let mut u_blocks = vec![DMat::zeros(f, f); count];
    let mut v_blocks = vec![DMat::zeros(f, f); count];
    for (j, mode) in modes.modes().iter().enumerate() {
        for (n, c) in mode.coeffs() {
            let k = (n + n_max) as usize;
            let w = 2.0 * n as f64 + mode.beta();
            for i in 0..f {
                u_blocks[k][(i, j)] = c[i];
                v_blocks[k][(i, j)] = w * c[i];
            }
        }
    }
    (u_blocks, v_blocks)
}

fn complex_from(re: &DMat, im: &DMat) -> CMat {
    CMat::from_fn(re.nrows(), re.ncols(), |i, j| {
        Complex64::new(re[(i, j)], im[(i, j)])
    })
}

fn quadratic_form(x: &CVec, m: &CMat, y: &CVec) -> Complex64 {
    (x.transpose() * m * y)[(0, 0)]
}

fn off_diagonal(d: &DMat) -> (f64, f64) {
    let n = d.nrows();
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for i in 0..n {
        diag += d[(i, i)] * d[(i, i)];
        for j in 0..n {
            if i != j {
                off = off.max(d[(i, j)].abs());
            }
        }
    }
    (off, diag.sqrt())
}
