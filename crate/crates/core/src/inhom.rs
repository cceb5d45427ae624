//! Unique pi-periodic response to a `G + 2 F cos 2t` drive, solved with
//! the same inversion chains as the homogeneous problem (at zero
//! exponent), plus the classical action of that periodic orbit, stored as
//! a secular coefficient and a short Fourier series so evaluation inside
//! wavefunction grids stays cheap.

use std::f64::consts::PI;

use crate::continued::{self, STABILITY_MARGIN};
use crate::error::{Error, Result};
use crate::model::{SystemSpec, Tolerances};
use crate::oracle::{self, StabilityClass};
use crate::{DMat, DVec};

/// Fourier description of the driven periodic orbit `u_pi` and its action.
#[derive(Debug, Clone)]
pub struct PeriodicResponse {
    /// `B_2n` for `n = -n_max ..= n_max`, with `B_2n = B_{-2n}`.
    coeffs: Vec<DVec>,
    n_max: i64,
    /// secular slope of the action: `alpha(t) = secular * t + oscillatory`
    alpha_secular: f64,
    /// `alpha` oscillatory part `sum_k osc[k-1] sin(2 k t) / k`
    alpha_osc: Vec<f64>,
    f: usize,
}

impl PeriodicResponse {
    pub fn dof(&self) -> usize {
        self.f
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

    /// `u_pi(t) = B_0 + 2 sum_{n>=1} B_2n cos 2nt`.
    pub fn u_pi(&self, t: f64) -> DVec {
        let mut out = self.coeffs[self.n_max as usize].clone();
        for n in 1..=self.n_max {
            out += self.coeff(n).unwrap() * (2.0 * (2.0 * n as f64 * t).cos());
        }
        out
    }

    /// `d u_pi / dt`.
    pub fn u_pi_dot(&self, t: f64) -> DVec {
        let mut out = DVec::zeros(self.f);
        for n in 1..=self.n_max {
            out -= self.coeff(n).unwrap() * (4.0 * n as f64 * (2.0 * n as f64 * t).sin());
        }
        out
    }

    /// `d^2 u_pi / dt^2`.
    pub fn u_pi_ddot(&self, t: f64) -> DVec {
        let mut out = DVec::zeros(self.f);
        for n in 1..=self.n_max {
            let w = 2.0 * n as f64;
            out -= self.coeff(n).unwrap() * (2.0 * w * w * (w * t).cos());
        }
        out
    }

    /// Classical action of the periodic orbit, `alpha(0) = 0`.
    pub fn alpha(&self, t: f64) -> f64 {
        let mut a = self.alpha_secular * t;
        for (k, g) in self.alpha_osc.iter().enumerate() {
            let kk = (k + 1) as f64;
            a += g * (2.0 * kk * t).sin() / kk;
        }
        a
    }

    pub fn alpha_secular(&self) -> f64 {
        self.alpha_secular
    }

    pub fn alpha_osc(&self) -> &[f64] {
        &self.alpha_osc
    }
}

/// Solve for the unique pi-periodic response of a stable driven system.
pub fn periodic_solution(spec: &SystemSpec, tol: &Tolerances) -> Result<PeriodicResponse> {
    tol.validate()?;
    let f = spec.dof();
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

    let (chain, depth) = converged_even_chain(spec, tol)?;
    let q = spec.q2();

    // block system [[A, -2Q], [-Q, R_2 - Q S_4 Q]] (B_0; B_2) = (G; F)
    let mut block = DMat::zeros(2 * f, 2 * f);
    block.view_mut((0, 0), (f, f)).copy_from(spec.a());
    block.view_mut((0, f), (f, f)).copy_from(&(q * -2.0));
    block.view_mut((f, 0), (f, f)).copy_from(&(q * -1.0));
    let r2 = r_even(1, spec);
    block
        .view_mut((f, f), (f, f))
        .copy_from(&(r2 - q * &chain[2] * q));

    let mut rhs = DVec::zeros(2 * f);
    rhs.rows_mut(0, f).copy_from(spec.g());
    rhs.rows_mut(f, f).copy_from(spec.f_cos());

    let lu = nalgebra::linalg::LU::new(block.clone());
    let sol = lu.solve(&rhs).ok_or(Error::SingularBlockSystem)?;
    let inv = lu.try_inverse().ok_or(Error::SingularBlockSystem)?;
    if block.norm() * inv.norm() > 1e12 {
        return Err(Error::SingularBlockSystem);
    }

    let b0 = sol.rows(0, f).into_owned();
    let b2 = sol.rows(f, f).into_owned();

    let n_max = depth as i64;
    let mut coeffs = vec![DVec::zeros(f); (2 * n_max + 1) as usize];
    coeffs[n_max as usize] = b0;
    coeffs[(n_max + 1) as usize] = b2;
    for m in 2..=depth {
        let next = &chain[m] * (q * &coeffs[n_max as usize + m - 1]);
        coeffs[n_max as usize + m] = next;
    }
    for m in 1..=depth {
        coeffs[(n_max as usize) - m] = coeffs[n_max as usize + m].clone();
    }

    let (alpha_secular, alpha_osc) = action_coefficients(&coeffs, n_max, spec);

    Ok(PeriodicResponse {
        coeffs,
        n_max,
        alpha_secular,
        alpha_osc,
        f,
    })
}

// Upward chain at zero exponent: entry m holds S_{2m} = [R_{2m} - Q S_{2m+2} Q]^{-1}
// for m >= 2 (entries 0 and 1 are unused placeholders).
fn converged_even_chain(spec: &SystemSpec, tol: &Tolerances) -> Result<(Vec<DMat>, usize)> {
    let mut depth = tol.truncation_order.max(3);
    let mut prev = even_chain(spec, depth)?;
    loop {
        if depth >= continued::MAX_DEPTH {
            return Err(Error::NoConvergence {
                n_max: continued::MAX_DEPTH,
            });
        }
        depth *= 2;
        let next = even_chain(spec, depth)?;
        let delta = (&next[2] - &prev[2]).norm();
        let scale = next[2].norm().max(1e-300);
        if delta / scale < tol.convergence_tol {
            return Ok((next, depth));
        }
        prev = next;
    }
}

fn r_even(n: i64, spec: &SystemSpec) -> DMat {
    let shift = (2.0 * n as f64).powi(2);
    let mut m = spec.a().clone();
    for i in 0..spec.dof() {
        m[(i, i)] -= shift;
    }
    m
}

fn even_chain(spec: &SystemSpec, depth: usize) -> Result<Vec<DMat>> {
    let f = spec.dof();
    let q = spec.q2();
    let mut chain = vec![DMat::zeros(f, f); depth + 1];
    if q.iter().all(|&x| x == 0.0) {
        return Ok(chain);
    }
    let mut deeper: Option<DMat> = None;
    for m in (2..=depth).rev() {
        let mut w = r_even(m as i64, spec);
        if let Some(s) = &deeper {
            w -= q * s * q;
        }
        let inv = w.clone().try_inverse().ok_or(Error::SingularInnerMatrix {
            depth: m,
            cond: f64::INFINITY,
        })?;
        let cond = w.norm() * inv.norm();
        if !cond.is_finite() || cond > continued::COND_LIMIT {
            return Err(Error::SingularInnerMatrix { depth: m, cond });
        }
        chain[m] = inv.clone();
        deeper = Some(inv);
    }
    Ok(chain)
}

// Fourier coefficients of the action integrand
//   1/2 (u_pi')^2 + 1/2 u_pi . (u_pi'' + G + 2 F cos 2t),
// folded into the secular slope g_0 and the sin(2kt)/k amplitudes g_k.
fn action_coefficients(coeffs: &[DVec], n_max: i64, spec: &SystemSpec) -> (f64, Vec<f64>) {
    let b = |n: i64| -> Option<&DVec> {
        if n.abs() > n_max {
            None
        } else {
            Some(&coeffs[(n + n_max) as usize])
        }
    };
    let k_max = 2 * n_max + 1;
    let mut g = vec![0.0; (k_max + 1) as usize];
    for k in 0..=k_max {
        let mut gk = 0.0;
        for n in -n_max..=n_max {
            if let (Some(bn), Some(bkn)) = (b(n), b(k - n)) {
                let m = k - n;
                gk += 0.5 * (-4.0 * (n * m) as f64 - 4.0 * (m * m) as f64) * bn.dot(bkn);
            }
        }
        if let Some(bk) = b(k) {
            gk += 0.5 * bk.dot(spec.g());
        }
        if let Some(bkm) = b(k - 1) {
            gk += 0.5 * bkm.dot(spec.f_cos());
        }
        if let Some(bkp) = b(k + 1) {
            gk += 0.5 * bkp.dot(spec.f_cos());
        }
        g[k as usize] = gk;
    }
    let secular = g[0];
    let osc = g[1..].to_vec();
    (secular, osc)
}

/// Residual of the forced equation for a reconstructed response, the
/// worst norm over `samples` evenly spaced times in one period.
pub fn response_residual(resp: &PeriodicResponse, spec: &SystemSpec, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let t = PI * k as f64 / samples as f64;
        let res = resp.u_pi_ddot(t) + spec.stiffness(t) * resp.u_pi(t) - spec.drive(t);
        worst = worst.max(res.norm());
    }
    worst
}
