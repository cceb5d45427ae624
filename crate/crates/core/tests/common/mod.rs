//! Shared helpers for the integration tests: an independent scalar
//! Mathieu continued-fraction oracle, a tiny deterministic RNG, and a
//! generator for random stable system specs.

#![allow(dead_code)]

use floquet_modes_core::model::SystemSpec;
use floquet_modes_core::oracle::{self, StabilityClass};
use floquet_modes_core::{DMat, DVec};

/// Depth used by the scalar continued fractions; far beyond convergence
/// for the parameter ranges exercised here.
pub const CF_DEPTH: usize = 60;

/// One branch of the classical scalar Mathieu continued fraction,
/// evaluated backward from a fixed depth:
/// `cf = q^2 / (a - (2 dir + b)^2 - q^2 / (a - (4 dir + b)^2 - ...))`.
pub fn scalar_cf(a: f64, q: f64, beta: f64, dir: f64) -> f64 {
    let mut val = 0.0;
    for m in (1..=CF_DEPTH).rev() {
        let r = a - (2.0 * m as f64 * dir + beta).powi(2);
        val = q * q / (r - val);
    }
    val
}

/// Same fraction with the first stage peeled off, i.e. starting at the
/// second harmonic: `q^2 / (a - (4 dir + b)^2 - ...)`.
pub fn scalar_cf_tail(a: f64, q: f64, beta: f64, dir: f64) -> f64 {
    let mut val = 0.0;
    for m in (2..=CF_DEPTH).rev() {
        let r = a - (2.0 * m as f64 * dir + beta).powi(2);
        val = q * q / (r - val);
    }
    val
}

/// Characteristic function whose zeros in beta are the scalar Mathieu
/// exponents: `g(beta) = a - beta^2 - cf(+) - cf(-)`.
pub fn scalar_char(a: f64, q: f64, beta: f64) -> f64 {
    a - beta * beta - scalar_cf(a, q, beta, 1.0) - scalar_cf(a, q, beta, -1.0)
}

/// Root of the scalar characteristic function near `guess`, bisected to
/// 1e-14; expands the bracket until it straddles a sign change.
pub fn scalar_cf_root(a: f64, q: f64, guess: f64) -> f64 {
    let mut w = 1e-3;
    let (mut lo, mut hi);
    loop {
        lo = guess - w;
        hi = guess + w;
        if scalar_char(a, q, lo) * scalar_char(a, q, hi) < 0.0 {
            break;
        }
        w *= 2.0;
        assert!(w < 0.1, "no scalar bracket near beta = {guess}");
    }
    let mut s_lo = scalar_char(a, q, lo);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let s_mid = scalar_char(a, q, mid);
        if (s_mid > 0.0) == (s_lo > 0.0) {
            lo = mid;
            s_lo = s_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scalar continued-fraction coefficient ratios `C_{+-2} / C_0`.
pub fn scalar_cf_ratio(a: f64, q: f64, beta: f64, dir: f64) -> f64 {
    scalar_cf(a, q, beta, dir) / q
}

/// splitmix64: tiny deterministic RNG, identical on every platform.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let x = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * x
    }
}

fn random_orthogonal(rng: &mut Rng, f: usize) -> DMat {
    let mut o = DMat::identity(f, f);
    for i in 0..f {
        for j in (i + 1)..f {
            let th = rng.uniform(0.0, std::f64::consts::TAU);
            let mut g = DMat::identity(f, f);
            g[(i, i)] = th.cos();
            g[(j, j)] = th.cos();
            g[(i, j)] = -th.sin();
            g[(j, i)] = th.sin();
            o *= g;
        }
    }
    o
}

/// Random stable spec with `||Q|| <= 0.3 ||A||`, rejection-sampled so the
/// Floquet analysis is well inside the stable region (multipliers spaced
/// away from each other and from the real axis).
pub fn random_stable_spec(rng: &mut Rng, f: usize) -> SystemSpec {
    loop {
        let o = random_orthogonal(rng, f);
        let mut d = DMat::zeros(f, f);
        for i in 0..f {
            // eigenvalues away from the resonances at 0, 1, 4
            d[(i, i)] = if rng.next_u64().is_multiple_of(2) {
                rng.uniform(0.12, 0.82)
            } else {
                rng.uniform(1.3, 3.4)
            };
        }
        let a = &o * d * o.transpose();
        let mut q = DMat::zeros(f, f);
        for i in 0..f {
            for j in 0..=i {
                let v = rng.uniform(-1.0, 1.0);
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        let target = rng.uniform(0.05, 0.3) * a.norm();
        q *= target / q.norm();
        let spec = match SystemSpec::new(a, q) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let Ok((dec, class)) = oracle::assess_stability(&spec, 2048, 1e-3) else {
            continue;
        };
        if class != StabilityClass::Stable {
            continue;
        }
        // keep the exponents comfortably separated so the determinant scan
        // always sees clean sign changes
        let mut betas: Vec<f64> = dec
            .multipliers
            .iter()
            .map(|l| {
                let b = l.arg() / std::f64::consts::PI;
                if b < 0.0 {
                    b + 2.0
                } else {
                    b
                }
            })
            .collect();
        betas.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let spaced = betas.windows(2).all(|w| w[1] - w[0] > 0.02);
        let interior = betas
            .iter()
            .all(|b| (b - b.round()).abs() > 0.03 && *b > 0.03 && *b < 2.0 - 0.03);
        if spaced && interior {
            return spec;
        }
    }
}

/// Random driven spec on top of a random stable homogeneous part.
pub fn random_driven_spec(rng: &mut Rng, f: usize) -> SystemSpec {
    let base = random_stable_spec(rng, f);
    let g = DVec::from_fn(f, |_, _| rng.uniform(-1.0, 1.0));
    let fc = DVec::from_fn(f, |_, _| rng.uniform(-0.5, 0.5));
    base.with_drive(Some(g), Some(fc)).unwrap()
}
