//! Small dense linear-algebra helpers shared by the solver modules.

use nalgebra::SVD;
use num_complex::Complex64;

use crate::{CMat, CVec, DMat, DVec};

pub fn complexify(m: &DMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn complexify_vec(v: &DVec) -> CVec {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Cheap condition estimate from the Frobenius norms of a matrix and its
/// inverse. Returns infinity for singular input.
pub fn cond_frobenius(m: &DMat, m_inv: &DMat) -> f64 {
    m.norm() * m_inv.norm()
}

pub fn cond_svd_complex(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Right singular vectors belonging to the `count` smallest singular values.
pub fn smallest_right_singular_vectors(m: &CMat, count: usize) -> Vec<CVec> {
    let n = m.ncols();
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("SVD requested with right singular vectors");
    // nalgebra sorts singular values in descending order; the kernel-side
    // vectors are the trailing rows of V^H
    (0..count)
        .map(|k| v_t.row(n - 1 - k).adjoint().column(0).into_owned())
        .collect()
}

/// Real-matrix variant; returns unit vectors with a deterministic sign.
pub fn smallest_right_singular_vectors_real(m: &DMat, count: usize) -> Vec<DVec> {
    let n = m.ncols();
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("SVD requested with right singular vectors");
    (0..count)
        .map(|k| fix_sign(v_t.row(n - 1 - k).transpose().column(0).into_owned()))
        .collect()
}

/// Singular values in descending order.
pub fn singular_values(m: &DMat) -> DVec {
    m.clone().singular_values()
}

pub fn singular_values_complex(m: &CMat) -> DVec {
    m.clone().singular_values()
}

/// Flip the overall sign so the first entry that is clearly nonzero is
/// positive. Makes kernel-vector output reproducible.
pub fn fix_sign(mut v: DVec) -> DVec {
    let scale = v.norm();
    if scale == 0.0 {
        return v;
    }
    for i in 0..v.len() {
        if v[i].abs() > 1e-12 * scale {
            if v[i] < 0.0 {
                v.neg_mut();
            }
            break;
        }
    }
    v
}

pub fn max_abs_complex(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn kernel_vector_of_singular_matrix() {
        let m = dmatrix![0.0, 0.0; 0.0, 2.0];
        let vs = smallest_right_singular_vectors_real(&m, 1);
        assert!((vs[0][0].abs() - 1.0).abs() < 1e-12);
        assert!(vs[0][1].abs() < 1e-12);
        assert!(vs[0][0] > 0.0, "sign convention");
    }

    #[test]
    fn sign_fix_skips_noise_entries() {
        let v = DVec::from_vec(vec![1e-16, -3.0, 1.0]);
        let fixed = fix_sign(v);
        assert!(fixed[1] > 0.0);
    }
}
