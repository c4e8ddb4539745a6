//! Slice-level kernels for the tiny dense matrices the model works with.
//!
//! Everything here operates on row-major `&[f64]` storage so the same code
//! serves single matrices and items of a batch.

use crate::error::{Error, Result};

/// Smallest determinant magnitude accepted by the closed-form inverses.
pub const DET_GUARD: f64 = 1e-300;

/// Condition-number cap (1-norm estimate) above which an inverse is refused.
pub const COND_CAP: f64 = 1e14;

#[inline]
fn at(data: &[f64], cols: usize, trans: bool, r: usize, c: usize) -> f64 {
    if trans {
        data[c * cols + r]
    } else {
        data[r * cols + c]
    }
}

/// `c ← alpha·op(a)·op(b) + beta·c` where `a` is stored `ar×ac` and `b` is
/// stored `br×bc`. The caller guarantees conformance.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    a: &[f64],
    (ar, ac): (usize, usize),
    trans_a: bool,
    b: &[f64],
    (br, bc): (usize, usize),
    trans_b: bool,
    alpha: f64,
    beta: f64,
    c: &mut [f64],
) {
    let (m, k) = if trans_a { (ac, ar) } else { (ar, ac) };
    let n = if trans_b { br } else { bc };
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for l in 0..k {
                acc += at(a, ac, trans_a, i, l) * at(b, bc, trans_b, l, j);
            }
            let out = &mut c[i * n + j];
            *out = if beta == 0.0 {
                alpha * acc
            } else {
                alpha * acc + beta * *out
            };
        }
    }
}

fn norm1(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of an `n×n` matrix. 1×1, 2×2 and 3×3 use the adjugate formula,
/// anything larger goes through LU with partial pivoting.
pub fn invert(a: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
    match n {
        0 => {}
        1 => {
            if a[0].abs() < DET_GUARD {
                return Err(Error::Singular(format!("|det| = {:e}", a[0].abs())));
            }
            out[0] = 1.0 / a[0];
        }
        2 => {
            let det = a[0] * a[3] - a[1] * a[2];
            if det.abs() < DET_GUARD || !det.is_finite() {
                return Err(Error::Singular(format!("|det| = {:e}", det.abs())));
            }
            let inv = 1.0 / det;
            out[0] = a[3] * inv;
            out[1] = -a[1] * inv;
            out[2] = -a[2] * inv;
            out[3] = a[0] * inv;
        }
        3 => {
            let c00 = a[4] * a[8] - a[5] * a[7];
            let c01 = a[5] * a[6] - a[3] * a[8];
            let c02 = a[3] * a[7] - a[4] * a[6];
            let det = a[0] * c00 + a[1] * c01 + a[2] * c02;
            if det.abs() < DET_GUARD || !det.is_finite() {
                return Err(Error::Singular(format!("|det| = {:e}", det.abs())));
            }
            let inv = 1.0 / det;
            out[0] = c00 * inv;
            out[1] = (a[2] * a[7] - a[1] * a[8]) * inv;
            out[2] = (a[1] * a[5] - a[2] * a[4]) * inv;
            out[3] = c01 * inv;
            out[4] = (a[0] * a[8] - a[2] * a[6]) * inv;
            out[5] = (a[2] * a[3] - a[0] * a[5]) * inv;
            out[6] = c02 * inv;
            out[7] = (a[1] * a[6] - a[0] * a[7]) * inv;
            out[8] = (a[0] * a[4] - a[1] * a[3]) * inv;
        }
        _ => invert_lu(a, n, out)?,
    }
    let cond = norm1(a, n) * norm1(out, n);
    if !cond.is_finite() || cond > COND_CAP {
        return Err(Error::Singular(format!("condition estimate {cond:e}")));
    }
    Ok(())
}

fn invert_lu(a: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[i * n + k].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax < DET_GUARD {
            return Err(Error::Singular(format!("zero pivot in column {k}")));
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let piv = lu[k * n + k];
        for i in (k + 1)..n {
            let f = lu[i * n + k] / piv;
            lu[i * n + k] = f;
            for j in (k + 1)..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
        }
    }
    // Solve LU x = P e_j column by column.
    let mut col = vec![0.0; n];
    for j in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = if perm[i] == j { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= lu[i * n + k] * col[k];
            }
            col[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= lu[i * n + k] * col[k];
            }
            col[i] = s / lu[i * n + i];
        }
        for i in 0..n {
            out[i * n + j] = col[i];
        }
    }
    Ok(())
}

/// Lower Cholesky factor; the strict upper triangle of `out` is set to zero.
pub fn cholesky(a: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
    out.iter_mut().for_each(|x| *x = 0.0);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= out[j * n + k] * out[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = d.sqrt();
        out[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= out[i * n + k] * out[j * n + k];
            }
            out[i * n + j] = s / ljj;
        }
    }
    Ok(())
}

/// Inverse of a symmetric positive definite `a`. Positive definiteness is
/// checked with a Cholesky factorization first; on failure `1e-10·trace/n`
/// is added to the diagonal once and the whole attempt repeated.
pub fn spd_invert(a: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
    let mut l = vec![0.0; n * n];
    let first = cholesky(a, n, &mut l).and_then(|_| invert(a, n, out));
    if first.is_ok() {
        return first;
    }
    let mut jittered = a.to_vec();
    let eps = 1e-10 * (0..n).map(|i| a[i * n + i]).sum::<f64>().abs() / n.max(1) as f64;
    for i in 0..n {
        jittered[i * n + i] += eps;
    }
    cholesky(&jittered, n, &mut l)?;
    invert(&jittered, n, out)
}

/// `ln |a|` for a symmetric positive definite `a`.
pub fn ln_det_spd(a: &[f64], n: usize) -> Result<f64> {
    let mut l = vec![0.0; n * n];
    cholesky(a, n, &mut l)?;
    Ok(2.0 * (0..n).map(|i| l[i * n + i].ln()).sum::<f64>())
}

/// `xᵀ A x` for a square `A`.
pub fn quad_form(a: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[i * n + j] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}

/// `out ← A x`.
pub fn mat_vec(a: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..n).map(|j| a[i * n + j] * x[j]).sum();
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Copy the lower triangle onto the upper one.
pub fn symmetrize_from_lower(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = a[j * n + i];
        }
    }
}

/// Replace `a` with `(a + aᵀ)/2`.
pub fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n * n];
        gemm(a, (n, n), false, b, (n, n), false, 1.0, 0.0, &mut c);
        c
    }

    #[test]
    fn lu_path_inverts_4x4() {
        let a = [
            4.0, 1.0, 0.5, 0.0, //
            1.0, 3.0, 0.2, 0.1, //
            0.5, 0.2, 2.0, 0.3, //
            0.0, 0.1, 0.3, 1.5,
        ];
        let mut inv = [0.0; 16];
        invert(&a, 4, &mut inv).unwrap();
        let p = mul(&a, &inv, 4);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i * 4 + j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lu_needs_pivoting() {
        let a = [0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 3.0];
        let mut inv = [0.0; 16];
        invert(&a, 4, &mut inv).unwrap();
        assert_eq!(inv[1], 1.0);
        assert_eq!(inv[4], 1.0);
        assert!((inv[10] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_by_three_adjugate() {
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let mut inv = [0.0; 9];
        invert(&a, 3, &mut inv).unwrap();
        let expect = [0.75, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 0.75];
        for (x, e) in inv.iter().zip(expect) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_refused() {
        let mut out = [0.0; 4];
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2, &mut out).is_err());
        assert!(invert(&[1.0, 0.0, 0.0, 1e-20], 2, &mut out).is_err());
    }

    #[test]
    fn cholesky_reports_pivot() {
        let mut out = [0.0; 4];
        let err = cholesky(&[1.0, 2.0, 2.0, 1.0], 2, &mut out).unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite { pivot: 1 });
    }
}
