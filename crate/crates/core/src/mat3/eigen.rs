use super::RealMatrix;
use crate::error::{Error, Result};

/// Spectrum of a real symmetric matrix, eigenvalues ascending, eigenvectors
/// in the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: RealMatrix,
}

/// Cyclic Jacobi eigensolver. The input is symmetrized as `(X + Xᵀ)/2`
/// after checking that the asymmetry is below `1e-10 · max(1, ‖X‖_F)`.
pub fn symmetric_eigen(x: &RealMatrix) -> Result<SymmetricEigen> {
    if !x.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition of non-square {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = x.rows();
    let asym = (x - &x.transpose()).frobenius_norm();
    if asym > 1e-10 * x.frobenius_norm().max(1.0) {
        return Err(Error::Invalid(format!(
            "matrix is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    let mut a = (x + &x.transpose()).scale(0.5);
    let mut v = RealMatrix::identity(n);

    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= f64::MIN_POSITIVE {
            break;
        }
        let mut changed = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                changed = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + 1f64.hypot(theta));
                let c = 1.0 / 1f64.hypot(t);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    Ok(SymmetricEigen {
        values: order.iter().map(|&k| a[(k, k)]).collect(),
        vectors: RealMatrix::from_fn(n, n, |i, j| v[(i, order[j])]),
    })
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues
/// below `n·ε·λ_max`, including negative ones from roundoff, are treated as
/// zero.
pub fn sqrt_psd(x: &RealMatrix) -> Result<RealMatrix> {
    let SymmetricEigen { values, vectors } = symmetric_eigen(x)?;
    let n = values.len();
    let top = values.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let floor = n as f64 * f64::EPSILON * top;
    let roots: Vec<f64> = values.iter().map(|&l| if l <= floor { 0.0 } else { l.sqrt() }).collect();
    Ok(RealMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| vectors[(i, k)] * roots[k] * vectors[(j, k)]).sum()
    }))
}
