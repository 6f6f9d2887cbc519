//! One-sided Jacobi SVD and the norms built on it.

use super::{det3, dot, norm, Component, RealMatrix};
use crate::error::{Error, Result};

/// Default relative cutoff for the pseudoinverse and for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// `sgn(det X)` is reported as 0 once `s₃ ≤ DET_SIGN_REL_TOL · s₁`.
pub const DET_SIGN_REL_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// Full singular value decomposition `X = U · diag(s) · Vᵀ`.
///
/// `u` is `rows × rows`, `v` is `cols × cols`, both orthogonal; `s` holds the
/// `min(rows, cols)` singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: RealMatrix,
    pub s: Vec<f64>,
    pub v: RealMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> RealMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        RealMatrix::from_fn(m, n, |i, j| {
            self.s
                .iter()
                .enumerate()
                .map(|(k, s)| self.u[(i, k)] * s * self.v[(j, k)])
                .sum()
        })
    }

    /// Number of singular values strictly above `rel_tol · s₁`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }
}

pub fn svd(x: &RealMatrix) -> Result<Svd> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if x.rows() < x.cols() {
        let t = svd_tall(&x.transpose());
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    Ok(svd_tall(x))
}

/// Hestenes one-sided Jacobi on the columns of a matrix with `rows ≥ cols`.
fn svd_tall(x: &RealMatrix) -> Svd {
    let (m, n) = x.shape();
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + 1f64.hypot(zeta));
                let c = 1.0 / 1f64.hypot(t);
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let s: Vec<f64> = order.iter().map(|&k| sigma[k]).collect();
    let smax = s.first().copied().unwrap_or(0.0);

    // Columns with negligible norm carry no reliable direction; they are
    // replaced by an orthonormal completion.
    let mut u_cols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&k| {
            if sigma[k] > 0.0 && sigma[k] > 1e-13 * smax {
                Some(a[k].iter().map(|x| x / sigma[k]).collect())
            } else {
                None
            }
        })
        .collect();
    let mut basis: Vec<Vec<f64>> = u_cols.iter().flatten().cloned().collect();
    for slot in u_cols.iter_mut().filter(|c| c.is_none()) {
        let e = complete_one(&basis, m);
        basis.push(e.clone());
        *slot = Some(e);
    }
    let mut u: Vec<Vec<f64>> = u_cols.into_iter().flatten().collect();
    while u.len() < m {
        let e = complete_one(&basis, m);
        basis.push(e.clone());
        u.push(e);
    }
    let v_sorted: Vec<Vec<f64>> = order.iter().map(|&k| v[k].clone()).collect();

    Svd {
        u: RealMatrix::from_columns(&u).expect("finite"),
        s,
        v: RealMatrix::from_columns(&v_sorted).expect("finite"),
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// A unit vector orthogonal to every vector in `basis`, taken from the
/// coordinate axis with the largest residual.
pub(crate) fn complete_one(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let residual = |k: usize| {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let p = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        e
    };
    let best = (0..dim)
        .map(residual)
        .max_by(|x, y| norm(x).total_cmp(&norm(y)))
        .expect("dim > 0");
    let nrm = norm(&best);
    best.into_iter().map(|x| x / nrm).collect()
}

/// SVD with rotation factors: `X = U · diag(s̃) · Vᵀ`, `U, V ∈ SO(3)`,
/// `s̃ = (s₁, s₂, ±s₃)` with the sign of `det X` carried by `s̃₃`.
#[derive(Debug, Clone)]
pub struct SpecialSvd {
    pub u: RealMatrix,
    pub s_tilde: [f64; 3],
    pub v: RealMatrix,
}

impl SpecialSvd {
    pub fn reconstruct(&self) -> RealMatrix {
        &(&self.u * &RealMatrix::from_diag(&self.s_tilde)) * &self.v.transpose()
    }
}

fn require_3x3(x: &RealMatrix, what: &str) -> Result<()> {
    if x.shape() != (3, 3) {
        return Err(Error::Dimension(format!(
            "{what} needs a 3x3 matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

fn flip_last_column(m: &mut RealMatrix) {
    for i in 0..m.rows() {
        m[(i, 2)] = -m[(i, 2)];
    }
}

pub fn special_svd(x: &RealMatrix) -> Result<SpecialSvd> {
    require_3x3(x, "special SVD")?;
    let Svd { mut u, s, mut v } = svd(x)?;
    let mut sign = 1.0;
    if det3(&u) < 0.0 {
        flip_last_column(&mut u);
        sign = -sign;
    }
    if det3(&v) < 0.0 {
        flip_last_column(&mut v);
        sign = -sign;
    }
    Ok(SpecialSvd {
        u,
        s_tilde: [s[0], s[1], sign * s[2]],
        v,
    })
}

/// `sgn(det X)` for a 3×3 matrix, read off the orientation of the SVD
/// factors; 0 when `s₃` is negligible against `s₁`.
pub fn det_sign(x: &RealMatrix) -> Result<f64> {
    let sv = special_svd(x)?;
    Ok(sign_of_special(&sv.s_tilde))
}

fn sign_of_special(st: &[f64; 3]) -> f64 {
    if st[2].abs() <= DET_SIGN_REL_TOL * st[0] || st[2] == 0.0 {
        0.0
    } else {
        st[2].signum()
    }
}

/// Moore–Penrose pseudoinverse; singular values at or below
/// `rank_tol · s₁` are treated as zero.
pub fn pinv(x: &RealMatrix, rank_tol: f64) -> Result<RealMatrix> {
    if rank_tol < 0.0 || !rank_tol.is_finite() {
        return Err(Error::Invalid(format!("rank_tol must be >= 0, got {rank_tol}")));
    }
    let sv = svd(x)?;
    let cutoff = rank_tol * sv.s[0];
    let (m, n) = x.shape();
    let mut out = RealMatrix::zeros(n, m);
    for (k, &s) in sv.s.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = sv.v[(i, k)] / s;
            for j in 0..m {
                out[(i, j)] += vik * sv.u[(j, k)];
            }
        }
    }
    Ok(out)
}

pub fn op_norm(x: &RealMatrix) -> Result<f64> {
    Ok(svd(x)?.s[0])
}

pub fn trace_norm(x: &RealMatrix) -> Result<f64> {
    Ok(svd(x)?.s.iter().sum())
}

/// `‖X‖₊ = s₁ + s₂ + s₃·sgn(det X)`.
pub fn norm_plus(x: &RealMatrix) -> Result<f64> {
    require_3x3(x, "norm_plus")?;
    let st = special_svd(x)?.s_tilde;
    Ok(st[0] + st[1] + st[2].abs() * sign_of_special(&st))
}

/// `‖X‖₋ = s₁ + s₂ − s₃·sgn(det X)`.
pub fn norm_minus(x: &RealMatrix) -> Result<f64> {
    require_3x3(x, "norm_minus")?;
    let st = special_svd(x)?.s_tilde;
    Ok(st[0] + st[1] - st[2].abs() * sign_of_special(&st))
}

/// Maximizes `Tr[Xᵀ Q]` over one component of `O(3)` (orthogonal Procrustes).
///
/// Returns the maximum and a maximizer: `‖X‖₊` on `SO(3)`, `‖X‖₋` on
/// `SO⁻(3)`, `‖X‖₁` on `O(3)`.
pub fn max_trace_over_rotations(x: &RealMatrix, component: Component) -> Result<(f64, RealMatrix)> {
    require_3x3(x, "Procrustes maximization")?;
    let Svd { u, s, v } = svd(x)?;
    let orientation = det3(&u) * det3(&v);
    let d = match component {
        Component::O3 => 1.0,
        Component::So3 => orientation.signum(),
        Component::So3Minus => -orientation.signum(),
    };
    let q = &(&u * &RealMatrix::from_diag(&[1.0, 1.0, d])) * &v.transpose();
    Ok((s[0] + s[1] + d * s[2], q))
}
