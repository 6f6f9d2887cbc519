use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{det3, dot, RealMatrix};

/// Connected components of `O(3)`, or the whole group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    /// Proper rotations, `det = +1`.
    So3,
    /// Improper rotations, `det = −1`.
    So3Minus,
    O3,
}

impl Component {
    pub fn contains_det(self, det: f64) -> bool {
        match self {
            Component::So3 => det > 0.0,
            Component::So3Minus => det < 0.0,
            Component::O3 => true,
        }
    }
}

/// Haar-distributed element of the requested component.
///
/// Gram–Schmidt on an i.i.d. Gaussian matrix gives the QR factor with a
/// positive-diagonal `R`, which is Haar on `O(3)`. Negating the whole matrix
/// flips the determinant in three dimensions and preserves Haar measure.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, component: Component) -> RealMatrix {
    loop {
        let g: Vec<[f64; 3]> = (0..3)
            .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let mut q: Vec<[f64; 3]> = Vec::with_capacity(3);
        let mut degenerate = false;
        for col in &g {
            let mut w = *col;
            for _ in 0..2 {
                for b in &q {
                    let p = dot(&w, b);
                    for k in 0..3 {
                        w[k] -= p * b[k];
                    }
                }
            }
            let n = dot(&w, &w).sqrt();
            if n < 1e-8 {
                degenerate = true;
                break;
            }
            q.push([w[0] / n, w[1] / n, w[2] / n]);
        }
        if degenerate {
            continue;
        }
        let mut m = RealMatrix::from_fn(3, 3, |i, j| q[j][i]);
        if !component.contains_det(det3(&m)) {
            m = m.scale(-1.0);
        }
        return m;
    }
}

/// `‖QᵀQ − I‖_max`
pub fn orthogonality_defect(q: &RealMatrix) -> f64 {
    if !q.is_square() {
        return f64::INFINITY;
    }
    (&(&q.transpose() * q) - &RealMatrix::identity(q.cols())).max_abs()
}
