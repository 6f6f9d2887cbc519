//! Measurement settings of the (2, m, 2) scenario.
//!
//! Each party measures `m` dichotomic observables `Âᵢ = aᵢ·σ`, so a setting
//! is fully described by two `m × 3` matrices whose rows are unit Bloch
//! directions.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::{pinv, svd, RealMatrix, DEFAULT_RANK_TOL};

/// Rows must be unit vectors to within this tolerance.
pub const UNIT_ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSettings", into = "RawSettings")]
pub struct MeasurementSettings {
    a: RealMatrix,
    b: RealMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawSettings {
    #[serde(rename = "A")]
    a: RealMatrix,
    #[serde(rename = "B")]
    b: RealMatrix,
}

impl TryFrom<RawSettings> for MeasurementSettings {
    type Error = Error;
    fn try_from(raw: RawSettings) -> Result<Self> {
        Self::new(raw.a, raw.b)
    }
}

impl From<MeasurementSettings> for RawSettings {
    fn from(s: MeasurementSettings) -> Self {
        RawSettings { a: s.a, b: s.b }
    }
}

impl MeasurementSettings {
    pub fn new(a: RealMatrix, b: RealMatrix) -> Result<Self> {
        if a.cols() != 3 || b.cols() != 3 {
            return Err(Error::Dimension(format!(
                "settings need m x 3 matrices, got {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        if a.rows() != b.rows() {
            return Err(Error::Dimension(format!(
                "both parties need the same number of settings, got {} and {}",
                a.rows(),
                b.rows()
            )));
        }
        for (party, x) in [('A', &a), ('B', &b)] {
            for i in 0..x.rows() {
                let norm = crate::mat3::norm(x.row(i));
                if (norm - 1.0).abs() > UNIT_ROW_TOL {
                    return Err(Error::NonUnitRow {
                        party,
                        index: i,
                        norm,
                    });
                }
            }
        }
        Ok(Self { a, b })
    }

    pub fn from_rows<R: AsRef<[f64]>>(a: &[R], b: &[R]) -> Result<Self> {
        Self::new(RealMatrix::from_rows(a)?, RealMatrix::from_rows(b)?)
    }

    /// Number of settings per party.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn b(&self) -> &RealMatrix {
        &self.b
    }

    pub fn rank_a(&self) -> usize {
        numerical_rank(&self.a)
    }

    pub fn rank_b(&self) -> usize {
        numerical_rank(&self.b)
    }

    /// `r = min{rank A, rank B}`.
    pub fn r(&self) -> usize {
        self.rank_a().min(self.rank_b())
    }

    pub fn gram_a(&self) -> RealMatrix {
        &self.a * &self.a.transpose()
    }

    pub fn gram_b(&self) -> RealMatrix {
        &self.b * &self.b.transpose()
    }

    pub fn pinv_a(&self) -> RealMatrix {
        pinv(&self.a, DEFAULT_RANK_TOL).expect("validated settings are finite")
    }

    pub fn pinv_b(&self) -> RealMatrix {
        pinv(&self.b, DEFAULT_RANK_TOL).expect("validated settings are finite")
    }

    /// `Aᵀ Z B`, the 3×3 matrix every support function depends on.
    pub fn pullback(&self, z: &RealMatrix) -> Result<RealMatrix> {
        self.check_square(z, "coefficient matrix")?;
        Ok(&(&self.a.transpose() * z) * &self.b)
    }

    /// `A⁺ C (Bᵀ)⁺`, the 3×3 matrix every gauge function depends on.
    pub fn pushforward(&self, c: &RealMatrix) -> Result<RealMatrix> {
        self.check_square(c, "correlation matrix")?;
        Ok(&(&self.pinv_a() * c) * &self.pinv_b().transpose())
    }

    /// `A Q Bᵀ` for a 3×3 Bloch-space matrix `Q`.
    pub fn correlations_of(&self, t: &RealMatrix) -> Result<RealMatrix> {
        if t.shape() != (3, 3) {
            return Err(Error::Dimension(format!(
                "Bloch correlation matrix must be 3x3, got {:?}",
                t.shape()
            )));
        }
        Ok(&(&self.a * t) * &self.b.transpose())
    }

    /// Angles `(α, β)` between the two directions of each party; `m = 2` only.
    pub fn angles(&self) -> Result<(f64, f64)> {
        if self.m() != 2 {
            return Err(Error::Dimension(format!(
                "angles are defined for m = 2, got m = {}",
                self.m()
            )));
        }
        let cos = |x: &RealMatrix| crate::mat3::dot(x.row(0), x.row(1)).clamp(-1.0, 1.0).acos();
        Ok((cos(&self.a), cos(&self.b)))
    }

    /// Restriction to a subset of each party's settings.
    pub fn subset(&self, rows_a: &[usize], rows_b: &[usize]) -> Result<Self> {
        let pick = |x: &RealMatrix, rows: &[usize]| -> Result<RealMatrix> {
            if rows.iter().any(|&i| i >= x.rows()) {
                return Err(Error::Invalid(format!("setting index out of range: {rows:?}")));
            }
            RealMatrix::from_rows(&rows.iter().map(|&i| x.row(i).to_vec()).collect::<Vec<_>>())
        };
        Self::new(pick(&self.a, rows_a)?, pick(&self.b, rows_b)?)
    }

    pub(crate) fn check_square(&self, z: &RealMatrix, what: &str) -> Result<()> {
        let m = self.m();
        if z.shape() != (m, m) {
            return Err(Error::Dimension(format!(
                "{what} must be {m}x{m}, got {}x{}",
                z.rows(),
                z.cols()
            )));
        }
        Ok(())
    }

    /// Standard CHSH settings: `A = (σ₃, σ₁)`, `B = ((σ₃ ± σ₁)/√2)`.
    pub fn chsh() -> Self {
        let h = FRAC_1_SQRT_2;
        Self::from_rows(
            &[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
            &[[h, 0.0, h], [-h, 0.0, h]],
        )
        .expect("valid")
    }

    /// Pauli settings `A = B = I₃`.
    pub fn pauli3() -> Self {
        Self::new(RealMatrix::identity(3), RealMatrix::identity(3)).expect("valid")
    }

    /// `A = I₃` with Bob measuring `(σ₁+σ₃)/√2, σ₂, (σ₁−σ₃)/√2`.
    pub fn b_rot() -> Self {
        let h = FRAC_1_SQRT_2;
        Self::new(
            RealMatrix::identity(3),
            RealMatrix::from_rows(&[[h, 0.0, h], [0.0, 1.0, 0.0], [h, 0.0, -h]]).expect("valid"),
        )
        .expect("valid")
    }

    /// Coplanar settings maximizing `I3322` on `|Φ⁺⟩`: Alice at
    /// `0, −π/3, −2π/3` and Bob at `−π/3, 0, π/3` from the z-axis, in the
    /// xz-plane.
    pub fn i3322_optimal() -> Self {
        let s = 3f64.sqrt() / 2.0;
        Self::from_rows(
            &[[0.0, 0.0, 1.0], [-s, 0.0, 0.5], [-s, 0.0, -0.5]],
            &[[-s, 0.0, 0.5], [0.0, 0.0, 1.0], [s, 0.0, 0.5]],
        )
        .expect("valid")
    }

    pub const NAMES: [&'static str; 4] = ["chsh", "pauli3", "b-rot", "i3322-opt"];

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "chsh" => Some(Self::chsh()),
            "pauli3" => Some(Self::pauli3()),
            "b-rot" => Some(Self::b_rot()),
            "i3322-opt" => Some(Self::i3322_optimal()),
            _ => None,
        }
    }
}

fn numerical_rank(x: &RealMatrix) -> usize {
    svd(x).expect("validated settings are finite").rank(DEFAULT_RANK_TOL)
}
