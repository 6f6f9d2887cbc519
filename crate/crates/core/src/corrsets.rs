//! Correlation sets of the two-qubit (2, m, 2) scenario.
//!
//! For fixed settings `(A, B)` each model of the state space gives a convex
//! set of `m × m` correlation matrices. This module evaluates their support
//! functions `φ(Z) = sup ⟨Z, C⟩` and gauge functions `γ(C)`, the optimal
//! witnesses `Z★`, and the extreme points that generate each set.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::{
    det3_intrinsic, dot, norm, norm_minus, norm_plus, op_norm, orthogonality_defect, special_svd,
    sqrt_psd, svd, trace_norm, vec, RealMatrix, DET_SIGN_REL_TOL,
};
use crate::pauli::{bloch_observable, pauli_expand, Operator4};
use crate::settings::MeasurementSettings;

/// Relative Frobenius threshold for the range condition of the gauge.
pub const RANGE_TOL: f64 = 1e-8;

/// Which state space generates the correlation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelTag {
    /// Separable states.
    Sep,
    /// Quantum states.
    Qm,
    /// Block-positive operators (maximal tensor product).
    Max,
}

impl ModelTag {
    pub const ALL: [ModelTag; 3] = [ModelTag::Sep, ModelTag::Qm, ModelTag::Max];
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Sep => "SEP",
            ModelTag::Qm => "QM",
            ModelTag::Max => "MAX",
        })
    }
}

impl FromStr for ModelTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sep" => Ok(ModelTag::Sep),
            "qm" => Ok(ModelTag::Qm),
            "max" => Ok(ModelTag::Max),
            _ => Err(Error::Invalid(format!("unknown model '{s}', expected sep, qm or max"))),
        }
    }
}

/// Value of a gauge function; `+∞` when `C` lies outside the span of the set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeValue {
    pub finite: bool,
    /// `f64::INFINITY` when not finite.
    pub value: f64,
}

impl GaugeValue {
    pub fn finite(value: f64) -> Self {
        Self { finite: true, value }
    }

    pub fn infinite() -> Self {
        Self {
            finite: false,
            value: f64::INFINITY,
        }
    }

    pub fn get(self) -> Option<f64> {
        self.finite.then_some(self.value)
    }
}

impl fmt::Display for GaugeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.finite {
            write!(f, "{}", self.value)
        } else {
            f.write_str("infinite")
        }
    }
}

/// `cᵢⱼ = Tr[ρ (aᵢ·σ ⊗ bⱼ·σ)]`, evaluated as `A T Bᵀ`.
pub fn correlation_matrix(rho: &Operator4, s: &MeasurementSettings) -> Result<RealMatrix> {
    let t = pauli_expand(rho)?.t;
    s.correlations_of(&t)
}

/// `cᵢⱼ = Tr[ρ (aᵢ·σ ⊗ bⱼ·σ)]`, evaluated one trace at a time.
pub fn correlation_matrix_by_trace(rho: &Operator4, s: &MeasurementSettings) -> Result<RealMatrix> {
    if !rho.is_hermitian() {
        return Err(Error::NotHermitian(rho.hermiticity_defect()));
    }
    let m = s.m();
    Ok(RealMatrix::from_fn(m, m, |i, j| {
        let obs = Operator4::kron(
            &bloch_observable(s.a().row(i)),
            &bloch_observable(s.b().row(j)),
        );
        rho.expectation(&obs)
    }))
}

/// Support function `φ(Z) = max ⟨Z, C⟩` over the correlation set.
///
/// With `X = AᵀZB`: `‖X‖_∞` for SEP, `‖X‖₋` for QM and `‖X‖₁` for MAX.
pub fn support(model: ModelTag, s: &MeasurementSettings, z: &RealMatrix) -> Result<f64> {
    let x = s.pullback(z)?;
    match model {
        ModelTag::Sep => op_norm(&x),
        ModelTag::Qm => norm_minus(&x),
        ModelTag::Max => trace_norm(&x),
    }
}

/// Cosines and sines of the two angles between each party's directions.
struct Angles {
    ca: f64,
    sa: f64,
    cb: f64,
    sb: f64,
}

fn angles_m2(s: &MeasurementSettings) -> Result<Angles> {
    if s.m() != 2 {
        return Err(Error::Dimension(format!(
            "closed forms need m = 2, got m = {}",
            s.m()
        )));
    }
    let cs = |x: &RealMatrix| {
        let (a1, a2) = (x.row(0), x.row(1));
        let c = dot(a1, a2);
        let cr = crate::mat3::cross(&[a1[0], a1[1], a1[2]], &[a2[0], a2[1], a2[2]]);
        (c, norm(&cr))
    };
    let (ca, sa) = cs(s.a());
    let (cb, sb) = cs(s.b());
    Ok(Angles { ca, sa, cb, sb })
}

fn gram2(c: f64) -> RealMatrix {
    RealMatrix::from_rows(&[[1.0, c], [c, 1.0]]).expect("2x2")
}

/// `Tr[X Z Y Zᵀ]` for 2×2 matrices.
fn tr_sandwich(x: &RealMatrix, z: &RealMatrix, y: &RealMatrix) -> f64 {
    (&(&(x * z) * y) * &z.transpose()).trace()
}

fn det2(z: &RealMatrix) -> f64 {
    z[(0, 0)] * z[(1, 1)] - z[(0, 1)] * z[(1, 0)]
}

/// Support function for `m = 2` in terms of the angles `α, β`:
///
/// ```text
/// φ_sep = √( (Tr[G_α Z G_β Zᵀ] + |Tr[G_α Z H_β Zᵀ]|) / 2 )
/// φ_qm  = √( Tr[G_α Z G_β Zᵀ] + 2|det Z| sin α sin β )
/// ```
///
/// with `G_θ = [[1, cos θ], [cos θ, 1]]` and
/// `H_θ = [[e^{−iθ}, 1], [1, e^{iθ}]]`. For `m = 2` the QM and MAX sets
/// coincide, so `Max` evaluates the QM expression.
pub fn support_m2_closed_form(model: ModelTag, s: &MeasurementSettings, z: &RealMatrix) -> Result<f64> {
    let ang = angles_m2(s)?;
    s.check_square(z, "coefficient matrix")?;
    let ga = gram2(ang.ca);
    let gb = gram2(ang.cb);
    let k = tr_sandwich(&ga, z, &gb);
    let value = match model {
        ModelTag::Sep => {
            let h_re = gram2_offdiag(ang.cb, 1.0);
            let h_im = RealMatrix::from_diag(&[-ang.sb, ang.sb]);
            let j = tr_sandwich(&ga, z, &h_re).hypot(tr_sandwich(&ga, z, &h_im));
            (k + j) / 2.0
        }
        ModelTag::Qm | ModelTag::Max => k + 2.0 * det2(z).abs() * ang.sa * ang.sb,
    };
    Ok(value.max(0.0).sqrt())
}

/// `[[d, o], [o, d]]`
fn gram2_offdiag(d: f64, o: f64) -> RealMatrix {
    RealMatrix::from_rows(&[[d, o], [o, d]]).expect("2x2")
}

/// The same `m = 2` support function written as quadratic forms in
/// `z = vec Z`, with `K = G_β ⊗ G_α` and `J = H_β ⊗ G_α`.
pub fn support_m2_quadratic_form(model: ModelTag, s: &MeasurementSettings, z: &RealMatrix) -> Result<f64> {
    let ang = angles_m2(s)?;
    s.check_square(z, "coefficient matrix")?;
    let zv = vec(z);
    let ga = gram2(ang.ca);
    let k = quad(&crate::mat3::kron(&gram2(ang.cb), &ga), &zv);
    let value = match model {
        ModelTag::Sep => {
            let j_re = quad(&crate::mat3::kron(&gram2_offdiag(ang.cb, 1.0), &ga), &zv);
            let j_im = quad(
                &crate::mat3::kron(&RealMatrix::from_diag(&[-ang.sb, ang.sb]), &ga),
                &zv,
            );
            (k + j_re.hypot(j_im)) / 2.0
        }
        ModelTag::Qm | ModelTag::Max => k + 2.0 * det2(z).abs() * ang.sa * ang.sb,
    };
    Ok(value.max(0.0).sqrt())
}

fn quad(m: &RealMatrix, v: &[f64]) -> f64 {
    dot(v, &m.mul_vec(v))
}

/// Whether `C = A Y Bᵀ` has a solution, i.e. `ran C ⊆ ran A` and
/// `ran Cᵀ ⊆ ran B` up to [`RANGE_TOL`].
pub fn range_condition(s: &MeasurementSettings, c: &RealMatrix) -> Result<bool> {
    s.check_square(c, "correlation matrix")?;
    let m = s.m();
    let pa = &RealMatrix::identity(m) - &(s.a() * &s.pinv_a());
    let pb = &RealMatrix::identity(m) - &(s.b() * &s.pinv_b());
    let scale = RANGE_TOL * c.frobenius_norm();
    Ok((&pa * c).frobenius_norm() <= scale && (&pb * &c.transpose()).frobenius_norm() <= scale)
}

/// Gauge function `γ(C) = inf{t > 0 : C ∈ t·K}`.
///
/// With `W = A⁺ C (Bᵀ)⁺`: `‖W‖₁` for SEP, `‖W‖₊` for QM when both settings
/// span all of ℝ³ and `‖W‖_∞` otherwise, `‖W‖_∞` for MAX. Infinite when the
/// range condition fails.
pub fn gauge(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix) -> Result<GaugeValue> {
    if !range_condition(s, c)? {
        return Ok(GaugeValue::infinite());
    }
    let w = s.pushforward(c)?;
    let value = match model {
        ModelTag::Sep => trace_norm(&w)?,
        ModelTag::Qm if s.r() == 3 => norm_plus(&w)?,
        ModelTag::Qm | ModelTag::Max => op_norm(&w)?,
    };
    Ok(GaugeValue::finite(value))
}

/// Gauge function for `m = 2` with `sin α sin β > 0`:
///
/// ```text
/// γ_sep = √( Tr[G_α⁻¹ C G_β⁻¹ Cᵀ] + 2|det C| / (sin α sin β) )
/// γ_qm  = ½ ( √Tr[L_α C L_βᵀ Cᵀ] + √Tr[L_α C L_{−β}ᵀ Cᵀ] )
/// ```
///
/// with `L_θ = [[1, −e^{iθ}], [−e^{−iθ}, 1]] / sin²θ`. `Max` evaluates the
/// QM expression.
///
/// Both are evaluated in factored form. `G_θ = R_θ R_θᵀ` with
/// `R_θ = [[1, 0], [cos θ, sin θ]]` turns the first trace into
/// `‖R_α⁻¹ C R_β⁻ᵀ‖²_F`, and `L_θ = ℓ_θ ℓ_θ† / sin²θ` with
/// `ℓ_θ = (1, −e^{−iθ})` turns each square root into
/// `|ℓ_α† C ℓ̄_{±β}| / (sin α sin β)`. Squaring first would lose half the
/// significant digits when `sin α sin β` is small.
pub fn gauge_m2_closed_form(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix) -> Result<f64> {
    let ang = nondegenerate_angles(s)?;
    s.check_square(c, "correlation matrix")?;
    match model {
        ModelTag::Sep => {
            let ra_inv = RealMatrix::from_rows(&[[1.0, 0.0], [-ang.ca / ang.sa, 1.0 / ang.sa]]).expect("2x2");
            let rb_inv = RealMatrix::from_rows(&[[1.0, 0.0], [-ang.cb / ang.sb, 1.0 / ang.sb]]).expect("2x2");
            let w = &(&ra_inv * c) * &rb_inv.transpose();
            let f = w.frobenius_norm();
            Ok((f * f + 2.0 * det2(&w).abs()).sqrt())
        }
        ModelTag::Qm | ModelTag::Max => {
            let ell = |cos: f64, sin: f64| [Complex64::new(1.0, 0.0), -Complex64::new(cos, -sin)];
            let la = ell(ang.ca, ang.sa);
            let branch = |sb: f64| {
                let lb = ell(ang.cb, sb);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..2 {
                    for j in 0..2 {
                        acc += la[i].conj() * c[(i, j)] * lb[j].conj();
                    }
                }
                acc.norm()
            };
            Ok(0.5 * (branch(ang.sb) + branch(-ang.sb)) / (ang.sa * ang.sb))
        }
    }
}

/// The `m = 2` gauge as quadratic forms in `c = vec C`: `K⁻¹` for SEP and
/// the two real 4×4 matrices `F_{α,±β}` for QM.
pub fn gauge_m2_quadratic_form(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix) -> Result<f64> {
    let ang = nondegenerate_angles(s)?;
    s.check_square(c, "correlation matrix")?;
    let cv = vec(c);
    match model {
        ModelTag::Sep => {
            let ga_inv = gram2_offdiag(1.0, -ang.ca).scale(1.0 / (ang.sa * ang.sa));
            let gb_inv = gram2_offdiag(1.0, -ang.cb).scale(1.0 / (ang.sb * ang.sb));
            let k_inv = crate::mat3::kron(&gb_inv, &ga_inv);
            let v = quad(&k_inv, &cv) + 2.0 * det2(c).abs() / (ang.sa * ang.sb);
            Ok(v.max(0.0).sqrt())
        }
        ModelTag::Qm | ModelTag::Max => {
            let plus = quad(&f_matrix(&ang, 1.0), &cv).max(0.0).sqrt();
            let minus = quad(&f_matrix(&ang, -1.0), &cv).max(0.0).sqrt();
            Ok(0.5 * (plus + minus))
        }
    }
}

/// `F_{α, ±β}`; `sign` picks the sign of `β`.
fn f_matrix(ang: &Angles, sign: f64) -> RealMatrix {
    let (ca, sa, cb) = (ang.ca, ang.sa, ang.cb);
    let sb = sign * ang.sb;
    let cos_sum = ca * cb - sa * sb;
    let cos_diff = ca * cb + sa * sb;
    let k = 1.0 / (sa * sa * ang.sb * ang.sb);
    RealMatrix::from_rows(&[
        [1.0, -ca, -cb, cos_sum],
        [-ca, 1.0, cos_diff, -cb],
        [-cb, cos_diff, 1.0, -ca],
        [cos_sum, -cb, -ca, 1.0],
    ])
    .expect("4x4")
    .scale(k)
}

fn nondegenerate_angles(s: &MeasurementSettings) -> Result<Angles> {
    let ang = angles_m2(s)?;
    if ang.sa * ang.sb <= 1e-9 {
        return Err(Error::Invalid(format!(
            "closed-form gauge needs sin(alpha) sin(beta) > 1e-9, got {:.3e}",
            ang.sa * ang.sb
        )));
    }
    Ok(ang)
}

/// Coefficient matrix `Z★` attaining `γ(C) = ⟨Z★, C⟩ / φ(Z★)`.
///
/// With `W = A⁺ C (Bᵀ)⁺ = U Σ Vᵀ`:
/// - SEP: `(Aᵀ)⁺ U Vᵀ B⁺`
/// - QM with `r = 3`: `(Aᵀ)⁺ U diag(1, 1, η) Vᵀ B⁺`, `η = sgn det(UVᵀ)`
/// - MAX, or QM with `r ≤ 2`: `(Aᵀ)⁺ u₁ v₁ᵀ B⁺`
pub fn optimizer_z(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix) -> Result<RealMatrix> {
    let g = gauge(model, s, c)?;
    if !g.finite {
        return Err(Error::InfiniteGauge);
    }
    if g.value <= 0.0 {
        return Err(Error::Invalid("the zero correlation matrix has no optimal witness".into()));
    }
    let w = s.pushforward(c)?;
    let sv = svd(&w)?;
    let core = match model {
        ModelTag::Sep => &sv.u * &sv.v.transpose(),
        ModelTag::Qm if s.r() == 3 => {
            let eta = (sv.u.det()? * sv.v.det()?).signum();
            &(&sv.u * &RealMatrix::from_diag(&[1.0, 1.0, eta])) * &sv.v.transpose()
        }
        ModelTag::Qm | ModelTag::Max => {
            RealMatrix::from_fn(3, 3, |i, j| sv.u[(i, 0)] * sv.v[(j, 0)])
        }
    };
    Ok(&(&s.pinv_a().transpose() * &core) * &s.pinv_b())
}

/// `γ(C) ≤ 1 + tol`.
pub fn membership(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::Invalid(format!("tolerance must be >= 0, got {tol}")));
    }
    let g = gauge(model, s, c)?;
    Ok(g.finite && g.value <= 1.0 + tol)
}

/// Parameter of an extreme point of a correlation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeParam {
    /// Bloch vectors of a pure product state.
    Product { r_a: [f64; 3], r_b: [f64; 3] },
    /// Orthogonal correlation block of a hull state.
    Rotation(RealMatrix),
}

/// Extreme point of the correlation set: `A r_A r_Bᵀ Bᵀ` for SEP, `A Q Bᵀ`
/// with `Q ∈ SO⁻(3)` for QM and `Q ∈ O(3)` for MAX.
pub fn extreme_point(model: ModelTag, s: &MeasurementSettings, param: &ExtremeParam) -> Result<RealMatrix> {
    match (model, param) {
        (ModelTag::Sep, ExtremeParam::Product { r_a, r_b }) => {
            for v in [r_a, r_b] {
                if (norm(v) - 1.0).abs() > 1e-9 {
                    return Err(Error::Invalid(format!(
                        "product extreme points need unit Bloch vectors, got norm {}",
                        norm(v)
                    )));
                }
            }
            s.correlations_of(&RealMatrix::from_fn(3, 3, |i, j| r_a[i] * r_b[j]))
        }
        (ModelTag::Qm | ModelTag::Max, ExtremeParam::Rotation(q)) => {
            if q.shape() != (3, 3) {
                return Err(Error::Dimension(format!("rotation must be 3x3, got {:?}", q.shape())));
            }
            let defect = orthogonality_defect(q);
            if defect > 1e-9 {
                return Err(Error::NotOrthogonal(defect));
            }
            if model == ModelTag::Qm && q.det()? > 0.0 {
                return Err(Error::Invalid("quantum extreme points need det Q = -1".into()));
            }
            s.correlations_of(q)
        }
        (model, _) => Err(Error::Invalid(format!(
            "wrong extreme-point parameter kind for model {model}"
        ))),
    }
}

/// Coefficient matrix `Z` whose pullback `AᵀZB` has the requested nonzero
/// singular values and determinant sign.
///
/// `target` must be descending, nonnegative and no longer than
/// `r = min(rank A, rank B)`; missing entries are zero. `det_sign` only
/// matters when three nonzero values are requested.
pub fn construct_target_z(s: &MeasurementSettings, target: &[f64], det_sign: i8) -> Result<RealMatrix> {
    let r = s.r();
    if target.len() > r {
        return Err(Error::Invalid(format!(
            "{} target singular values requested but only r = {r} are achievable",
            target.len()
        )));
    }
    if target.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) || target.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Invalid("target singular values must be finite, nonnegative and descending".into()));
    }
    let va = svd(s.a())?.v;
    let vb = svd(s.b())?.v;
    let mut d = [0.0; 3];
    d[..target.len()].copy_from_slice(target);
    let orientation = va.det()? * vb.det()?;
    if d[2] > 0.0 && (det_sign as f64) * orientation < 0.0 {
        d[2] = -d[2];
    }
    let x = &(&va * &RealMatrix::from_diag(&d)) * &vb.transpose();
    Ok(&(&s.pinv_a().transpose() * &x) * &s.pinv_b())
}

/// Support function evaluated on `G_A^{1/2} Z G_B^{1/2}`, which shares its
/// nonzero singular values with `AᵀZB`. For QM the determinant sign comes
/// from the intrinsic Levi-Civita expansion rather than from `AᵀZB`.
pub fn gram_equivalent_support(s: &MeasurementSettings, z: &RealMatrix, model: ModelTag) -> Result<f64> {
    s.check_square(z, "coefficient matrix")?;
    let ra = sqrt_psd(&s.gram_a())?;
    let rb = sqrt_psd(&s.gram_b())?;
    let m_sym = &(&ra * z) * &rb;
    let sv = svd(&m_sym)?.s;
    let top = |k: usize| sv.get(k).copied().unwrap_or(0.0);
    match model {
        ModelTag::Sep => Ok(top(0)),
        ModelTag::Max => Ok((0..3).map(top).sum()),
        ModelTag::Qm => {
            let (s1, s2, s3) = (top(0), top(1), top(2));
            let sign = if s3 <= DET_SIGN_REL_TOL * s1 || s3 == 0.0 {
                0.0
            } else {
                det3_intrinsic(s.a(), s.b(), z)?.signum()
            };
            Ok(s1 + s2 - sign * s3)
        }
    }
}

/// Signed singular values of `AᵀZB` (special SVD).
pub fn pullback_spectrum(s: &MeasurementSettings, z: &RealMatrix) -> Result<[f64; 3]> {
    Ok(special_svd(&s.pullback(z)?)?.s_tilde)
}
