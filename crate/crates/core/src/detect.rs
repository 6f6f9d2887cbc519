//! Witnesses, noise thresholds, containment radii and the standard baselines.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corrsets::{correlation_matrix, gauge, optimizer_z, support, ModelTag};
use crate::error::{Error, Result};
use crate::mat3::{svd, RealMatrix};
use crate::pauli::{
    bell_operator, classify_state, pauli_expand, phi_plus, product_state, random_unit, werner_state,
    Operator4,
};
use crate::settings::MeasurementSettings;

/// Supports at or below this are treated as zero when normalizing a witness.
const ZERO_SUPPORT: f64 = 1e-12;

fn witness(model: ModelTag, s: &MeasurementSettings, z: &RealMatrix) -> Result<Operator4> {
    let phi = support(model, s, z)?;
    if phi <= ZERO_SUPPORT * z.frobenius_norm().max(1.0) {
        return Err(Error::ZeroSupport);
    }
    Ok(Operator4::identity() - bell_operator(s, z)?.scale(1.0 / phi))
}

/// `Ŵ_ent = I − Ŝ(Z)/φ_sep(Z)`; nonnegative on every separable state.
pub fn entanglement_witness(s: &MeasurementSettings, z: &RealMatrix) -> Result<Operator4> {
    witness(ModelTag::Sep, s, z)
}

/// `Ŵ_bqs = I − Ŝ(Z)/φ_qm(Z)`; nonnegative on every quantum state.
pub fn bqs_witness(s: &MeasurementSettings, z: &RealMatrix) -> Result<Operator4> {
    witness(ModelTag::Qm, s, z)
}

/// Optimal witness for a target correlation matrix.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub model: ModelTag,
    pub witness: Operator4,
    pub z_star: RealMatrix,
    /// `γ(C)`, the largest value of `⟨Z, C⟩/φ(Z)`.
    pub sensitivity: f64,
    /// `⟨Z★, C⟩ / φ(Z★)`, which should reproduce `sensitivity`.
    pub attained: f64,
    pub p_crit: f64,
}

impl WitnessReport {
    /// The target lies outside the inner set.
    pub fn detected(&self) -> bool {
        self.sensitivity > 1.0
    }
}

/// Builds the optimal SEP or QM witness for the correlation matrix `c`.
pub fn witness_report(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix) -> Result<WitnessReport> {
    if model == ModelTag::Max {
        return Err(Error::Invalid("witnesses are defined for the SEP and QM sets".into()));
    }
    let g = gauge(model, s, c)?.get().ok_or(Error::InfiniteGauge)?;
    let z_star = optimizer_z(model, s, c)?;
    let phi = support(model, s, &z_star)?;
    Ok(WitnessReport {
        model,
        witness: witness(model, s, &z_star)?,
        attained: z_star.hs_dot(c) / phi,
        z_star,
        sensitivity: g,
        p_crit: p_crit_from_gauge(g),
    })
}

fn p_crit_from_gauge(g: f64) -> f64 {
    if g > 1.0 {
        1.0 - 1.0 / g
    } else {
        0.0
    }
}

/// Largest white-noise fraction `p` for which `(1 − p)·C` is still detected:
/// `max(0, 1 − 1/γ(C))`.
pub fn critical_noise(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix) -> Result<f64> {
    let g = gauge(model, s, c)?.get().ok_or(Error::InfiniteGauge)?;
    Ok(p_crit_from_gauge(g))
}

/// An (outer, inner) pair of correlation sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RatioPair {
    #[serde(rename = "QM/SEP")]
    QmOverSep,
    #[serde(rename = "MAX/QM")]
    MaxOverQm,
}

impl RatioPair {
    pub const ALL: [RatioPair; 2] = [RatioPair::QmOverSep, RatioPair::MaxOverQm];

    pub fn outer(self) -> ModelTag {
        match self {
            RatioPair::QmOverSep => ModelTag::Qm,
            RatioPair::MaxOverQm => ModelTag::Max,
        }
    }

    pub fn inner(self) -> ModelTag {
        match self {
            RatioPair::QmOverSep => ModelTag::Sep,
            RatioPair::MaxOverQm => ModelTag::Qm,
        }
    }
}

impl fmt::Display for RatioPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.outer(), self.inner())
    }
}

impl FromStr for RatioPair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qm/sep" | "qm-sep" | "qm-over-sep" => Ok(RatioPair::QmOverSep),
            "max/qm" | "max-qm" | "max-over-qm" => Ok(RatioPair::MaxOverQm),
            _ => Err(Error::Invalid(format!("unknown set pair '{s}'"))),
        }
    }
}

/// Containment radius `R = sup_{C ∈ outer} γ_inner(C)` with a maximizer.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub pair: RatioPair,
    /// Value predicted from `r = min(rank A, rank B)`.
    pub radius: f64,
    pub maximizer_c: RealMatrix,
    pub witness_z: RealMatrix,
    /// `γ_inner(maximizer_c)`, computed independently of `radius`.
    pub inner_gauge: f64,
}

/// Containment radius and an extreme point of the outer set attaining it.
///
/// QM over SEP equals `r`; MAX over QM is 3 when `r = 3` and 1 otherwise.
/// The maximizer is `A Q Bᵀ` with `Q` carrying the right-singular basis of
/// `B` onto that of `A`, so that `Q(ran Bᵀ)` lines up with `ran Aᵀ`, and
/// `det Q = −1` (QM outer) or `+1` (MAX outer).
pub fn containment_radius(s: &MeasurementSettings, pair: RatioPair) -> Result<RatioReport> {
    let r = s.r();
    let radius = match pair {
        RatioPair::QmOverSep => r as f64,
        RatioPair::MaxOverQm => {
            if r == 3 {
                3.0
            } else {
                1.0
            }
        }
    };
    let wanted_det = match pair {
        RatioPair::QmOverSep => -1.0,
        RatioPair::MaxOverQm => 1.0,
    };
    let q = aligned_rotation(s, wanted_det)?;
    let maximizer_c = s.correlations_of(&q)?;
    let inner_gauge = gauge(pair.inner(), s, &maximizer_c)?
        .get()
        .ok_or(Error::InfiniteGauge)?;
    let witness_z = optimizer_z(pair.inner(), s, &maximizer_c)?;
    Ok(RatioReport {
        pair,
        radius,
        maximizer_c,
        witness_z,
        inner_gauge,
    })
}

/// `Q = V_A diag(1, 1, d) V_Bᵀ` with `d` fixing `det Q = wanted_det`.
pub fn aligned_rotation(s: &MeasurementSettings, wanted_det: f64) -> Result<RealMatrix> {
    let va = svd(s.a())?.v;
    let vb = svd(s.b())?.v;
    let d = wanted_det.signum() * va.det()? * vb.det()?;
    Ok(&(&va * &RealMatrix::from_diag(&[1.0, 1.0, d])) * &vb.transpose())
}

fn chsh_matrix() -> RealMatrix {
    RealMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]]).expect("2x2")
}

/// CHSH value `Tr[Zᵀ C]` with `Z = [[1, 1], [1, −1]]`.
pub fn chsh_value(rho: &Operator4, s2: &MeasurementSettings) -> Result<f64> {
    if s2.m() != 2 {
        return Err(Error::Dimension(format!("CHSH needs m = 2, got m = {}", s2.m())));
    }
    Ok(chsh_matrix().hs_dot(&correlation_matrix(rho, s2)?))
}

/// Largest CHSH value over every pair of settings per party and every
/// relabelling of the functional (the eight sign patterns with an odd number
/// of minus signs).
pub fn best_chsh_value(rho: &Operator4, s: &MeasurementSettings) -> Result<f64> {
    let c = correlation_matrix(rho, s)?;
    let m = s.m();
    if m < 2 {
        return Err(Error::Dimension("CHSH needs at least two settings per party".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for i in 0..m {
        for i2 in i + 1..m {
            for j in 0..m {
                for j2 in j + 1..m {
                    let v = [c[(i, j)], c[(i, j2)], c[(i2, j)], c[(i2, j2)]];
                    for minus in 0..4 {
                        let val: f64 = v
                            .iter()
                            .enumerate()
                            .map(|(k, x)| if k == minus { -x } else { *x })
                            .sum();
                        best = best.max(val.abs());
                    }
                }
            }
        }
    }
    Ok(best)
}

/// `I3322` in Collins–Gisin form with local bound 0:
///
/// ```text
/// P₁₁ + P₁₂ + P₁₃ + P₂₁ + P₂₂ − P₂₃ + P₃₁ − P₃₂ − P_A(1) − 2P_B(1) − P_B(2)
/// ```
///
/// where `Pᵢⱼ = P(+,+|Aᵢ,Bⱼ)` and `P_A(i)`, `P_B(j)` are marginal
/// probabilities of the `+` outcome.
pub fn i3322_value(rho: &Operator4, s3: &MeasurementSettings) -> Result<f64> {
    if s3.m() != 3 {
        return Err(Error::Dimension(format!("I3322 needs m = 3, got m = {}", s3.m())));
    }
    const PATTERN: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 0.0]];
    let p = pauli_expand(rho)?;
    let c = s3.correlations_of(&p.t)?;
    let ea = s3.a().mul_vec(&p.r_a);
    let eb = s3.b().mul_vec(&p.r_b);
    let norm = p.weight;
    let mut value = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            value += PATTERN[i][j] * (norm + ea[i] + eb[j] + c[(i, j)]) / 4.0;
        }
    }
    let marginal = |e: f64| (norm + e) / 2.0;
    Ok(value - marginal(ea[0]) - 2.0 * marginal(eb[0]) - marginal(eb[1]))
}

/// One method row of the critical-noise comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub method: &'static str,
    /// Two-setting scenario; `None` where the method does not apply.
    pub two_settings: Option<f64>,
    /// Three-setting scenario.
    pub three_settings: Option<f64>,
}

/// Critical Werner noise `p_crit` for four detection methods.
///
/// - `gauge`: `1 − 1/γ_sep(C_{Φ⁺})` on `s2` and `s3`.
/// - `chsh`: `1 − 2/CHSH_max` using the best CHSH test within each scenario.
/// - `i3322`: zero of the (linear) Werner curve of `I3322` at the settings
///   that maximize it on `|Φ⁺⟩`.
/// - `ppt`: bisection to `1e−6` on the PPT separability boundary.
pub fn table1(s2: &MeasurementSettings, s3: &MeasurementSettings) -> Result<Vec<Table1Row>> {
    if s2.m() != 2 || s3.m() != 3 {
        return Err(Error::Dimension("table1 needs a 2-setting and a 3-setting scenario".into()));
    }
    let phi = phi_plus();
    let gauge_p = |s: &MeasurementSettings| critical_noise(ModelTag::Sep, s, &correlation_matrix(&phi, s)?);
    let chsh_p = |s: &MeasurementSettings| -> Result<f64> {
        Ok(p_crit_from_gauge(best_chsh_value(&phi, s)? / 2.0))
    };

    let opt = MeasurementSettings::i3322_optimal();
    let i0 = i3322_value(&werner_state(0.0)?, &opt)?;
    let i1 = i3322_value(&werner_state(1.0)?, &opt)?;
    let i3322_p = if i0 > 0.0 { i0 / (i0 - i1) } else { 0.0 };

    Ok(vec![
        Table1Row {
            method: "gauge",
            two_settings: Some(gauge_p(s2)?),
            three_settings: Some(gauge_p(s3)?),
        },
        Table1Row {
            method: "chsh",
            two_settings: Some(chsh_p(s2)?),
            three_settings: Some(chsh_p(s3)?),
        },
        Table1Row {
            method: "i3322",
            two_settings: None,
            three_settings: Some(i3322_p),
        },
        Table1Row {
            method: "ppt",
            two_settings: None,
            three_settings: Some(ppt_threshold(1e-6)?),
        },
    ])
}

/// Werner noise at which the state becomes PPT, by bisection.
pub fn ppt_threshold(tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if classify_state(&werner_state(mid)?)?.is_separable {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Convex mixture of up to `max_terms` random pure product states with
/// flat-Dirichlet weights.
pub fn sample_separable_state<R: Rng + ?Sized>(rng: &mut R, max_terms: usize) -> Operator4 {
    let n = rng.random_range(1..=max_terms.max(1));
    let weights: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = weights.iter().sum();
    let mut rho = Operator4::zero();
    for w in weights {
        let term = product_state(&random_unit(rng), &random_unit(rng));
        rho = rho + term.scale(w / total);
    }
    rho
}

/// `G G† / Tr[G G†]` for a complex Gaussian `4 × k` matrix `G` with random
/// `k ∈ {1, …, 4}`; rank one gives pure states.
pub fn sample_quantum_state<R: Rng + ?Sized>(rng: &mut R) -> Operator4 {
    use num_complex::Complex64;
    let k = rng.random_range(1..=4usize);
    let g: Vec<Vec<Complex64>> = (0..4)
        .map(|_| {
            (0..k)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    let gg = Operator4::from_fn(|i, j| (0..k).map(|l| g[i][l] * g[j][l].conj()).sum());
    let tr = gg.trace().re;
    gg.scale(1.0 / tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{rho_max, tau_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    fn flip() -> RealMatrix {
        RealMatrix::from_diag(&[1.0, -1.0, 1.0])
    }

    #[test]
    fn werner_witness_expectation() {
        let p3 = MeasurementSettings::pauli3();
        let w = entanglement_witness(&p3, &flip()).unwrap();
        for p in [0.0, 0.3, 2.0 / 3.0, 1.0] {
            let e = werner_state(p).unwrap().expectation(&w);
            assert!((e - (1.0 - 3.0 * (1.0 - p))).abs() < 1e-12);
        }
        assert!(matches!(
            entanglement_witness(&p3, &RealMatrix::zeros(3, 3)),
            Err(Error::ZeroSupport)
        ));
    }

    #[test]
    fn bqs_witness_detects_tau() {
        let w = bqs_witness(&MeasurementSettings::pauli3(), &RealMatrix::identity(3)).unwrap();
        assert!(tau_state(0.5).unwrap().expectation(&w) < 0.0);
        assert!(tau_state(0.7).unwrap().expectation(&w) > 0.0);
    }

    #[test]
    fn critical_noise_examples() {
        let p3 = MeasurementSettings::pauli3();
        let chsh = MeasurementSettings::chsh();
        let c = correlation_matrix(&phi_plus(), &p3).unwrap();
        assert!((critical_noise(ModelTag::Sep, &p3, &c).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let c = correlation_matrix(&phi_plus(), &chsh).unwrap();
        assert!((critical_noise(ModelTag::Sep, &chsh, &c).unwrap() - 0.5).abs() < 1e-12);
        let c = correlation_matrix(&rho_max(), &p3).unwrap();
        assert!((critical_noise(ModelTag::Qm, &p3, &c).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn witness_report_round_trip() {
        let p3 = MeasurementSettings::pauli3();
        let r = witness_report(ModelTag::Qm, &p3, &RealMatrix::identity(3)).unwrap();
        assert!(r.detected());
        assert!((r.sensitivity - r.attained).abs() < 1e-10);
        assert!(r.z_star.max_abs_diff(&RealMatrix::identity(3)) < 1e-12);
        assert!(witness_report(ModelTag::Max, &p3, &RealMatrix::identity(3)).is_err());
    }

    #[test]
    fn radii_of_named_scenarios() {
        for (s, expected) in [
            (MeasurementSettings::pauli3(), [3.0, 3.0]),
            (MeasurementSettings::b_rot(), [3.0, 3.0]),
            (MeasurementSettings::chsh(), [2.0, 1.0]),
        ] {
            for (pair, want) in RatioPair::ALL.into_iter().zip(expected) {
                let rep = containment_radius(&s, pair).unwrap();
                assert_eq!(rep.radius, want);
                assert!((rep.inner_gauge - want).abs() < 1e-10, "{pair}: {}", rep.inner_gauge);
            }
        }
    }

    #[test]
    fn chsh_values() {
        let s = MeasurementSettings::chsh();
        assert!((chsh_value(&phi_plus(), &s).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(chsh_value(&Operator4::identity().scale(0.25), &s).unwrap().abs() < 1e-15);
        let w = werner_state(0.25).unwrap();
        assert!((chsh_value(&w, &s).unwrap() - 0.75 * 2.0 * SQRT_2).abs() < 1e-12);
        assert!((best_chsh_value(&phi_plus(), &MeasurementSettings::b_rot()).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn i3322_anchors() {
        let opt = MeasurementSettings::i3322_optimal();
        let mixed = Operator4::identity().scale(0.25);
        assert!((i3322_value(&mixed, &opt).unwrap() + 1.0).abs() < 1e-12);
        assert!((i3322_value(&mixed, &MeasurementSettings::pauli3()).unwrap() + 1.0).abs() < 1e-12);
        assert!((i3322_value(&phi_plus(), &opt).unwrap() - 0.25).abs() < 1e-12);
        for p in [0.1, 0.2, 0.5] {
            let v = i3322_value(&werner_state(p).unwrap(), &opt).unwrap();
            assert!((v - (0.25 - 1.25 * p)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_one() {
        let rows = table1(&MeasurementSettings::chsh(), &MeasurementSettings::b_rot()).unwrap();
        let get = |k: usize| (rows[k].two_settings, rows[k].three_settings);
        let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() < 1e-4;
        assert!(close(get(0).0, 0.5) && close(get(0).1, 2.0 / 3.0));
        assert!(close(get(1).0, 1.0 - 1.0 / SQRT_2) && close(get(1).1, 1.0 - 1.0 / SQRT_2));
        assert!(get(2).0.is_none() && close(get(2).1, 0.2));
        assert!(get(3).0.is_none() && close(get(3).1, 2.0 / 3.0));
    }

    #[test]
    fn samplers_produce_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let c = classify_state(&sample_separable_state(&mut rng, 16)).unwrap();
            assert!(c.is_separable);
            let c = classify_state(&sample_quantum_state(&mut rng)).unwrap();
            assert!(c.is_quantum);
        }
    }
}
