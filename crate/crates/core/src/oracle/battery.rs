//! Randomized verification battery: closed forms against oracles and the
//! structural identities, over seeded random instances.
//!
//! Instance `i` of check `k` draws from its own ChaCha stream derived from
//! `(seed, k, i)`, so the report does not depend on thread scheduling.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{gaussian_matrix, random_finite_gauge_c, random_settings, support_oracle, OracleConfig};
use crate::corrsets::{
    gauge, gauge_m2_closed_form, gauge_m2_quadratic_form, optimizer_z, support, support_m2_closed_form,
    support_m2_quadratic_form, ModelTag,
};
use crate::detect::{containment_radius, entanglement_witness, sample_separable_state, RatioPair};
use crate::error::{Error, Result};
use crate::mat3::{det3_intrinsic, special_svd, RealMatrix};
use crate::pauli::{bell_operator, eigenvalues_hermitian};
use crate::settings::MeasurementSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    /// Instances per cell of the support-function grid.
    fn support_instances(self) -> usize {
        match self {
            Level::Quick => 20,
            Level::Full => 1000,
        }
    }

    /// Instances for every other check.
    fn instances(self) -> usize {
        match self {
            Level::Quick => 100,
            Level::Full => 1000,
        }
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::Invalid(format!("unknown level '{s}', expected quick or full"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryConfig {
    pub seed: u64,
    pub level: Level,
    /// Scale every closed-form support value by `1 + 1e−3`, so that the
    /// battery must fail. Used to test the harness itself.
    pub inject_fault: bool,
}

/// A failing instance, with enough data to replay it.
#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub check: String,
    pub index: usize,
    pub settings: MeasurementSettings,
    pub matrix: RealMatrix,
    pub expected: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Largest error, in the same units as `tolerance` (relative to the
    /// compared value's magnitude for checks whose values are unbounded).
    pub max_error: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub level: Level,
    pub checks: Vec<CheckSummary>,
    /// At most the first failure of each check.
    pub failures: Vec<FailureRecord>,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn total_instances(&self) -> usize {
        self.checks.iter().map(|c| c.instances).sum()
    }

    pub fn total_failures(&self) -> usize {
        self.checks.iter().map(|c| c.failures).sum()
    }
}

/// Outcome of one instance: (error, tolerance-scaled pass, replay data).
struct Outcome {
    error: f64,
    ok: bool,
    settings: MeasurementSettings,
    matrix: RealMatrix,
    expected: f64,
    observed: f64,
}

impl Outcome {
    fn compare(settings: MeasurementSettings, matrix: RealMatrix, expected: f64, observed: f64, tol: f64) -> Self {
        Self::scaled(settings, matrix, expected, observed, tol, 1.0)
    }

    /// Compares `|expected − observed| / scale` against `tol`.
    fn scaled(
        settings: MeasurementSettings,
        matrix: RealMatrix,
        expected: f64,
        observed: f64,
        tol: f64,
        scale: f64,
    ) -> Self {
        let error = (expected - observed).abs() / scale;
        Self {
            ok: error <= tol,
            error,
            settings,
            matrix,
            expected,
            observed,
        }
    }
}

struct Check<'a> {
    name: String,
    instances: usize,
    tolerance: f64,
    run: Box<dyn Fn(&mut ChaCha8Rng) -> Result<Outcome> + Sync + 'a>,
}

fn instance_rng(seed: u64, check: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (check as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index as u64);
    rng
}

fn run_check(seed: u64, id: usize, check: &Check<'_>) -> Result<(CheckSummary, Option<FailureRecord>)> {
    let outcomes: Vec<Result<Outcome>> = (0..check.instances)
        .into_par_iter()
        .map(|i| (check.run)(&mut instance_rng(seed, id, i)))
        .collect();
    let mut summary = CheckSummary {
        name: check.name.clone(),
        instances: check.instances,
        failures: 0,
        max_error: 0.0,
        tolerance: check.tolerance,
    };
    let mut first = None;
    for (index, outcome) in outcomes.into_iter().enumerate() {
        let o = outcome?;
        summary.max_error = summary.max_error.max(o.error);
        if !o.ok {
            summary.failures += 1;
            first.get_or_insert(FailureRecord {
                check: check.name.clone(),
                index,
                settings: o.settings,
                matrix: o.matrix,
                expected: o.expected,
                observed: o.observed,
            });
        }
    }
    Ok((summary, first))
}

fn random_m_rank(rng: &mut ChaCha8Rng, max_m: usize) -> (usize, usize) {
    let m = rng.random_range(2..=max_m);
    let rank = rng.random_range(1..=m.min(3));
    (m, rank)
}

/// Settings with `m = 2` and `sin α sin β` spread over `[1e−6, 1]`.
fn random_m2_settings(rng: &mut ChaCha8Rng) -> Result<MeasurementSettings> {
    let mut party = || -> Result<RealMatrix> {
        let rows = super::random_unit_rows(rng, 2, 2)?;
        let a1 = rows.row(0).to_vec();
        let mut perp = rows.row(1).to_vec();
        let p = crate::mat3::dot(&a1, &perp);
        for k in 0..3 {
            perp[k] -= p * a1[k];
        }
        let n = crate::mat3::norm(&perp);
        let perp: Vec<f64> = perp.iter().map(|x| x / n).collect();
        // Angle with sin θ log-uniform in [1e-3, 1], on either side of π/2.
        let sin = 10f64.powf(-3.0 * rng.random::<f64>());
        let cos = (1.0 - sin * sin).sqrt() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let a2: Vec<f64> = (0..3).map(|k| cos * a1[k] + sin * perp[k]).collect();
        RealMatrix::from_rows(&[a1, a2])
    };
    let a = party()?;
    let b = party()?;
    MeasurementSettings::new(a, b)
}

fn relative(x: f64) -> f64 {
    x.abs().max(1.0)
}

/// Runs every check of the battery.
pub fn run_battery(cfg: &BatteryConfig) -> Result<BatteryReport> {
    let fault = if cfg.inject_fault { 1.0 + 1e-3 } else { 1.0 };
    let oracle_cfg = OracleConfig { seed: cfg.seed, ..OracleConfig::default() };
    let mut checks: Vec<Check<'_>> = Vec::new();

    for m in 2..=5usize {
        for rank in 1..=m.min(3) {
            for model in ModelTag::ALL {
                let tol = if model == ModelTag::Sep { 1e-4 } else { 1e-6 };
                let oc = oracle_cfg.clone();
                checks.push(Check {
                    name: format!("support-{}-m{m}-rank{rank}", model.to_string().to_lowercase()),
                    instances: cfg.level.support_instances(),
                    tolerance: tol,
                    run: Box::new(move |rng| {
                        let s = random_settings(rng, m, rank)?;
                        let z = gaussian_matrix(rng, m, m);
                        let closed = support(model, &s, &z)? * fault;
                        let oracle = support_oracle(model, &s, &z, &oc)?;
                        let mut o = Outcome::compare(s, z, closed, oracle, tol);
                        // Search-based oracles are lower bounds.
                        if model == ModelTag::Sep && oracle > closed + 1e-9 * relative(closed) {
                            o.ok = false;
                        }
                        Ok(o)
                    }),
                });
            }
        }
    }

    for model in ModelTag::ALL {
        checks.push(Check {
            name: format!("optimizer-attainment-{}", model.to_string().to_lowercase()),
            instances: cfg.level.instances(),
            tolerance: 1e-8,
            run: Box::new(move |rng| {
                let (m, rank) = random_m_rank(rng, 5);
                let s = random_settings(rng, m, rank)?;
                let c = random_finite_gauge_c(rng, &s)?;
                let g = gauge(model, &s, &c)?.value;
                let z = optimizer_z(model, &s, &c)?;
                let attained = z.hs_dot(&c) / (support(model, &s, &z)? * fault);
                Ok(Outcome::scaled(s, c, g, attained, 1e-8, relative(g)))
            }),
        });
    }

    for model in [ModelTag::Sep, ModelTag::Qm] {
        let lower = model.to_string().to_lowercase();
        checks.push(Check {
            name: format!("m2-support-{lower}"),
            instances: cfg.level.instances(),
            tolerance: 1e-9,
            run: Box::new(move |rng| {
                let s = random_m2_settings(rng)?;
                let z = gaussian_matrix(rng, 2, 2);
                let general = support(model, &s, &z)? * fault;
                let closed = support_m2_closed_form(model, &s, &z)?;
                let quad = support_m2_quadratic_form(model, &s, &z)?;
                let worst = if (general - closed).abs() > (general - quad).abs() { closed } else { quad };
                Ok(Outcome::scaled(s, z, general, worst, 1e-9, relative(general)))
            }),
        });
        checks.push(Check {
            name: format!("m2-gauge-{lower}"),
            instances: cfg.level.instances(),
            tolerance: 1e-9,
            run: Box::new(move |rng| {
                let s = random_m2_settings(rng)?;
                let c = gaussian_matrix(rng, 2, 2);
                let general = gauge(model, &s, &c)?.value;
                let closed = gauge_m2_closed_form(model, &s, &c)?;
                let quad = gauge_m2_quadratic_form(model, &s, &c)?;
                let worst = if (general - closed).abs() > (general - quad).abs() { closed } else { quad };
                Ok(Outcome::scaled(s, c, general, worst, 1e-9, relative(general)))
            }),
        });
    }

    checks.push(Check {
        name: "intrinsic-determinant".into(),
        instances: cfg.level.instances(),
        tolerance: 1e-9,
        run: Box::new(|rng| {
            let m = rng.random_range(1..=6);
            let s = random_settings(rng, m, m.min(3))?;
            let z = gaussian_matrix(rng, m, m);
            let direct = s.pullback(&z)?.det()?;
            let intrinsic = det3_intrinsic(s.a(), s.b(), &z)?;
            let scale = s.pullback(&z)?.frobenius_norm().powi(3).max(1.0);
            Ok(Outcome::scaled(s, z, direct, intrinsic, 1e-9, scale))
        }),
    });

    checks.push(Check {
        name: "bell-operator-spectrum".into(),
        instances: cfg.level.instances(),
        tolerance: 1e-9,
        run: Box::new(|rng| {
            let (m, rank) = random_m_rank(rng, 5);
            let s = random_settings(rng, m, rank)?;
            let z = gaussian_matrix(rng, m, m);
            let st = special_svd(&s.pullback(&z)?)?.s_tilde;
            let mut predicted: Vec<f64> = [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]
                .iter()
                .map(|th: &[f64; 3]| th[0] * st[0] + th[1] * st[1] + th[2] * st[2])
                .collect();
            predicted.sort_by(f64::total_cmp);
            let ev = eigenvalues_hermitian(&bell_operator(&s, &z)?)?;
            let k = (0..4)
                .max_by(|&i, &j| (ev[i] - predicted[i]).abs().total_cmp(&(ev[j] - predicted[j]).abs()))
                .expect("four eigenvalues");
            Ok(Outcome::scaled(s, z, predicted[k], ev[k], 1e-9, relative(st[0])))
        }),
    });

    checks.push(Check {
        name: "witness-soundness".into(),
        instances: cfg.level.instances(),
        tolerance: 1e-9,
        run: Box::new(|rng| {
            let (m, rank) = random_m_rank(rng, 4);
            let s = random_settings(rng, m, rank)?;
            let z = gaussian_matrix(rng, m, m);
            let w = entanglement_witness(&s, &z)?;
            let rho = sample_separable_state(rng, 16);
            let value = rho.expectation(&w);
            let mut o = Outcome::compare(s, z, 0.0, value.min(0.0), 1e-9);
            o.ok = value >= -1e-9;
            Ok(o)
        }),
    });

    checks.push(Check {
        name: "containment-radius".into(),
        instances: cfg.level.instances().min(200),
        tolerance: 1e-8,
        run: Box::new(move |rng| {
            let (m, rank) = random_m_rank(rng, 5);
            let s = random_settings(rng, m, rank)?;
            let pair = if rng.random_bool(0.5) { RatioPair::QmOverSep } else { RatioPair::MaxOverQm };
            let rep = containment_radius(&s, pair)?;
            let c = rep.maximizer_c.clone();
            Ok(Outcome::compare(s, c, rep.radius, rep.inner_gauge * fault, 1e-8))
        }),
    });

    let mut report = BatteryReport {
        seed: cfg.seed,
        level: cfg.level,
        checks: Vec::with_capacity(checks.len()),
        failures: Vec::new(),
    };
    for (id, check) in checks.iter().enumerate() {
        let (summary, failure) = run_check(cfg.seed, id, check)?;
        report.checks.push(summary);
        report.failures.extend(failure);
    }
    Ok(report)
}
