//! Brute-force cross-checks that do not go through the closed forms.
//!
//! Each oracle attacks the same quantity from a different direction: product
//! state search for SEP, explicit Bell-operator spectra for QM and MAX,
//! sampled dual ratios for gauges, and Frank–Wolfe for hull membership.

pub mod battery;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corrsets::{gauge, optimizer_z, range_condition, support, ModelTag};
use crate::detect::RatioPair;
use crate::error::{Error, Result};
use crate::mat3::{max_trace_over_rotations, norm, random_rotation, svd, Component, RealMatrix};
use crate::pauli::{bell_operator, max_eigenvalue, partial_transpose};
use crate::settings::MeasurementSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    /// Points of the Fibonacci grid on the Bloch sphere.
    pub grid_points: usize,
    /// Best grid points refined by alternating maximization.
    pub restarts: usize,
    /// Random draws for sampling-based oracles.
    pub samples: usize,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid_points: 4096,
            restarts: 32,
            samples: 10_000,
            tol: 1e-4,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points == 0 || self.restarts == 0 || self.samples == 0 {
            return Err(Error::Invalid("oracle counts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("oracle tolerance must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// `n` nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

/// `max uᵀ X v` over unit `u, v`: grid search over `u` with the exact inner
/// maximum `‖Xᵀu‖`, then alternating refinement from the best grid points.
fn product_maximum(x: &RealMatrix, cfg: &OracleConfig) -> f64 {
    let mut scored: Vec<(f64, [f64; 3])> = fibonacci_sphere(cfg.grid_points)
        .into_iter()
        .map(|u| (norm(&x.tr_mul_vec(&u)), u))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored.first().map_or(0.0, |s| s.0);
    for &(_, u0) in scored.iter().take(cfg.restarts) {
        let mut u = u0.to_vec();
        let mut value = norm(&x.tr_mul_vec(&u));
        for _ in 0..2000 {
            let v = x.tr_mul_vec(&u);
            let nv = norm(&v);
            if nv == 0.0 {
                break;
            }
            let w = x.mul_vec(&v);
            let nw = norm(&w);
            if nw == 0.0 {
                break;
            }
            u = w.iter().map(|c| c / nw).collect();
            let next = norm(&x.tr_mul_vec(&u));
            let done = next - value <= 1e-15 * next.max(1e-300);
            value = value.max(next);
            if done {
                break;
            }
        }
        best = best.max(value);
    }
    best
}

/// `max ⟨Z, C⟩` over correlation matrices of pure product states.
pub fn support_sep_oracle(s: &MeasurementSettings, z: &RealMatrix, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(product_maximum(&s.pullback(z)?, cfg))
}

/// `λ_max(Ŝ(Z))`.
pub fn support_qm_oracle(s: &MeasurementSettings, z: &RealMatrix) -> Result<f64> {
    max_eigenvalue(&bell_operator(s, z)?)
}

/// `max(λ_max(Ŝ(Z)), λ_max(Γ(Ŝ(Z))))`.
pub fn support_max_oracle(s: &MeasurementSettings, z: &RealMatrix) -> Result<f64> {
    let op = bell_operator(s, z)?;
    Ok(max_eigenvalue(&op)?.max(max_eigenvalue(&partial_transpose(&op))?))
}

pub fn support_oracle(model: ModelTag, s: &MeasurementSettings, z: &RealMatrix, cfg: &OracleConfig) -> Result<f64> {
    match model {
        ModelTag::Sep => support_sep_oracle(s, z, cfg),
        ModelTag::Qm => support_qm_oracle(s, z),
        ModelTag::Max => support_max_oracle(s, z),
    }
}

/// Lower bound on `γ(C)` from `⟨Z, C⟩/φ(Z)` over `cfg.samples` Gaussian
/// directions plus the closed-form optimizer when it exists.
pub fn gauge_dual_oracle(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    s.check_square(c, "correlation matrix")?;
    let m = s.m();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = 0.0f64;
    let mut consider = |z: &RealMatrix| -> Result<()> {
        let phi = support(model, s, z)?;
        if phi > 1e-12 * z.frobenius_norm() {
            best = best.max(z.hs_dot(c) / phi);
        }
        Ok(())
    };
    for _ in 0..cfg.samples {
        consider(&gaussian_matrix(&mut rng, m, m))?;
    }
    if let Ok(z) = optimizer_z(model, s, c) {
        consider(&z)?;
    }
    Ok(best)
}

/// Extreme-point geometry in whitened coordinates `W = A⁺ C (Bᵀ)⁺`, where
/// the extreme points become `P_A Q P_B` with the row-space projections
/// `P_A = A⁺A` and `P_B = B⁺B`. The map `W ↦ A W Bᵀ` is a bijection from
/// these coordinates onto the range of the correlation map, and the hull is
/// far better conditioned here than in `C` when settings are nearly parallel.
struct Whitened {
    model: ModelTag,
    pa: RealMatrix,
    pb: RealMatrix,
}

impl Whitened {
    fn new(model: ModelTag, s: &MeasurementSettings) -> Self {
        Self {
            model,
            pa: &s.pinv_a() * s.a(),
            pb: &s.pinv_b() * s.b(),
        }
    }

    /// `(max ⟨D, E⟩, argmax E)` over the whitened extreme points.
    fn linear_max(&self, d: &RealMatrix) -> Result<(f64, RealMatrix)> {
        let x = &(&self.pa * d) * &self.pb;
        let q = match self.model {
            ModelTag::Sep => {
                let sv = svd(&x)?;
                RealMatrix::from_fn(3, 3, |i, j| sv.u[(i, 0)] * sv.v[(j, 0)])
            }
            ModelTag::Qm => max_trace_over_rotations(&x, Component::So3Minus)?.1,
            ModelTag::Max => max_trace_over_rotations(&x, Component::O3)?.1,
        };
        let e = &(&self.pa * &q) * &self.pb;
        Ok((d.hs_dot(&e), e))
    }
}

/// Membership of `C` in the convex hull of the extreme points, by
/// Frank–Wolfe on `‖W − X‖²_F` in whitened coordinates.
///
/// Each outer iteration adds the extreme point returned by the linear
/// maximization oracle, then re-optimizes the weights over the atoms
/// collected so far with pairwise steps. Returns `false` immediately when
/// `C` is outside the range of the correlation map, `true` once the residual
/// drops below `cfg.tol`, and `false` as soon as the residual direction
/// separates `W` from the hull or after 500 outer iterations.
pub fn hull_membership_oracle(model: ModelTag, s: &MeasurementSettings, c: &RealMatrix, cfg: &OracleConfig) -> Result<bool> {
    cfg.validate()?;
    if !range_condition(s, c)? {
        return Ok(false);
    }
    let geometry = Whitened::new(model, s);
    let w = s.pushforward(c)?;
    let scale = w.frobenius_norm().max(1.0);
    let (_, first) = geometry.linear_max(&w)?;
    let mut atoms: Vec<(RealMatrix, f64)> = vec![(first.clone(), 1.0)];
    let mut x = first;
    for _ in 0..500 {
        let d = &w - &x;
        if d.frobenius_norm() < cfg.tol {
            return Ok(true);
        }
        let (phi, fw_atom) = geometry.linear_max(&d)?;
        if d.hs_dot(&w) - phi > 1e-12 * scale * d.frobenius_norm() {
            return Ok(false);
        }
        if atoms.iter().all(|(a, _)| a.max_abs_diff(&fw_atom) >= 1e-12) {
            atoms.push((fw_atom, 0.0));
        }
        for _ in 0..200 {
            if !pairwise_step(&w, &mut x, &mut atoms) {
                break;
            }
        }
        atoms.retain(|(_, wt)| *wt > 1e-15);
    }
    Ok((&w - &x).frobenius_norm() < cfg.tol)
}

/// One pairwise step between the best and worst weighted atoms for the
/// residual `C − X`. Returns `false` when no progress is possible.
fn pairwise_step(c: &RealMatrix, x: &mut RealMatrix, atoms: &mut [(RealMatrix, f64)]) -> bool {
    let d = c - &*x;
    let scores: Vec<f64> = atoms.iter().map(|(a, _)| d.hs_dot(a)).collect();
    let toward = (0..atoms.len()).max_by(|&i, &j| scores[i].total_cmp(&scores[j])).expect("atoms");
    let away = (0..atoms.len())
        .filter(|&k| atoms[k].1 > 0.0)
        .min_by(|&i, &j| scores[i].total_cmp(&scores[j]))
        .expect("a weighted atom");
    if toward == away || scores[toward] - scores[away] <= 1e-15 * d.frobenius_norm() {
        return false;
    }
    let dir = &atoms[toward].0 - &atoms[away].0;
    let dd = dir.hs_dot(&dir);
    if dd <= 1e-30 {
        return false;
    }
    let step = (d.hs_dot(&dir) / dd).clamp(0.0, atoms[away].1);
    if step <= 0.0 {
        return false;
    }
    *x = &*x + &dir.scale(step);
    atoms[away].1 -= step;
    atoms[toward].1 += step;
    true
}

/// Best sampled containment ratio and where it was attained.
#[derive(Debug, Clone, Serialize)]
pub struct RatioScan {
    pub best: f64,
    pub maximizer_c: RealMatrix,
}

/// `max γ_inner(A Q Bᵀ)` over `cfg.samples` Haar-random `Q` of the outer
/// set's extreme-point class.
pub fn ratio_scan(s: &MeasurementSettings, pair: RatioPair, cfg: &OracleConfig) -> Result<RatioScan> {
    cfg.validate()?;
    let component = match pair {
        RatioPair::QmOverSep => Component::So3Minus,
        RatioPair::MaxOverQm => Component::O3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = RatioScan {
        best: f64::NEG_INFINITY,
        maximizer_c: RealMatrix::zeros(s.m(), s.m()),
    };
    for _ in 0..cfg.samples {
        let c = s.correlations_of(&random_rotation(&mut rng, component))?;
        if let Some(g) = gauge(pair.inner(), s, &c)?.get() {
            if g > best.best {
                best = RatioScan { best: g, maximizer_c: c };
            }
        }
    }
    Ok(best)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn random_unit_vec<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = norm(&v);
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

/// `m × 3` matrix of unit rows spanning a random subspace of dimension `rank`.
pub fn random_unit_rows<R: Rng + ?Sized>(rng: &mut R, m: usize, rank: usize) -> Result<RealMatrix> {
    if rank == 0 || rank > 3 || rank > m {
        return Err(Error::Invalid(format!("cannot build {m} unit rows of rank {rank}")));
    }
    let q = random_rotation(rng, Component::So3);
    loop {
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let mut coeff = [0.0; 3];
                match rank {
                    1 => coeff[0] = if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                    _ => {
                        let v = random_unit_vec(rng);
                        if rank == 2 {
                            let n = v[0].hypot(v[1]);
                            coeff[0] = v[0] / n;
                            coeff[1] = v[1] / n;
                        } else {
                            coeff = v;
                        }
                    }
                }
                q.mul_vec(&coeff)
            })
            .collect();
        let x = RealMatrix::from_rows(&rows)?;
        if svd(&x)?.rank(1e-6) == rank {
            return Ok(x);
        }
    }
}

/// Random settings with `rank A = rank B = rank`.
pub fn random_settings<R: Rng + ?Sized>(rng: &mut R, m: usize, rank: usize) -> Result<MeasurementSettings> {
    MeasurementSettings::new(random_unit_rows(rng, m, rank)?, random_unit_rows(rng, m, rank)?)
}

/// Correlation matrix `A Y Bᵀ` with Gaussian `Y`, which always has a finite
/// gauge.
pub fn random_finite_gauge_c<R: Rng + ?Sized>(rng: &mut R, s: &MeasurementSettings) -> Result<RealMatrix> {
    s.correlations_of(&gaussian_matrix(rng, 3, 3))
}
