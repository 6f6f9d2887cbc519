//! Two-qubit operator algebra.
//!
//! Operators are dense 4×4 complex matrices in the computational basis
//! `|00⟩, |01⟩, |10⟩, |11⟩` (Alice is the left tensor factor) with
//! `σ₁ = X`, `σ₂ = Y`, `σ₃ = Z`. Every Hermitian operator has a Pauli form
//!
//! ```text
//! ρ = ¼ (w·I + Σᵢ r_A,i σᵢ⊗I + Σⱼ r_B,j I⊗σⱼ + Σᵢⱼ Tᵢⱼ σᵢ⊗σⱼ)
//! ```
//!
//! and most questions about correlations only look at `T`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::{dot, norm, orthogonality_defect, symmetric_eigen, RealMatrix};
use crate::settings::MeasurementSettings;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Hermiticity tolerance, relative to `max(1, ‖X‖_F)`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// PSD threshold for eigenvalues of unit-trace operators.
pub const PSD_TOL: f64 = 1e-9;
/// Threshold on the product-state minimum `min f(u, v)` for block positivity.
pub const BLOCK_POSITIVE_TOL: f64 = 1e-7;
/// Restarts used by [`classify_state`].
pub const DEFAULT_BP_RESTARTS: usize = 64;

pub type Mat2 = [[Complex64; 2]; 2];

/// Pauli matrix `σ_k`, with `σ₀ = I`.
pub fn sigma(k: usize) -> Mat2 {
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// `n · σ` for a Bloch vector `n`.
pub fn bloch_observable(n: &[f64]) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (k, &c) in n.iter().enumerate().take(3) {
        let s = sigma(k + 1);
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += s[i][j] * c;
            }
        }
    }
    out
}

/// Dense 4×4 complex matrix on `ℂ² ⊗ ℂ²`.
#[derive(Clone, Copy, PartialEq)]
pub struct Operator4(pub [[Complex64; 4]; 4]);

impl Operator4 {
    pub fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = f(i, j);
            }
        }
        Self(m)
    }

    pub fn from_real(rows: [[f64; 4]; 4]) -> Self {
        Self::from_fn(|i, j| Complex64::new(rows[i][j], 0.0))
    }

    /// From `[re, im]` pairs, row-major.
    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(Error::Dimension("two-qubit operator must be 4x4".into()));
        }
        let op = Self::from_fn(|i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
        if op.0.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(op)
    }

    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        self.0
            .iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }

    /// `x ⊗ y`
    pub fn kron(x: &Mat2, y: &Mat2) -> Self {
        Self::from_fn(|i, j| x[i / 2][j / 2] * y[i % 2][j % 2])
    }

    /// `σ_k ⊗ σ_l`, with index 0 for the identity.
    pub fn pauli_product(k: usize, l: usize) -> Self {
        Self::kron(&sigma(k), &sigma(l))
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * t)
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `‖X − X†‖_F`
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.dagger()).frobenius_norm()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL * self.frobenius_norm().max(1.0)
    }

    fn require_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian(self.hermiticity_defect()))
        }
    }

    /// `Re Tr[self · other]`
    pub fn expectation(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for k in 0..4 {
                acc += (self.0[i][k] * other.0[k][i]).re;
            }
        }
        acc
    }
}

impl Add for Operator4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl Sub for Operator4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl Mul for Operator4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl fmt::Debug for Operator4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator4[")?;
        for row in &self.0 {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>9.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Serialize for Operator4 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator4 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Self::from_pairs(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues of a Hermitian 4×4 operator, ascending.
///
/// Solved through the real symmetric embedding `[[X, −Y], [Y, X]]` of
/// `H = X + iY`, whose spectrum is that of `H` with every eigenvalue doubled.
pub fn eigenvalues_hermitian(h: &Operator4) -> Result<[f64; 4]> {
    h.require_hermitian()?;
    let m = h.dagger();
    let herm = Operator4::from_fn(|i, j| (h.0[i][j] + m.0[i][j]) * 0.5);
    let embed = RealMatrix::from_fn(8, 8, |i, j| {
        let z = herm.0[i % 4][j % 4];
        match (i / 4, j / 4) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let values = symmetric_eigen(&embed)?.values;
    Ok([values[0], values[2], values[4], values[6]])
}

pub fn min_eigenvalue(h: &Operator4) -> Result<f64> {
    Ok(eigenvalues_hermitian(h)?[0])
}

pub fn max_eigenvalue(h: &Operator4) -> Result<f64> {
    Ok(eigenvalues_hermitian(h)?[3])
}

/// Partial transpose on Bob's factor.
pub fn partial_transpose(rho: &Operator4) -> Operator4 {
    Operator4::from_fn(|i, j| {
        let (a, b) = (i / 2, i % 2);
        let (a2, b2) = (j / 2, j % 2);
        rho.0[2 * a + b2][2 * a2 + b]
    })
}

/// `Θ(ρ) = (I ⊗ σ₂) Γ(ρ) (I ⊗ σ₂)`; reverses the sign of every correlation.
pub fn apply_theta(rho: &Operator4) -> Operator4 {
    let y = Operator4::kron(&sigma(0), &sigma(2));
    y * partial_transpose(rho) * y
}

/// Pauli-basis coordinates of a Hermitian two-qubit operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliForm {
    /// Coefficient of `I/4`, equal to the trace.
    pub weight: f64,
    pub r_a: [f64; 3],
    pub r_b: [f64; 3],
    pub t: RealMatrix,
}

impl PauliForm {
    /// Unit-trace operator with no local terms and correlation block `t`.
    pub fn correlations_only(t: RealMatrix) -> Self {
        Self {
            weight: 1.0,
            r_a: [0.0; 3],
            r_b: [0.0; 3],
            t,
        }
    }

    /// `f(u, v) = w + r_A·u + r_B·v + uᵀ T v`, which is four times
    /// `⟨x⊗y|ρ|x⊗y⟩` for the product state with Bloch vectors `u, v`.
    pub fn product_value(&self, u: &[f64; 3], v: &[f64; 3]) -> f64 {
        self.weight + dot(&self.r_a, u) + dot(&self.r_b, v) + dot(u, &self.t.mul_vec(v))
    }
}

pub fn pauli_expand(rho: &Operator4) -> Result<PauliForm> {
    rho.require_hermitian()?;
    let coeff = |k: usize, l: usize| rho.expectation(&Operator4::pauli_product(k, l));
    Ok(PauliForm {
        weight: rho.trace().re,
        r_a: [coeff(1, 0), coeff(2, 0), coeff(3, 0)],
        r_b: [coeff(0, 1), coeff(0, 2), coeff(0, 3)],
        t: RealMatrix::from_fn(3, 3, |i, j| coeff(i + 1, j + 1)),
    })
}

pub fn pauli_assemble(p: &PauliForm) -> Operator4 {
    let mut acc = Operator4::identity().scale(p.weight);
    for k in 0..3 {
        acc = acc + Operator4::pauli_product(k + 1, 0).scale(p.r_a[k]);
        acc = acc + Operator4::pauli_product(0, k + 1).scale(p.r_b[k]);
        for l in 0..3 {
            acc = acc + Operator4::pauli_product(k + 1, l + 1).scale(p.t[(k, l)]);
        }
    }
    acc.scale(0.25)
}

/// Bell operator `Σᵢⱼ zᵢⱼ (aᵢ·σ) ⊗ (bⱼ·σ)`, summed term by term.
pub fn bell_operator(settings: &MeasurementSettings, z: &RealMatrix) -> Result<Operator4> {
    settings.check_square(z, "coefficient matrix")?;
    let m = settings.m();
    let alice: Vec<Mat2> = (0..m).map(|i| bloch_observable(settings.a().row(i))).collect();
    let bob: Vec<Mat2> = (0..m).map(|j| bloch_observable(settings.b().row(j))).collect();
    let mut acc = Operator4::zero();
    for i in 0..m {
        for j in 0..m {
            if z[(i, j)] != 0.0 {
                acc = acc + Operator4::kron(&alice[i], &bob[j]).scale(z[(i, j)]);
            }
        }
    }
    Ok(acc)
}

/// Minimum of `f(u, v)` over unit `u, v` and where it was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockPositivity {
    pub value: f64,
    pub u: [f64; 3],
    pub v: [f64; 3],
}

/// Approximate global minimum of the product-state function
/// `f(u, v) = w + r_A·u + r_B·v + uᵀTv` over unit vectors.
///
/// For fixed `u` the exact minimizer is `v = −(r_B + Tᵀu)/‖·‖` (and
/// symmetrically for `u`), so each alternation step is exact and `f` never
/// increases. Starts from the coordinate axes, the local Bloch directions,
/// and `restarts` random points drawn from `seed`.
pub fn block_positivity_minimum(p: &PauliForm, restarts: usize, seed: u64) -> BlockPositivity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<[f64; 3]> = Vec::with_capacity(restarts + 8);
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        starts.push(e);
        e[k] = -1.0;
        starts.push(e);
    }
    if let Some(d) = unit(&p.r_a) {
        starts.push(d);
        starts.push(d.map(|x| -x));
    }
    for _ in 0..restarts {
        starts.push(random_unit(&mut rng));
    }

    let mut best = BlockPositivity {
        value: f64::INFINITY,
        u: [0.0, 0.0, 1.0],
        v: [0.0, 0.0, 1.0],
    };
    for u0 in starts {
        let (mut u, mut v) = (u0, best_v(p, &u0));
        let mut value = p.product_value(&u, &v);
        for _ in 0..500 {
            u = best_u(p, &v);
            v = best_v(p, &u);
            let next = p.product_value(&u, &v);
            let done = value - next <= 1e-15 * value.abs().max(1.0);
            value = next;
            if done {
                break;
            }
        }
        if value < best.value {
            best = BlockPositivity { value, u, v };
        }
    }
    best
}

fn best_v(p: &PauliForm, u: &[f64; 3]) -> [f64; 3] {
    let tu = p.t.tr_mul_vec(u);
    let g = [p.r_b[0] + tu[0], p.r_b[1] + tu[1], p.r_b[2] + tu[2]];
    unit(&g).map(|d| d.map(|x| -x)).unwrap_or([0.0, 0.0, 1.0])
}

fn best_u(p: &PauliForm, v: &[f64; 3]) -> [f64; 3] {
    let tv = p.t.mul_vec(v);
    let g = [p.r_a[0] + tv[0], p.r_a[1] + tv[1], p.r_a[2] + tv[2]];
    unit(&g).map(|d| d.map(|x| -x)).unwrap_or([0.0, 0.0, 1.0])
}

fn unit(v: &[f64; 3]) -> Option<[f64; 3]> {
    let n = norm(v);
    (n > 1e-300).then(|| v.map(|x| x / n))
}

pub(crate) fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        ];
        if let Some(u) = unit(&v).filter(|_| norm(&v) > 1e-6) {
            return u;
        }
    }
}

/// Membership of a unit-trace operator in the three state spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateClass {
    pub is_quantum: bool,
    /// PPT test, exact for two qubits.
    pub is_separable: bool,
    pub is_block_positive: bool,
    pub min_eigenvalue: f64,
    pub min_pt_eigenvalue: f64,
    /// `min ⟨x⊗y|ρ|x⊗y⟩` over product pure states.
    pub min_product_overlap: f64,
}

pub fn classify_state(rho: &Operator4) -> Result<StateClass> {
    rho.require_hermitian()?;
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::BadTrace(tr));
    }
    let min_eigenvalue = min_eigenvalue(rho)?;
    let min_pt_eigenvalue = min_eigenvalue_of_pt(rho)?;
    let bp = block_positivity_minimum(&pauli_expand(rho)?, DEFAULT_BP_RESTARTS, 0);
    let is_quantum = min_eigenvalue >= -PSD_TOL;
    Ok(StateClass {
        is_quantum,
        is_separable: is_quantum && min_pt_eigenvalue >= -PSD_TOL,
        // PSD already implies nonnegativity on product vectors.
        is_block_positive: is_quantum || bp.value >= -BLOCK_POSITIVE_TOL,
        min_eigenvalue,
        min_pt_eigenvalue,
        min_product_overlap: bp.value / 4.0,
    })
}

fn min_eigenvalue_of_pt(rho: &Operator4) -> Result<f64> {
    min_eigenvalue(&partial_transpose(rho))
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Invalid(format!("noise fraction must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_orthogonal(q: &RealMatrix) -> Result<()> {
    if q.shape() != (3, 3) {
        return Err(Error::Dimension(format!("expected 3x3, got {:?}", q.shape())));
    }
    let d = orthogonality_defect(q);
    if d > 1e-9 {
        return Err(Error::NotOrthogonal(d));
    }
    Ok(())
}

/// `|Φ⁺⟩⟨Φ⁺|` with `|Φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
pub fn phi_plus() -> Operator4 {
    let mut m = [[0.0; 4]; 4];
    for i in [0, 3] {
        for j in [0, 3] {
            m[i][j] = 0.5;
        }
    }
    Operator4::from_real(m)
}

/// Werner state `(1−p)|Φ⁺⟩⟨Φ⁺| + p·I/4`.
pub fn werner_state(p: f64) -> Result<Operator4> {
    check_probability(p)?;
    Ok(phi_plus().scale(1.0 - p) + Operator4::identity().scale(p / 4.0))
}

/// The beyond-quantum block-positive operator with `T = I₃`.
pub fn rho_max() -> Operator4 {
    Operator4::from_real([
        [0.5, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.5],
    ])
}

/// `(1−p)·ρ_max + p·I/4`; quantum exactly when `p ≥ 2/3`.
pub fn tau_state(p: f64) -> Result<Operator4> {
    check_probability(p)?;
    Ok(rho_max().scale(1.0 - p) + Operator4::identity().scale(p / 4.0))
}

/// `(I + Σ Qᵢⱼ σᵢ⊗σⱼ)/4` for orthogonal `Q`; block-positive for every
/// `Q ∈ O(3)` and a quantum state only when `det Q = −1`.
pub fn hull_state(q: &RealMatrix) -> Result<Operator4> {
    check_orthogonal(q)?;
    Ok(pauli_assemble(&PauliForm::correlations_only(q.clone())))
}

/// Maximally entangled pure state with correlation block `Q ∈ SO⁻(3)`.
pub fn max_entangled(q: &RealMatrix) -> Result<Operator4> {
    check_orthogonal(q)?;
    let det = q.det()?;
    if det > 0.0 {
        return Err(Error::Invalid(
            "maximally entangled states need det Q = -1".into(),
        ));
    }
    let rho = hull_state(q)?;
    let min = min_eigenvalue(&rho)?;
    if min < -PSD_TOL {
        return Err(Error::Invalid(format!(
            "assembled operator is not positive semidefinite (min eigenvalue {min})"
        )));
    }
    Ok(rho)
}

/// Pure product state with Bloch vectors `u`, `v`.
pub fn product_state(u: &[f64; 3], v: &[f64; 3]) -> Operator4 {
    let half = |n: &[f64; 3]| {
        let o = bloch_observable(n);
        let s0 = sigma(0);
        let mut m = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = (s0[i][j] + o[i][j]) * 0.5;
            }
        }
        m
    };
    Operator4::kron(&half(u), &half(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn assert_spectrum(h: &Operator4, expected: [f64; 4]) {
        let ev = eigenvalues_hermitian(h).unwrap();
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10, "spectrum {ev:?} vs {expected:?}");
        }
    }

    #[test]
    fn maximally_mixed_expansion() {
        let p = pauli_expand(&Operator4::identity().scale(0.25)).unwrap();
        assert!((p.weight - 1.0).abs() < TOL);
        assert_eq!(p.r_a, [0.0; 3]);
        assert_eq!(p.r_b, [0.0; 3]);
        assert!(p.t.max_abs() < TOL);
    }

    #[test]
    fn phi_plus_and_rho_max_correlations() {
        let p = pauli_expand(&phi_plus()).unwrap();
        assert!(p.t.max_abs_diff(&RealMatrix::from_diag(&[1.0, -1.0, 1.0])) < TOL);
        assert!(norm(&p.r_a) < TOL && norm(&p.r_b) < TOL);
        let p = pauli_expand(&rho_max()).unwrap();
        assert!(p.t.max_abs_diff(&RealMatrix::identity(3)) < TOL);
        assert!(norm(&p.r_a) < TOL && norm(&p.r_b) < TOL);
    }

    #[test]
    fn expand_rejects_non_hermitian() {
        let mut x = Operator4::identity();
        x.0[0][1] = ONE;
        assert!(matches!(pauli_expand(&x), Err(Error::NotHermitian(_))));
        assert!(eigenvalues_hermitian(&x).is_err());
    }

    #[test]
    fn named_spectra() {
        assert_spectrum(&rho_max(), [-0.5, 0.5, 0.5, 0.5]);
        let p = 0.3;
        let lo = (-2.0 + 3.0 * p) / 4.0;
        let hi = (2.0 - p) / 4.0;
        assert_spectrum(&tau_state(p).unwrap(), [lo, hi, hi, hi]);
    }

    #[test]
    fn partial_transpose_of_phi_plus() {
        assert_spectrum(&partial_transpose(&phi_plus()), [-0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn theta_fixes_maximally_mixed() {
        let mixed = Operator4::identity().scale(0.25);
        assert!(apply_theta(&mixed).max_abs_diff(&mixed) < TOL);
    }

    #[test]
    fn theta_flips_correlations() {
        let rho = werner_state(0.2).unwrap();
        let before = pauli_expand(&rho).unwrap();
        let after = pauli_expand(&apply_theta(&rho)).unwrap();
        assert!((&before.t + &after.t).max_abs() < TOL);
    }

    #[test]
    fn bell_operator_of_pauli_diagonal() {
        let z = RealMatrix::from_diag(&[1.0, -1.0, 1.0]);
        let s = bell_operator(&MeasurementSettings::pauli3(), &z).unwrap();
        let expected = Operator4::pauli_product(1, 1) - Operator4::pauli_product(2, 2)
            + Operator4::pauli_product(3, 3);
        assert!(s.max_abs_diff(&expected) < TOL);
        let zero = bell_operator(&MeasurementSettings::pauli3(), &RealMatrix::zeros(3, 3)).unwrap();
        assert_eq!(zero, Operator4::zero());
        assert!(bell_operator(&MeasurementSettings::pauli3(), &RealMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn diagonal_bell_operator_spectrum() {
        // Σ s̃ₖ σₖ⊗σₖ has eigenvalues θ·s̃ with θ₁θ₂θ₃ = −1.
        let st = [0.9, 0.4, -0.25];
        let mut s = Operator4::zero();
        for k in 0..3 {
            s = s + Operator4::pauli_product(k + 1, k + 1).scale(st[k]);
        }
        let mut expected: Vec<f64> = [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]
            .iter()
            .map(|th: &[f64; 3]| th.iter().zip(st).map(|(a, b)| a * b).sum())
            .collect();
        expected.sort_by(f64::total_cmp);
        assert_spectrum(&s, [expected[0], expected[1], expected[2], expected[3]]);
    }

    #[test]
    fn block_positivity_examples() {
        let bp = block_positivity_minimum(&PauliForm::correlations_only(RealMatrix::identity(3)), 64, 1);
        assert!(bp.value.abs() < 1e-12);
        let bp = block_positivity_minimum(
            &PauliForm::correlations_only(RealMatrix::from_diag(&[1.0, -1.0, 1.0])),
            64,
            1,
        );
        assert!(bp.value.abs() < 1e-12);
        let lopsided = PauliForm {
            weight: 1.0,
            r_a: [0.3, 0.0, 0.0],
            r_b: [0.0; 3],
            t: RealMatrix::identity(3),
        };
        let bp = block_positivity_minimum(&lopsided, 64, 1);
        assert!(bp.value < -1e-3, "{bp:?}");
        let r = RealMatrix::identity(3).max_abs() + norm(&lopsided.r_a);
        assert!(bp.value >= -r);
    }

    #[test]
    fn classification_examples() {
        let c = classify_state(&werner_state(0.7).unwrap()).unwrap();
        assert!(c.is_separable && c.is_quantum && c.is_block_positive);
        let c = classify_state(&werner_state(0.5).unwrap()).unwrap();
        assert!(c.is_quantum && !c.is_separable);
        let c = classify_state(&tau_state(0.5).unwrap()).unwrap();
        assert!(c.is_block_positive && !c.is_quantum);
        assert!(matches!(
            classify_state(&Operator4::identity()),
            Err(Error::BadTrace(_))
        ));
    }

    #[test]
    fn named_state_constructors() {
        assert!(werner_state(1.0)
            .unwrap()
            .max_abs_diff(&Operator4::identity().scale(0.25))
            < TOL);
        assert!(werner_state(1.5).is_err());
        let flip = RealMatrix::from_diag(&[1.0, -1.0, 1.0]);
        assert!(max_entangled(&flip).unwrap().max_abs_diff(&phi_plus()) < TOL);
        assert!(max_entangled(&RealMatrix::identity(3)).is_err());
        assert!(hull_state(&RealMatrix::identity(3)).unwrap().max_abs_diff(&rho_max()) < TOL);
        assert!(matches!(
            hull_state(&RealMatrix::from_diag(&[1.0, 2.0, 1.0])),
            Err(Error::NotOrthogonal(_))
        ));
    }

    #[test]
    fn product_state_has_rank_one_correlations() {
        let u = [0.0, 0.6, 0.8];
        let v = [1.0, 0.0, 0.0];
        let p = pauli_expand(&product_state(&u, &v)).unwrap();
        assert!(p.t.max_abs_diff(&RealMatrix::from_fn(3, 3, |i, j| u[i] * v[j])) < TOL);
        assert!((p.r_a[1] - 0.6).abs() < TOL && (p.r_b[0] - 1.0).abs() < TOL);
    }
}
