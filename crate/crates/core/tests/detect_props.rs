use bellcorr::corrsets::{correlation_matrix, gauge, support, ModelTag};
use bellcorr::detect::{
    aligned_rotation, bqs_witness, containment_radius, critical_noise, entanglement_witness, sample_quantum_state,
    sample_separable_state, RatioPair,
};
use bellcorr::mat3::{random_rotation, Component, RealMatrix};
use bellcorr::oracle::{gaussian_matrix, random_settings, support_qm_oracle};
use bellcorr::pauli::{bell_operator, hull_state, max_entangled, max_eigenvalue, phi_plus};
use bellcorr::MeasurementSettings;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The state whose Bloch block is `q`: maximally entangled for
/// `det q = −1`, the block-positive hull operator otherwise.
fn state_for(q: &RealMatrix) -> bellcorr::pauli::Operator4 {
    if q.det().unwrap() < 0.0 {
        max_entangled(q).unwrap()
    } else {
        hull_state(q).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn witnesses_are_nonnegative_on_their_class(seed in any::<u64>(), m in 1usize..=5, rank in 1usize..=3) {
        prop_assume!(rank <= m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_settings(&mut rng, m, rank).unwrap();
        let z = gaussian_matrix(&mut rng, m, m);
        let w_ent = entanglement_witness(&s, &z).unwrap();
        let w_bqs = bqs_witness(&s, &z).unwrap();
        for _ in 0..20 {
            prop_assert!(sample_separable_state(&mut rng, 6).expectation(&w_ent) >= -1e-9);
            prop_assert!(sample_quantum_state(&mut rng).expectation(&w_bqs) >= -1e-9);
        }
    }

    #[test]
    fn maximizers_are_detected_with_full_margin(seed in any::<u64>(), m in 1usize..=5, rank in 1usize..=3) {
        prop_assume!(rank <= m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_settings(&mut rng, m, rank).unwrap();
        for pair in RatioPair::ALL {
            let rep = containment_radius(&s, pair).unwrap();
            prop_assert!((rep.inner_gauge - rep.radius).abs() <= 1e-8 * rep.radius);
            let inner = gauge(pair.inner(), &s, &rep.maximizer_c.scale(1.0 / rep.radius)).unwrap().value;
            prop_assert!((inner - 1.0).abs() <= 1e-8);
            let outer = gauge(pair.outer(), &s, &rep.maximizer_c).unwrap().value;
            prop_assert!(outer <= 1.0 + 1e-8);

            let q = aligned_rotation(&s, if pair == RatioPair::QmOverSep { -1.0 } else { 1.0 }).unwrap();
            let rho = state_for(&q);
            prop_assert!(correlation_matrix(&rho, &s).unwrap().max_abs_diff(&rep.maximizer_c) < 1e-12);
            let w = match pair {
                RatioPair::QmOverSep => entanglement_witness(&s, &rep.witness_z).unwrap(),
                RatioPair::MaxOverQm => bqs_witness(&s, &rep.witness_z).unwrap(),
            };
            prop_assert!((rho.expectation(&w) - (1.0 - rep.radius)).abs() < 1e-8 * rep.radius);
        }
    }

    /// With two-dimensional setting spans, `γ_sep(A Q Bᵀ)` reaches 2 exactly
    /// when `Q` carries the span of `B` onto the span of `A`.
    #[test]
    fn rank_two_alignment(seed in any::<u64>(), m in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_settings(&mut rng, m, 2).unwrap();
        let aligned = aligned_rotation(&s, -1.0).unwrap();
        let g = gauge(ModelTag::Sep, &s, &s.correlations_of(&aligned).unwrap()).unwrap().value;
        prop_assert!((g - 2.0).abs() < 1e-9);

        // Any in-plane rotation composed with the alignment stays aligned.
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let va = bellcorr::mat3::svd(s.a()).unwrap().v;
        let spin = RealMatrix::from_rows(&[
            [theta.cos(), -theta.sin(), 0.0],
            [theta.sin(), theta.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ])
        .unwrap();
        let in_plane = &(&(&va * &spin) * &va.transpose()) * &aligned;
        let g = gauge(ModelTag::Sep, &s, &s.correlations_of(&in_plane).unwrap()).unwrap().value;
        prop_assert!((g - 2.0).abs() < 1e-9);

        // A generic rotation tilts the plane and loses the maximum.
        let q = random_rotation(&mut rng, Component::So3Minus);
        let g = gauge(ModelTag::Sep, &s, &s.correlations_of(&q).unwrap()).unwrap().value;
        prop_assert!(g < 2.0 - 1e-6);
    }

    #[test]
    fn critical_noise_depends_only_on_rank(seed in any::<u64>(), m in 3usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_settings(&mut rng, m, 3).unwrap();
        let c = correlation_matrix(&phi_plus(), &s).unwrap();
        prop_assert!((critical_noise(ModelTag::Sep, &s, &c).unwrap() - 2.0 / 3.0).abs() < 1e-8);
    }

    /// The quantum support equals the top eigenvalue of the Bell operator and
    /// bounds every sampled expectation from above.
    #[test]
    fn pullback_identity(seed in any::<u64>(), m in 1usize..=5, rank in 1usize..=3) {
        prop_assume!(rank <= m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_settings(&mut rng, m, rank).unwrap();
        let z = gaussian_matrix(&mut rng, m, m);
        let phi = support(ModelTag::Qm, &s, &z).unwrap();
        let top = max_eigenvalue(&bell_operator(&s, &z).unwrap()).unwrap();
        prop_assert!((phi - top).abs() < 1e-9 * phi.max(1.0));
        prop_assert!((support_qm_oracle(&s, &z).unwrap() - phi).abs() < 1e-9 * phi.max(1.0));
        let op = bell_operator(&s, &z).unwrap();
        let sampled = (0..200).map(|_| sample_quantum_state(&mut rng).expectation(&op)).fold(f64::MIN, f64::max);
        prop_assert!(sampled <= phi + 1e-9 * phi.max(1.0));
        prop_assert!(sampled >= 0.0);
    }
}

#[test]
fn chsh_maximizer_example() {
    let s = MeasurementSettings::chsh();
    let rep = containment_radius(&s, RatioPair::QmOverSep).unwrap();
    assert_eq!(rep.radius, 2.0);
    assert!((rep.inner_gauge - 2.0).abs() < 1e-12);
    let rep = containment_radius(&s, RatioPair::MaxOverQm).unwrap();
    assert_eq!(rep.radius, 1.0);
}
