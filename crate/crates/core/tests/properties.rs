use nalgebra::Matrix2;
use proptest::prelude::*;
use std::f64::consts::PI;
use sweetspot::cavity::{
    effective_hamiltonian, entangler_unitary, evolve_lindblad, CavityConfig, HybridState, NoiseDraw,
};
use sweetspot::filter::FilterPlan;
use sweetspot::hamiltonian::{build_hst, eigensystem, DeviceParams, E, G};
use sweetspot::linalg::{c, phase_distance, sigma_x, sigma_y, sigma_z, DMat, Mat2};
use sweetspot::metrics::{average_gate_fidelity, trace_fidelity};
use sweetspot::pulses::{non_cyclic_sequence, non_cyclic_unitary, GateFamily, PulseSegment, PulseSequence, Rotation};
use sweetspot::units::ghz;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

fn device() -> impl Strategy<Value = DeviceParams> {
    (0.5f64..4.0, 0.5f64..4.0, -6.0f64..6.0).prop_map(|(b, t, e)| DeviceParams::from_ghz(b, t, e).unwrap())
}

/// Segment product built from matrix exponentials of the Pauli generators.
fn expm_oracle(segments: &[PulseSegment], delta: f64) -> Mat2 {
    segments.iter().fold(Mat2::identity(), |acc, s| {
        let h = (sigma_x() * c(s.phi.cos(), 0.0) + sigma_y() * c(s.phi.sin(), 0.0) + sigma_z() * c(delta, 0.0))
            * c(0.5 * s.theta, 0.0);
        (h * c(0.0, -1.0)).exp() * acc
    })
}

fn segments() -> impl Strategy<Value = Vec<PulseSegment>> {
    prop::collection::vec((-PI..PI, 0.05f64..2.0 * PI), 1..5)
        .prop_map(|v| v.into_iter().map(|(p, t)| PulseSegment::new(p, t)).collect())
}

fn random_unitary(a: f64, b: f64, cc: f64, phase: f64) -> Mat2 {
    let h = sigma_x() * c(a, 0.0) + sigma_y() * c(b, 0.0) + sigma_z() * c(cc, 0.0);
    (h * c(0.0, -1.0)).exp() * c(phase.cos(), phase.sin())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hamiltonian_is_hermitian(p in device()) {
        let h = build_hst(&p);
        prop_assert_eq!(h, h.transpose());
    }

    #[test]
    fn dipole_trace_is_minus_one(p in device()) {
        let sys = eigensystem(&p);
        let tr: f64 = (0..3).map(|n| sys.d(n, n)).sum();
        prop_assert!((tr + 1.0).abs() < 1e-12, "trace {}", tr);
    }

    #[test]
    fn hellmann_feynman_matches_finite_difference(p in device()) {
        let sys = eigensystem(&p);
        prop_assume!(sys.min_gap() > ghz(0.05));
        let h = 1e-5 * ghz(1.0);
        let up = eigensystem(&p.with_epsilon(p.epsilon + h));
        let dn = eigensystem(&p.with_epsilon(p.epsilon - h));
        for n in 0..3 {
            let fd = (up.energies[n] - dn.energies[n]) / (2.0 * h);
            let hf = sys.d(n, n);
            prop_assert!((fd - hf).abs() <= 1e-5 * hf.abs().max(1e-3), "level {}: {} vs {}", n, fd, hf);
        }
    }

    #[test]
    fn sequence_unitary_matches_matrix_exponential(segs in segments(), delta in -0.3f64..0.3) {
        let seq = PulseSequence::new(GateFamily::Naive, Rotation::new([1.0, 0.0, 0.0], 0.0), segs.clone()).unwrap();
        let d = (seq.unitary(delta) - expm_oracle(&segs, delta)).norm();
        prop_assert!(d < 1e-9, "distance {}", d);
    }

    #[test]
    fn non_cyclic_closed_form(chi0 in 0.01f64..3.0, phi0 in -PI..PI, phi1 in -PI..PI, beta0 in 0.01f64..3.0) {
        let seq = non_cyclic_sequence(chi0, phi0, phi1, beta0).unwrap();
        let d = phase_distance(&seq.unitary(0.0), &non_cyclic_unitary(chi0, phi0, phi1, beta0));
        prop_assert!(d < 1e-9, "distance {}", d);
    }

    #[test]
    fn splitting_a_segment_leaves_filter_unchanged(
        segs in segments(),
        pick in 0usize..4,
        frac in 0.05f64..0.95,
        omega in 0.01f64..30.0,
    ) {
        let k = pick % segs.len();
        let mut split = segs.clone();
        let s = split.remove(k);
        split.insert(k, PulseSegment::new(s.phi, (1.0 - frac) * s.theta));
        split.insert(k, PulseSegment::new(s.phi, frac * s.theta));
        let target = Rotation::new([1.0, 0.0, 0.0], 0.0);
        let a = PulseSequence::new(GateFamily::Naive, target, segs).unwrap();
        let b = PulseSequence::new(GateFamily::Naive, target, split).unwrap();
        let (fa, fb) = (FilterPlan::new(&a).fz(omega), FilterPlan::new(&b).fz(omega));
        prop_assert!((fa - fb).abs() <= 1e-10 * fa.abs().max(1.0), "{} vs {}", fa, fb);
        let (ra, rb) = (FilterPlan::new(&a).control(omega), FilterPlan::new(&b).control(omega));
        prop_assert!((ra.entries - rb.entries).norm() < 1e-10);
    }

    #[test]
    fn fidelities_are_bounded(a in -2.0f64..2.0, b in -2.0f64..2.0, cc in -2.0f64..2.0, ph in -PI..PI) {
        let u = random_unitary(a, b, cc, ph);
        let v = random_unitary(b, cc, a, 0.0);
        let tf = trace_fidelity(&u, &v);
        let agf = average_gate_fidelity(&u, &v);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tf));
        prop_assert!((agf - (2.0 + 4.0 * tf * tf) / 6.0).abs() < 1e-12);
        let same = average_gate_fidelity(&u, &(u * c(ph.cos(), ph.sin())));
        prop_assert!((same - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entangler_is_a_reflection(xi in -2.0 * PI..2.0 * PI) {
        let u = entangler_unitary(xi);
        prop_assert!((&u * &u - DMat::identity(4, 4)).norm() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lindblad_preserves_trace(
        g1 in 0.0f64..1.0,
        g2 in 0.0f64..1.0,
        gamma_a in 0.0f64..0.5,
        gamma_1 in 0.0f64..0.2,
        gamma_2 in 0.0f64..0.2,
        d1 in -0.3f64..0.3,
        d2 in -0.3f64..0.3,
        fock in 2usize..4,
    ) {
        let p = DeviceParams::at_sweet_spot(ghz(2.5), ghz(1.5)).unwrap();
        let sys = eigensystem(&p);
        let mut cfg = CavityConfig::new(sys.qubit_frequency(), [g1, g2], gamma_a).unwrap();
        cfg.gamma_1 = gamma_1;
        cfg.gamma_2 = gamma_2;
        cfg.n_max = fock;
        let eig = [sys.clone(), sys];
        let draw = NoiseDraw { delta: [d1, d2], resonator: 0.0 };
        let h = effective_hamiltonian(&cfg, &eig, &draw).unwrap();
        let rho0 = HybridState::basis(cfg.space(), E, E, 0);
        let tr = evolve_lindblad(&cfg, &h.matrix, &rho0, 10.0, 0.5).unwrap();
        for s in &tr.states {
            prop_assert!((s.trace() - 1.0).abs() < 1e-9);
            prop_assert!(s.min_eigenvalue() > -1e-7);
            prop_assert!(s.hermiticity_error() < 1e-9);
        }
        prop_assert!(tr.last().population(G, G, 0) >= -1e-12);
    }
}

#[test]
fn pauli_oracle_sanity() {
    let x = expm_oracle(&[PulseSegment::new(0.0, PI)], 0.0);
    let expected = Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.0));
    assert!((x - expected).norm() < 1e-12);
}
