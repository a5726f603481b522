mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rydberg_mimo::arraygeom::{ElementPattern, PatternKind};
use rydberg_mimo::capacity::{det_capacity, ergodic_capacity};
use rydberg_mimo::ffchannel::{correlation, hannan_efficiency, EfficiencyKind};
use rydberg_mimo::nfchannel::dyadic_green;
use rydberg_mimo::qsensor::{
    at_splitting, build_rotated_hamiltonian, eigenvalues, field_from_splitting, FieldOrientation,
    RabiFrequency, TransitionDipole,
};
use rydberg_mimo::{Channel, Correlation, EnsembleSpec, Quadrature, Snr};

use common::{dense_overlap, dyad_finite_difference, gamma_log_expectation, K};

#[test]
fn eigenvalues_are_orientation_invariant_on_grid() {
    let omega = RabiFrequency::new(Complex::new(3.0e6, -1.2e6)).unwrap();
    let half = omega.magnitude() / 2.0;
    for i in 0..32 {
        for j in 0..32 {
            let theta = PI * i as f64 / 31.0;
            let phi = 2.0 * PI * j as f64 / 32.0;
            let h = build_rotated_hamiltonian(omega, FieldOrientation::new(theta, phi).unwrap());
            let ev = eigenvalues(&h).unwrap();
            for (got, want) in ev.iter().zip([-half, -half, half, half]) {
                assert!(
                    (got - want).abs() <= 1e-10 * half,
                    "θ={theta} φ={phi}: {ev:?}"
                );
            }
        }
    }
}

#[test]
fn field_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mu = TransitionDipole::new(2.5e-29).unwrap();
    for _ in 0..1000 {
        let field = 10f64.powf(rng.random_range(-6.0..2.0));
        let orient =
            FieldOrientation::new(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI))
                .unwrap();
        let omega = RabiFrequency::from_field(field, mu).unwrap();
        let h = build_rotated_hamiltonian(omega, orient);
        let back = field_from_splitting(omega.magnitude(), mu).unwrap();
        assert!((back - field).abs() <= 1e-12 * field);
        let measured = field_from_splitting(at_splitting(&h).unwrap(), mu).unwrap();
        assert!((measured - field).abs() <= 1e-10 * field);
    }
}

fn pair(kind: PatternKind, delta: [f64; 3]) -> (ElementPattern<f64>, ElementPattern<f64>) {
    (
        ElementPattern::new(kind, delta),
        ElementPattern::new(kind, [0.0; 3]),
    )
}

#[test]
fn isotropic_correlation_is_sinc() {
    let quad = Quadrature::default();
    for d in [0.1, 0.25, 0.5, 1.0] {
        let (a, b) = pair(PatternKind::Isotropic, [d, 0.0, 0.0]);
        let rho = correlation(&a, &b, &quad).unwrap();
        let want = (K * d).sin() / (K * d);
        assert!((rho - want).norm() < 1e-6, "d={d}: {rho} vs {want}");
    }
}

#[test]
fn dipole_correlation_matches_dense_quadrature() {
    let quad = Quadrature::default();
    for d in [0.1, 0.25, 0.5, 1.0] {
        for delta in [[d, 0.0, 0.0], [0.0, d, 0.0], [d * 0.6, d * 0.8, 0.0]] {
            let (a, b) = pair(PatternKind::Dipole, delta);
            let rho = correlation(&a, &b, &quad).unwrap();
            let want = dense_overlap(|t| t.cos().powi(2), delta, 512, 1024);
            assert!((rho - want).norm() < 1e-6, "Δ={delta:?}: {rho} vs {want}");
        }
    }
}

#[test]
fn hannan_half_wavelength_values() {
    assert!((hannan_efficiency(0.25, EfficiencyKind::Dipole).unwrap() - PI / 4.0).abs() < 1e-15);
    assert_eq!(
        hannan_efficiency(0.25, EfficiencyKind::Atomic).unwrap(),
        1.0
    );
}

fn random_pair(rng: &mut ChaCha8Rng) -> ([f64; 3], [f64; 3]) {
    let k_r = rng.random_range(PI..100.0 * PI);
    let dist = k_r / K;
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    let src = [
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
    ];
    let obs = [
        src[0] + dist * s * phi.cos(),
        src[1] + dist * s * phi.sin(),
        src[2] + dist * z,
    ];
    (obs, src)
}

#[test]
fn dyad_matches_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..120 {
        let (obs, src) = random_pair(&mut rng);
        let g = dyadic_green(&obs, &src, K).unwrap();
        let fd = dyad_finite_difference(
            [obs[0] - src[0], obs[1] - src[1], obs[2] - src[2]],
            1.0 / 200.0,
        );
        let scale = g.max_abs();
        for p in 0..3 {
            for q in 0..3 {
                let err = (g.entries[p][q] - fd[p][q]).norm() / scale;
                assert!(err < 1e-6, "({p},{q}) rel err {err:e}");
            }
        }
    }
}

#[test]
fn dyad_reciprocity() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..200 {
        let (obs, src) = random_pair(&mut rng);
        let a = dyadic_green(&obs, &src, K).unwrap();
        let b = dyadic_green(&src, &obs, K).unwrap();
        let scale = a.max_abs();
        for p in 0..3 {
            for q in 0..3 {
                assert!((a.entries[p][q] - b.entries[p][q]).norm() <= 1e-10 * scale);
                assert!((a.entries[p][q] - a.entries[q][p]).norm() <= 1e-10 * scale);
            }
        }
    }
}

#[test]
fn det_capacity_matches_singular_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (rows, cols) in [(4, 4), (3, 6), (7, 2)] {
        let m = DMatrix::from_fn(rows, cols, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let snr = Snr::new(10.0, cols).unwrap();
        let want: f64 = m
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .map(|s| (1.0 + snr.per_port() * s * s).log2())
            .sum();
        let got = det_capacity(&Channel::external(m), &snr).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn siso_ergodic_matches_exponential_integral() {
    let spec = EnsembleSpec::new(Correlation::identity(1), 1.0, 1, 2024, 100_000).unwrap();
    let est = ergodic_capacity(&spec, &Snr::new(10.0, 1).unwrap()).unwrap();
    let want = gamma_log_expectation(10.0, 1);
    assert!((want - 2.91).abs() < 0.01);
    assert!(
        (est.mean / want - 1.0).abs() < 0.01,
        "{} vs {want}",
        est.mean
    );
}
