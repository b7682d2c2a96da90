use mtsph_web::{damping_history, saturation_profile, uniaxial_curve};

#[test]
fn uniaxial_curve_is_elastic_then_hardening() {
    let c = uniaxial_curve(1.05, 100, 450e6).unwrap();
    assert_eq!(c.len(), 3 * 101);
    let (strain, stress, alpha): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        c.iter().step_by(3).copied().collect(),
        c[1..].iter().step_by(3).copied().collect(),
        c[2..].iter().step_by(3).copied().collect(),
    );
    // first increment is elastic: σ_vm = 3 μ ε for isochoric stretch, to first order
    assert!((stress[1] / (3.0 * 80.1938e9 * strain[1]) - 1.0).abs() < 0.01);
    assert_eq!(alpha[1], 0.0);
    assert!(alpha[100] > 0.0);
    assert!(stress[100] > 450e6 && stress[100] < 715e6 + 129.24e6 * alpha[100] + 1.0);
    assert!(stress.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn damping_history_decreases() {
    let h = damping_history(10, 6, 1e3, 1e-7, 50).unwrap();
    assert_eq!(h[0], 1.0);
    assert!(h.windows(2).all(|w| w[1] <= w[0]));
    assert!(h[50] < 1.0);
    let still = damping_history(10, 6, 0.0, 1e-7, 5).unwrap();
    assert!(still.iter().all(|e| (*e - 1.0).abs() < 1e-15));
}

#[test]
fn saturation_front_advances() {
    let early = saturation_profile(50, 10.0, 1e-10).unwrap();
    let late = saturation_profile(50, 200.0, 1e-10).unwrap();
    assert_eq!(early[0], 0.4);
    assert!(early.iter().chain(&late).all(|a| (0.0..=0.4).contains(a)));
    let wetted = |p: &[f64]| p.iter().filter(|a| **a > 0.01).count();
    assert!(wetted(&late) > wetted(&early));
    assert!(saturation_profile(3, 1.0, 1e-10).is_err());
}
