mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use spinsqueeze::*;

fn spin(j: f64) -> Spin {
    Spin::new(j).unwrap()
}

fn cfg() -> PropagatorConfig {
    PropagatorConfig::default()
}

fn scan(j: f64, m: Metric) -> ScanResult {
    scan_tau(&ScanSpec::auto(spin(j), m), &cfg()).unwrap()
}

#[test]
fn twin_fock_matches_dense_rotation() {
    for j in [1.0, 2.0, 5.0, 12.0] {
        let (jx, _, _) = common::jx_jy_jz(j);
        let mut zero = vec![common::c(0.0, 0.0); (2.0 * j) as usize + 1];
        zero[j as usize] = common::c(1.0, 0.0);
        let oracle = common::apply(&common::expm(&(jx * common::c(0.0, -FRAC_PI_2))), &zero);
        let tfs = make_twin_fock(spin(j)).unwrap();
        assert!(common::max_diff(tfs.amplitudes(), &oracle) < 1e-12, "J={j}");
    }
}

#[test]
fn sss_matches_dense_oracle() {
    for (j, tau) in [(1.0, 0.4), (3.5, 0.2), (10.0, 0.05), (10.0, 0.3)] {
        let s = make_sss(spin(j), &TwistProtocol::at(tau).unwrap(), &cfg()).unwrap();
        assert!(common::max_diff(s.amplitudes(), &common::sss(j, tau)) < 1e-10, "J={j} tau={tau}");
    }
}

#[test]
fn sss_examples() {
    let s = make_sss(spin(1.0), &TwistProtocol::at(FRAC_PI_4).unwrap(), &cfg()).unwrap();
    assert!((spin_moments(&s).variance_z - 1.0).abs() < 1e-10);
    // τ = 0: |J,J⟩ rotated onto x
    let s = make_sss(spin(50.0), &TwistProtocol::at(0.0).unwrap(), &cfg()).unwrap();
    assert!((spin_moments(&s).variance_z - 25.0).abs() < 1e-10);
}

#[test]
fn qpd_of_twin_fock_against_d_matrix() {
    let j = 50.0;
    let tfs = make_twin_fock(spin(j)).unwrap();
    let g = qpd(&tfs, 36, 19).unwrap();
    let (jx, _, _) = common::jx_jy_jz(j);
    let mut zero = vec![common::c(0.0, 0.0); 101];
    zero[50] = common::c(1.0, 0.0);
    // ⟨CSS(φ, 0)| = ⟨J, J| up to phase
    let pole = common::apply(&common::expm(&(jx * common::c(0.0, -FRAC_PI_2))), &zero)[0].norm_sqr();
    // |d^J_{J0}(π/2)|² = C(2J, J)/4^J
    let binom: f64 = (1..=50).map(|k| (50.0 + k as f64) / (k as f64 * 4.0)).product();
    assert!((pole - binom).abs() < 1e-12);
    for i in 0..g.n_phi() {
        assert!((g.value(i, 0) - pole).abs() < 1e-12);
    }
    // the ring is the great circle orthogonal to y
    let (iy, eq) = g.nearest(FRAC_PI_2, FRAC_PI_2);
    assert!(g.value(iy, eq) < 1e-6);
    let (ix, _) = g.nearest(PI, 0.0);
    assert!(g.value(ix, eq) > 1e3 * g.value(iy, eq));
}

#[test]
fn qpd_of_highest_weight_peaks_at_north_pole() {
    let g = qpd(&SpinState::highest(spin(7.0)), 12, 25).unwrap();
    for i in 0..g.n_phi() {
        assert!((g.value(i, 0) - 1.0).abs() < 1e-12);
        for l in 1..g.n_theta() {
            assert!(g.value(i, l) < g.value(i, 0));
        }
    }
    assert_eq!(g.n_phi(), 12);
    assert_eq!(g.n_theta(), 25);
    assert!((g.theta(24) - PI).abs() < 1e-15);
}

#[test]
fn max_sd_grows_with_j() {
    let rows = scaling_sweep(&[spin(10.0), spin(20.0), spin(50.0)], &[Metric::VarZMax], &cfg()).unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r.ok().unwrap().value_star).collect();
    assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
    let published = 0.799 * (50.0 + 0.453);
    assert!((v[2] / published - 1.0).abs() < 0.02, "{} vs {published}", v[2]);
}

#[test]
fn optimal_times_and_fidelities_at_j50() {
    let e = scan(50.0, Metric::FidEwss);
    let t = scan(50.0, Metric::FidTfs);
    let tau16 = (1.10f64 * 50.0).ln() / (4.02 * 50.0);
    assert!((e.tau_star / tau16 - 1.0).abs() < 0.05, "{}", e.tau_star);
    let f7 = (0.0743f64 / 50.0 + 0.932).powi(2);
    assert!((t.value_star - f7).abs() < 0.01, "{}", t.value_star);
    assert!(e.tau_star < t.tau_star);
}

#[test]
fn ewss_peak_precedes_twin_fock_peak() {
    for j in [5.0, 10.0, 20.0] {
        assert!(scan(j, Metric::FidEwss).tau_star < scan(j, Metric::FidTfs).tau_star, "J={j}");
    }
}

#[test]
fn maximal_fidelities_decrease_with_j() {
    for m in [Metric::FidEwss, Metric::FidTfs] {
        let mut prev = 1.0;
        for j in [5.0, 10.0, 20.0, 50.0] {
            let v = scan(j, m).value_star;
            assert!(v < prev, "{m} J={j}: {v} !< {prev}");
            prev = v;
        }
    }
}

#[test]
fn refinement_never_loses_to_grid() {
    for m in Metric::ALL {
        let r = scan(20.0, m);
        let best = if m.maximizes() {
            r.grid_values.iter().cloned().fold(f64::MIN, f64::max)
        } else {
            -r.grid_values.iter().cloned().fold(f64::MAX, f64::min)
        };
        let got = if m.maximizes() { r.value_star } else { -r.value_star };
        assert!(got >= best - 1e-12, "{m}");
        assert!(r.tau_star >= r.spec.tau_min && r.tau_star <= r.spec.tau_max);
    }
}

#[test]
fn scans_are_bitwise_deterministic() {
    let a = scan(30.0, Metric::VarZMax);
    let b = scan(30.0, Metric::VarZMax);
    assert_eq!(a, b);
    assert_eq!(a.tau_star.to_bits(), b.tau_star.to_bits());
}

#[test]
fn twin_fock_scan_needs_integer_j() {
    let err = scan_tau(&ScanSpec::auto(spin(7.5), Metric::FidTfs), &cfg()).unwrap_err();
    assert!(matches!(err, Error::MetricUndefined { .. }));
}
