//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use spinsqueeze::fit::FitModel;
use spinsqueeze::scan::default_tau_max;
use spinsqueeze::*;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn spin(j: f64) -> Spin {
    Spin::new(j).unwrap()
}

fn cfg() -> PropagatorConfig {
    PropagatorConfig::default()
}

fn scan(j: f64, m: Metric) -> ScanResult {
    scan_tau(&ScanSpec::auto(spin(j), m), &cfg()).unwrap()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// exp(τG)|1,1⟩ = cos τ|1,1⟩ + sin τ|1,−1⟩; max var_z = 1 at τ = π/4.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let j = spin(1.0);
    let g = tact_generator(j, 1.0, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let tau = 0.1 * k as f64 + 0.037;
        let s = evolve(&SpinState::highest(j), &g, tau, &cfg()).unwrap();
        let expect = [common::c(tau.cos(), 0.0), common::c(0.0, 0.0), common::c(tau.sin(), 0.0)];
        worst = worst.max(common::max_diff(s.amplitudes(), &expect));
    }
    let spec = ScanSpec::new(j, Metric::VarZMax, 0.0, FRAC_PI_2, 64, 1e-10).unwrap();
    let r = scan_tau(&spec, &cfg()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = worst < 1e-10 && (r.value_star - 1.0).abs() < 1e-8 && (r.tau_star - FRAC_PI_4).abs() < 1e-4 && secs < 1.0;
    check(
        ok,
        format!(
            "max amplitude error {worst:.1e} (tol 1e-10); var_z* = {:.12} at tau* = {:.8} (pi/4 = {:.8}); {secs:.3} s",
            r.value_star, r.tau_star, FRAC_PI_4
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for jv in [1.0, 2.0, 10.0, 50.0] {
        let j = spin(jv);
        let (_, _, jz) = common::jx_jy_jz(jv);
        let cases = [
            (make_ewss(j), jv * (jv + 1.0) / 3.0),
            (make_twin_fock(j).unwrap(), jv * (jv + 1.0) / 2.0),
            (make_cat(j), jv * jv),
            (make_css(j, CoherentSpinParams::new(0.0, FRAC_PI_2).unwrap()), jv / 2.0),
        ];
        for (s, expect) in cases {
            worst = worst.max((spin_moments(&s).variance_z - expect).abs());
            worst = worst.max((common::variance(&jz, s.amplitudes()) - expect).abs());
        }
    }
    check(
        worst < 1e-10,
        format!("EWSS/TFS/cat/x-CSS variances at J in {{1,2,10,50}}: max error {worst:.1e} (tol 1e-10)"),
    )
}

fn criterion_3() -> Outcome {
    let t = scan(50.0, Metric::FidTfs);
    let e = scan(50.0, Metric::FidEwss);
    let target = (0.0743f64 / 50.0 + 0.932).powi(2);
    let ok = (t.value_star - target).abs() < 0.01 && e.value_star > 0.98 && e.value_star < 1.0;
    check(
        ok,
        format!(
            "J=50 F_TFS = {:.6} (target {target:.6} +- 0.01); F_EWSS = {:.6} in (0.98, 1)",
            t.value_star, e.value_star
        ),
    )
}

fn law(a: f64, b: f64, j: f64) -> f64 {
    (a * j).ln() / (b * j)
}

fn criterion_4a() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for j in [20.0, 50.0, 100.0] {
        let te = scan(j, Metric::FidEwss).tau_star;
        let tt = scan(j, Metric::FidTfs).tau_star;
        let tz = scan(j, Metric::VarZMax).tau_star;
        let d = [rel(te, law(1.10, 4.02, j)), rel(tt, law(25.2, 3.93, j)), rel(tz, law(11.5, 3.94, j))];
        ok &= d.iter().all(|&x| x < 0.05);
        let order = if tz < tt { "tau_dJz < tau_TFS" } else { "tau_TFS <= tau_dJz" };
        parts.push(format!(
            "J={j}: dev {:.1}%/{:.1}%/{:.1}% ({order}, recorded)",
            100.0 * d[0],
            100.0 * d[1],
            100.0 * d[2]
        ));
    }
    check(ok, format!("tau_EWSS/tau_TFS/tau_dJz within 5%: {}", parts.join("; ")))
}

fn criterion_4b() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for j in [20.0, 50.0, 100.0] {
        let ty = scan(j, Metric::VarYMin).tau_star;
        let te = scan(j, Metric::FidEwss).tau_star;
        let tt = scan(j, Metric::FidTfs).tau_star;
        ok &= ty < te && te < tt;
        parts.push(format!("J={j}: tau_vy {ty:.5}, tau_EWSS {te:.5}, tau_TFS {tt:.5}"));
    }
    check(ok, format!("ordering tau(min dJy) < tau_EWSS < tau_TFS: {}", parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let js = [20.0, 30.0, 40.0, 50.0, 70.0, 100.0, 150.0, 200.0];
    let spins: Vec<Spin> = js.iter().map(|&j| spin(j)).collect();
    let metrics = [Metric::FidEwss, Metric::FidTfs, Metric::VarZMax];
    let rows = scaling_sweep(&spins, &metrics, &cfg()).unwrap();
    let column = |m: Metric, sd: bool| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.metric == m)
            .map(|r| {
                let s = r.ok().unwrap();
                if sd {
                    s.sd_z_star
                } else {
                    s.value_star
                }
            })
            .collect()
    };
    let fit_sp = |ys: Vec<f64>| fit(FitFamily::ShiftedPower, &js, &ys, None).unwrap().model.params;
    let vz = fit_sp(column(Metric::VarZMax, false));
    let tfs = fit_sp(column(Metric::FidTfs, true));
    let ewss = fit_sp(column(Metric::FidEwss, true));
    let ok = (vz[2] - 1.0).abs() <= 0.05
        && rel(vz[0], 0.799) < 0.03
        && rel(tfs[0], 0.775) < 0.03
        && rel(ewss[0], 0.557) < 0.10;
    check(
        ok,
        format!(
            "max sd_z: a = {:.4} ({:.1}% of 0.799), exponent {:.4}; tau_TFS curve a = {:.4} ({:.1}% of 0.775); tau_EWSS curve a = {:.4} ({:.1}% of 0.557)",
            vz[0],
            100.0 * rel(vz[0], 0.799),
            vz[2],
            tfs[0],
            100.0 * rel(tfs[0], 0.775),
            ewss[0],
            100.0 * rel(ewss[0], 0.557)
        ),
    )
}

fn criterion_6() -> Outcome {
    let dense = PropagatorConfig { method: Method::DenseExpm, ..Default::default() };
    let krylov = PropagatorConfig { method: Method::Krylov, ..Default::default() };
    let mut worst: f64 = 0.0;
    for twice in 1..=20 {
        let j = Spin::from_twice(twice).unwrap();
        let tmax = default_tau_max(j);
        for k in 0..=16 {
            let p = TwistProtocol::at(tmax * k as f64 / 16.0).unwrap();
            let a = make_sss(j, &p, &dense).unwrap();
            let b = make_sss(j, &p, &krylov).unwrap();
            worst = worst.max(a.max_abs_diff(&b));
        }
    }
    let mut norm_err: f64 = 0.0;
    let mut overlap_err: f64 = 0.0;
    let mut odd: f64 = 0.0;
    for jv in [50.0, 200.0] {
        let j = spin(jv);
        let g = tact_generator(j, 1.0, 0.0);
        let u = make_css(j, CoherentSpinParams::new(0.4, 1.0).unwrap());
        let v = make_css(j, CoherentSpinParams::new(2.0, 1.3).unwrap());
        let before = u.inner(&v).unwrap();
        let tmax = default_tau_max(j);
        for k in 1..=8 {
            let tau = tmax * k as f64 / 8.0;
            let top = evolve(&SpinState::highest(j), &g, tau, &krylov).unwrap();
            let n: f64 = top.amplitudes().iter().map(|z| z.norm_sqr()).sum();
            norm_err = norm_err.max((n - 1.0).abs());
            for (i, a) in top.amplitudes().iter().enumerate() {
                if i % 2 == 1 {
                    odd = odd.max(a.norm());
                }
            }
            let uu = evolve(&u, &g, tau, &krylov).unwrap();
            let vv = evolve(&v, &g, tau, &krylov).unwrap();
            overlap_err = overlap_err.max((uu.inner(&vv).unwrap() - before).norm());
        }
    }
    let ok = worst < 1e-9 && norm_err < 1e-10 && overlap_err < 1e-9 && odd == 0.0;
    check(
        ok,
        format!(
            "Krylov vs dense at J <= 10: {worst:.1e} (tol 1e-9); J in {{50,200}}: norm {norm_err:.1e}, overlap drift {overlap_err:.1e}, odd-parity leakage {odd:.1e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let j = spin(50.0);
    let tau = scan(50.0, Metric::FidTfs).tau_star;
    let s = make_sss(j, &TwistProtocol::at(tau).unwrap(), &cfg()).unwrap();
    let g = qpd(&s, 72, 37).unwrap();
    let (i, l) = g.nearest(PI, FRAC_PI_2);
    let centre = g.value(i, l);
    let (_, up) = g.nearest(PI, FRAC_PI_2 - FRAC_PI_4);
    let (_, down) = g.nearest(PI, FRAC_PI_2 + FRAC_PI_4);
    let rim = g.value(i, up).min(g.value(i, down));
    let local_min = centre < g.value(i, l - 1) && centre < g.value(i, l + 1);
    let p = prob_distribution(&s);
    let m0 = j.index_of(0.0).unwrap();
    let (pm, p0, pp) = (p[m0 - 2], p[m0], p[m0 + 2]);
    let ok = local_min && centre < rim && p0 < pm && p0 < pp;
    check(
        ok,
        format!(
            "tau_TFS = {tau:.5}: Q(pi, pi/2) = {centre:.2e} vs Q(pi, pi/2 -+ pi/4) >= {rim:.3e}; P(0) = {p0:.5} vs P(+-2) = {pp:.5}, {pm:.5}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let js = [20.0, 30.0, 50.0, 70.0, 100.0, 150.0, 200.0, 300.0, 400.0];
    let truths = [
        (FitFamily::SqPowerOffset, vec![0.0298, 0.621, 0.995]),
        (FitFamily::ShiftedPower, vec![0.799, 0.453, 1.00]),
        (FitFamily::LogOverLinear, vec![25.2, 3.93]),
    ];
    let mut worst_param: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for (family, params) in &truths {
        let truth = FitModel::new(*family, params.clone()).unwrap();
        let ys: Vec<f64> = js.iter().map(|&j| truth.evaluate(j).unwrap()).collect();
        let f = fit(*family, &js, &ys, None).unwrap();
        for (got, want) in f.model.params.iter().zip(params) {
            worst_param = worst_param.max(rel(*got, *want));
        }
        for &j in &js {
            let g = truth.gradient(j).unwrap();
            for k in 0..params.len() {
                let fd = |h: f64| {
                    let shifted = |d: f64| {
                        let mut p = params.clone();
                        p[k] += d;
                        FitModel::new(*family, p).unwrap().evaluate(j).unwrap()
                    };
                    (shifted(h) - shifted(-h)) / (2.0 * h)
                };
                let h = 1e-3 * params[k].abs();
                let richardson = (4.0 * fd(h / 2.0) - fd(h)) / 3.0;
                worst_grad = worst_grad.max((g[k] - richardson).abs() / g[k].abs().max(1e-12));
            }
        }
    }
    check(
        worst_param < 1e-6 && worst_grad < 1e-6,
        format!("auto-init recovery: max relative parameter error {worst_param:.1e}; Jacobian vs finite differences {worst_grad:.1e} (tol 1e-6)"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4a", criterion_4a),
        ("4b", criterion_4b),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == name) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{secs:.1} s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
