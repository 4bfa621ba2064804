//! Acceptance checks. Runs without the libtest harness so every line is
//! printed; exits nonzero if any criterion fails.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use hybrid_eit::model::{preset, to_mhz, PresetId, SystemParams};
use hybrid_eit::oracle::compare_closed_form;
use hybrid_eit::response::{default_grid, spectrum_with, BFactor, ClosedForm, Execution, SpectrumOptions};
use hybrid_eit::scenarios::{
    default_power_grid, delay_vs_power, detect_windows, run_preset, spectrum_csv_bytes, EvalPoint, WindowReport,
};
use hybrid_eit::steady::{solve_steady, steady_residual};
use hybrid_eit::timedomain::{pump_only_relaxation, verify_linearization, TRANSIENT_FACTOR};

const ORACLE_TOL: f64 = 1e-9;
const ORACLE_RUNTIME_S: f64 = 2.0;
const NEGATIVE_CONTROL_MIN_DEV: f64 = 1e-3;
const LINEARIZATION_TOL: f64 = 1e-2;
const HALVING_TOL: f64 = 5e-3;
const SIDE_MINIMUM_TOL: f64 = 0.05;
const EPS_OUT_TOL: f64 = 1e-12;
const LORENTZ_FWHM_TOL: f64 = 1e-2;
const CRITICAL_TRANSMISSION_MAX: f64 = 1e-20;
const BARE_DELAY_TOL: f64 = 1e-3;
const DELAY_BAND_S: (f64, f64) = (10e-6, 100e-6);
const ESTIMATOR_TOL: f64 = 1e-3;
const STEADY_RESIDUAL_MAX: f64 = 1e-10;
const RELAXATION_MAX: f64 = 1e-6;

const SPECTRUM_PRESETS: [PresetId; 7] = [
    PresetId::Fig2a,
    PresetId::Fig2c,
    PresetId::Fig2e,
    PresetId::Fig3a,
    PresetId::Fig3b,
    PresetId::Fig3c,
    PresetId::Fig3d,
];

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Failures(Vec<String>);

impl Failures {
    fn check(&mut self, ok: bool, msg: String) -> bool {
        if !ok {
            self.0.push(msg);
        }
        ok
    }

    fn finish(self, summary: String) -> Outcome {
        if self.0.is_empty() {
            Ok((true, summary))
        } else {
            Ok((false, format!("{summary}; failed: {}", self.0.join("; "))))
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn closed_form_vs_oracle() -> Outcome {
    let mut f = Failures(Vec::new());
    let start = Instant::now();
    let mut worst = 0.0f64;
    for id in SPECTRUM_PRESETS {
        let p = preset(id);
        let r = compare_closed_form(&p, &default_grid(&p), BFactor::Derived).map_err(err)?;
        worst = worst.max(r.max_dev);
        f.check(r.max_dev <= ORACLE_TOL, format!("{id} deviation {:.2e}", r.max_dev));
    }
    let elapsed = start.elapsed().as_secs_f64();
    f.check(elapsed < ORACLE_RUNTIME_S, format!("runtime {elapsed:.2} s"));

    // the printed lower-branch factor must disagree near the control-split lines
    let p = preset(PresetId::Fig2a);
    let near: Vec<f64> = [-1.0, 1.0]
        .iter()
        .flat_map(|s| (-5..=5).map(move |k| p.omega_m + s * p.g2 + k as f64 * 1e-3 * p.g2))
        .collect();
    let control = compare_closed_form(&p, &near, BFactor::Printed).map_err(err)?;
    f.check(
        control.max_dev > NEGATIVE_CONTROL_MIN_DEV,
        format!("printed factor deviates only {:.2e}", control.max_dev),
    );
    f.finish(format!(
        "max deviation {worst:.2e} <= {ORACLE_TOL:e} in {elapsed:.3} s; printed factor deviates {:.2e}",
        control.max_dev
    ))
}

fn linearization() -> Outcome {
    let mut f = Failures(Vec::new());
    let p = preset(PresetId::Fig2a);
    let eps = 1e-3 * p.omega_l;
    let (mut worst_dev, mut worst_spread) = (0.0f64, 0.0f64);
    for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let r = verify_linearization(&p, p.omega_m + x * p.g2, &[eps, 0.5 * eps]).map_err(err)?;
        let dev = r.entries[0].closed_form_dev;
        worst_dev = worst_dev.max(dev);
        worst_spread = worst_spread.max(r.max_spread);
        f.check(
            dev < LINEARIZATION_TOL,
            format!("delta_bar {x:+} g2 deviation {dev:.2e}"),
        );
        f.check(
            r.max_spread < HALVING_TOL,
            format!("delta_bar {x:+} g2 halving spread {:.2e}", r.max_spread),
        );
    }
    f.finish(format!(
        "c_-/eps_p within {worst_dev:.2e} of closed form (< 1%), halving changes it by {worst_spread:.2e} (< 0.5%)"
    ))
}

fn windows(id: PresetId) -> Result<WindowReport, String> {
    let p = preset(id);
    let s = spectrum_with(&p, &default_grid(&p), SpectrumOptions::default()).map_err(err)?;
    detect_windows(&s, 0.1).map_err(err)
}

fn window_structure() -> Outcome {
    let mut f = Failures(Vec::new());
    let expected = [3, 3, 3, 3, 2, 1, 0];
    let mut counts = Vec::new();
    let mut reports = Vec::new();
    for (id, want) in SPECTRUM_PRESETS.into_iter().zip(expected) {
        let r = windows(id)?;
        counts.push(r.count);
        f.check(
            r.count == want,
            format!("{id} has {} windows, expected {want}", r.count),
        );
        reports.push(r);
    }

    let g2 = preset(PresetId::Fig2a).g2;
    let fig2a = &reports[0];
    if f.check(fig2a.count == 3, "fig2a side minima undefined".into()) {
        let (l, r) = (fig2a.minima[0].delta_bar, fig2a.minima[2].delta_bar);
        f.check(
            ((l + g2) / g2).abs() <= SIDE_MINIMUM_TOL && ((r - g2) / g2).abs() <= SIDE_MINIMUM_TOL,
            format!("fig2a side minima at {:.3}/{:.3} MHz", to_mhz(l), to_mhz(r)),
        );
    }

    let widths: Vec<Option<([f64; 2], [f64; 2])>> = reports[..3].iter().map(|r| r.central_and_side_fwhm()).collect();
    match (widths[0], widths[1], widths[2]) {
        (Some((ca, sa)), Some((cc, sc)), Some((ce, se))) => {
            let lt = |x: [f64; 2], y: [f64; 2]| x[0] < y[0] && x[1] < y[1];
            let mhz2 = |w: [f64; 2]| format!("{:.2}/{:.2}", to_mhz(w[0]), to_mhz(w[1]));
            f.check(
                lt(cc, ca),
                format!("fig2c central FWHM {} MHz not below fig2a {}", mhz2(cc), mhz2(ca)),
            );
            f.check(
                lt(sa, sc),
                format!("fig2c side FWHM {} MHz not above fig2a {}", mhz2(sc), mhz2(sa)),
            );
            f.check(
                lt(ca, ce),
                format!("fig2e central FWHM {} MHz not above fig2a {}", mhz2(ce), mhz2(ca)),
            );
            f.check(
                lt(se, sa),
                format!("fig2e side FWHM {} MHz not below fig2a {}", mhz2(se), mhz2(sa)),
            );
        }
        _ => {
            f.check(false, "FWHM orderings need three windows in fig2a/fig2c/fig2e".into());
        }
    }
    f.finish(format!("window counts {counts:?} (expected {expected:?})"))
}

fn bare_cavity() -> SystemParams {
    let mut p = preset(PresetId::Fig3d);
    p.g = 0.0;
    p.g1 = 0.0;
    p.g2 = 0.0;
    p
}

/// δ where μ falls to `level`, bisected between a point above and one below it.
fn bisect(model: &ClosedForm, level: f64, mut inside: f64, mut outside: f64) -> Result<f64, String> {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if model.response(mid).map_err(err)?.mu > level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (inside + outside))
}

fn bare_cavity_values() -> Outcome {
    let mut f = Failures(Vec::new());
    let p = bare_cavity();
    let state = solve_steady(&p).map_err(err)?;
    let model = ClosedForm::new(&p, &state);

    let eps_out = model.epsilon_out(p.delta_c).map_err(err)?;
    let e = (eps_out - 2.0).norm();
    f.check(e <= EPS_OUT_TOL, format!("eps_out off by {e:.2e}"));

    let peak = model.response(p.delta_c).map_err(err)?.mu;
    let hi = bisect(&model, 0.5 * peak, p.delta_c, p.delta_c + 20.0 * p.kappa)?;
    let lo = bisect(&model, 0.5 * peak, p.delta_c, p.delta_c - 20.0 * p.kappa)?;
    let fwhm_err = ((hi - lo) / (2.0 * p.kappa) - 1.0).abs();
    f.check(fwhm_err <= LORENTZ_FWHM_TOL, format!("FWHM off by {fwhm_err:.2e}"));

    let t = model.transmission(p.delta_c).map_err(err)?.norm_sqr();
    f.check(t <= CRITICAL_TRANSMISSION_MAX, format!("|t_p|^2 = {t:.2e}"));

    let p1 = p.with_eta(1.0);
    let tau = ClosedForm::new(&p1, &state).group_delay(p1.delta_c).map_err(err)?.tau_g;
    let tau_err = (tau * p.kappa / 2.0 - 1.0).abs();
    f.check(tau_err <= BARE_DELAY_TOL, format!("tau_g off by {tau_err:.2e}"));

    f.finish(format!(
        "eps_out err {e:.1e}, FWHM/2kappa err {fwhm_err:.1e}, |t_p|^2 {t:.1e}, tau_g kappa/2 err {tau_err:.1e}"
    ))
}

fn group_delay() -> Outcome {
    let mut f = Failures(Vec::new());
    let p = preset(PresetId::Fig4);
    let curve = delay_vs_power(&p, &default_power_grid(&p).map_err(err)?, EvalPoint::LineCenter).map_err(err)?;
    let in_band = curve
        .points
        .iter()
        .filter(|pt| (DELAY_BAND_S.0..=DELAY_BAND_S.1).contains(&pt.tau_g.abs()))
        .count();
    f.check(in_band > 0, "no fig4 power gives |tau_g| in [10, 100] us".into());
    let peak = curve.points.iter().map(|pt| pt.tau_g).fold(f64::NAN, f64::max);
    let disagreement = curve.max_estimator_disagreement();
    f.check(
        disagreement <= ESTIMATOR_TOL,
        format!("estimators disagree by {disagreement:.2e}"),
    );

    let q = preset(PresetId::Fig2a);
    let s = spectrum_with(&q, &default_grid(&q), SpectrumOptions::default()).map_err(err)?;
    let pos = s.tau_g.iter().any(|&t| t > 0.0);
    let neg = s.tau_g.iter().any(|&t| t < 0.0);
    f.check(pos && neg, "fig2a tau_g does not change sign".into());
    f.finish(format!(
        "fig4: {in_band}/{} powers in band, max tau_g {:.2} us, estimators agree to {disagreement:.1e}; fig2a sign change {}",
        curve.points.len(),
        peak * 1e6,
        pos && neg
    ))
}

fn steady_integrity() -> Outcome {
    let mut f = Failures(Vec::new());
    let (mut worst_res, mut worst_rel) = (0.0f64, 0.0f64);
    for id in PresetId::ALL {
        let p = preset(id);
        let s = solve_steady(&p).map_err(err)?;
        let r = steady_residual(&p, &s);
        worst_res = worst_res.max(r);
        f.check(r < STEADY_RESIDUAL_MAX, format!("{id} residual {r:.2e}"));
        let rel = pump_only_relaxation(&p, TRANSIENT_FACTOR).map_err(err)?;
        worst_rel = worst_rel.max(rel);
        f.check(rel < RELAXATION_MAX, format!("{id} relaxation {rel:.2e}"));
    }
    f.finish(format!(
        "max residual {worst_res:.1e} (< 1e-10), max relaxation distance {worst_rel:.1e} (< 1e-6)"
    ))
}

fn determinism() -> Outcome {
    let mut f = Failures(Vec::new());
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    for id in [PresetId::Fig2a, PresetId::Fig3b] {
        let ma = run_preset(id, a.path()).map_err(err)?;
        let mb = run_preset(id, b.path()).map_err(err)?;
        for (x, y) in ma.files.iter().zip(&mb.files) {
            let same = fs::read(x).map_err(err)? == fs::read(y).map_err(err)?;
            f.check(same, format!("{} differs between runs", x.display()));
        }
    }
    for id in SPECTRUM_PRESETS {
        let p = preset(id);
        let grid = default_grid(&p);
        let run = |execution| {
            spectrum_with(
                &p,
                &grid,
                SpectrumOptions {
                    execution,
                    b_factor: BFactor::Derived,
                },
            )
            .map(|s| spectrum_csv_bytes(&s, 15))
            .map_err(err)
        };
        f.check(
            run(Execution::Parallel)? == run(Execution::Serial)?,
            format!("{id} parallel and serial CSV differ"),
        );
    }
    f.finish("repeated runs and parallel/serial sweeps give identical bytes".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("closed form matches direct solve", closed_form_vs_oracle),
        ("linearisation matches time-domain integration", linearization),
        ("window structure", window_structure),
        ("bare-cavity exact values", bare_cavity_values),
        ("group delay", group_delay),
        ("steady-state integrity", steady_integrity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (ok, msg) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {msg}",
            if ok { "PASS" } else { "FAIL" },
            k + 1
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
