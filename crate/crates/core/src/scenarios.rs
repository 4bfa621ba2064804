//! Figure-level artifacts: window detection, delay-vs-power curves, preset runs
//! and the validation summary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mhz, power_to_rabi, preset, rabi_to_power, PresetId, SystemParams};
use crate::oracle::compare_closed_form;
use crate::response::{default_grid, spectrum_with, BFactor, ClosedForm, Execution, Spectrum, SpectrumOptions};
use crate::steady::{solve_steady, steady_residual};
use crate::timedomain::{pump_only_relaxation, verify_linearization, TRANSIENT_FACTOR};

pub const DEFAULT_PROMINENCE: f64 = 0.1;
/// Environment variable overriding the significant digits written to CSV.
pub const CSV_DIGITS_ENV: &str = "EIT_CSV_DIGITS";
pub const DEFAULT_CSV_DIGITS: usize = 15;
pub const MIN_CSV_DIGITS: usize = 12;
pub const SPECTRUM_COLUMNS: &str = "delta_bar_over_omega_m,mu,nu,re_t,im_t,T_power,phase_unwrapped,tau_g_s";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMinimum {
    /// δ̄ [rad/s].
    pub delta_bar: f64,
    pub mu: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionPeak {
    /// δ̄ [rad/s].
    pub delta_bar: f64,
    pub mu: f64,
    /// Full width at half prominence [rad/s].
    pub fwhm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub count: usize,
    pub minima: Vec<WindowMinimum>,
    /// Absorption maxima around the windows, left to right.
    pub peaks: Vec<AbsorptionPeak>,
    pub prominence_fraction: f64,
    /// Absolute prominence threshold.
    pub threshold: f64,
}

impl WindowReport {
    /// FWHMs of the inner and outer peak pairs when there are three windows.
    pub fn central_and_side_fwhm(&self) -> Option<([f64; 2], [f64; 2])> {
        if self.count != 3 || self.peaks.len() != 4 {
            return None;
        }
        let w: Vec<f64> = self.peaks.iter().map(|p| p.fwhm).collect();
        Some(([w[1], w[2]], [w[0], w[3]]))
    }
}

/// Topographic prominence of the maximum at `i`, with the indices of the
/// lowest points on each side before higher ground.
fn peak_prominence(x: &[f64], i: usize) -> (f64, usize, usize) {
    let mut left_min = x[i];
    let mut left_base = i;
    let mut j = i;
    loop {
        if x[j] > x[i] {
            break;
        }
        if x[j] < left_min {
            left_min = x[j];
            left_base = j;
        }
        if j == 0 {
            break;
        }
        j -= 1;
    }
    let mut right_min = x[i];
    let mut right_base = i;
    for (k, &v) in x.iter().enumerate().skip(i) {
        if v > x[i] {
            break;
        }
        if v < right_min {
            right_min = v;
            right_base = k;
        }
    }
    (x[i] - left_min.max(right_min), left_base, right_base)
}

/// Width of the maximum at `i` at half its prominence, in index units.
fn width_at_half(x: &[f64], i: usize) -> f64 {
    let (prom, left_base, right_base) = peak_prominence(x, i);
    let level = x[i] - 0.5 * prom;
    let mut l = i;
    while l > left_base && level < x[l] {
        l -= 1;
    }
    let mut left = l as f64;
    if x[l] < level {
        left += (level - x[l]) / (x[l + 1] - x[l]);
    }
    let mut r = i;
    while r < right_base && level < x[r] {
        r += 1;
    }
    let mut right = r as f64;
    if x[r] < level {
        right -= (level - x[r]) / (x[r - 1] - x[r]);
    }
    right - left
}

/// Interior local maxima; a plateau counts once, at its middle.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < x.len() {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < x.len() && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < x.len() && x[j + 1] < x[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi).fold(lo, |best, k| if x[k] > x[best] { k } else { best })
}

/// Local minima of `mu` whose prominence is at least
/// `prominence_fraction·(max μ − min μ)`, with the absorption peaks that bound them.
pub fn detect_windows_in(delta_bar: &[f64], mu: &[f64], prominence_fraction: f64) -> Result<WindowReport> {
    if mu.is_empty() || mu.len() != delta_bar.len() {
        return Err(Error::InvalidInput("spectrum is empty or misaligned".into()));
    }
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("absorption contains non-finite values".into()));
    }
    let hi = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = prominence_fraction * (hi - lo);
    let mut report = WindowReport {
        count: 0,
        minima: Vec::new(),
        peaks: Vec::new(),
        prominence_fraction,
        threshold,
    };
    if hi == lo {
        return Ok(report);
    }

    let neg: Vec<f64> = mu.iter().map(|v| -v).collect();
    let mins: Vec<usize> = local_maxima(&neg)
        .into_iter()
        .filter(|&i| peak_prominence(&neg, i).0 >= threshold)
        .collect();
    for &i in &mins {
        report.minima.push(WindowMinimum {
            delta_bar: delta_bar[i],
            mu: mu[i],
            prominence: peak_prominence(&neg, i).0,
        });
    }
    report.count = mins.len();

    // grids are uniform, so index widths scale by one spacing
    let step = if delta_bar.len() > 1 {
        (delta_bar[delta_bar.len() - 1] - delta_bar[0]) / (delta_bar.len() - 1) as f64
    } else {
        0.0
    };
    let mut bounds = vec![0];
    bounds.extend(mins.iter().copied());
    bounds.push(mu.len());
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let k = argmax(mu, a, b);
        let fwhm = width_at_half(mu, k) * step;
        report.peaks.push(AbsorptionPeak {
            delta_bar: delta_bar[k],
            mu: mu[k],
            fwhm,
        });
    }
    Ok(report)
}

pub fn detect_windows(spectrum: &Spectrum, prominence_fraction: f64) -> Result<WindowReport> {
    detect_windows_in(&spectrum.delta_bar(), &spectrum.mu(), prominence_fraction)
}

/// Where the group delay is read off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "delta_bar")]
pub enum EvalPoint {
    /// δ = ω_m.
    LineCenter,
    /// δ̄ = ω_m, i.e. δ = 2ω_m.
    PaperLiteral,
    /// Explicit δ̄ [rad/s].
    DeltaBar(f64),
}

impl EvalPoint {
    pub fn delta(&self, omega_m: f64) -> f64 {
        match *self {
            EvalPoint::LineCenter => omega_m,
            EvalPoint::PaperLiteral => 2.0 * omega_m,
            EvalPoint::DeltaBar(x) => omega_m + x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayPoint {
    /// Pump power [W].
    pub power: f64,
    /// Ω_l [rad/s].
    pub omega_l: f64,
    /// Phase central difference [s].
    pub tau_g: f64,
    /// Im(t_p'/t_p) from a stencil on t_p [s].
    pub tau_g_log_derivative: f64,
    pub unconverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCurve {
    pub eval_point: EvalPoint,
    /// δ [rad/s].
    pub eval_delta: f64,
    pub points: Vec<DelayPoint>,
}

impl DelayCurve {
    pub fn powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.power).collect()
    }

    pub fn tau_g(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau_g).collect()
    }

    /// Largest relative disagreement between the two delay estimators.
    pub fn max_estimator_disagreement(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p.tau_g - p.tau_g_log_derivative).abs() / p.tau_g.abs().max(p.tau_g_log_derivative.abs()))
            .fold(0.0, f64::max)
    }
}

/// 20 log-spaced pump powers giving Ω_l/2π from 2 to 40 MHz.
pub fn default_power_grid(params: &SystemParams) -> Result<Vec<f64>> {
    let n = 20;
    let (lo, hi) = (2.0f64.ln(), 40.0f64.ln());
    (0..n)
        .map(|i| {
            let f = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            rabi_to_power(mhz(f), params.kappa, params.lambda_l)
        })
        .collect()
}

/// τ_g at the evaluation point for each pump power, re-solving the steady state
/// each time. The probe amplitude keeps its ratio to Ω_l.
pub fn delay_vs_power(params: &SystemParams, powers: &[f64], eval_point: EvalPoint) -> Result<DelayCurve> {
    let eval_delta = eval_point.delta(params.omega_m);
    let probe_ratio = if params.omega_l != 0.0 {
        params.eps_p / params.omega_l
    } else {
        0.0
    };
    let points = powers
        .par_iter()
        .map(|&power| {
            if !(power > 0.0) || !power.is_finite() {
                return Err(Error::InvalidInput(format!("pump power must be positive, got {power}")));
            }
            let omega_l = power_to_rabi(power, params.kappa, params.lambda_l)?;
            let mut p = params.with_omega_l(omega_l);
            p.eps_p = probe_ratio * omega_l;
            let state = solve_steady(&p)?;
            let model = ClosedForm::new(&p, &state);
            let gd = model.group_delay(eval_delta)?;
            Ok(DelayPoint {
                power,
                omega_l,
                tau_g: gd.tau_g,
                tau_g_log_derivative: model.group_delay_log_derivative(eval_delta)?,
                unconverged: gd.unconverged,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DelayCurve {
        eval_point,
        eval_delta,
        points,
    })
}

/// Significant digits for CSV output, from [`CSV_DIGITS_ENV`] if set.
pub fn csv_digits() -> Result<usize> {
    match std::env::var(CSV_DIGITS_ENV) {
        Ok(v) => {
            let d: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{CSV_DIGITS_ENV}={v:?} is not an integer")))?;
            if !(MIN_CSV_DIGITS..=17).contains(&d) {
                return Err(Error::Config(format!("{CSV_DIGITS_ENV} must be in 12..=17, got {d}")));
            }
            Ok(d)
        }
        Err(_) => Ok(DEFAULT_CSV_DIGITS),
    }
}

fn sci(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits - 1, x)
}

pub fn write_spectrum_csv<W: Write>(spectrum: &Spectrum, mut out: W, digits: usize) -> std::io::Result<()> {
    writeln!(out, "{SPECTRUM_COLUMNS}")?;
    for (k, p) in spectrum.points.iter().enumerate() {
        let fields = [
            p.delta_bar / spectrum.omega_m,
            p.mu,
            p.nu,
            p.t_p.re,
            p.t_p.im,
            p.t_p.norm_sqr(),
            spectrum.unwrapped_phase[k],
            spectrum.tau_g[k],
        ];
        let row: Vec<String> = fields.iter().map(|&x| sci(x, digits)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn spectrum_csv_bytes(spectrum: &Spectrum, digits: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    write_spectrum_csv(spectrum, &mut buf, digits).expect("writing to a Vec cannot fail");
    buf
}

pub fn write_delay_csv<W: Write>(curve: &DelayCurve, mut out: W, digits: usize) -> std::io::Result<()> {
    writeln!(
        out,
        "power_w,omega_l_over_2pi_hz,tau_g_s,tau_g_log_derivative_s,unconverged"
    )?;
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            sci(p.power, digits),
            sci(p.omega_l / std::f64::consts::TAU, digits),
            sci(p.tau_g, digits),
            sci(p.tau_g_log_derivative, digits),
            p.unconverged
        )?;
    }
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub preset: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    preset: &'a str,
    description: &'a str,
    code_version: &'a str,
    conventions: Conventions,
    params: crate::model::ParamsConfig,
    grid: GridInfo,
    steady_state: SteadySummary,
    windows: usize,
}

#[derive(Serialize)]
struct Conventions {
    eta: f64,
    lambda_l_m: f64,
    b_factor: BFactor,
    frequency_unit: &'static str,
    mechanics: &'static str,
}

#[derive(Serialize)]
struct GridInfo {
    points: usize,
    delta_bar_over_omega_m_min: f64,
    delta_bar_over_omega_m_max: f64,
}

#[derive(Serialize)]
struct SteadySummary {
    n_cav: f64,
    c_s: Complex64,
    a_s: Complex64,
    b_s: Complex64,
    q_s: f64,
    residual: f64,
}

/// Writes `<id>_spectrum.csv`, `<id>_windows.json` and `<id>_run.json` into
/// `output_dir`. Output depends only on the preset and the CSV precision.
pub fn run_preset(id: PresetId, output_dir: &Path) -> Result<Manifest> {
    let params = preset(id);
    let grid = default_grid(&params);
    let sweep = spectrum_with(&params, &grid, SpectrumOptions::default())?;
    let windows = detect_windows(&sweep, DEFAULT_PROMINENCE)?;
    let digits = csv_digits()?;

    fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;
    let name = id.as_str();
    let csv_path = output_dir.join(format!("{name}_spectrum.csv"));
    let win_path = output_dir.join(format!("{name}_windows.json"));
    let run_path = output_dir.join(format!("{name}_run.json"));

    write_file(&csv_path, &spectrum_csv_bytes(&sweep, digits))?;
    let mut win_json = serde_json::to_string_pretty(&windows)?;
    win_json.push('\n');
    write_file(&win_path, win_json.as_bytes())?;

    let s = &sweep.steady;
    let meta = RunMetadata {
        preset: name,
        description: id.description(),
        code_version: env!("CARGO_PKG_VERSION"),
        conventions: Conventions {
            eta: params.eta,
            lambda_l_m: params.lambda_l,
            b_factor: BFactor::Derived,
            frequency_unit: "params in MHz (f = omega/2pi); CSV detuning in units of omega_m",
            mechanics: "dimensionless Q, P",
        },
        params: params.to_config(),
        grid: GridInfo {
            points: grid.len(),
            delta_bar_over_omega_m_min: sweep.points.first().map_or(f64::NAN, |p| p.delta_bar / params.omega_m),
            delta_bar_over_omega_m_max: sweep.points.last().map_or(f64::NAN, |p| p.delta_bar / params.omega_m),
        },
        steady_state: SteadySummary {
            n_cav: s.n_cav,
            c_s: s.c_s,
            a_s: s.a_s,
            b_s: s.b_s,
            q_s: s.q_s,
            residual: steady_residual(&params, s),
        },
        windows: windows.count,
    };
    let mut run_json = serde_json::to_string_pretty(&meta)?;
    run_json.push('\n');
    write_file(&run_path, run_json.as_bytes())?;

    Ok(Manifest {
        preset: name.to_string(),
        files: vec![csv_path, win_path, run_path],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Closed form vs direct solve.
    pub tolerance: f64,
    pub b_factor: BFactor,
    /// Include the time-domain checks (a few seconds in release builds).
    pub time_domain: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            tolerance: 1e-9,
            b_factor: BFactor::Derived,
            time_domain: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub criteria: Vec<CriterionResult>,
}

impl ValidationSummary {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

struct Check {
    passed: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            passed: true,
            details: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details
            .push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    }

    fn finish(self, id: u32, name: &str) -> CriterionResult {
        CriterionResult {
            id,
            name: name.to_string(),
            passed: self.passed,
            details: self.details,
        }
    }
}

const SPECTRUM_PRESETS: [PresetId; 7] = [
    PresetId::Fig2a,
    PresetId::Fig2c,
    PresetId::Fig2e,
    PresetId::Fig3a,
    PresetId::Fig3b,
    PresetId::Fig3c,
    PresetId::Fig3d,
];

fn bare_cavity() -> SystemParams {
    let mut p = preset(PresetId::Fig3d);
    p.g = 0.0;
    p.g1 = 0.0;
    p.g2 = 0.0;
    p
}

fn criterion_oracle(opts: &ValidateOptions) -> Result<CriterionResult> {
    let mut c = Check::new();
    let start = Instant::now();
    for id in SPECTRUM_PRESETS {
        let p = preset(id);
        let r = compare_closed_form(&p, &default_grid(&p), opts.b_factor)?;
        c.record(
            r.max_dev <= opts.tolerance,
            format!(
                "{id}: max relative deviation {:.3e} (tolerance {:.1e})",
                r.max_dev, opts.tolerance
            ),
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.record(elapsed < 2.0, format!("runtime {elapsed:.3} s (< 2 s)"));
    Ok(c.finish(1, "closed form matches direct solve"))
}

fn criterion_linearization() -> Result<CriterionResult> {
    let mut c = Check::new();
    let p = preset(PresetId::Fig2a);
    for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let delta = p.omega_m + x * p.g2;
        let eps = 1e-3 * p.omega_l;
        let r = verify_linearization(&p, delta, &[eps, 0.5 * eps])?;
        let dev = r.entries[0].closed_form_dev;
        c.record(
            dev < 1e-2,
            format!("delta_bar = {x:+} g2: |c_-/eps_p - closed form| = {dev:.3e} (< 1e-2)"),
        );
        c.record(
            r.max_spread < 5e-3,
            format!(
                "delta_bar = {x:+} g2: halving eps_p changes ratio by {:.3e} (< 5e-3)",
                r.max_spread
            ),
        );
    }
    Ok(c.finish(2, "linearisation matches time-domain integration"))
}

/// Window counts, side-minimum locations and width orderings.
pub fn window_structure() -> Result<Vec<(PresetId, WindowReport)>> {
    SPECTRUM_PRESETS
        .par_iter()
        .map(|&id| {
            let p = preset(id);
            let s = spectrum_with(&p, &default_grid(&p), SpectrumOptions::default())?;
            Ok((id, detect_windows(&s, DEFAULT_PROMINENCE)?))
        })
        .collect()
}

fn side_minima_ok(report: &WindowReport, g2: f64) -> (bool, String) {
    if report.count != 3 {
        return (false, format!("expected 3 minima, found {}", report.count));
    }
    let left = report.minima[0].delta_bar;
    let right = report.minima[2].delta_bar;
    let ok = ((left + g2) / g2).abs() <= 0.05 && ((right - g2) / g2).abs() <= 0.05;
    (
        ok,
        format!(
            "side minima at {:.3} / {:.3} MHz vs +-{:.3} MHz (5%)",
            crate::model::to_mhz(left),
            crate::model::to_mhz(right),
            crate::model::to_mhz(g2)
        ),
    )
}

fn criterion_windows() -> Result<CriterionResult> {
    let mut c = Check::new();
    let reports = window_structure()?;
    let expected = [3, 3, 3, 3, 2, 1, 0];
    for ((id, r), want) in reports.iter().zip(expected) {
        c.record(r.count == want, format!("{id}: {} windows (expected {want})", r.count));
    }
    let find = |id: PresetId| &reports.iter().find(|(i, _)| *i == id).expect("preset evaluated").1;
    for id in [PresetId::Fig2a, PresetId::Fig2e] {
        let (ok, line) = side_minima_ok(find(id), preset(id).g2);
        c.record(ok, format!("{id}: {line}"));
    }
    let widths = |id| find(id).central_and_side_fwhm();
    match (
        widths(PresetId::Fig2a),
        widths(PresetId::Fig2c),
        widths(PresetId::Fig2e),
    ) {
        (Some((ca, sa)), Some((cc, sc)), Some((ce, se))) => {
            let lt = |x: [f64; 2], y: [f64; 2]| x[0] < y[0] && x[1] < y[1];
            let f = |w: [f64; 2]| {
                format!(
                    "{:.3}/{:.3} MHz",
                    crate::model::to_mhz(w[0]),
                    crate::model::to_mhz(w[1])
                )
            };
            c.record(lt(cc, ca), format!("central FWHM fig2c {} < fig2a {}", f(cc), f(ca)));
            c.record(lt(sa, sc), format!("side FWHM fig2c {} > fig2a {}", f(sc), f(sa)));
            c.record(lt(ca, ce), format!("central FWHM fig2e {} > fig2a {}", f(ce), f(ca)));
            c.record(lt(se, sa), format!("side FWHM fig2e {} < fig2a {}", f(se), f(sa)));
        }
        _ => c.record(
            false,
            "FWHM orderings need three windows in fig2a, fig2c and fig2e".into(),
        ),
    }
    Ok(c.finish(3, "window structure"))
}

fn criterion_bare_cavity() -> Result<CriterionResult> {
    let mut c = Check::new();
    let p = bare_cavity();
    let state = solve_steady(&p)?;
    let model = ClosedForm::new(&p, &state);
    let eps_out = model.epsilon_out(p.delta_c)?;
    let err = (eps_out - 2.0).norm();
    c.record(
        err <= 1e-12,
        format!("eps_out(delta = Delta_c) - 2 = {err:.3e} (<= 1e-12)"),
    );

    let grid = crate::response::detuning_grid(p.omega_m, -0.5, 0.5, 20001);
    let s = spectrum_with(&p, &grid, SpectrumOptions::default())?;
    let report = detect_windows(&s, DEFAULT_PROMINENCE)?;
    let fwhm = report.peaks.first().map_or(f64::NAN, |pk| pk.fwhm);
    let rel = (fwhm / (2.0 * p.kappa) - 1.0).abs();
    c.record(
        rel <= 1e-2,
        format!("Lorentzian FWHM / 2 kappa - 1 = {rel:.3e} (<= 1e-2)"),
    );

    let t = model.transmission(p.delta_c)?.norm_sqr();
    c.record(
        t <= 1e-20,
        format!("eta = 0.5 on-resonance |t_p|^2 = {t:.3e} (<= 1e-20)"),
    );

    let p1 = p.with_eta(1.0);
    let tau = ClosedForm::new(&p1, &state).group_delay(p1.delta_c)?.tau_g;
    let rel = (tau * p.kappa / 2.0 - 1.0).abs();
    c.record(
        rel <= 1e-3,
        format!("eta = 1 tau_g kappa / 2 - 1 = {rel:.3e} (<= 1e-3)"),
    );
    Ok(c.finish(4, "bare cavity"))
}

fn criterion_group_delay() -> Result<CriterionResult> {
    let mut c = Check::new();
    let p = preset(PresetId::Fig4);
    let curve = delay_vs_power(&p, &default_power_grid(&p)?, EvalPoint::LineCenter)?;
    let in_band = curve
        .points
        .iter()
        .filter(|pt| (10e-6..=100e-6).contains(&pt.tau_g.abs()))
        .count();
    let (lo, hi) = curve
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), pt| {
            (a.min(pt.tau_g), b.max(pt.tau_g))
        });
    c.record(
        in_band > 0,
        format!(
            "fig4: {in_band}/{} powers with |tau_g| in [10, 100] us; tau_g spans {:.3} .. {:.3} us",
            curve.points.len(),
            lo * 1e6,
            hi * 1e6
        ),
    );
    let sign = if lo > 0.0 {
        "positive (delay)"
    } else if hi < 0.0 {
        "negative (advance)"
    } else {
        "mixed"
    };
    c.details.push(format!("[info] fig4 tau_g sign: {sign}"));
    let dis = curve.max_estimator_disagreement();
    c.record(dis <= 1e-3, format!("fig4: estimator disagreement {dis:.3e} (<= 1e-3)"));

    let q = preset(PresetId::Fig2a);
    let s = spectrum_with(&q, &default_grid(&q), SpectrumOptions::default())?;
    let finite: Vec<f64> = s.tau_g.iter().copied().filter(|t| t.is_finite()).collect();
    let has_pos = finite.iter().any(|&t| t > 0.0);
    let has_neg = finite.iter().any(|&t| t < 0.0);
    let (mn, mx) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    c.record(
        has_pos && has_neg,
        format!("fig2a: tau_g ranges {:.3} .. {:.3} us", mn * 1e6, mx * 1e6),
    );
    Ok(c.finish(5, "group delay"))
}

fn criterion_steady(time_domain: bool) -> Result<CriterionResult> {
    let mut c = Check::new();
    for id in PresetId::ALL {
        let p = preset(id);
        let s = solve_steady(&p)?;
        let r = steady_residual(&p, &s);
        c.record(r < 1e-10, format!("{id}: steady residual {r:.3e} (< 1e-10)"));
    }
    if time_domain {
        let rel: Vec<(PresetId, f64)> = PresetId::ALL
            .par_iter()
            .map(|&id| Ok((id, pump_only_relaxation(&preset(id), TRANSIENT_FACTOR)?)))
            .collect::<Result<_>>()?;
        for (id, r) in rel {
            c.record(
                r < 1e-6,
                format!("{id}: pump-only relaxation distance {r:.3e} (< 1e-6)"),
            );
        }
    }
    Ok(c.finish(6, "steady state"))
}

fn criterion_determinism() -> Result<CriterionResult> {
    let mut c = Check::new();
    let p = preset(PresetId::Fig2a);
    let grid = default_grid(&p);
    let par = spectrum_with(
        &p,
        &grid,
        SpectrumOptions {
            execution: Execution::Parallel,
            ..Default::default()
        },
    )?;
    let ser = spectrum_with(
        &p,
        &grid,
        SpectrumOptions {
            execution: Execution::Serial,
            ..Default::default()
        },
    )?;
    let digits = csv_digits()?;
    let a = spectrum_csv_bytes(&par, digits);
    let b = spectrum_csv_bytes(&ser, digits);
    c.record(a == b, "parallel and serial CSV identical".into());
    let again = spectrum_csv_bytes(&spectrum_with(&p, &grid, SpectrumOptions::default())?, digits);
    c.record(a == again, "repeated CSV identical".into());
    Ok(c.finish(7, "determinism"))
}

/// Runs every acceptance check and reports measured values.
pub fn validate(opts: &ValidateOptions) -> Result<ValidationSummary> {
    let mut criteria = vec![criterion_oracle(opts)?];
    if opts.time_domain {
        criteria.push(criterion_linearization()?);
    }
    criteria.push(criterion_windows()?);
    criteria.push(criterion_bare_cavity()?);
    criteria.push(criterion_group_delay()?);
    criteria.push(criterion_steady(opts.time_domain)?);
    criteria.push(criterion_determinism()?);
    Ok(ValidationSummary { criteria })
}
