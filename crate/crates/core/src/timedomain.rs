//! Second oracle: integrate the full nonlinear mean-field equations with pump and
//! probe on, then demodulate the intracavity field at ±δ.
//!
//! Mechanics is dimensionless: Q̇ = ω_m P, Ṗ = −ω_m Q − γ_m P + g|c|², which is
//! Q̈ + γ_m Q̇ + ω_m² Q = g ω_m |c|².

use std::f64::consts::TAU;
use std::io::Write;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::response::ClosedForm;
use crate::steady::{solve_steady, SteadyState};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Steps per period of the fastest rotating-frame frequency.
pub const STEPS_PER_FAST_PERIOD: f64 = 64.0;
/// Transient length in units of the slowest decay time.
pub const TRANSIENT_FACTOR: f64 = 10.0;
pub const DEFAULT_BEAT_PERIODS: u32 = 200;
pub const MIN_BEAT_PERIODS: u32 = 50;
/// Demodulation windows whose halves drift by more than this are non-stationary.
pub const DRIFT_TOL: f64 = 1e-3;
/// Pairwise spread of c_-/ε_p above which the probe is reported as nonlinear.
pub const SPREAD_TOL: f64 = 5e-3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanField {
    pub q: f64,
    pub p: f64,
    pub c: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

impl Add for MeanField {
    type Output = MeanField;

    #[inline]
    fn add(self, o: MeanField) -> MeanField {
        MeanField {
            q: self.q + o.q,
            p: self.p + o.p,
            c: self.c + o.c,
            a: self.a + o.a,
            b: self.b + o.b,
        }
    }
}

impl Mul<f64> for MeanField {
    type Output = MeanField;

    #[inline]
    fn mul(self, k: f64) -> MeanField {
        MeanField {
            q: self.q * k,
            p: self.p * k,
            c: self.c * k,
            a: self.a * k,
            b: self.b * k,
        }
    }
}

impl MeanField {
    pub fn from_steady(state: &SteadyState) -> Self {
        MeanField {
            q: state.q_s,
            p: 0.0,
            c: state.c_s,
            a: state.a_s,
            b: state.b_s,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite() && self.c.is_finite() && self.a.is_finite() && self.b.is_finite()
    }

    /// Largest component magnitude.
    pub fn max_norm(&self) -> f64 {
        [self.q.abs(), self.p.abs(), self.c.norm(), self.a.norm(), self.b.norm()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &MeanField) -> f64 {
        (*self + *other * -1.0).max_norm()
    }
}

/// Right-hand side of the mean-field equations; `probe` is ε_p e^{−iδt}.
#[inline]
fn rhs(p: &SystemParams, x: &MeanField, probe: Complex64) -> MeanField {
    MeanField {
        q: p.omega_m * x.p,
        p: -p.omega_m * x.q - p.gamma_m * x.p + p.g * x.c.norm_sqr(),
        c: -Complex64::new(p.kappa, p.delta_c) * x.c + I * p.g * x.q * x.c - I * p.g1 * x.a + p.omega_l + probe,
        a: -Complex64::new(p.gamma_1, p.delta_1) * x.a - I * p.g1 * x.c - I * p.g2 * x.b,
        b: -Complex64::new(p.gamma_2, p.delta_2) * x.b - I * p.g2 * x.a,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    /// Probe detuning δ [rad/s].
    pub delta: f64,
    /// Probe amplitude [rad/s].
    pub eps_p: f64,
    /// Step [s].
    pub dt: f64,
    /// Settle time before demodulation [s].
    pub t_transient: f64,
    /// Demodulation window length in beat periods 2π/δ.
    pub n_beat_periods: u32,
    /// First recorded time [s].
    pub record_from: f64,
    /// Keep every `record_stride`-th step.
    pub record_stride: usize,
}

fn fastest_frequency(p: &SystemParams, delta: f64) -> f64 {
    [
        p.omega_m,
        p.delta_c.abs(),
        p.delta_1.abs(),
        p.delta_2.abs(),
        delta.abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn slowest_rate(p: &SystemParams) -> f64 {
    [p.gamma_m, p.gamma_1, p.gamma_2, p.kappa]
        .into_iter()
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

impl IntegrationConfig {
    /// Defaults: dt ≈ (2π/ω_fast)/64 chosen so a beat period 2π/δ is a whole number
    /// of steps, t_transient = 10/min(γ_m, γ_1, γ_2, κ), 200 beat periods.
    pub fn new(params: &SystemParams, delta: f64, eps_p: f64) -> Result<Self> {
        Self::with_transient_factor(params, delta, eps_p, TRANSIENT_FACTOR)
    }

    pub fn with_transient_factor(params: &SystemParams, delta: f64, eps_p: f64, factor: f64) -> Result<Self> {
        params.validate()?;
        if !delta.is_finite() || !eps_p.is_finite() || eps_p < 0.0 {
            return Err(Error::Config(format!("bad probe delta = {delta}, eps_p = {eps_p}")));
        }
        let fast = fastest_frequency(params, delta);
        let max_dt = TAU / fast / STEPS_PER_FAST_PERIOD;
        let dt = if delta != 0.0 {
            let beat = TAU / delta.abs();
            beat / (beat / max_dt).ceil()
        } else {
            max_dt
        };
        let t_transient = ((factor / slowest_rate(params)) / dt).ceil() * dt;
        let cfg = IntegrationConfig {
            delta,
            eps_p,
            dt,
            t_transient,
            n_beat_periods: DEFAULT_BEAT_PERIODS,
            record_from: t_transient,
            record_stride: 1,
        };
        cfg.validate(params)?;
        Ok(cfg)
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        let fast = fastest_frequency(params, self.delta);
        if !(self.dt > 0.0) || self.dt > TAU / fast / 40.0 {
            return Err(Error::Config(format!(
                "dt = {:e} s exceeds (2pi/omega_fast)/40 = {:e} s",
                self.dt,
                TAU / fast / 40.0
            )));
        }
        let min_transient = 8.0 / slowest_rate(params);
        if self.t_transient < min_transient * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "t_transient = {:e} s below 8/min(rate) = {:e} s",
                self.t_transient, min_transient
            )));
        }
        if self.n_beat_periods < MIN_BEAT_PERIODS {
            return Err(Error::Config(format!(
                "n_beat_periods = {} below {}",
                self.n_beat_periods, MIN_BEAT_PERIODS
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn transient_steps(&self) -> usize {
        (self.t_transient / self.dt).round() as usize
    }

    /// Steps spanning the demodulation window (zero when δ = 0).
    pub fn window_steps(&self) -> usize {
        if self.delta == 0.0 {
            return 0;
        }
        let per_beat = (TAU / self.delta.abs() / self.dt).round() as usize;
        per_beat * self.n_beat_periods as usize
    }

    pub fn total_steps(&self) -> usize {
        self.transient_steps() + self.window_steps()
    }

    pub fn window_length(&self) -> f64 {
        self.window_steps() as f64 * self.dt
    }
}

/// Uniformly sampled trajectory starting at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<MeanField>,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn last(&self) -> Option<&MeanField> {
        self.samples.last()
    }

    /// CSV with columns t, Q, P, Re c, Im c, Re a, Im a, Re b, Im b at 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,Q,P,re_c,im_c,re_a,im_a,re_b,im_b")?;
        for (k, x) in self.samples.iter().enumerate() {
            writeln!(
                out,
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                self.time(k),
                x.q,
                x.p,
                x.c.re,
                x.c.im,
                x.a.re,
                x.a.im,
                x.b.re,
                x.b.im
            )?;
        }
        Ok(())
    }
}

/// Fixed-step classical RK4 from zero initial conditions, run for
/// `t_transient` plus the demodulation window.
pub fn integrate(params: &SystemParams, cfg: &IntegrationConfig) -> Result<Trajectory> {
    integrate_steps(params, cfg, cfg.total_steps())
}

/// Like [`integrate`] but stops after `steps` steps.
pub fn integrate_steps(params: &SystemParams, cfg: &IntegrationConfig, steps: usize) -> Result<Trajectory> {
    cfg.validate(params)?;
    let dt = cfg.dt;
    let drive = params.omega_l.abs() + cfg.eps_p.abs();
    let bound = 4.0 * drive * drive / (params.kappa * params.kappa);
    let first = (cfg.record_from / dt).round().max(0.0) as usize;
    let stride = cfg.record_stride;
    let probe_at = |t: f64| cfg.eps_p * Complex64::from_polar(1.0, -cfg.delta * t);

    let mut samples = Vec::with_capacity(steps.saturating_sub(first) / stride + 1);
    let mut x = MeanField::default();
    let mut probe_now = probe_at(0.0);
    if first == 0 {
        samples.push(x);
    }
    for k in 0..steps {
        let t = k as f64 * dt;
        let probe_mid = probe_at(t + 0.5 * dt);
        let probe_next = probe_at((k + 1) as f64 * dt);
        let k1 = rhs(params, &x, probe_now);
        let k2 = rhs(params, &(x + k1 * (0.5 * dt)), probe_mid);
        let k3 = rhs(params, &(x + k2 * (0.5 * dt)), probe_mid);
        let k4 = rhs(params, &(x + k3 * dt), probe_next);
        x = x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
        probe_now = probe_next;

        let step = k + 1;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                t: step as f64 * dt,
                step,
            });
        }
        let n = x.c.norm_sqr();
        if n > bound {
            return Err(Error::BoundViolation {
                t: step as f64 * dt,
                value: n,
                bound,
            });
        }
        if step >= first && (step - first).is_multiple_of(stride) {
            samples.push(x);
        }
    }
    Ok(Trajectory {
        t0: first as f64 * dt,
        dt: dt * stride as f64,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemodResult {
    pub c_s_est: Complex64,
    pub c_minus_est: Complex64,
    pub c_plus_est: Complex64,
    /// Largest change of any tone between the two halves of the window,
    /// relative to the largest tone.
    pub drift: f64,
    pub converged: bool,
}

fn project(traj: &Trajectory, delta: f64, start: usize, len: usize) -> [Complex64; 3] {
    let mut acc = [Complex64::new(0.0, 0.0); 3];
    for k in start..start + len {
        let c = traj.samples[k].c;
        let rot = Complex64::from_polar(1.0, delta * traj.time(k));
        acc[0] += c;
        acc[1] += c * rot;
        acc[2] += c * rot.conj();
    }
    let n = len as f64;
    [acc[0] / n, acc[1] / n, acc[2] / n]
}

fn near_integer(x: f64, tol: f64) -> Option<usize> {
    let r = x.round();
    if r >= 0.0 && (x - r).abs() <= tol * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

/// Projects c(t) onto 1, e^{iδt} and e^{−iδt} over `n_periods` whole beat periods
/// starting at `t_start`, giving (c_s, c_-, c_+).
pub fn extract_sidebands(traj: &Trajectory, delta: f64, t_start: f64, n_periods: f64) -> Result<DemodResult> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidInput("demodulation needs a nonzero delta".into()));
    }
    let periods = near_integer(n_periods, 1e-9)
        .filter(|&n| n >= 2)
        .ok_or_else(|| Error::InvalidInput(format!("period count {n_periods} is not an integer >= 2")))?;
    let beat_samples = near_integer(TAU / delta.abs() / traj.dt, 1e-6).ok_or_else(|| {
        Error::InvalidInput(format!(
            "beat period 2pi/delta is not a whole number of samples (dt = {:e} s)",
            traj.dt
        ))
    })?;
    let start = near_integer((t_start - traj.t0) / traj.dt, 1e-6)
        .ok_or_else(|| Error::InvalidInput(format!("t_start = {t_start:e} s is not on the sample grid")))?;
    let len = beat_samples * periods;
    if beat_samples == 0 || start + len > traj.samples.len() {
        return Err(Error::InvalidInput(format!(
            "window [{:e}, {:e}] s exceeds the series",
            t_start,
            t_start + len as f64 * traj.dt
        )));
    }
    let full = project(traj, delta, start, len);
    let half = beat_samples * (periods / 2);
    let first = project(traj, delta, start, half);
    let second = project(traj, delta, start + half, half);
    let scale = full.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let change = (0..3).map(|i| (first[i] - second[i]).norm()).fold(0.0, f64::max);
    let drift = if scale == 0.0 { 0.0 } else { change / scale };
    Ok(DemodResult {
        c_s_est: full[0],
        c_minus_est: full[1],
        c_plus_est: full[2],
        drift,
        converged: drift < DRIFT_TOL,
    })
}

/// Integrates with the given config and demodulates the window after the transient.
pub fn demodulate_run(params: &SystemParams, cfg: &IntegrationConfig) -> Result<DemodResult> {
    let mut cfg = *cfg;
    cfg.record_from = cfg.t_transient;
    cfg.record_stride = 1;
    let traj = integrate(params, &cfg)?;
    extract_sidebands(&traj, cfg.delta, cfg.t_transient, cfg.n_beat_periods as f64)
}

/// Knobs for the time-domain checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeDomainOptions {
    pub transient_factor: f64,
    pub n_beat_periods: u32,
}

impl Default for TimeDomainOptions {
    fn default() -> Self {
        TimeDomainOptions {
            transient_factor: TRANSIENT_FACTOR,
            n_beat_periods: DEFAULT_BEAT_PERIODS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationEntry {
    pub eps_p: f64,
    /// c_-/ε_p from the time-domain run.
    pub ratio: Complex64,
    /// Relative deviation from the closed form.
    pub closed_form_dev: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub delta: f64,
    pub delta_bar: f64,
    pub closed_form: Complex64,
    pub entries: Vec<LinearizationEntry>,
    /// Largest pairwise relative difference between the measured ratios.
    pub max_spread: f64,
    pub max_closed_form_dev: f64,
    /// Spread above [`SPREAD_TOL`]: the probe is no longer weak.
    pub nonlinear: bool,
}

pub fn verify_linearization(params: &SystemParams, delta: f64, eps_p_list: &[f64]) -> Result<LinearizationReport> {
    verify_linearization_with(params, delta, eps_p_list, &TimeDomainOptions::default())
}

/// Runs one trajectory per probe amplitude (concurrently) and compares c_-/ε_p
/// across amplitudes and against the closed form.
pub fn verify_linearization_with(
    params: &SystemParams,
    delta: f64,
    eps_p_list: &[f64],
    opts: &TimeDomainOptions,
) -> Result<LinearizationReport> {
    if eps_p_list.len() < 2 {
        return Err(Error::InvalidInput("need at least two probe amplitudes".into()));
    }
    if eps_p_list.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("probe amplitudes must be positive".into()));
    }
    let state = solve_steady(params)?;
    let closed_form = ClosedForm::new(params, &state).c_minus(delta)?;
    let entries: Vec<LinearizationEntry> = eps_p_list
        .par_iter()
        .map(|&eps_p| {
            let mut cfg = IntegrationConfig::with_transient_factor(params, delta, eps_p, opts.transient_factor)?;
            cfg.n_beat_periods = opts.n_beat_periods;
            let demod = demodulate_run(params, &cfg)?;
            let ratio = demod.c_minus_est / eps_p;
            Ok(LinearizationEntry {
                eps_p,
                ratio,
                closed_form_dev: (ratio - closed_form).norm() / closed_form.norm(),
                drift: demod.drift,
            })
        })
        .collect::<Result<_>>()?;
    let mut max_spread = 0.0f64;
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            let spread = (a.ratio - b.ratio).norm() / a.ratio.norm().max(b.ratio.norm());
            max_spread = max_spread.max(spread);
        }
    }
    let max_closed_form_dev = entries.iter().map(|e| e.closed_form_dev).fold(0.0, f64::max);
    Ok(LinearizationReport {
        delta,
        delta_bar: delta - params.omega_m,
        closed_form,
        entries,
        max_spread,
        max_closed_form_dev,
        nonlinear: max_spread > SPREAD_TOL,
    })
}

/// Integrates pump-only for `transient_factor`/min(rate) and returns the final
/// state's distance from the steady state, relative to the steady state's size.
pub fn pump_only_relaxation(params: &SystemParams, transient_factor: f64) -> Result<f64> {
    let mut probe_off = *params;
    probe_off.eps_p = 0.0;
    let mut cfg = IntegrationConfig::with_transient_factor(&probe_off, params.omega_m, 0.0, transient_factor)?;
    cfg.record_from = cfg.t_transient;
    let traj = integrate_steps(&probe_off, &cfg, cfg.transient_steps())?;
    let last = *traj.last().expect("final sample recorded");
    let target = MeanField::from_steady(&solve_steady(&probe_off)?);
    let scale = target.max_norm();
    let dist = last.distance(&target);
    Ok(if scale == 0.0 { dist } else { dist / scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{mhz, preset, PresetId};

    fn synthetic(delta: f64, dt: f64, n: usize, t0: f64) -> Trajectory {
        let samples = (0..n)
            .map(|k| {
                let t = t0 + k as f64 * dt;
                MeanField {
                    c: Complex64::new(2.0, 0.0)
                        + 0.3 * Complex64::from_polar(1.0, -delta * t)
                        + 0.1 * Complex64::from_polar(1.0, delta * t),
                    ..Default::default()
                }
            })
            .collect();
        Trajectory { t0, dt, samples }
    }

    #[test]
    fn demodulates_three_tones() {
        let delta = mhz(100.0);
        let dt = TAU / delta / 64.0;
        let traj = synthetic(delta, dt, 64 * 60 + 1, 0.0);
        let r = extract_sidebands(&traj, delta, 0.0, 60.0).unwrap();
        assert!((r.c_s_est - 2.0).norm() < 1e-10);
        assert!((r.c_minus_est - 0.3).norm() < 1e-10);
        assert!((r.c_plus_est - 0.1).norm() < 1e-10);
        assert!(r.converged);
    }

    #[test]
    fn demod_errors() {
        let delta = mhz(100.0);
        let dt = TAU / delta / 64.0;
        let traj = synthetic(delta, dt, 64 * 10, 0.0);
        assert!(extract_sidebands(&traj, delta, 0.0, 4.5).is_err());
        assert!(extract_sidebands(&traj, delta, 0.0, 20.0).is_err());
        assert!(extract_sidebands(&traj, delta * 1.01, 0.0, 4.0).is_err());
        assert!(extract_sidebands(&traj, delta, 0.0, 4.0).is_ok());
    }

    #[test]
    fn config_defaults_hold_invariants() {
        let p = preset(PresetId::Fig2a);
        for x in [-8.0, -4.0, 0.0, 4.0, 8.0] {
            let cfg = IntegrationConfig::new(&p, p.omega_m + mhz(x), 1e-3 * p.omega_l).unwrap();
            cfg.validate(&p).unwrap();
            let beat = TAU / cfg.delta / cfg.dt;
            assert!((beat - beat.round()).abs() < 1e-9);
            assert!(cfg.dt <= TAU / p.omega_m.max(cfg.delta) / 64.0 * (1.0 + 1e-12));
        }
        let mut cfg = IntegrationConfig::new(&p, p.omega_m, 0.0).unwrap();
        cfg.n_beat_periods = 10;
        assert!(cfg.validate(&p).is_err());
        let mut cfg = IntegrationConfig::new(&p, p.omega_m, 0.0).unwrap();
        cfg.dt *= 2.0;
        assert!(cfg.validate(&p).is_err());
        let mut cfg = IntegrationConfig::new(&p, p.omega_m, 0.0).unwrap();
        cfg.t_transient = 1e-6;
        assert!(cfg.validate(&p).is_err());
    }

    #[test]
    fn undriven_stays_zero() {
        let p = preset(PresetId::Fig2a).with_omega_l(0.0);
        let mut cfg = IntegrationConfig::new(&p, p.omega_m, 0.0).unwrap();
        cfg.record_from = 0.0;
        cfg.record_stride = 1000;
        let traj = integrate_steps(&p, &cfg, 20_000).unwrap();
        assert!(traj.samples.iter().all(|x| x.max_norm() == 0.0));
    }

    #[test]
    fn pump_only_has_no_probe_tone() {
        let mut p = preset(PresetId::Fig3c);
        p.eps_p = 0.0;
        let cfg = IntegrationConfig::new(&p, p.omega_m, 0.0).unwrap();
        let r = demodulate_run(&p, &cfg).unwrap();
        assert!(r.c_minus_est.norm() < 1e-8, "{:e}", r.c_minus_est.norm());
    }

    #[test]
    fn rk4_order() {
        // Short trajectory with coarse steps so truncation dominates rounding.
        let p = preset(PresetId::Fig2a);
        let base = IntegrationConfig::new(&p, p.omega_m + mhz(3.0), 1e-3 * p.omega_l).unwrap();
        let end = 50.0 * TAU / p.omega_m;
        let finals: Vec<MeanField> = [32.0, 64.0, 128.0]
            .iter()
            .map(|&per| {
                let mut cfg = base;
                cfg.dt = TAU / p.omega_m / per;
                cfg.record_from = end;
                let steps = (end / cfg.dt).round() as usize;
                // coarse on purpose, so skip the dt bound in validate()
                final_state(&p, &cfg, steps)
            })
            .collect();
        let e1 = finals[0].distance(&finals[1]);
        let e2 = finals[1].distance(&finals[2]);
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "order {order}");
    }

    fn final_state(p: &SystemParams, cfg: &IntegrationConfig, steps: usize) -> MeanField {
        let dt = cfg.dt;
        let probe_at = |t: f64| cfg.eps_p * Complex64::from_polar(1.0, -cfg.delta * t);
        let mut x = MeanField::default();
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = rhs(p, &x, probe_at(t));
            let k2 = rhs(p, &(x + k1 * (0.5 * dt)), probe_at(t + 0.5 * dt));
            let k3 = rhs(p, &(x + k2 * (0.5 * dt)), probe_at(t + 0.5 * dt));
            let k4 = rhs(p, &(x + k3 * dt), probe_at(t + dt));
            x = x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
        }
        x
    }

    #[test]
    fn linearization_needs_two_amplitudes() {
        let p = preset(PresetId::Fig2a);
        assert!(verify_linearization(&p, p.omega_m, &[1e-3 * p.omega_l]).is_err());
        assert!(verify_linearization(&p, p.omega_m, &[1e-3 * p.omega_l, -1.0]).is_err());
    }

    #[test]
    fn trajectory_csv_columns() {
        let traj = synthetic(1.0, 0.5, 3, 0.0);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,Q,P,re_c,im_c,re_a,im_a,re_b,im_b");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 9);
        assert!(lines[1].starts_with("0.00000000000e0,"));
    }
}
