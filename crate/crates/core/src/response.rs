//! Closed-form first-order probe response and the observables derived from it.
//!
//! With probe detuning δ = ω_p − ω_l the lower sideband amplitude per unit ε_p is
//!
//! ```text
//! c_-/ε_p = [(κ − i(Δ+δ) + A)(δ² − ω_m² + iδγ_m) − 2iω_m β] / d(δ)
//! d(δ)    = (κ − i(Δ+δ) + A)(κ + i(Δ−δ) + B)(δ² − ω_m² + iδγ_m) − 2iω_m β (2iΔ − A + B)
//! ```
//!
//! where A and B are the atomic loadings of the upper (conjugated) and lower
//! sideband branches. The upper sideband follows from the same elimination,
//! c_+*/ε_p = i g² ω_m (c_s*)² / d(δ).
//!
//! Note on B: the first factor of its denominator is (γ_1 + iΔ_1 − iδ), which is
//! what eliminating the atomic coherences from the lower-sideband equations gives.
//! The form with (γ_1 − iΔ_1 + iδ) is kept as [`BFactor::Printed`] for comparison;
//! it disagrees with the direct linear solve by orders of magnitude near the
//! dressed atomic lines.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::steady::{solve_steady, SteadyState};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Finite-difference step for the group delay, as a fraction of ω_m.
pub const GROUP_DELAY_STEP: f64 = 1e-6;
/// Allowed relative disagreement between the h and h/2 phase slopes.
pub const RICHARDSON_TOL: f64 = 1e-3;
/// Below this |t_p| the transmission phase is treated as undefined.
pub const MIN_TRANSMISSION: f64 = 1e-12;

/// Which denominator to use for the lower-branch atomic loading B.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BFactor {
    /// (γ_1 + iΔ_1 − iδ)(γ_2 + iΔ_2 − iδ) + g2²
    #[default]
    Derived,
    /// (γ_1 − iΔ_1 + iδ)(γ_2 + iΔ_2 − iδ) + g2², kept as a negative control.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandResponse {
    pub delta: f64,
    /// δ − ω_m.
    pub delta_bar: f64,
    /// c_-/ε_p [s].
    pub c_minus_norm: Complex64,
    /// c_+/ε_p* [s].
    pub c_plus_norm: Complex64,
    pub eps_out: Complex64,
    pub mu: f64,
    pub nu: f64,
    pub t_p: Complex64,
    /// arg t_p in (−π, π].
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDelay {
    /// Central difference with step h [s].
    pub tau_g: f64,
    /// Same with step h/2.
    pub tau_g_half_step: f64,
    /// Set when the two steps disagree by more than [`RICHARDSON_TOL`].
    pub unconverged: bool,
}

fn ratio(num: Complex64, den: Complex64, what: &'static str, delta: f64) -> Result<Complex64> {
    if den.norm_sqr() == 0.0 || !den.is_finite() {
        return Err(Error::Singular { what, delta });
    }
    Ok(num / den)
}

fn lower_branch(params: &SystemParams, delta: f64, b_factor: BFactor) -> Result<Complex64> {
    if params.g1 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let g1_sq = params.g1 * params.g1;
    let second = Complex64::new(params.gamma_2, params.delta_2 - delta);
    let first = match b_factor {
        BFactor::Derived => Complex64::new(params.gamma_1, params.delta_1 - delta),
        BFactor::Printed => Complex64::new(params.gamma_1, -params.delta_1 + delta),
    };
    ratio(
        g1_sq * second,
        first * second + params.g2 * params.g2,
        "atomic loading B",
        delta,
    )
}

/// Upper-branch atomic loading
/// A = g1²(γ_2 − iΔ_2 − iδ) / [(γ_1 − iΔ_1 − iδ)(γ_2 − iΔ_2 − iδ) + g2²].
pub fn branch_a(params: &SystemParams, delta: f64) -> Result<Complex64> {
    if params.g1 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let first = Complex64::new(params.gamma_1, -params.delta_1 - delta);
    let second = Complex64::new(params.gamma_2, -params.delta_2 - delta);
    ratio(
        params.g1 * params.g1 * second,
        first * second + params.g2 * params.g2,
        "atomic loading A",
        delta,
    )
}

/// Lower-branch atomic loading
/// B = g1²(γ_2 + iΔ_2 − iδ) / [(γ_1 + iΔ_1 − iδ)(γ_2 + iΔ_2 − iδ) + g2²].
pub fn branch_b(params: &SystemParams, delta: f64) -> Result<Complex64> {
    lower_branch(params, delta, BFactor::Derived)
}

/// B with the sign-flipped first denominator factor, for the negative control.
pub fn branch_b_printed(params: &SystemParams, delta: f64) -> Result<Complex64> {
    lower_branch(params, delta, BFactor::Printed)
}

/// Pieces shared by every observable at one δ.
#[derive(Debug, Clone, Copy)]
struct Terms {
    /// κ − i(Δ+δ) + A
    upper: Complex64,
    /// δ² − ω_m² + iδγ_m
    mech: Complex64,
    d: Complex64,
}

/// Closed-form evaluator bound to one parameter set and its steady state.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm<'a> {
    pub params: &'a SystemParams,
    pub state: &'a SteadyState,
    pub b_factor: BFactor,
}

impl<'a> ClosedForm<'a> {
    pub fn new(params: &'a SystemParams, state: &'a SteadyState) -> Self {
        Self {
            params,
            state,
            b_factor: BFactor::Derived,
        }
    }

    pub fn with_b_factor(mut self, b_factor: BFactor) -> Self {
        self.b_factor = b_factor;
        self
    }

    fn terms(&self, delta: f64) -> Result<Terms> {
        let p = self.params;
        let big_delta = self.state.delta_eff;
        let beta = self.state.beta;
        let a = branch_a(p, delta)?;
        let b = lower_branch(p, delta, self.b_factor)?;
        let upper = Complex64::new(p.kappa, -(big_delta + delta)) + a;
        let lower = Complex64::new(p.kappa, big_delta - delta) + b;
        // (δ − ω_m)(δ + ω_m) keeps precision near the mechanical line.
        let mech = Complex64::new((delta - p.omega_m) * (delta + p.omega_m), delta * p.gamma_m);
        let coupling = -2.0 * I * p.omega_m * beta * (2.0 * I * big_delta - a + b);
        let d = upper * lower * mech + coupling;
        if d.norm_sqr() == 0.0 || !d.is_finite() {
            return Err(Error::Singular {
                what: "d(delta)",
                delta,
            });
        }
        Ok(Terms { upper, mech, d })
    }

    pub fn denom_d(&self, delta: f64) -> Result<Complex64> {
        Ok(self.terms(delta)?.d)
    }

    /// c_-/ε_p.
    pub fn c_minus(&self, delta: f64) -> Result<Complex64> {
        let t = self.terms(delta)?;
        let num = t.upper * t.mech - 2.0 * I * self.params.omega_m * self.state.beta;
        Ok(num / t.d)
    }

    /// c_+*/ε_p, the amplitude that enters the linear system directly.
    pub fn c_plus_conj(&self, delta: f64) -> Result<Complex64> {
        let p = self.params;
        let t = self.terms(delta)?;
        let cs_conj = self.state.c_s.conj();
        Ok(I * p.g * p.g * p.omega_m * cs_conj * cs_conj / t.d)
    }

    /// c_+/ε_p*.
    pub fn c_plus(&self, delta: f64) -> Result<Complex64> {
        Ok(self.c_plus_conj(delta)?.conj())
    }

    /// ε_out = 2κ c_-/ε_p.
    pub fn epsilon_out(&self, delta: f64) -> Result<Complex64> {
        Ok(2.0 * self.params.kappa * self.c_minus(delta)?)
    }

    /// t_p = 1 − 2ηκ c_-/ε_p.
    pub fn transmission(&self, delta: f64) -> Result<Complex64> {
        Ok(1.0 - 2.0 * self.params.eta * self.params.kappa * self.c_minus(delta)?)
    }

    pub fn response(&self, delta: f64) -> Result<SidebandResponse> {
        let p = self.params;
        let terms = self.terms(delta)?;
        let c_minus = (terms.upper * terms.mech - 2.0 * I * p.omega_m * self.state.beta) / terms.d;
        let cs_conj = self.state.c_s.conj();
        let c_plus_conj = I * p.g * p.g * p.omega_m * cs_conj * cs_conj / terms.d;
        let eps_out = 2.0 * p.kappa * c_minus;
        let t_p = 1.0 - 2.0 * p.eta * p.kappa * c_minus;
        Ok(SidebandResponse {
            delta,
            delta_bar: delta - p.omega_m,
            c_minus_norm: c_minus,
            c_plus_norm: c_plus_conj.conj(),
            eps_out,
            mu: eps_out.re,
            nu: eps_out.im,
            t_p,
            phase: t_p.arg(),
        })
    }

    fn defined_transmission(&self, delta: f64) -> Result<Complex64> {
        let t = self.transmission(delta)?;
        if t.norm() < MIN_TRANSMISSION {
            return Err(Error::PhaseUndefined {
                delta,
                magnitude: t.norm(),
            });
        }
        Ok(t)
    }

    fn phase_slope(&self, delta: f64, h: f64) -> Result<f64> {
        let up = self.defined_transmission(delta + h)?;
        let down = self.defined_transmission(delta - h)?;
        // arg of the ratio is the locally unwrapped phase difference.
        Ok((up * down.conj()).arg() / (2.0 * h))
    }

    /// τ_g = dφ_t/dω_p by central difference of the transmission phase with
    /// h = 10⁻⁶ ω_m, checked against h/2. τ_g < 0 is pulse advancement.
    pub fn group_delay(&self, delta: f64) -> Result<GroupDelay> {
        let h = GROUP_DELAY_STEP * self.params.omega_m;
        let tau_g = self.phase_slope(delta, h)?;
        let tau_g_half_step = self.phase_slope(delta, 0.5 * h)?;
        let scale = tau_g_half_step.abs().max(1e-12);
        Ok(GroupDelay {
            tau_g,
            tau_g_half_step,
            unconverged: (tau_g - tau_g_half_step).abs() > RICHARDSON_TOL * scale,
        })
    }

    /// Independent estimate Im[(dt_p/dδ)/t_p] from a five-point stencil on t_p itself.
    pub fn group_delay_log_derivative(&self, delta: f64) -> Result<f64> {
        let h = GROUP_DELAY_STEP * self.params.omega_m;
        let t0 = self.defined_transmission(delta)?;
        let f = |k: f64| self.transmission(delta + k * h);
        let dt = (-f(2.0)? + 8.0 * f(1.0)? - 8.0 * f(-1.0)? + f(-2.0)?) / (12.0 * h);
        Ok((dt / t0).im)
    }
}

pub fn denom_d(params: &SystemParams, state: &SteadyState, delta: f64) -> Result<Complex64> {
    ClosedForm::new(params, state).denom_d(delta)
}

pub fn c_minus(params: &SystemParams, state: &SteadyState, delta: f64) -> Result<Complex64> {
    ClosedForm::new(params, state).c_minus(delta)
}

pub fn c_plus(params: &SystemParams, state: &SteadyState, delta: f64) -> Result<Complex64> {
    ClosedForm::new(params, state).c_plus(delta)
}

pub fn epsilon_out(params: &SystemParams, state: &SteadyState, delta: f64) -> Result<Complex64> {
    ClosedForm::new(params, state).epsilon_out(delta)
}

pub fn transmission(params: &SystemParams, state: &SteadyState, delta: f64) -> Result<Complex64> {
    ClosedForm::new(params, state).transmission(delta)
}

pub fn group_delay(params: &SystemParams, state: &SteadyState, delta: f64) -> Result<GroupDelay> {
    ClosedForm::new(params, state).group_delay(delta)
}

/// Removes 2π jumps, scanning from the first sample.
pub fn unwrap_phase(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut acc = match raw.first() {
        Some(&x) => x,
        None => return out,
    };
    out.push(acc);
    for w in raw.windows(2) {
        let mut step = w[1] - w[0];
        step -= TAU * (step / TAU).round();
        acc += step;
        out.push(acc);
    }
    out
}

/// `points` probe detunings δ = ω_m (1 + x), x uniform on [lo, hi].
pub fn detuning_grid(omega_m: f64, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![omega_m + omega_m * lo],
        n => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| omega_m + omega_m * (lo + step * i as f64)).collect()
        }
    }
}

/// 2001 points over δ̄/ω_m ∈ [−0.2, 0.2].
pub fn default_grid(params: &SystemParams) -> Vec<f64> {
    detuning_grid(params.omega_m, -0.2, 0.2, 2001)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpectrumOptions {
    pub execution: Execution,
    pub b_factor: BFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega_m: f64,
    pub eta: f64,
    pub steady: SteadyState,
    pub points: Vec<SidebandResponse>,
    pub unwrapped_phase: Vec<f64>,
    /// Group delay per point [s]; NaN where the phase is undefined.
    pub tau_g: Vec<f64>,
    /// Points whose h and h/2 slopes disagree, or whose phase is undefined.
    pub tau_g_flagged: Vec<bool>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn delta_bar(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_bar).collect()
    }

    pub fn mu(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mu).collect()
    }

    pub fn transmission_power(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t_p.norm_sqr()).collect()
    }

    /// Largest jump between neighbouring unwrapped phase samples.
    pub fn max_phase_jump(&self) -> f64 {
        self.unwrapped_phase
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn spectrum(params: &SystemParams, grid: &[f64]) -> Result<Spectrum> {
    spectrum_with(params, grid, SpectrumOptions::default())
}

/// Evaluates the response on a strictly increasing δ grid. Points are independent,
/// so the parallel and serial paths give bit-identical results.
pub fn spectrum_with(params: &SystemParams, grid: &[f64], opts: SpectrumOptions) -> Result<Spectrum> {
    if grid.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("grid contains non-finite detunings".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    let state = solve_steady(params)?;
    let model = ClosedForm::new(params, &state).with_b_factor(opts.b_factor);
    let eval = |&delta: &f64| -> Result<(SidebandResponse, f64, bool)> {
        let response = model.response(delta)?;
        match model.group_delay(delta) {
            Ok(gd) => Ok((response, gd.tau_g, gd.unconverged)),
            Err(Error::PhaseUndefined { .. }) => Ok((response, f64::NAN, true)),
            Err(e) => Err(e),
        }
    };
    let rows: Vec<(SidebandResponse, f64, bool)> = match opts.execution {
        Execution::Parallel => grid.par_iter().map(eval).collect::<Result<_>>()?,
        Execution::Serial => grid.iter().map(eval).collect::<Result<_>>()?,
    };
    let raw: Vec<f64> = rows.iter().map(|r| r.0.phase).collect();
    let unwrapped_phase = unwrap_phase(&raw);
    let mut points = Vec::with_capacity(rows.len());
    let mut tau_g = Vec::with_capacity(rows.len());
    let mut tau_g_flagged = Vec::with_capacity(rows.len());
    for (r, tau, flag) in rows {
        points.push(r);
        tau_g.push(tau);
        tau_g_flagged.push(flag);
    }
    Ok(Spectrum {
        omega_m: params.omega_m,
        eta: params.eta,
        steady: state,
        points,
        unwrapped_phase,
        tau_g,
        tau_g_flagged,
    })
}

/// Phase wrapped into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x - TAU * (x / TAU).round();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}
