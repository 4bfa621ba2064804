//! Pump-only steady state of the mean-field equations.
//!
//! With ε_p = 0 the cavity amplitude obeys c_s = Ω_l / (κ + iΔ + χ), where
//! Δ = Δ_c − g²|c_s|²/ω_m is the radiation-pressure-shifted detuning and χ is the
//! atomic loading. The photon number n = |c_s|² is therefore a root of a cubic;
//! it is found by fixed-point iteration with an exact cubic fallback.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 200;
const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    FixedPoint,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub c_s: Complex64,
    pub a_s: Complex64,
    pub b_s: Complex64,
    /// Dimensionless mechanical displacement g n / ω_m.
    pub q_s: f64,
    /// Effective detuning Δ = Δ_c − g² n / ω_m.
    pub delta_eff: f64,
    /// Radiation-pressure parameter β = g² n / 2 [rad²/s²].
    pub beta: f64,
    pub n_cav: f64,
    pub method: SteadyMethod,
    pub iterations: usize,
}

/// Atomic loading of the cavity seen at a frequency offset `delta_shift`:
/// g1² / (γ_1 + i(Δ_1 − s) + g2² / (γ_2 + i(Δ_2 − s))).
pub fn atomic_susceptibility(params: &SystemParams, delta_shift: f64) -> Result<Complex64> {
    if params.g1 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let outer = Complex64::new(params.gamma_1, params.delta_1 - delta_shift);
    let den = if params.g2 == 0.0 {
        outer
    } else {
        let inner = Complex64::new(params.gamma_2, params.delta_2 - delta_shift);
        if inner.norm_sqr() == 0.0 {
            return Err(Error::Singular {
                what: "atomic susceptibility",
                delta: delta_shift,
            });
        }
        outer + params.g2 * params.g2 / inner
    };
    if den.norm_sqr() == 0.0 {
        return Err(Error::Singular {
            what: "atomic susceptibility",
            delta: delta_shift,
        });
    }
    Ok(params.g1 * params.g1 / den)
}

/// Coefficients (a3, a2, a1, a0) of the self-consistency cubic
/// s² n³ − 2 D s n² + (K² + D²) n − Ω² with s = g²/ω_m, K = κ + Re χ, D = Δ_c + Im χ.
fn self_consistency_cubic(params: &SystemParams, chi: Complex64) -> [f64; 4] {
    let s = params.g * params.g / params.omega_m;
    let k = params.kappa + chi.re;
    let d = params.delta_c + chi.im;
    [s * s, -2.0 * d * s, k * k + d * d, -params.omega_l * params.omega_l]
}

fn eval_poly(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn bisect(c: &[f64; 4], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval_poly(c, lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = eval_poly(c, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of a polynomial of degree ≤ 3, ascending.
fn real_roots(c: &[f64; 4]) -> Vec<f64> {
    let [a3, a2, a1, a0] = *c;
    if a3 == 0.0 {
        if a2 == 0.0 {
            return if a1 == 0.0 { vec![] } else { vec![-a0 / a1] };
        }
        let disc = a1 * a1 - 4.0 * a2 * a0;
        if disc < 0.0 {
            return vec![];
        }
        let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
        let mut r = if q == 0.0 { vec![0.0] } else { vec![q / a2, a0 / q] };
        r.sort_by(f64::total_cmp);
        r.dedup();
        return r;
    }
    // Monotone pieces between the critical points.
    let bound = 1.0 + [a2, a1, a0].iter().map(|x| (x / a3).abs()).fold(0.0, f64::max);
    let mut breaks = vec![-bound];
    let (d2, d1, d0) = (3.0 * a3, 2.0 * a2, a1);
    let disc = d1 * d1 - 4.0 * d2 * d0;
    if disc > 0.0 {
        let q = -0.5 * (d1 + d1.signum() * disc.sqrt());
        let mut crit = [q / d2, if q != 0.0 { d0 / q } else { 0.0 }];
        crit.sort_by(f64::total_cmp);
        breaks.extend(crit);
    }
    breaks.push(bound);
    let mut roots = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (eval_poly(c, lo), eval_poly(c, hi));
        if flo == 0.0 {
            roots.push(lo);
        } else if (flo < 0.0) != (fhi < 0.0) {
            roots.push(bisect(c, lo, hi));
        }
    }
    if eval_poly(c, bound) == 0.0 {
        roots.push(bound);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// All nonnegative photon numbers that satisfy the self-consistency condition.
pub fn self_consistency_roots(params: &SystemParams) -> Result<Vec<f64>> {
    let chi = atomic_susceptibility(params, 0.0)?;
    let c = self_consistency_cubic(params, chi);
    Ok(real_roots(&c).into_iter().filter(|&n| n >= 0.0).collect())
}

fn cavity_map(params: &SystemParams, chi: Complex64, n: f64) -> f64 {
    let delta = params.delta_c - params.g * params.g * n / params.omega_m;
    let den = Complex64::new(params.kappa, delta) + chi;
    params.omega_l * params.omega_l / den.norm_sqr()
}

fn fixed_point(params: &SystemParams, chi: Complex64) -> Option<(f64, usize)> {
    // Plain iteration while it contracts, 0.5-damped once a step fails to shrink.
    let mut n = 0.0;
    let mut last_step = f64::INFINITY;
    let mut relax = 1.0;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let target = cavity_map(params, chi, n);
        let next = n + relax * (target - n);
        let step = (next - n).abs();
        if !next.is_finite() {
            return None;
        }
        if step <= FIXED_POINT_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return Some((next, it));
        }
        if step >= last_step {
            relax = DAMPING;
        }
        last_step = step;
        n = next;
    }
    None
}

/// Solves the pump-only steady state.
pub fn solve_steady(params: &SystemParams) -> Result<SteadyState> {
    let chi = atomic_susceptibility(params, 0.0)?;
    let (n, method, iterations) = if params.omega_l == 0.0 {
        (0.0, SteadyMethod::FixedPoint, 0)
    } else {
        match fixed_point(params, chi) {
            Some((n, it)) => (n, SteadyMethod::FixedPoint, it),
            None => {
                let c = self_consistency_cubic(params, chi);
                let candidates = real_roots(&c);
                // Lowest nonnegative root: the branch reached by ramping the pump up.
                match candidates.iter().copied().find(|&r| r >= 0.0) {
                    Some(r) => (r, SteadyMethod::Cubic, FIXED_POINT_MAX_ITER),
                    None => return Err(Error::NoSteadyState { candidates }),
                }
            }
        }
    };
    let g_sq = params.g * params.g;
    let delta = params.delta_c - g_sq * n / params.omega_m;
    let den = Complex64::new(params.kappa, delta) + chi;
    if den.norm_sqr() == 0.0 {
        return Err(Error::Singular {
            what: "steady cavity amplitude",
            delta: 0.0,
        });
    }
    let c_s = params.omega_l / den;
    let n_cav = c_s.norm_sqr();

    let g1_branch = Complex64::new(params.gamma_1, params.delta_1);
    let g2_branch = Complex64::new(params.gamma_2, params.delta_2);
    let (a_s, b_s) = if params.g1 == 0.0 {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        let den = g1_branch * g2_branch + params.g2 * params.g2;
        if den.norm_sqr() == 0.0 {
            return Err(Error::Singular {
                what: "steady atomic coherence",
                delta: 0.0,
            });
        }
        let a_s = -I * params.g1 * c_s * g2_branch / den;
        let b_s = if params.g2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            -I * params.g2 * a_s / g2_branch
        };
        (a_s, b_s)
    };

    Ok(SteadyState {
        c_s,
        a_s,
        b_s,
        q_s: params.g * n_cav / params.omega_m,
        delta_eff: params.delta_c - g_sq * n_cav / params.omega_m,
        beta: 0.5 * g_sq * n_cav,
        n_cav,
        method,
        iterations,
    })
}

/// Largest right-hand side of the five mean-field equations evaluated at the
/// stationary point (Q_s, P = 0, c_s, a_s, b_s), normalized by
/// max(κ, ω_m)·max(1, |c_s|).
pub fn steady_residual(params: &SystemParams, state: &SteadyState) -> f64 {
    let c = state.c_s;
    let a = state.a_s;
    let b = state.b_s;
    let q = state.q_s;
    let dp = params.g * c.norm_sqr() - params.omega_m * q;
    let dq = 0.0;
    let dc =
        -Complex64::new(params.kappa, params.delta_c) * c + I * params.g * c * q - I * params.g1 * a + params.omega_l;
    let da = -Complex64::new(params.gamma_1, params.delta_1) * a - I * params.g1 * c - I * params.g2 * b;
    let db = -Complex64::new(params.gamma_2, params.delta_2) * b - I * params.g2 * a;
    let worst = [dp.abs(), dq, dc.norm(), da.norm(), db.norm()]
        .into_iter()
        .fold(0.0, f64::max);
    worst / (params.kappa.max(params.omega_m) * c.norm().max(1.0))
}
