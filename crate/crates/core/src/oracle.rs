//! Brute-force check of the closed form: build the first-order sideband equations
//! straight from the mean-field equations and solve them by Gaussian elimination.
//!
//! Unknowns, per unit ε_p: `[c_-, c_+*, a_-, a_+*, b_-, b_+*, Q_-]`. The +δ
//! branch is conjugated so that every row is linear in the unknowns; Q_+ = Q_-*
//! because the displacement is real.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::response::{BFactor, ClosedForm};
use crate::steady::{solve_steady, SteadyState};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const C_MINUS: usize = 0;
pub const C_PLUS_CONJ: usize = 1;
pub const A_MINUS: usize = 2;
pub const A_PLUS_CONJ: usize = 3;
pub const B_MINUS: usize = 4;
pub const B_PLUS_CONJ: usize = 5;
pub const Q_MINUS: usize = 6;
/// Extra unknown of the 8x8 system used for the reality check.
pub const Q_PLUS_CONJ: usize = 7;

/// Pivots smaller than this are treated as exact zeros.
pub const MIN_PIVOT: f64 = 1e-300;
/// Points whose closed-form deviation exceeds this are flagged.
pub const FLAG_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem<const N: usize> {
    pub matrix: [[Complex64; N]; N],
    pub rhs: [Complex64; N],
    /// Probe detuning the system was built for, used in error reports.
    pub delta: f64,
}

pub type SidebandSystem = LinearSystem<7>;

impl<const N: usize> LinearSystem<N> {
    /// ‖M x − rhs‖∞ / ‖rhs‖∞.
    pub fn residual(&self, x: &[Complex64; N]) -> f64 {
        let mut worst = 0.0f64;
        for (row, b) in self.matrix.iter().zip(&self.rhs) {
            let mut acc = -*b;
            for (m, xj) in row.iter().zip(x) {
                acc += m * xj;
            }
            worst = worst.max(acc.norm());
        }
        worst / inf_norm_vec(&self.rhs).max(f64::MIN_POSITIVE)
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().flatten().all(|z| z.is_finite()) && self.rhs.iter().all(|z| z.is_finite())
    }
}

fn inf_norm_vec<const N: usize>(v: &[Complex64; N]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn inf_norm_mat<const N: usize>(m: &[[Complex64; N]; N]) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense Gaussian elimination with partial pivoting.
fn gauss<const N: usize>(mut m: [[Complex64; N]; N], mut b: [Complex64; N], delta: f64) -> Result<[Complex64; N]> {
    for col in 0..N {
        let pivot_row = (col..N)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .expect("non-empty range");
        if m[pivot_row][col].norm() < MIN_PIVOT {
            return Err(Error::Singular {
                what: "sideband system",
                delta,
            });
        }
        m.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = m[col][col];
        for row in col + 1..N {
            let factor = m[row][col] / pivot;
            if factor == ZERO {
                continue;
            }
            m[row][col] = ZERO;
            for k in col + 1..N {
                let upper = m[col][k];
                m[row][k] -= factor * upper;
            }
            let top = b[col];
            b[row] -= factor * top;
        }
    }
    let mut x = [ZERO; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for k in row + 1..N {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

/// Solves the system; the amplitudes are per unit ε_p.
pub fn solve_direct<const N: usize>(system: &LinearSystem<N>) -> Result<[Complex64; N]> {
    if !system.is_finite() {
        return Err(Error::Singular {
            what: "sideband system (non-finite entries)",
            delta: system.delta,
        });
    }
    gauss(system.matrix, system.rhs, system.delta)
}

/// ∞-norm condition number ‖M‖∞ ‖M⁻¹‖∞, with the inverse built column by column.
pub fn condition_number<const N: usize>(system: &LinearSystem<N>) -> Result<f64> {
    let mut inv_rows = [[ZERO; N]; N];
    for j in 0..N {
        let mut e = [ZERO; N];
        e[j] = ONE;
        let col = gauss(system.matrix, e, system.delta)?;
        for i in 0..N {
            inv_rows[i][j] = col[i];
        }
    }
    Ok(inf_norm_mat(&system.matrix) * inf_norm_mat(&inv_rows))
}

struct Coefficients {
    /// κ + iΔ − iδ with Δ = Δ_c − g Q_s.
    cav_minus: Complex64,
    /// κ − iΔ − iδ.
    cav_plus: Complex64,
    at1_minus: Complex64,
    at1_plus: Complex64,
    at2_minus: Complex64,
    at2_plus: Complex64,
    /// (ω_m² − δ² − iδγ_m)/ω_m; the mechanical row is divided by ω_m so all
    /// rows carry rad/s.
    mech: Complex64,
    gc: Complex64,
    gc_conj: Complex64,
}

fn coefficients(p: &SystemParams, s: &SteadyState, delta: f64) -> Coefficients {
    let detuning = p.delta_c - p.g * s.q_s;
    Coefficients {
        cav_minus: Complex64::new(p.kappa, detuning - delta),
        cav_plus: Complex64::new(p.kappa, -detuning - delta),
        at1_minus: Complex64::new(p.gamma_1, p.delta_1 - delta),
        at1_plus: Complex64::new(p.gamma_1, -p.delta_1 - delta),
        at2_minus: Complex64::new(p.gamma_2, p.delta_2 - delta),
        at2_plus: Complex64::new(p.gamma_2, -p.delta_2 - delta),
        mech: Complex64::new(p.omega_m * p.omega_m - delta * delta, -delta * p.gamma_m) / p.omega_m,
        gc: p.g * s.c_s,
        gc_conj: p.g * s.c_s.conj(),
    }
}

fn fill_common<const N: usize>(m: &mut [[Complex64; N]; N], p: &SystemParams, k: &Coefficients) {
    // (κ + iΔ − iδ) c_- − i g c_s Q_- + i g1 a_- = 1
    m[0][C_MINUS] = k.cav_minus;
    m[0][Q_MINUS] = -I * k.gc;
    m[0][A_MINUS] = I * p.g1;
    // (κ − iΔ − iδ) c_+* + i g c_s* Q_+* − i g1 a_+* = 0   (Q_+* column set by caller)
    m[1][C_PLUS_CONJ] = k.cav_plus;
    m[1][A_PLUS_CONJ] = -I * p.g1;
    // (γ_1 + iΔ_1 − iδ) a_- + i g1 c_- + i g2 b_- = 0
    m[2][A_MINUS] = k.at1_minus;
    m[2][C_MINUS] = I * p.g1;
    m[2][B_MINUS] = I * p.g2;
    // (γ_1 − iΔ_1 − iδ) a_+* − i g1 c_+* − i g2 b_+* = 0
    m[3][A_PLUS_CONJ] = k.at1_plus;
    m[3][C_PLUS_CONJ] = -I * p.g1;
    m[3][B_PLUS_CONJ] = -I * p.g2;
    // (γ_2 + iΔ_2 − iδ) b_- + i g2 a_- = 0
    m[4][B_MINUS] = k.at2_minus;
    m[4][A_MINUS] = I * p.g2;
    // (γ_2 − iΔ_2 − iδ) b_+* − i g2 a_+* = 0
    m[5][B_PLUS_CONJ] = k.at2_plus;
    m[5][A_PLUS_CONJ] = -I * p.g2;
    // (ω_m² − δ² − iδγ_m) Q_- = g ω_m (c_s* c_- + c_s c_+*)
    m[6][Q_MINUS] = k.mech;
    m[6][C_MINUS] = -k.gc_conj;
    m[6][C_PLUS_CONJ] = -k.gc;
}

/// Linearized sideband equations about `state` at probe detuning `delta`.
pub fn assemble_system(params: &SystemParams, state: &SteadyState, delta: f64) -> SidebandSystem {
    let k = coefficients(params, state, delta);
    let mut matrix = [[ZERO; 7]; 7];
    fill_common(&mut matrix, params, &k);
    matrix[1][Q_MINUS] = I * k.gc_conj;
    let mut rhs = [ZERO; 7];
    rhs[C_MINUS] = ONE;
    LinearSystem { matrix, rhs, delta }
}

/// Same equations with Q_+* kept as an independent unknown, so that the
/// reality of the displacement can be checked instead of assumed.
pub fn assemble_extended_system(params: &SystemParams, state: &SteadyState, delta: f64) -> LinearSystem<8> {
    let k = coefficients(params, state, delta);
    let mut matrix = [[ZERO; 8]; 8];
    fill_common(&mut matrix, params, &k);
    matrix[1][Q_PLUS_CONJ] = I * k.gc_conj;
    // conjugate of the e^{+iδt} mechanical balance
    matrix[7][Q_PLUS_CONJ] = k.mech;
    matrix[7][C_PLUS_CONJ] = -k.gc;
    matrix[7][C_MINUS] = -k.gc_conj;
    let mut rhs = [ZERO; 8];
    rhs[C_MINUS] = ONE;
    LinearSystem { matrix, rhs, delta }
}

/// |Q_+* − Q_-| / |Q_-| from the extended system (0 when both vanish).
pub fn position_reality_defect(params: &SystemParams, state: &SteadyState, delta: f64) -> Result<f64> {
    let x = solve_direct(&assemble_extended_system(params, state, delta))?;
    Ok(relative_deviation(x[Q_PLUS_CONJ], x[Q_MINUS]))
}

/// |a − b| / max(|a|, |b|), zero when both vanish.
pub fn relative_deviation(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDeviation {
    pub delta: f64,
    pub delta_bar: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub b_factor: BFactor,
    pub max_dev_c_minus: f64,
    pub max_dev_c_plus: f64,
    pub max_dev: f64,
    /// δ at which `max_dev` occurs.
    pub argmax_delta: f64,
    pub max_residual: f64,
    /// δ values whose deviation exceeds [`FLAG_THRESHOLD`].
    pub flagged: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<PointDeviation>,
}

impl DeviationReport {
    pub fn write_points_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "delta,delta_bar,dev_c_minus,dev_c_plus,residual")?;
        for p in &self.points {
            writeln!(
                out,
                "{:.15e},{:.15e},{:.6e},{:.6e},{:.6e}",
                p.delta, p.delta_bar, p.c_minus, p.c_plus, p.residual
            )?;
        }
        Ok(())
    }
}

/// Compares the closed-form c_-, c_+ against the direct solve on every grid point.
pub fn compare_closed_form(params: &SystemParams, grid: &[f64], b_factor: BFactor) -> Result<DeviationReport> {
    let state = solve_steady(params)?;
    let model = ClosedForm::new(params, &state).with_b_factor(b_factor);
    let points: Vec<PointDeviation> = grid
        .par_iter()
        .map(|&delta| {
            let system = assemble_system(params, &state, delta);
            let x = solve_direct(&system)?;
            let cm = model.c_minus(delta)?;
            let cp = model.c_plus_conj(delta)?;
            Ok(PointDeviation {
                delta,
                delta_bar: delta - params.omega_m,
                c_minus: relative_deviation(cm, x[C_MINUS]),
                c_plus: relative_deviation(cp, x[C_PLUS_CONJ]),
                residual: system.residual(&x),
            })
        })
        .collect::<Result<_>>()?;
    let mut report = DeviationReport {
        b_factor,
        max_dev_c_minus: 0.0,
        max_dev_c_plus: 0.0,
        max_dev: 0.0,
        argmax_delta: grid.first().copied().unwrap_or(f64::NAN),
        max_residual: 0.0,
        flagged: Vec::new(),
        points: Vec::new(),
    };
    for p in &points {
        report.max_dev_c_minus = report.max_dev_c_minus.max(p.c_minus);
        report.max_dev_c_plus = report.max_dev_c_plus.max(p.c_plus);
        report.max_residual = report.max_residual.max(p.residual);
        let dev = p.c_minus.max(p.c_plus);
        if dev > report.max_dev {
            report.max_dev = dev;
            report.argmax_delta = p.delta;
        }
        if dev > FLAG_THRESHOLD {
            report.flagged.push(p.delta);
        }
    }
    report.points = points;
    Ok(report)
}
