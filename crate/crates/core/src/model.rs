//! Physical parameters of the hybrid cavity, unit conversions and the figure presets.
//!
//! All rates, detunings and couplings are stored as angular frequencies in rad/s.
//! Config documents quote them as ordinary frequencies in MHz (the value of x/2π),
//! so `"kappa": 4` means κ = 2π × 4 MHz.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Pump wavelength used when a config does not give one [m].
pub const DEFAULT_LAMBDA_L: f64 = 1064e-9;
/// Default κ_ext/κ (critical coupling).
pub const DEFAULT_ETA: f64 = 0.5;
/// Probe amplitudes above this fraction of Ω_l leave the weak-probe regime.
pub const WEAK_PROBE_RATIO: f64 = 0.1;

/// Converts a frequency quoted in MHz (x/2π) to rad/s.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Converts rad/s back to MHz (x/2π).
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical frequency.
    pub omega_m: f64,
    /// Mechanical damping.
    pub gamma_m: f64,
    /// Total cavity amplitude decay.
    pub kappa: f64,
    /// External-coupling fraction κ_ext/κ.
    pub eta: f64,
    /// Cavity-pump detuning ω_c - ω_l.
    pub delta_c: f64,
    /// Atomic detuning ω_21 - ω_l.
    pub delta_1: f64,
    /// Composite detuning ω_31 + ν_c - ω_l.
    pub delta_2: f64,
    /// Optomechanical coupling per zero-point-scaled displacement.
    pub g: f64,
    /// Cavity-atom coupling on |1> <-> |2>.
    pub g1: f64,
    /// Control coupling on |2> <-> |3>.
    pub g2: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    /// Pump drive amplitude.
    pub omega_l: f64,
    /// Probe drive amplitude.
    pub eps_p: f64,
    /// Pump wavelength [m], only used for power <-> Rabi conversion.
    pub lambda_l: f64,
}

impl SystemParams {
    /// Checks the type invariants. The weak-probe condition is not checked here,
    /// see [`SystemParams::weak_probe`].
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("kappa", self.kappa),
            ("eta", self.eta),
            ("Delta_c", self.delta_c),
            ("Delta_1", self.delta_1),
            ("Delta_2", self.delta_2),
            ("g", self.g),
            ("g1", self.g1),
            ("g2", self.g2),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("Omega_l", self.omega_l),
            ("eps_p", self.eps_p),
            ("lambda_l", self.lambda_l),
        ];
        for (field, value) in all {
            if !value.is_finite() {
                return Err(Error::InvalidParam {
                    field,
                    reason: format!("{value} is not finite"),
                });
            }
        }
        let rates = [
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("kappa", self.kappa),
            ("g", self.g),
            ("g1", self.g1),
            ("g2", self.g2),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("Omega_l", self.omega_l),
            ("eps_p", self.eps_p),
        ];
        for (field, value) in rates {
            if value < 0.0 {
                return Err(Error::NegativeRate { field, value });
            }
        }
        if self.omega_m == 0.0 {
            return Err(Error::InvalidParam {
                field: "omega_m",
                reason: "must be > 0".into(),
            });
        }
        if self.kappa == 0.0 {
            return Err(Error::InvalidParam {
                field: "kappa",
                reason: "must be > 0".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParam {
                field: "eta",
                reason: format!("{} outside [0, 1]", self.eta),
            });
        }
        if self.lambda_l <= 0.0 {
            return Err(Error::InvalidParam {
                field: "lambda_l",
                reason: "must be > 0".into(),
            });
        }
        Ok(())
    }

    /// `false` when both drives are on and ε_p exceeds 0.1 Ω_l.
    pub fn weak_probe(&self) -> bool {
        self.eps_p == 0.0 || self.omega_l == 0.0 || self.eps_p <= WEAK_PROBE_RATIO * self.omega_l
    }

    pub fn with_omega_l(mut self, omega_l: f64) -> Self {
        self.omega_l = omega_l;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Mechanical quality factor ω_m/γ_m.
    pub fn quality_factor(&self) -> f64 {
        self.omega_m / self.gamma_m
    }

    pub fn pump_power(&self) -> Result<f64> {
        rabi_to_power(self.omega_l, self.kappa, self.lambda_l)
    }

    pub fn to_config(&self) -> ParamsConfig {
        ParamsConfig {
            omega_m: Some(to_mhz(self.omega_m)),
            gamma_m: Some(to_mhz(self.gamma_m)),
            q: None,
            kappa: Some(to_mhz(self.kappa)),
            eta: Some(self.eta),
            delta_c: Some(to_mhz(self.delta_c)),
            delta_1: Some(to_mhz(self.delta_1)),
            delta_2: Some(to_mhz(self.delta_2)),
            g: Some(to_mhz(self.g)),
            g1: Some(to_mhz(self.g1)),
            g2: Some(to_mhz(self.g2)),
            gamma_1: Some(to_mhz(self.gamma_1)),
            gamma_2: Some(to_mhz(self.gamma_2)),
            omega_l: Some(to_mhz(self.omega_l)),
            eps_p: Some(to_mhz(self.eps_p)),
            lambda_l: Some(self.lambda_l),
        }
    }

    /// Serializes to the config document format accepted by [`load_params`].
    pub fn to_config_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config()).expect("config serializes")
    }
}

/// On-disk form of [`SystemParams`]: frequencies in MHz (x/2π), `lambda_l` in metres.
///
/// Exactly one of `gamma_m` and `Q` must be present. `eta`, `eps_p` and
/// `lambda_l` fall back to 0.5, 0 and 1064 nm.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_m: Option<f64>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(rename = "Delta_c", skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<f64>,
    #[serde(rename = "Delta_1", skip_serializing_if = "Option::is_none")]
    pub delta_1: Option<f64>,
    #[serde(rename = "Delta_2", skip_serializing_if = "Option::is_none")]
    pub delta_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_2: Option<f64>,
    #[serde(rename = "Omega_l", skip_serializing_if = "Option::is_none")]
    pub omega_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_l: Option<f64>,
}

impl ParamsConfig {
    pub fn into_params(self) -> Result<SystemParams> {
        fn req(v: Option<f64>, name: &'static str) -> Result<f64> {
            v.ok_or(Error::MissingField(name))
        }
        let omega_m = mhz(req(self.omega_m, "omega_m")?);
        let gamma_m = match (self.gamma_m, self.q) {
            (Some(g), None) => mhz(g),
            (None, Some(q)) => {
                if !(q > 0.0) {
                    return Err(Error::InvalidParam {
                        field: "Q",
                        reason: format!("{q} must be > 0"),
                    });
                }
                omega_m / q
            }
            (None, None) => return Err(Error::MissingField("gamma_m")),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParam {
                    field: "Q",
                    reason: "give either gamma_m or Q, not both".into(),
                })
            }
        };
        let params = SystemParams {
            omega_m,
            gamma_m,
            kappa: mhz(req(self.kappa, "kappa")?),
            eta: self.eta.unwrap_or(DEFAULT_ETA),
            delta_c: mhz(req(self.delta_c, "Delta_c")?),
            delta_1: mhz(req(self.delta_1, "Delta_1")?),
            delta_2: mhz(req(self.delta_2, "Delta_2")?),
            g: mhz(req(self.g, "g")?),
            g1: mhz(req(self.g1, "g1")?),
            g2: mhz(req(self.g2, "g2")?),
            gamma_1: mhz(req(self.gamma_1, "gamma_1")?),
            gamma_2: mhz(req(self.gamma_2, "gamma_2")?),
            omega_l: mhz(req(self.omega_l, "Omega_l")?),
            eps_p: mhz(self.eps_p.unwrap_or(0.0)),
            lambda_l: self.lambda_l.unwrap_or(DEFAULT_LAMBDA_L),
        };
        params.validate()?;
        Ok(params)
    }
}

/// Parses and validates a JSON config document.
pub fn load_params(config: &str) -> Result<SystemParams> {
    let cfg: ParamsConfig = serde_json::from_str(config)?;
    cfg.into_params()
}

fn check_conversion(kappa: f64, lambda_l: f64) -> Result<()> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParam {
            field: "kappa",
            reason: format!("{kappa} must be > 0"),
        });
    }
    if !(lambda_l > 0.0) {
        return Err(Error::InvalidParam {
            field: "lambda_l",
            reason: format!("{lambda_l} must be > 0"),
        });
    }
    Ok(())
}

fn photon_energy(lambda_l: f64) -> f64 {
    HBAR * TAU * SPEED_OF_LIGHT / lambda_l
}

/// Pump amplitude |Ω_l| = sqrt(2κP/ħω_l) for a pump of power `power` [W].
pub fn power_to_rabi(power: f64, kappa: f64, lambda_l: f64) -> Result<f64> {
    check_conversion(kappa, lambda_l)?;
    if !(power >= 0.0) {
        return Err(Error::InvalidInput(format!("power {power} must be >= 0")));
    }
    Ok((2.0 * kappa * power / photon_energy(lambda_l)).sqrt())
}

/// Inverse of [`power_to_rabi`].
pub fn rabi_to_power(omega: f64, kappa: f64, lambda_l: f64) -> Result<f64> {
    check_conversion(kappa, lambda_l)?;
    if !omega.is_finite() {
        return Err(Error::InvalidInput(format!("Rabi frequency {omega} not finite")));
    }
    Ok(omega * omega * photon_energy(lambda_l) / (2.0 * kappa))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetId {
    Fig2a,
    Fig2c,
    Fig2e,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
    Fig4,
}

impl PresetId {
    pub const ALL: [PresetId; 8] = [
        PresetId::Fig2a,
        PresetId::Fig2c,
        PresetId::Fig2e,
        PresetId::Fig3a,
        PresetId::Fig3b,
        PresetId::Fig3c,
        PresetId::Fig3d,
        PresetId::Fig4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::Fig2a => "fig2a",
            PresetId::Fig2c => "fig2c",
            PresetId::Fig2e => "fig2e",
            PresetId::Fig3a => "fig3a",
            PresetId::Fig3b => "fig3b",
            PresetId::Fig3c => "fig3c",
            PresetId::Fig3d => "fig3d",
            PresetId::Fig4 => "fig4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetId::Fig2a => "absorption/dispersion, g/2pi = 2 MHz, g1/2pi = g2/2pi = 8 MHz",
            PresetId::Fig2c => "as fig2a with g1/2pi = 4 MHz",
            PresetId::Fig2e => "as fig2a with g2/2pi = 4 MHz",
            PresetId::Fig3a => "transmission, g/2pi = 1 MHz, g1/2pi = g2/2pi = 4 MHz",
            PresetId::Fig3b => "as fig3a with the control coupling off (g2 = 0)",
            PresetId::Fig3c => "as fig3a with the atom decoupled (g1 = g2 = 0)",
            PresetId::Fig3d => "empty cavity (g = g1 = g2 = 0)",
            PresetId::Fig4 => "group delay vs pump power; g1/2pi = g2/2pi = 8 MHz",
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Parameter set behind each figure.
///
/// All presets share ω_m = Δ_c = Δ_1 = Δ_2 = 2π × 100 MHz, κ = 2π × 4 MHz,
/// γ_1 = γ_2 = 2π × 10 kHz, ω_m/γ_m = 6700 and Ω_l = 2π × 20 MHz; they differ in
/// the three couplings. The probe is set to 10^-3 Ω_l.
pub fn preset(id: PresetId) -> SystemParams {
    let omega_m = mhz(100.0);
    let omega_l = mhz(20.0);
    let base = SystemParams {
        omega_m,
        gamma_m: omega_m / 6700.0,
        kappa: mhz(4.0),
        eta: DEFAULT_ETA,
        delta_c: omega_m,
        delta_1: omega_m,
        delta_2: omega_m,
        g: mhz(2.0),
        g1: mhz(8.0),
        g2: mhz(8.0),
        gamma_1: mhz(0.01),
        gamma_2: mhz(0.01),
        omega_l,
        eps_p: 1e-3 * omega_l,
        lambda_l: DEFAULT_LAMBDA_L,
    };
    let (g, g1, g2) = match id {
        PresetId::Fig2a | PresetId::Fig4 => (2.0, 8.0, 8.0),
        PresetId::Fig2c => (2.0, 4.0, 8.0),
        PresetId::Fig2e => (2.0, 8.0, 4.0),
        PresetId::Fig3a => (1.0, 4.0, 4.0),
        PresetId::Fig3b => (1.0, 4.0, 0.0),
        PresetId::Fig3c => (1.0, 0.0, 0.0),
        PresetId::Fig3d => (0.0, 0.0, 0.0),
    };
    SystemParams {
        g: mhz(g),
        g1: mhz(g1),
        g2: mhz(g2),
        ..base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2A_JSON: &str = r#"{
        "omega_m": 100, "Q": 6700, "kappa": 4, "Delta_c": 100, "Delta_1": 100,
        "Delta_2": 100, "g": 2, "g1": 8, "g2": 8, "gamma_1": 0.01, "gamma_2": 0.01,
        "Omega_l": 20
    }"#;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    #[test]
    fn quality_factor_sets_gamma_m() {
        let p = load_params(FIG2A_JSON).unwrap();
        assert!(rel(p.gamma_m, TAU * 14.925_373_134e3) < 1e-9);
        assert_eq!(p.eta, 0.5);
        assert_eq!(p.lambda_l, 1064e-9);
        assert_eq!(p.eps_p, 0.0);
    }

    #[test]
    fn mhz_conversion_is_exact_formula() {
        for f in [0.01, 1.0, 4.0, 8.0, 100.0, 123.456] {
            assert_eq!(mhz(f), 2.0 * std::f64::consts::PI * f * 1e6);
        }
    }

    #[test]
    fn negative_kappa_rejected() {
        let doc = FIG2A_JSON.replace("\"kappa\": 4", "\"kappa\": -4");
        let err = load_params(&doc).unwrap_err();
        assert!(matches!(err, Error::NegativeRate { field: "kappa", .. }));
        assert!(err.to_string().contains("negative rate"));
    }

    #[test]
    fn missing_and_unknown_fields() {
        let doc = FIG2A_JSON.replace("\"g1\": 8,", "");
        assert!(matches!(load_params(&doc), Err(Error::MissingField("g1"))));
        let doc = FIG2A_JSON.replace("\"g1\": 8,", "\"g1\": 8, \"mass\": 1,");
        assert!(matches!(load_params(&doc), Err(Error::Parse(_))));
        let doc = FIG2A_JSON.replace("\"Q\": 6700", "\"Q\": 6700, \"gamma_m\": 0.01");
        assert!(load_params(&doc).is_err());
    }

    #[test]
    fn eta_out_of_range() {
        let doc = FIG2A_JSON.replace("\"Omega_l\": 20", "\"Omega_l\": 20, \"eta\": 1.5");
        assert!(matches!(
            load_params(&doc),
            Err(Error::InvalidParam { field: "eta", .. })
        ));
    }

    #[test]
    fn config_round_trip() {
        let p = load_params(FIG2A_JSON).unwrap();
        let q = load_params(&p.to_config_json()).unwrap();
        let a = serde_json::to_value(p).unwrap();
        let b = serde_json::to_value(q).unwrap();
        for (k, v) in a.as_object().unwrap() {
            let (x, y) = (v.as_f64().unwrap(), b[k].as_f64().unwrap());
            assert!(rel(x, y) <= 2.0 * f64::EPSILON, "{k}: {x} vs {y}");
        }
    }

    #[test]
    fn pump_power_conversion() {
        let kappa = mhz(4.0);
        let omega = power_to_rabi(5.87e-11, kappa, 1064e-9).unwrap();
        assert!(rel(omega, mhz(20.0)) < 5e-3, "{}", to_mhz(omega));
        assert_eq!(power_to_rabi(0.0, kappa, 1064e-9).unwrap(), 0.0);
        let o1 = power_to_rabi(1e-9, kappa, 1064e-9).unwrap();
        let o4 = power_to_rabi(4e-9, kappa, 1064e-9).unwrap();
        assert!(rel(o4, 2.0 * o1) < 1e-15);
        let p = rabi_to_power(mhz(20.0), kappa, 1064e-9).unwrap();
        assert!(rel(p, 5.87e-11) < 5e-3, "{p}");
        assert_eq!(rabi_to_power(0.0, kappa, 1064e-9).unwrap(), 0.0);
        assert!(power_to_rabi(1e-9, 0.0, 1064e-9).is_err());
        assert!(power_to_rabi(1e-9, kappa, -1.0).is_err());
        assert!(rabi_to_power(1.0, kappa, 0.0).is_err());
    }

    #[test]
    fn presets_match_figure_values() {
        let a = preset(PresetId::Fig2a);
        assert_eq!(a.g1, mhz(8.0));
        assert_eq!(a.gamma_m, mhz(100.0) / 6700.0);
        assert_eq!(preset(PresetId::Fig3d).g, 0.0);
        assert_eq!(preset(PresetId::Fig2c).g1, mhz(4.0));
        assert_eq!(preset(PresetId::Fig2e).g2, mhz(4.0));
        assert_eq!(preset(PresetId::Fig3b).g2, 0.0);
        assert_eq!(preset(PresetId::Fig4).g1, mhz(8.0));
        for id in PresetId::ALL {
            let p = preset(id);
            p.validate().unwrap();
            assert!(p.weak_probe());
            assert_eq!(id.as_str().parse::<PresetId>().unwrap(), id);
        }
        assert!("fig9".parse::<PresetId>().is_err());
    }

    #[test]
    fn weak_probe_flag() {
        let mut p = preset(PresetId::Fig2a);
        p.eps_p = 0.5 * p.omega_l;
        assert!(p.validate().is_ok());
        assert!(!p.weak_probe());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn power_rabi_inverse(exp in -15.0f64..-3.0, kappa_mhz in 0.1f64..50.0) {
                let p = 10f64.powf(exp);
                let kappa = mhz(kappa_mhz);
                let back = rabi_to_power(power_to_rabi(p, kappa, 1064e-9).unwrap(), kappa, 1064e-9).unwrap();
                prop_assert!(((back - p) / p).abs() < 1e-12);
            }

            #[test]
            fn power_to_rabi_increasing(a in 0.0f64..1e-6, b in 0.0f64..1e-6) {
                prop_assume!(a < b);
                let k = mhz(4.0);
                prop_assert!(power_to_rabi(a, k, 1064e-9).unwrap() < power_to_rabi(b, k, 1064e-9).unwrap());
            }
        }
    }
}
