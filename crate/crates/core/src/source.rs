//! Physical model of the Sagnac source: the ideal `|Φ+⟩` output plus pump
//! imbalance, relative phase, dephasing and a white-noise admixture that
//! stands in for multi-pair emission.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::polcalc::{bell, BellLabel, CMatrix, CVector, PolState, C64};
use crate::{Error, Result};

/// Coincidence window used when none is configured.
pub const DEFAULT_WINDOW_S: f64 = 1e-9;

fn default_window() -> f64 {
    DEFAULT_WINDOW_S
}

fn default_true() -> bool {
    true
}

/// Every physical knob of the source, its losses and its detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Pump power, mW.
    pub pump_power_mw: f64,
    /// Pair generation rate at the crystal, pairs/s/mW.
    pub pgr_per_mw: f64,
    /// Detected coincidence rate, pairs/s/mW (calibration cross-check only).
    pub coincidence_per_mw: f64,
    /// Total detection efficiency of the signal arm.
    pub eta_signal: f64,
    /// Total detection efficiency of the idler arm.
    pub eta_idler: f64,
    #[serde(default)]
    pub dark_signal: f64,
    #[serde(default)]
    pub dark_idler: f64,
    /// Coincidence window, s.
    #[serde(default = "default_window")]
    pub coincidence_window_s: f64,
    /// Whether expected coincidences include `N_s·N_i·τ` accidentals.
    #[serde(default = "default_true")]
    pub model_accidentals: bool,
    /// Pump-split imbalance α, radians: `cos(π/4+α)|HH⟩ + e^{iφ} sin(π/4+α)|VV⟩`.
    #[serde(default)]
    pub imbalance_alpha: f64,
    /// Relative phase φ, radians.
    #[serde(default)]
    pub phase_phi: f64,
    /// Factor on the HH–VV coherences.
    #[serde(default = "one")]
    pub dephasing_d: f64,
    /// Weight of the `I/4` admixture.
    #[serde(default)]
    pub white_noise_w: f64,
}

fn one() -> f64 {
    1.0
}

/// The `(α, φ, d, w)` noise parameters of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub alpha: f64,
    pub phi: f64,
    pub d: f64,
    pub w: f64,
}

impl NoiseModel {
    pub const IDEAL: NoiseModel = NoiseModel {
        alpha: 0.0,
        phi: 0.0,
        d: 1.0,
        w: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        check_finite("imbalance_alpha", self.alpha)?;
        check_finite("phase_phi", self.phi)?;
        if self.alpha.abs() > FRAC_PI_4 {
            return Err(Error::OutOfRange {
                name: "imbalance_alpha",
                value: self.alpha,
            });
        }
        check_unit("dephasing_d", self.d)?;
        check_unit("white_noise_w", self.w)
    }

    /// Fidelity of the resulting state to `|Φ+⟩`:
    /// `(1−w)(1 + d cos 2α cos φ)/2 + w/4`.
    pub fn fidelity_to_phi_plus(&self) -> f64 {
        (1.0 - self.w) * (1.0 + self.d * (2.0 * self.alpha).cos() * self.phi.cos()) / 2.0
            + self.w / 4.0
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

/// Product of independent transmission/coupling/detector efficiencies.
pub fn chain_efficiency(factors: &[f64]) -> Result<f64> {
    for &f in factors {
        check_unit("efficiency factor", f)?;
    }
    Ok(factors.iter().product())
}

impl SourceConfig {
    /// Reference calibration: PGR 8.2e5 and coincidences 3e4 pairs/s/mW,
    /// 19.1% symmetric efficiency, and all infidelity attributed to white
    /// noise with F = 0.985.
    pub fn reference() -> Self {
        let mut cfg = Self {
            pump_power_mw: 1.0,
            pgr_per_mw: 8.2e5,
            coincidence_per_mw: 3e4,
            eta_signal: 0.191,
            eta_idler: 0.191,
            dark_signal: 0.0,
            dark_idler: 0.0,
            coincidence_window_s: DEFAULT_WINDOW_S,
            model_accidentals: true,
            imbalance_alpha: 0.0,
            phase_phi: 0.0,
            dephasing_d: 1.0,
            white_noise_w: 0.0,
        };
        cfg.white_noise_w = cfg
            .white_noise_for_fidelity(0.985)
            .expect("preset fidelity reachable");
        cfg
    }

    /// Preset kinematics with every noise knob switched off.
    pub fn ideal() -> Self {
        Self {
            white_noise_w: 0.0,
            ..Self::reference()
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            alpha: self.imbalance_alpha,
            phi: self.phase_phi,
            d: self.dephasing_d,
            w: self.white_noise_w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_nonneg("pump_power_mw", self.pump_power_mw)?;
        check_nonneg("pgr_per_mw", self.pgr_per_mw)?;
        check_nonneg("coincidence_per_mw", self.coincidence_per_mw)?;
        check_unit("eta_signal", self.eta_signal)?;
        check_unit("eta_idler", self.eta_idler)?;
        check_nonneg("dark_signal", self.dark_signal)?;
        check_nonneg("dark_idler", self.dark_idler)?;
        if !(self.coincidence_window_s > 0.0) || !self.coincidence_window_s.is_finite() {
            return Err(Error::OutOfRange {
                name: "coincidence_window_s",
                value: self.coincidence_window_s,
            });
        }
        if self.coincidence_per_mw > self.pgr_per_mw {
            return Err(Error::OutOfRange {
                name: "coincidence_per_mw",
                value: self.coincidence_per_mw,
            });
        }
        self.noise().validate()
    }

    /// Pairs/s generated at the crystal for the configured pump power.
    pub fn pair_rate(&self) -> f64 {
        self.pgr_per_mw * self.pump_power_mw
    }

    /// White-noise weight that, with the other knobs fixed, yields the
    /// requested fidelity to `|Φ+⟩`.
    pub fn white_noise_for_fidelity(&self, target: f64) -> Result<f64> {
        let clean = NoiseModel {
            w: 0.0,
            ..self.noise()
        }
        .fidelity_to_phi_plus();
        if clean <= 0.25 {
            return Err(Error::OutOfRange {
                name: "target fidelity",
                value: target,
            });
        }
        let w = (clean - target) / (clean - 0.25);
        check_unit("white_noise_w", w).map_err(|_| Error::OutOfRange {
            name: "target fidelity",
            value: target,
        })?;
        Ok(w)
    }

    pub fn with_power(&self, pump_power_mw: f64) -> Self {
        Self {
            pump_power_mw,
            ..self.clone()
        }
    }
}

/// `(|HH⟩ + |VV⟩)/√2` on signal ⊗ idler polarization.
pub fn ideal_state() -> PolState {
    bell(BellLabel::PhiPlus)
}

/// `(1−w)·D_d[|ψ(α,φ)⟩⟨ψ(α,φ)|] + w·I/4`.
pub fn noisy_state(cfg: &SourceConfig) -> Result<PolState> {
    state_from_noise(&cfg.noise())
}

pub fn state_from_noise(noise: &NoiseModel) -> Result<PolState> {
    noise.validate()?;
    let (s, c) = (FRAC_PI_4 + noise.alpha).sin_cos();
    let mut amps = CVector::zeros(4);
    amps[0] = C64::new(c, 0.0);
    amps[3] = C64::from_polar(s, noise.phi);
    let mut rho = &amps * amps.adjoint();
    rho[(0, 3)] *= noise.d;
    rho[(3, 0)] *= noise.d;
    let rho = rho.scale(1.0 - noise.w) + CMatrix::identity(4, 4).scale(noise.w / 4.0);
    PolState::mixed_normalized(vec![2, 2], rho)
}

/// Accidental fraction `A/(C+A)` with `A = N_s·N_i·τ`.
pub fn accidental_weight(n_signal: f64, n_idler: f64, window_s: f64, coincidences: f64) -> f64 {
    let acc = n_signal * n_idler * window_s;
    if acc + coincidences <= 0.0 {
        0.0
    } else {
        acc / (coincidences + acc)
    }
}

/// White-noise weight implied by the accidental coincidence rate of `cfg`.
pub fn accidental_white_noise(cfg: &SourceConfig) -> f64 {
    let pairs = cfg.pair_rate();
    let n_s = pairs * cfg.eta_signal + cfg.dark_signal;
    let n_i = pairs * cfg.eta_idler + cfg.dark_idler;
    let true_c = pairs * cfg.eta_signal * cfg.eta_idler;
    accidental_weight(n_s, n_i, cfg.coincidence_window_s, true_c)
}
