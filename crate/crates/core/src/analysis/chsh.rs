//! CHSH test from correlation functions.
//!
//! `E(θs, θi)` is assembled from the four orthogonal-projector coincidence
//! probabilities, and `S = E(θs,θi) + E(θs',θi') + E(θs,θi') − E(θs',θi)`.
//! All angles are Bloch-plane analyzer parameters in degrees.

use serde::{Deserialize, Serialize};

use crate::counts::{fringe_probability, CountRecord, Setting};
use crate::polcalc::PolState;
use crate::{Error, Result};

pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshAngles {
    pub theta_s: f64,
    pub theta_s_prime: f64,
    pub theta_i: f64,
    pub theta_i_prime: f64,
}

impl Default for ChshAngles {
    /// Maximizes `S` for `|Φ+⟩` under the sign pattern above.
    fn default() -> Self {
        Self {
            theta_s: 0.0,
            theta_s_prime: 90.0,
            theta_i: -45.0,
            theta_i_prime: 45.0,
        }
    }
}

impl ChshAngles {
    /// The four `(θs, θi)` pairs with their sign in `S`.
    pub fn terms(&self) -> [(f64, f64, f64); 4] {
        [
            (self.theta_s, self.theta_i, 1.0),
            (self.theta_s_prime, self.theta_i_prime, 1.0),
            (self.theta_s, self.theta_i_prime, 1.0),
            (self.theta_s_prime, self.theta_i, -1.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub angles: ChshAngles,
    pub s: f64,
    pub sigma: Option<f64>,
    /// `(S − 2)/σ` when σ is known.
    pub sigmas_above_2: Option<f64>,
}

impl ChshResult {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self.sigmas_above_2 = if sigma > 0.0 {
            Some((self.s - 2.0) / sigma)
        } else {
            None
        };
        self
    }
}

/// Correlation `p(a,b) + p(a⊥,b⊥) − p(a⊥,b) − p(a,b⊥)`.
pub fn chsh_e(rho: &PolState, theta_s: f64, theta_i: f64) -> Result<f64> {
    let p = |a: f64, b: f64| fringe_probability(rho, a, b);
    let e = p(theta_s, theta_i)? + p(theta_s + 180.0, theta_i + 180.0)?
        - p(theta_s + 180.0, theta_i)?
        - p(theta_s, theta_i + 180.0)?;
    Ok(e)
}

pub fn chsh_s(rho: &PolState, angles: &ChshAngles) -> Result<ChshResult> {
    let mut s = 0.0;
    for (a, b, sign) in angles.terms() {
        s += sign * chsh_e(rho, a, b)?;
    }
    Ok(ChshResult {
        angles: *angles,
        s,
        sigma: None,
        sigmas_above_2: None,
    })
}

/// The 16 analyzer settings needed to estimate `S` from counts: for each
/// term, `(a,b)`, `(a⊥,b⊥)`, `(a⊥,b)`, `(a,b⊥)`.
pub fn chsh_settings(angles: &ChshAngles) -> Vec<Setting> {
    angles
        .terms()
        .iter()
        .flat_map(|&(a, b, _)| {
            [
                (a, b),
                (a + 180.0, b + 180.0),
                (a + 180.0, b),
                (a, b + 180.0),
            ]
            .into_iter()
            .map(|(s, i)| Setting::bloch(s, i).expect("finite angles"))
        })
        .collect()
}

/// `S` estimated from coincidence counts of the [`chsh_settings`] records.
pub fn chsh_from_records(records: &[CountRecord], angles: &ChshAngles) -> Result<f64> {
    let settings = chsh_settings(angles);
    let rate = |s: &Setting| -> Result<f64> {
        records
            .iter()
            .find(|r| &r.setting == s)
            .map(|r| r.n_coinc as f64 / r.duration_s)
            .ok_or_else(|| Error::Config(format!("missing CHSH setting {s:?}")))
    };
    let mut s_value = 0.0;
    for (term, chunk) in angles.terms().iter().zip(settings.chunks(4)) {
        let n = chunk.iter().map(rate).collect::<Result<Vec<f64>>>()?;
        let total: f64 = n.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroCount("CHSH term"));
        }
        s_value += term.2 * (n[0] + n[1] - n[2] - n[3]) / total;
    }
    Ok(s_value)
}

/// Grid search over all four analyzer angles (step `step_deg`) for the
/// largest `S`.
pub fn optimize_angles(rho: &PolState, step_deg: f64) -> Result<ChshResult> {
    if !(step_deg > 0.0) || 360.0 / step_deg > 720.0 {
        return Err(Error::OutOfRange {
            name: "step_deg",
            value: step_deg,
        });
    }
    let n = (360.0 / step_deg).round() as usize;
    let grid: Vec<f64> = (0..n).map(|k| k as f64 * step_deg).collect();
    let mut table = vec![0.0; n * n];
    for (a, &ta) in grid.iter().enumerate() {
        for (b, &tb) in grid.iter().enumerate() {
            table[a * n + b] = chsh_e(rho, ta, tb)?;
        }
    }
    let e = |a: usize, b: usize| table[a * n + b];
    let mut best = (f64::MIN, 0, 0, 0, 0);
    for s in 0..n {
        for sp in 0..n {
            for i in 0..n {
                let fixed = e(s, i) - e(sp, i);
                for ip in 0..n {
                    let v = fixed + e(sp, ip) + e(s, ip);
                    if v > best.0 {
                        best = (v, s, sp, i, ip);
                    }
                }
            }
        }
    }
    let angles = ChshAngles {
        theta_s: grid[best.1],
        theta_s_prime: grid[best.2],
        theta_i: grid[best.3],
        theta_i_prime: grid[best.4],
    };
    chsh_s(rho, &angles)
}
