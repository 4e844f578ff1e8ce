//! Unweighted least-squares fits for power sweeps and two-photon fringes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::polcalc::AngleConvention;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

/// Fringe fit `C(θ) = A + B·cos(2k(θ − θ0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinFit {
    pub offset: f64,
    pub amplitude: f64,
    /// θ0, in the unit of the fitted angles.
    pub phase_deg: f64,
    pub c_max: f64,
    pub c_min: f64,
    pub visibility: f64,
    pub convention: AngleConvention,
}

impl SinFit {
    pub fn eval(&self, theta_deg: f64) -> f64 {
        let k = self.convention.fringe_k();
        self.offset + self.amplitude * (2.0 * k * (theta_deg - self.phase_deg).to_radians()).cos()
    }
}

fn ssr(angles: &[f64], counts: &[f64], a: f64, b: f64, theta0: f64, k: f64) -> f64 {
    angles
        .iter()
        .zip(counts)
        .map(|(t, c)| (c - a - b * (2.0 * k * (t - theta0).to_radians()).cos()).powi(2))
        .sum()
}

/// Least-squares fringe fit with the period fixed by `convention`.
///
/// Solves the linearized model `A + b₁cos(2kθ) + b₂sin(2kθ)` exactly, then
/// takes one Gauss-Newton step on `(A, B, θ0)`, kept only if it lowers the
/// residual.
pub fn sin_fit(angles_deg: &[f64], counts: &[f64], convention: AngleConvention) -> Result<SinFit> {
    if angles_deg.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: angles_deg.len(),
            got: counts.len(),
        });
    }
    let k = convention.fringe_k();
    let period = 180.0 / k;
    let mut phases: Vec<f64> = angles_deg.iter().map(|a| a.rem_euclid(period)).collect();
    phases.sort_by(f64::total_cmp);
    phases.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if phases.len() < 4 {
        return Err(Error::DegenerateFit("need at least four distinct angles"));
    }

    let n = angles_deg.len();
    let design = DMatrix::from_fn(n, 3, |r, c| {
        let x = 2.0 * k * angles_deg[r].to_radians();
        match c {
            0 => 1.0,
            1 => x.cos(),
            _ => x.sin(),
        }
    });
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-10 * sv.max() {
        return Err(Error::DegenerateFit("singular design matrix"));
    }
    let y = DVector::from_column_slice(counts);
    let beta = svd
        .solve(&y, 1e-14)
        .map_err(|_| Error::DegenerateFit("least-squares solve failed"))?;
    let mut a = beta[0];
    let mut b = beta[1].hypot(beta[2]);
    let mut theta0 = beta[2].atan2(beta[1]).to_degrees() / (2.0 * k);

    // Gauss-Newton refinement in the nonlinear parameters.
    let jac = DMatrix::from_fn(n, 3, |r, c| {
        let x = 2.0 * k * (angles_deg[r] - theta0).to_radians();
        match c {
            0 => 1.0,
            1 => x.cos(),
            _ => 2.0 * k * b * x.sin() * std::f64::consts::PI / 180.0,
        }
    });
    let resid = DVector::from_fn(n, |r, _| {
        counts[r] - a - b * (2.0 * k * (angles_deg[r] - theta0).to_radians()).cos()
    });
    if let Ok(step) = jac.svd(true, true).solve(&resid, 1e-12) {
        let before = ssr(angles_deg, counts, a, b, theta0, k);
        let (a1, b1, t1) = (a + step[0], b + step[1], theta0 + step[2]);
        if ssr(angles_deg, counts, a1, b1, t1, k) < before {
            (a, b, theta0) = (a1, b1, t1);
        }
    }
    if b < 0.0 {
        b = -b;
        theta0 += period / 2.0;
    }
    theta0 = theta0.rem_euclid(period);
    if !(a > 0.0) {
        return Err(Error::DegenerateFit("non-positive mean count"));
    }
    Ok(SinFit {
        offset: a,
        amplitude: b,
        phase_deg: theta0,
        c_max: a + b,
        c_min: a - b,
        visibility: b / a,
        convention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_examples() {
        let xs: Vec<f64> = (1..=10).map(|k| k as f64 * 0.7).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3e4 * x).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 3e4).abs() < 1e-8);
        assert!(f.intercept.abs() < 1e-8);
        assert!((f.r2 - 1.0).abs() < 1e-12);

        let f = linear_fit(&[1.0, 3.0], &[2.0, 8.0]).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert_eq!(f.r2, 1.0);

        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[2.0, 2.0], &[1.0, 3.0]).is_err());
        assert!(linear_fit(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn sin_fit_noiseless_cosine() {
        let angles: Vec<f64> = (0..19).map(|k| 10.0 * k as f64).collect();
        let counts: Vec<f64> = angles
            .iter()
            .map(|t| 100.0 * (1.0 + 0.98 * (t - 37.0f64).to_radians().cos()))
            .collect();
        let f = sin_fit(&angles, &counts, AngleConvention::Bloch).unwrap();
        assert!((f.visibility - 0.98).abs() < 1e-9);
        assert!((f.phase_deg - 37.0).abs() < 1e-9);
        assert!((f.offset - 100.0).abs() / 100.0 < 1e-9);
    }

    #[test]
    fn sin_fit_recovers_planted_parameters() {
        for &(a, b, t0, conv) in &[
            (5e3, 4.1e3, 12.5, AngleConvention::Hwp),
            (2.0, 1.0, 80.0, AngleConvention::Hwp),
            (7.5e4, 7.4e4, 300.0, AngleConvention::Bloch),
        ] {
            let k: f64 = conv.fringe_k();
            let angles: Vec<f64> = (0..19).map(|j| 10.0 * j as f64).collect();
            let counts: Vec<f64> = angles
                .iter()
                .map(|t| a + b * (2.0 * k * (t - t0)).to_radians().cos())
                .collect();
            let f = sin_fit(&angles, &counts, conv).unwrap();
            assert!(((f.offset - a) / a).abs() < 1e-9);
            assert!(((f.amplitude - b) / b).abs() < 1e-9);
            let period = 180.0 / k;
            let dt = (f.phase_deg - t0).rem_euclid(period);
            assert!(
                dt.min(period - dt) < 1e-9 * period,
                "{} vs {t0}",
                f.phase_deg
            );
            for t in &angles {
                assert!(
                    (f.eval(*t) - (a + b * (2.0 * k * (t - t0)).to_radians().cos())).abs() < 1e-6
                );
            }
        }
    }

    #[test]
    fn sin_fit_rejects_degenerate_designs() {
        let angles = [0.0, 90.0, 180.0];
        assert!(sin_fit(&angles, &[1.0, 2.0, 3.0], AngleConvention::Bloch).is_err());
        // four angles, but only two distinct phases in HWP units (period 90°)
        let angles = [0.0, 45.0, 90.0, 135.0];
        assert!(sin_fit(&angles, &[1.0, 2.0, 1.0, 2.0], AngleConvention::Hwp).is_err());
        assert!(sin_fit(&[0.0, 1.0], &[1.0], AngleConvention::Bloch).is_err());
    }
}
