//! Two-qubit polarization tomography.
//!
//! Linear inversion is a least-squares fit of the 16 Pauli-product
//! coefficients to the observed rates; it seeds the maximum-likelihood
//! search but need not be positive.
//!
//! The maximum-likelihood estimate parameterizes the unnormalized state as
//! `G = T†T` with `T` upper triangular (real diagonal, 16 real parameters),
//! so every iterate is positive semi-definite. The expected count of
//! setting `k` is `λ_k = t_k · Tr(G Π_k)` and the objective is the Poisson
//! log-likelihood `Σ n_k ln λ_k − λ_k`, maximized by BFGS ascent with an
//! Armijo backtracking line search.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::counts::{CountRecord, Setting};
use crate::polcalc::{
    fidelity, hermitian_eigenvalues, hermitize, kron, projector, trace, CMatrix, Cardinal,
    PolState, Unitary, C64,
};
use crate::{Error, Result};

/// One tomography setting: cardinal projections with the analyzer plate
/// angles that realize them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomoSetting {
    pub signal: Cardinal,
    pub idler: Cardinal,
    /// `(hwp, qwp)` degrees on the signal analyzer.
    pub signal_plates: (f64, f64),
    /// `(hwp, qwp)` degrees on the idler analyzer.
    pub idler_plates: (f64, f64),
}

impl TomoSetting {
    pub fn new(signal: Cardinal, idler: Cardinal) -> Self {
        Self {
            signal,
            idler,
            signal_plates: signal.analyzer_plates(),
            idler_plates: idler.analyzer_plates(),
        }
    }

    pub fn setting(&self) -> Setting {
        Setting::Basis {
            signal: self.signal,
            idler: self.idler,
        }
    }

    pub fn projector(&self) -> CMatrix {
        kron(
            &projector(&self.signal.state()),
            &projector(&self.idler.state()),
        )
    }
}

/// All 36 products of `{H, V, D, A, R, L}` on both photons.
pub fn tomo_settings() -> Vec<TomoSetting> {
    Cardinal::ALL
        .iter()
        .flat_map(|&s| Cardinal::ALL.iter().map(move |&i| TomoSetting::new(s, i)))
        .collect()
}

/// The minimal 16-setting informationally complete set.
pub fn tomo_settings_16() -> Vec<TomoSetting> {
    use Cardinal::*;
    [
        (H, H),
        (H, V),
        (V, V),
        (V, H),
        (R, H),
        (R, V),
        (D, V),
        (D, H),
        (D, R),
        (D, D),
        (R, D),
        (H, D),
        (V, D),
        (V, L),
        (H, L),
        (R, L),
    ]
    .into_iter()
    .map(|(s, i)| TomoSetting::new(s, i))
    .collect()
}

/// A coincidence count attached to the projector it was measured with.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub projector: CMatrix,
    pub duration_s: f64,
    pub counts: f64,
}

/// Converts count records; open settings carry no tomographic information
/// and are rejected.
pub fn observations_from_records(records: &[CountRecord]) -> Result<Vec<Observation>> {
    records
        .iter()
        .map(|r| match r.setting.states() {
            (Some(s), Some(i)) => Ok(Observation {
                projector: kron(&projector(&s), &projector(&i)),
                duration_s: r.duration_s,
                counts: r.n_coinc as f64,
            }),
            _ => Err(Error::InvalidState(
                "open analyzer setting in tomography data".into(),
            )),
        })
        .collect()
}

/// Noiseless observations: counts equal to their expectation values.
pub fn expected_observations(
    rho: &PolState,
    coincidence_rate: f64,
    settings: &[TomoSetting],
    duration_s: f64,
) -> Vec<Observation> {
    let m = rho.density();
    settings
        .iter()
        .map(|s| {
            let proj = s.projector();
            let p = trace(&(&m * &proj)).re.max(0.0);
            Observation {
                projector: proj,
                duration_s,
                counts: coincidence_rate * duration_s * p,
            }
        })
        .collect()
}

/// Hermitian basis `σ_a ⊗ σ_b`, `a, b ∈ {I, X, Y, Z}`.
fn pauli_basis() -> Vec<CMatrix> {
    let singles = [
        Unitary::identity(1).matrix().clone(),
        Unitary::pauli_x().matrix().clone(),
        Unitary::pauli_y().matrix().clone(),
        Unitary::pauli_z().matrix().clone(),
    ];
    singles
        .iter()
        .flat_map(|a| singles.iter().map(move |b| kron(a, b)))
        .collect()
}

/// Real design matrix `A[k][j] = t_k · Tr(Π_k B_j)`.
fn design(obs: &[Observation], basis: &[CMatrix]) -> DMatrix<f64> {
    DMatrix::from_fn(obs.len(), basis.len(), |k, j| {
        obs[k].duration_s * trace(&(&obs[k].projector * &basis[j])).re
    })
}

fn check_complete(obs: &[Observation]) -> Result<()> {
    let rank = design(obs, &pauli_basis()).rank(1e-9);
    if rank < 16 {
        return Err(Error::UnderComplete { rank });
    }
    if obs.iter().all(|o| o.counts == 0.0) {
        return Err(Error::ZeroCount("all tomography counts are zero"));
    }
    Ok(())
}

/// Unit-trace Hermitian estimate; `physical` is false when an eigenvalue is
/// below -1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInversion {
    pub rho: CMatrix,
    pub min_eigenvalue: f64,
    pub physical: bool,
}

pub fn linear_inversion(obs: &[Observation]) -> Result<LinearInversion> {
    check_complete(obs)?;
    let basis = pauli_basis();
    let a = design(obs, &basis);
    let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| o.counts));
    let coeffs = a
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|_| Error::DegenerateFit("tomography least squares"))?;
    let mut m = CMatrix::zeros(4, 4);
    for (c, b) in coeffs.iter().zip(&basis) {
        m += b.scale(*c);
    }
    let tr = trace(&m).re;
    if !(tr > 0.0) {
        return Err(Error::DegenerateFit("non-positive reconstructed intensity"));
    }
    let rho = hermitize(&m).unscale(tr);
    let min_eigenvalue = hermitian_eigenvalues(&rho)[0];
    Ok(LinearInversion {
        rho,
        min_eigenvalue,
        physical: min_eigenvalue >= -crate::polcalc::EIGEN_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MleInit {
    MaximallyMixed,
    LinearInversion,
    Density(CMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step gains less than this much log-likelihood.
    pub tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-9,
        }
    }
}

/// Reconstructed state with its figures of merit.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoResult {
    pub rho: PolState,
    pub fidelity_to_target: f64,
    /// Bootstrap standard deviation of the fidelity, when computed.
    pub fidelity_sigma: Option<f64>,
    pub purity: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after every accepted iteration, starting at the seed.
    pub log_likelihood_trace: Vec<f64>,
}

/// JSON form of a [`TomoResult`]; `rho` is row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoReport {
    pub rho: Vec<Vec<[f64; 2]>>,
    pub fidelity_to_target: f64,
    pub fidelity_sigma: Option<f64>,
    pub purity: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&TomoResult> for TomoReport {
    fn from(r: &TomoResult) -> Self {
        let m = r.rho.density();
        Self {
            rho: (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| [m[(i, j)].re, m[(i, j)].im])
                        .collect()
                })
                .collect(),
            fidelity_to_target: r.fidelity_to_target,
            fidelity_sigma: r.fidelity_sigma,
            purity: r.purity,
            log_likelihood: r.log_likelihood,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

impl TomoReport {
    pub fn density(&self) -> Result<PolState> {
        let n = self.rho.len();
        if n != 4 || self.rho.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: n,
            });
        }
        let m = CMatrix::from_fn(n, n, |i, j| C64::new(self.rho[i][j][0], self.rho[i][j][1]));
        PolState::mixed_normalized(vec![2, 2], m)
    }
}

pub fn mle_reconstruct(
    obs: &[Observation],
    init: MleInit,
    target: &PolState,
) -> Result<TomoResult> {
    mle_reconstruct_with(obs, init, target, MleOptions::default())
}

const DIM: usize = 4;
const N_PARAMS: usize = 16;

/// Upper-triangular `T` from its 16 real parameters: the 4 diagonal entries,
/// then the real and imaginary parts of each strictly upper entry.
fn unpack(x: &DVector<f64>) -> CMatrix {
    let mut t = CMatrix::zeros(DIM, DIM);
    for i in 0..DIM {
        t[(i, i)] = C64::new(x[i], 0.0);
    }
    let mut p = DIM;
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            t[(i, j)] = C64::new(x[p], x[p + 1]);
            p += 2;
        }
    }
    t
}

fn pack(t: &CMatrix) -> DVector<f64> {
    let mut x = DVector::zeros(N_PARAMS);
    for i in 0..DIM {
        x[i] = t[(i, i)].re;
    }
    let mut p = DIM;
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            x[p] = t[(i, j)].re;
            x[p + 1] = t[(i, j)].im;
            p += 2;
        }
    }
    x
}

struct Likelihood<'a> {
    obs: &'a [Observation],
    /// `Σ n ln n − n`, the offset between the reported and internal objective.
    offset: f64,
}

impl<'a> Likelihood<'a> {
    fn new(obs: &'a [Observation]) -> Self {
        let offset = obs
            .iter()
            .map(|o| {
                if o.counts > 0.0 {
                    o.counts * o.counts.ln() - o.counts
                } else {
                    0.0
                }
            })
            .sum();
        Self { obs, offset }
    }

    fn expected(&self, g: &CMatrix) -> Vec<f64> {
        self.obs
            .iter()
            .map(|o| o.duration_s * trace(&(g * &o.projector)).re)
            .collect()
    }

    /// `Σ n ln(λ/n) − λ + n`: the log-likelihood minus `Σ n ln n − n`,
    /// which keeps magnitudes small near the optimum.
    fn value(&self, x: &DVector<f64>) -> f64 {
        let t = unpack(x);
        let g = t.adjoint() * &t;
        let mut acc = 0.0;
        for (o, lam) in self.obs.iter().zip(self.expected(&g)) {
            if o.counts > 0.0 {
                if !(lam > 0.0) {
                    return f64::NEG_INFINITY;
                }
                acc += o.counts * (lam / o.counts).ln() - lam + o.counts;
            } else {
                acc -= lam;
            }
        }
        acc
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let t = unpack(x);
        let g = t.adjoint() * &t;
        let mut r = CMatrix::zeros(DIM, DIM);
        for (o, lam) in self.obs.iter().zip(self.expected(&g)) {
            let w = if o.counts > 0.0 { o.counts / lam } else { 0.0 } - 1.0;
            r += o.projector.scale(w * o.duration_s);
        }
        let m = &t * hermitize(&r);
        let mut grad = DVector::zeros(N_PARAMS);
        for i in 0..DIM {
            grad[i] = 2.0 * m[(i, i)].re;
        }
        let mut p = DIM;
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                grad[p] = 2.0 * m[(i, j)].re;
                grad[p + 1] = 2.0 * m[(i, j)].im;
                p += 2;
            }
        }
        grad
    }
}

/// Cholesky factor `T` (upper) with `T†T = G`, after flooring the spectrum
/// of `rho` so the seed lies strictly inside the cone.
fn seed_parameters(rho: &CMatrix, intensity: f64) -> Result<DVector<f64>> {
    let eig = hermitize(rho).symmetric_eigen();
    let floor = 1e-3;
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    let total: f64 = vals.iter().sum();
    let diag = CMatrix::from_diagonal(&vals.map(|v| C64::new(v / total * intensity, 0.0)));
    let g = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
    let chol = hermitize(&g)
        .cholesky()
        .ok_or_else(|| Error::InvalidState("seed state not positive definite".into()))?;
    Ok(pack(&chol.l().adjoint()))
}

pub fn mle_reconstruct_with(
    obs: &[Observation],
    init: MleInit,
    target: &PolState,
    opts: MleOptions,
) -> Result<TomoResult> {
    check_complete(obs)?;
    let seed_rho = match init {
        MleInit::MaximallyMixed => CMatrix::identity(DIM, DIM).unscale(DIM as f64),
        MleInit::LinearInversion => linear_inversion(obs)?.rho,
        MleInit::Density(m) => {
            if m.nrows() != DIM || m.ncols() != DIM {
                return Err(Error::DimensionMismatch {
                    expected: DIM,
                    got: m.nrows(),
                });
            }
            m
        }
    };
    // Intensity that matches the total expected count to the total observed.
    let per_unit: f64 = obs
        .iter()
        .map(|o| o.duration_s * trace(&(&seed_rho * &o.projector)).re)
        .sum();
    let total: f64 = obs.iter().map(|o| o.counts).sum();
    let intensity = total / per_unit.max(f64::MIN_POSITIVE);

    let lik = Likelihood::new(obs);
    let mut x = seed_parameters(&seed_rho, intensity)?;
    let mut f = lik.value(&x);
    let mut g = lik.gradient(&x);
    let mut history = vec![f];
    // Inverse-Hessian approximation of −L, seeded with a diagonal scale.
    let mut h_inv = DMatrix::<f64>::identity(N_PARAMS, N_PARAMS) / g.norm().max(1.0);
    let mut converged = false;
    let mut iterations = 0;
    let mut restarted = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        let mut dir = &h_inv * &g;
        if dir.dot(&g) <= 0.0 {
            h_inv = DMatrix::identity(N_PARAMS, N_PARAMS) / g.norm().max(1.0);
            dir = &h_inv * &g;
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let x_new = &x + &dir * step;
            let f_new = lik.value(&x_new);
            if f_new.is_finite() && f_new >= f + 1e-4 * step * slope {
                accepted = Some((x_new, f_new));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if restarted {
                // no ascent direction left at working precision
                converged = true;
                break;
            }
            restarted = true;
            h_inv = DMatrix::identity(N_PARAMS, N_PARAMS) / g.norm().max(1.0);
            continue;
        };
        restarted = false;
        let gain = f_new - f;
        let g_new = lik.gradient(&x_new);
        let s = &x_new - &x;
        // y is the gradient change of the minimized objective −L
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho_k = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(N_PARAMS, N_PARAMS);
            let left = &eye - (&s * y.transpose()) * rho_k;
            let right = &eye - (&y * s.transpose()) * rho_k;
            h_inv = &left * &h_inv * &right + (&s * s.transpose()) * rho_k;
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if gain < opts.tolerance {
            converged = true;
            break;
        }
    }

    let t = unpack(&x);
    let gmat = t.adjoint() * &t;
    let rho = PolState::mixed_normalized(vec![2, 2], gmat)?;
    let fid = fidelity(&rho, target)?;
    Ok(TomoResult {
        purity: rho.purity(),
        fidelity_to_target: fid,
        fidelity_sigma: None,
        log_likelihood: f + lik.offset,
        iterations,
        converged,
        log_likelihood_trace: history.iter().map(|v| v + lik.offset).collect(),
        rho,
    })
}
