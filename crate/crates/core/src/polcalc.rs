//! Exact polarization/path calculus over a handful of two-level modes.
//!
//! Wave-plate conventions: the fast axis at angle 0 is horizontal,
//! `hwp(h) = [[cos 2h, sin 2h], [sin 2h, -cos 2h]]` and
//! `qwp(q) = R(q) · diag(1, -i) · R(-q)` with `R` the ordinary rotation.
//! With these, `hwp(22.5°)|H⟩ = |D⟩`, `qwp(45°)|H⟩ ∝ |R⟩` and
//! `qwp(h)² = hwp(h)`.
//!
//! Analyzer angles come in two flavours. The Bloch-plane parameter θ gives
//! `cos(θ/2)|H⟩ + sin(θ/2)|V⟩`; the physical half-wave-plate angle that
//! rotates `|H⟩` onto that state is θ/4 ([`bloch_to_hwp`]).
//!
//! Global phases are never stripped. Compare pure states with
//! [`PolState::overlap`] magnitudes.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for exact algebra.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance on the smallest eigenvalue of a density matrix.
pub const EIGEN_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Pure(CVector),
    Mixed(CMatrix),
}

/// A pure or mixed state over one or more two-level modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolState {
    dims: Vec<usize>,
    data: StateData,
}

fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d != 2) {
        return Err(Error::InvalidState(format!(
            "mode dimensions must all be 2, got {dims:?}"
        )));
    }
    Ok(())
}

/// Largest entrywise deviation of `m` from its adjoint.
fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(m + m†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

impl PolState {
    /// Pure state from amplitudes. The squared norm must be 1 within 1e-12.
    pub fn pure(dims: Vec<usize>, amps: CVector) -> Result<Self> {
        check_dims(&dims)?;
        let n = total_dim(&dims);
        if amps.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: amps.len(),
            });
        }
        let norm2 = amps.norm_squared();
        if (norm2 - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm2} != 1")));
        }
        Ok(Self {
            dims,
            data: StateData::Pure(amps),
        })
    }

    /// Pure state from unnormalized amplitudes.
    pub fn pure_normalized(dims: Vec<usize>, amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::pure(dims, amps.unscale(norm))
    }

    /// Mixed state. Checks Hermiticity and unit trace within 1e-12 and a
    /// smallest eigenvalue no lower than -1e-10.
    pub fn mixed(dims: Vec<usize>, rho: CMatrix) -> Result<Self> {
        check_dims(&dims)?;
        let n = total_dim(&dims);
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rho.nrows(),
            });
        }
        let herm = hermitian_defect(&rho);
        if herm > EXACT_TOL {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:e})")));
        }
        let tr = trace(&rho);
        if (tr.re - 1.0).abs() > EXACT_TOL || tr.im.abs() > EXACT_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_ev = hermitian_eigenvalues(&rho)[0];
        if min_ev < -EIGEN_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(Self {
            dims,
            data: StateData::Mixed(rho),
        })
    }

    /// Mixed state from a matrix that is Hermitian and trace-one up to
    /// accumulated rounding: symmetrizes and rescales before validating.
    pub fn mixed_normalized(dims: Vec<usize>, rho: CMatrix) -> Result<Self> {
        let h = hermitize(&rho);
        let tr = trace(&h).re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState(format!("trace {tr} not positive")));
        }
        Self::mixed(dims, h.unscale(tr))
    }

    pub fn qubit(a: C64, b: C64) -> Self {
        Self::pure_normalized(vec![2], CVector::from_vec(vec![a, b])).expect("nonzero qubit")
    }

    pub fn h() -> Self {
        Self::qubit(ONE, ZERO)
    }

    pub fn v() -> Self {
        Self::qubit(ZERO, ONE)
    }

    pub fn d() -> Self {
        Self::qubit(ONE, ONE)
    }

    pub fn a() -> Self {
        Self::qubit(ONE, -ONE)
    }

    pub fn r() -> Self {
        Self::qubit(ONE, I)
    }

    pub fn l() -> Self {
        Self::qubit(ONE, -I)
    }

    /// `I/d` over the given modes.
    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let n = total_dim(&dims);
        Self::mixed(dims, CMatrix::identity(n, n).unscale(n as f64))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        total_dim(&self.dims)
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Mixed(_) => None,
        }
    }

    /// Density matrix (`|ψ⟩⟨ψ|` for pure states).
    pub fn density(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Mixed(m) => m.clone(),
        }
    }

    pub fn to_mixed(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            data: StateData::Mixed(self.density()),
        }
    }

    /// `⟨self|other⟩` for two pure states.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        let (StateData::Pure(a), StateData::Pure(b)) = (&self.data, &other.data) else {
            return Err(Error::InvalidState("overlap needs two pure states".into()));
        };
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(a.dotc(b))
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 1.0,
            StateData::Mixed(m) => trace(&(m * m)).re,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.density())
    }

    /// `self ⊗ other`; the result is pure only when both factors are.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let data = match (&self.data, &other.data) {
            (StateData::Pure(a), StateData::Pure(b)) => StateData::Pure(a.kronecker(b)),
            _ => StateData::Mixed(kron(&self.density(), &other.density())),
        };
        Self { dims, data }
    }
}

/// A unitary operator over one or more two-level modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    dims: Vec<usize>,
    mat: CMatrix,
}

/// Single-mode unitary.
pub type Unitary2 = Unitary;
/// Two-mode unitary.
pub type Unitary4 = Unitary;

impl Unitary {
    /// Checks `U†U = I` within 1e-12.
    pub fn new(dims: Vec<usize>, mat: CMatrix) -> Result<Self> {
        check_dims(&dims)?;
        let n = total_dim(&dims);
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mat.nrows(),
            });
        }
        let defect = max_abs(&(mat.adjoint() * &mat - CMatrix::identity(n, n)));
        if defect > EXACT_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { dims, mat })
    }

    fn single(m: [[C64; 2]; 2]) -> Self {
        let mat = CMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
        Self::new(vec![2], mat).expect("2x2 unitary")
    }

    pub fn identity(modes: usize) -> Self {
        let n = 1usize << modes;
        Self {
            dims: vec![2; modes],
            mat: CMatrix::identity(n, n),
        }
    }

    pub fn pauli_x() -> Self {
        Self::single([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::single([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::single([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dagger(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: self.mat.adjoint(),
        }
    }

    /// `self · other` (apply `other` first).
    pub fn then_after(&self, other: &Self) -> Result<Self> {
        if self.mat.nrows() != other.mat.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.mat.nrows(),
                got: other.mat.nrows(),
            });
        }
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            mat: kron(&self.mat, &other.mat),
        }
    }

    /// `|⟨·⟩|` overlap normalized by dimension: 1 iff equal up to a global phase.
    pub fn phase_insensitive_overlap(&self, other: &Self) -> f64 {
        let n = self.mat.nrows() as f64;
        trace(&(self.mat.adjoint() * &other.mat)).norm() / n
    }
}

fn rotation(rad: f64) -> CMatrix {
    let (s, c) = rad.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c.into(), (-s).into(), s.into(), c.into()])
}

/// Half-wave plate with its fast axis at `angle_deg` from horizontal.
pub fn hwp(angle_deg: f64) -> Unitary2 {
    let (s, c) = (2.0 * angle_deg.to_radians()).sin_cos();
    Unitary {
        dims: vec![2],
        mat: CMatrix::from_row_slice(2, 2, &[c.into(), s.into(), s.into(), (-c).into()]),
    }
}

/// Quarter-wave plate with its fast axis at `angle_deg` from horizontal.
pub fn qwp(angle_deg: f64) -> Unitary2 {
    let q = angle_deg.to_radians();
    let retarder = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -I]);
    Unitary {
        dims: vec![2],
        mat: rotation(q) * retarder * rotation(-q),
    }
}

/// `cos(θ/2)|H⟩ + sin(θ/2)|V⟩` for the Bloch-plane parameter θ in degrees.
pub fn analyzer_state(theta_deg: f64) -> PolState {
    let (s, c) = (theta_deg.to_radians() / 2.0).sin_cos();
    PolState {
        dims: vec![2],
        data: StateData::Pure(CVector::from_vec(vec![c.into(), s.into()])),
    }
}

/// Physical half-wave-plate angle that rotates `|H⟩` onto `analyzer_state(θ)`.
pub fn bloch_to_hwp(theta_deg: f64) -> f64 {
    theta_deg / 4.0
}

pub fn hwp_to_bloch(hwp_deg: f64) -> f64 {
    hwp_deg * 4.0
}

/// Unit of an analyzer angle: the Bloch-plane parameter θ or the physical
/// half-wave-plate angle θ/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleConvention {
    Bloch,
    Hwp,
}

impl AngleConvention {
    pub fn to_bloch(self, deg: f64) -> f64 {
        match self {
            AngleConvention::Bloch => deg,
            AngleConvention::Hwp => hwp_to_bloch(deg),
        }
    }

    pub fn from_bloch(self, deg: f64) -> f64 {
        match self {
            AngleConvention::Bloch => deg,
            AngleConvention::Hwp => bloch_to_hwp(deg),
        }
    }

    /// Two-photon fringes go as `cos(2k·Δθ)` in this unit.
    pub fn fringe_k(self) -> f64 {
        match self {
            AngleConvention::Bloch => 0.5,
            AngleConvention::Hwp => 2.0,
        }
    }
}

/// A pair of Bloch-plane analyzer angles in degrees, reduced to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub theta_s: f64,
    pub theta_i: f64,
}

impl AnalyzerSetting {
    pub fn new(theta_s: f64, theta_i: f64) -> Result<Self> {
        for (name, v) in [("theta_s", theta_s), ("theta_i", theta_i)] {
            if !v.is_finite() {
                return Err(Error::OutOfRange { name, value: v });
            }
        }
        Ok(Self {
            theta_s: theta_s.rem_euclid(360.0),
            theta_i: theta_i.rem_euclid(360.0),
        })
    }
}

/// The six cardinal polarization states used for tomography and as
/// teleportation inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cardinal {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Cardinal {
    pub const ALL: [Cardinal; 6] = [
        Cardinal::H,
        Cardinal::V,
        Cardinal::D,
        Cardinal::A,
        Cardinal::R,
        Cardinal::L,
    ];

    pub fn state(self) -> PolState {
        match self {
            Cardinal::H => PolState::h(),
            Cardinal::V => PolState::v(),
            Cardinal::D => PolState::d(),
            Cardinal::A => PolState::a(),
            Cardinal::R => PolState::r(),
            Cardinal::L => PolState::l(),
        }
    }

    /// The state orthogonal to this one.
    pub fn orthogonal(self) -> Cardinal {
        match self {
            Cardinal::H => Cardinal::V,
            Cardinal::V => Cardinal::H,
            Cardinal::D => Cardinal::A,
            Cardinal::A => Cardinal::D,
            Cardinal::R => Cardinal::L,
            Cardinal::L => Cardinal::R,
        }
    }

    /// `(hwp, qwp)` angles in degrees of an analyzer (QWP, then HWP, then a
    /// PBS transmitting H) that projects onto this state.
    pub fn analyzer_plates(self) -> (f64, f64) {
        match self {
            Cardinal::H => (0.0, 0.0),
            Cardinal::V => (45.0, 0.0),
            Cardinal::D => (22.5, 45.0),
            Cardinal::A => (-22.5, 45.0),
            Cardinal::R => (22.5, 0.0),
            Cardinal::L => (-22.5, 0.0),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Cardinal::H => 'H',
            Cardinal::V => 'V',
            Cardinal::D => 'D',
            Cardinal::A => 'A',
            Cardinal::R => 'R',
            Cardinal::L => 'L',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_char() == c)
    }
}

impl fmt::Display for Cardinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Cardinal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next().and_then(Cardinal::from_char), chars.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// State projected onto by an analyzer made of a QWP at `qwp_deg`, a HWP at
/// `hwp_deg` and a PBS transmitting H: `(HWP·QWP)† |H⟩`.
pub fn analyzer_from_plates(hwp_deg: f64, qwp_deg: f64) -> PolState {
    let u = hwp(hwp_deg).then_after(&qwp(qwp_deg)).expect("2x2");
    apply(&u.dagger(), &PolState::h()).expect("2x2")
}

/// State prepared from `|H⟩` by a QWP at `qwp_deg` followed by a HWP at
/// `hwp_deg`.
pub fn prepared_by_plates(hwp_deg: f64, qwp_deg: f64) -> PolState {
    let u = hwp(hwp_deg).then_after(&qwp(qwp_deg)).expect("2x2");
    apply(&u, &PolState::h()).expect("2x2")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellLabel {
    #[serde(rename = "Phi+")]
    PhiPlus,
    #[serde(rename = "Phi-")]
    PhiMinus,
    #[serde(rename = "Psi+")]
    PsiPlus,
    #[serde(rename = "Psi-")]
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "Phi+",
            BellLabel::PhiMinus => "Phi-",
            BellLabel::PsiPlus => "Psi+",
            BellLabel::PsiMinus => "Psi-",
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Phi+" | "phi+" | "Φ+" | "PhiPlus" => Ok(BellLabel::PhiPlus),
            "Phi-" | "phi-" | "Φ-" | "Φ−" | "PhiMinus" => Ok(BellLabel::PhiMinus),
            "Psi+" | "psi+" | "Ψ+" | "PsiPlus" => Ok(BellLabel::PsiPlus),
            "Psi-" | "psi-" | "Ψ-" | "Ψ−" | "PsiMinus" => Ok(BellLabel::PsiMinus),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// The four Bell states on two qubits, basis order `|HH⟩, |HV⟩, |VH⟩, |VV⟩`.
pub fn bell(label: BellLabel) -> PolState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match label {
        BellLabel::PhiPlus => [h, 0.0, 0.0, h],
        BellLabel::PhiMinus => [h, 0.0, 0.0, -h],
        BellLabel::PsiPlus => [0.0, h, h, 0.0],
        BellLabel::PsiMinus => [0.0, h, -h, 0.0],
    };
    PolState {
        dims: vec![2, 2],
        data: StateData::Pure(CVector::from_iterator(4, amps.iter().map(|&x| x.into()))),
    }
}

/// Partial trace keeping the listed modes (in ascending order).
pub fn partial_trace(rho: &PolState, keep: &[usize]) -> Result<PolState> {
    let (kept_dims, out) = partial_trace_matrix(&rho.density(), rho.dims(), keep)?;
    PolState::mixed_normalized(kept_dims, out)
}

/// Partial trace of an arbitrary operator on modes of sizes `dims`, without
/// normalization. Returns the kept dimensions with the reduced operator.
pub fn partial_trace_matrix(
    full: &CMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<(Vec<usize>, CMatrix)> {
    let n_modes = dims.len();
    if full.nrows() != total_dim(dims) || full.ncols() != total_dim(dims) {
        return Err(Error::DimensionMismatch {
            expected: total_dim(dims),
            got: full.nrows(),
        });
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.iter().any(|&k| k >= n_modes) {
        return Err(Error::InvalidState(format!(
            "cannot keep modes {keep:?} of a {n_modes}-mode state"
        )));
    }
    let traced: Vec<usize> = (0..n_modes).filter(|m| !keep.contains(m)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let nk = total_dim(&kept_dims);
    let nt = total_dim(&traced_dims);

    // digits of a flat index, most significant mode first
    let index_of = |kept: usize, tr: usize| -> usize {
        let mut digits = vec![0usize; n_modes];
        let mut k = kept;
        for (pos, &m) in keep.iter().enumerate().rev() {
            digits[m] = k % kept_dims[pos];
            k /= kept_dims[pos];
        }
        let mut t = tr;
        for (pos, &m) in traced.iter().enumerate().rev() {
            digits[m] = t % traced_dims[pos];
            t /= traced_dims[pos];
        }
        digits
            .iter()
            .zip(dims)
            .fold(0usize, |acc, (&d, &size)| acc * size + d)
    };

    let mut out = CMatrix::zeros(nk, nk);
    for a in 0..nk {
        for b in 0..nk {
            let mut acc = ZERO;
            for t in 0..nt {
                acc += full[(index_of(a, t), index_of(b, t))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok((kept_dims, out))
}

/// `U ρ U†` (or `U|ψ⟩`).
pub fn apply(u: &Unitary, s: &PolState) -> Result<PolState> {
    if u.mat.nrows() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: u.mat.nrows(),
        });
    }
    let data = match &s.data {
        StateData::Pure(v) => StateData::Pure(&u.mat * v),
        StateData::Mixed(m) => StateData::Mixed(&u.mat * m * u.mat.adjoint()),
    };
    Ok(PolState {
        dims: s.dims.clone(),
        data,
    })
}

/// `Tr(ρ |ψ⟩⟨ψ|)` for pure `ψ`, computed as `⟨ψ|ρ|ψ⟩`.
pub fn fidelity(rho: &PolState, psi: &PolState) -> Result<f64> {
    let Some(v) = psi.amplitudes() else {
        return Err(Error::InvalidState("fidelity target must be pure".into()));
    };
    if rho.dim() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: v.len(),
        });
    }
    let f = match &rho.data {
        StateData::Pure(a) => a.dotc(v).norm_sqr(),
        StateData::Mixed(m) => v.dotc(&(m * v)).re,
    };
    Ok(clip_unit(f))
}

/// Clamps values within 1e-10 outside `[0, 1]`; leaves others untouched.
pub(crate) fn clip_unit(f: f64) -> f64 {
    if (-EIGEN_TOL..0.0).contains(&f) {
        0.0
    } else if f > 1.0 && f <= 1.0 + EIGEN_TOL {
        1.0
    } else {
        f
    }
}

/// Trace distance `½ Tr|a − b|`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&hermitize(&(a - b)))
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

/// Projector `|ψ⟩⟨ψ|` of a pure state.
pub fn projector(psi: &PolState) -> CMatrix {
    psi.density()
}
