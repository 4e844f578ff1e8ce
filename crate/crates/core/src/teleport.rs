//! Teleportation of the idler's polarization onto the signal photon using
//! the idler's path as the entanglement carrier.
//!
//! A beam displacer relabels idler `|H⟩ → path 0`, `|V⟩ → path 1`, leaving
//! the idler polarization in `|H⟩`, where the input state is then prepared.
//! The three-mode state is ordered signal-polarization ⊗ idler-path ⊗
//! idler-polarization. A Bell-state measurement on idler path ⊗
//! polarization with interference visibility `v` uses the projectors
//! `v·Π_b + (1−v)·diag(Π_b)`, i.e. the Bell coherences scaled by `v` and the
//! rest spread over the two underlying product projectors.
//!
//! A correction `U` for outcome `b` means the ideal signal output is
//! `U|φ⟩`; the reported fidelity is `Tr(ρ_b U|φ⟩⟨φ|U†)`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::polcalc::{
    bell, fidelity, kron, partial_trace_matrix, prepared_by_plates, trace, BellLabel, CMatrix,
    Cardinal, PolState, Unitary, Unitary2,
};
use crate::rng::{poisson, substream};
use crate::source::{noisy_state, SourceConfig};
use crate::{Error, Result};

/// Which Bell basis the BSM outcomes are named after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BsmConvention {
    /// Textbook Bell states on path ⊗ polarization.
    Standard,
    /// Bell states with an extra `XZ` on the polarization qubit, the
    /// labeling under which the corrections read Φ+→XZ, Φ−→X, Ψ+→Z, Ψ−→I.
    Rotated,
}

/// Correction unitaries available to the feed-forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correction {
    I,
    X,
    Z,
    XZ,
}

impl Correction {
    pub fn unitary(self) -> Unitary2 {
        match self {
            Correction::I => Unitary::identity(1),
            Correction::X => Unitary::pauli_x(),
            Correction::Z => Unitary::pauli_z(),
            Correction::XZ => Unitary::pauli_x()
                .then_after(&Unitary::pauli_z())
                .expect("2x2"),
        }
    }
}

pub fn correction_for(outcome: BellLabel, convention: BsmConvention) -> Correction {
    use BellLabel::*;
    match (convention, outcome) {
        (BsmConvention::Standard, PhiPlus) => Correction::I,
        (BsmConvention::Standard, PhiMinus) => Correction::Z,
        (BsmConvention::Standard, PsiPlus) => Correction::X,
        (BsmConvention::Standard, PsiMinus) => Correction::XZ,
        (BsmConvention::Rotated, PhiPlus) => Correction::XZ,
        (BsmConvention::Rotated, PhiMinus) => Correction::X,
        (BsmConvention::Rotated, PsiPlus) => Correction::Z,
        (BsmConvention::Rotated, PsiMinus) => Correction::I,
    }
}

pub fn default_table(convention: BsmConvention) -> BTreeMap<BellLabel, Correction> {
    BellLabel::ALL
        .iter()
        .map(|&b| (b, correction_for(b, convention)))
        .collect()
}

/// Bell state on idler path ⊗ idler polarization that outcome `b` names.
pub fn bsm_state(outcome: BellLabel, convention: BsmConvention) -> PolState {
    let b = bell(outcome);
    match convention {
        BsmConvention::Standard => b,
        BsmConvention::Rotated => {
            let u = Unitary::identity(1).tensor(&Correction::XZ.unitary());
            crate::polcalc::apply(&u, &b).expect("two-qubit")
        }
    }
}

/// `v·Π + (1−v)·diag(Π)` in the path ⊗ polarization product basis.
pub fn imperfect_projector(outcome: BellLabel, convention: BsmConvention, v: f64) -> CMatrix {
    let p = bsm_state(outcome, convention).density();
    let diag = CMatrix::from_diagonal(&p.diagonal());
    p.scale(v) + diag.scale(1.0 - v)
}

/// Relabels the idler polarization of a signal ⊗ idler polarization state
/// as the idler path. The matrix is unchanged; only the mode meaning moves.
pub fn bd_map(rho_polpol: &PolState) -> Result<PolState> {
    if rho_polpol.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho_polpol.dim(),
        });
    }
    Ok(rho_polpol.clone())
}

/// The state to teleport: a cardinal label or wave-plate angles (QWP then
/// HWP acting on `|H⟩`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputState {
    Label(Cardinal),
    Plates { hwp: f64, qwp: f64 },
}

impl InputState {
    pub fn label(&self) -> String {
        match self {
            InputState::Label(c) => c.to_string(),
            InputState::Plates { hwp, qwp } => format!("hwp{hwp}_qwp{qwp}"),
        }
    }
}

pub fn prepare_input(input: &InputState) -> PolState {
    match input {
        InputState::Label(c) => c.state(),
        InputState::Plates { hwp, qwp } => prepared_by_plates(*hwp, *qwp),
    }
}

/// One BSM outcome: its probability and the normalized signal state it
/// leaves behind (absent when the probability vanishes).
#[derive(Debug, Clone, PartialEq)]
pub struct BsmBranch {
    pub outcome: BellLabel,
    pub probability: f64,
    pub signal_state: Option<PolState>,
}

/// Bell-state measurement on modes 1 and 2 of a signal ⊗ path ⊗ polarization
/// state.
pub fn bsm(joint: &PolState, visibility: f64, convention: BsmConvention) -> Result<Vec<BsmBranch>> {
    if joint.dims() != [2, 2, 2] {
        return Err(Error::DimensionMismatch {
            expected: 8,
            got: joint.dim(),
        });
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::OutOfRange {
            name: "bsm_visibility",
            value: visibility,
        });
    }
    let rho = joint.density();
    BellLabel::ALL
        .iter()
        .map(|&outcome| {
            let m = kron(
                &CMatrix::identity(2, 2),
                &imperfect_projector(outcome, convention, visibility),
            );
            let (_, sigma) = partial_trace_matrix(&(&m * &rho), joint.dims(), &[0])?;
            let probability = trace(&sigma).re.max(0.0);
            let signal_state = if probability > 1e-15 {
                Some(PolState::mixed_normalized(vec![2], sigma)?)
            } else {
                None
            };
            Ok(BsmBranch {
                outcome,
                probability,
                signal_state,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportConfig {
    pub source: SourceConfig,
    pub inputs: Vec<InputState>,
    pub bsm_visibility: f64,
    pub convention: BsmConvention,
    /// Defaults to the table matching `convention`.
    #[serde(default)]
    pub correction_table: Option<BTreeMap<BellLabel, Correction>>,
}

impl TeleportConfig {
    pub fn reference_inputs() -> Vec<InputState> {
        [Cardinal::H, Cardinal::V, Cardinal::D, Cardinal::R]
            .into_iter()
            .map(InputState::Label)
            .collect()
    }

    pub fn new(source: SourceConfig, bsm_visibility: f64, convention: BsmConvention) -> Self {
        Self {
            source,
            inputs: Self::reference_inputs(),
            bsm_visibility,
            convention,
            correction_table: None,
        }
    }

    pub fn table(&self) -> Result<BTreeMap<BellLabel, Correction>> {
        let table = self
            .correction_table
            .clone()
            .unwrap_or_else(|| default_table(self.convention));
        for b in BellLabel::ALL {
            if !table.contains_key(&b) {
                return Err(Error::Config(format!("correction table lacks outcome {b}")));
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellReport {
    pub outcome: BellLabel,
    pub probability: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputReport {
    pub input: String,
    pub cells: Vec<CellReport>,
    /// Probability-weighted fidelity over outcomes.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportReport {
    pub bsm_visibility: f64,
    pub convention: BsmConvention,
    pub inputs: Vec<InputReport>,
    /// Mean over inputs of the per-input fidelity.
    pub average_fidelity: f64,
}

impl TeleportReport {
    pub fn cell(&self, input: usize, outcome: BellLabel) -> Option<&CellReport> {
        self.inputs
            .get(input)?
            .cells
            .iter()
            .find(|c| c.outcome == outcome)
    }

    /// Rows = inputs, columns = BSM outcomes, values = corrected fidelity.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let err = |e: csv::Error| Error::Parse(e.to_string());
        let mut header = vec!["input".to_string()];
        header.extend(BellLabel::ALL.iter().map(|b| b.to_string()));
        w.write_record(&header).map_err(err)?;
        for row in &self.inputs {
            let mut rec = vec![row.input.clone()];
            for b in BellLabel::ALL {
                let f = row
                    .cells
                    .iter()
                    .find(|c| c.outcome == b)
                    .map(|c| c.fidelity.to_string())
                    .unwrap_or_default();
                rec.push(f);
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn teleport_one(
    rho_source: &PolState,
    input: &InputState,
    visibility: f64,
    convention: BsmConvention,
    table: &BTreeMap<BellLabel, Correction>,
) -> Result<InputReport> {
    let phi = prepare_input(input);
    let joint = bd_map(rho_source)?.tensor(&phi.to_mixed());
    let mut cells = Vec::with_capacity(4);
    let mut weighted = 0.0;
    for branch in bsm(&joint, visibility, convention)? {
        let u = table[&branch.outcome].unitary();
        let expected = crate::polcalc::apply(&u, &phi)?;
        let fid = match &branch.signal_state {
            Some(s) => fidelity(s, &expected)?,
            None => 0.0,
        };
        weighted += branch.probability * fid;
        cells.push(CellReport {
            outcome: branch.outcome,
            probability: branch.probability,
            fidelity: fid,
        });
    }
    Ok(InputReport {
        input: input.label(),
        cells,
        fidelity: weighted,
    })
}

/// Fails when the table does not undo the BSM on an ideal source with a
/// perfect BSM.
fn check_consistency(cfg: &TeleportConfig, table: &BTreeMap<BellLabel, Correction>) -> Result<()> {
    let ideal = crate::source::ideal_state();
    let probes = [Cardinal::H, Cardinal::D, Cardinal::R].map(InputState::Label);
    for input in probes.iter().chain(&cfg.inputs) {
        let rep = teleport_one(&ideal, input, 1.0, cfg.convention, table)?;
        for c in &rep.cells {
            if (c.fidelity - 1.0).abs() > 1e-10 {
                return Err(Error::Config(format!(
                    "correction table does not match {:?} BSM labeling: outcome {} gives ideal fidelity {}",
                    cfg.convention, c.outcome, c.fidelity
                )));
            }
        }
    }
    Ok(())
}

pub fn run_teleport(cfg: &TeleportConfig) -> Result<TeleportReport> {
    cfg.source.validate()?;
    if cfg.inputs.is_empty() {
        return Err(Error::Empty("teleportation inputs"));
    }
    if !(0.0..=1.0).contains(&cfg.bsm_visibility) {
        return Err(Error::OutOfRange {
            name: "bsm_visibility",
            value: cfg.bsm_visibility,
        });
    }
    let table = cfg.table()?;
    check_consistency(cfg, &table)?;
    let rho = noisy_state(&cfg.source)?;
    let inputs = cfg
        .inputs
        .par_iter()
        .map(|input| teleport_one(&rho, input, cfg.bsm_visibility, cfg.convention, &table))
        .collect::<Result<Vec<_>>>()?;
    for row in &inputs {
        let total: f64 = row.cells.iter().map(|c| c.probability).sum();
        debug_assert!((total - 1.0).abs() < 1e-10);
    }
    let average_fidelity = inputs.iter().map(|r| r.fidelity).sum::<f64>() / inputs.len() as f64;
    Ok(TeleportReport {
        bsm_visibility: cfg.bsm_visibility,
        convention: cfg.convention,
        inputs,
        average_fidelity,
    })
}

/// BSM visibility at which the average teleported fidelity reaches
/// `target`, by bisection (the average is non-decreasing in `v`).
pub fn calibrate_visibility(base: &TeleportConfig, target: f64) -> Result<f64> {
    let avg = |v: f64| -> Result<f64> {
        let cfg = TeleportConfig {
            bsm_visibility: v,
            ..base.clone()
        };
        Ok(run_teleport(&cfg)?.average_fidelity)
    };
    let (lo_f, hi_f) = (avg(0.0)?, avg(1.0)?);
    if !(lo_f..=hi_f).contains(&target) {
        return Err(Error::OutOfRange {
            name: "target teleportation fidelity",
            value: target,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if avg(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Signal-photon counts for one (input, outcome) cell, measured in the basis
/// `{U|φ⟩, U|φ⟩⊥}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportCounts {
    pub input: String,
    pub outcome: BellLabel,
    pub duration_s: f64,
    pub n_parallel: u64,
    pub n_orthogonal: u64,
    pub expected_parallel: f64,
    pub expected_orthogonal: f64,
}

impl TeleportCounts {
    pub fn fidelity_estimate(&self) -> Option<f64> {
        let total = self.n_parallel + self.n_orthogonal;
        (total > 0).then(|| self.n_parallel as f64 / total as f64)
    }
}

/// Poisson counts of heralded events at `rate` (events/s, all outcomes)
/// over `duration_s` for every cell of `report`. Cell `k` (row-major)
/// draws from substream `k` of `seed`.
pub fn simulate_teleport_counts(
    report: &TeleportReport,
    rate: f64,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<TeleportCounts>> {
    if !(rate >= 0.0) || !(duration_s > 0.0) {
        return Err(Error::OutOfRange {
            name: "teleport rate/duration",
            value: rate.min(duration_s),
        });
    }
    let cells: Vec<(&InputReport, &CellReport)> = report
        .inputs
        .iter()
        .flat_map(|row| row.cells.iter().map(move |c| (row, c)))
        .collect();
    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(k, (row, cell))| {
            let mut rng = substream(seed, k as u64);
            let total = rate * duration_s * cell.probability;
            let expected_parallel = total * cell.fidelity;
            let expected_orthogonal = total * (1.0 - cell.fidelity);
            TeleportCounts {
                input: row.input.clone(),
                outcome: cell.outcome,
                duration_s,
                n_parallel: poisson(&mut rng, expected_parallel),
                n_orthogonal: poisson(&mut rng, expected_orthogonal),
                expected_parallel,
                expected_orthogonal,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polcalc::{apply, CVector, C64};
    use crate::source::ideal_state;
    use proptest::prelude::*;

    fn ideal_cfg(v: f64, convention: BsmConvention) -> TeleportConfig {
        TeleportConfig::new(SourceConfig::ideal(), v, convention)
    }

    fn same_up_to_phase(a: &PolState, b: &PolState) -> bool {
        (a.overlap(b).unwrap().norm() - 1.0).abs() < 1e-12
    }

    #[test]
    fn bd_map_examples() {
        let mapped = bd_map(&bell(BellLabel::PhiPlus)).unwrap();
        // |H,0⟩ + |V,1⟩ in the signal-pol ⊗ path basis
        let amps = mapped.amplitudes().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((amps[0] - C64::new(h, 0.0)).norm() < 1e-15);
        assert!((amps[3] - C64::new(h, 0.0)).norm() < 1e-15);
        let rho = noisy_state(&SourceConfig::reference()).unwrap();
        let m = bd_map(&rho).unwrap();
        let (a, b) = (rho.eigenvalues(), m.eigenvalues());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let f0 = fidelity(&rho, &ideal_state()).unwrap();
        let f1 = fidelity(&m, &bell(BellLabel::PhiPlus)).unwrap();
        assert!((f0 - f1).abs() < 1e-12);
        assert!(bd_map(&PolState::h()).is_err());
    }

    #[test]
    fn prepare_input_examples() {
        let d = prepare_input(&InputState::Label(Cardinal::D));
        let amps = d.amplitudes().unwrap();
        assert!((amps[0].re - amps[1].re).abs() < 1e-15 && amps[1].im == 0.0);
        assert!(same_up_to_phase(
            &prepare_input(&InputState::Label(Cardinal::H)),
            &PolState::h()
        ));
        let plates = prepare_input(&InputState::Plates {
            hwp: 22.5,
            qwp: 0.0,
        });
        assert!(same_up_to_phase(&plates, &PolState::d()));
    }

    #[test]
    fn correction_tables() {
        assert_eq!(
            correction_for(BellLabel::PhiPlus, BsmConvention::Rotated),
            Correction::XZ
        );
        let xz = Correction::XZ.unitary();
        let std_psi_minus = correction_for(BellLabel::PsiMinus, BsmConvention::Standard).unitary();
        assert!((xz.phase_insensitive_overlap(&std_psi_minus) - 1.0).abs() < 1e-12);
        // Ψ− leaves the signal in XZ|φ⟩ up to a global phase
        let y = Unitary::pauli_y();
        assert!((xz.phase_insensitive_overlap(&y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_bsm_is_uniform_and_correctable() {
        for convention in [BsmConvention::Standard, BsmConvention::Rotated] {
            let rep = run_teleport(&ideal_cfg(1.0, convention)).unwrap();
            for row in &rep.inputs {
                for c in &row.cells {
                    assert!((c.probability - 0.25).abs() < 1e-12);
                    assert!((c.fidelity - 1.0).abs() < 1e-10);
                }
            }
            assert!((rep.average_fidelity - 1.0).abs() < 1e-10);
        }
        // Φ+ outcome under the standard labeling leaves |φ⟩ itself
        let phi = PolState::r();
        let joint = bd_map(&ideal_state()).unwrap().tensor(&phi.to_mixed());
        let branches = bsm(&joint, 1.0, BsmConvention::Standard).unwrap();
        let s = branches[0].signal_state.as_ref().unwrap();
        assert!((fidelity(s, &phi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_table_is_a_config_error() {
        let mut cfg = ideal_cfg(1.0, BsmConvention::Standard);
        cfg.correction_table = Some(default_table(BsmConvention::Rotated));
        assert!(matches!(run_teleport(&cfg), Err(Error::Config(_))));
        let mut cfg = ideal_cfg(1.0, BsmConvention::Rotated);
        let mut t = default_table(BsmConvention::Rotated);
        t.remove(&BellLabel::PsiMinus);
        cfg.correction_table = Some(t);
        assert!(matches!(run_teleport(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn classical_limit() {
        // v = 0 over the six cardinal states (a 2-design) gives the classical 2/3
        let mut cfg = ideal_cfg(0.0, BsmConvention::Standard);
        cfg.inputs = Cardinal::ALL.map(InputState::Label).to_vec();
        let rep = run_teleport(&cfg).unwrap();
        assert!((rep.average_fidelity - 2.0 / 3.0).abs() < 1e-12);
        // the four experimental inputs are two Z and two equatorial states
        let rep = run_teleport(&ideal_cfg(0.0, BsmConvention::Standard)).unwrap();
        assert!((rep.average_fidelity - 0.75).abs() < 1e-12);
    }

    #[test]
    fn werner_source_closed_form() {
        let cfg = TeleportConfig::new(SourceConfig::reference(), 1.0, BsmConvention::Rotated);
        let rep = run_teleport(&cfg).unwrap();
        let p = 1.0 - cfg.source.white_noise_w;
        assert!((rep.average_fidelity - (1.0 + p) / 2.0).abs() < 1e-12);
        assert!((rep.average_fidelity - 0.99).abs() < 1e-12);
        // with a lossy BSM: F = 1/2 + p(1+v)/4 on {H, V, D, R}
        for &v in &[0.0, 0.3, 0.857, 1.0] {
            let cfg = TeleportConfig {
                bsm_visibility: v,
                ..cfg.clone()
            };
            let f = run_teleport(&cfg).unwrap().average_fidelity;
            assert!((f - (0.5 + p * (1.0 + v) / 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_hits_target() {
        let base = TeleportConfig::new(SourceConfig::reference(), 1.0, BsmConvention::Rotated);
        let v = calibrate_visibility(&base, 0.955).unwrap();
        let f = run_teleport(&TeleportConfig {
            bsm_visibility: v,
            ..base.clone()
        })
        .unwrap()
        .average_fidelity;
        assert!((f - 0.955).abs() < 1e-9);
        assert!(calibrate_visibility(&base, 0.999).is_err());
    }

    #[test]
    fn z_inputs_ignore_bsm_visibility_on_ideal_source() {
        let mut cfg = ideal_cfg(1.0, BsmConvention::Rotated);
        cfg.inputs = vec![
            InputState::Label(Cardinal::H),
            InputState::Label(Cardinal::V),
        ];
        let reference = run_teleport(&cfg).unwrap();
        for k in 0..=10 {
            cfg.bsm_visibility = k as f64 / 10.0;
            let rep = run_teleport(&cfg).unwrap();
            for (a, b) in rep.inputs.iter().zip(&reference.inputs) {
                for (ca, cb) in a.cells.iter().zip(&b.cells) {
                    assert!((ca.fidelity - cb.fidelity).abs() < 1e-12);
                    assert!((ca.probability - cb.probability).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn average_monotone_in_visibility_and_source_fidelity() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        for &w in &[0.0, 0.02, 0.2, 0.6] {
            let mut prev = f64::MIN;
            for &v in &grid {
                let mut src = SourceConfig::reference();
                src.white_noise_w = w;
                let f = run_teleport(&TeleportConfig::new(src, v, BsmConvention::Standard))
                    .unwrap()
                    .average_fidelity;
                assert!(f >= prev - 1e-12);
                prev = f;
            }
        }
        for &v in &[0.0, 0.5, 1.0] {
            let mut prev = f64::MAX;
            for &w in &grid {
                let mut src = SourceConfig::reference();
                src.white_noise_w = w;
                let f = run_teleport(&TeleportConfig::new(src, v, BsmConvention::Standard))
                    .unwrap()
                    .average_fidelity;
                assert!(f <= prev + 1e-12);
                prev = f;
            }
        }
    }

    #[test]
    fn report_csv_layout() {
        let rep = run_teleport(&ideal_cfg(1.0, BsmConvention::Rotated)).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "input,Phi+,Phi-,Psi+,Psi-");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("H,"));
        let json = serde_json::to_string(&rep).unwrap();
        assert_eq!(serde_json::from_str::<TeleportReport>(&json).unwrap(), rep);
    }

    #[test]
    fn bsm_rejects_bad_input() {
        let two = bell(BellLabel::PhiPlus);
        assert!(bsm(&two, 1.0, BsmConvention::Standard).is_err());
        let three = two.tensor(&PolState::h());
        assert!(bsm(&three, 1.5, BsmConvention::Standard).is_err());
    }

    #[test]
    fn simulated_counts_track_expectations() {
        let cfg = TeleportConfig::new(SourceConfig::reference(), 0.857, BsmConvention::Rotated);
        let rep = run_teleport(&cfg).unwrap();
        let counts = simulate_teleport_counts(&rep, 4e4, 10.0, 17).unwrap();
        assert_eq!(counts.len(), 16);
        for c in &counts {
            for (n, m) in [
                (c.n_parallel, c.expected_parallel),
                (c.n_orthogonal, c.expected_orthogonal),
            ] {
                assert!((n as f64 - m).abs() <= 5.0 * m.sqrt().max(1.0));
            }
        }
        let again = simulate_teleport_counts(&rep, 4e4, 10.0, 17).unwrap();
        assert_eq!(counts, again);
    }

    fn random_qubit() -> impl Strategy<Value = PolState> {
        prop::array::uniform4(-1.0f64..1.0).prop_filter_map("nonzero", |x| {
            let v = CVector::from_vec(vec![C64::new(x[0], x[1]), C64::new(x[2], x[3])]);
            PolState::pure_normalized(vec![2], v).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn ideal_teleportation_is_input_independent(phi in random_qubit()) {
            let joint = bd_map(&ideal_state()).unwrap().tensor(&phi.to_mixed());
            for convention in [BsmConvention::Standard, BsmConvention::Rotated] {
                let branches = bsm(&joint, 1.0, convention).unwrap();
                let total: f64 = branches.iter().map(|b| b.probability).sum();
                prop_assert!((total - 1.0).abs() < 1e-10);
                for b in branches {
                    let u = correction_for(b.outcome, convention).unitary();
                    let expected = apply(&u, &phi).unwrap();
                    let f = fidelity(b.signal_state.as_ref().unwrap(), &expected).unwrap();
                    prop_assert!((f - 1.0).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn probabilities_sum_to_one(phi in random_qubit(), v in 0.0f64..=1.0, w in 0.0f64..=1.0) {
            let mut src = SourceConfig::reference();
            src.white_noise_w = w;
            let joint = bd_map(&noisy_state(&src).unwrap()).unwrap().tensor(&phi.to_mixed());
            let total: f64 = bsm(&joint, v, BsmConvention::Rotated)
                .unwrap()
                .iter()
                .map(|b| b.probability)
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn input_serde_forms() {
        let x: InputState = serde_json::from_str("\"D\"").unwrap();
        assert_eq!(x, InputState::Label(Cardinal::D));
        let y: InputState = serde_json::from_str(r#"{"hwp": 22.5, "qwp": 0}"#).unwrap();
        assert_eq!(
            y,
            InputState::Plates {
                hwp: 22.5,
                qwp: 0.0
            }
        );
    }
}
