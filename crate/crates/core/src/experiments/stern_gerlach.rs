use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::measurement::{detect_shots, detection_probabilities, mark_factor, MeasurementBasis};
use crate::report::RunReport;
use crate::rng::SeededRng;
use crate::state::{c, CMatrix, DensityMatrix, StateVector};
use crate::stats::frequencies;

/// Spin state sent through the magnet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinInput {
    /// `(|z₊⟩ + i|z₋⟩)/√2`, spin up along `y`.
    YPlus,
    /// `|z₊⟩`.
    ZPlus,
}

impl SpinInput {
    pub fn state(self) -> Result<StateVector> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            SpinInput::YPlus => StateVector::qubit("spin", c(h, 0.0), c(0.0, h)),
            SpinInput::ZPlus => StateVector::qubit("spin", c(1.0, 0.0), c(0.0, 0.0)),
        }
    }
}

/// The magnet entangles `z` spin with the path (`|z₊⟩→upper`, `|z₋⟩→lower`);
/// the screen detects the path only, i.e. the spin is traced out.
/// `shots == 0` gives exact probabilities only.
pub fn stern_gerlach(input: SpinInput, shots: u64, rng: &mut SeededRng) -> Result<RunReport> {
    let spin = input.state()?;
    let z = MeasurementBasis::z();
    let ms = mark_factor(&spin, "spin", &z, "path", 2)?;
    let path = ms.joint().reduced(&["path"])?;
    let probs = detection_probabilities(&ms)?;
    let expected = DensityMatrix::new(
        path.layout().clone(),
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            2,
            probs.iter().map(|&p| c(p, 0.0)),
        )),
    )?;

    let mut report = RunReport::new(
        "sg",
        json!({ "input": input, "shots": shots }),
        rng.seed(),
    );
    report.outcome_labels = vec!["upper".into(), "lower".into()];
    report.exact_probabilities = Some(probs);
    report.diag("reduced_path", path.to_rows());
    report.diag("reduced_path_offdiag", path.matrix()[(0, 1)].norm());
    report.diag("reduced_path_vs_mixture", path.max_entry_diff(&expected)?);
    report.diag("joint", ms.joint().to_pairs());
    if shots > 0 {
        let summary = detect_shots(&ms, shots, rng)?;
        report.sampled_frequencies = Some(frequencies(&summary.counts));
        report.counts = Some(summary.counts);
        report.shots = shots;
        report.diag("min_fidelity", summary.min_fidelity);
    }
    report.check()?;
    Ok(report)
}
