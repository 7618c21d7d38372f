use serde_json::json;

use crate::error::Result;
use crate::measurement::{detect_shots, detection_probabilities, mark_factor, MeasurementBasis};
use crate::report::RunReport;
use crate::rng::SeededRng;
use crate::state::{c, CMatrix, StateVector, C64};
use crate::stats::frequencies;

/// Symmetric 50/50 beam splitter, `i` on reflection.
pub fn beam_splitter() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(0.0, h), c(0.0, h), c(h, 0.0)])
}

fn lower_arm_phase(phase: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, phase)],
    )
}

/// Path state of the photon just before the receivers.
fn path_state(second_mirror: bool, phase: f64) -> Result<StateVector> {
    let upper = StateVector::qubit("path", c(1.0, 0.0), c(0.0, 0.0))?;
    let mut s = upper
        .apply_unitary(&beam_splitter(), &["path"])?
        .apply_unitary(&lower_arm_phase(phase), &["path"])?;
    if second_mirror {
        s = s.apply_unitary(&beam_splitter(), &["path"])?;
    }
    Ok(s)
}

/// Exact receiver probabilities: `(½, ½)` without the second mirror,
/// `(sin²(φ/2), cos²(φ/2))` with it.
pub fn mach_zehnder_probabilities(second_mirror: bool, phase: f64) -> Result<Vec<f64>> {
    let ms = mark_factor(&path_state(second_mirror, phase)?, "path", &MeasurementBasis::computational(2), "position", 2)?;
    detection_probabilities(&ms)
}

/// The receivers record the photon's position, which is entangled with the
/// path it arrives on; the path itself is traced out. `shots == 0` gives
/// exact probabilities only.
pub fn mach_zehnder(second_mirror: bool, phase: f64, shots: u64, rng: &mut SeededRng) -> Result<RunReport> {
    let path = path_state(second_mirror, phase)?;
    let ms = mark_factor(&path, "path", &MeasurementBasis::computational(2), "position", 2)?;
    let probs = detection_probabilities(&ms)?;
    let position = ms.joint().reduced(&["position"])?;

    let mut report = RunReport::new(
        "mz",
        json!({ "second_mirror": second_mirror, "phase": phase, "shots": shots }),
        rng.seed(),
    );
    report.outcome_labels = vec!["receiver1".into(), "receiver2".into()];
    report.exact_probabilities = Some(probs);
    report.diag("path_state", path.to_pairs());
    report.diag("reduced_position", position.to_rows());
    if second_mirror {
        let half = phase / 2.0;
        report.diag("analytic", [half.sin().powi(2), half.cos().powi(2)]);
    }
    if shots > 0 {
        let summary = detect_shots(&ms, shots, rng)?;
        report.sampled_frequencies = Some(frequencies(&summary.counts));
        report.counts = Some(summary.counts);
        report.shots = shots;
    }
    report.check()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn without_second_mirror_each_path_half() {
        for phase in [0.0, 1.0, PI] {
            let p = mach_zehnder_probabilities(false, phase).unwrap();
            assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn second_mirror_interference() {
        let p = mach_zehnder_probabilities(true, 0.0).unwrap();
        assert!(p[0].abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
        let p = mach_zehnder_probabilities(true, PI).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_product() {
        // BS·BS = i X: |upper⟩ exits on the lower port
        let bs = beam_splitter();
        let prod = &bs * &bs;
        assert!((prod[(1, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(prod[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn report_sampling() {
        let r = mach_zehnder(true, PI / 2.0, 100_000, &mut SeededRng::new(5)).unwrap();
        let f = r.sampled_frequencies.unwrap();
        assert!((f[0] - 0.5).abs() <= 3.0 * (0.25f64 / 1e5).sqrt());
    }
}
