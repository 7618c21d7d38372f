use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::measurement::MeasurementBasis;
use crate::report::RunReport;
use crate::rng::{SeededRng, StreamFamily};
use crate::state::{born_probabilities, Povm, StateVector};
use crate::stats::sample_index;

/// Measurement angles in the x-z plane; angle `θ` measures the ±1
/// observable `cos θ Z + sin θ X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSetting {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSetting {
    /// Angles reaching `2√2` on `Φ` for `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
    pub fn optimal() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self {
            a: 0.0,
            a_prime: FRAC_PI_2,
            b: FRAC_PI_4,
            b_prime: 3.0 * FRAC_PI_4,
        }
    }

    fn validate(&self) -> Result<()> {
        if [self.a, self.a_prime, self.b, self.b_prime].iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("CHSH angles must be finite".into()))
        }
    }

    fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

const SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];
/// Product of the ±1 outcomes for joint outcome index `2i + j`.
const PARITY: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

fn joint_povm(alpha: f64, beta: f64) -> Povm {
    MeasurementBasis::spin_xz(alpha)
        .projective_povm()
        .product(&MeasurementBasis::spin_xz(beta).projective_povm())
}

fn check_two_qubits(state: &StateVector) -> Result<()> {
    if state.layout().dims() != [2, 2] {
        return Err(Error::Shape(format!("CHSH needs two qubits, got {}", state.layout())));
    }
    Ok(())
}

fn joint_probabilities(state: &StateVector, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    born_probabilities(&state.to_density(), &joint_povm(alpha, beta))
}

/// Exact correlator `E(α, β)`.
pub fn correlator(state: &StateVector, alpha: f64, beta: f64) -> Result<f64> {
    check_two_qubits(state)?;
    Ok(joint_probabilities(state, alpha, beta)?
        .iter()
        .zip(PARITY)
        .map(|(p, s)| p * s)
        .sum())
}

/// Exact `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
pub fn chsh_exact(setting: &ChshSetting, state: &StateVector) -> Result<f64> {
    setting.validate()?;
    let mut s = 0.0;
    for ((alpha, beta), sign) in setting.pairs().into_iter().zip(SIGNS) {
        s += sign * correlator(state, alpha, beta)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshResult {
    pub exact: f64,
    /// `[E(a,b), E(a,b′), E(a′,b), E(a′,b′)]`.
    pub correlators: [f64; 4],
    pub sampled: Option<f64>,
    pub sampled_correlators: Option<[f64; 4]>,
}

/// Exact `S`, plus a sampled estimate with `shots` per correlator when
/// `shots > 0`.
pub fn chsh<R: Rng + ?Sized>(
    setting: &ChshSetting,
    state: &StateVector,
    shots: u64,
    rng: &mut R,
) -> Result<ChshResult> {
    setting.validate()?;
    check_two_qubits(state)?;
    let mut correlators = [0.0; 4];
    let mut sampled = [0.0; 4];
    let family = StreamFamily::from_rng(rng);
    for (k, (alpha, beta)) in setting.pairs().into_iter().enumerate() {
        let probs = joint_probabilities(state, alpha, beta)?;
        correlators[k] = probs.iter().zip(PARITY).map(|(p, s)| p * s).sum();
        if shots > 0 {
            let mut r = family.stream(k as u64);
            let total: f64 = (0..shots).map(|_| PARITY[sample_index(&probs, &mut r)]).sum();
            sampled[k] = total / shots as f64;
        }
    }
    let combine = |e: &[f64; 4]| e.iter().zip(SIGNS).map(|(x, s)| x * s).sum::<f64>();
    Ok(ChshResult {
        exact: combine(&correlators),
        correlators,
        sampled: (shots > 0).then(|| combine(&sampled)),
        sampled_correlators: (shots > 0).then_some(sampled),
    })
}

/// CHSH run on `Φ` as a report.
pub fn chsh_report(setting: &ChshSetting, shots: u64, rng: &mut SeededRng) -> Result<RunReport> {
    let phi = StateVector::bell_phi("alice", "bob")?;
    let res = chsh(setting, &phi, shots, rng)?;
    let mut report = RunReport::new("chsh", json!({ "setting": setting, "shots": shots }), rng.seed());
    report.shots = shots;
    report.diag("s_exact", res.exact);
    report.diag("correlators", res.correlators);
    report.diag("classical_bound", 2.0);
    report.diag("tsirelson_bound", 2.0 * std::f64::consts::SQRT_2);
    if let Some(s) = res.sampled {
        report.diag("s_sampled", s);
        report.diag("sampled_correlators", res.sampled_correlators);
        // each correlator estimate has variance (1 − E²)/shots
        let var: f64 = res.correlators.iter().map(|e| (1.0 - e * e) / shots as f64).sum();
        report.diag("s_sampled_sigma", var.sqrt());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phi() -> StateVector {
        StateVector::bell_phi("a", "b").unwrap()
    }

    #[test]
    fn bell_state_reaches_tsirelson() {
        let s = chsh_exact(&ChshSetting::optimal(), &phi()).unwrap();
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn aligned_settings_perfectly_correlated() {
        for a in [0.0, 0.3, 1.2] {
            assert!((correlator(&phi(), a, a).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn correlator_is_cosine_of_difference() {
        for (a, b) in [(0.0, 0.5), (1.0, -0.4), (2.0, 0.1)] {
            let e = correlator(&phi(), a, b).unwrap();
            assert!((e - f64::cos(a - b)).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_respects_classical_bound() {
        let up_up = StateVector::basis(crate::state::SubsystemLayout::qubits(2).unwrap(), 0).unwrap();
        let s = chsh_exact(&ChshSetting::optimal(), &up_up).unwrap();
        assert!(s.abs() <= 2.0 + 1e-9);
    }

    #[test]
    fn sampled_close_to_exact() {
        let r = chsh(&ChshSetting::optimal(), &phi(), 100_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let sigma: f64 = r.correlators.iter().map(|e| (1.0 - e * e) / 1e5).sum::<f64>().sqrt();
        assert!((r.sampled.unwrap() - r.exact).abs() <= 3.0 * sigma);
    }

    #[test]
    fn rejects_non_qubit_pairs() {
        let l = crate::state::SubsystemLayout::new([("a", 3)]).unwrap();
        let s = StateVector::from_slice(l, &[c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!(chsh_exact(&ChshSetting::optimal(), &s).is_err());
    }
}
