//! Two-step measurement: a controllable marking unitary that copies the
//! measured basis index into a marker factor, then a detection step that
//! samples a definite marker value from the marker's reduced state.
//!
//! Also holds the per-run random device simulator, where every run couples
//! the marker to a fresh environment through its own unitary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::StreamFamily;
use crate::state::{
    apply_on_offsets, c, haar_vector, random_unitary, CMatrix, CVector, DensityMatrix, Povm,
    StateVector, SubsystemLayout, C64, OPERATOR_TOL,
};
use crate::stats::{histogram, sample_index};

/// Default label of the marker factor added by [`mark`].
pub const MARKER: &str = "marker";
/// Label of the environment factor in device runs.
pub const ENVIRONMENT: &str = "env";
/// Largest environment supported by [`simulate_device_runs`], in qubits.
pub const MAX_ENV_QUBITS: usize = 12;

/// Orthonormal basis of one factor, with a label per vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: Vec<CVector>,
    labels: Vec<String>,
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<CVector>, labels: Vec<String>) -> Result<Self> {
        let dim = vectors
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty basis".into()))?
            .len();
        if labels.len() != vectors.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} basis vectors",
                labels.len(),
                vectors.len()
            )));
        }
        if vectors.len() != dim || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Shape(format!(
                "{} vectors do not span a space of dimension {dim}",
                vectors.len()
            )));
        }
        let mut dev: f64 = 0.0;
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((a.dotc(b) - c(want, 0.0)).norm());
            }
        }
        if dev > OPERATOR_TOL {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(Self { vectors, labels })
    }

    /// Basis made of the columns of a unitary.
    pub fn from_unitary(u: &CMatrix, labels: Vec<String>) -> Result<Self> {
        Self::new(u.column_iter().map(|col| col.into_owned()).collect(), labels)
    }

    pub fn computational(dim: usize) -> Self {
        let vectors = (0..dim)
            .map(|i| {
                let mut v = CVector::zeros(dim);
                v[i] = c(1.0, 0.0);
                v
            })
            .collect();
        Self {
            vectors,
            labels: (0..dim).map(|i| i.to_string()).collect(),
        }
    }

    /// Spin `z` basis `{|↑⟩, |↓⟩}`.
    pub fn z() -> Self {
        let mut b = Self::computational(2);
        b.labels = vec!["up".into(), "down".into()];
        b
    }

    /// Eigenbasis of `cos θ Z + sin θ X`; first vector has eigenvalue +1.
    pub fn spin_xz(theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        Self {
            vectors: vec![
                CVector::from_column_slice(&[c(co, 0.0), c(s, 0.0)]),
                CVector::from_column_slice(&[c(-s, 0.0), c(co, 0.0)]),
            ],
            labels: vec!["+".into(), "-".into()],
        }
    }

    /// Eigenbasis of `Y`: `(|↑⟩ ± i|↓⟩)/√2`.
    pub fn y() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            vectors: vec![
                CVector::from_column_slice(&[c(h, 0.0), c(0.0, h)]),
                CVector::from_column_slice(&[c(h, 0.0), c(0.0, -h)]),
            ],
            labels: vec!["+".into(), "-".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, i: usize) -> &CVector {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Basis vectors as matrix columns.
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.vectors)
    }

    pub fn projective_povm(&self) -> Povm {
        Povm::projective(&self.vectors, self.labels.clone()).expect("orthonormal basis")
    }

    /// Expansion coefficients `⟨aᵢ|ψ⟩` of a single-factor state.
    pub fn coefficients(&self, psi: &CVector) -> Vec<C64> {
        self.vectors.iter().map(|a| a.dotc(psi)).collect()
    }
}

/// Joint system ⊗ marker state `Σ cᵢ |aᵢ⟩|mᵢ⟩` produced by the marking step.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedState {
    joint: StateVector,
    basis: MeasurementBasis,
    measured: String,
    marker: String,
    /// `correspondence[i]` is the marker index recording basis state `i`.
    correspondence: Vec<usize>,
}

impl MarkedState {
    pub fn joint(&self) -> &StateVector {
        &self.joint
    }

    pub fn basis(&self) -> &MeasurementBasis {
        &self.basis
    }

    pub fn measured_label(&self) -> &str {
        &self.measured
    }

    pub fn marker_label(&self) -> &str {
        &self.marker
    }

    pub fn correspondence(&self) -> &[usize] {
        &self.correspondence
    }

    /// Norm of the joint state's component on mismatched (basis, marker)
    /// pairs; zero for a faithful marking.
    pub fn mismatch_amplitude(&self) -> Result<f64> {
        let layout = self.joint.layout();
        let positions = [layout.position(&self.measured)?, layout.position(&self.marker)?];
        let ds = self.basis.dim();
        let dm = layout.factors()[positions[1]].dim;
        let mut op = CMatrix::zeros(ds * dm, ds * dm);
        for (i, a) in self.basis.vectors.iter().enumerate() {
            let p = a * a.adjoint();
            for j in (0..dm).filter(|&j| j != self.correspondence[i]) {
                let mut q = CMatrix::zeros(dm, dm);
                q[(j, j)] = c(1.0, 0.0);
                op += p.kronecker(&q);
            }
        }
        let (sel, rest) = layout.split_offsets(&positions);
        let mut amps = self.joint.amplitudes().clone();
        apply_on_offsets(amps.as_mut_slice(), &op, &sel, &rest);
        Ok(amps.norm())
    }

    fn basis_index_of_marker(&self, marker_index: usize) -> Option<usize> {
        self.correspondence.iter().position(|&m| m == marker_index)
    }
}

/// Outcome of one detection.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub outcome_label: String,
    /// Index of the measured basis state.
    pub outcome_index: usize,
    pub marker_index: usize,
    pub probability: f64,
    /// State of the measured factor matching the outcome.
    pub post_system: StateVector,
    /// Joint state projected onto the detected marker value.
    pub post_joint: StateVector,
    /// `⟨aᵢ| Tr_rest(post_joint) |aᵢ⟩`, computed from `post_joint`.
    pub fidelity: f64,
    /// Seed of the single-shot stream that drew this outcome.
    pub seed_used: u64,
}

/// The state of a measured system across one measurement: before marking,
/// its reduced state after marking, and after a definite outcome is known.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeChain {
    pub before: StateVector,
    pub after_marking: DensityMatrix,
    pub after_knowledge: StateVector,
    pub outcome_index: usize,
    /// Probabilities of every possible outcome.
    pub probabilities: Vec<f64>,
}

/// Marks a single-factor system with a fresh marker factor labelled
/// [`MARKER`].
pub fn mark(system: &StateVector, basis: &MeasurementBasis, marker_dim: usize) -> Result<MarkedState> {
    if system.layout().len() != 1 {
        return Err(Error::InvalidArgument(
            "mark expects a single-factor system; use mark_factor".into(),
        ));
    }
    let label = system.layout().labels()[0].to_string();
    mark_factor(system, &label, basis, MARKER, marker_dim)
}

/// Marks factor `measured` of `state`: appends a marker factor in `|0⟩` and
/// applies the controlled shift `Σᵢ |aᵢ⟩⟨aᵢ| ⊗ Xⁱ`, where `X` is the cyclic
/// shift on the marker. The result is `Σᵢ cᵢ |aᵢ⟩|i⟩` on those two factors.
pub fn mark_factor(
    state: &StateVector,
    measured: &str,
    basis: &MeasurementBasis,
    marker_label: &str,
    marker_dim: usize,
) -> Result<MarkedState> {
    let sdim = state.layout().dim_of(measured)?;
    if basis.dim() != sdim {
        return Err(Error::Shape(format!(
            "basis of dimension {} for factor `{measured}` of dimension {sdim}",
            basis.dim()
        )));
    }
    if marker_dim < basis.len() {
        return Err(Error::MarkerCapacity {
            marker: marker_dim,
            states: basis.len(),
        });
    }
    let ready = StateVector::basis(SubsystemLayout::single(marker_label, marker_dim)?, 0)?;
    let joint = state.tensor(&ready)?;

    let mut shift = CMatrix::identity(marker_dim, marker_dim);
    let mut u = CMatrix::zeros(sdim * marker_dim, sdim * marker_dim);
    for a in basis.vectors() {
        u += (a * a.adjoint()).kronecker(&shift);
        shift = cyclic_shift(marker_dim) * shift;
    }
    let joint = joint.apply_unitary(&u, &[measured, marker_label])?;

    let ms = MarkedState {
        joint,
        basis: basis.clone(),
        measured: measured.to_string(),
        marker: marker_label.to_string(),
        correspondence: (0..basis.len()).collect(),
    };
    let leak = ms.mismatch_amplitude()?;
    if leak > OPERATOR_TOL {
        return Err(Error::Numerical(format!("marking leaked amplitude {leak:e}")));
    }
    Ok(ms)
}

fn cyclic_shift(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if i == (j + 1) % dim {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Reduced state of the marker.
pub fn reduced_marker(ms: &MarkedState) -> Result<DensityMatrix> {
    ms.joint.reduced(&[&ms.marker])
}

/// Marker populations; the detection distribution.
pub fn detection_probabilities(ms: &MarkedState) -> Result<Vec<f64>> {
    Ok(reduced_marker(ms)?
        .diagonal()
        .into_iter()
        .map(|p| p.clamp(0.0, 1.0))
        .collect())
}

/// Detection step: samples a marker value from the marker's reduced state
/// and conditions the joint state on it.
pub fn detect<R: Rng + ?Sized>(ms: &MarkedState, rng: &mut R) -> Result<DetectionRecord> {
    let probs = detection_probabilities(ms)?;
    detect_with(ms, &probs, rng.gen())
}

/// Joint state conditioned on the marker reading `marker_index`.
pub fn condition_on_marker(ms: &MarkedState, marker_index: usize) -> Result<StateVector> {
    let layout = ms.joint.layout();
    let mpos = layout.position(&ms.marker)?;
    let mdim = layout.factors()[mpos].dim;
    if marker_index >= mdim {
        return Err(Error::Shape(format!("marker index {marker_index} out of range {mdim}")));
    }
    let mut proj = CMatrix::zeros(mdim, mdim);
    proj[(marker_index, marker_index)] = c(1.0, 0.0);
    let (sel, rest) = layout.split_offsets(&[mpos]);
    let mut amps = ms.joint.amplitudes().clone();
    apply_on_offsets(amps.as_mut_slice(), &proj, &sel, &rest);
    StateVector::normalized(layout.clone(), amps)
        .map_err(|_| Error::DegenerateDistribution(marker_index))
}

fn detect_with(ms: &MarkedState, probs: &[f64], seed: u64) -> Result<DetectionRecord> {
    let mut shot = ChaCha8Rng::seed_from_u64(seed);
    let k = sample_index(probs, &mut shot);
    if probs[k] <= 1e-15 {
        return Err(Error::DegenerateDistribution(k));
    }
    let post_joint = condition_on_marker(ms, k)?;

    let i = ms
        .basis_index_of_marker(k)
        .ok_or(Error::DegenerateDistribution(k))?;
    let a = ms.basis.vector(i);
    let post_system = StateVector::new(
        SubsystemLayout::single(&ms.measured, a.len())?,
        a.clone(),
    )?;
    // ⟨aᵢ|Tr_rest(ψ)|aᵢ⟩ = ‖(|aᵢ⟩⟨aᵢ| ⊗ I)ψ‖²
    let layout = post_joint.layout();
    let (sel, rest) = layout.split_offsets(&[layout.position(&ms.measured)?]);
    let mut projected = post_joint.amplitudes().clone();
    apply_on_offsets(projected.as_mut_slice(), &(a * a.adjoint()), &sel, &rest);
    let fidelity = projected.norm_squared();

    Ok(DetectionRecord {
        outcome_label: ms.basis.label(i).to_string(),
        outcome_index: i,
        marker_index: k,
        probability: probs[k],
        post_system,
        post_joint,
        fidelity,
        seed_used: seed,
    })
}

/// Aggregate of many independent detections on the same marked state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotSummary {
    pub probabilities: Vec<f64>,
    /// Counts per basis outcome.
    pub counts: Vec<u64>,
    pub min_fidelity: f64,
}

/// Runs `shots` independent detections, one split stream per shot.
pub fn detect_shots<R: Rng + ?Sized>(ms: &MarkedState, shots: u64, rng: &mut R) -> Result<ShotSummary> {
    let probs = detection_probabilities(ms)?;
    let family = StreamFamily::from_rng(rng);
    let records: Vec<(usize, f64)> = (0..shots)
        .into_par_iter()
        .map(|s| {
            let r = detect_with(ms, &probs, family.stream(s).gen())?;
            Ok((r.outcome_index, r.fidelity))
        })
        .collect::<Result<_>>()?;
    let min_fidelity = records.iter().map(|r| r.1).fold(1.0, f64::min);
    let counts = histogram(records.iter().map(|r| r.0), ms.basis.len());
    let probabilities = ms.correspondence.iter().map(|&m| probs[m]).collect();
    Ok(ShotSummary {
        probabilities,
        counts,
        min_fidelity,
    })
}

/// Full measurement of a single-factor system: [`mark`] then [`detect`].
pub fn measure<R: Rng + ?Sized>(
    system: &StateVector,
    basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<DetectionRecord> {
    let ms = mark(system, basis, basis.len())?;
    detect(&ms, rng)
}

/// Measures and records the system's state at each stage.
pub fn knowledge_chain<R: Rng + ?Sized>(
    system: &StateVector,
    basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<KnowledgeChain> {
    let ms = mark(system, basis, basis.len())?;
    let after_marking = ms.joint.reduced(&[&ms.measured])?;
    let rotated = after_marking.in_basis(&basis.matrix())?;
    let off = (0..basis.len())
        .flat_map(|i| (0..basis.len()).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| rotated[(i, j)].norm())
        .fold(0.0, f64::max);
    if off > OPERATOR_TOL {
        return Err(Error::Numerical(format!("marked system keeps coherence {off:e}")));
    }
    let probs = detection_probabilities(&ms)?;
    let record = detect(&ms, rng)?;
    Ok(KnowledgeChain {
        before: system.clone(),
        after_marking,
        after_knowledge: record.post_system,
        outcome_index: record.outcome_index,
        probabilities: ms.correspondence.iter().map(|&m| probs[m]).collect(),
    })
}

/// How each run's environment unitary is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum EnvEvolution {
    /// Draw the full Haar unitaries and apply them as a controlled
    /// operation. Cost grows with the cube of the environment dimension.
    FullUnitary,
    /// The environment starts in a basis state `|e⟩`, so a run only ever
    /// sees the column `U|e⟩`; draw that column directly (it is uniform on
    /// the unit sphere). Same joint state distribution, linear cost.
    #[default]
    HaarColumn,
}

/// Result of [`simulate_device_runs`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceRunReport {
    pub n_env_qubits: usize,
    pub n_runs: u64,
    pub evolution: EnvEvolution,
    pub outcome_labels: Vec<String>,
    /// Born probabilities of the measured basis.
    pub probabilities: Vec<f64>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Pointer outcome of each run, in run order.
    pub outcomes: Vec<usize>,
    /// Mean over runs of the mean off-diagonal magnitude of the
    /// system-marker state (environment traced out) in the marked basis.
    pub mean_coherence: f64,
    pub coherence_std_error: f64,
}

/// Repeats the measurement `n_runs` times with a microscopically different
/// device each run: the marked pair is coupled to an `n_env_qubits`
/// environment prepared in a random basis state, through a controlled
/// operation applying an independent Haar unitary for each marker value.
/// The pointer (marker) is then read out projectively.
pub fn simulate_device_runs<R: Rng + ?Sized>(
    system: &StateVector,
    basis: &MeasurementBasis,
    n_env_qubits: usize,
    n_runs: u64,
    rng: &mut R,
) -> Result<DeviceRunReport> {
    simulate_device_runs_with(system, basis, n_env_qubits, n_runs, EnvEvolution::default(), rng)
}

pub fn simulate_device_runs_with<R: Rng + ?Sized>(
    system: &StateVector,
    basis: &MeasurementBasis,
    n_env_qubits: usize,
    n_runs: u64,
    evolution: EnvEvolution,
    rng: &mut R,
) -> Result<DeviceRunReport> {
    if n_env_qubits > MAX_ENV_QUBITS {
        return Err(Error::Resource(format!(
            "{n_env_qubits} environment qubits exceeds the limit of {MAX_ENV_QUBITS}"
        )));
    }
    if n_runs == 0 {
        return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
    }
    let ms = mark(system, basis, basis.len())?;
    let env_dim = 1usize << n_env_qubits;
    let marker_dim = basis.len();
    let born: Vec<f64> = basis
        .coefficients(system.amplitudes())
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    // marked-basis vectors |aᵢ⟩|i⟩ on (system, marker)
    let pointer_states: Vec<CVector> = (0..marker_dim)
        .map(|i| {
            let mut m = CVector::zeros(marker_dim);
            m[i] = c(1.0, 0.0);
            basis.vector(i).kronecker(&m)
        })
        .collect();

    let family = StreamFamily::from_rng(rng);
    let runs: Vec<(usize, f64)> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut r = family.stream(run);
            let evolved = device_run(&ms, env_dim, evolution, &mut r)?;
            let measured = ms.measured_label();
            let pair = evolved.reduced(&[measured, MARKER])?;
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..marker_dim {
                for j in (0..marker_dim).filter(|&j| j != i) {
                    let w = pair.matrix() * &pointer_states[j];
                    total += pointer_states[i].dotc(&w).norm();
                    pairs += 1;
                }
            }
            let coherence = if pairs > 0 { total / pairs as f64 } else { 0.0 };
            let pointer = evolved.reduced(&[MARKER])?.diagonal();
            let k = sample_index(&pointer, &mut r);
            if pointer[k] <= 1e-15 {
                return Err(Error::DegenerateDistribution(k));
            }
            let outcome = ms
                .basis_index_of_marker(k)
                .ok_or(Error::DegenerateDistribution(k))?;
            Ok((outcome, coherence))
        })
        .collect::<Result<_>>()?;

    let outcomes: Vec<usize> = runs.iter().map(|r| r.0).collect();
    let counts = histogram(outcomes.iter().copied(), marker_dim);
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.1).sum::<f64>() / n;
    let var = if runs.len() > 1 {
        runs.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(DeviceRunReport {
        n_env_qubits,
        n_runs,
        evolution,
        outcome_labels: basis.labels().to_vec(),
        probabilities: born,
        frequencies: crate::stats::frequencies(&counts),
        counts,
        outcomes,
        mean_coherence: mean,
        coherence_std_error: (var / n).sqrt(),
    })
}

/// One run: environment in a random basis state, then the marker-controlled
/// environment unitaries.
fn device_run<R: Rng + ?Sized>(
    ms: &MarkedState,
    env_dim: usize,
    evolution: EnvEvolution,
    rng: &mut R,
) -> Result<StateVector> {
    let start = rng.gen_range(0..env_dim);
    let marker_dim = ms.joint.layout().dim_of(MARKER)?;
    let env_layout = SubsystemLayout::single(ENVIRONMENT, env_dim)?;
    match evolution {
        EnvEvolution::FullUnitary => {
            let env = StateVector::basis(env_layout, start)?;
            let unitaries: Vec<CMatrix> =
                (0..marker_dim).map(|_| random_unitary(env_dim, rng)).collect();
            ms.joint
                .tensor(&env)?
                .apply_controlled(MARKER, &[ENVIRONMENT], &unitaries)
        }
        EnvEvolution::HaarColumn => {
            let columns: Vec<CVector> = (0..marker_dim).map(|_| haar_vector(env_dim, rng)).collect();
            let layout = ms.joint.layout().concat(&env_layout)?;
            let mstride = ms.joint.layout().strides()[ms.joint.layout().position(MARKER)?];
            let mut amps = CVector::zeros(layout.total_dim());
            for (idx, a) in ms.joint.amplitudes().iter().enumerate() {
                let m = (idx / mstride) % marker_dim;
                for (e, v) in columns[m].iter().enumerate() {
                    amps[idx * env_dim + e] = a * v;
                }
            }
            StateVector::normalized(layout, amps)
        }
    }
}
