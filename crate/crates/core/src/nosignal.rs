//! Alice/Bob signalling protocol over shared entangled pairs.
//!
//! Alice encodes bit 0 by leaving her half of each pair alone and bit 1 by
//! measuring it in the `{|↑⟩, |↓⟩}` basis. Bob runs local processes
//! (a channel followed by a POVM) on his halves and tries to decode. His
//! half is described by the reduced state in the first case and by a mixed
//! ensemble of definite states in the second; these are the same density
//! matrix, so every process yields the same statistics and decoding stays
//! at chance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{condition_on_marker, detection_probabilities, mark_factor, MarkedState, MeasurementBasis};
use crate::rng::StreamFamily;
use crate::state::{
    born_probabilities, mix, random_channel, random_povm, trace_distance, DensityMatrix, Povm,
    QuantumChannel, StateVector,
};
use crate::stats::sample_index;

pub const ALICE: &str = "alice";
pub const BOB: &str = "bob";
const ALICE_MARKER: &str = "alice_marker";

/// Exact probability vectors, or finite-shot sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub n_pairs_per_group: usize,
    pub n_groups: usize,
    pub process_pool_size: usize,
    pub seed: u64,
    pub mode: Mode,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs_per_group == 0 || self.n_groups == 0 || self.process_pool_size == 0 {
            return Err(Error::InvalidArgument(
                "pairs per group, groups and pool size must all be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PreparationKind {
    /// Alice did nothing; Bob holds the reduced state of the pair.
    Reduced,
    /// Alice measured; Bob holds one of the conditional states.
    Mixed,
}

/// Bob's description of his half after Alice's choice.
#[derive(Debug, Clone, PartialEq)]
pub struct BobPreparation {
    pub kind: PreparationKind,
    pub state: DensityMatrix,
    /// For [`PreparationKind::Mixed`]: weight and Bob's conditional state
    /// for each of Alice's outcomes.
    pub ensemble: Vec<(f64, DensityMatrix)>,
}

/// How Alice's measurement outcomes enter the mixed ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMode {
    /// Weights are the exact outcome probabilities.
    Exact,
    /// Weights are frequencies over this many simulated measurements.
    Sampled(u64),
}

/// Per-process outcome of [`run_protocol`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessReport {
    pub n_kraus: usize,
    pub n_outcomes: usize,
    /// Trace distance between Bob's two states after the channel.
    pub trace_distance: f64,
    pub reduced_probabilities: Vec<f64>,
    pub mixed_probabilities: Vec<f64>,
    /// Total variation distance between the two exact distributions.
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinguishReport {
    pub config: ProtocolConfig,
    pub processes: Vec<ProcessReport>,
    pub max_trace_distance: f64,
    pub max_exact_separation: f64,
    /// Largest total variation between Bob's calibrated templates for the
    /// two bits (sampled mode; zero in exact mode).
    pub max_empirical_separation: f64,
    pub sent_bits: Vec<u8>,
    pub decoded_bits: Vec<u8>,
    pub accuracy: f64,
}

/// Alice's preparation for the Bell pair `Φ` with an exact ensemble.
pub fn alice_prepare<R: Rng + ?Sized>(bit: u8, rng: &mut R) -> Result<BobPreparation> {
    alice_prepare_with(&StateVector::bell_phi(ALICE, BOB)?, bit, EnsembleMode::Exact, rng)
}

/// Alice's preparation for an arbitrary two-factor pair labelled
/// ([`ALICE`], [`BOB`]). Bit 1 runs Alice's measurement through the
/// marking/detection model.
pub fn alice_prepare_with<R: Rng + ?Sized>(
    pair: &StateVector,
    bit: u8,
    ensemble: EnsembleMode,
    rng: &mut R,
) -> Result<BobPreparation> {
    match bit {
        0 => Ok(BobPreparation {
            kind: PreparationKind::Reduced,
            state: pair.reduced(&[BOB])?,
            ensemble: Vec::new(),
        }),
        1 => {
            let ms = alice_marking(pair)?;
            let probs = detection_probabilities(&ms)?;
            let weights = match ensemble {
                EnsembleMode::Exact => probs.clone(),
                EnsembleMode::Sampled(n) => {
                    if n == 0 {
                        return Err(Error::InvalidArgument("sampled ensemble needs pairs".into()));
                    }
                    let mut counts = vec![0u64; probs.len()];
                    for _ in 0..n {
                        counts[sample_index(&probs, rng)] += 1;
                    }
                    crate::stats::frequencies(&counts)
                }
            };
            let mut members = Vec::new();
            let mut joint_ensemble = Vec::new();
            for (k, &w) in weights.iter().enumerate() {
                if w <= 0.0 || probs[k] <= 1e-15 {
                    continue;
                }
                let post = condition_on_marker(&ms, k)?;
                members.push((w, post.reduced(&[BOB])?));
                joint_ensemble.push((w, post));
            }
            let state = mix(&joint_ensemble)?.partial_trace(&[BOB])?;
            Ok(BobPreparation {
                kind: PreparationKind::Mixed,
                state,
                ensemble: members,
            })
        }
        _ => Err(Error::InvalidArgument(format!("bit must be 0 or 1, got {bit}"))),
    }
}

fn alice_marking(pair: &StateVector) -> Result<MarkedState> {
    if pair.layout().labels() != [ALICE, BOB] {
        return Err(Error::Shape(format!(
            "pair layout must be [{ALICE}, {BOB}], got {}",
            pair.layout()
        )));
    }
    let z = MeasurementBasis::computational(pair.layout().dim_of(ALICE)?);
    mark_factor(pair, ALICE, &z, ALICE_MARKER, z.len())
}

/// Exact outcome probabilities of process (`ch`, `m`) on Bob's state.
pub fn bob_probabilities(prep: &BobPreparation, ch: &QuantumChannel, m: &Povm) -> Result<Vec<f64>> {
    born_probabilities(&ch.apply(&prep.state)?, m)
}

/// Outcome frequencies of `shots` runs of process (`ch`, `m`). For a mixed
/// preparation each shot first draws which definite state the electron is
/// in, then samples the process on that state.
pub fn bob_statistics<R: Rng + ?Sized>(
    prep: &BobPreparation,
    ch: &QuantumChannel,
    m: &Povm,
    shots: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let mut counts = vec![0u64; m.len()];
    match prep.kind {
        PreparationKind::Reduced => {
            let p = bob_probabilities(prep, ch, m)?;
            for _ in 0..shots {
                counts[sample_index(&p, rng)] += 1;
            }
        }
        PreparationKind::Mixed => {
            let weights: Vec<f64> = prep.ensemble.iter().map(|(w, _)| *w).collect();
            let dists = prep
                .ensemble
                .iter()
                .map(|(_, s)| born_probabilities(&ch.apply(s)?, m))
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..shots {
                let k = sample_index(&weights, rng);
                counts[sample_index(&dists[k], rng)] += 1;
            }
        }
    }
    Ok(crate::stats::frequencies(&counts))
}

struct Process {
    channel: QuantumChannel,
    povm: Povm,
}

fn process_pool<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Vec<Process>> {
    let mut pool = Vec::with_capacity(size);
    // first process: no channel, spin measured along z
    pool.push(Process {
        channel: QuantumChannel::identity(2),
        povm: Povm::computational(2),
    });
    while pool.len() < size {
        let n_kraus = rng.gen_range(1..=4);
        let n_outcomes = rng.gen_range(2..=4);
        pool.push(Process {
            channel: random_channel(2, n_kraus, rng)?,
            povm: random_povm(2, n_outcomes, rng)?,
        });
    }
    Ok(pool)
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Log-likelihood ratios below this are numerical noise between identical
/// distributions and count as ties.
const TIE_TOLERANCE: f64 = 1e-9;

/// Runs the full protocol on `Φ` pairs: one group per message bit, every
/// process in a random pool applied to the group, maximum-likelihood
/// decoding against templates Bob calibrates on known bits.
pub fn run_protocol(cfg: &ProtocolConfig, message_bits: &[u8]) -> Result<DistinguishReport> {
    cfg.validate()?;
    if message_bits.len() != cfg.n_groups {
        return Err(Error::Shape(format!(
            "{} message bits for {} groups",
            message_bits.len(),
            cfg.n_groups
        )));
    }
    if let Some(b) = message_bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidArgument(format!("message bit {b}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = process_pool(cfg.process_pool_size, &mut rng)?;
    let reduced = alice_prepare(0, &mut rng)?;
    let mixed = alice_prepare(1, &mut rng)?;

    let mut processes = Vec::with_capacity(pool.len());
    for p in &pool {
        let out0 = p.channel.apply(&reduced.state)?;
        let out1 = p.channel.apply(&mixed.state)?;
        let q0 = born_probabilities(&out0, &p.povm)?;
        let q1 = born_probabilities(&out1, &p.povm)?;
        processes.push(ProcessReport {
            n_kraus: p.channel.kraus().len(),
            n_outcomes: p.povm.len(),
            trace_distance: trace_distance(&out0, &out1)?,
            separation: total_variation(&q0, &q1),
            reduced_probabilities: q0,
            mixed_probabilities: q1,
        });
    }

    let (templates0, templates1): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match cfg.mode {
        Mode::Exact => (
            processes.iter().map(|p| p.reduced_probabilities.clone()).collect(),
            processes.iter().map(|p| p.mixed_probabilities.clone()).collect(),
        ),
        Mode::Sampled => {
            // calibration: as many known-bit groups as message groups, half of each bit
            let sim = GroupSimulator::new(&pool)?;
            let family = StreamFamily::from_rng(&mut rng);
            let mut c0 = vec![Vec::new(); pool.len()];
            let mut c1 = vec![Vec::new(); pool.len()];
            for g in 0..cfg.n_groups.max(2) {
                let bit = (g % 2) as u8;
                let counts = sim.run(bit, cfg.n_pairs_per_group, &mut family.stream(g as u64))?;
                let target = if bit == 0 { &mut c0 } else { &mut c1 };
                for (acc, c) in target.iter_mut().zip(counts) {
                    if acc.is_empty() {
                        *acc = vec![0u64; c.len()];
                    }
                    acc.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
                }
            }
            (smoothed(&c0), smoothed(&c1))
        }
    };
    let max_empirical_separation = match cfg.mode {
        Mode::Exact => 0.0,
        Mode::Sampled => templates0
            .iter()
            .zip(&templates1)
            .map(|(a, b)| total_variation(a, b))
            .fold(0.0, f64::max),
    };

    let family = StreamFamily::from_rng(&mut rng);
    let sim = GroupSimulator::new(&pool)?;
    let mut decoded_bits = Vec::with_capacity(cfg.n_groups);
    for (g, &bit) in message_bits.iter().enumerate() {
        let mut r = family.stream(g as u64);
        let observed: Vec<Vec<f64>> = match cfg.mode {
            Mode::Exact => {
                let prep = if bit == 0 { &reduced } else { &mixed };
                pool.iter()
                    .map(|p| bob_probabilities(prep, &p.channel, &p.povm))
                    .collect::<Result<_>>()?
            }
            Mode::Sampled => sim
                .run(bit, cfg.n_pairs_per_group, &mut r)?
                .into_iter()
                .map(|c| c.into_iter().map(|x| x as f64).collect())
                .collect(),
        };
        let llr: f64 = observed
            .iter()
            .zip(templates0.iter().zip(&templates1))
            .map(|(obs, (t0, t1))| {
                obs.iter()
                    .zip(t0.iter().zip(t1))
                    .filter(|(o, _)| **o > 0.0)
                    .map(|(o, (a, b))| o * (b.ln() - a.ln()))
                    .sum::<f64>()
            })
            .sum();
        let guess = if llr > TIE_TOLERANCE {
            1
        } else if llr < -TIE_TOLERANCE {
            0
        } else {
            r.gen_range(0..=1u8)
        };
        decoded_bits.push(guess);
    }
    let correct = decoded_bits
        .iter()
        .zip(message_bits)
        .filter(|(a, b)| a == b)
        .count();

    Ok(DistinguishReport {
        config: cfg.clone(),
        max_trace_distance: processes.iter().map(|p| p.trace_distance).fold(0.0, f64::max),
        max_exact_separation: processes.iter().map(|p| p.separation).fold(0.0, f64::max),
        max_empirical_separation,
        processes,
        sent_bits: message_bits.to_vec(),
        decoded_bits,
        accuracy: correct as f64 / cfg.n_groups as f64,
    })
}

/// Add-half smoothing so unseen outcomes keep a finite log-likelihood.
fn smoothed(counts: &[Vec<u64>]) -> Vec<Vec<f64>> {
    counts
        .iter()
        .map(|c| {
            let total = c.iter().sum::<u64>() as f64 + 0.5 * c.len() as f64;
            c.iter().map(|&x| (x as f64 + 0.5) / total).collect()
        })
        .collect()
}

/// Shot-level simulation of one group. For bit 1 Alice's measurement is
/// run on every pair through the marking model; Bob's electron is then in
/// the conditional state of her outcome. For bit 0 Bob's electron is in the
/// reduced state. Each process in the pool is run on a fresh group of pairs.
struct GroupSimulator {
    marked: MarkedState,
    /// Per process: outcome distribution of the reduced state.
    reduced: Vec<Vec<f64>>,
    /// Per process, per Alice outcome: distribution of Bob's conditional state.
    conditional: Vec<Vec<Vec<f64>>>,
}

impl GroupSimulator {
    fn new(pool: &[Process]) -> Result<Self> {
        let pair = StateVector::bell_phi(ALICE, BOB)?;
        let marked = alice_marking(&pair)?;
        let alice_probs = detection_probabilities(&marked)?;
        let bob_reduced = pair.reduced(&[BOB])?;
        let bob_conditional = (0..alice_probs.len())
            .map(|k| {
                if alice_probs[k] <= 1e-15 {
                    return Ok(None);
                }
                Ok(Some(condition_on_marker(&marked, k)?.reduced(&[BOB])?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut reduced = Vec::new();
        let mut conditional = Vec::new();
        for p in pool {
            reduced.push(born_probabilities(&p.channel.apply(&bob_reduced)?, &p.povm)?);
            conditional.push(
                bob_conditional
                    .iter()
                    .map(|s| match s {
                        Some(s) => born_probabilities(&p.channel.apply(s)?, &p.povm),
                        None => Ok(vec![0.0; p.povm.len()]),
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Self {
            marked,
            reduced,
            conditional,
        })
    }

    /// Outcome counts per process.
    fn run<R: Rng + ?Sized>(&self, bit: u8, pairs: usize, rng: &mut R) -> Result<Vec<Vec<u64>>> {
        let mut out = Vec::with_capacity(self.reduced.len());
        for p in 0..self.reduced.len() {
            let mut counts = vec![0u64; self.reduced[p].len()];
            for _ in 0..pairs {
                let dist = if bit == 0 {
                    &self.reduced[p]
                } else {
                    let record = crate::measurement::detect(&self.marked, rng)?;
                    &self.conditional[p][record.marker_index]
                };
                counts[sample_index(dist, rng)] += 1;
            }
            out.push(counts);
        }
        Ok(out)
    }
}
