//! Self-check suite behind `qmeasure verify`: every module invariant at its
//! stated tolerance, evaluated in order, stopping at the first breach.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::experiments::{
    chsh_exact, double_slit, fringe_spacing, fringe_visibility, local_maxima,
    mach_zehnder_probabilities, stern_gerlach, ChshSetting, SlitGeometry, SpinInput,
};
use crate::measurement::{
    detect_shots, knowledge_chain, mark, reduced_marker, simulate_device_runs, MeasurementBasis,
};
use crate::nosignal::{
    alice_prepare, alice_prepare_with, bob_probabilities, run_protocol, EnsembleMode, Mode,
    ProtocolConfig, ALICE, BOB,
};
use crate::rng::SeededRng;
use crate::state::{
    born_probabilities, c, mix, random_channel, random_density, random_povm, random_state,
    trace_distance, CMatrix, DensityMatrix, StateVector, SubsystemLayout,
};
use crate::stats::{pooled_chi_square_p_value, within_sigma};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub duration_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

type Outcome = Result<(bool, String)>;

struct Entry {
    id: &'static str,
    name: &'static str,
    run: fn(u64) -> Outcome,
}

const CHECKS: &[Entry] = &[
    Entry { id: "S1", name: "Bell pair reduced states are I/2", run: bell_reduced },
    Entry { id: "S2", name: "partial trace matches index-sum oracle", run: partial_trace_oracle },
    Entry { id: "S3", name: "partial trace of product state recovers factor", run: product_trace },
    Entry { id: "S4", name: "random channels preserve trace", run: channel_trace },
    Entry { id: "S5", name: "Born probabilities normalized and linear", run: born_linearity },
    Entry { id: "S6", name: "trace distance is a metric", run: trace_metric },
    Entry { id: "M1", name: "marking is unitary and copies basis states", run: marking_unitary },
    Entry { id: "M2", name: "detection frequencies within 3 sigma", run: detection_sigma },
    Entry { id: "M3", name: "measure agrees with Born rule (chi-square)", run: measure_chi_square },
    Entry { id: "M4", name: "knowledge chain after marking is diagonal", run: chain_diagonal },
    Entry { id: "M5", name: "device runs: Born frequencies and decaying coherence", run: device_runs },
    Entry { id: "N1", name: "reduced and mixed preparations are equal", run: equivalence },
    Entry { id: "N2", name: "protocol decodes at chance level", run: protocol_chance },
    Entry { id: "E1", name: "Stern-Gerlach splits evenly", run: sg_even },
    Entry { id: "E2", name: "Mach-Zehnder phase sweep", run: mz_sweep },
    Entry { id: "E3", name: "double-slit fringes", run: slit_fringes },
    Entry { id: "E4", name: "CHSH violation and classical bound", run: chsh_bounds },
];

/// Runs the suite; stops after the first failing or erroring check.
pub fn run_all(seed: u64) -> VerifyReport {
    let mut checks = Vec::new();
    for e in CHECKS {
        let start = Instant::now();
        let (passed, detail) = match (e.run)(seed) {
            Ok(r) => r,
            Err(err) => (false, format!("error: {err}")),
        };
        checks.push(Check {
            id: e.id,
            name: e.name,
            passed,
            detail,
            duration_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if !passed {
            break;
        }
    }
    VerifyReport {
        seed,
        passed: checks.len() == CHECKS.len() && checks.iter().all(|c| c.passed),
        checks,
    }
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(salt);
    r
}

fn ok(pass: bool, detail: String) -> Outcome {
    Ok((pass, detail))
}

fn bell_reduced(_: u64) -> Outcome {
    let rho = StateVector::bell_phi("a", "b")?.to_density();
    let mut worst: f64 = 0.0;
    for keep in ["a", "b"] {
        let r = rho.partial_trace(&[keep])?;
        worst = worst.max(r.max_entry_diff(&DensityMatrix::maximally_mixed(r.layout().clone()))?);
    }
    ok(worst <= 1e-12, format!("max deviation {worst:e}"))
}

/// Brute-force partial trace by explicit multi-index enumeration.
pub fn index_sum_partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            d[f] = idx % dims[f];
            idx /= dims[f];
        }
        d
    };
    let kdim: usize = keep.iter().map(|&k| dims[k]).product();
    let kidx = |d: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
    let mut out = CMatrix::zeros(kdim, kdim);
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            let traced_equal = (0..dims.len()).filter(|f| !keep.contains(f)).all(|f| di[f] == dj[f]);
            if traced_equal {
                out[(kidx(&di), kidx(&dj))] += rho[(i, j)];
            }
        }
    }
    out
}

fn random_layout<R: Rng>(r: &mut R, max_total: usize) -> Vec<usize> {
    loop {
        let n = r.gen_range(1..=4);
        let dims: Vec<usize> = (0..n).map(|_| r.gen_range(1..=5)).collect();
        let t: usize = dims.iter().product();
        if t <= max_total && t >= 2 {
            return dims;
        }
    }
}

fn partial_trace_oracle(seed: u64) -> Outcome {
    let mut r = rng(seed, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let dims = random_layout(&mut r, 64);
        let layout = SubsystemLayout::new(dims.iter().enumerate().map(|(i, &d)| (format!("f{i}"), d)))?;
        let rho = random_density(&layout, 3, &mut r)?;
        let keep: Vec<usize> = (0..dims.len()).filter(|_| r.gen_bool(0.5)).collect();
        let keep = if keep.is_empty() { vec![0] } else { keep };
        let labels: Vec<String> = keep.iter().map(|k| format!("f{k}")).collect();
        let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let got = rho.partial_trace(&label_refs)?;
        let want = index_sum_partial_trace(rho.matrix(), &dims, &keep);
        worst = worst.max((got.matrix() - want).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    ok(worst <= 1e-12, format!("max entry deviation {worst:e} over 40 layouts"))
}

fn product_trace(seed: u64) -> Outcome {
    let mut r = rng(seed, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = random_state(&SubsystemLayout::single("a", r.gen_range(2..=4))?, &mut r);
        let b = random_state(&SubsystemLayout::single("b", r.gen_range(2..=4))?, &mut r);
        let got = a.tensor(&b)?.to_density().partial_trace(&["a"])?;
        worst = worst.max(got.max_entry_diff(&a.to_density())?);
    }
    ok(worst <= 1e-12, format!("max deviation {worst:e}"))
}

fn channel_trace(seed: u64) -> Outcome {
    let mut r = rng(seed, 4);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let d = r.gen_range(2..=4);
        let layout = SubsystemLayout::single("s", d)?;
        let ch = random_channel(d, r.gen_range(1..=4), &mut r)?;
        let out = ch.apply(&random_density(&layout, d, &mut r)?)?;
        worst = worst.max((out.trace().re - 1.0).abs());
    }
    ok(worst <= 1e-10, format!("max trace deviation {worst:e}"))
}

fn born_linearity(seed: u64) -> Outcome {
    let mut r = rng(seed, 5);
    let layout = SubsystemLayout::single("s", 3)?;
    let mut worst_sum: f64 = 0.0;
    let mut worst_lin: f64 = 0.0;
    for _ in 0..30 {
        let m = random_povm(3, r.gen_range(2..=5), &mut r)?;
        let weights: Vec<f64> = (0..3).map(|_| r.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let ensemble: Vec<(f64, StateVector)> = weights
            .iter()
            .map(|w| (w / total, random_state(&layout, &mut r)))
            .collect();
        let ensemble = renormalize(ensemble);
        let p = born_probabilities(&mix(&ensemble)?, &m)?;
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        let mut lin = vec![0.0; m.len()];
        for (w, psi) in &ensemble {
            for (acc, q) in lin.iter_mut().zip(born_probabilities(&psi.to_density(), &m)?) {
                *acc += w * q;
            }
        }
        worst_lin = worst_lin.max(p.iter().zip(&lin).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    ok(
        worst_sum <= 1e-9 && worst_lin <= 1e-10,
        format!("sum deviation {worst_sum:e}, linearity deviation {worst_lin:e}"),
    )
}

/// Puts the rounding residue of the weights on the last member.
fn renormalize(mut ensemble: Vec<(f64, StateVector)>) -> Vec<(f64, StateVector)> {
    let s: f64 = ensemble.iter().map(|e| e.0).sum();
    if let Some(last) = ensemble.last_mut() {
        last.0 += 1.0 - s;
    }
    ensemble
}

fn trace_metric(seed: u64) -> Outcome {
    let mut r = rng(seed, 6);
    let layout = SubsystemLayout::single("s", 3)?;
    let mut worst_tri: f64 = f64::NEG_INFINITY;
    let mut zero_ok = true;
    for _ in 0..30 {
        let a = random_density(&layout, 2, &mut r)?;
        let b = random_density(&layout, 3, &mut r)?;
        let d = random_density(&layout, 1, &mut r)?;
        worst_tri = worst_tri.max(trace_distance(&a, &d)? - trace_distance(&a, &b)? - trace_distance(&b, &d)?);
        zero_ok &= trace_distance(&a, &a)? <= 1e-10 && trace_distance(&a, &b)? > 1e-10;
    }
    ok(
        worst_tri <= 1e-9 && zero_ok,
        format!("worst triangle excess {worst_tri:e}, identity of indiscernibles {zero_ok}"),
    )
}

fn marking_unitary(seed: u64) -> Outcome {
    let mut r = rng(seed, 7);
    let mut worst: f64 = 0.0;
    for d in 2..=4 {
        let u = crate::state::random_unitary(d, &mut r);
        let basis = MeasurementBasis::from_unitary(&u, (0..d).map(|i| i.to_string()).collect())?;
        let layout = SubsystemLayout::single("s", d)?;
        for i in 0..d {
            let a = StateVector::new(layout.clone(), basis.vector(i).clone())?;
            let ms = mark(&a, &basis, d)?;
            let mut m = crate::state::CVector::zeros(d);
            m[i] = c(1.0, 0.0);
            let want = basis.vector(i).kronecker(&m);
            worst = worst.max((ms.joint().amplitudes() - want).norm());
        }
        let psi = random_state(&layout, &mut r);
        worst = worst.max((mark(&psi, &basis, d)?.joint().norm() - 1.0).abs());
    }
    ok(worst <= 1e-12, format!("max deviation {worst:e}"))
}

fn detection_sigma(seed: u64) -> Outcome {
    let psi = StateVector::qubit("s", c(0.6, 0.0), c(0.8, 0.0))?;
    let ms = mark(&psi, &MeasurementBasis::z(), 2)?;
    let shots = 100_000;
    let s = detect_shots(&ms, shots, &mut rng(seed, 8))?;
    let f = crate::stats::frequencies(&s.counts);
    let probs = reduced_marker(&ms)?.diagonal();
    ok(
        within_sigma(&f, &probs, shots, 3.0) && s.min_fidelity >= 1.0 - 1e-10,
        format!("frequencies {f:?} vs {probs:?}, min fidelity {}", s.min_fidelity),
    )
}

fn measure_chi_square(seed: u64) -> Outcome {
    let mut r = rng(seed, 9);
    let layout = SubsystemLayout::single("s", 2)?;
    let basis = MeasurementBasis::z();
    let mut tables = Vec::with_capacity(50);
    for _ in 0..50 {
        let psi = random_state(&layout, &mut r);
        let born = born_probabilities(&psi.to_density(), &basis.projective_povm())?;
        let mut counts = vec![0u64; 2];
        for _ in 0..2000 {
            counts[crate::measurement::measure(&psi, &basis, &mut r)?.outcome_index] += 1;
        }
        tables.push((counts, born));
    }
    let p = pooled_chi_square_p_value(&tables);
    ok(p > 0.001, format!("pooled p-value {p:.4} over 50 states x 2000 shots"))
}

fn chain_diagonal(seed: u64) -> Outcome {
    let mut r = rng(seed, 10);
    let layout = SubsystemLayout::single("s", 3)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = crate::state::random_unitary(3, &mut r);
        let basis = MeasurementBasis::from_unitary(&u, vec!["a".into(), "b".into(), "c".into()])?;
        let psi = random_state(&layout, &mut r);
        let k = knowledge_chain(&psi, &basis, &mut r)?;
        let rotated = k.after_marking.in_basis(&basis.matrix())?;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    worst = worst.max(rotated[(i, j)].norm());
                }
            }
        }
    }
    ok(worst <= 1e-12, format!("max off-diagonal {worst:e}"))
}

fn device_runs(seed: u64) -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = StateVector::qubit("s", c(h, 0.0), c(h, 0.0))?;
    let z = MeasurementBasis::z();
    let small = simulate_device_runs(&psi, &z, 2, 1000, &mut rng(seed, 11))?;
    let large = simulate_device_runs(&psi, &z, 8, 1000, &mut rng(seed, 12))?;
    let born_ok = [&small, &large]
        .iter()
        .all(|r| within_sigma(&r.frequencies, &r.probabilities, r.n_runs, 3.0));
    let single = [&small, &large].iter().all(|r| r.outcomes.len() as u64 == r.n_runs);
    ok(
        born_ok && single && large.mean_coherence < small.mean_coherence,
        format!(
            "coherence n_env=2: {:.4}, n_env=8: {:.4}; frequencies {:?} / {:?}",
            small.mean_coherence, large.mean_coherence, small.frequencies, large.frequencies
        ),
    )
}

fn equivalence(seed: u64) -> Outcome {
    let mut r = rng(seed, 13);
    let layout = SubsystemLayout::new([(ALICE, 2), (BOB, 2)])?;
    let mut worst_td: f64 = trace_distance(&alice_prepare(0, &mut r)?.state, &alice_prepare(1, &mut r)?.state)?;
    let mut worst_p: f64 = 0.0;
    for _ in 0..20 {
        let pair = random_state(&layout, &mut r);
        let p0 = alice_prepare_with(&pair, 0, EnsembleMode::Exact, &mut r)?;
        let p1 = alice_prepare_with(&pair, 1, EnsembleMode::Exact, &mut r)?;
        worst_td = worst_td.max(trace_distance(&p0.state, &p1.state)?);
        for _ in 0..5 {
            let ch = random_channel(2, r.gen_range(1..=4), &mut r)?;
            let m = random_povm(2, r.gen_range(2..=4), &mut r)?;
            let a = bob_probabilities(&p0, &ch, &m)?;
            let b = bob_probabilities(&p1, &ch, &m)?;
            worst_p = worst_p.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
    }
    ok(
        worst_td <= 1e-12 && worst_p <= 1e-12,
        format!("max trace distance {worst_td:e}, max probability gap {worst_p:e}"),
    )
}

fn protocol_chance(seed: u64) -> Outcome {
    let cfg = ProtocolConfig {
        n_pairs_per_group: 200,
        n_groups: 50,
        process_pool_size: 20,
        seed,
        mode: Mode::Sampled,
    };
    let mut r = rng(seed, 14);
    let bits: Vec<u8> = (0..cfg.n_groups).map(|_| r.gen_range(0..=1)).collect();
    let report = run_protocol(&cfg, &bits)?;
    let sigma = (0.25f64 / cfg.n_groups as f64).sqrt();
    ok(
        (report.accuracy - 0.5).abs() <= 3.0 * sigma && report.max_trace_distance <= 1e-12,
        format!(
            "accuracy {:.3} (3σ = {:.3}), max trace distance {:e}",
            report.accuracy,
            3.0 * sigma,
            report.max_trace_distance
        ),
    )
}

fn sg_even(seed: u64) -> Outcome {
    let report = stern_gerlach(SpinInput::YPlus, 100_000, &mut SeededRng::new(seed))?;
    let p = report.exact_probabilities.clone().unwrap_or_default();
    let f = report.sampled_frequencies.clone().unwrap_or_default();
    let exact_ok = p.len() == 2 && p.iter().all(|x| (x - 0.5).abs() <= 1e-12);
    let offdiag = report.diagnostics["reduced_path_vs_mixture"].as_f64().unwrap_or(1.0);
    ok(
        exact_ok && offdiag <= 1e-12 && within_sigma(&f, &p, 100_000, 3.0),
        format!("exact {p:?}, sampled {f:?}"),
    )
}

fn mz_sweep(_: u64) -> Outcome {
    let p = mach_zehnder_probabilities(false, 0.0)?;
    let mut worst = p.iter().map(|x| (x - 0.5).abs()).fold(0.0, f64::max);
    let mut worst_sum: f64 = 0.0;
    for k in 0..32 {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / 32.0;
        let p = mach_zehnder_probabilities(true, phi)?;
        let want = [(phi / 2.0).sin().powi(2), (phi / 2.0).cos().powi(2)];
        worst = worst.max((p[0] - want[0]).abs().max((p[1] - want[1]).abs()));
        worst_sum = worst_sum.max((p[0] + p[1] - 1.0).abs());
    }
    ok(
        worst <= 1e-10 && worst_sum <= 1e-12,
        format!("max deviation {worst:e}, max sum deviation {worst_sum:e}"),
    )
}

/// Default geometry plus a longer wavelength and a wider slit spacing.
pub fn slit_geometries() -> Vec<SlitGeometry> {
    let base = SlitGeometry::default();
    vec![
        base.clone(),
        SlitGeometry { wavelength: 650e-9, ..base.clone() },
        SlitGeometry { slit_separation: 80e-6, slit_width: 8e-6, x_min: -0.03, x_max: 0.03, ..base },
    ]
}

fn slit_fringes(_: u64) -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for g in slit_geometries() {
        let both = double_slit(&g, [true, true])?;
        let spacing = fringe_spacing(&both).unwrap_or(f64::NAN);
        let vis = fringe_visibility(&both, g.fringe_period());
        let singles = [[true, false], [false, true]]
            .iter()
            .map(|&o| double_slit(&g, o).map(|p| local_maxima(&p.density).len()))
            .collect::<Result<Vec<_>>>()?;
        pass &= (both.riemann_sum() - 1.0).abs() <= 1e-9
            && (spacing - g.fringe_period()).abs() <= g.grid_step()
            && vis >= 0.99
            && singles.iter().all(|&n| n == 1);
        details.push(format!(
            "spacing {spacing:.6e} vs {:.6e}, visibility {vis:.5}, single-slit maxima {singles:?}",
            g.fringe_period()
        ));
    }
    ok(pass, details.join("; "))
}

fn chsh_bounds(seed: u64) -> Outcome {
    let s = chsh_exact(&ChshSetting::optimal(), &StateVector::bell_phi("a", "b")?)?;
    let mut r = rng(seed, 15);
    let one = SubsystemLayout::single("x", 2)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = random_state(&one, &mut r).relabel(SubsystemLayout::single("a", 2)?)?;
        let b = random_state(&one, &mut r).relabel(SubsystemLayout::single("b", 2)?)?;
        worst = worst.max(chsh_exact(&ChshSetting::optimal(), &a.tensor(&b)?)?.abs());
    }
    ok(
        (s - 2.0 * std::f64::consts::SQRT_2).abs() <= 1e-9 && worst <= 2.0 + 1e-9,
        format!("S(Φ) = {s:.12}, max |S| over product states {worst:.6}"),
    )
}

