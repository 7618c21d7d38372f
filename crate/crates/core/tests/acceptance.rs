//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary under `cargo test`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmeasure::experiments::{
    chsh_exact, double_slit, fringe_spacing, local_maxima, mach_zehnder_probabilities,
    stern_gerlach, ChshSetting, SlitGeometry, SpinInput,
};
use qmeasure::measurement::{detect_shots, mark, simulate_device_runs, MeasurementBasis};
use qmeasure::nosignal::{
    alice_prepare_with, bob_probabilities, run_protocol, EnsembleMode, Mode, ProtocolConfig, ALICE,
    BOB,
};
use qmeasure::report::write_csv;
use qmeasure::rng::SeededRng;
use qmeasure::state::{
    c, random_channel, random_density, random_povm, random_state, trace_distance, CMatrix,
    DensityMatrix, StateVector, SubsystemLayout,
};
use qmeasure::stats::{binomial_sigma, frequencies, within_sigma};
use qmeasure::Result;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

/// Runs `f`, checks the optional wall-time budget and prints the line.
fn criterion(n: u32, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Result<Verdict>) -> bool {
    let start = Instant::now();
    let v = f();
    let elapsed = start.elapsed();
    let (mut pass, mut detail) = match v {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail.push_str(&format!("; over budget {b:?}"));
        }
    }
    println!(
        "criterion {n:>2} {}: {name} ({detail}; {:.3} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Brute-force partial trace: enumerate every pair of joint indices, keep
/// the pairs agreeing on all traced digits.
fn oracle_partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let digits: Vec<Vec<usize>> = (0..total)
        .map(|mut idx| {
            let mut d = vec![0; dims.len()];
            for f in (0..dims.len()).rev() {
                d[f] = idx % dims[f];
                idx /= dims[f];
            }
            d
        })
        .collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();
    let kdim: usize = keep.iter().map(|&k| dims[k]).product();
    let kidx = |d: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
    let mut out = CMatrix::zeros(kdim, kdim);
    for i in 0..total {
        for j in 0..total {
            if traced.iter().all(|&f| digits[i][f] == digits[j][f]) {
                out[(kidx(&digits[i]), kidx(&digits[j]))] += rho[(i, j)];
            }
        }
    }
    out
}

fn c1() -> Result<Verdict> {
    let rho = StateVector::bell_phi("a", "b")?.to_density();
    let half = CMatrix::identity(2, 2).scale(0.5);
    let start = Instant::now();
    let ra = rho.partial_trace(&["a"])?;
    let rb = rho.partial_trace(&["b"])?;
    let t = start.elapsed();
    let dev = max_abs_diff(ra.matrix(), &half).max(max_abs_diff(rb.matrix(), &half));
    verdict(
        dev <= 1e-12 && t < Duration::from_millis(1),
        format!("max deviation {dev:.1e}, both traces in {:.1} µs", t.as_secs_f64() * 1e6),
    )
}

fn c2() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let layout = SubsystemLayout::new([(ALICE, 2), (BOB, 2)])?;
    let mut pairs = vec![StateVector::bell_phi(ALICE, BOB)?];
    pairs.extend((0..20).map(|_| random_state(&layout, &mut rng)));
    let processes = (0..100)
        .map(|_| {
            let ch = random_channel(2, rng.gen_range(1..=4), &mut rng)?;
            let m = random_povm(2, rng.gen_range(2..=4), &mut rng)?;
            Ok((ch, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut td, mut gap) = (0.0f64, 0.0f64);
    for pair in &pairs {
        let reduced = alice_prepare_with(pair, 0, EnsembleMode::Exact, &mut rng)?;
        let mixed = alice_prepare_with(pair, 1, EnsembleMode::Exact, &mut rng)?;
        td = td.max(trace_distance(&reduced.state, &mixed.state)?);
        for (ch, m) in &processes {
            let p = bob_probabilities(&reduced, ch, m)?;
            let q = bob_probabilities(&mixed, ch, m)?;
            gap = gap.max(p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    verdict(
        td <= 1e-12 && gap <= 1e-12,
        format!("21 pairs x 100 processes, max trace distance {td:.1e}, max probability gap {gap:.1e}"),
    )
}

fn c3() -> Result<Verdict> {
    let sigma = (0.25f64 / 50.0).sqrt();
    let mut accs = Vec::new();
    for seed in 0..10u64 {
        let cfg = ProtocolConfig {
            n_pairs_per_group: 200,
            n_groups: 50,
            process_pool_size: 20,
            seed: 1000 + seed,
            mode: Mode::Sampled,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let bits: Vec<u8> = (0..50).map(|_| rng.gen_range(0..=1)).collect();
        accs.push(run_protocol(&cfg, &bits)?.accuracy);
    }
    let worst = accs.iter().map(|a| (a - 0.5).abs()).fold(0.0, f64::max);
    verdict(
        worst <= 3.0 * sigma,
        format!("accuracies {accs:?}, max |acc − 0.5| {worst:.3} vs 3σ {:.3}", 3.0 * sigma),
    )
}

fn c4() -> Result<Verdict> {
    let psi = StateVector::qubit("s", c(0.6, 0.0), c(0.8, 0.0))?;
    let ms = mark(&psi, &MeasurementBasis::z(), 2)?;
    let shots = 100_000u64;
    let s = detect_shots(&ms, shots, &mut SeededRng::new(4))?;
    let f0 = frequencies(&s.counts)[0];
    let sigma = binomial_sigma(0.36, shots);
    verdict(
        (f0 - 0.36).abs() <= 3.0 * sigma && s.min_fidelity >= 1.0 - 1e-10,
        format!("outcome-0 frequency {f0} (3σ = {:.5}), min fidelity {}", 3.0 * sigma, s.min_fidelity),
    )
}

fn c5() -> Result<Verdict> {
    let p = stern_gerlach(SpinInput::YPlus, 0, &mut SeededRng::new(5))?
        .exact_probabilities
        .unwrap_or_default();
    let dev = p.iter().map(|x| (x - 0.5).abs()).fold(0.0, f64::max);
    verdict(p.len() == 2 && dev <= 1e-12, format!("upper/lower {p:?}"))
}

fn c6() -> Result<Verdict> {
    let open = mach_zehnder_probabilities(false, 0.0)?;
    let dev_open = open.iter().map(|x| (x - 0.5).abs()).fold(0.0, f64::max);
    let mut dev_sweep = 0.0f64;
    for k in 0..32 {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / 31.0;
        let p = mach_zehnder_probabilities(true, phi)?;
        dev_sweep = dev_sweep
            .max((p[0] - (phi / 2.0).sin().powi(2)).abs())
            .max((p[1] - (phi / 2.0).cos().powi(2)).abs());
    }
    verdict(
        dev_open <= 1e-12 && dev_sweep <= 1e-10,
        format!("one mirror deviation {dev_open:.1e}, 32-point sweep deviation {dev_sweep:.1e}"),
    )
}

fn c7() -> Result<Verdict> {
    let base = SlitGeometry::default();
    let geometries = [
        base.clone(),
        SlitGeometry { wavelength: 650e-9, ..base.clone() },
        SlitGeometry { slit_separation: 80e-6, slit_width: 8e-6, x_min: -0.03, x_max: 0.03, ..base },
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for g in &geometries {
        let profile = double_slit(g, [true, true])?;
        let mut buf = Vec::new();
        write_csv(&profile, &mut buf).expect("in-memory write");
        let rows: Vec<(f64, f64)> = String::from_utf8(buf)
            .expect("utf8")
            .lines()
            .skip(1)
            .map(|l| {
                let (x, d) = l.split_once(',').expect("two columns");
                (x.parse().expect("x"), d.parse().expect("density"))
            })
            .collect();
        let dx = rows[1].0 - rows[0].0;
        let norm: f64 = rows.iter().map(|r| r.1).sum::<f64>() * dx;
        let spacing = fringe_spacing(&profile).unwrap_or(f64::NAN);
        let singles: Vec<usize> = [[true, false], [false, true]]
            .iter()
            .map(|&o| double_slit(g, o).map(|p| local_maxima(&p.density).len()))
            .collect::<Result<_>>()?;
        pass &= (norm - 1.0).abs() <= 1e-9
            && (spacing - g.fringe_period()).abs() <= g.grid_step()
            && singles.iter().all(|&n| n == 1);
        notes.push(format!(
            "norm {norm:.12}, spacing {spacing:.5e} vs λL/d {:.5e} (step {:.1e}), single-slit maxima {singles:?}",
            g.fringe_period(),
            g.grid_step()
        ));
    }
    verdict(pass, notes.join("; "))
}

fn c8() -> Result<Verdict> {
    let s = chsh_exact(&ChshSetting::optimal(), &StateVector::bell_phi("a", "b")?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (la, lb) = (SubsystemLayout::single("a", 2)?, SubsystemLayout::single("b", 2)?);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let product = random_state(&la, &mut rng).tensor(&random_state(&lb, &mut rng))?;
        worst = worst.max(chsh_exact(&ChshSetting::optimal(), &product)?.abs());
    }
    verdict(
        (s - 2.0 * SQRT_2).abs() <= 1e-9 && worst <= 2.0 + 1e-9,
        format!("S(Φ) = {s:.12}, max |S| over 100 product states {worst:.6}"),
    )
}

fn c9() -> Result<Verdict> {
    let psi = StateVector::qubit("s", c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0))?;
    let z = MeasurementBasis::z();
    let small = simulate_device_runs(&psi, &z, 2, 1000, &mut SeededRng::new(92))?;
    let large = simulate_device_runs(&psi, &z, 8, 1000, &mut SeededRng::new(98))?;
    let born = [&small, &large]
        .iter()
        .all(|r| within_sigma(&r.frequencies, &r.probabilities, r.n_runs, 3.0));
    verdict(
        born && large.mean_coherence < small.mean_coherence,
        format!(
            "frequencies {:?} / {:?}, coherence {:.4} ± {:.4} (n_env=2) vs {:.4} ± {:.4} (n_env=8)",
            small.frequencies,
            large.frequencies,
            small.mean_coherence,
            small.coherence_std_error,
            large.mean_coherence,
            large.coherence_std_error
        ),
    )
}

/// Every factor list with dims 1..=8, one to three factors, total ≤ 64,
/// and every nonempty subset of factors to keep.
fn c10() -> Result<Verdict> {
    let mut layouts: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Vec<usize>> = (1..=8).map(|d| vec![d]).collect();
    while let Some(dims) = stack.pop() {
        let total: usize = dims.iter().product();
        if dims.len() < 3 {
            for d in 1..=8 {
                if total * d <= 64 {
                    let mut next = dims.clone();
                    next.push(d);
                    stack.push(next);
                }
            }
        }
        layouts.push(dims);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut worst, mut cases) = (0.0f64, 0usize);
    for dims in &layouts {
        let labels: Vec<String> = (0..dims.len()).map(|i| format!("f{i}")).collect();
        let layout = SubsystemLayout::new(labels.iter().cloned().zip(dims.iter().copied()))?;
        let total = layout.total_dim();
        let rho: DensityMatrix = random_density(&layout, total.min(4), &mut rng)?;
        for mask in 1u32..(1 << dims.len()) {
            let keep: Vec<usize> = (0..dims.len()).filter(|i| mask & (1 << i) != 0).collect();
            let names: Vec<&str> = keep.iter().map(|&k| labels[k].as_str()).collect();
            let got = rho.partial_trace(&names)?;
            worst = worst.max(max_abs_diff(got.matrix(), &oracle_partial_trace(rho.matrix(), dims, &keep)));
            cases += 1;
        }
    }
    verdict(
        worst <= 1e-12,
        format!("{} layouts, {cases} trace selections, max entry deviation {worst:.1e}", layouts.len()),
    )
}

fn main() {
    let results = [
        criterion(1, "reduced states of Φ are I/2", Some(Duration::from_millis(1)), c1),
        criterion(2, "reduced and mixed preparations are equivalent", Some(Duration::from_secs(1)), c2),
        criterion(3, "signalling protocol decodes at chance", Some(Duration::from_secs(30)), c3),
        criterion(4, "mark and detect recover the Born rule", Some(Duration::from_secs(5)), c4),
        criterion(5, "Stern-Gerlach paths split evenly", None, c5),
        criterion(6, "Mach-Zehnder probabilities and phase sweep", None, c6),
        criterion(7, "double-slit normalization, spacing, single-slit maxima", None, c7),
        criterion(8, "CHSH violation for Φ, classical bound for products", None, c8),
        criterion(9, "device runs: Born frequencies, coherence decays", Some(Duration::from_secs(60)), c9),
        criterion(10, "partial trace matches brute-force oracle", None, c10),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
