//! Sampling helpers and the statistical checks used by tests and `verify`.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Draws an index from a discrete distribution. Falls back to the last
/// index with positive weight when rounding leaves the draw past the total.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

pub fn histogram(outcomes: impl IntoIterator<Item = usize>, n: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n];
    for o in outcomes {
        counts[o] += 1;
    }
    counts
}

/// Binomial standard deviation of a frequency estimate.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Whether every observed frequency lies within `k` binomial standard
/// deviations of its expected probability.
pub fn within_sigma(freqs: &[f64], probs: &[f64], n: u64, k: f64) -> bool {
    freqs
        .iter()
        .zip(probs)
        .all(|(&f, &p)| (f - p).abs() <= k * binomial_sigma(p, n) + f64::EPSILON)
}

/// Pearson statistic and degrees of freedom of one goodness-of-fit table.
/// Cells with zero expected probability must have zero counts (otherwise
/// the statistic is infinite); they add no degrees of freedom.
pub fn chi_square_statistic(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = p * n as f64;
        if expected <= 0.0 {
            if c > 0 {
                return (f64::INFINITY, 1);
            }
            continue;
        }
        cells += 1;
        stat += (c as f64 - expected).powi(2) / expected;
    }
    (stat, cells.saturating_sub(1))
}

fn upper_tail(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    if stat.is_infinite() {
        return 0.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}

/// Pearson chi-square goodness-of-fit p-value.
pub fn chi_square_p_value(counts: &[u64], probs: &[f64]) -> f64 {
    let (stat, dof) = chi_square_statistic(counts, probs);
    upper_tail(stat, dof)
}

/// One p-value for several independent tables: statistics and degrees of
/// freedom add.
pub fn pooled_chi_square_p_value(tables: &[(Vec<u64>, Vec<f64>)]) -> f64 {
    let (stat, dof) = tables
        .iter()
        .map(|(c, p)| chi_square_statistic(c, p))
        .fold((0.0, 0), |(s, d), (s1, d1)| (s + s1, d + d1));
    upper_tail(stat, dof)
}
