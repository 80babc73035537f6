//! Simulated iterative amplitude estimation and its oracle-call bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::contracts::{denormalize, PayoffBounds};
use crate::error::{invalid, Error, Result};

/// Worst-case number of Grover-operator applications, 1.4/ε · ln(2/α · log₂(π/(4ε))).
pub fn oracle_call_bound(epsilon: f64, alpha: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            function: "oracle_call_bound",
            reason: format!("need epsilon, alpha in (0, 1), got {epsilon}, {alpha}"),
        });
    }
    let arg = 2.0 / alpha * (std::f64::consts::PI / (4.0 * epsilon)).log2();
    if !(arg > 1.0) {
        return Err(Error::Domain {
            function: "oracle_call_bound",
            reason: format!("log argument {arg} <= 1; epsilon too large for a meaningful bound"),
        });
    }
    Ok(1.4 / epsilon * arg.ln())
}

/// Bernoulli model of A|0⟩ = √(1−a)|ψ₀⟩|0⟩ + √a|ψ₁⟩|1⟩ under powers of Q.
#[derive(Debug, Clone)]
pub struct GroverOracleSim {
    a: f64,
    theta: f64,
    /// Total applications of Q.
    pub call_counter: u64,
    /// Total applications of A (one per shot).
    pub preparations: u64,
    /// Per-application depolarizing strength; 0 is noiseless.
    pub noise: f64,
}

impl GroverOracleSim {
    pub fn new(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(invalid("a", format!("{a} outside [0, 1]")));
        }
        Ok(Self {
            a,
            theta: a.sqrt().asin(),
            call_counter: 0,
            preparations: 0,
            noise: 0.0,
        })
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise.clamp(0.0, 1.0);
        self
    }

    pub fn amplitude(&self) -> f64 {
        self.a
    }

    /// Probability of measuring 1 after Q^k A|0⟩.
    pub fn good_probability(&self, k: u64) -> f64 {
        let p = ((2 * k + 1) as f64 * self.theta).sin().powi(2);
        if self.noise == 0.0 {
            return p;
        }
        let keep = (1.0 - self.noise).powf((2 * k + 1) as f64);
        keep * p + (1.0 - keep) * 0.5
    }

    /// Number of 1-outcomes in `shots` measurements after Q^k A|0⟩.
    pub fn sample(&mut self, k: u64, shots: u64, rng: &mut ChaCha8Rng) -> u64 {
        self.call_counter += shots * k;
        self.preparations += shots;
        let p = self.good_probability(k).clamp(0.0, 1.0);
        Binomial::new(shots, p).expect("valid binomial").sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMethod {
    ClopperPearson,
    Chernoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqaeOptions {
    pub shots: u64,
    pub min_ratio: f64,
    pub confidence: ConfidenceMethod,
}

impl Default for IqaeOptions {
    fn default() -> Self {
        Self {
            shots: 4,
            min_ratio: 3.0,
            confidence: ConfidenceMethod::ClopperPearson,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqaeResult {
    pub a_hat: f64,
    pub interval: (f64, f64),
    /// Applications of Q.
    pub oracle_calls: u64,
    pub shots: u64,
    pub rounds: usize,
    pub powers: Vec<u64>,
}

fn clopper_pearson(ones: u64, shots: u64, alpha: f64) -> (f64, f64) {
    let lo = if ones == 0 {
        0.0
    } else {
        Beta::new(ones as f64, (shots - ones + 1) as f64)
            .expect("positive shapes")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if ones == shots {
        1.0
    } else {
        Beta::new((ones + 1) as f64, (shots - ones) as f64)
            .expect("positive shapes")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

fn chernoff(ones: u64, shots: u64, alpha: f64, max_rounds: f64) -> (f64, f64) {
    let p = ones as f64 / shots as f64;
    let half = ((2.0 * max_rounds / alpha).ln() / (2.0 * shots as f64)).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Largest admissible Q power keeping the scaled θ interval inside one half circle.
fn find_next_k(k: u64, upper: bool, interval: (f64, f64), min_ratio: f64) -> (u64, bool) {
    let (lo, hi) = interval;
    let old_scaling = (4 * k + 2) as f64;
    let max_scaling = (1.0 / (2.0 * (hi - lo))).floor() as i64;
    let mut scaling = max_scaling - (max_scaling - 2).rem_euclid(4);
    while scaling as f64 >= min_ratio * old_scaling {
        let s = scaling as f64;
        let t_min = s * lo - (s * lo).floor();
        let t_max = s * hi - (s * hi).floor();
        if t_min <= t_max && t_max <= 0.5 && t_min <= 0.5 {
            return (((scaling - 2) / 4) as u64, true);
        }
        if t_max >= 0.5 && t_max >= t_min && t_min >= 0.5 {
            return (((scaling - 2) / 4) as u64, false);
        }
        scaling -= 4;
    }
    (k, upper)
}

/// Iterative amplitude estimation with intervals of half-width at most ε and
/// confidence 1 − α.
pub fn iqae_estimate(
    oracle: &mut GroverOracleSim,
    epsilon: f64,
    alpha: f64,
    seed: u64,
) -> Result<IqaeResult> {
    iqae_estimate_with(oracle, epsilon, alpha, seed, &IqaeOptions::default())
}

pub fn iqae_estimate_with(
    oracle: &mut GroverOracleSim,
    epsilon: f64,
    alpha: f64,
    seed: u64,
    opts: &IqaeOptions,
) -> Result<IqaeResult> {
    if !(epsilon > 0.0 && epsilon < 0.5) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            function: "iqae_estimate",
            reason: format!("need epsilon in (0, 0.5) and alpha in (0, 1), got {epsilon}, {alpha}"),
        });
    }
    if opts.shots == 0 || opts.min_ratio <= 1.0 {
        return Err(invalid("options", "need shots > 0 and min_ratio > 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let start_calls = oracle.call_counter;
    let max_rounds = ((opts.min_ratio * std::f64::consts::PI / 8.0 / epsilon).ln()
        / opts.min_ratio.ln())
    .floor()
        + 1.0;
    let round_alpha = alpha / max_rounds;

    // θ in units of 2π, a = sin²(2πθ)
    let mut theta = (0.0f64, 0.25f64);
    let mut a_interval = (0.0, 1.0);
    let mut k = 0u64;
    let mut upper = true;
    let mut history: Vec<(u64, u64)> = Vec::new();
    let mut total_ones = 0u64;
    let (mut round_shots, mut round_ones) = (0u64, 0u64);

    while theta.1 - theta.0 > epsilon / std::f64::consts::PI {
        if history.len() > 100_000 {
            break;
        }
        (k, upper) = find_next_k(k, upper, theta, opts.min_ratio);
        let ones = oracle.sample(k, opts.shots, &mut rng);
        total_ones += ones;
        history.push((k, ones));

        if history.len() > 1 && history[history.len() - 2].0 == k {
            round_shots += opts.shots;
            round_ones += ones;
        } else {
            round_shots = opts.shots;
            round_ones = ones;
        }
        let (a_min, a_max) = match opts.confidence {
            ConfidenceMethod::ClopperPearson => {
                clopper_pearson(round_ones, round_shots, round_alpha)
            }
            ConfidenceMethod::Chernoff => chernoff(round_ones, round_shots, alpha, max_rounds),
        };
        let to_theta = |a: f64| (1.0 - 2.0 * a).clamp(-1.0, 1.0).acos() / two_pi;
        let (t_min, t_max) = if upper {
            (to_theta(a_min), to_theta(a_max))
        } else {
            (1.0 - to_theta(a_max), 1.0 - to_theta(a_min))
        };
        let scaling = (4 * k + 2) as f64;
        // one shared period index; flooring the upper end separately can jump a
        // period when it lands exactly on j + 1 and freezes the interval
        let j = (scaling * theta.0).floor();
        let hi = (j + t_max) / scaling;
        let lo = (j + t_min) / scaling;
        theta = (lo, hi);
        a_interval = ((two_pi * lo).sin().powi(2), (two_pi * hi).sin().powi(2));
    }

    let a_hat = if total_ones == 0 {
        // every shot missed: the likelihood is maximal at a = 0
        0.0
    } else {
        0.5 * (a_interval.0 + a_interval.1)
    };
    Ok(IqaeResult {
        a_hat,
        interval: a_interval,
        oracle_calls: oracle.call_counter - start_calls,
        shots: history.len() as u64 * opts.shots,
        rounds: history.len(),
        powers: history.iter().map(|h| h.0).collect(),
    })
}

/// Two-sided normal quantile z with P(|Z| ≤ z) = 1 − α.
pub fn normal_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Bernoulli samples classical Monte Carlo needs for half-width ε at confidence 1 − α.
pub fn classical_samples_required(a: f64, epsilon: f64, alpha: f64) -> u64 {
    let z = normal_quantile(alpha);
    ((z * z * a * (1.0 - a) / (epsilon * epsilon)).ceil() as u64).max(1)
}

/// Classical estimate of a from the required number of Bernoulli draws.
pub fn classical_estimate(a: f64, epsilon: f64, alpha: f64, seed: u64) -> (f64, u64) {
    let m = classical_samples_required(a, epsilon, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ones = Binomial::new(m, a)
        .expect("valid binomial")
        .sample(&mut rng);
    (ones as f64 / m as f64, m)
}

/// Price from an estimated normalized payoff.
pub fn rescale_estimate(a_hat: f64, bounds: &PayoffBounds) -> f64 {
    denormalize(a_hat, bounds)
}

/// Riemann-summation price, P_max^T (f_δ â + f_min).
pub fn rescale_estimate_riemann(
    a_hat: f64,
    bounds: &PayoffBounds,
    p_max: f64,
    steps: usize,
) -> f64 {
    p_max.powi(steps as i32) * denormalize(a_hat, bounds)
}

/// One ε cell of a quantum-vs-classical sweep over seeded runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Mean Grover-operator applications per IQAE run.
    pub calls_quantum: f64,
    /// Bernoulli samples classical Monte Carlo needs at the same ε and α.
    pub calls_classical: f64,
    /// Fraction of IQAE runs with |â − a| ≤ ε.
    pub coverage: f64,
    pub classical_coverage: f64,
}

pub fn iqae_sweep(
    a: f64,
    epsilons: &[f64],
    alpha: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if runs == 0 {
        return Err(invalid("runs", "need at least one run per cell"));
    }
    epsilons
        .iter()
        .map(|&eps| {
            let results = (0..runs)
                .into_par_iter()
                .map(|i| {
                    let run_seed = seed.wrapping_add(i as u64);
                    let mut oracle = GroverOracleSim::new(a)?;
                    let r = iqae_estimate(&mut oracle, eps, alpha, run_seed)?;
                    let (c_hat, _) =
                        classical_estimate(a, eps, alpha, run_seed ^ 0x9e37_79b9_7f4a_7c15);
                    Ok((
                        (r.a_hat - a).abs() <= eps,
                        r.oracle_calls,
                        (c_hat - a).abs() <= eps,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let n = runs as f64;
            Ok(SweepRow {
                epsilon: eps,
                calls_quantum: results.iter().map(|r| r.1 as f64).sum::<f64>() / n,
                calls_classical: classical_samples_required(a, eps, alpha) as f64,
                coverage: results.iter().filter(|r| r.0).count() as f64 / n,
                classical_coverage: results.iter().filter(|r| r.2).count() as f64 / n,
            })
        })
        .collect()
}

/// Least-squares slope of log y on log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::ShapeMismatch(
            "need at least two matching points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(invalid("xs, ys", "log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        let n = oracle_call_bound(1e-3, 0.32).unwrap();
        assert!(n > 5000.0 && n < 6000.0, "{n}");
        let n4 = oracle_call_bound(1e-4, 0.32).unwrap();
        assert!((n4 / n / 10.0 - 1.0).abs() < 0.1 + 0.05, "{}", n4 / n);
        assert!(oracle_call_bound(0.9, 0.32).is_err());
        assert!(oracle_call_bound(1e-3, 1.0).is_err());
    }

    #[test]
    fn amplitude_zero_is_exact() {
        let mut o = GroverOracleSim::new(0.0).unwrap();
        let r = iqae_estimate(&mut o, 1e-3, 0.32, 1).unwrap();
        assert_eq!(r.a_hat, 0.0);
        assert!(r.oracle_calls <= oracle_call_bound(1e-3, 0.32).unwrap() as u64);
    }

    #[test]
    fn quarter_amplitude_single_power() {
        let o = GroverOracleSim::new(0.25).unwrap();
        assert!((o.good_probability(1) - 1.0).abs() < 1e-15);
        let mut o = o;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(o.sample(1, 50, &mut rng), 50);
        assert_eq!(o.call_counter, 50);
        assert_eq!(o.preparations, 50);
    }

    #[test]
    fn shot_statistics_match_closed_form() {
        let mut o = GroverOracleSim::new(0.13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in [0u64, 1, 3, 7] {
            let shots = 20_000;
            let p = o.good_probability(k);
            let ones = o.sample(k, shots, &mut rng) as f64;
            let sd = (shots as f64 * p * (1.0 - p)).sqrt();
            assert!((ones - shots as f64 * p).abs() <= 3.0 * sd + 1.0);
        }
    }

    #[test]
    fn iqae_width_and_determinism() {
        for a in [0.05, 0.3, 0.5, 0.9] {
            let mut o = GroverOracleSim::new(a).unwrap();
            let r = iqae_estimate(&mut o, 1e-3, 0.32, 17).unwrap();
            assert!(r.interval.1 - r.interval.0 <= 2e-3 + 1e-12);
            let mut o2 = GroverOracleSim::new(a).unwrap();
            assert_eq!(iqae_estimate(&mut o2, 1e-3, 0.32, 17).unwrap(), r);
        }
    }

    #[test]
    fn iqae_coverage() {
        let mut hits = 0;
        let runs = 200;
        for seed in 0..runs {
            let mut o = GroverOracleSim::new(0.3).unwrap();
            let r = iqae_estimate(&mut o, 1e-3, 0.32, seed).unwrap();
            if (r.a_hat - 0.3).abs() <= 1e-3 {
                hits += 1;
            }
        }
        assert!(hits as f64 / runs as f64 >= 0.68, "coverage {hits}/{runs}");
    }

    #[test]
    fn calls_mostly_within_worst_case_bound() {
        let bound = oracle_call_bound(1e-3, 0.32).unwrap() as u64;
        for a in [0.3, 0.5] {
            let mut calls: Vec<u64> = (0..100)
                .map(|seed| {
                    let mut o = GroverOracleSim::new(a).unwrap();
                    iqae_estimate(&mut o, 1e-3, 0.32, seed)
                        .unwrap()
                        .oracle_calls
                })
                .collect();
            calls.sort_unstable();
            assert!(calls[89] <= bound, "a={a} p90 {}", calls[89]);
        }
    }

    #[test]
    fn chernoff_variant_runs() {
        let mut o = GroverOracleSim::new(0.4).unwrap();
        let opts = IqaeOptions {
            confidence: ConfidenceMethod::Chernoff,
            ..IqaeOptions::default()
        };
        let r = iqae_estimate_with(&mut o, 1e-2, 0.05, 3, &opts).unwrap();
        assert!((r.a_hat - 0.4).abs() < 1e-2);
    }

    #[test]
    fn rescaling() {
        let b = PayoffBounds::new(-18.0, 6.0).unwrap();
        assert_eq!(rescale_estimate(0.0, &b), -18.0);
        assert_eq!(rescale_estimate(1.0, &b), 6.0);
        assert!(rescale_estimate(0.2, &b) < rescale_estimate(0.3, &b));
        assert_eq!(rescale_estimate_riemann(1.0, &b, 2.0, 3), 48.0);
    }

    #[test]
    fn classical_sample_count() {
        let m = classical_samples_required(0.3, 1e-2, 0.32);
        let z = normal_quantile(0.32);
        assert!((z - 0.994).abs() < 1e-3);
        assert_eq!(m, (z * z * 0.21 / 1e-4).ceil() as u64);
    }
}
