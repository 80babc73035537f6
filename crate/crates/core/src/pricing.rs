//! Classical pricing oracles: Monte Carlo and exact lattice enumeration.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::contracts::{normalize, payoff_bounds, ContractSpec};
use crate::error::{invalid, Error, Result};
use crate::market_model::{
    build_covariance, cholesky_factor, returns_to_prices, standard_lattice, DimensionLattice,
    GbmParams, GridSpec, ReturnPath,
};

/// Largest number of lattice qubits n·d·T that `exact_lattice_price` will enumerate.
pub const ENUMERATION_LIMIT: usize = 26;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub paths: u64,
    pub seed: u64,
}

/// Where Monte Carlo draws its standard-normal shocks from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Continuous,
    /// Shocks drawn from the standard-normal midpoint lattice, i.e. the discretized
    /// distribution that amplitude estimation sees.
    Lattice { n: u32, w: f64 },
}

/// Shared path machinery: drift, Cholesky factor and contract evaluation.
struct PathModel<'a> {
    params: &'a GbmParams,
    contract: &'a ContractSpec,
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl<'a> PathModel<'a> {
    fn new(params: &'a GbmParams, contract: &'a ContractSpec) -> Result<Self> {
        contract.validate()?;
        let cov = build_covariance(params)?;
        Ok(Self {
            params,
            contract,
            mean: DVector::from_vec(params.drift()),
            chol: cholesky_factor(&cov)?,
        })
    }

    /// Discounted payoff of the path whose step-t shocks are `z[t*d..(t+1)*d]`.
    fn payoff(&self, z: &[f64]) -> Result<f64> {
        let d = self.params.d;
        let values = z
            .chunks(d)
            .map(|zt| {
                (&self.mean + &self.chol * DVector::from_column_slice(zt))
                    .iter()
                    .copied()
                    .collect()
            })
            .collect();
        let prices = returns_to_prices(&self.params.s0, &ReturnPath { values })?;
        self.contract
            .discounted_payoff(&prices, &self.params.s0, self.params.dt, self.params.r)
    }
}

pub fn mc_price(
    params: &GbmParams,
    contract: &ContractSpec,
    paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    mc_price_with(params, contract, paths, seed, Sampling::Continuous)
}

/// Monte Carlo price with one independent ChaCha stream per path, so results
/// do not depend on the thread count.
pub fn mc_price_with(
    params: &GbmParams,
    contract: &ContractSpec,
    paths: u64,
    seed: u64,
    sampling: Sampling,
) -> Result<McEstimate> {
    if paths < 2 {
        return Err(invalid("paths", "need at least 2 paths"));
    }
    let model = PathModel::new(params, contract)?;
    let dims = params.d * params.steps;
    let (table, mass) = match sampling {
        Sampling::Continuous => (None, 1.0),
        Sampling::Lattice { n, w } => {
            let lat = standard_lattice(n, w)?;
            let m = lat.mass();
            let mut acc = 0.0;
            let cdf: Vec<f64> = lat
                .pmf
                .iter()
                .map(|p| {
                    acc += p / m;
                    acc
                })
                .collect();
            (Some((lat.midpoints, cdf)), m.powi(dims as i32))
        }
    };
    let draws = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let z: Vec<f64> = match &table {
                None => (0..dims).map(|_| rng.sample(StandardNormal)).collect(),
                Some((mid, cdf)) => (0..dims)
                    .map(|_| {
                        let u: f64 = rng.random();
                        mid[cdf.partition_point(|c| *c < u).min(mid.len() - 1)]
                    })
                    .collect(),
            };
            model.payoff(&z)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut sum = CompensatedSum::default();
    draws.iter().for_each(|v| sum.add(*v));
    let mean = sum.value() / paths as f64;
    let mut ss = CompensatedSum::default();
    draws.iter().for_each(|v| ss.add((v - mean) * (v - mean)));
    let var = ss.value() / (paths - 1) as f64;
    Ok(McEstimate {
        estimate: mass * mean,
        stderr: mass * (var / paths as f64).sqrt(),
        paths,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePrice {
    /// Σ p(ω) f(ω) over retained lattice paths.
    pub price: f64,
    /// Σ p(ω) f̃(ω): the amplitude ideal estimation would measure. Absent for
    /// contracts without finite payoff bounds.
    pub amplitude: Option<f64>,
    /// Retained probability mass Σ p(ω).
    pub mass: f64,
    pub lattice_size: u64,
}

pub fn exact_lattice_price(
    params: &GbmParams,
    contract: &ContractSpec,
    grid: &GridSpec,
) -> Result<LatticePrice> {
    grid.validate()?;
    let dims = params.d * params.steps;
    let bits = grid.n as usize * dims;
    if bits > ENUMERATION_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            log2_size: bits,
            limit: ENUMERATION_LIMIT,
        });
    }
    let model = PathModel::new(params, contract)?;
    let bounds = payoff_bounds(contract, params.r).ok();
    let lat = standard_lattice(grid.n, grid.w)?;
    let radix_bits = grid.n as usize;
    let mask = (1u64 << radix_bits) - 1;
    let size = 1u64 << bits;
    let block = 1u64 << 12;

    let partials = (0..size.div_ceil(block))
        .into_par_iter()
        .map(|b| -> Result<[CompensatedSum; 3]> {
            let mut acc = [CompensatedSum::default(); 3];
            let mut z = vec![0.0; dims];
            for idx in (b * block)..((b + 1) * block).min(size) {
                let mut p = 1.0;
                for (k, zk) in z.iter_mut().enumerate() {
                    let digit = ((idx >> (k * radix_bits)) & mask) as usize;
                    *zk = lat.midpoints[digit];
                    p *= lat.pmf[digit];
                }
                let f = model.payoff(&z)?;
                acc[0].add(p * f);
                acc[2].add(p);
                if let Some(bd) = &bounds {
                    acc[1].add(p * normalize(f, bd)?);
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = [CompensatedSum::default(); 3];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(LatticePrice {
        price: total[0].value(),
        amplitude: bounds.map(|_| total[1].value()),
        mass: total[2].value(),
        lattice_size: size,
    })
}

/// Product of dT independent standard-normal lattices pushed through μ + L·z.
#[derive(Debug, Clone)]
pub struct ReparamDistribution {
    pub lattice: DimensionLattice,
    pub mean: Vec<f64>,
    pub chol: DMatrix<f64>,
    pub d: usize,
    pub steps: usize,
}

pub fn reparam_distribution(grid: &GridSpec, params: &GbmParams) -> Result<ReparamDistribution> {
    let cov = build_covariance(params)?;
    Ok(ReparamDistribution {
        lattice: standard_lattice(grid.n, grid.w)?,
        mean: params.drift(),
        chol: cholesky_factor(&cov)?,
        d: params.d,
        steps: params.steps,
    })
}

impl ReparamDistribution {
    /// Returns of one step for per-asset lattice indices.
    pub fn transform(&self, indices: &[usize]) -> Vec<f64> {
        let z = DVector::from_iterator(self.d, indices.iter().map(|&i| self.lattice.midpoints[i]));
        (DVector::from_column_slice(&self.mean) + &self.chol * z)
            .iter()
            .copied()
            .collect()
    }

    /// Joint probability of a full path given its dT lattice indices.
    pub fn joint_pmf(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.lattice.pmf[i]).product()
    }

    /// Draws one step of returns from the lattice distribution.
    pub fn sample_step<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mass = self.lattice.mass();
        let idx: Vec<usize> = (0..self.d)
            .map(|_| {
                let mut u = rng.random::<f64>() * mass;
                for (i, p) in self.lattice.pmf.iter().enumerate() {
                    if u < *p {
                        return i;
                    }
                    u -= p;
                }
                self.lattice.pmf.len() - 1
            })
            .collect();
        self.transform(&idx)
    }
}

/// Black-Scholes price of a European call.
pub fn black_scholes_call(s0: f64, strike: f64, r: f64, sigma: f64, maturity: f64) -> f64 {
    let n = Normal::standard();
    let sq = sigma * maturity.sqrt();
    let d1 = ((s0 / strike).ln() + (r + 0.5 * sigma * sigma) * maturity) / sq;
    let d2 = d1 - sq;
    s0 * n.cdf(d1) - strike * (-r * maturity).exp() * n.cdf(d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::{
        AutocallableSpec, BasketMode, BinaryOption, EuropeanCallSpec, KnockInPut, TarfSpec,
    };

    pub(crate) fn desk_autocall_spec() -> ContractSpec {
        ContractSpec::Autocallable(AutocallableSpec {
            binaries: (1..=3)
                .map(|i| BinaryOption {
                    strike: 1.1,
                    time: i as f64,
                    payoff: 2.0 * i as f64,
                })
                .collect(),
            put: Some(KnockInPut {
                strike: 1.0,
                barrier: 0.7,
                notional: 18.0,
                barrier_dates: vec![1.0, 2.0, 3.0],
            }),
            basket: BasketMode::WorstOf,
        })
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let params = GbmParams::uncorrelated(0.05, vec![1e-8], 1.0, 3);
        let c = desk_autocall_spec();
        let est = mc_price(&params, &c, 1000, 1).unwrap();
        // cumulative return e^{0.05 t}: 1.051, 1.105 -> pays $4 at t = 2
        let expected = 4.0 * (-0.1f64).exp();
        assert!((est.estimate - expected).abs() < 1e-6);
        assert!(est.stderr < 1e-6);
    }

    #[test]
    fn mc_is_reproducible_across_thread_counts() {
        let params = GbmParams::uncorrelated(0.01, vec![0.2], 1.0, 3);
        let c = desk_autocall_spec();
        let a = mc_price(&params, &c, 5000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| mc_price(&params, &c, 5000, 42).unwrap());
        assert_eq!(a, b);
        let c2 = mc_price(&params, &c, 5000, 43).unwrap();
        assert_ne!(a.estimate, c2.estimate);
    }

    #[test]
    fn stderr_halves_when_paths_quadruple() {
        let params = GbmParams::uncorrelated(0.01, vec![0.3], 1.0, 3);
        let c = desk_autocall_spec();
        let mut ratios = Vec::new();
        for seed in 0..5 {
            let a = mc_price(&params, &c, 4000, seed).unwrap();
            let b = mc_price(&params, &c, 16000, seed + 100).unwrap();
            ratios.push(a.stderr / b.stderr);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 2.0).abs() < 0.2 * 2.0, "ratio {mean}");
    }

    #[test]
    fn constant_payoff_returns_mass() {
        let params = GbmParams::uncorrelated(0.0, vec![0.2, 0.3], 0.5, 2);
        let c = ContractSpec::Constant {
            amount: 3.0,
            time: 1.0,
        };
        for (n, w) in [(2, 2.0), (3, 3.0), (3, 6.0)] {
            let g = GridSpec::new(n, w).unwrap();
            let lp = exact_lattice_price(&params, &c, &g).unwrap();
            assert!((lp.price - 3.0 * lp.mass).abs() < 1e-12);
            let m1 = standard_lattice(n, w).unwrap().mass();
            assert!((lp.mass - m1.powi(4)).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_guard() {
        let params = GbmParams::uncorrelated(0.0, vec![0.2; 3], 0.05, 20);
        let g = GridSpec::new(5, 5.0).unwrap();
        assert!(matches!(
            exact_lattice_price(&params, &desk_autocall_spec(), &g),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn mc_matches_fine_lattice() {
        let params = GbmParams::uncorrelated(0.02, vec![0.2], 1.0, 3);
        let c = desk_autocall_spec();
        let lp = exact_lattice_price(&params, &c, &GridSpec::new(6, 6.0).unwrap()).unwrap();
        let mc = mc_price(&params, &c, 100_000, 7).unwrap();
        // allowance for discretizing the binary strikes at 2^6 cells
        assert!(
            (mc.estimate - lp.price).abs() < 3.0 * mc.stderr + 0.01,
            "{mc:?} vs {lp:?}"
        );
    }

    #[test]
    fn asset_relabelling_invariance() {
        // Exact only without correlation: the Cholesky factor of a permuted
        // covariance is not the permuted factor, so the lattices differ.
        let mut p = GbmParams::uncorrelated(0.01, vec![0.15, 0.35], 0.5, 2);
        p.s0 = vec![1.0, 2.0];
        let mut q = p.clone();
        q.sigmas.reverse();
        q.s0.reverse();
        let tarf = |asset| {
            ContractSpec::Tarf(TarfSpec {
                forward: 1.0,
                payment_times: vec![0.5, 1.0],
                upper_strike: 1.0,
                lower_strike: 0.9,
                barrier: 1.5,
                alpha: 2.0,
                cap: 0.3,
                asset,
            })
        };
        let s0_scaled = |spec: ContractSpec, s: f64| match spec {
            ContractSpec::Tarf(mut t) => {
                t.forward *= s;
                t.upper_strike *= s;
                t.lower_strike *= s;
                t.barrier *= s;
                t.cap *= s;
                ContractSpec::Tarf(t)
            }
            other => other,
        };
        let g = GridSpec::new(3, 4.0).unwrap();
        let a = exact_lattice_price(&p, &tarf(0), &g).unwrap();
        let b = exact_lattice_price(&q, &tarf(1), &g).unwrap();
        assert!((a.price - b.price).abs() < 1e-12);
        let a = exact_lattice_price(&p, &s0_scaled(tarf(1), 2.0), &g).unwrap();
        let b = exact_lattice_price(&q, &s0_scaled(tarf(0), 2.0), &g).unwrap();
        assert!((a.price - b.price).abs() < 1e-12);
    }

    #[test]
    fn reparam_single_asset_matches_lattice() {
        let params = GbmParams::uncorrelated(0.03, vec![0.25], 0.5, 1);
        let grid = GridSpec::new(4, 5.0).unwrap();
        let rd = reparam_distribution(&grid, &params).unwrap();
        let dim = &crate::market_model::lattice(&grid, &params).unwrap()[0];
        for i in 0..16 {
            assert!((rd.transform(&[i])[0] - dim.midpoints[i]).abs() < 1e-12);
            assert!((rd.joint_pmf(&[i]) - dim.pmf[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn reparam_independent_joint_is_outer_product() {
        let params = GbmParams::uncorrelated(0.0, vec![0.2, 0.4], 1.0, 1);
        let rd = reparam_distribution(&GridSpec::new(3, 4.0).unwrap(), &params).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let r = rd.transform(&[i, j]);
                assert!((r[0] - (rd.mean[0] + 0.2 * rd.lattice.midpoints[i])).abs() < 1e-12);
                assert!((r[1] - (rd.mean[1] + 0.4 * rd.lattice.midpoints[j])).abs() < 1e-12);
                assert_eq!(rd.joint_pmf(&[i, j]), rd.lattice.pmf[i] * rd.lattice.pmf[j]);
            }
        }
    }

    #[test]
    fn reparam_correlation() {
        let rho = -0.6;
        let mut params = GbmParams::uncorrelated(0.0, vec![0.2, 0.4], 1.0, 1);
        params.rho[0][1] = rho;
        params.rho[1][0] = rho;
        let rd = reparam_distribution(&GridSpec::new(6, 5.0).unwrap(), &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| rd.sample_step(&mut rng)).collect();
        let mean = |k: usize| xs.iter().map(|x| x[k]).sum::<f64>() / n as f64;
        let (m0, m1) = (mean(0), mean(1));
        let cov = |a: usize, ma: f64, b: usize, mb: f64| {
            xs.iter().map(|x| (x[a] - ma) * (x[b] - mb)).sum::<f64>()
        };
        let corr = cov(0, m0, 1, m1) / (cov(0, m0, 0, m0) * cov(1, m1, 1, m1)).sqrt();
        let se = (1.0 - rho * rho) / (n as f64).sqrt();
        assert!((corr - rho).abs() < 3.0 * se + 0.01, "corr {corr}");
    }

    #[test]
    fn european_call_against_black_scholes() {
        let params = GbmParams {
            s0: vec![100.0],
            ..GbmParams::uncorrelated(0.03, vec![0.25], 0.5, 2)
        };
        let c = ContractSpec::EuropeanCall(EuropeanCallSpec {
            strike: 105.0,
            maturity: 1.0,
            asset: 0,
        });
        let mc = mc_price(&params, &c, 100_000, 11).unwrap();
        let bs = black_scholes_call(100.0, 105.0, 0.03, 0.25, 1.0);
        assert!(
            (mc.estimate - bs).abs() < 3.0 * mc.stderr,
            "{} vs {bs}",
            mc.estimate
        );
    }

    #[test]
    fn lattice_sampling_targets_lattice_price() {
        let params = GbmParams::uncorrelated(0.02, vec![0.2], 1.0, 3);
        let c = desk_autocall_spec();
        let g = GridSpec::new(3, 5.0).unwrap();
        let lp = exact_lattice_price(&params, &c, &g).unwrap();
        let mc = mc_price_with(&params, &c, 50_000, 5, Sampling::Lattice { n: 3, w: 5.0 }).unwrap();
        assert!((mc.estimate - lp.price).abs() < 3.0 * mc.stderr);
    }
}
