//! Error bounds: truncation, discretization, arithmetic propagation and totals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market_model::CovarianceMatrix;
use crate::qarith::FixedPointFormat;

/// Gaussian tail mass dropped by a window of ±w standard deviations in every one
/// of the dT dimensions.
pub fn truncation_error(d: usize, steps: usize, w: f64) -> f64 {
    2.0 * (d * steps) as f64 * (-0.5 * w * w).exp()
}

/// Multidimensional midpoint-rule error with 2^n cells per dimension.
pub fn discretization_error(
    beta: f64,
    w: f64,
    sigma_max: f64,
    d: usize,
    steps: usize,
    n: u32,
) -> f64 {
    let dims = (d * steps) as f64;
    let log2 =
        beta.log2() + (dims + 2.0) * (2.0 * w * sigma_max).log2() - 24f64.log2() - 2.0 * n as f64;
    log2.exp2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRequirement {
    /// Qubits per (asset, timestep) register.
    pub n: u32,
    /// n·d·T.
    pub total: u64,
}

/// Smallest register size whose discretization bound meets `eps_disc`.
pub fn qubits_for_target(
    eps_disc: f64,
    beta: f64,
    w: f64,
    sigma_max: f64,
    d: usize,
    steps: usize,
) -> Result<QubitRequirement> {
    if !(eps_disc > 0.0) || !(beta > 0.0) {
        return Err(invalid("eps_disc", "target and beta must be positive"));
    }
    let dims = (d * steps) as f64;
    let raw = 0.5
        * ((beta / 24.0).log2() - eps_disc.log2() + (dims + 2.0) * (2.0 * w * sigma_max).log2());
    let n = raw.ceil().max(1.0) as u32;
    Ok(QubitRequirement {
        n,
        total: n as u64 * (d * steps) as u64,
    })
}

/// Peak of the per-step return density over the window, in units of the grid's
/// uniform weight: (2w)^d Π σ_j / ((2π)^{d/2} √det Σ).
pub fn riemann_pmax(w: f64, cov: &CovarianceMatrix) -> f64 {
    let d = cov.dim();
    let prod_sigma: f64 = (0..d).map(|j| cov.sigma[(j, j)].sqrt()).product();
    (2.0 * w).powi(d as i32) * prod_sigma
        / ((2.0 * std::f64::consts::PI).powf(d as f64 / 2.0) * cov.determinant().sqrt())
}

pub fn binomial2(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Error of the quadratic form Σ C_ij R̄_i R̄_j accumulated over all steps.
pub fn riemann_sum_error(
    fmt: &FixedPointFormat,
    w: f64,
    sigma_max: f64,
    d: usize,
    steps: usize,
) -> f64 {
    let ulp = fmt.resolution();
    ((2.0 * w * sigma_max + fmt.n as f64) * ulp + ulp * ulp)
        * (d + binomial2(d)) as f64
        * steps as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DensityComponents {
    pub eps_sin: f64,
    pub eps_arcsin: f64,
    pub eps_sq: f64,
    pub eps_exp: f64,
    pub eps_sum: f64,
}

/// Error of |arcsin √P(R)⟩ and its ancilla rotation.
pub fn riemann_density_error(c: &DensityComponents) -> Result<f64> {
    let inner = c.eps_sq + (c.eps_exp + c.eps_sum).sqrt();
    if inner > 1.5 {
        return Err(Error::Domain {
            function: "riemann_density_error",
            reason: format!("propagated error {inner} leaves the arcsine domain"),
        });
    }
    Ok(c.eps_sin + c.eps_arcsin - (0.5 - inner).asin() + 0.5f64.asin())
}

pub fn riemann_arith_error(
    eps_f: f64,
    eps_dens: f64,
    w: f64,
    sigma_max: f64,
    d: usize,
    steps: usize,
) -> f64 {
    eps_f / (2.0 * w * sigma_max).powi((d * steps) as i32) + eps_dens
}

pub fn reparam_arith_error(w: f64, d: usize, steps: usize, eps_dens: f64, eps_f: f64) -> f64 {
    2.0 * w * (d * steps) as f64 * eps_dens + eps_f
}

/// Rounding error of one fixed-point addition.
pub fn eps_add(fmt: &FixedPointFormat) -> f64 {
    fmt.resolution()
}

/// Rounding error of one fixed-point multiplication.
pub fn eps_mul_rounding(fmt: &FixedPointFormat) -> f64 {
    fmt.n as f64 * fmt.resolution()
}

/// Error of X·Y for factors bounded by `b` carrying errors `eps_x`, `eps_y`.
pub fn eps_mul(b: f64, eps_x: f64, eps_y: f64, fmt: &FixedPointFormat) -> f64 {
    b * (eps_x + eps_y) + eps_x * eps_y + eps_mul_rounding(fmt)
}

pub fn eps_exp(eps_in: f64, eps_exp0: f64) -> f64 {
    eps_exp0 + eps_in
}

pub fn eps_sqrt(eps_in: f64, fmt: &FixedPointFormat) -> f64 {
    2f64.powf(-(fmt.fractional_bits() as f64) / 2.0) + eps_in.sqrt()
}

pub fn eps_arcsin(eps_in: f64, eps_arcsin0: f64) -> f64 {
    (0.5f64.asin() - (0.5 - eps_in).max(-1.0).asin()).abs() + eps_arcsin0
}

pub fn eps_sin(eps_in: f64, eps_sin0: f64) -> f64 {
    eps_in + eps_sin0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMethod {
    Riemann,
    Reparam,
}

/// Payoff-normalized error components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorComponents {
    pub eps_trunc: f64,
    pub eps_disc: f64,
    pub eps_arith: f64,
    pub eps_amp: f64,
}

impl ErrorComponents {
    pub fn sum(&self) -> f64 {
        self.eps_trunc + self.eps_disc + self.eps_arith + self.eps_amp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub method: BudgetMethod,
    pub eps_trunc: f64,
    pub eps_disc: f64,
    pub eps_arith: f64,
    pub eps_amp: f64,
    /// P_max^T·f_δ for Riemann summation, f_δ for re-parameterization.
    pub scale: f64,
    /// Total error in currency.
    pub eps_total: f64,
}

impl ErrorBudget {
    fn from_components(method: BudgetMethod, c: &ErrorComponents, scale: f64) -> Self {
        Self {
            method,
            eps_trunc: c.eps_trunc,
            eps_disc: c.eps_disc,
            eps_arith: c.eps_arith,
            eps_amp: c.eps_amp,
            scale,
            eps_total: scale * c.sum(),
        }
    }

    pub fn components(&self) -> ErrorComponents {
        ErrorComponents {
            eps_trunc: self.eps_trunc,
            eps_disc: self.eps_disc,
            eps_arith: self.eps_arith,
            eps_amp: self.eps_amp,
        }
    }
}

pub fn riemann_total(
    components: &ErrorComponents,
    p_max: f64,
    steps: usize,
    f_delta: f64,
) -> ErrorBudget {
    let scale = p_max.powi(steps as i32) * f_delta;
    ErrorBudget::from_components(BudgetMethod::Riemann, components, scale)
}

pub fn reparam_total(components: &ErrorComponents, f_delta: f64) -> ErrorBudget {
    ErrorBudget::from_components(BudgetMethod::Reparam, components, f_delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_model::{build_covariance, GbmParams};
    use proptest::prelude::*;

    fn fmt(n: u32, p: u32) -> FixedPointFormat {
        FixedPointFormat::new(n, p).unwrap()
    }

    #[test]
    fn truncation_examples() {
        let w = std::f64::consts::PI / 2f64.sqrt();
        let v = truncation_error(1, 1, w);
        assert!((v - 2.0 * (-std::f64::consts::PI.powi(2) / 4.0).exp()).abs() < 1e-15);
        assert!((v - 0.170).abs() < 1e-3);
        assert!(truncation_error(1, 1, 40.0) < 1e-300);
        let v = truncation_error(3, 20, 5.0);
        assert!((v - 120.0 * (-12.5f64).exp()).abs() < 1e-15);
        assert!((v - 4.47e-4).abs() < 1e-5);
    }

    #[test]
    fn discretization_scaling_and_inverse() {
        let a = discretization_error(17.0, 5.0, 0.09, 3, 20, 10);
        let b = discretization_error(17.0, 5.0, 0.09, 3, 20, 11);
        assert!((a / b - 4.0).abs() < 1e-9);
        for n in [3u32, 8, 20, 34] {
            let e = discretization_error(2.0, 4.0, 0.2, 1, 3, n);
            let q = qubits_for_target(e, 2.0, 4.0, 0.2, 1, 3).unwrap();
            assert!((q.n as i64 - n as i64).abs() <= 1, "n {n} -> {}", q.n);
            assert_eq!(q.total, q.n as u64 * 3);
        }
    }

    #[test]
    fn pmax_examples() {
        let cov = build_covariance(&GbmParams::uncorrelated(
            0.0,
            vec![0.1, 0.25, 0.4],
            0.05,
            20,
        ))
        .unwrap();
        let p = riemann_pmax(5.0, &cov);
        assert!((p - (10.0 / (2.0 * std::f64::consts::PI).sqrt()).powi(3)).abs() < 1e-9);
        assert!((p - 63.49).abs() < 0.05);
        let cov = build_covariance(&GbmParams::uncorrelated(0.0, vec![0.3], 1.0, 1)).unwrap();
        let w = (2.0 * std::f64::consts::PI).sqrt() / 2.0;
        assert!((riemann_pmax(w, &cov) - 1.0).abs() < 1e-12);

        let mut params = GbmParams::uncorrelated(0.0, vec![0.2, 0.3], 0.5, 1);
        params.rho[0][1] = 0.6;
        params.rho[1][0] = 0.6;
        let cov = build_covariance(&params).unwrap();
        let expected =
            (2.0 * 4.0f64).powi(2) / (2.0 * std::f64::consts::PI) / (1.0 - 0.36f64).sqrt();
        assert!((riemann_pmax(4.0, &cov) - expected).abs() < 1e-9);
    }

    #[test]
    fn sum_error_examples() {
        let f = fmt(34, 2);
        let ulp = 2f64.powi(-32);
        let v = riemann_sum_error(&f, 5.0, 0.0894, 3, 20);
        let hand = ((10.0 * 0.0894 + 34.0) * ulp + ulp * ulp) * 6.0 * 20.0;
        assert!((v - hand).abs() < 1e-20);
        let one = riemann_sum_error(&f, 5.0, 0.1, 1, 1);
        assert!((riemann_sum_error(&f, 5.0, 0.1, 1, 7) - 7.0 * one).abs() < 1e-20);
        let g = fmt(12, 3);
        let v = riemann_sum_error(&g, 5.0, 0.4, 1, 26);
        assert!((v - ((4.0 + 12.0) / 512.0 + 1.0 / 262144.0) * 26.0).abs() < 1e-15);
    }

    #[test]
    fn density_error_examples() {
        assert_eq!(
            riemann_density_error(&DensityComponents::default()).unwrap(),
            0.0
        );
        let c = DensityComponents {
            eps_sin: 1e-6,
            eps_arcsin: 2e-6,
            eps_sq: 1.5e-5,
            eps_exp: 1e-7,
            eps_sum: 2e-8,
        };
        let inner: f64 = 1.5e-5 + (1e-7f64 + 2e-8).sqrt();
        let hand = 3e-6 + (0.5f64).asin() - (0.5 - inner).asin();
        assert!((riemann_density_error(&c).unwrap() - hand).abs() < 1e-15);
    }

    #[test]
    fn reparam_arith_examples() {
        let v = reparam_arith_error(5.0, 3, 20, 2e-6, 1e-4);
        assert!((v - (600.0 * 2e-6 + 1e-4)).abs() < 1e-15);
        assert_eq!(reparam_arith_error(5.0, 3, 20, 0.0, 1e-4), 1e-4);
        let a = reparam_arith_error(5.0, 1, 10, 1e-6, 0.0);
        assert!((reparam_arith_error(5.0, 1, 20, 1e-6, 0.0) - 2.0 * a).abs() < 1e-18);
    }

    #[test]
    fn propagation_examples() {
        let f = fmt(16, 4);
        assert_eq!(eps_mul(3.0, 0.0, 0.0, &f), 16.0 / 4096.0);
        assert_eq!(eps_sqrt(0.0, &f), 1.0 / 64.0);
        assert_eq!(eps_exp(0.0, 1e-6), 1e-6);
        assert!((eps_sin(1e-5, 1e-6) - 1.1e-5).abs() < 1e-18);
        assert!(eps_arcsin(1e-4, 0.0) > 1e-4);
    }

    #[test]
    fn totals() {
        let c = ErrorComponents {
            eps_trunc: 4.5e-4,
            eps_disc: 1e-5,
            eps_arith: 1.3e-3,
            eps_amp: 1e-3,
        };
        let r = riemann_total(&c, 1.0, 20, 24.0);
        assert_eq!(r.scale, 24.0);
        let r = riemann_total(&c, 64.0, 20, 1.0);
        assert!(r.scale > 1e35 && r.scale < 1e37);
        assert_eq!(
            reparam_total(&ErrorComponents::default(), 24.0).eps_total,
            0.0
        );
        let b = reparam_total(&c, 2.0);
        assert!((b.eps_total - 2.0 * c.sum()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bounds_monotone(a in 0.0f64..1e-2, b in 0.0f64..1e-2, da in 0.0f64..1e-3) {
            let f = fmt(20, 3);
            prop_assert!(eps_mul(2.0, a + da, b, &f) >= eps_mul(2.0, a, b, &f));
            prop_assert!(eps_sqrt(a + da, &f) >= eps_sqrt(a, &f));
            prop_assert!(eps_arcsin(a + da, b) >= eps_arcsin(a, b));
            prop_assert!(eps_exp(a + da, b) >= eps_exp(a, b));
            let base = DensityComponents { eps_sin: a, eps_arcsin: b, eps_sq: a, eps_exp: b, eps_sum: a };
            let bumped = DensityComponents { eps_sum: a + da, ..base };
            prop_assert!(riemann_density_error(&bumped).unwrap() >= riemann_density_error(&base).unwrap());
            prop_assert!(truncation_error(2, 3, 3.0 + a) <= truncation_error(2, 3, 3.0));
        }
    }
}
