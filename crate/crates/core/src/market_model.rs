//! Geometric Brownian motion in price and return space.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub r: f64,
    pub sigmas: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub dt: f64,
    pub d: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub s0: Vec<f64>,
}

impl GbmParams {
    /// Uncorrelated model with unit spot prices.
    pub fn uncorrelated(r: f64, sigmas: Vec<f64>, dt: f64, steps: usize) -> Self {
        let d = sigmas.len();
        let rho = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            r,
            sigmas,
            rho,
            dt,
            d,
            steps,
            s0: vec![1.0; d],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        if self.steps == 0 {
            return Err(invalid("T", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !self.r.is_finite() {
            return Err(invalid("r", "must be finite"));
        }
        if self.sigmas.len() != d {
            return Err(invalid(
                "sigmas",
                format!("expected {d} entries, got {}", self.sigmas.len()),
            ));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(invalid("sigmas", format!("volatility {s} is not positive")));
        }
        if self.s0.len() != d {
            return Err(invalid(
                "s0",
                format!("expected {d} entries, got {}", self.s0.len()),
            ));
        }
        if let Some(s) = self.s0.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(invalid("s0", format!("spot price {s} is not positive")));
        }
        if self.rho.len() != d || self.rho.iter().any(|row| row.len() != d) {
            return Err(invalid("rho", format!("must be {d}x{d}")));
        }
        for i in 0..d {
            if (self.rho[i][i] - 1.0).abs() > 1e-12 {
                return Err(invalid(
                    "rho",
                    format!("diagonal entry [{i}][{i}] is not 1"),
                ));
            }
            for j in 0..d {
                let v = self.rho[i][j];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(invalid(
                        "rho",
                        format!("entry [{i}][{j}] = {v} outside [-1, 1]"),
                    ));
                }
                if (v - self.rho[j][i]).abs() > 1e-12 {
                    return Err(invalid("rho", format!("not symmetric at [{i}][{j}]")));
                }
            }
        }
        Ok(())
    }

    /// Per-step mean log-return of each asset, (r - sigma^2/2) dt.
    pub fn drift(&self) -> Vec<f64> {
        self.sigmas
            .iter()
            .map(|s| (self.r - 0.5 * s * s) * self.dt)
            .collect()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub sigma: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.sigma.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn determinant(&self) -> f64 {
        self.sigma.determinant()
    }
}

/// Which reading of "sigma_max" to use when sizing the return window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMaxConvention {
    /// Square root of the largest eigenvalue of the per-step covariance.
    #[default]
    SqrtEigenvalue,
    /// The largest eigenvalue itself.
    Eigenvalue,
}

pub fn build_covariance(params: &GbmParams) -> Result<CovarianceMatrix> {
    params.validate()?;
    let d = params.d;
    let sigma = DMatrix::from_fn(d, d, |i, j| {
        params.dt * params.rho[i][j] * params.sigmas[i] * params.sigmas[j]
    });
    let cov = CovarianceMatrix { sigma };
    let ev = cov.eigenvalues();
    let (lo, hi) = (ev[0], ev[d - 1]);
    if lo <= 1e-12 * hi {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok(cov)
}

/// Lower-triangular L with L Lᵀ = Σ.
pub fn cholesky_factor(cov: &CovarianceMatrix) -> Result<DMatrix<f64>> {
    match Cholesky::new(cov.sigma.clone()) {
        Some(c) => Ok(c.l()),
        None => Err(Error::NotPositiveDefinite {
            min_eigenvalue: cov.eigenvalues()[0],
        }),
    }
}

pub fn sigma_max(cov: &CovarianceMatrix, convention: SigmaMaxConvention) -> f64 {
    let lmax = *cov.eigenvalues().last().expect("non-empty covariance");
    match convention {
        SigmaMaxConvention::SqrtEigenvalue => lmax.sqrt(),
        SigmaMaxConvention::Eigenvalue => lmax,
    }
}

/// T×d matrix of log-returns, row t holding the returns over step t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPath {
    pub values: Vec<Vec<f64>>,
}

/// T×d matrix of prices, row t holding the prices after step t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub values: Vec<Vec<f64>>,
}

impl ReturnPath {
    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| -v).collect())
                .collect(),
        }
    }
}

impl PricePath {
    /// Price of `asset` after step `t` (1-based), with step 0 being the spot.
    pub fn at(&self, s0: &[f64], t: usize, asset: usize) -> f64 {
        if t == 0 {
            s0[asset]
        } else {
            self.values[t - 1][asset]
        }
    }
}

pub fn returns_to_prices(s0: &[f64], path: &ReturnPath) -> Result<PricePath> {
    let d = s0.len();
    let mut cum = vec![0.0; d];
    let mut values = Vec::with_capacity(path.values.len());
    for (t, row) in path.values.iter().enumerate() {
        if row.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "return row {t} has {} entries, spot vector has {d}",
                row.len()
            )));
        }
        for j in 0..d {
            cum[j] += row[j];
        }
        values.push((0..d).map(|j| s0[j] * cum[j].exp()).collect());
    }
    Ok(PricePath { values })
}

/// Multivariate normal N(mean, cov) evaluated through its Cholesky factor.
#[derive(Debug, Clone)]
pub(crate) struct MvNormal {
    mean: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

impl MvNormal {
    pub(crate) fn new(mean: Vec<f64>, cov: &CovarianceMatrix) -> Result<Self> {
        let d = mean.len();
        let chol = Cholesky::new(cov.sigma.clone()).ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: cov.eigenvalues()[0],
        })?;
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        Ok(Self {
            mean: DVector::from_vec(mean),
            chol,
            log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
        })
    }

    pub(crate) fn log_pdf(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.mean;
        let y = self
            .chol
            .l()
            .solve_lower_triangular(&diff)
            .expect("non-singular factor");
        self.log_norm - 0.5 * y.norm_squared()
    }
}

/// Log-normal transition density p(S^t | S^{t-1}) in price space.
pub fn transition_density_price(s_t: &[f64], s_prev: &[f64], params: &GbmParams) -> Result<f64> {
    let cov = build_covariance(params)?;
    if s_t.len() != params.d || s_prev.len() != params.d {
        return Err(Error::ShapeMismatch(format!(
            "price vectors must have {} entries",
            params.d
        )));
    }
    if let Some(s) = s_t.iter().chain(s_prev).find(|s| !(**s > 0.0)) {
        return Err(Error::Domain {
            function: "transition_density_price",
            reason: format!("price {s} is not positive"),
        });
    }
    let mvn = MvNormal::new(params.drift(), &cov)?;
    let log_ret: Vec<f64> = s_t.iter().zip(s_prev).map(|(a, b)| (a / b).ln()).collect();
    let jacobian: f64 = s_t.iter().map(|s| s.ln()).sum();
    Ok((mvn.log_pdf(&log_ret) - jacobian).exp())
}

pub fn log_joint_density_return(path: &ReturnPath, params: &GbmParams) -> Result<f64> {
    let cov = build_covariance(params)?;
    let mvn = MvNormal::new(params.drift(), &cov)?;
    let mut acc = 0.0;
    for row in &path.values {
        if row.len() != params.d {
            return Err(Error::ShapeMismatch(format!(
                "return rows must have {} entries",
                params.d
            )));
        }
        acc += mvn.log_pdf(row);
    }
    Ok(acc)
}

/// Joint density of an i.i.d. multivariate-normal return path.
pub fn joint_density_return(path: &ReturnPath, params: &GbmParams) -> Result<f64> {
    Ok(log_joint_density_return(path, params)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: u32,
    pub w: f64,
    #[serde(default)]
    pub sigma_max: SigmaMaxConvention,
}

impl GridSpec {
    pub fn new(n: u32, w: f64) -> Result<Self> {
        let g = Self {
            n,
            w,
            sigma_max: SigmaMaxConvention::default(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.n > 20 {
            return Err(invalid("n", format!("{} outside 1..=20", self.n)));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(invalid("w", "must be positive"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        1usize << self.n
    }

    /// Return-space window [B_l, B_u] shared by every asset dimension.
    pub fn bounds(&self, params: &GbmParams) -> Result<(f64, f64)> {
        self.validate()?;
        let cov = build_covariance(params)?;
        let sm = sigma_max(&cov, self.sigma_max);
        let centre = params.r * params.dt - 0.5 * sm * sm;
        Ok((centre - self.w * sm, centre + self.w * sm))
    }
}

/// Midpoint lattice on one dimension with its probability masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionLattice {
    pub lower: f64,
    pub upper: f64,
    pub midpoints: Vec<f64>,
    pub pmf: Vec<f64>,
}

impl DimensionLattice {
    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / self.midpoints.len() as f64
    }

    pub fn mass(&self) -> f64 {
        self.pmf.iter().sum()
    }
}

fn midpoint_lattice(
    lower: f64,
    upper: f64,
    cells: usize,
    density: impl Fn(f64) -> f64,
) -> DimensionLattice {
    let dx = (upper - lower) / cells as f64;
    let midpoints: Vec<f64> = (0..cells).map(|i| lower + (i as f64 + 0.5) * dx).collect();
    let pmf = midpoints.iter().map(|&x| density(x) * dx).collect();
    DimensionLattice {
        lower,
        upper,
        midpoints,
        pmf,
    }
}

pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - 0.5 * LN_2PI).exp()
}

/// Standard-normal midpoint lattice of 2^n cells on [-w, w].
pub fn standard_lattice(n: u32, w: f64) -> Result<DimensionLattice> {
    GridSpec::new(n, w)?;
    Ok(midpoint_lattice(-w, w, 1usize << n, std_normal_pdf))
}

/// Per-asset marginal return lattices over the shared window.
pub fn lattice(grid: &GridSpec, params: &GbmParams) -> Result<Vec<DimensionLattice>> {
    let (lo, hi) = grid.bounds(params)?;
    let cov = build_covariance(params)?;
    let mu = params.drift();
    Ok((0..params.d)
        .map(|j| {
            let s = cov.sigma[(j, j)].sqrt();
            midpoint_lattice(lo, hi, grid.cells(), |x| {
                std_normal_pdf((x - mu[j]) / s) / s
            })
        })
        .collect())
}
