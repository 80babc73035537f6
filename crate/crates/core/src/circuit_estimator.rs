//! Cost models for path loading, payoff circuits and the full amplitude-estimation run.

use serde::{Deserialize, Serialize};

use crate::amplitude::oracle_call_bound;
use crate::contracts::{payoff_bounds, AutocallableSpec, ContractSpec, TarfSpec};
use crate::error::{invalid, Error, Result};
use crate::error_budget::{
    binomial2, discretization_error, eps_mul_rounding, eps_sqrt, reparam_arith_error,
    reparam_total, riemann_arith_error, riemann_density_error, riemann_pmax, riemann_sum_error,
    riemann_total, truncation_error, DensityComponents, ErrorBudget, ErrorComponents,
};
use crate::gaussian_loader::loader_gate_resources;
use crate::market_model::{build_covariance, sigma_max, GbmParams, SigmaMaxConvention};
use crate::qarith::{
    add_depth, add_resources, add_toffolis, arcsin_sqrt_resources, arcsin_sqrt_toffolis, ceil_log2,
    comparator_resources, controlled_add_resources, controlled_rotation_resources, exp_toffolis,
    logic_tree_resources, mul_resources, mul_toffolis, piecewise_interpolation_error, poly_depth,
    poly_qubits, register_rotation_resources, select_poly_params, significant_rotation_bits,
    ApproxFunction, Breakdown, FixedPointFormat, PolyParams, ResourceCount,
    ROTATIONS_PER_CONTROLLED, T_PER_TOFFOLI,
};

/// A cost total together with the stages it was composed from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub total: ResourceCount,
    pub breakdown: Breakdown,
}

impl Estimate {
    fn from_breakdown(breakdown: Breakdown) -> Self {
        Self {
            total: breakdown.total(),
            breakdown,
        }
    }
}

/// Stages with persistent output registers plus one pool of workspace that every
/// uncomputed ancilla draws from.
#[derive(Default)]
struct StagedCircuit {
    breakdown: Breakdown,
    workspace: u64,
}

impl StagedCircuit {
    fn stage(&mut self, label: &str, cost: ResourceCount, workspace: u64) {
        self.breakdown.push(label, cost);
        self.workspace = self.workspace.max(workspace);
    }

    fn finish(mut self) -> Estimate {
        let ws = self.workspace;
        self.breakdown
            .push("shared workspace", ResourceCount::qubits(ws));
        Estimate::from_breakdown(self.breakdown)
    }
}

fn ceil_div(num: u64, den: u64) -> u64 {
    num.div_ceil(den)
}

/// ⌈3n·log₂(n/ε)⌉: n serial controlled rotations at ε/n each.
fn rotation_ladder_depth(n: u32, epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            function: "rotation_ladder_depth",
            reason: format!("precision {epsilon} outside (0, 1)"),
        });
    }
    let n = n as f64;
    Ok((3.0 * n * (n / epsilon).log2()).ceil() as u64)
}

fn resolve_poly(
    given: Option<PolyParams>,
    f: ApproxFunction,
    eps: f64,
    fmt: &FixedPointFormat,
    z: u32,
) -> Result<PolyParams> {
    match given {
        Some(p) => {
            p.validate()?;
            Ok(p)
        }
        None => select_poly_params(f, eps, fmt, z),
    }
}

/// Polynomial and parallelization choices shared by the loading models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticOptions {
    /// Multiplication split factor.
    pub z: u32,
    #[serde(default)]
    pub exp_poly: Option<PolyParams>,
    #[serde(default)]
    pub arcsin_poly: Option<PolyParams>,
}

impl Default for ArithmeticOptions {
    fn default() -> Self {
        Self {
            z: 4,
            exp_poly: None,
            arcsin_poly: None,
        }
    }
}

/// Density-evaluating path loader: T_RS depth and q_RS qubits, itemized per term.
pub fn riemann_loading_resources(
    fmt: &FixedPointFormat,
    d: usize,
    steps: usize,
    epsilon: f64,
    opts: &ArithmeticOptions,
) -> Result<Estimate> {
    if d == 0 || steps == 0 {
        return Err(invalid("d, T", "need at least one asset and one step"));
    }
    let (n, dd, tt) = (fmt.n as u64, d as u64, steps as u64);
    let pairs = binomial2(d) as u64;
    let z = opts.z;
    let exp_poly = resolve_poly(opts.exp_poly, ApproxFunction::Exp, epsilon, fmt, z)?;
    let asin_poly = resolve_poly(opts.arcsin_poly, ApproxFunction::Arcsin, epsilon, fmt, z)?;
    let tf_add = add_toffolis(fmt)?;
    let tf_mul = mul_toffolis(fmt);
    let t_exp = poly_depth(fmt, &exp_poly, z)?;
    let q_exp = poly_qubits(fmt, &exp_poly);

    let mut b = Breakdown::default();
    b.push(
        "registers",
        ResourceCount::qubits(tt * n * (4 * dd + pairs) + 3 * n + 1),
    );
    b.push(
        "centering and linear terms",
        ResourceCount::toffolis(tt * dd * tf_add, 9 * n + 5, 0),
    );
    b.push(
        "square terms",
        ResourceCount::toffolis(tt * dd * tf_mul, n * n, 0),
    );
    b.push(
        "cross terms",
        ResourceCount::toffolis(tt * pairs * tf_mul, ceil_div(2 * n * n * pairs, dd), 0),
    );
    b.push(
        "quadratic form sum",
        ResourceCount::toffolis(tt * (pairs + dd) * tf_add, 10 * (pairs + dd), 0),
    );
    b.push(
        "density exponential",
        ResourceCount::toffolis(exp_toffolis(fmt, &exp_poly), t_exp, q_exp),
    );
    b.push(
        "arcsine square root",
        ResourceCount::toffolis(
            arcsin_sqrt_toffolis(fmt, &asin_poly),
            poly_depth(fmt, &asin_poly, z)?,
            poly_qubits(fmt, &asin_poly) + 2 * n + 1,
        ),
    );
    b.push(
        "cumulative returns",
        ResourceCount::toffolis((tt - 1) * dd * tf_add, 10 * tt, 0),
    );
    b.push(
        "price exponentials",
        ResourceCount::toffolis(
            dd * tt * exp_toffolis(fmt, &exp_poly),
            t_exp,
            q_exp * dd * tt,
        ),
    );
    let rot = rotation_ladder_depth(fmt.n, epsilon)?;
    b.push(
        "density rotation",
        ResourceCount {
            t_count: ROTATIONS_PER_CONTROLLED * rot,
            t_depth: rot,
            ..ResourceCount::ZERO
        },
    );
    b.push(
        "multiplication split",
        ResourceCount::qubits((z as u64 - 1) * tt * dd),
    );
    Ok(Estimate::from_breakdown(b))
}

/// Widened register n̄ = n + ⌈log₂T⌉ + ⌈log₂d⌉ holding cumulative standard-normal sums.
pub fn reparam_register_bits(n: u32, d: usize, steps: usize) -> u32 {
    n + ceil_log2(steps.max(1) as u64) as u32 + ceil_log2(d.max(1) as u64) as u32
}

/// Gaussian-loader path preparation: T_RP depth and q_RP qubits, itemized per term.
pub fn reparam_loading_resources(
    n: u32,
    integer_bits: u32,
    d: usize,
    steps: usize,
    ansatz_depth: u32,
    epsilon: f64,
    opts: &ArithmeticOptions,
) -> Result<Estimate> {
    if d == 0 || steps == 0 || n == 0 {
        return Err(invalid(
            "n, d, T",
            "need positive register size, assets and steps",
        ));
    }
    let nbar = reparam_register_bits(n, d, steps);
    let fmt = FixedPointFormat::new(nbar, integer_bits.min(nbar - 1).max(1))?;
    let (dd, tt) = (d as u64, steps as u64);
    let z = opts.z.min(nbar);
    let exp_poly = resolve_poly(opts.exp_poly, ApproxFunction::Exp, epsilon, &fmt, z)?;
    let q_exp = poly_qubits(&fmt, &exp_poly);

    let mut b = Breakdown::default();
    let loader = loader_gate_resources(n, ansatz_depth, epsilon)?;
    b.push(
        "gaussian loading",
        ResourceCount {
            t_count: loader.t_count * dd * tt,
            logical_qubits: loader.logical_qubits * dd * tt,
            ..loader
        },
    );
    b.push(
        "cumulative sums",
        ResourceCount::toffolis(
            (tt - 1) * dd * add_toffolis(&fmt)?,
            10 * tt,
            dd * tt * nbar as u64,
        ),
    );
    b.push(
        "correlation mixing",
        ResourceCount::toffolis(
            dd * dd * tt * mul_toffolis(&fmt),
            dd * (nbar as u64).pow(2),
            0,
        ),
    );
    // the closed-form depth folds this constant-depth addition into the 10T term
    b.push(
        "drift offset",
        ResourceCount::toffolis(dd * tt * add_toffolis(&fmt)?, 0, 0),
    );
    b.push(
        "price exponentials",
        ResourceCount::toffolis(
            dd * tt * exp_toffolis(&fmt, &exp_poly),
            poly_depth(&fmt, &exp_poly, z)?,
            q_exp * dd * tt,
        ),
    );
    Ok(Estimate::from_breakdown(b))
}

/// Precision split and polynomial choice for payoff circuits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffOptions {
    pub z: u32,
    #[serde(default)]
    pub arcsin_poly: Option<PolyParams>,
}

impl Default for PayoffOptions {
    fn default() -> Self {
        Self {
            z: 4,
            arcsin_poly: None,
        }
    }
}

fn comparators(fmt: &FixedPointFormat, count: u64) -> Result<(ResourceCount, u64)> {
    let c = comparator_resources(fmt)?;
    Ok((
        ResourceCount::toffolis(
            c.toffoli_count * count,
            if count > 0 { c.t_depth } else { 0 },
            count,
        ),
        count * fmt.n as u64,
    ))
}

/// Out-of-place multiplication by a classical constant: output register kept,
/// accumulators and carries returned to the workspace.
fn const_mul(fmt: &FixedPointFormat, z: u32) -> Result<(ResourceCount, u64)> {
    let m = mul_resources(fmt, z)?;
    let n = fmt.n as u64;
    Ok((m.with_qubits(n), m.logical_qubits - n))
}

/// In-place addition of a classical constant.
fn const_add(fmt: &FixedPointFormat) -> Result<(ResourceCount, u64)> {
    let a = add_resources(fmt)?;
    Ok((a.in_place(), a.logical_qubits))
}

/// Autocallable payoff (binary ladder plus optional knock-in put) on `d` assets.
pub fn autocall_payoff_resources(
    spec: &AutocallableSpec,
    d: usize,
    fmt: &FixedPointFormat,
    epsilon_f: f64,
    opts: &PayoffOptions,
) -> Result<Estimate> {
    spec.validate()?;
    if d == 0 {
        return Err(invalid("d", "need at least one asset"));
    }
    let n = fmt.n as u64;
    let dd = d as u64;
    let m = spec.binaries.len() as u64;
    let z = opts.z.min(fmt.n);
    let nb = spec
        .put
        .as_ref()
        .map_or(0, |p| p.barrier_dates.len() as u64);
    let has_put = spec.put.is_some();
    let eps_binary = if has_put {
        epsilon_f / (2 * m) as f64
    } else {
        epsilon_f / m as f64
    };
    let mut c = StagedCircuit::default();

    let count = dd * (m + nb + has_put as u64);
    let (cmp, ws) = comparators(fmt, count)?;
    c.stage("comparators", cmp, ws);

    // per-date basket reduction, then the knock-in / no-autocall / below-strike conjunction
    let per_date = logic_tree_resources(dd).parallel(m);
    let logic = if has_put {
        let knock_in = logic_tree_resources(dd * nb);
        let below = logic_tree_resources(dd);
        let none_paid = logic_tree_resources(m);
        let depth = (ceil_log2(dd) + ceil_log2(m))
            .max(knock_in.t_depth)
            .max(below.t_depth)
            + 2;
        let gates = per_date.toffoli_count
            + knock_in.toffoli_count
            + below.toffoli_count
            + none_paid.toffoli_count
            + 2;
        ResourceCount::toffolis(gates, depth, gates)
    } else {
        per_date
    };
    c.stage("strike and put logic", logic, 0);

    // binary ladder: rotation i fires only if every earlier strike bit was zero
    let rot = controlled_rotation_resources(eps_binary)?;
    let chain = ResourceCount::toffolis(2, 2, 2).repeated(m - 1);
    let ladder = rot
        .in_place()
        .repeated(m)
        .then(chain)
        .then(ResourceCount::qubits(1));

    if let Some(put) = &spec.put {
        let _ = put;
        let eps_put = epsilon_f / 2.0;
        let asin_poly = resolve_poly(
            opts.arcsin_poly,
            ApproxFunction::Arcsin,
            eps_put / 2.0,
            fmt,
            z,
        )?;
        // basket extreme: a tournament of comparators and controlled copies
        let cmp1 = comparator_resources(fmt)?;
        let levels = ceil_log2(dd);
        let extreme = ResourceCount::toffolis(
            (dd - 1) * (cmp1.toffoli_count + n),
            levels * (cmp1.t_depth + 1),
            (dd - 1) * (n + 1),
        );
        let (sub, ws_sub) = const_add(fmt)?;
        let (scale, ws_mul) = const_mul(fmt, z)?;
        let (shift, _) = const_add(fmt)?;
        let asin = arcsin_sqrt_resources(fmt, &asin_poly, z)?;
        let put_register = extreme.then(sub).then(scale).then(shift).then(asin);
        c.stage(
            "binary ladder | put register",
            ladder.alongside(put_register),
            ws_sub.max(ws_mul).max((dd - 1) * n),
        );

        let nt = significant_rotation_bits(fmt, eps_put / 2.0)?;
        let reg_rot = register_rotation_resources(fmt, eps_put / 2.0)?;
        let gate = ResourceCount::toffolis(2 * nt, 2, nt);
        c.stage("put rotation", reg_rot.then(gate), 0);
    } else {
        c.stage("binary ladder", ladder, 0);
    }
    Ok(c.finish())
}

/// TARF payoff on one underlying, following the partial-payoff / cap-correction /
/// discount / rotate pipeline.
pub fn tarf_payoff_resources(
    spec: &TarfSpec,
    fmt: &FixedPointFormat,
    epsilon_f: f64,
    opts: &PayoffOptions,
) -> Result<Estimate> {
    spec.validate()?;
    let n = fmt.n as u64;
    let tt = spec.payment_times.len() as u64;
    let z = opts.z.min(fmt.n);
    let t_add = add_depth(fmt)?;
    let tf_add = add_toffolis(fmt)?;
    let mut c = StagedCircuit::default();

    let (cmp, ws) = comparators(fmt, 3 * tt)?;
    c.stage("comparators", cmp, ws);

    // running knock-out OR, then upper/lower flags gated on it
    let gates = (tt - 1) + 2 * tt;
    c.stage(
        "condition logic",
        ResourceCount::toffolis(gates, tt, gates),
        0,
    );

    let (scale, ws_mul) = const_mul(fmt, z)?;
    let diff = add_resources(fmt)?;
    let copies = ResourceCount::toffolis(2 * n, 2, n);
    let partial = diff.then(scale).then(copies);
    c.stage("partial payoffs", partial.parallel(tt), tt * (ws_mul + n));

    c.stage(
        "running sums",
        ResourceCount::toffolis((tt - 1) * tf_add, (tt - 1) * t_add, (tt - 1) * n),
        n,
    );

    let (cmp_cap, ws_cap) = comparators(fmt, tt)?;
    c.stage("cap comparators", cmp_cap, ws_cap);

    let cap_gates = 2 * (tt - 1);
    c.stage(
        "cap one-hot",
        ResourceCount::toffolis(cap_gates, cap_gates, cap_gates),
        0,
    );

    c.stage(
        "uncapped copies",
        ResourceCount::toffolis(tt * n, 1, tt * n),
        0,
    );

    let cadd = controlled_add_resources(fmt)?;
    c.stage(
        "cap correction",
        cadd.in_place().repeated(2).parallel(tt),
        tt * cadd.logical_qubits,
    );

    c.stage("discounting", scale.parallel(tt), tt * ws_mul);

    let eps_rot = epsilon_f / 2.0;
    let asin_poly = resolve_poly(
        opts.arcsin_poly,
        ApproxFunction::Arcsin,
        epsilon_f / 2.0,
        fmt,
        z,
    )?;
    let tree = ResourceCount::toffolis((tt - 1) * tf_add, ceil_log2(tt) * t_add, 0);
    let (shift, ws_shift) = const_add(fmt)?;
    let asin = arcsin_sqrt_resources(fmt, &asin_poly, z)?;
    c.stage(
        "sum, normalize, arcsine",
        tree.then(shift).then(scale).then(asin),
        (tt / 2).max(1) * n.max(ws_shift).max(ws_mul),
    );

    c.stage(
        "payoff rotation",
        register_rotation_resources(fmt, eps_rot)?,
        0,
    );
    Ok(c.finish())
}

/// Multi-controlled Z reflecting about |0…0⟩ on `qubits` qubits, computed with a
/// log-depth AND tree into reused workspace.
pub fn reflection_resources(qubits: u64) -> ResourceCount {
    if qubits < 3 {
        return ResourceCount::ZERO;
    }
    let tree = logic_tree_resources(qubits - 1);
    ResourceCount::toffolis(2 * tree.toffoli_count, 2 * tree.t_depth, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Density loading with the P_max^T normalization.
    Riemann,
    /// Density loading assuming the normalization problem is solved (P_max = 1).
    RiemannNoNorm,
    /// Gaussian loader with affine transform.
    Reparam,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Riemann => "riemann",
            Method::RiemannNoNorm => "riemann-no-norm",
            Method::Reparam => "reparam",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "riemann" => Ok(Method::Riemann),
            "riemann-no-norm" => Ok(Method::RiemannNoNorm),
            "reparam" => Ok(Method::Reparam),
            _ => Err(invalid("method", format!("unknown method `{s}`"))),
        }
    }
}

/// Inputs of the end-to-end estimate beyond market and contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Arithmetic register format for density evaluation and payoff.
    pub fmt: FixedPointFormat,
    pub w: f64,
    /// Second-derivative bound of the density, for the discretization bound.
    pub beta: f64,
    /// Qubits per Gaussian register in the re-parameterization loader.
    pub gaussian_qubits: u32,
    pub ansatz_depth: u32,
    /// Payoff circuit error.
    pub eps_f: f64,
    /// L∞ error of each loaded Gaussian.
    pub eps_dens: f64,
    /// Amplitude-estimation half-width driving the oracle-call count.
    pub eps_amp: f64,
    pub arithmetic: ArithmeticOptions,
    pub sigma_max_convention: SigmaMaxConvention,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            fmt: FixedPointFormat { n: 34, p: 2 },
            w: 5.0,
            beta: 17.0,
            gaussian_qubits: 5,
            ansatz_depth: 6,
            eps_f: 1e-4,
            eps_dens: 2e-6,
            eps_amp: 1e-3,
            arithmetic: ArithmeticOptions::default(),
            sigma_max_convention: SigmaMaxConvention::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub method: Method,
    pub contract: String,
    pub loading: Estimate,
    pub payoff: Estimate,
    /// A: loading, payoff and the accumulator qubit.
    pub oracle: ResourceCount,
    pub reflection: ResourceCount,
    /// Q = A · S₀ · A† · S_ψ₀.
    pub q_operator: ResourceCount,
    pub n_oracle: f64,
    pub total_t_count: f64,
    pub total_t_depth: f64,
    pub logical_qubits: u64,
    pub budget: ErrorBudget,
    /// ε_total / f_δ implied by the budget.
    pub normalized_error: f64,
    pub target_error: f64,
    pub within_target: bool,
    pub p_max: f64,
    pub feasible: bool,
    /// Set when the totals are lower bounds from an infeasible normalization.
    pub infeasibility: Option<String>,
}

/// Scale factor at which Riemann normalization is declared infeasible.
pub const INFEASIBLE_SCALE: f64 = 1e40;

fn require_component(component: &str, value: f64, target: f64) -> Result<()> {
    if value > target {
        return Err(Error::Unachievable {
            component: component.to_string(),
            value,
            target,
        });
    }
    Ok(())
}

/// Full estimate for pricing `contract` to `target_error` (in units of f_δ) at confidence 1 − α.
pub fn end_to_end(
    method: Method,
    model: &GbmParams,
    contract: &ContractSpec,
    cfg: &EstimatorConfig,
    target_error: f64,
    confidence: f64,
) -> Result<EndToEndReport> {
    model.validate()?;
    contract.validate()?;
    if !(target_error > 0.0 && target_error < 1.0) {
        return Err(invalid(
            "target_error",
            format!("{target_error} outside (0, 1)"),
        ));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(
            "confidence",
            format!("{confidence} outside (0, 1)"),
        ));
    }
    let alpha = 1.0 - confidence;
    let fmt = FixedPointFormat::new(cfg.fmt.n, cfg.fmt.p)?;
    let (d, steps) = (model.d, model.steps);
    let bounds = payoff_bounds(contract, model.r)?;
    let cov = build_covariance(model)?;
    let smax = sigma_max(&cov, cfg.sigma_max_convention);
    let popts = PayoffOptions {
        z: cfg.arithmetic.z,
        arcsin_poly: cfg.arithmetic.arcsin_poly,
    };

    // payoff precision floors set by the register format
    let sqrt_floor = eps_sqrt(0.0, &fmt);
    require_component(
        "payoff square-root rounding 2^-(n-p)/2",
        sqrt_floor,
        cfg.eps_f,
    )?;
    let payoff = match contract {
        ContractSpec::Autocallable(s) => autocall_payoff_resources(s, d, &fmt, cfg.eps_f, &popts)?,
        ContractSpec::Tarf(s) => {
            require_component(
                "discount multiplication rounding (needs eps_f/sqrt(T))",
                eps_mul_rounding(&fmt),
                cfg.eps_f / (s.payment_times.len() as f64).sqrt(),
            )?;
            require_component(
                "lower-condition multiplication rounding (needs eps_f/10)",
                eps_mul_rounding(&fmt),
                cfg.eps_f / 10.0,
            )?;
            tarf_payoff_resources(s, &fmt, cfg.eps_f, &popts)?
        }
        other => {
            return Err(invalid(
                "contract",
                format!("no payoff circuit model for `{}`", other.kind()),
            ))
        }
    };

    let eps_trunc = truncation_error(d, steps, cfg.w);
    let (loading, components, p_max) = match method {
        Method::Riemann | Method::RiemannNoNorm => {
            let loading = riemann_loading_resources(&fmt, d, steps, cfg.eps_f, &cfg.arithmetic)?;
            let z = cfg.arithmetic.z;
            let exp_poly = resolve_poly(
                cfg.arithmetic.exp_poly,
                ApproxFunction::Exp,
                cfg.eps_f,
                &fmt,
                z,
            )?;
            let asin_poly = resolve_poly(
                cfg.arithmetic.arcsin_poly,
                ApproxFunction::Arcsin,
                cfg.eps_f,
                &fmt,
                z,
            )?;
            let dens = DensityComponents {
                eps_sin: cfg.eps_f,
                eps_arcsin: piecewise_interpolation_error(ApproxFunction::Arcsin, &asin_poly),
                eps_sq: eps_sqrt(0.0, &fmt),
                eps_exp: piecewise_interpolation_error(ApproxFunction::Exp, &exp_poly),
                eps_sum: riemann_sum_error(&fmt, cfg.w, smax, d, steps),
            };
            let eps_dens = riemann_density_error(&dens)?;
            let c = ErrorComponents {
                eps_trunc,
                eps_disc: discretization_error(cfg.beta, cfg.w, smax, d, steps, fmt.n),
                eps_arith: riemann_arith_error(cfg.eps_f, eps_dens, cfg.w, smax, d, steps),
                eps_amp: cfg.eps_amp,
            };
            let p_max = if method == Method::Riemann {
                riemann_pmax(cfg.w, &cov)
            } else {
                1.0
            };
            (loading, c, p_max)
        }
        Method::Reparam => {
            let loading = reparam_loading_resources(
                cfg.gaussian_qubits,
                fmt.p,
                d,
                steps,
                cfg.ansatz_depth,
                cfg.eps_dens,
                &ArithmeticOptions {
                    exp_poly: cfg.arithmetic.exp_poly,
                    arcsin_poly: None,
                    z: cfg.arithmetic.z,
                },
            )?;
            let c = ErrorComponents {
                eps_trunc,
                eps_disc: discretization_error(
                    cfg.beta,
                    cfg.w,
                    smax,
                    d,
                    steps,
                    cfg.gaussian_qubits,
                ),
                eps_arith: reparam_arith_error(cfg.w, d, steps, cfg.eps_dens, cfg.eps_f),
                eps_amp: cfg.eps_amp,
            };
            (loading, c, 1.0)
        }
    };

    let accumulator = ResourceCount::qubits(1);
    let oracle = loading.total.then(payoff.total).then(accumulator);
    let reflection = reflection_resources(oracle.logical_qubits);
    let q_operator = oracle
        .then(oracle)
        .then(reflection)
        .with_qubits(oracle.logical_qubits);

    let mut budget = match method {
        Method::Riemann | Method::RiemannNoNorm => {
            riemann_total(&components, p_max, steps, bounds.f_delta)
        }
        Method::Reparam => reparam_total(&components, bounds.f_delta),
    };
    let scale = budget.scale / bounds.f_delta;
    let mut normalized_error = scale * components.sum();
    let mut infeasibility = None;
    let mut n_oracle = oracle_call_bound(cfg.eps_amp, alpha)?;

    let non_amp = components.eps_trunc + components.eps_disc + components.eps_arith;
    if method == Method::Riemann && (scale >= INFEASIBLE_SCALE || scale * non_amp >= target_error) {
        // the amplitude would have to be resolved to target/scale; report what that costs
        let eps_needed = target_error / scale;
        infeasibility = Some(format!(
            "normalization scale P_max^T = {scale:.3e}; amplitude must be resolved to {eps_needed:.3e}"
        ));
        if eps_needed > 0.0 && eps_needed < 0.5 {
            n_oracle = oracle_call_bound(eps_needed, alpha)?;
            let c = ErrorComponents {
                eps_amp: eps_needed,
                ..components
            };
            budget = riemann_total(&c, p_max, steps, bounds.f_delta);
            normalized_error = scale * c.sum();
        } else {
            n_oracle = f64::INFINITY;
        }
    }

    Ok(EndToEndReport {
        method,
        contract: contract.kind().to_string(),
        loading,
        payoff,
        oracle,
        reflection,
        q_operator,
        n_oracle,
        total_t_count: q_operator.t_count as f64 * n_oracle,
        total_t_depth: q_operator.t_depth as f64 * n_oracle,
        logical_qubits: oracle.logical_qubits,
        budget,
        normalized_error,
        target_error,
        within_target: infeasibility.is_none() && normalized_error <= target_error,
        p_max,
        feasible: infeasibility.is_none(),
        infeasibility,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub max_ratio: f64,
}

/// Whether f/(h·N) ≤ 1 on every grid point, N = grid size.
pub fn importance_feasibility(f: &[f64], h: &[f64]) -> Result<Feasibility> {
    if f.len() != h.len() || f.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "density has {} points, proposal {}",
            f.len(),
            h.len()
        )));
    }
    if h.iter().any(|&x| !(x > 0.0)) {
        return Err(invalid("h", "proposal must be strictly positive"));
    }
    let big_n = f.len() as f64;
    let max_ratio = f
        .iter()
        .zip(h)
        .map(|(fi, hi)| fi / (hi * big_n))
        .fold(0.0, f64::max);
    Ok(Feasibility {
        feasible: max_ratio <= 1.0,
        max_ratio,
    })
}

/// Process form: f₀/(h₀⁰N) ≤ 1 and f_t(x'|x)/(h_{t−1}^t(x) h_t^t(x') N) ≤ 1 for every
/// step, with a separable proposal h_t = h_t^t · h_t^{t+1}.
///
/// `transitions[t][i][j]` is f_{t+1}(x_j | x_i); `h_current[t]` is h_t^t and
/// `h_next[t]` is h_t^{t+1}.
pub fn importance_feasibility_process(
    f0: &[f64],
    transitions: &[Vec<Vec<f64>>],
    h_current: &[Vec<f64>],
    h_next: &[Vec<f64>],
) -> Result<Feasibility> {
    let big_n = f0.len();
    let steps = transitions.len();
    if h_current.len() != steps + 1 || h_next.len() != steps {
        return Err(Error::ShapeMismatch(format!(
            "{} transitions need {} current and {} next proposal factors, got {} and {}",
            steps,
            steps + 1,
            steps,
            h_current.len(),
            h_next.len()
        )));
    }
    let shape_ok = |v: &Vec<f64>| v.len() == big_n && v.iter().all(|&x| x > 0.0);
    if !h_current.iter().all(shape_ok) || !h_next.iter().all(shape_ok) {
        return Err(Error::ShapeMismatch(format!(
            "every proposal factor needs {big_n} strictly positive entries"
        )));
    }
    let mut max_ratio = importance_feasibility(f0, &h_current[0])?.max_ratio;
    for (t, kernel) in transitions.iter().enumerate() {
        if kernel.len() != big_n || kernel.iter().any(|row| row.len() != big_n) {
            return Err(Error::ShapeMismatch(format!(
                "transition {t} is not {big_n}x{big_n}"
            )));
        }
        for (i, row) in kernel.iter().enumerate() {
            for (j, &fij) in row.iter().enumerate() {
                let r = fij / (h_next[t][i] * h_current[t + 1][j] * big_n as f64);
                max_ratio = max_ratio.max(r);
            }
        }
    }
    Ok(Feasibility {
        feasible: max_ratio <= 1.0,
        max_ratio,
    })
}

/// T-count implied by a Toffoli count alone.
pub fn toffoli_t_count(toffolis: u64) -> u64 {
    toffolis * T_PER_TOFFOLI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::{BinaryOption, KnockInPut};

    fn fmt() -> FixedPointFormat {
        FixedPointFormat::new(34, 2).unwrap()
    }

    fn benchmark_autocall() -> AutocallableSpec {
        AutocallableSpec {
            binaries: (1..=5)
                .map(|i| BinaryOption {
                    strike: 1.0,
                    time: i as f64 * 0.2,
                    payoff: 1.0 + 0.1 * i as f64,
                })
                .collect(),
            put: Some(KnockInPut {
                strike: 1.0,
                barrier: 0.7,
                notional: 1.0,
                barrier_dates: (1..=20).map(|i| i as f64 / 20.0).collect(),
            }),
            basket: Default::default(),
        }
    }

    fn benchmark_tarf() -> TarfSpec {
        TarfSpec {
            forward: 1.0,
            payment_times: (1..=26).map(|i| i as f64 / 26.0).collect(),
            upper_strike: 1.05,
            lower_strike: 1.0,
            barrier: 1.3,
            alpha: 2.0,
            cap: 0.5,
            asset: 0,
        }
    }

    fn within_factor(x: f64, target: f64, factor: f64) -> bool {
        x <= target * factor && x >= target / factor
    }

    #[test]
    fn riemann_loading_identity_and_d1() {
        let e =
            riemann_loading_resources(&fmt(), 3, 20, 1e-4, &ArithmeticOptions::default()).unwrap();
        assert_eq!(e.breakdown.total(), e.total);
        let e1 =
            riemann_loading_resources(&fmt(), 1, 20, 1e-4, &ArithmeticOptions::default()).unwrap();
        let cross = e1.breakdown.get("cross terms").unwrap();
        assert_eq!(cross, ResourceCount::ZERO);
        // 10(C(1,2) + 1)
        assert_eq!(e1.breakdown.get("quadratic form sum").unwrap().t_depth, 10);
    }

    #[test]
    fn riemann_loading_matches_closed_form_depth() {
        let f = fmt();
        let opts = ArithmeticOptions {
            z: 4,
            exp_poly: Some(PolyParams { k: 3, m: 32 }),
            arcsin_poly: Some(PolyParams { k: 3, m: 32 }),
        };
        let e = riemann_loading_resources(&f, 3, 20, 1e-4, &opts).unwrap();
        let n = 34u64;
        let t_pp = poly_depth(&f, &PolyParams { k: 3, m: 32 }, 4).unwrap();
        let rot = (3.0 * 34.0 * (34.0f64 / 1e-4).log2()).ceil() as u64;
        let expected = n * n + 2 * n * n * 3 / 3 + 10 * 6 + 10 * 20 + 9 * n + 5 + rot + 3 * t_pp;
        assert_eq!(e.total.t_depth, expected);
        let q_pp = poly_qubits(&f, &PolyParams { k: 3, m: 32 });
        let expected_q = 20 * n * (12 + 3) + 3 * n + 1 + q_pp * 61 + q_pp + 2 * n + 1 + 3 * 20 * 3;
        assert_eq!(e.total.logical_qubits, expected_q);
    }

    #[test]
    fn reparam_loading_examples() {
        assert_eq!(reparam_register_bits(5, 1, 1), 5);
        assert_eq!(reparam_register_bits(5, 3, 20), 12);
        let opts = ArithmeticOptions::default();
        let e = reparam_loading_resources(5, 2, 3, 20, 6, 2e-6, &opts).unwrap();
        assert_eq!(e.breakdown.total(), e.total);
        let l0 = reparam_loading_resources(5, 2, 3, 20, 0, 2e-6, &opts).unwrap();
        let layer = rotation_ladder_depth(5, 2e-6).unwrap();
        assert_eq!(l0.breakdown.get("gaussian loading").unwrap().t_depth, layer);
        assert_eq!(
            e.breakdown.get("gaussian loading").unwrap().t_depth,
            7 * layer
        );
    }

    #[test]
    fn reparam_cheaper_than_riemann_loading() {
        let opts = ArithmeticOptions::default();
        for (d, t) in [(3, 20), (1, 26)] {
            let rs = riemann_loading_resources(&fmt(), d, t, 1e-4, &opts).unwrap();
            let rp = reparam_loading_resources(5, 2, d, t, 6, 2e-6, &opts).unwrap();
            assert!(rp.total.t_depth < rs.total.t_depth);
        }
    }

    #[test]
    fn autocall_payoff_benchmark_and_degenerate() {
        let e = autocall_payoff_resources(
            &benchmark_autocall(),
            3,
            &fmt(),
            1e-4,
            &PayoffOptions::default(),
        )
        .unwrap();
        assert_eq!(e.breakdown.total(), e.total);
        assert!(
            within_factor(e.total.t_depth as f64, 3.2e3, 2.0),
            "{:?}",
            e.total
        );
        assert!(
            within_factor(e.total.logical_qubits as f64, 1.6e3, 2.0),
            "{:?}",
            e.total
        );

        let single = AutocallableSpec {
            binaries: vec![BinaryOption {
                strike: 1.0,
                time: 1.0,
                payoff: 1.0,
            }],
            put: None,
            basket: Default::default(),
        };
        let e =
            autocall_payoff_resources(&single, 1, &fmt(), 1e-4, &PayoffOptions::default()).unwrap();
        let cmp = comparator_resources(&fmt()).unwrap();
        let rot = controlled_rotation_resources(1e-4).unwrap();
        assert_eq!(e.total.toffoli_count, cmp.toffoli_count);
        assert_eq!(e.total.t_depth, cmp.t_depth + rot.t_depth);
        assert_eq!(e.total.t_count, cmp.t_count + rot.t_count);
    }

    #[test]
    fn autocall_ladder_has_one_rotation_per_date() {
        let mut spec = benchmark_autocall();
        spec.put = None;
        let e =
            autocall_payoff_resources(&spec, 1, &fmt(), 1e-4, &PayoffOptions::default()).unwrap();
        let ladder = e.breakdown.get("binary ladder").unwrap();
        let rot = controlled_rotation_resources(1e-4 / 5.0).unwrap();
        assert_eq!(
            ladder.t_count - T_PER_TOFFOLI * ladder.toffoli_count,
            5 * rot.t_count
        );
    }

    #[test]
    fn tarf_payoff_benchmark() {
        let e = tarf_payoff_resources(&benchmark_tarf(), &fmt(), 1e-4, &PayoffOptions::default())
            .unwrap();
        assert_eq!(e.breakdown.total(), e.total);
        assert!(
            within_factor(e.total.t_depth as f64, 6e3, 2.0),
            "{:?}",
            e.total
        );
        assert!(
            within_factor(e.total.logical_qubits as f64, 9e3, 2.0),
            "{:?}",
            e.total
        );
        let mut one = benchmark_tarf();
        one.payment_times = vec![1.0];
        let e1 = tarf_payoff_resources(&one, &fmt(), 1e-4, &PayoffOptions::default()).unwrap();
        assert_eq!(e1.breakdown.get("running sums").unwrap().toffoli_count, 0);
        assert_eq!(
            e1.breakdown.get("cap one-hot").unwrap(),
            ResourceCount::ZERO
        );
    }

    #[test]
    fn importance_examples() {
        let n = 64;
        let uniform = vec![1.0 / n as f64; n];
        let flat = vec![0.9; n];
        assert!(importance_feasibility(&flat, &uniform).unwrap().feasible);
        let mut peaked = vec![0.5; n];
        peaked[10] = 63.45;
        let r = importance_feasibility(&peaked, &uniform).unwrap();
        assert!(!r.feasible);
        assert!((r.max_ratio - 63.45).abs() < 1e-12);
        assert!(importance_feasibility(&flat, &uniform[1..]).is_err());
        assert!(importance_feasibility(&flat, &vec![0.0; n]).is_err());
    }

    #[test]
    fn importance_process_shapes() {
        let n = 4;
        let h = vec![0.25; n];
        let f0 = vec![1.0; n];
        let kernel = vec![vec![0.25; n]; n];
        let ok = importance_feasibility_process(
            &f0,
            std::slice::from_ref(&kernel),
            &[h.clone(), h.clone()],
            &[vec![1.0; n]],
        )
        .unwrap();
        assert!(ok.feasible);
        assert!(importance_feasibility_process(
            &f0,
            &[kernel],
            std::slice::from_ref(&h),
            &[vec![1.0; n]]
        )
        .is_err());
    }

    #[test]
    fn reflection_is_cheap() {
        let r = reflection_resources(8000);
        assert!(r.t_depth <= 30);
        assert_eq!(reflection_resources(2), ResourceCount::ZERO);
    }
}
