use serde_json::{json, Value};

use qdp_core::amplitude::iqae_sweep;
use qdp_core::benchmarks;
use qdp_core::circuit_estimator::{end_to_end, EndToEndReport, EstimatorConfig, Method};
use qdp_core::config::{
    IqaeDemoConfig, PricingConfig, QarithConfig, ResourceConfig, TrainLoaderConfig,
};
use qdp_core::gaussian_loader::{digitize, train_sweep, RyCnotAnsatz};
use qdp_core::pricing::{exact_lattice_price, mc_price_with};
use qdp_core::qarith::{
    add_resources, arcsin_sqrt_resources, comparator_resources, controlled_add_resources,
    controlled_rotation_resources, exp_resources, mul_resources, register_rotation_resources,
    select_poly_params, sqrt_resources, ApproxFunction, ResourceCount,
};

use crate::output::{CliError, RawConfig, Report};

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn sci(x: f64) -> String {
    format!("{x:.4e}")
}

fn parse_methods(flag: Option<&str>, configured: &[Method]) -> Result<Vec<Method>, CliError> {
    match flag {
        Some(s) => Ok(vec![s.parse()?]),
        None => Ok(configured.to_vec()),
    }
}

pub fn price_mc(config: &RawConfig, seed: u64) -> Result<Report, CliError> {
    let cfg: PricingConfig = config.require("price-mc")?;
    cfg.validate()?;
    let est = mc_price_with(&cfg.model, &cfg.contract, cfg.paths, seed, cfg.sampling)?;
    let row = vec![sci(est.estimate), sci(est.stderr), est.paths.to_string()];
    Ok(Report::new(
        to_json(&est),
        &["estimate", "stderr", "paths"],
        vec![row],
    ))
}

pub fn price_exact(config: &RawConfig) -> Result<Report, CliError> {
    let cfg: PricingConfig = config.require("price-exact")?;
    cfg.validate()?;
    let grid = cfg
        .grid
        .ok_or_else(|| CliError::Config("price-exact needs a `grid` {n, w}".into()))?;
    let p = exact_lattice_price(&cfg.model, &cfg.contract, &grid)?;
    let row = vec![
        sci(p.price),
        p.amplitude.map(sci).unwrap_or_default(),
        sci(p.mass),
        p.lattice_size.to_string(),
    ];
    Ok(Report::new(
        to_json(&p),
        &["price", "amplitude", "mass", "lattice_size"],
        vec![row],
    ))
}

fn resource_config(config: &RawConfig) -> Result<ResourceConfig, CliError> {
    match config.parse::<ResourceConfig>()? {
        Some(c) => {
            c.validate()?;
            Ok(c)
        }
        None => {
            let (model, contract) = benchmarks::autocallable();
            Ok(ResourceConfig {
                model,
                contract,
                methods: vec![Method::Riemann, Method::RiemannNoNorm, Method::Reparam],
                estimator: EstimatorConfig::default(),
                target_error: benchmarks::TARGET_ERROR,
                confidence: benchmarks::CONFIDENCE,
            })
        }
    }
}

const RESOURCE_HEADERS: [&str; 11] = [
    "method",
    "contract",
    "t_count",
    "t_depth",
    "logical_qubits",
    "n_oracle",
    "q_t_depth",
    "normalized_error",
    "within_target",
    "feasible",
    "p_max",
];

fn resource_row(r: &EndToEndReport) -> Vec<String> {
    vec![
        r.method.name().to_string(),
        r.contract.clone(),
        sci(r.total_t_count),
        sci(r.total_t_depth),
        r.logical_qubits.to_string(),
        sci(r.n_oracle),
        r.q_operator.t_depth.to_string(),
        sci(r.normalized_error),
        r.within_target.to_string(),
        r.feasible.to_string(),
        format!("{:.4}", r.p_max),
    ]
}

pub fn estimate_resources(config: &RawConfig, method: Option<&str>) -> Result<Report, CliError> {
    let cfg = resource_config(config)?;
    let mut reports = Vec::new();
    for m in parse_methods(method, &cfg.methods)? {
        reports.push(end_to_end(
            m,
            &cfg.model,
            &cfg.contract,
            &cfg.estimator,
            cfg.target_error,
            cfg.confidence,
        )?);
    }
    let rows = reports.iter().map(resource_row).collect();
    Ok(Report::new(to_json(&reports), &RESOURCE_HEADERS, rows))
}

pub fn error_budget(config: &RawConfig, method: Option<&str>) -> Result<Report, CliError> {
    let cfg = resource_config(config)?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for m in parse_methods(method, &cfg.methods)? {
        let r = end_to_end(
            m,
            &cfg.model,
            &cfg.contract,
            &cfg.estimator,
            cfg.target_error,
            cfg.confidence,
        )?;
        let b = &r.budget;
        rows.push(vec![
            m.name().to_string(),
            sci(b.eps_trunc),
            sci(b.eps_disc),
            sci(b.eps_arith),
            sci(b.eps_amp),
            sci(b.scale),
            sci(b.eps_total),
            sci(r.normalized_error),
            r.within_target.to_string(),
        ]);
        out.push(json!({
            "method": m,
            "budget": b,
            "normalized_error": r.normalized_error,
            "target_error": r.target_error,
            "within_target": r.within_target,
            "infeasibility": r.infeasibility,
        }));
    }
    Ok(Report::new(
        Value::Array(out),
        &[
            "method",
            "eps_trunc",
            "eps_disc",
            "eps_arith",
            "eps_amp",
            "scale",
            "eps_total",
            "normalized_error",
            "within_target",
        ],
        rows,
    ))
}

pub fn iqae_demo(config: &RawConfig, seed: u64) -> Result<Report, CliError> {
    let cfg: IqaeDemoConfig = config.parse()?.unwrap_or_default();
    let sweep = iqae_sweep(cfg.a, &cfg.epsilons, cfg.alpha, cfg.runs, seed)?;
    let rows = sweep
        .iter()
        .map(|r| {
            vec![
                sci(r.epsilon),
                format!("{:.1}", r.calls_quantum),
                format!("{:.0}", r.calls_classical),
                format!("{:.3}", r.coverage),
            ]
        })
        .collect();
    Ok(Report::new(
        to_json(&sweep),
        &["epsilon", "calls_quantum", "calls_classical", "coverage"],
        rows,
    ))
}

pub fn train_loader(config: &RawConfig, seed: u64) -> Result<Report, CliError> {
    let cfg: TrainLoaderConfig = config.require("train-loader")?;
    cfg.validate()?;
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &n in &cfg.qubits {
        for r in train_sweep(n, &cfg.depths, seed, &cfg.options)? {
            let ansatz = RyCnotAnsatz::new(n, r.layers, r.best_params.clone())?;
            let mut digitized = Vec::new();
            for &m in &cfg.digitize {
                let d = digitize(&ansatz, m, cfg.options.w)?;
                digitized.push(json!({
                    "m_digit": m,
                    "l_inf_snapped": d.l_inf_snapped,
                    "l_inf": d.l_inf_after_local_search,
                    "indices": d.indices,
                }));
                rows.push(vec![
                    n.to_string(),
                    r.layers.to_string(),
                    m.to_string(),
                    sci(d.l_inf_after_local_search),
                    sci(r.energy),
                ]);
            }
            rows.push(vec![
                n.to_string(),
                r.layers.to_string(),
                String::new(),
                sci(r.l_inf),
                sci(r.energy),
            ]);
            cells.push(json!({ "result": r, "digitized": digitized }));
        }
    }
    Ok(Report::new(
        Value::Array(cells),
        &["n", "layers", "m_digit", "l_inf", "energy"],
        rows,
    ))
}

pub fn qarith(config: &RawConfig) -> Result<Report, CliError> {
    let cfg: QarithConfig = config.parse()?.unwrap_or_default();
    let fmt = qdp_core::qarith::FixedPointFormat::new(cfg.fmt.n, cfg.fmt.p)?;
    let exp_poly = match cfg.poly {
        Some(p) => p,
        None => select_poly_params(ApproxFunction::Exp, cfg.epsilon, &fmt, cfg.z)?,
    };
    let asin_poly = match cfg.poly {
        Some(p) => p,
        None => select_poly_params(ApproxFunction::Arcsin, cfg.epsilon, &fmt, cfg.z)?,
    };
    let items: Vec<(&str, ResourceCount)> = vec![
        ("add", add_resources(&fmt)?),
        ("controlled_add", controlled_add_resources(&fmt)?),
        ("mul", mul_resources(&fmt, cfg.z)?),
        ("sqrt", sqrt_resources(&fmt)?),
        ("comparator", comparator_resources(&fmt)?),
        ("exp", exp_resources(&fmt, &exp_poly, cfg.z)?),
        (
            "arcsin_sqrt",
            arcsin_sqrt_resources(&fmt, &asin_poly, cfg.z)?,
        ),
        (
            "controlled_rotation",
            controlled_rotation_resources(cfg.epsilon)?,
        ),
        (
            "register_rotation",
            register_rotation_resources(&fmt, cfg.epsilon)?,
        ),
    ];
    let rows = items
        .iter()
        .map(|(name, r)| {
            vec![
                name.to_string(),
                r.toffoli_count.to_string(),
                r.t_count.to_string(),
                r.t_depth.to_string(),
                r.logical_qubits.to_string(),
            ]
        })
        .collect();
    let json = json!({
        "fmt": fmt,
        "z": cfg.z,
        "epsilon": cfg.epsilon,
        "exp_poly": exp_poly,
        "arcsin_poly": asin_poly,
        "primitives": items.iter().map(|(n, r)| json!({"name": n, "cost": r})).collect::<Vec<_>>(),
    });
    Ok(Report::new(
        json,
        &[
            "primitive",
            "toffolis",
            "t_count",
            "t_depth",
            "logical_qubits",
        ],
        rows,
    ))
}

pub fn table1(config: &RawConfig, method: Option<&str>) -> Result<Report, CliError> {
    let estimator: EstimatorConfig = config.parse()?.unwrap_or_default();
    let methods = parse_methods(
        method,
        &[Method::Riemann, Method::RiemannNoNorm, Method::Reparam],
    )?;
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for m in methods {
        for (model, contract) in [benchmarks::autocallable(), benchmarks::tarf()] {
            let r = end_to_end(
                m,
                &model,
                &contract,
                &estimator,
                benchmarks::TARGET_ERROR,
                benchmarks::CONFIDENCE,
            )?;
            let published = benchmarks::published(m, &r.contract);
            let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
            rows.push(vec![
                m.name().to_string(),
                r.contract.clone(),
                sci(r.total_t_count),
                sci(r.total_t_depth),
                r.logical_qubits.to_string(),
                r.feasible.to_string(),
                sci(r.p_max.powi(model.steps as i32)),
                opt(published.and_then(|p| p.t_count)),
                opt(published.and_then(|p| p.t_depth)),
                opt(published.and_then(|p| p.qubits)),
                opt(published.and_then(|p| p.lower_bound)),
            ]);
            out.push(json!({ "estimate": r, "published": published }));
        }
    }
    Ok(Report::new(
        Value::Array(out),
        &[
            "method",
            "contract",
            "t_count",
            "t_depth",
            "logical_qubits",
            "feasible",
            "p_max_pow_t",
            "published_t_count",
            "published_t_depth",
            "published_qubits",
            "published_lower_bound",
        ],
        rows,
    ))
}
