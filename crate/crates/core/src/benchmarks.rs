//! The two benchmark contracts used for the headline resource table.

use serde::Serialize;

use crate::circuit_estimator::Method;
use crate::contracts::{
    AutocallableSpec, BasketMode, BinaryOption, ContractSpec, KnockInPut, TarfSpec,
};
use crate::market_model::GbmParams;

/// Worst-of basket autocallable on three uncorrelated assets (σ from 0.4 down to 0.1),
/// 20 steps of 1/20 year, 5 autocall dates and a knock-in put watched on all 20 steps.
pub fn autocallable() -> (GbmParams, ContractSpec) {
    let model = GbmParams::uncorrelated(0.0, vec![0.4, 0.2, 0.1], 1.0 / 20.0, 20);
    let binaries = (1..=5)
        .map(|i| BinaryOption {
            strike: 1.0,
            time: i as f64 * 0.2,
            payoff: 0.05 * i as f64,
        })
        .collect();
    let put = KnockInPut {
        strike: 1.0,
        barrier: 0.7,
        notional: 1.0,
        barrier_dates: (1..=20).map(|i| i as f64 / 20.0).collect(),
    };
    (
        model,
        ContractSpec::Autocallable(AutocallableSpec {
            binaries,
            put: Some(put),
            basket: BasketMode::WorstOf,
        }),
    )
}

/// Single-asset TARF with 26 payment dates a year apart in steps of 1/26.
pub fn tarf() -> (GbmParams, ContractSpec) {
    let model = GbmParams::uncorrelated(0.0, vec![0.4], 1.0 / 26.0, 26);
    let spec = TarfSpec {
        forward: 1.0,
        payment_times: (1..=26).map(|i| i as f64 / 26.0).collect(),
        upper_strike: 1.0,
        lower_strike: 0.9,
        barrier: 1.5,
        alpha: 2.0,
        cap: 0.5,
        asset: 0,
    };
    (model, ContractSpec::Tarf(spec))
}

/// Published row of the resource table. `None` where the source gives a lower bound
/// or no value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedRow {
    pub method: Method,
    pub contract: &'static str,
    pub t_count: Option<f64>,
    pub t_depth: Option<f64>,
    pub qubits: Option<f64>,
    /// Lower bound quoted for T-count and T-depth when the method is impractical.
    pub lower_bound: Option<f64>,
}

pub const TARGET_ERROR: f64 = 2e-3;
pub const CONFIDENCE: f64 = 0.68;

pub const PUBLISHED: [PublishedRow; 6] = [
    PublishedRow {
        method: Method::Riemann,
        contract: "autocallable",
        t_count: None,
        t_depth: None,
        qubits: None,
        lower_bound: Some(1e43),
    },
    PublishedRow {
        method: Method::Riemann,
        contract: "tarf",
        t_count: None,
        t_depth: None,
        qubits: None,
        lower_bound: Some(1e18),
    },
    PublishedRow {
        method: Method::RiemannNoNorm,
        contract: "autocallable",
        t_count: Some(1.6e11),
        t_depth: Some(1.5e8),
        qubits: Some(23e3),
        lower_bound: None,
    },
    PublishedRow {
        method: Method::RiemannNoNorm,
        contract: "tarf",
        t_count: Some(5.5e10),
        t_depth: Some(1.6e8),
        qubits: Some(17e3),
        lower_bound: None,
    },
    PublishedRow {
        method: Method::Reparam,
        contract: "autocallable",
        t_count: Some(1.2e10),
        t_depth: Some(5.4e7),
        qubits: Some(8e3),
        lower_bound: None,
    },
    PublishedRow {
        method: Method::Reparam,
        contract: "tarf",
        t_count: Some(9.8e9),
        t_depth: Some(8.2e7),
        qubits: Some(11.5e3),
        lower_bound: None,
    },
];

pub fn published(method: Method, contract: &str) -> Option<&'static PublishedRow> {
    PUBLISHED
        .iter()
        .find(|r| r.method == method && r.contract == contract)
}
