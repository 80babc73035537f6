//! Term sheets and classical payoff evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market_model::PricePath;

/// Tolerance when matching contract dates to the model time grid, in steps.
const DATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryOption {
    /// Cumulative-return strike.
    pub strike: f64,
    pub time: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockInPut {
    /// Cumulative-return strike K_put.
    pub strike: f64,
    /// Knock-in barrier b on the cumulative return.
    pub barrier: f64,
    /// Notional k in currency.
    pub notional: f64,
    pub barrier_dates: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasketMode {
    #[default]
    WorstOf,
    BestOf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocallableSpec {
    pub binaries: Vec<BinaryOption>,
    #[serde(default)]
    pub put: Option<KnockInPut>,
    #[serde(default)]
    pub basket: BasketMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TarfSpec {
    pub forward: f64,
    pub payment_times: Vec<f64>,
    pub upper_strike: f64,
    pub lower_strike: f64,
    pub barrier: f64,
    pub alpha: f64,
    pub cap: f64,
    /// Asset whose price drives the contract.
    #[serde(default)]
    pub asset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuropeanCallSpec {
    pub strike: f64,
    pub maturity: f64,
    #[serde(default)]
    pub asset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContractSpec {
    Autocallable(AutocallableSpec),
    Tarf(TarfSpec),
    EuropeanCall(EuropeanCallSpec),
    /// Pays a fixed amount at the horizon regardless of the path.
    Constant {
        amount: f64,
        time: f64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantFields {
    amount: f64,
    time: f64,
}

// Written by hand so that errors inside a contract keep the key path, which the
// derived internally-tagged form discards.
impl<'de> Deserialize<'de> for ContractSpec {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut value = serde_json::Value::deserialize(deserializer)?;
        let kind = match value.as_object_mut().and_then(|m| m.remove("type")) {
            Some(serde_json::Value::String(k)) => k,
            Some(_) => return Err(D::Error::custom("`type` must be a string")),
            None => return Err(D::Error::missing_field("type")),
        };
        fn inner<T: serde::de::DeserializeOwned, E: serde::de::Error>(
            v: serde_json::Value,
        ) -> std::result::Result<T, E> {
            serde_path_to_error::deserialize(v).map_err(|e| match e.path().to_string().as_str() {
                "." => E::custom(e.inner()),
                path => E::custom(format!("{path}: {}", e.inner())),
            })
        }
        match kind.as_str() {
            "autocallable" => inner(value).map(ContractSpec::Autocallable),
            "tarf" => inner(value).map(ContractSpec::Tarf),
            "european_call" => inner(value).map(ContractSpec::EuropeanCall),
            "constant" => inner::<ConstantFields, _>(value).map(|c| ContractSpec::Constant {
                amount: c.amount,
                time: c.time,
            }),
            other => Err(D::Error::unknown_variant(
                other,
                &["autocallable", "tarf", "european_call", "constant"],
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffBounds {
    pub f_min: f64,
    pub f_max: f64,
    pub f_delta: f64,
}

impl PayoffBounds {
    pub fn new(f_min: f64, f_max: f64) -> Result<Self> {
        if !(f_max > f_min) {
            return Err(invalid(
                "bounds",
                format!("f_max {f_max} must exceed f_min {f_min}"),
            ));
        }
        Ok(Self {
            f_min,
            f_max,
            f_delta: f_max - f_min,
        })
    }
}

impl AutocallableSpec {
    pub fn validate(&self) -> Result<()> {
        if self.binaries.is_empty() {
            return Err(invalid(
                "binaries",
                "at least one binary option is required",
            ));
        }
        for (i, b) in self.binaries.iter().enumerate() {
            if !(b.strike > 0.0) {
                return Err(invalid("binaries", format!("strike {i} must be positive")));
            }
            if !(b.payoff >= 0.0) {
                return Err(invalid(
                    "binaries",
                    format!("payoff {i} must be nonnegative"),
                ));
            }
            if !(b.time >= 0.0) {
                return Err(invalid("binaries", format!("time {i} must be nonnegative")));
            }
            if i > 0 && !(b.time > self.binaries[i - 1].time) {
                return Err(invalid(
                    "binaries",
                    "payment times must be strictly increasing",
                ));
            }
        }
        if let Some(put) = &self.put {
            if !(put.barrier > 0.0 && put.barrier <= put.strike) {
                return Err(invalid("put.barrier", "need 0 < b <= K_put"));
            }
            if !(put.notional >= 0.0) {
                return Err(invalid("put.notional", "must be nonnegative"));
            }
            if put.barrier_dates.is_empty() {
                return Err(invalid(
                    "put.barrier_dates",
                    "at least one barrier date is required",
                ));
            }
        }
        Ok(())
    }

    pub fn maturity(&self) -> f64 {
        self.binaries.last().map_or(0.0, |b| b.time)
    }
}

impl TarfSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower_strike <= self.forward
            && self.forward <= self.upper_strike
            && self.upper_strike < self.barrier)
        {
            return Err(invalid("strikes", "need K_lower <= F <= K_upper < b"));
        }
        if !(self.cap > 0.0) {
            return Err(invalid("cap", "must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(invalid("alpha", "must be positive"));
        }
        if self.payment_times.is_empty() {
            return Err(invalid(
                "payment_times",
                "at least one payment date is required",
            ));
        }
        if self.payment_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("payment_times", "must be strictly increasing"));
        }
        Ok(())
    }
}

impl ContractSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ContractSpec::Autocallable(s) => s.validate(),
            ContractSpec::Tarf(s) => s.validate(),
            ContractSpec::EuropeanCall(s) => {
                if s.maturity > 0.0 && s.strike >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid(
                        "european_call",
                        "need positive maturity and nonnegative strike",
                    ))
                }
            }
            ContractSpec::Constant { time, .. } => {
                if *time >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid("time", "must be nonnegative"))
                }
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ContractSpec::Autocallable(_) => "autocallable",
            ContractSpec::Tarf(_) => "tarf",
            ContractSpec::EuropeanCall(_) => "european_call",
            ContractSpec::Constant { .. } => "constant",
        }
    }

    /// Undiscounted (time, payoff) cash flows of a simulated price path.
    pub fn cash_flows(&self, path: &PricePath, s0: &[f64], dt: f64) -> Result<Vec<(f64, f64)>> {
        let steps = path.values.len();
        match self {
            ContractSpec::Autocallable(spec) => {
                let observed = |t: f64| -> Result<f64> {
                    let idx = step_index(t, dt, steps)?;
                    Ok(basket_return(path, s0, idx, spec.basket))
                };
                let strikes = spec
                    .binaries
                    .iter()
                    .map(|b| observed(b.time))
                    .collect::<Result<Vec<_>>>()?;
                let barriers = match &spec.put {
                    Some(put) => put
                        .barrier_dates
                        .iter()
                        .map(|&t| observed(t))
                        .collect::<Result<Vec<_>>>()?,
                    None => Vec::new(),
                };
                let terminal = observed(spec.maturity())?;
                autocall_flows(&strikes, &barriers, terminal, spec)
            }
            ContractSpec::Tarf(spec) => {
                let prices = spec
                    .payment_times
                    .iter()
                    .map(|&t| Ok(path.at(s0, step_index(t, dt, steps)?, spec.asset)))
                    .collect::<Result<Vec<_>>>()?;
                tarf_payoff(&prices, spec)
            }
            ContractSpec::EuropeanCall(spec) => {
                let s = path.at(s0, step_index(spec.maturity, dt, steps)?, spec.asset);
                Ok(vec![(spec.maturity, (s - spec.strike).max(0.0))])
            }
            ContractSpec::Constant { amount, time } => Ok(vec![(*time, *amount)]),
        }
    }

    pub fn discounted_payoff(&self, path: &PricePath, s0: &[f64], dt: f64, r: f64) -> Result<f64> {
        Ok(discount_and_sum(&self.cash_flows(path, s0, dt)?, r))
    }
}

/// Maps a contract date onto a 1-based step of the model grid (0 is today).
pub fn step_index(time: f64, dt: f64, steps: usize) -> Result<usize> {
    let x = time / dt;
    let k = x.round();
    if (x - k).abs() > DATE_TOL * x.abs().max(1.0) || k < 0.0 || k as usize > steps {
        return Err(Error::DateMismatch { time, dt, steps });
    }
    Ok(k as usize)
}

fn basket_return(path: &PricePath, s0: &[f64], step: usize, mode: BasketMode) -> f64 {
    let rets = (0..s0.len()).map(|j| path.at(s0, step, j) / s0[j]);
    match mode {
        BasketMode::WorstOf => rets.fold(f64::INFINITY, f64::min),
        BasketMode::BestOf => rets.fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Autocallable cash flows from cumulative returns observed at every contract date.
///
/// `path` holds R̃ at each binary date in order, followed by R̃ at each barrier date.
pub fn autocall_payoff(path: &[f64], spec: &AutocallableSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let m = spec.binaries.len();
    let nb = spec.put.as_ref().map_or(0, |p| p.barrier_dates.len());
    if path.len() != m + nb {
        return Err(Error::PathLength {
            expected: m + nb,
            got: path.len(),
        });
    }
    autocall_flows(&path[..m], &path[m..], path[m - 1], spec)
}

fn autocall_flows(
    strikes: &[f64],
    barriers: &[f64],
    terminal: f64,
    spec: &AutocallableSpec,
) -> Result<Vec<(f64, f64)>> {
    for (b, &ret) in spec.binaries.iter().zip(strikes) {
        if ret >= b.strike {
            return Ok(vec![(b.time, b.payoff)]);
        }
    }
    let mut flows = Vec::new();
    if let Some(put) = &spec.put {
        let knocked_in = barriers.iter().any(|&r| r < put.barrier);
        if knocked_in && terminal < put.strike {
            flows.push((spec.maturity(), put.notional * (terminal - put.strike)));
        }
    }
    Ok(flows)
}

/// TARF cash flows from the underlying's price at each payment date.
pub fn tarf_payoff(prices: &[f64], spec: &TarfSpec) -> Result<Vec<(f64, f64)>> {
    if prices.len() != spec.payment_times.len() {
        return Err(Error::PathLength {
            expected: spec.payment_times.len(),
            got: prices.len(),
        });
    }
    let mut flows = Vec::new();
    // Net running total, losses included.
    let mut gains = 0.0;
    for (&t, &s) in spec.payment_times.iter().zip(prices) {
        if s >= spec.barrier {
            break;
        }
        let f = if s > spec.upper_strike {
            s - spec.forward
        } else if s < spec.lower_strike {
            spec.alpha * (s - spec.forward)
        } else {
            0.0
        };
        if gains + f >= spec.cap {
            flows.push((t, spec.cap - gains));
            break;
        }
        gains += f;
        flows.push((t, f));
    }
    Ok(flows)
}

pub fn discount_and_sum(payoffs: &[(f64, f64)], r: f64) -> f64 {
    payoffs.iter().map(|(t, f)| (-r * t).exp() * f).sum()
}

pub fn payoff_bounds(spec: &ContractSpec, r: f64) -> Result<PayoffBounds> {
    spec.validate()?;
    match spec {
        ContractSpec::Autocallable(s) => {
            let f_max = s
                .binaries
                .iter()
                .map(|b| (-r * b.time).exp() * b.payoff)
                .fold(0.0, f64::max);
            let f_min = s
                .put
                .as_ref()
                .map_or(0.0, |p| -(-r * s.maturity()).exp() * p.notional * p.strike);
            PayoffBounds::new(f_min, f_max)
        }
        ContractSpec::Tarf(s) => {
            // Loss floor taken literally from the normalized-payoff denominator: 2TF per date.
            let count = s.payment_times.len() as f64;
            let f_min = -s
                .payment_times
                .iter()
                .map(|&t| (-r * t).exp() * 2.0 * count * s.forward)
                .sum::<f64>();
            // Greedy: each date pays at most b - F before the cap binds.
            let per_date = s.barrier - s.forward;
            let mut left = s.cap;
            let mut f_max = 0.0;
            for &t in &s.payment_times {
                if left <= 0.0 {
                    break;
                }
                let pay = per_date.min(left);
                f_max += (-r * t).exp() * pay;
                left -= pay;
            }
            PayoffBounds::new(f_min, f_max)
        }
        ContractSpec::EuropeanCall(_) => Err(Error::Unbounded("european_call")),
        ContractSpec::Constant { amount, time } => {
            let v = (-r * time).exp() * amount;
            PayoffBounds::new(v.min(0.0), v.max(0.0).max(v.min(0.0) + 1.0))
        }
    }
}

pub fn normalize(f: f64, bounds: &PayoffBounds) -> Result<f64> {
    let tol = 1e-12 * bounds.f_delta.max(1.0);
    if f < bounds.f_min - tol || f > bounds.f_max + tol {
        return Err(Error::OutOfBounds {
            value: f,
            min: bounds.f_min,
            max: bounds.f_max,
        });
    }
    Ok(((f - bounds.f_min) / bounds.f_delta).clamp(0.0, 1.0))
}

pub fn denormalize(a: f64, bounds: &PayoffBounds) -> f64 {
    bounds.f_delta * a + bounds.f_min
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn desk_autocall() -> AutocallableSpec {
        AutocallableSpec {
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
        }
    }

    fn desk_tarf() -> TarfSpec {
        TarfSpec {
            forward: 20.0,
            payment_times: (1..=52).map(|i| i as f64 / 52.0).collect(),
            upper_strike: 20.0,
            lower_strike: 15.0,
            barrier: 30.0,
            alpha: 2.0,
            cap: 5.0,
            asset: 0,
        }
    }

    fn ac(strikes: [f64; 3]) -> Vec<(f64, f64)> {
        let mut path = strikes.to_vec();
        path.extend_from_slice(&strikes);
        autocall_payoff(&path, &desk_autocall()).unwrap()
    }

    #[test]
    fn autocall_hand_traces() {
        assert_eq!(ac([1.15, 0.9, 0.8]), vec![(1.0, 2.0)]);
        assert!(discount_and_sum(&ac([1.0, 0.9, 0.8]), 0.0) == 0.0);
        let v = discount_and_sum(&ac([0.65, 0.8, 0.9]), 0.0);
        assert!((v + 1.8).abs() < 1e-12);
        // a binary paying late still knocks out the put
        assert_eq!(ac([0.5, 0.6, 1.2]), vec![(3.0, 6.0)]);
        assert!(autocall_payoff(&[1.0, 1.0], &desk_autocall()).is_err());
    }

    #[test]
    fn tarf_hand_traces() {
        let spec = desk_tarf();
        let mut prices = vec![20.0; 52];
        prices[0] = 25.0;
        let f = tarf_payoff(&prices, &spec).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].1, 5.0);

        prices[0] = 31.0;
        assert!(tarf_payoff(&prices, &spec).unwrap().is_empty());

        prices[0] = 14.0;
        let f = tarf_payoff(&prices, &spec).unwrap();
        assert_eq!(f[0].1, -12.0);
        assert_eq!(f.len(), 52);
    }

    #[test]
    fn contract_json_round_trip() {
        for c in [
            ContractSpec::Autocallable(desk_autocall()),
            ContractSpec::Tarf(desk_tarf()),
            ContractSpec::Constant {
                amount: 2.0,
                time: 1.0,
            },
        ] {
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<ContractSpec>(&text).unwrap(), c);
        }
        let err = serde_json::from_str::<ContractSpec>(r#"{"type": "swap"}"#).unwrap_err();
        assert!(err.to_string().contains("swap"));
        let err = serde_json::from_str::<ContractSpec>(
            r#"{"type": "european_call", "strike": 1.0, "maturity": "soon"}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("maturity:"));
    }

    #[test]
    fn discounting() {
        assert_eq!(discount_and_sum(&[(1.0, 3.0), (2.0, -1.0)], 0.0), 2.0);
        assert!((discount_and_sum(&[(1.0, 100.0)], std::f64::consts::LN_2) - 50.0).abs() < 1e-12);
        let flows = [(0.5, 1.0), (1.0, 2.0), (1.5, -0.5)];
        let r = 0.03;
        let manual = (-r * 0.5f64).exp() + 2.0 * (-r * 1.0f64).exp() - 0.5 * (-r * 1.5f64).exp();
        assert!((discount_and_sum(&flows, r) - manual).abs() < 1e-14);
    }

    #[test]
    fn bounds_of_fixtures() {
        let b = payoff_bounds(&ContractSpec::Autocallable(desk_autocall()), 0.0).unwrap();
        assert_eq!((b.f_min, b.f_max), (-18.0, 6.0));
        let b = payoff_bounds(&ContractSpec::Tarf(desk_tarf()), 0.0).unwrap();
        assert_eq!(b.f_max, 5.0);
        assert!(b.f_min <= -2.0 * 52.0 * 20.0);
    }

    #[test]
    fn normalize_endpoints() {
        let b = PayoffBounds::new(-18.0, 6.0).unwrap();
        assert_eq!(normalize(-18.0, &b).unwrap(), 0.0);
        assert_eq!(normalize(6.0, &b).unwrap(), 1.0);
        assert_eq!(normalize(-6.0, &b).unwrap(), 0.5);
        assert!(normalize(7.0, &b).is_err());
    }

    #[test]
    fn dates_must_sit_on_grid() {
        assert_eq!(step_index(0.25, 0.05, 20).unwrap(), 5);
        assert!(step_index(0.26, 0.05, 20).is_err());
        assert!(step_index(2.0, 0.05, 20).is_err());
    }

    proptest! {
        #[test]
        fn autocall_single_knockout(path in prop::collection::vec(0.3f64..1.5, 6)) {
            let flows = autocall_payoff(&path, &desk_autocall()).unwrap();
            let binaries = flows.iter().filter(|(_, f)| *f > 0.0).count();
            prop_assert!(binaries <= 1);
            if binaries == 1 {
                prop_assert_eq!(flows.len(), 1);
            }
            let b = payoff_bounds(&ContractSpec::Autocallable(desk_autocall()), 0.02).unwrap();
            let v = normalize(discount_and_sum(&flows, 0.02), &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn tarf_cap_and_barrier(prices in prop::collection::vec(5.0f64..32.0, 52)) {
            let spec = desk_tarf();
            let flows = tarf_payoff(&prices, &spec).unwrap();
            let mut total = 0.0;
            for (i, (_, f)) in flows.iter().enumerate() {
                total += f;
                prop_assert!(total <= spec.cap + 1e-12);
                prop_assert!(prices[i] < spec.barrier);
            }
            if flows.len() < 52 {
                let stop = flows.len();
                let capped = (total - spec.cap).abs() < 1e-12;
                prop_assert!(capped || prices[stop] >= spec.barrier);
            }
            let b = payoff_bounds(&ContractSpec::Tarf(spec), 0.01).unwrap();
            let v = normalize(discount_and_sum(&flows, 0.01), &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn tarf_monotone_without_events(prices in prop::collection::vec(5.0f64..20.5, 10), bump in 0.0f64..0.5) {
            // stays below the barrier and far from the cap
            let mut spec = desk_tarf();
            spec.payment_times.truncate(10);
            spec.cap = 1e6;
            let up: Vec<f64> = prices.iter().map(|p| p + bump).collect();
            let a = tarf_payoff(&prices, &spec).unwrap();
            let b = tarf_payoff(&up, &spec).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(y.1 >= x.1 - 1e-12);
            }
        }

        #[test]
        fn normalize_round_trip(lo in -100.0f64..0.0, width in 0.1f64..100.0, u in 0.0f64..1.0) {
            let b = PayoffBounds::new(lo, lo + width).unwrap();
            let f = denormalize(u, &b);
            prop_assert!((normalize(f, &b).unwrap() - u).abs() < 1e-12);
        }
    }
}
