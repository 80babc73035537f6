//! Closed-form Toffoli, T-depth and qubit costs of fixed-point arithmetic primitives.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// T gates per Toffoli in T-count reporting.
pub const T_PER_TOFFOLI: u64 = 7;
/// Rotations per controlled rotation in the single-ancilla decomposition.
pub const ROTATIONS_PER_CONTROLLED: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub n: u32,
    pub p: u32,
}

impl FixedPointFormat {
    pub fn new(n: u32, p: u32) -> Result<Self> {
        if !(1 <= p && p < n) {
            return Err(invalid("fmt", format!("need 1 <= p < n, got n={n}, p={p}")));
        }
        if n > 1 << 16 {
            return Err(invalid("fmt", "register too large"));
        }
        Ok(Self { n, p })
    }

    pub fn fractional_bits(&self) -> u32 {
        self.n - self.p
    }

    pub fn resolution(&self) -> f64 {
        2f64.powi(-(self.fractional_bits() as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResourceCount {
    pub toffoli_count: u64,
    pub t_count: u64,
    pub t_depth: u64,
    pub logical_qubits: u64,
}

impl ResourceCount {
    pub const ZERO: ResourceCount = ResourceCount {
        toffoli_count: 0,
        t_count: 0,
        t_depth: 0,
        logical_qubits: 0,
    };

    /// Toffoli-only component; T-count follows from the Toffoli count.
    pub fn toffolis(count: u64, depth: u64, qubits: u64) -> Self {
        Self {
            toffoli_count: count,
            t_count: count * T_PER_TOFFOLI,
            t_depth: depth,
            logical_qubits: qubits,
        }
    }

    pub fn qubits(qubits: u64) -> Self {
        Self {
            logical_qubits: qubits,
            ..Self::ZERO
        }
    }

    /// `self` followed by `other`: depths add.
    pub fn then(self, other: Self) -> Self {
        Self {
            toffoli_count: self.toffoli_count + other.toffoli_count,
            t_count: self.t_count + other.t_count,
            t_depth: self.t_depth + other.t_depth,
            logical_qubits: self.logical_qubits + other.logical_qubits,
        }
    }

    /// `self` alongside `other` on disjoint qubits: depth is the max.
    pub fn alongside(self, other: Self) -> Self {
        Self {
            t_depth: self.t_depth.max(other.t_depth),
            ..self.then(other)
        }
    }

    /// `k` copies run one after another.
    pub fn repeated(self, k: u64) -> Self {
        Self {
            toffoli_count: self.toffoli_count * k,
            t_count: self.t_count * k,
            t_depth: self.t_depth * k,
            logical_qubits: self.logical_qubits * k,
        }
    }

    /// `k` copies run simultaneously.
    pub fn parallel(self, k: u64) -> Self {
        Self {
            t_depth: if k == 0 { 0 } else { self.t_depth },
            ..self.repeated(k)
        }
    }

    /// Same gates, with its qubits not counted (reusing registers owned elsewhere).
    pub fn in_place(self) -> Self {
        Self {
            logical_qubits: 0,
            ..self
        }
    }

    pub fn with_qubits(self, qubits: u64) -> Self {
        Self {
            logical_qubits: qubits,
            ..self
        }
    }
}

impl Add for ResourceCount {
    type Output = ResourceCount;
    fn add(self, rhs: Self) -> Self {
        self.then(rhs)
    }
}

/// Labelled stages whose serial composition is the reported total.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Breakdown {
    pub items: Vec<(String, ResourceCount)>,
}

impl Breakdown {
    pub fn push(&mut self, label: impl Into<String>, cost: ResourceCount) -> &mut Self {
        self.items.push((label.into(), cost));
        self
    }

    pub fn total(&self) -> ResourceCount {
        self.items
            .iter()
            .fold(ResourceCount::ZERO, |acc, (_, c)| acc.then(*c))
    }

    pub fn get(&self, label: &str) -> Option<ResourceCount> {
        self.items.iter().find(|(l, _)| l == label).map(|(_, c)| *c)
    }
}

/// Binary popcount w(n).
pub fn popcount(n: u64) -> u64 {
    n.count_ones() as u64
}

pub fn floor_log2(n: u64) -> u64 {
    assert!(n > 0, "floor_log2(0)");
    63 - n.leading_zeros() as u64
}

pub fn ceil_log2(n: u64) -> u64 {
    assert!(n > 0, "ceil_log2(0)");
    if n == 1 {
        0
    } else {
        floor_log2(n - 1) + 1
    }
}

/// ⌊log₂(n/3)⌋ in integers: the largest k with 3·2^k ≤ n.
fn floor_log2_third(n: u64) -> u64 {
    floor_log2(n / 3)
}

fn require_n(fmt: &FixedPointFormat, min: u32, what: &'static str) -> Result<u64> {
    if fmt.n < min {
        return Err(Error::Domain {
            function: what,
            reason: format!("needs n >= {min}, got {}", fmt.n),
        });
    }
    Ok(fmt.n as u64)
}

pub fn add_toffolis(fmt: &FixedPointFormat) -> Result<u64> {
    let n = require_n(fmt, 4, "add_resources")?;
    Ok(10 * n
        - 3 * popcount(n)
        - 3 * popcount(n - 1)
        - 3 * floor_log2(n)
        - 3 * floor_log2(n - 1)
        - 7)
}

pub fn add_depth(fmt: &FixedPointFormat) -> Result<u64> {
    let n = require_n(fmt, 4, "add_resources")?;
    Ok(floor_log2(n) + floor_log2(n - 1) + floor_log2_third(n) + floor_log2_third(n - 1) + 8)
}

/// Logarithmic-depth in-place adder with an n-qubit carry workspace.
pub fn add_resources(fmt: &FixedPointFormat) -> Result<ResourceCount> {
    Ok(ResourceCount::toffolis(
        add_toffolis(fmt)?,
        add_depth(fmt)?,
        fmt.n as u64,
    ))
}

/// Adder wrapped in two layers of n controlled swaps.
pub fn controlled_add_resources(fmt: &FixedPointFormat) -> Result<ResourceCount> {
    let n = fmt.n as u64;
    Ok(ResourceCount::toffolis(
        add_toffolis(fmt)? + 6 * n,
        add_depth(fmt)? + 6,
        2 * n,
    ))
}

pub fn mul_toffolis(fmt: &FixedPointFormat) -> u64 {
    let (n, p) = (fmt.n as u64, fmt.p as u64);
    (3 * n * n + 3 * n) / 2 + 3 * n * p + 3 * p - 3 * p * p
}

pub fn mul_depth(fmt: &FixedPointFormat, z: u32) -> Result<u64> {
    if z == 0 || z > fmt.n {
        return Err(invalid(
            "z",
            format!("parallelization factor must be in 1..={}", fmt.n),
        ));
    }
    let t_add = add_depth(fmt)?;
    Ok((fmt.n as u64).div_ceil(z as u64) * (t_add + 6) + ceil_log2(z as u64) * t_add)
}

/// Shift-and-add multiplier split over `z` partial-product accumulators.
pub fn mul_resources(fmt: &FixedPointFormat, z: u32) -> Result<ResourceCount> {
    let depth = mul_depth(fmt, z)?;
    let n = fmt.n as u64;
    let z = z as u64;
    // z accumulators and the carry workspace of their controlled adders
    let qubits = n * z + n;
    let merge = (z - 1) * add_toffolis(fmt)?;
    Ok(ResourceCount::toffolis(
        mul_toffolis(fmt) + merge,
        depth,
        qubits,
    ))
}

pub fn sqrt_resources(fmt: &FixedPointFormat) -> Result<ResourceCount> {
    let n = require_n(fmt, 2, "sqrt_resources")?;
    Ok(ResourceCount::toffolis(
        (n * n + 6 * n - 8).div_ceil(2),
        5 * n + 3,
        2 * n + 1,
    ))
}

pub fn comparator_depth(fmt: &FixedPointFormat) -> Result<u64> {
    let n = require_n(fmt, 2, "comparator_resources")?;
    Ok(2 * floor_log2(n - 1) + 5)
}

/// Logarithmic comparator computing only the top carry, uncompute included.
pub fn comparator_resources(fmt: &FixedPointFormat) -> Result<ResourceCount> {
    let n = require_n(fmt, 2, "comparator_resources")?;
    let toffolis = 4 * n - 3 * popcount(n) - 3 * floor_log2(n) - 1;
    Ok(ResourceCount::toffolis(
        toffolis,
        comparator_depth(fmt)?,
        n + 1,
    ))
}

/// Two-input AND or OR into a fresh qubit.
pub fn logic_gate_resources() -> ResourceCount {
    ResourceCount::toffolis(1, 1, 1)
}

/// Balanced tree of two-input gates over `inputs` qubits.
pub fn logic_tree_resources(inputs: u64) -> ResourceCount {
    if inputs <= 1 {
        return ResourceCount::ZERO;
    }
    ResourceCount::toffolis(inputs - 1, ceil_log2(inputs), inputs - 1)
}

/// Piecewise polynomial of degree k on M subintervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyParams {
    pub k: u32,
    pub m: u64,
}

impl PolyParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !self.m.is_power_of_two() {
            return Err(invalid(
                "M",
                format!("subinterval count {} must be a power of two", self.m),
            ));
        }
        Ok(())
    }
}

fn poly_shared_toffolis(fmt: &FixedPointFormat, poly: &PolyParams) -> i64 {
    let (n, k, m) = (fmt.n as i64, poly.k as i64, poly.m as i64);
    2 * m * k * (4 * ceil_log2(poly.m) as i64 - 8) + 4 * m * n
}

pub fn exp_toffolis(fmt: &FixedPointFormat, poly: &PolyParams) -> u64 {
    let (n, p, k) = (fmt.n as i64, fmt.p as i64, poly.k as i64);
    let v = k * (3 * n * n + 7 * n) / 2 + 3 * n * p * k - 3 * p * p * k + 3 * p * k - k
        + poly_shared_toffolis(fmt, poly);
    v.max(0) as u64
}

pub fn poly_depth(fmt: &FixedPointFormat, poly: &PolyParams, z: u32) -> Result<u64> {
    poly.validate()?;
    let k = poly.k as u64;
    let mut depth = poly.m * comparator_depth(fmt)?;
    if k > 0 {
        depth += k * (mul_depth(fmt, z)? + add_depth(fmt)?);
    }
    Ok(depth)
}

pub fn poly_qubits(fmt: &FixedPointFormat, poly: &PolyParams) -> u64 {
    fmt.n as u64 * (poly.k as u64 + 1) + ceil_log2(poly.m) + 1
}

/// Parallel piecewise-polynomial exponential.
pub fn exp_resources(fmt: &FixedPointFormat, poly: &PolyParams, z: u32) -> Result<ResourceCount> {
    Ok(ResourceCount::toffolis(
        exp_toffolis(fmt, poly),
        poly_depth(fmt, poly, z)?,
        poly_qubits(fmt, poly),
    ))
}

pub fn arcsin_sqrt_toffolis(fmt: &FixedPointFormat, poly: &PolyParams) -> u64 {
    let (n, p, k) = (fmt.n as i64, fmt.p as i64, poly.k as i64);
    let v = k * ((3 * n * n + 7 * n) / 2 + 3 * p * n - 3 * (p - 1) * p - 1)
        + (n * n + 1) / 2
        + 11 * n
        + poly_shared_toffolis(fmt, poly)
        - 2;
    v.max(0) as u64
}

/// |arcsin √x⟩ through the √(1−x) transformation and a piecewise polynomial.
pub fn arcsin_sqrt_resources(
    fmt: &FixedPointFormat,
    poly: &PolyParams,
    z: u32,
) -> Result<ResourceCount> {
    let n = fmt.n as u64;
    let depth = sqrt_resources(fmt)?.t_depth + poly_depth(fmt, poly, z)? + 8 * n + 6;
    Ok(ResourceCount::toffolis(
        arcsin_sqrt_toffolis(fmt, poly),
        depth,
        poly_qubits(fmt, poly) + 2 * n + 1,
    ))
}

fn check_eps(epsilon: f64, function: &'static str) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            function,
            reason: format!("precision {epsilon} outside (0, 1)"),
        });
    }
    Ok(())
}

/// T-depth ⌈3 log₂(1/ε)⌉ of one synthesized single-qubit rotation.
pub fn rotation_depth(epsilon: f64) -> Result<u64> {
    check_eps(epsilon, "rotation_resources")?;
    Ok((3.0 * (1.0 / epsilon).log2()).ceil() as u64)
}

pub fn rotation_resources(epsilon: f64) -> Result<ResourceCount> {
    let d = rotation_depth(epsilon)?;
    Ok(ResourceCount {
        t_count: d,
        t_depth: d,
        ..ResourceCount::ZERO
    })
}

/// Fixed-angle rotation controlled on one qubit (three rotations at depth one, one ancilla).
pub fn controlled_rotation_resources(epsilon: f64) -> Result<ResourceCount> {
    let d = rotation_depth(epsilon)?;
    Ok(ResourceCount {
        toffoli_count: 0,
        t_count: ROTATIONS_PER_CONTROLLED * d,
        t_depth: d,
        logical_qubits: 1,
    })
}

/// Number ñ of register bits whose controlled rotation angle is above arcsin ε.
pub fn significant_rotation_bits(fmt: &FixedPointFormat, epsilon: f64) -> Result<u64> {
    check_eps(epsilon, "controlled_rotation_depth")?;
    let lg = epsilon.asin().log2().floor() as i64;
    let skip = (lg + fmt.fractional_bits() as i64).max(0);
    Ok((fmt.n as i64 - skip).max(1) as u64)
}

pub fn controlled_rotation_depth(fmt: &FixedPointFormat, epsilon: f64) -> Result<u64> {
    let nt = significant_rotation_bits(fmt, epsilon)? as f64;
    Ok((3.0 * nt * (nt / epsilon).log2()).ceil() as u64)
}

/// Rotation by an angle held in a register: one controlled rotation per significant bit.
pub fn register_rotation_resources(fmt: &FixedPointFormat, epsilon: f64) -> Result<ResourceCount> {
    let depth = controlled_rotation_depth(fmt, epsilon)?;
    Ok(ResourceCount {
        toffoli_count: 0,
        t_count: ROTATIONS_PER_CONTROLLED * depth,
        t_depth: depth,
        logical_qubits: 1,
    })
}

/// Smooth functions the piecewise-polynomial evaluator is sized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxFunction {
    /// e^x on [-1, 1].
    Exp,
    /// arcsin x on [0, 1/2].
    Arcsin,
}

impl ApproxFunction {
    pub fn domain(&self) -> (f64, f64) {
        match self {
            ApproxFunction::Exp => (-1.0, 1.0),
            ApproxFunction::Arcsin => (0.0, 0.5),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ApproxFunction::Exp => x.exp(),
            ApproxFunction::Arcsin => x.asin(),
        }
    }
}

/// Worst error of piecewise Chebyshev interpolation of `f` with `poly`, sampled densely.
pub fn piecewise_interpolation_error(f: ApproxFunction, poly: &PolyParams) -> f64 {
    let (a, b) = f.domain();
    let h = (b - a) / poly.m as f64;
    let k = poly.k as usize;
    let nodes: Vec<f64> = (0..=k)
        .map(|j| (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * (k + 1)) as f64).cos())
        .collect();
    // barycentric weights for Chebyshev points of the first kind
    let weights: Vec<f64> = (0..=k)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * (k + 1)) as f64).sin()
        })
        .collect();
    let samples = 24;
    let mut worst: f64 = 0.0;
    for i in 0..poly.m {
        let lo = a + i as f64 * h;
        let map = |t: f64| lo + 0.5 * h * (t + 1.0);
        let values: Vec<f64> = nodes.iter().map(|&t| f.eval(map(t))).collect();
        for s in 0..=samples {
            let t = -1.0 + 2.0 * s as f64 / samples as f64;
            let (mut num, mut den) = (0.0, 0.0);
            let mut exact = None;
            for j in 0..=k {
                let diff = t - nodes[j];
                if diff.abs() < 1e-15 {
                    exact = Some(values[j]);
                    break;
                }
                num += weights[j] / diff * values[j];
                den += weights[j] / diff;
            }
            let approx = exact.unwrap_or(num / den);
            worst = worst.max((approx - f.eval(map(t))).abs());
        }
    }
    worst
}

/// Cheapest (by polynomial-evaluation T-depth) degree and subinterval count
/// whose interpolation error is at most `epsilon`.
pub fn select_poly_params(
    f: ApproxFunction,
    epsilon: f64,
    fmt: &FixedPointFormat,
    z: u32,
) -> Result<PolyParams> {
    check_eps(epsilon, "select_poly_params")?;
    const MAX_LOG_M: u32 = 16;
    let mut best: Option<(u64, PolyParams)> = None;
    for k in 1..=12u32 {
        // error is monotone in M; scanning upward keeps the densest check cheap
        let Some(lm) = (0..=MAX_LOG_M)
            .find(|&lm| piecewise_interpolation_error(f, &PolyParams { k, m: 1 << lm }) <= epsilon)
        else {
            continue;
        };
        let poly = PolyParams { k, m: 1 << lm };
        let depth = poly_depth(fmt, &poly, z)?;
        if best.is_none_or(|(d, _)| depth < d) {
            best = Some((depth, poly));
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| Error::Unachievable {
        component: format!("{f:?} polynomial approximation"),
        value: epsilon,
        target: epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fmt(n: u32, p: u32) -> FixedPointFormat {
        FixedPointFormat::new(n, p).unwrap()
    }

    #[test]
    fn popcount_and_logs() {
        for k in 0..20 {
            assert_eq!(popcount(1 << k), 1);
            assert_eq!(popcount((1 << k) - 1), k);
        }
        assert_eq!(floor_log2(7), 2);
        assert_eq!(ceil_log2(7), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(floor_log2_third(12), 2);
        assert_eq!(floor_log2_third(11), 1);
    }

    #[test]
    fn adder_examples() {
        // 80 - 3·w(8) - 3·w(7) - 3·3 - 3·2 - 7
        assert_eq!(add_toffolis(&fmt(8, 2)).unwrap(), 80 - 3 - 9 - 9 - 6 - 7);
        // n = 4: 2 + 1 + 0 + 0 + 8
        assert_eq!(add_depth(&fmt(4, 1)).unwrap(), 11);
        assert_eq!(add_depth(&fmt(34, 2)).unwrap(), 5 + 5 + 3 + 3 + 8);
        let c = controlled_add_resources(&fmt(8, 2)).unwrap();
        let a = add_resources(&fmt(8, 2)).unwrap();
        assert_eq!(c.t_depth, a.t_depth + 6);
        assert_eq!(c.logical_qubits, a.logical_qubits + 8);
        assert!(add_resources(&fmt(3, 1)).is_err());
    }

    #[test]
    fn multiplier_examples() {
        assert_eq!(mul_toffolis(&fmt(34, 2)), 1983);
        let f = fmt(34, 2);
        let t_add = add_depth(&f).unwrap();
        assert_eq!(mul_depth(&f, 1).unwrap(), 34 * (t_add + 6));
        assert_eq!(mul_depth(&f, 34).unwrap(), (t_add + 6) + 6 * t_add);
        assert!(mul_depth(&f, 0).is_err());
        assert_eq!(mul_resources(&f, 1).unwrap().toffoli_count, 1983);
    }

    #[test]
    fn sqrt_and_comparator_examples() {
        let s = sqrt_resources(&fmt(4, 1)).unwrap();
        assert_eq!((s.toffoli_count, s.t_depth, s.logical_qubits), (16, 23, 9));
        assert_eq!(sqrt_resources(&fmt(34, 2)).unwrap().toffoli_count, 676);
        assert_eq!(comparator_depth(&fmt(34, 2)).unwrap(), 15);
        assert_eq!(comparator_depth(&fmt(2, 1)).unwrap(), 5);
        assert_eq!(logic_gate_resources().t_depth, 1);
    }

    #[test]
    fn polynomial_examples() {
        let f = fmt(34, 2);
        let poly = PolyParams { k: 3, m: 32 };
        // 1.5·34²·3 + 3·34·2·3 + 3.5·34·3 − 3·4·3 + 3·2·3 − 3 + 2·32·3·(20 − 8) + 4·32·34
        let expected = 5202 + 612 + 357 - 36 + 18 - 3 + 2304 + 4352;
        assert_eq!(exp_toffolis(&f, &poly), expected);
        let zero = PolyParams { k: 0, m: 4 };
        assert_eq!(exp_toffolis(&f, &zero), 4 * 4 * 34);
        assert_eq!(poly_depth(&f, &zero, 1).unwrap(), 4 * 15);
        let one = PolyParams { k: 2, m: 1 };
        let t = poly_depth(&f, &one, 2).unwrap();
        assert_eq!(
            t,
            2 * (mul_depth(&f, 2).unwrap() + add_depth(&f).unwrap()) + 15
        );
        assert_eq!(poly_qubits(&f, &poly), 34 * 4 + 5 + 1);
        assert!(PolyParams { k: 1, m: 3 }.validate().is_err());
    }

    #[test]
    fn arcsin_sqrt_examples() {
        for (n, p, k, m) in [(34u32, 2u32, 3u32, 32u64), (16, 4, 5, 8), (9, 1, 2, 2)] {
            let f = fmt(n, p);
            let poly = PolyParams { k, m };
            let (nf, pf, kf, mf) = (n as f64, p as f64, k as f64, m as f64);
            let closed = kf * (1.5 * nf * nf + nf * (3.0 * pf + 3.5) - 3.0 * (pf - 1.0) * pf - 1.0)
                + nf * nf / 2.0
                + 11.0 * nf
                + 2.0 * mf * kf * (4.0 * mf.log2().ceil() - 8.0)
                + 4.0 * mf * nf
                - 2.0;
            assert_eq!(arcsin_sqrt_toffolis(&f, &poly) as f64, closed.ceil());
            let r = arcsin_sqrt_resources(&f, &poly, 2).unwrap();
            let tpp = poly_depth(&f, &poly, 2).unwrap();
            assert_eq!(r.t_depth - tpp - (5 * n as u64 + 3), 8 * n as u64 + 6);
            assert_eq!(r.logical_qubits, poly_qubits(&f, &poly) + 2 * n as u64 + 1);
        }
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_depth(2f64.powi(-10)).unwrap(), 30);
        let f = fmt(34, 2);
        assert_eq!(significant_rotation_bits(&f, 1e-4).unwrap(), 16);
        let d = controlled_rotation_depth(&f, 1e-4).unwrap();
        assert_eq!(d, (48.0 * (16.0f64 / 1e-4).log2()).ceil() as u64);
        assert!(controlled_rotation_depth(&f, 0.3).unwrap() < d);
        assert!(rotation_depth(1.0).is_err());
    }

    #[test]
    fn interpolation_error_behaviour() {
        let coarse = piecewise_interpolation_error(ApproxFunction::Exp, &PolyParams { k: 2, m: 4 });
        let fine = piecewise_interpolation_error(ApproxFunction::Exp, &PolyParams { k: 2, m: 8 });
        // cubic-order convergence in h
        assert!(
            coarse / fine > 6.0 && coarse / fine < 10.0,
            "{coarse} {fine}"
        );
        let f = fmt(34, 2);
        let p = select_poly_params(ApproxFunction::Arcsin, 1e-6, &f, 2).unwrap();
        assert!(piecewise_interpolation_error(ApproxFunction::Arcsin, &p) <= 1e-6);
    }

    #[test]
    fn composition_algebra() {
        let a = ResourceCount::toffolis(10, 4, 3);
        let b = ResourceCount::toffolis(5, 7, 2);
        let s = a.then(b);
        assert_eq!((s.t_depth, s.toffoli_count, s.logical_qubits), (11, 15, 5));
        let p = a.alongside(b);
        assert_eq!((p.t_depth, p.toffoli_count, p.logical_qubits), (7, 15, 5));
        assert_eq!(a.parallel(3).t_depth, 4);
        assert_eq!(a.repeated(3).t_depth, 12);
        let mut br = Breakdown::default();
        br.push("a", a).push("b", b);
        assert_eq!(br.total(), s);
    }

    proptest! {
        #[test]
        fn costs_monotone_in_n(n in 5u32..200, p in 1u32..4, k in 0u32..6, lm in 0u32..8, z in 1u32..5) {
            let (f0, f1) = (fmt(n - 1, p.min(n - 2)), fmt(n, p.min(n - 2)));
            let poly = PolyParams { k, m: 1 << lm };
            prop_assert!(add_toffolis(&f0).unwrap() <= add_toffolis(&f1).unwrap());
            prop_assert!(add_depth(&f0).unwrap() <= add_depth(&f1).unwrap());
            prop_assert!(mul_toffolis(&f0) <= mul_toffolis(&f1));
            prop_assert!(mul_depth(&f0, z).unwrap() <= mul_depth(&f1, z).unwrap());
            prop_assert!(sqrt_resources(&f0).unwrap().toffoli_count <= sqrt_resources(&f1).unwrap().toffoli_count);
            prop_assert!(comparator_resources(&f0).unwrap().toffoli_count <= comparator_resources(&f1).unwrap().toffoli_count);
            prop_assert!(exp_toffolis(&f0, &poly) <= exp_toffolis(&f1, &poly));
            prop_assert!(arcsin_sqrt_toffolis(&f0, &poly) <= arcsin_sqrt_toffolis(&f1, &poly));
            prop_assert!(poly_depth(&f0, &poly, z).unwrap() <= poly_depth(&f1, &poly, z).unwrap());
            prop_assert!(controlled_rotation_depth(&f0, 1e-4).unwrap() <= controlled_rotation_depth(&f1, 1e-4).unwrap());
        }

        #[test]
        fn parallel_and_serial_laws(a in 0u64..1000, b in 0u64..1000, c in 0u64..1000, d in 0u64..1000) {
            let x = ResourceCount::toffolis(a, b, c);
            let y = ResourceCount::toffolis(c, d, a);
            prop_assert_eq!(x.then(y), y.then(x));
            prop_assert_eq!(x.alongside(y).t_depth, b.max(d));
            prop_assert_eq!(x.alongside(y).logical_qubits, a + c);
            prop_assert_eq!(x.then(y).t_count, 7 * (a + c));
        }
    }
}
