//! Statevector simulation and variational training of the Ry-CNOT standard-normal loader.
//!
//! Qubit 0 is the most significant bit of the basis index. A circuit of depth L applies
//! one Ry layer, then L blocks of (CNOT ladder, Ry layer).

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;
use std::rc::Rc;

use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::BFGS;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Normal};

use crate::error::{invalid, Error, Result};
use crate::qarith::ResourceCount;

pub const MAX_SIM_QUBITS: u32 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RyCnotAnsatz {
    pub n: u32,
    pub layers: u32,
    /// Layer-major: params[l·n + q] rotates qubit q in layer l.
    pub params: Vec<f64>,
}

impl RyCnotAnsatz {
    pub fn new(n: u32, layers: u32, params: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "need at least one qubit"));
        }
        let expected = Self::param_count(n, layers);
        if params.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for n={n}, L={layers}; expected {expected}",
                params.len()
            )));
        }
        Ok(Self { n, layers, params })
    }

    pub fn zeros(n: u32, layers: u32) -> Result<Self> {
        Self::new(n, layers, vec![0.0; Self::param_count(n, layers)])
    }

    pub fn param_count(n: u32, layers: u32) -> usize {
        (n * (layers + 1)) as usize
    }
}

fn apply_ry(state: &mut [f64], n: u32, q: u32, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let stride = 1usize << (n - 1 - q);
    let block = stride << 1;
    for base in (0..state.len()).step_by(block) {
        for i in base..base + stride {
            let (a0, a1) = (state[i], state[i + stride]);
            state[i] = c * a0 - s * a1;
            state[i + stride] = s * a0 + c * a1;
        }
    }
}

fn apply_cnot(state: &mut [f64], n: u32, control: u32, target: u32) {
    let cmask = 1usize << (n - 1 - control);
    let tmask = 1usize << (n - 1 - target);
    for i in 0..state.len() {
        if i & cmask != 0 && i & tmask == 0 {
            state.swap(i, i | tmask);
        }
    }
}

fn run_circuit(n: u32, layers: u32, params: &[f64]) -> Vec<f64> {
    let mut state = vec![0.0; 1 << n];
    state[0] = 1.0;
    for l in 0..=layers {
        if l > 0 {
            for q in 1..n {
                apply_cnot(&mut state, n, q - 1, q);
            }
        }
        for q in 0..n {
            apply_ry(&mut state, n, q, params[(l * n + q) as usize]);
        }
    }
    state
}

/// Real amplitudes of U(θ)|0…0⟩.
pub fn simulate_ansatz(ansatz: &RyCnotAnsatz) -> Result<Vec<f64>> {
    if ansatz.n > MAX_SIM_QUBITS {
        return Err(Error::SizeGuard(format!(
            "{} qubits exceeds the simulation limit of {MAX_SIM_QUBITS}",
            ansatz.n
        )));
    }
    if ansatz.params.len() != RyCnotAnsatz::param_count(ansatz.n, ansatz.layers) {
        return Err(Error::ShapeMismatch(
            "parameter count does not match n(L+1)".into(),
        ));
    }
    Ok(run_circuit(ansatz.n, ansatz.layers, &ansatz.params))
}

/// State and its derivative with respect to every parameter.
/// dRy(θ)/dθ = ½·Ry(θ+π), so each column costs one extra simulation.
fn state_jacobian(n: u32, layers: u32, params: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let psi = run_circuit(n, layers, params);
    let jac = (0..params.len())
        .map(|j| {
            let mut shifted = params.to_vec();
            shifted[j] += PI;
            let mut col = run_circuit(n, layers, &shifted);
            col.iter_mut().for_each(|v| *v *= 0.5);
            col
        })
        .collect();
    (psi, jac)
}

/// Standard-normal target on the mesh x_i = −w + iΔx.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoaderTarget {
    pub n: u32,
    pub w: f64,
    pub dx: f64,
    pub mesh: Vec<f64>,
    /// g(x_i)·Δx, not renormalized.
    pub masses: Vec<f64>,
    /// 1 − Σ masses.
    pub alpha: f64,
}

impl LoaderTarget {
    pub fn standard_normal(n: u32, w: f64) -> Result<Self> {
        if n == 0 || n > MAX_SIM_QUBITS {
            return Err(Error::SizeGuard(format!(
                "n = {n} outside 1..={MAX_SIM_QUBITS}"
            )));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(invalid("w", "half-width must be positive"));
        }
        let size = 1usize << n;
        let dx = 2.0 * w / size as f64;
        let g = Normal::standard();
        let mesh: Vec<f64> = (0..size).map(|i| -w + i as f64 * dx).collect();
        let masses: Vec<f64> = mesh.iter().map(|&x| g.pdf(x) * dx).collect();
        let alpha = 1.0 - masses.iter().sum::<f64>();
        Ok(Self {
            n,
            w,
            dx,
            mesh,
            masses,
            alpha,
        })
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.masses.iter().map(|m| m.sqrt()).collect()
    }
}

/// Largest magnitude, infinite if any entry is not finite (`f64::max` would drop NaN).
fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| {
        if v.is_finite() {
            m.max(v.abs())
        } else {
            f64::INFINITY
        }
    })
}

/// max_i |g(x_i)Δx − ψ_i²|.
pub fn linf_loss(state: &[f64], target: &LoaderTarget) -> Result<f64> {
    if state.len() != target.masses.len() {
        return Err(Error::ShapeMismatch(format!(
            "state has {} amplitudes, target {}",
            state.len(),
            target.masses.len()
        )));
    }
    Ok(max_abs(
        state.iter().zip(&target.masses).map(|(a, g)| g - a * a),
    ))
}

/// Harmonic oscillator H = P²/2m + m(X − x₀)²/2 on a uniform position mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    pub m: f64,
    pub x0: f64,
    pub mesh: Vec<f64>,
    pub dx: f64,
}

impl Oscillator {
    /// m = 1/(2σ²) with σ = 1, so the ground state squared is the standard normal.
    pub fn for_target(target: &LoaderTarget) -> Self {
        Self {
            m: 0.5,
            x0: 0.0,
            mesh: target.mesh.clone(),
            dx: target.dx,
        }
    }

    /// Momenta of the centered transform, p_k = 2π(k − N/2)/(NΔx).
    pub fn momenta(&self) -> Vec<f64> {
        let size = self.mesh.len();
        (0..size)
            .map(|k| 2.0 * PI * (k as f64 - (size / 2) as f64) / (size as f64 * self.dx))
            .collect()
    }

    /// Dense real-symmetric matrix of H in the position basis.
    pub fn matrix(&self) -> DMatrix<f64> {
        let size = self.mesh.len();
        let p = self.momenta();
        let half = (size / 2) as f64;
        DMatrix::from_fn(size, size, |j, l| {
            // kinetic kernel (1/N) Σ_k p_k²/2m e^{2πi (j−l)(k−N/2)/N}; imaginary parts cancel
            let diff = j as f64 - l as f64;
            let kinetic: f64 = p
                .iter()
                .enumerate()
                .map(|(k, pk)| {
                    pk * pk / (2.0 * self.m)
                        * (2.0 * PI * diff * (k as f64 - half) / size as f64).cos()
                })
                .sum::<f64>()
                / size as f64;
            let potential = if j == l {
                0.5 * self.m * (self.mesh[j] - self.x0).powi(2)
            } else {
                0.0
            };
            kinetic + potential
        })
    }

    /// Lowest eigenpair of the discretized H.
    pub fn ground_state(&self) -> (f64, Vec<f64>) {
        let eig = SymmetricEigen::new(self.matrix());
        let (idx, &val) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        (val, v)
    }
}

/// ⟨ψ|H|ψ⟩ from exact amplitudes: position term directly, momentum term through a
/// centered FFT.
pub fn harmonic_energy(state: &[f64], osc: &Oscillator) -> Result<f64> {
    let size = osc.mesh.len();
    if state.len() != size {
        return Err(Error::ShapeMismatch(format!(
            "state has {} amplitudes, mesh {size}",
            state.len()
        )));
    }
    let potential: f64 = state
        .iter()
        .zip(&osc.mesh)
        .map(|(a, x)| a * a * 0.5 * osc.m * (x - osc.x0).powi(2))
        .sum();
    // centering in both x and p reduces to alternating signs before a plain DFT
    let mut buf: Vec<Complex64> = state
        .iter()
        .enumerate()
        .map(|(j, &a)| Complex64::new(if j % 2 == 0 { a } else { -a }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let kinetic: f64 = buf
        .iter()
        .zip(osc.momenta())
        .map(|(c, p)| c.norm_sqr() / size as f64 * p * p / (2.0 * osc.m))
        .sum();
    Ok(potential + kinetic)
}

/// Loader cost: T_Ry(n) per Ry layer, L+1 layers, one n-qubit register.
pub fn loader_gate_resources(n: u32, layers: u32, epsilon: f64) -> Result<ResourceCount> {
    if n == 0 {
        return Err(invalid("n", "need at least one qubit"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            function: "loader_gate_resources",
            reason: format!("precision {epsilon} outside (0, 1)"),
        });
    }
    let nf = n as f64;
    let layer = (3.0 * nf * (nf / epsilon).log2()).ceil() as u64;
    let depth = layer * (layers as u64 + 1);
    Ok(ResourceCount {
        t_count: depth,
        t_depth: depth,
        logical_qubits: n as u64,
        ..ResourceCount::ZERO
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub restarts: usize,
    pub w: f64,
    pub warmup_iters: u64,
    pub energy_iters: u64,
    pub linf_iters: u64,
    /// Skip the energy phases and optimize the L∞ surrogate from the random start.
    pub direct_linf: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            w: 5.0,
            warmup_iters: 300,
            energy_iters: 300,
            linf_iters: 400,
            direct_linf: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub n: u32,
    pub layers: u32,
    pub best_params: Vec<f64>,
    pub l_inf: f64,
    pub energy: f64,
    /// L∞ of the best restart at the end of the energy phase.
    pub energy_phase_linf: f64,
    pub restarts_used: usize,
}

/// Objective wrapper that remembers the best point argmin ever evaluated, so a failed
/// line search still yields a usable result.
struct Tracked<F> {
    f: F,
    best: Rc<RefCell<(f64, Vec<f64>)>>,
    evals: Cell<u64>,
    budget: u64,
}

impl<F: Fn(&[f64]) -> f64> Tracked<F> {
    fn new(f: F, start: &[f64], budget: u64) -> Self {
        let c = f(start);
        Self {
            f,
            best: Rc::new(RefCell::new((c, start.to_vec()))),
            evals: Cell::new(0),
            budget,
        }
    }

    /// argmin's inner line search has no iteration cap, so the budget is enforced here
    /// by failing the evaluation, which aborts the whole run.
    fn spend(&self) -> std::result::Result<(), argmin::core::Error> {
        let used = self.evals.get() + 1;
        self.evals.set(used);
        if used > self.budget {
            return Err(argmin::core::Error::msg("evaluation budget exhausted"));
        }
        Ok(())
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let c = (self.f)(p);
        let mut best = self.best.borrow_mut();
        if c < best.0 {
            *best = (c, p.to_vec());
        }
        c
    }
}

struct Problem<F, G> {
    cost: Tracked<F>,
    grad: G,
}

impl<F: Fn(&[f64]) -> f64, G: Fn(&[f64]) -> Vec<f64>> CostFunction for Problem<F, G> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        self.cost.spend()?;
        let c = self.cost.eval(p);
        Ok(if c.is_finite() { c } else { f64::MAX })
    }
}

impl<F: Fn(&[f64]) -> f64, G: Fn(&[f64]) -> Vec<f64>> Gradient for Problem<F, G> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        self.cost.spend()?;
        Ok((self.grad)(p))
    }
}

fn no_gradient(_: &[f64]) -> Vec<f64> {
    Vec::new()
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: f64, iters: u64) -> Vec<f64> {
    let mut simplex = vec![start.to_vec()];
    for j in 0..start.len() {
        let mut v = start.to_vec();
        v[j] += step;
        simplex.push(v);
    }
    let problem = Problem {
        cost: Tracked::new(f, start, 4 * iters + 4 * start.len() as u64 + 8),
        grad: no_gradient,
    };
    let best = Rc::clone(&problem.cost.best);
    if let Ok(solver) = NelderMead::new(simplex).with_sd_tolerance(1e-14) {
        let _ = Executor::new(problem, solver)
            .configure(|s| s.max_iters(iters))
            .run();
    }
    let out = best.borrow().1.clone();
    out
}

fn bfgs<F, G>(f: F, g: G, start: &[f64], iters: u64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let dim = start.len();
    let problem = Problem {
        cost: Tracked::new(f, start, 20 * iters + 20),
        grad: g,
    };
    let best = Rc::clone(&problem.cost.best);
    let identity: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let solver = BFGS::new(MoreThuenteLineSearch::new())
        .with_tolerance_grad(1e-16)
        .and_then(|s| s.with_tolerance_cost(0.0));
    if let Ok(solver) = solver {
        // a failed line search still leaves the best evaluated point in the tracker
        let _ = Executor::new(problem, solver)
            .configure(|s| {
                s.param(start.to_vec())
                    .inv_hessian(identity)
                    .max_iters(iters)
            })
            .run();
    }
    let out = best.borrow().1.clone();
    out
}

struct Trainer {
    n: u32,
    layers: u32,
    target: LoaderTarget,
    osc: Oscillator,
}

impl Trainer {
    fn energy(&self, p: &[f64]) -> f64 {
        harmonic_energy(&run_circuit(self.n, self.layers, p), &self.osc).unwrap_or(f64::INFINITY)
    }

    /// Parameter-shift rule for Ry generators: ∂E = [E(θ+π/2) − E(θ−π/2)]/2.
    fn energy_gradient(&self, p: &[f64]) -> Vec<f64> {
        (0..p.len())
            .map(|j| {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[j] += PI / 2.0;
                b[j] -= PI / 2.0;
                0.5 * (self.energy(&a) - self.energy(&b))
            })
            .collect()
    }

    fn residuals(&self, psi: &[f64]) -> Vec<f64> {
        psi.iter()
            .zip(&self.target.masses)
            .map(|(a, g)| a * a - g)
            .collect()
    }

    fn linf(&self, p: &[f64]) -> f64 {
        let psi = run_circuit(self.n, self.layers, p);
        max_abs(self.residuals(&psi).into_iter())
    }

    /// ‖r‖_q with the max factored out so high q neither under- nor overflows.
    fn qnorm(&self, p: &[f64], q: f64) -> f64 {
        let psi = run_circuit(self.n, self.layers, p);
        let r = self.residuals(&psi);
        let m = max_abs(r.iter().copied());
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        m * r
            .iter()
            .map(|x| (x.abs() / m).powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    fn qnorm_gradient(&self, p: &[f64], q: f64) -> Vec<f64> {
        let (psi, jac) = state_jacobian(self.n, self.layers, p);
        let r = self.residuals(&psi);
        let m = max_abs(r.iter().copied());
        if m == 0.0 || !m.is_finite() {
            return vec![0.0; p.len()];
        }
        let s: f64 = r.iter().map(|x| (x.abs() / m).powf(q)).sum();
        let weights: Vec<f64> = r
            .iter()
            .map(|x| s.powf(1.0 / q - 1.0) * (x.abs() / m).powf(q - 1.0) * x.signum())
            .collect();
        jac.iter()
            .map(|col| {
                // dr_i/dθ = 2ψ_i ∂ψ_i
                col.iter()
                    .zip(&psi)
                    .zip(&weights)
                    .map(|((d, a), wgt)| wgt * 2.0 * a * d)
                    .sum()
            })
            .collect()
    }

    fn energy_phase(&self, start: &[f64], opts: &TrainOptions) -> Vec<f64> {
        let warm = nelder_mead(|p| self.energy(p), start, 0.5, opts.warmup_iters);
        bfgs(
            |p| self.energy(p),
            |p| self.energy_gradient(p),
            &warm,
            opts.energy_iters,
        )
    }

    fn linf_phase(&self, start: &[f64], opts: &TrainOptions) -> Vec<f64> {
        let mut p = start.to_vec();
        let per_stage = (opts.linf_iters / 5).max(1);
        for q in [2.0, 8.0, 32.0, 128.0] {
            let next = bfgs(
                |x| self.qnorm(x, q),
                |x| self.qnorm_gradient(x, q),
                &p,
                per_stage,
            );
            if self.linf(&next) <= self.linf(&p) || q == 2.0 {
                p = next;
            }
        }
        let polished = nelder_mead(|x| self.linf(x), &p, 1e-3, per_stage * 4);
        if self.linf(&polished) < self.linf(&p) {
            polished
        } else {
            p
        }
    }
}

/// Same state from a deeper ansatz: identity rotations go in front, where the
/// following CNOT ladder acts on |0...0> and is therefore trivial too.
fn embed_shallower(w: &[f64], count: usize) -> Vec<f64> {
    let mut p = vec![0.0; count - w.len()];
    p.extend_from_slice(w);
    p
}

fn restart_start(n: u32, layers: u32, seed: u64, restart: usize, warm: Option<&[f64]>) -> Vec<f64> {
    let count = RyCnotAnsatz::param_count(n, layers);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    match (restart, warm) {
        (0, Some(w)) => embed_shallower(w, count),
        _ => (0..count).map(|_| rng.random_range(-PI..PI)).collect(),
    }
}

/// Best-of-restarts training; `warm_start` seeds restart 0 with a shallower solution.
pub fn train_with(
    n: u32,
    layers: u32,
    seed: u64,
    opts: &TrainOptions,
    warm_start: Option<&[f64]>,
) -> Result<TrainResult> {
    if n > MAX_SIM_QUBITS {
        return Err(Error::SizeGuard(format!(
            "{n} qubits exceeds {MAX_SIM_QUBITS}"
        )));
    }
    if opts.restarts == 0 {
        return Err(invalid("restarts", "need at least one restart"));
    }
    let target = LoaderTarget::standard_normal(n, opts.w)?;
    let osc = Oscillator::for_target(&target);
    let count = RyCnotAnsatz::param_count(n, layers);
    if let Some(w) = warm_start {
        if w.len() > count {
            return Err(Error::ShapeMismatch(
                "warm start has more parameters than the ansatz".into(),
            ));
        }
    }
    let trainer = Trainer {
        n,
        layers,
        target,
        osc,
    };
    let runs: Vec<(Vec<f64>, f64)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = restart_start(n, layers, seed, r, warm_start);
            if opts.direct_linf {
                let end = trainer.linf_phase(&start, opts);
                let l = trainer.linf(&start);
                (end, l)
            } else {
                let mid = trainer.energy_phase(&start, opts);
                let mid_linf = trainer.linf(&mid);
                (trainer.linf_phase(&mid, opts), mid_linf)
            }
        })
        .collect();
    let (best_idx, best_linf) = runs
        .iter()
        .enumerate()
        .map(|(i, (p, _))| (i, trainer.linf(p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one restart");
    let (mut best_params, energy_phase_linf) = runs[best_idx].clone();
    // never return worse than the shallower circuit we were handed
    if let Some(w) = warm_start {
        let embedded = embed_shallower(w, count);
        if trainer.linf(&embedded) < best_linf {
            best_params = embedded;
        }
    }
    Ok(TrainResult {
        n,
        layers,
        l_inf: trainer.linf(&best_params),
        energy: trainer.energy(&best_params),
        best_params,
        energy_phase_linf,
        restarts_used: opts.restarts,
    })
}

pub fn train(n: u32, layers: u32, restarts: usize, seed: u64) -> Result<TrainResult> {
    train_with(
        n,
        layers,
        seed,
        &TrainOptions {
            restarts,
            ..TrainOptions::default()
        },
        None,
    )
}

/// Trains increasing depths, warm-starting each from the best of the previous one.
pub fn train_sweep(
    n: u32,
    depths: &[u32],
    seed: u64,
    opts: &TrainOptions,
) -> Result<Vec<TrainResult>> {
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out: Vec<TrainResult> = Vec::with_capacity(sorted.len());
    for &l in &sorted {
        let warm = out.last().map(|r| r.best_params.clone());
        out.push(train_with(n, l, seed, opts, warm.as_deref())?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitizeResult {
    pub params: Vec<f64>,
    /// Grid indices i with θ = i·2π/M.
    pub indices: Vec<i64>,
    pub l_inf_snapped: f64,
    pub l_inf_after_local_search: f64,
}

/// Snap every angle to the grid i·2π/M, then move single indices by ±1 while L∞ improves.
pub fn digitize(ansatz: &RyCnotAnsatz, m_digit: u64, w: f64) -> Result<DigitizeResult> {
    if m_digit < 4 {
        return Err(invalid("m_digit", "grid needs at least 4 points"));
    }
    let target = LoaderTarget::standard_normal(ansatz.n, w)?;
    simulate_ansatz(ansatz)?;
    let step = 2.0 * PI / m_digit as f64;
    let angles = |idx: &[i64]| -> Vec<f64> { idx.iter().map(|&i| i as f64 * step).collect() };
    let loss = |idx: &[i64]| -> f64 {
        let psi = run_circuit(ansatz.n, ansatz.layers, &angles(idx));
        linf_loss(&psi, &target).unwrap_or(f64::INFINITY)
    };
    let mut idx: Vec<i64> = ansatz
        .params
        .iter()
        .map(|t| (t / step).round() as i64)
        .collect();
    let snapped = loss(&idx);
    let mut current = snapped;
    loop {
        let mut improved = false;
        for j in 0..idx.len() {
            for delta in [-1i64, 1] {
                idx[j] += delta;
                let trial = loss(&idx);
                if trial < current {
                    current = trial;
                    improved = true;
                } else {
                    idx[j] -= delta;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(DigitizeResult {
        params: angles(&idx),
        indices: idx,
        l_inf_snapped: snapped,
        l_inf_after_local_search: current,
    })
}
