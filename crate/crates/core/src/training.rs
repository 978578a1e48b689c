//! Loss assembly from latent overlaps, gradients, Adam and the training loop.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::mixture::MixtureState;
use crate::model::{DETermState, Model, Solution, TermContext};
use crate::problem::{Condition, OverlapMode, ProblemSpec, TrainConfig};
use crate::sim::{Circuit, Gate, GateKind, Statevector};

/// Unweighted loss components of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub epoch: usize,
    pub l_de: f64,
    pub l_init: f64,
    pub l_bc: f64,
    pub l_data: f64,
    pub total: f64,
}

/// `(l_de)^p + eta (l_init + l_bc) + zeta l_data`, with `l_de` clamped at 0.
pub fn total_loss(l_de: f64, l_init: f64, l_bc: f64, l_data: f64, p: f64, eta: f64, zeta: f64) -> f64 {
    l_de.max(0.0).powf(p) + eta * (l_init + l_bc) + zeta * l_data
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapPart {
    Real,
    Imaginary,
}

fn ancilla_zero_probability(state: &Statevector, ancilla: usize) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & (1 << ancilla) == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn finish_test<R: rand::Rng>(
    mut state: Statevector,
    ancilla: usize,
    part: OverlapPart,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<f64> {
    if part == OverlapPart::Imaginary {
        state.apply_gate_mut(&Gate::new(GateKind::Sdg, ancilla))?;
    }
    state.apply_gate_mut(&Gate::h(ancilla))?;
    let p0 = ancilla_zero_probability(&state, ancilla).clamp(0.0, 1.0);
    match shots {
        None => Ok(2.0 * p0 - 1.0),
        Some(0) => Err(Error::Usage("shot count must be positive".into())),
        Some(n) => {
            let dist = Binomial::new(n, p0).map_err(|e| Error::Usage(e.to_string()))?;
            let hits = dist.sample(rng);
            Ok(2.0 * hits as f64 / n as f64 - 1.0)
        }
    }
}

/// Hadamard test for `<0|U^dagger V|0>`: the ancilla (top qubit) selects `U`
/// when 0 and `V` when 1, optionally passes `S^dagger` (imaginary part), then
/// `H`; the estimate is `P(0) - P(1)`. `shots = None` returns the exact
/// expectation.
pub fn hadamard_test(u: &Circuit, v: &Circuit, part: OverlapPart, shots: Option<u64>, seed: u64) -> Result<f64> {
    if u.num_qubits() != v.num_qubits() {
        return Err(Error::Usage("Hadamard test circuits act on different registers".into()));
    }
    if !u.is_unitary() || !v.is_unitary() {
        return Err(Error::Usage("Hadamard test needs gate-only circuits".into()));
    }
    let n = u.num_qubits();
    let anc = n;
    let mut c = Circuit::new(n + 1);
    c.gate(Gate::h(anc)).gate(Gate::x(anc));
    for g in u.gates() {
        c.gate(g.clone().controlled_by(&[anc]));
    }
    c.gate(Gate::x(anc));
    for g in v.gates() {
        c.gate(g.clone().controlled_by(&[anc]));
    }
    let state = c.prepare()?;
    finish_test(state, anc, part, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Hadamard test on two given states: prepares `(|0>|a> + |1>|b>)/sqrt 2`
/// directly and measures the ancilla as in [`hadamard_test`].
pub fn hadamard_test_states<R: rand::Rng>(
    a: &Statevector,
    b: &Statevector,
    part: OverlapPart,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<f64> {
    if a.num_qubits() != b.num_qubits() {
        return Err(Error::Usage("Hadamard test states on different registers".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = a.amplitudes().iter().chain(b.amplitudes()).map(|z| z * s).collect();
    let state = Statevector::from_amplitudes(amps)?;
    finish_test(state, a.num_qubits(), part, shots, rng)
}

/// `<a|b>` between normalized states, exact or from two Hadamard tests.
pub fn overlap<R: rand::Rng>(a: &Statevector, b: &Statevector, mode: OverlapMode, rng: &mut R) -> Result<Complex64> {
    match mode {
        OverlapMode::Exact => a.inner(b),
        OverlapMode::Shots(n) => {
            let re = hadamard_test_states(a, b, OverlapPart::Real, Some(n), rng)?;
            let im = hadamard_test_states(a, b, OverlapPart::Imaginary, Some(n), rng)?;
            Ok(Complex64::new(re, im))
        }
    }
}

/// `sum_{a,b} conj(c_a) c_b <a|b>` with overlaps from `mode`. Diagonal
/// overlaps of normalized states are 1 and the lower triangle is the
/// conjugate of the upper one.
pub fn mixture_inner<R: rand::Rng>(
    x: &MixtureState,
    y: &MixtureState,
    mode: OverlapMode,
    rng: &mut R,
) -> Result<Complex64> {
    if mode == OverlapMode::Exact {
        return x.inner(y);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for a in x.terms() {
        for b in y.terms() {
            acc += a.coeff.conj() * b.coeff * overlap(&a.state, &b.state, mode, rng)?;
        }
    }
    Ok(acc)
}

fn mixture_norm_sqr<R: rand::Rng>(x: &MixtureState, mode: OverlapMode, rng: &mut R) -> Result<f64> {
    if mode == OverlapMode::Exact {
        return Ok(x.inner(x)?.re);
    }
    let t = x.terms();
    let mut acc = 0.0;
    for (i, a) in t.iter().enumerate() {
        acc += a.coeff.norm_sqr();
        for b in &t[i + 1..] {
            acc += 2.0 * (a.coeff.conj() * b.coeff * overlap(&a.state, &b.state, mode, rng)?).re;
        }
    }
    Ok(acc)
}

fn residual(terms: &[DETermState]) -> Result<MixtureState> {
    let first = terms.first().ok_or_else(|| Error::Usage("no DE terms".into()))?;
    let mut r = MixtureState::new(first.state.num_qubits());
    for t in terms {
        r = r.add(&t.state)?;
    }
    Ok(r)
}

/// `||sum_k |DE_k>>||^2` from pairwise overlaps.
pub fn loss_de(terms: &[DETermState], mode: OverlapMode, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mixture_norm_sqr(&residual(terms)?, mode, &mut rng)
}

fn squared_misfit(sol: &Solution, points: &[Condition]) -> Result<f64> {
    let mut acc = 0.0;
    for c in points {
        acc += (sol.eval(&c.point)? - Complex64::new(c.value, 0.0)).norm_sqr();
    }
    Ok(acc)
}

/// `eta * sum_i |f(x_i) - f_i|^2` over the initial conditions.
pub fn loss_init(model: &Model, conditions: &[Condition], eta: f64) -> Result<f64> {
    Ok(eta * squared_misfit(&Solution::from_model(model)?, conditions)?)
}

/// `zeta * sum_i |f(x_i) - f_i|^2`; zero for an empty set.
pub fn loss_data(model: &Model, points: &[Condition], zeta: f64) -> Result<f64> {
    Ok(zeta * squared_misfit(&Solution::from_model(model)?, points)?)
}

/// Sum of squared boundary residuals.
pub fn loss_boundary(model: &Model, points: &[Condition]) -> Result<f64> {
    squared_misfit(&Solution::from_model(model)?, points)
}

/// Prefactor-included bra rows for fast evaluation at fixed points.
#[derive(Debug, Clone)]
struct PointSet {
    rows: Vec<Vec<Complex64>>,
    targets: Vec<f64>,
}

impl PointSet {
    fn new(problem: &ProblemSpec, points: &[Condition]) -> Result<Self> {
        let encs = problem.encodings()?;
        let mut rows = Vec::with_capacity(points.len());
        for c in points {
            let mut amps = vec![Complex64::new(1.0, 0.0)];
            for (e, x) in encs.iter().zip(&c.point) {
                let v = e.amplitudes(*x);
                amps = amps.iter().flat_map(|a| v.iter().map(move |b| (a * b).conj())).collect();
            }
            rows.push(amps);
        }
        Ok(Self { rows, targets: points.iter().map(|c| c.value).collect() })
    }

    fn values(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.rows.iter().map(|r| r.iter().zip(coeffs).map(|(a, b)| a * b).sum()).collect()
    }

    fn loss(&self, values: &[Complex64]) -> f64 {
        values.iter().zip(&self.targets).map(|(v, t)| (v - t).norm_sqr()).fold(0.0, |a, b| a + b)
    }

    /// `d loss` along a tangent with point values `dv`.
    fn loss_derivative(&self, values: &[Complex64], dv: &[Complex64]) -> f64 {
        values
            .iter()
            .zip(dv)
            .zip(&self.targets)
            .map(|((v, d), t)| 2.0 * ((v - t).conj() * d).re)
            .sum()
    }
}

/// Loss of a problem as a function of the model, with its gradient.
#[derive(Debug, Clone)]
pub struct Objective {
    ctx: TermContext,
    init: PointSet,
    bc: PointSet,
    data: PointSet,
    config: TrainConfig,
}

impl Objective {
    pub fn new(problem: &ProblemSpec, config: &TrainConfig) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        Ok(Self {
            ctx: TermContext::new(&problem.encodings()?, &problem.terms, config.multiplier)?,
            init: PointSet::new(problem, &problem.initial)?,
            bc: PointSet::new(problem, &problem.boundary_points())?,
            data: PointSet::new(problem, &problem.data)?,
            config: config.clone(),
        })
    }

    pub fn context(&self) -> &TermContext {
        &self.ctx
    }

    /// Losses for an arbitrary model mixture on the base register.
    pub fn evaluate_mixture(&self, f: &MixtureState, seed: u64) -> Result<LossBreakdown> {
        let terms = self.ctx.build(f)?;
        let l_de = loss_de(&terms, self.config.overlap, seed)?;
        let coeffs = f.to_vector();
        let l_init = self.init.loss(&self.init.values(&coeffs));
        let l_bc = self.bc.loss(&self.bc.values(&coeffs));
        let l_data = self.data.loss(&self.data.values(&coeffs));
        let c = &self.config;
        let total = total_loss(l_de, l_init, l_bc, l_data, c.p, c.eta, c.zeta);
        check_finite(total, "total loss")?;
        Ok(LossBreakdown { epoch: 0, l_de, l_init, l_bc, l_data, total })
    }

    pub fn evaluate(&self, model: &Model) -> Result<LossBreakdown> {
        self.evaluate_mixture(&model.state()?, self.config.seed)
    }

    /// Loss and its gradient over [`Model::params`]. Ansatz angles use the
    /// state-level shift rule, scale and shift their exact tangents; every
    /// derivative then enters through overlaps, `d l_de = 2 Re <R|dR>`.
    pub fn gradient(&self, model: &Model, seed: u64) -> Result<(LossBreakdown, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = self.config.overlap;
        let f = model.state()?;
        let terms = self.ctx.build(&f)?;
        let r = residual(&terms)?;
        let l_de = mixture_norm_sqr(&r, mode, &mut rng)?;
        let coeffs = f.to_vector();
        let (vi, vb, vd) = (self.init.values(&coeffs), self.bc.values(&coeffs), self.data.values(&coeffs));
        let (l_init, l_bc, l_data) = (self.init.loss(&vi), self.bc.loss(&vb), self.data.loss(&vd));
        let c = &self.config;
        let total = total_loss(l_de, l_init, l_bc, l_data, c.p, c.eta, c.zeta);
        check_finite(total, "total loss")?;
        let de_weight = c.p * l_de.max(1e-30).powf(c.p - 1.0);

        let mut grad = Vec::with_capacity(model.num_params());
        for t in model.tangents()? {
            let mut dr = MixtureState::new(r.num_qubits());
            for k in 0..self.ctx.len() {
                dr = dr.add(&self.ctx.term_tangent(k, &f, &t)?)?;
            }
            let d_de = 2.0 * mixture_inner(&r, &dr, mode, &mut rng)?.re;
            let dc = t.to_vector();
            let d_init = self.init.loss_derivative(&vi, &self.init.values(&dc));
            let d_bc = self.bc.loss_derivative(&vb, &self.bc.values(&dc));
            let d_data = self.data.loss_derivative(&vd, &self.data.values(&dc));
            let g = de_weight * d_de + c.eta * (d_init + d_bc) + c.zeta * d_data;
            check_finite(g, "gradient")?;
            grad.push(g);
        }
        Ok((LossBreakdown { epoch: 0, l_de, l_init, l_bc, l_data, total }, grad))
    }

    /// Central finite differences of the total loss, step `h`.
    pub fn finite_difference_gradient(&self, model: &Model, h: f64) -> Result<Vec<f64>> {
        let p = model.params();
        (0..p.len())
            .map(|i| {
                let mut hi = p.clone();
                hi[i] += h;
                let mut lo = p.clone();
                lo[i] -= h;
                let fh = self.evaluate(&model.with_params(&hi)?)?.total;
                let fl = self.evaluate(&model.with_params(&lo)?)?.total;
                Ok((fh - fl) / (2.0 * h))
            })
            .collect()
    }
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} is {v}")))
    }
}

/// Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(state: &AdamState, params: &[f64], grads: &[f64], config: &TrainConfig) -> Result<(Vec<f64>, AdamState)> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::Usage("Adam dimensions do not match".into()));
    }
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let t = state.t + 1;
    let mut next = AdamState { m: state.m.clone(), v: state.v.clone(), t };
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    let mut out = params.to_vec();
    for i in 0..params.len() {
        next.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
        next.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
        let mh = next.m[i] / c1;
        let vh = next.v[i] / c2;
        out[i] -= config.learning_rate * mh / (vh.sqrt() + config.adam_epsilon);
    }
    Ok((out, next))
}

/// Errors of a solution against the analytic reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// Along the last dimension.
    pub derivative_rmse: f64,
}

/// `count` evenly spaced points per dimension over `domain`, endpoints
/// included, dimension 0 varying slowest.
pub fn grid(domain: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .map(|(lo, hi)| {
            if count == 1 {
                vec![*lo]
            } else {
                (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
            }
        })
        .collect();
    let total = count.pow(domain.len() as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; domain.len()];
            for d in (0..domain.len()).rev() {
                p[d] = axes[d][idx % count];
                idx /= count;
            }
            p
        })
        .collect()
}

pub fn metrics(sol: &Solution, truth: &FunctionSpec, points: &[Vec<f64>]) -> Result<Metrics> {
    let dim = sol.encodings.len() - 1;
    let dsol = sol.derivative_solution(dim)?;
    let (mut se, mut max, mut sum, mut dse) = (0.0, 0.0f64, 0.0, 0.0);
    for p in points {
        let err = (sol.eval(p)?.re - truth.eval(p)).abs();
        let derr = dsol.eval(p)?.re - truth.derivative(p, dim);
        se += err * err;
        sum += err;
        max = max.max(err);
        dse += derr * derr;
    }
    let n = points.len().max(1) as f64;
    Ok(Metrics { rmse: (se / n).sqrt(), max_abs_error: max, mean_abs_error: sum / n, derivative_rmse: (dse / n).sqrt() })
}

#[derive(Debug, Clone)]
pub struct TrainingReport {
    /// One entry per evaluated epoch, starting with the initial model.
    pub history: Vec<LossBreakdown>,
    pub best_params: Vec<f64>,
    pub best_loss: f64,
    pub best_epoch: usize,
    /// Model at the best parameters.
    pub model: Model,
    /// Number of optimizer steps taken.
    pub epochs_used: usize,
    pub wall_clock_secs: f64,
    pub seed: u64,
    pub metrics: Option<Metrics>,
}

impl TrainingReport {
    /// First epoch whose total loss is below `threshold`.
    pub fn epochs_to_reach(&self, threshold: f64) -> Option<usize> {
        self.history.iter().find(|l| l.total < threshold).map(|l| l.epoch)
    }
}

/// Trains from the seeded initial model of `problem`.
pub fn train(problem: &ProblemSpec, config: &TrainConfig) -> Result<TrainingReport> {
    let model = problem.initial_model(config.seed)?;
    train_model(problem, config, model)
}

pub fn train_model(problem: &ProblemSpec, config: &TrainConfig, mut model: Model) -> Result<TrainingReport> {
    let start = Instant::now();
    let obj = Objective::new(problem, config)?;
    let mut params = model.params();
    let mut adam = AdamState::new(params.len());
    let mut history = Vec::new();
    let (mut best_loss, mut best_params, mut best_epoch) = (f64::INFINITY, params.clone(), 0);
    let mut shot_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut steps = 0;
    for epoch in 0..=config.epochs {
        let seed = rand::Rng::random(&mut shot_rng);
        let last = epoch == config.epochs;
        let (mut loss, grad) = if last {
            (obj.evaluate_mixture(&model.state()?, seed)?, Vec::new())
        } else {
            obj.gradient(&model, seed)?
        };
        loss.epoch = epoch;
        history.push(loss);
        if loss.total < best_loss {
            best_loss = loss.total;
            best_params = params.clone();
            best_epoch = epoch;
        }
        if last || config.early_stop.is_some_and(|t| loss.total < t) {
            break;
        }
        let (p, a) = adam_step(&adam, &params, &grad, config)?;
        params = p;
        adam = a;
        model = model.with_params(&params)?;
        steps += 1;
    }
    let model = model.with_params(&best_params)?;
    let metrics = match &problem.analytic {
        Some(truth) => {
            let pts = grid(&problem.plot_domain()?, 101);
            Some(metrics(&Solution::from_model(&model)?, truth, &pts)?)
        }
        None => None,
    };
    Ok(TrainingReport {
        history,
        best_params,
        best_loss,
        best_epoch,
        model,
        epochs_used: steps,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        seed: config.seed,
        metrics,
    })
}

/// Trains once per seed (in parallel) and returns all reports plus the index
/// of the best one (lowest RMSE if an analytic solution exists, otherwise
/// lowest loss).
pub fn train_seeds(problem: &ProblemSpec, config: &TrainConfig, seeds: &[u64]) -> Result<(usize, Vec<TrainingReport>)> {
    if seeds.is_empty() {
        return Err(Error::Usage("no seeds given".into()));
    }
    let reports: Vec<TrainingReport> = seeds
        .par_iter()
        .map(|&seed| train(problem, &TrainConfig { seed, ..config.clone() }))
        .collect::<Result<_>>()?;
    let key = |r: &TrainingReport| r.metrics.map_or(r.best_loss, |m| m.rmse);
    let best = (0..reports.len())
        .min_by(|&a, &b| key(&reports[a]).total_cmp(&key(&reports[b])))
        .unwrap();
    Ok((best, reports))
}
