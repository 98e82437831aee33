//! Pulse-shape optimization of the final target energy: quasi-Newton descent,
//! a simplex stage to leave shallow minima, and a quasi-Newton polish.

pub mod quasi_newton;
pub mod simplex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealer::{
    initial_minimizer, initial_state_with, propagate_from, Basis, DeltaParams, OmegaParams,
    PropagationConfig, QuantumState, Schedule, TieBreak, Trajectory, DEFAULT_COEFFICIENTS,
    DEFAULT_DURATION_US, DEFAULT_SAMPLE_COUNT,
};
use crate::encoding::{EncodedTarget, HardwareLimits};
use crate::error::{Error, Result};
use quasi_newton::{bfgs, BfgsOptions, GradientObjective};
use simplex::{nelder_mead, SimplexOptions};

/// Initial global detunings tried, in order, when none is given.
pub const INITIAL_DETUNING_CANDIDATES: [f64; 5] = [-1.0, -0.5, -2.0, -0.25, -4.0];

/// Flattened schedule coefficients: detuning terms first, then drive terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub delta_count: usize,
}

impl ParameterVector {
    pub fn from_schedule(s: &Schedule) -> Self {
        let mut values = s.delta.coefficients.clone();
        values.extend_from_slice(&s.omega.coefficients);
        Self {
            values,
            delta_count: s.delta.coefficients.len(),
        }
    }

    pub fn apply(&self, template: &Schedule) -> Result<Schedule> {
        apply_params(template, self.delta_count, &self.values)
    }
}

fn apply_params(template: &Schedule, delta_count: usize, p: &[f64]) -> Result<Schedule> {
    if delta_count > p.len() || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSchedule(
            "parameter vector does not fit the schedule".into(),
        ));
    }
    let mut s = template.clone();
    s.delta.coefficients = p[..delta_count].to_vec();
    s.omega.coefficients = p[delta_count..].to_vec();
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    QuasiNewton,
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub kind: StageKind,
    pub max_evals: usize,
    pub tolerance: f64,
}

/// How the obtained cost enters the approximation ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMetric {
    /// Expected cost under the final state.
    #[default]
    Expectation,
    /// Cost of the single most probable basis state.
    MostProbable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizationPlan {
    #[serde(rename = "T_us")]
    pub duration: f64,
    pub basis: Basis,
    pub delta_coefficients: usize,
    pub omega_coefficients: usize,
    /// `None` picks the first candidate with a unique initial state.
    pub delta_initial: Option<f64>,
    pub omega_max: f64,
    pub nonnegative_omega: bool,
    /// Drive seed as a fraction of `omega_max` on the first drive coefficient.
    pub initial_omega_fraction: f64,
    pub sample_count: usize,
    pub stages: Vec<Stage>,
    /// Stop once `E <= E_opt + target_tolerance * width`.
    pub target_tolerance: Option<f64>,
    pub propagation: PropagationConfig,
    pub metric: CostMetric,
    /// Warm start replacing the default coefficients.
    pub initial_parameters: Option<Vec<f64>>,
}

impl Default for OptimizationPlan {
    fn default() -> Self {
        Self {
            duration: DEFAULT_DURATION_US,
            basis: Basis::Fourier,
            delta_coefficients: DEFAULT_COEFFICIENTS,
            omega_coefficients: DEFAULT_COEFFICIENTS,
            delta_initial: None,
            omega_max: HardwareLimits::default().omega_max,
            nonnegative_omega: false,
            initial_omega_fraction: 0.1,
            sample_count: DEFAULT_SAMPLE_COUNT,
            stages: vec![
                Stage {
                    kind: StageKind::QuasiNewton,
                    max_evals: 200,
                    tolerance: 1e-9,
                },
                Stage {
                    kind: StageKind::Simplex,
                    max_evals: 400,
                    tolerance: 1e-10,
                },
                Stage {
                    kind: StageKind::QuasiNewton,
                    max_evals: 200,
                    tolerance: 1e-10,
                },
            ],
            target_tolerance: None,
            propagation: PropagationConfig::default(),
            metric: CostMetric::Expectation,
            initial_parameters: None,
        }
    }
}

impl OptimizationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidPlan("at least one stage is required".into()));
        }
        if self
            .stages
            .iter()
            .any(|s| s.max_evals == 0 || !(s.tolerance >= 0.0))
        {
            return Err(Error::InvalidPlan("stage budgets must be positive".into()));
        }
        if self.delta_coefficients + self.omega_coefficients == 0 {
            return Err(Error::InvalidPlan("no free coefficients".into()));
        }
        if let Some(p) = &self.initial_parameters {
            if p.len() != self.delta_coefficients + self.omega_coefficients
                || p.iter().any(|v| !v.is_finite())
            {
                return Err(Error::InvalidPlan(
                    "initial parameters do not match the coefficient counts".into(),
                ));
            }
        }
        if self.basis == Basis::Spline && self.omega_coefficients == 0 {
            return Err(Error::InvalidPlan(
                "spline drive needs control points".into(),
            ));
        }
        Ok(())
    }

    /// Starting schedule: the warm start if given, else a linear detuning
    /// ramp and a single-lobe drive.
    pub fn initial_schedule(&self, delta_initial: f64) -> Schedule {
        let mut s = self.default_schedule(delta_initial);
        if let Some(p) = &self.initial_parameters {
            s.delta.coefficients = p[..self.delta_coefficients].to_vec();
            s.omega.coefficients = p[self.delta_coefficients..].to_vec();
        }
        s
    }

    fn default_schedule(&self, delta_initial: f64) -> Schedule {
        let mut omega = vec![0.0; self.omega_coefficients];
        let seed = self.initial_omega_fraction * self.omega_max;
        match self.basis {
            Basis::Fourier => {
                if let Some(b) = omega.first_mut() {
                    *b = seed;
                }
            }
            Basis::Spline => omega.iter_mut().for_each(|b| *b = seed),
        }
        Schedule {
            duration: self.duration,
            basis: self.basis,
            delta: DeltaParams {
                initial: delta_initial,
                coefficients: vec![0.0; self.delta_coefficients],
            },
            omega: OmegaParams {
                coefficients: omega,
                omega_max: self.omega_max,
                nonnegative: self.nonnegative_omega,
            },
            sample_count: self.sample_count,
        }
    }
}

/// `E(T)` in encoded units for one schedule.
pub fn objective(enc: &EncodedTarget, s: &Schedule, cfg: &PropagationConfig) -> Result<f64> {
    let psi0 = initial_state_with(enc, s.delta.initial, cfg.tie_break)?;
    let (_, traj) = propagate_from(enc, s, &psi0, cfg)?;
    Ok(traj.final_sample().energy)
}

/// Central difference with step `1e-4 (1 + |p_i|)`; probes run in parallel.
pub fn central_gradient<F>(f: &F, p: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    Ok(gradient_probes(f, p)?.0)
}

/// Gradient together with the probe values in a fixed order (`+h_0, -h_0, +h_1, ...`).
fn gradient_probes<F>(f: &F, p: &[f64]) -> Result<(Vec<f64>, Vec<(Vec<f64>, f64)>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let probes: Vec<Vec<f64>> = (0..2 * p.len())
        .map(|k| {
            let i = k / 2;
            let h = 1e-4 * (1.0 + p[i].abs());
            let mut x = p.to_vec();
            x[i] += if k % 2 == 0 { h } else { -h };
            x
        })
        .collect();
    let values: Vec<Result<f64>> = probes.par_iter().map(|x| f(x)).collect();
    let mut out = Vec::with_capacity(probes.len());
    for (x, v) in probes.into_iter().zip(values) {
        let v = v?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        out.push((x, v));
    }
    let g = (0..p.len())
        .map(|i| {
            let h = out[2 * i].0[i] - p[i];
            let back = p[i] - out[2 * i + 1].0[i];
            (out[2 * i].1 - out[2 * i + 1].1) / (h + back)
        })
        .collect();
    Ok((g, out))
}

/// Units of the optimizer's working coordinates `z = p / scale`: 0.2 for
/// detuning terms and `0.1 omega_max` for drive terms.
pub fn coordinate_scales(delta_count: usize, len: usize, omega_max: f64) -> Vec<f64> {
    (0..len)
        .map(|i| {
            if i < delta_count {
                0.2
            } else {
                0.1 * omega_max
            }
        })
        .collect()
}

/// `(C_max - C_obt) / (C_max - C_opt)`; 1 for a constant cost.
pub fn approximation_ratio(c_max: f64, c_opt: f64, c_obt: f64) -> f64 {
    let span = c_max - c_opt;
    if span.abs() <= 1e-12 * (c_max.abs() + c_opt.abs()).max(1.0) {
        return 1.0;
    }
    ((c_max - c_obt) / span).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub kind: StageKind,
    pub evaluations: usize,
    pub best_before: f64,
    pub best_after: f64,
    pub stopped_by_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub parameters: ParameterVector,
    pub schedule: Schedule,
    /// Converged `E(T)` of the best schedule, encoded units.
    pub e_best: f64,
    pub f_best: f64,
    /// Ratio under the plan's metric.
    pub r: f64,
    pub r_expectation: f64,
    pub r_most_probable: f64,
    pub metric: CostMetric,
    /// Cost-convention values (encoded energies mapped back).
    pub c_obt: f64,
    pub c_opt: f64,
    pub c_max: f64,
    pub e_opt: f64,
    pub e_max: f64,
    pub ground_states: Vec<u64>,
    pub most_probable: u64,
    pub evaluations: usize,
    /// Running minimum of the objective after each evaluation.
    pub best_trace: Vec<f64>,
    pub history: Vec<StageRecord>,
    pub seed: u64,
    pub budget_exhausted: bool,
    pub target_reached: bool,
    pub delta_initial: f64,
    /// The initial diagonal was degenerate and the minimizer with the fewest
    /// excitations was used.
    pub initial_tie_broken: bool,
    pub objective_steps: usize,
    pub final_state: QuantumState,
    pub trajectory: Trajectory,
}

#[derive(Debug)]
enum Stop {
    Budget,
    Target,
    Failed(Error),
}

struct Evaluator<'a> {
    enc: &'a EncodedTarget,
    template: &'a Schedule,
    delta_count: usize,
    cfg: PropagationConfig,
    psi0: &'a QuantumState,
    scale: Vec<f64>,
    evals: usize,
    limit: usize,
    best: (f64, Vec<f64>),
    trace: Vec<f64>,
    target: f64,
}

impl Evaluator<'_> {
    fn energy(&self, p: &[f64]) -> Result<f64> {
        let s = apply_params(self.template, self.delta_count, p)?;
        let (_, traj) = propagate_from(self.enc, &s, self.psi0, &self.cfg)?;
        Ok(traj.final_sample().energy)
    }

    fn to_p(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.scale).map(|(a, b)| a * b).collect()
    }

    fn record(&mut self, p: &[f64], e: f64) {
        self.evals += 1;
        if e < self.best.0 {
            self.best = (e, p.to_vec());
        }
        self.trace.push(self.best.0);
    }

    fn check_target(&self) -> std::result::Result<(), Stop> {
        if self.best.0 <= self.target {
            Err(Stop::Target)
        } else {
            Ok(())
        }
    }

    fn value(&mut self, z: &[f64]) -> std::result::Result<f64, Stop> {
        if self.evals >= self.limit {
            return Err(Stop::Budget);
        }
        let p = self.to_p(z);
        let e = self.energy(&p).map_err(Stop::Failed)?;
        if !e.is_finite() {
            return Err(Stop::Failed(Error::NonFiniteObjective));
        }
        self.record(&p, e);
        self.check_target()?;
        Ok(e)
    }
}

impl GradientObjective for Evaluator<'_> {
    type Error = Stop;

    fn value(&mut self, x: &[f64]) -> std::result::Result<f64, Stop> {
        Evaluator::value(self, x)
    }

    fn gradient(&mut self, z: &[f64], _: f64) -> std::result::Result<Vec<f64>, Stop> {
        if self.evals + 2 * z.len() > self.limit {
            return Err(Stop::Budget);
        }
        // probes are taken in the scaled coordinates, where the relative step fits
        let (g, probes) = {
            let this = &*self;
            gradient_probes(&|x: &[f64]| this.energy(&this.to_p(x)), z).map_err(Stop::Failed)?
        };
        for (x, v) in &probes {
            let p = self.to_p(x);
            self.record(&p, *v);
        }
        self.check_target()?;
        Ok(g)
    }
}

/// Runs the staged optimization and re-propagates the best schedule with
/// step-size convergence. Budget exhaustion is reported through a flag.
pub fn run_hybrid(
    enc: &EncodedTarget,
    plan: &OptimizationPlan,
    seed: u64,
) -> Result<OptimizationResult> {
    plan.validate()?;
    let (delta_initial, tie) = match plan.delta_initial {
        Some(d) => (d, plan.propagation.tie_break),
        None => {
            let mut chosen = None;
            for &c in &INITIAL_DETUNING_CANDIDATES {
                if initial_minimizer(enc, c)?.1 == 1 {
                    chosen = Some(c);
                    break;
                }
            }
            match chosen {
                Some(c) => (c, TieBreak::Reject),
                None => (INITIAL_DETUNING_CANDIDATES[0], TieBreak::FewestExcitations),
            }
        }
    };
    let initial_tie_broken = initial_minimizer(enc, delta_initial)?.1 > 1;
    let psi0 = initial_state_with(enc, delta_initial, tie)?;
    let template = plan.initial_schedule(delta_initial);
    let start = ParameterVector::from_schedule(&template);

    // calibrate a fixed step count so every objective evaluation is the same smooth function
    let mut converge_cfg = plan.propagation;
    converge_cfg.fixed_steps = None;
    let (_, calib) = propagate_from(enc, &template, &psi0, &converge_cfg)?;
    let fixed_cfg = PropagationConfig {
        fixed_steps: Some(calib.steps),
        ..converge_cfg
    };

    let diag = enc.diagonal();
    let e_opt = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let e_max = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if e_max > e_opt { e_max - e_opt } else { 1.0 };
    let target = plan
        .target_tolerance
        .map_or(f64::NEG_INFINITY, |t| e_opt + t * width);

    let scale = coordinate_scales(start.delta_count, start.values.len(), plan.omega_max);
    let mut ev = Evaluator {
        enc,
        template: &template,
        delta_count: start.delta_count,
        cfg: fixed_cfg,
        psi0: &psi0,
        scale: scale.clone(),
        evals: 0,
        limit: usize::MAX,
        best: (f64::INFINITY, start.values.clone()),
        trace: Vec::new(),
        target,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = Vec::new();
    let mut budget_exhausted = false;
    let mut target_reached = false;

    for stage in &plan.stages {
        let before = ev.best.0;
        let used = ev.evals;
        ev.limit = used + stage.max_evals;
        let z0: Vec<f64> = ev.best.1.iter().zip(&scale).map(|(p, s)| p / s).collect();
        let outcome = match stage.kind {
            StageKind::QuasiNewton => {
                let opts = BfgsOptions {
                    max_iter: stage.max_evals,
                    grad_tol: stage.tolerance,
                    f_tol: stage.tolerance,
                    max_step: 1.0,
                    ..Default::default()
                };
                bfgs(&mut ev, &z0, &opts).map(|_| ())
            }
            StageKind::Simplex => {
                let opts = SimplexOptions {
                    f_tol: stage.tolerance,
                    ..Default::default()
                };
                nelder_mead(|z: &[f64]| ev.value(z), &z0, &opts, &mut rng).map(|_| ())
            }
        };
        let mut by_budget = false;
        match outcome {
            Ok(()) => {}
            Err(Stop::Budget) => {
                by_budget = true;
                budget_exhausted = true;
            }
            Err(Stop::Target) => target_reached = true,
            Err(Stop::Failed(e)) => return Err(e),
        }
        history.push(StageRecord {
            kind: stage.kind,
            evaluations: ev.evals - used,
            best_before: before,
            best_after: ev.best.0,
            stopped_by_budget: by_budget,
        });
        if target_reached {
            break;
        }
    }

    let parameters = ParameterVector {
        values: ev.best.1.clone(),
        delta_count: start.delta_count,
    };
    let schedule = parameters.apply(&template)?;
    let (final_state, trajectory) = propagate_from(enc, &schedule, &psi0, &converge_cfg)?;
    let last = trajectory.final_sample();
    let e_best = last.energy;
    let most_probable = final_state.most_probable();
    let r_expectation = approximation_ratio(e_max, e_opt, e_best);
    let r_most_probable = approximation_ratio(e_max, e_opt, diag[most_probable as usize]);
    let (r, obt) = match plan.metric {
        CostMetric::Expectation => (r_expectation, e_best),
        CostMetric::MostProbable => (r_most_probable, diag[most_probable as usize]),
    };
    Ok(OptimizationResult {
        parameters,
        schedule,
        e_best,
        f_best: last.fidelity,
        r,
        r_expectation,
        r_most_probable,
        metric: plan.metric,
        c_obt: enc.to_model_energy(obt),
        c_opt: enc.to_model_energy(e_opt),
        c_max: enc.to_model_energy(e_max),
        e_opt,
        e_max,
        ground_states: trajectory.ground_states.clone(),
        most_probable,
        evaluations: ev.evals,
        best_trace: ev.trace,
        history,
        seed,
        budget_exhausted,
        target_reached,
        delta_initial,
        initial_tie_broken,
        objective_steps: calib.steps,
        final_state,
        trajectory,
    })
}
