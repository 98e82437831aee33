//! Time stepping of the Schroedinger equation with exact exponentials of
//! frozen Hamiltonians.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::schedule::{Drive, Schedule};
use super::{
    expectation_diag, fidelity_raw, initial_state_with, DiagonalParts, QuantumState, TieBreak,
};
use crate::encoding::EncodedTarget;
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const CF4_A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
const CF4_C1: f64 = 0.5 - SQRT3 / 6.0;
const CF4_C2: f64 = 0.5 + SQRT3 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fourth-order commutator-free exponential integrator (two exponentials per step).
    #[default]
    Magnus4,
    /// Hamiltonian frozen at the step midpoint.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    /// Convergence threshold on `E(T)` relative to the target energy width.
    pub tolerance: f64,
    pub max_doublings: usize,
    pub initial_steps: usize,
    /// Skip the convergence loop and use this many steps.
    pub fixed_steps: Option<usize>,
    pub method: Method,
    pub tie_break: TieBreak,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_doublings: 14,
            initial_steps: 200,
            fixed_steps: None,
            method: Method::Magnus4,
            tie_break: TieBreak::Reject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub omega: f64,
    pub delta_global: f64,
    /// `<H_target>` in encoded units.
    pub energy: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub steps: usize,
    pub doublings: usize,
    /// `|E(T)|` change of the last doubling, when the convergence loop ran.
    pub last_change: Option<f64>,
    pub initial_index: u64,
    pub ground_states: Vec<u64>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples
            .last()
            .expect("trajectory has at least two samples")
    }
}

/// Propagates the schedule's initial basis state.
pub fn propagate(
    enc: &EncodedTarget,
    s: &Schedule,
    cfg: &PropagationConfig,
) -> Result<(QuantumState, Trajectory)> {
    let psi0 = initial_state_with(enc, s.delta.initial, cfg.tie_break)?;
    propagate_from(enc, s, &psi0, cfg)
}

pub fn propagate_from(
    enc: &EncodedTarget,
    s: &Schedule,
    psi0: &QuantumState,
    cfg: &PropagationConfig,
) -> Result<(QuantumState, Trajectory)> {
    let profile = s.profile()?;
    propagate_drive(enc, &profile, psi0, s.sample_count, cfg)
}

/// Target ground states, grouping energies within `1e-9` of the energy width.
pub(crate) fn target_grounds(diag: &[f64]) -> (Vec<u64>, f64) {
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { hi - lo } else { 1.0 };
    let grounds = (0..diag.len() as u64)
        .filter(|&b| diag[b as usize] - lo <= 1e-9 * width)
        .collect();
    (grounds, width)
}

pub fn propagate_drive<D: Drive>(
    enc: &EncodedTarget,
    drive: &D,
    psi0: &QuantumState,
    sample_count: usize,
    cfg: &PropagationConfig,
) -> Result<(QuantumState, Trajectory)> {
    if psi0.n() != enc.n {
        return Err(Error::VariableCountMismatch {
            left: psi0.n(),
            right: enc.n,
        });
    }
    if sample_count < 2 {
        return Err(Error::InvalidSchedule(
            "sample_count must be at least 2".into(),
        ));
    }
    let parts = DiagonalParts::new(enc)?;
    let target = enc.diagonal();
    let (grounds, width) = target_grounds(&target);
    let mut run = Runner {
        n: enc.n,
        parts: &parts,
        target: &target,
        grounds: &grounds,
        method: cfg.method,
        scratch: Scratch::new(1 << enc.n),
    };
    let segments = sample_count - 1;

    let (psi, samples, steps, doublings, last_change) = if let Some(fixed) = cfg.fixed_steps {
        let per = fixed.div_ceil(segments).max(1);
        let (psi, samples) = run.run(drive, psi0, segments, per);
        (psi, samples, per * segments, 0, None)
    } else {
        let mut per = cfg.initial_steps.div_ceil(segments).max(1);
        let mut prev = run.run(drive, psi0, segments, per);
        let mut outcome = None;
        let mut change = f64::INFINITY;
        for d in 1..=cfg.max_doublings {
            per *= 2;
            let cur = run.run(drive, psi0, segments, per);
            let e_prev = prev.1.last().map(|s| s.energy).unwrap_or(0.0);
            let e_cur = cur.1.last().map(|s| s.energy).unwrap_or(0.0);
            change = (e_cur - e_prev).abs();
            if change < cfg.tolerance * width {
                outcome = Some((cur.0, cur.1, per * segments, d, Some(change)));
                break;
            }
            prev = cur;
        }
        outcome.ok_or(Error::NotConverged {
            doublings: cfg.max_doublings,
            last_change: change,
        })?
    };

    let dev = (psi.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
    if dev > 1e-9 {
        return Err(Error::NormViolation(dev));
    }
    let state = QuantumState {
        n: enc.n,
        amplitudes: psi,
    };
    let initial_index = psi0.most_probable();
    Ok((
        state,
        Trajectory {
            samples,
            steps,
            doublings,
            last_change,
            initial_index,
            ground_states: grounds,
        },
    ))
}

struct Scratch {
    diag: Vec<f64>,
    term: Vec<Complex64>,
    next: Vec<Complex64>,
    acc: Vec<Complex64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            diag: vec![0.0; dim],
            term: vec![z; dim],
            next: vec![z; dim],
            acc: vec![z; dim],
        }
    }
}

struct Runner<'a> {
    n: usize,
    parts: &'a DiagonalParts,
    target: &'a [f64],
    grounds: &'a [u64],
    method: Method,
    scratch: Scratch,
}

impl Runner<'_> {
    fn sample<D: Drive>(&self, drive: &D, t: f64, psi: &[Complex64]) -> TrajectorySample {
        TrajectorySample {
            t,
            omega: drive.omega(t),
            delta_global: drive.delta_global(t),
            energy: expectation_diag(psi, self.target),
            fidelity: fidelity_raw(psi, self.grounds),
        }
    }

    fn run<D: Drive>(
        &mut self,
        drive: &D,
        psi0: &QuantumState,
        segments: usize,
        per_segment: usize,
    ) -> (Vec<Complex64>, Vec<TrajectorySample>) {
        let total = segments * per_segment;
        let duration = drive.duration();
        let dt = duration / total as f64;
        let mut psi = psi0.amplitudes().to_vec();
        let mut samples = Vec::with_capacity(segments + 1);
        samples.push(self.sample(drive, 0.0, &psi));
        for k in 0..total {
            let t = k as f64 * dt;
            match self.method {
                Method::Magnus4 => {
                    let (t1, t2) = (t + CF4_C1 * dt, t + CF4_C2 * dt);
                    let (d1, d2) = (drive.delta_global(t1), drive.delta_global(t2));
                    let (w1, w2) = (drive.omega(t1), drive.omega(t2));
                    let a = CF4_A1 + CF4_A2;
                    self.exp_apply(
                        &mut psi,
                        CF4_A2 * d1 + CF4_A1 * d2,
                        a,
                        0.5 * (CF4_A2 * w1 + CF4_A1 * w2),
                        dt,
                    );
                    self.exp_apply(
                        &mut psi,
                        CF4_A1 * d1 + CF4_A2 * d2,
                        a,
                        0.5 * (CF4_A1 * w1 + CF4_A2 * w2),
                        dt,
                    );
                }
                Method::Midpoint => {
                    let tm = t + 0.5 * dt;
                    self.exp_apply(
                        &mut psi,
                        drive.delta_global(tm),
                        1.0,
                        0.5 * drive.omega(tm),
                        dt,
                    );
                }
            }
            if (k + 1) % per_segment == 0 {
                let t_end = if k + 1 == total {
                    duration
                } else {
                    (k + 1) as f64 * dt
                };
                samples.push(self.sample(drive, t_end, &psi));
            }
        }
        (psi, samples)
    }

    /// `psi <- exp(-i tau K) psi` for `K = a*detuning + b*interaction + w*sum_j X_j`,
    /// by Taylor series on substeps of norm-time at most 3 after centering the diagonal.
    fn exp_apply(&mut self, psi: &mut [Complex64], a: f64, b: f64, w: f64, tau: f64) {
        let Scratch {
            diag,
            term,
            next,
            acc,
        } = &mut self.scratch;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for ((d, det), int) in diag
            .iter_mut()
            .zip(&self.parts.detuning)
            .zip(&self.parts.interaction)
        {
            *d = a * det + b * int;
            lo = lo.min(*d);
            hi = hi.max(*d);
        }
        let center = 0.5 * (lo + hi);
        diag.iter_mut().for_each(|d| *d -= center);
        let bound = 0.5 * (hi - lo) + w.abs() * self.n as f64;
        let substeps = (tau * bound / 3.0).ceil().max(1.0) as usize;
        let h = tau / substeps as f64;
        let n = self.n;
        for _ in 0..substeps {
            acc.copy_from_slice(psi);
            term.copy_from_slice(psi);
            for k in 1..=60 {
                let c = Complex64::new(0.0, -h / k as f64);
                let mut largest = 0.0f64;
                for (bidx, out) in next.iter_mut().enumerate() {
                    let mut v = term[bidx] * diag[bidx];
                    if w != 0.0 {
                        let mut flips = Complex64::new(0.0, 0.0);
                        for j in 0..n {
                            flips += term[bidx ^ (1 << j)];
                        }
                        v += flips * w;
                    }
                    *out = v * c;
                    largest = largest.max(out.norm_sqr());
                }
                std::mem::swap(term, next);
                for (x, t) in acc.iter_mut().zip(term.iter()) {
                    *x += t;
                }
                if largest < 1e-34 {
                    break;
                }
            }
            psi.copy_from_slice(acc);
        }
        let phase = Complex64::from_polar(1.0, -center * tau);
        psi.iter_mut().for_each(|x| *x *= phase);
    }
}
