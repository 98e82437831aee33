//! State-vector simulation of the driven Rydberg Hamiltonian
//! `H(t) = (W/2) sum_j X_j - D_G(t) sum_j D_j n_j + sum_{j<k} V_jk n_j n_k`.

mod propagate;
mod schedule;

pub use propagate::{
    propagate, propagate_drive, propagate_from, Method, PropagationConfig, Trajectory,
    TrajectorySample,
};
pub use schedule::{
    delta_profile, omega_profile, Basis, DeltaParams, Drive, OmegaParams, Profile, Schedule,
    DEFAULT_COEFFICIENTS, DEFAULT_DURATION_US, DEFAULT_SAMPLE_COUNT,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodedTarget;
use crate::error::{Error, Result};

/// Largest atom count simulated.
pub const MAX_ATOMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "StateRepr", into = "StateRepr")]
pub struct QuantumState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    n: usize,
    /// `[re, im]` per basis state.
    amplitudes: Vec<[f64; 2]>,
}

impl From<StateRepr> for QuantumState {
    fn from(r: StateRepr) -> Self {
        Self {
            n: r.n,
            amplitudes: r
                .amplitudes
                .iter()
                .map(|[a, b]| Complex64::new(*a, *b))
                .collect(),
        }
    }
}

impl From<QuantumState> for StateRepr {
    fn from(s: QuantumState) -> Self {
        Self {
            n: s.n,
            amplitudes: s.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl QuantumState {
    pub fn basis(n: usize, index: u64) -> Result<Self> {
        check_dimension(n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        let slot = amplitudes
            .get_mut(index as usize)
            .ok_or_else(|| Error::InvalidModel(format!("basis index {index} out of range")))?;
        *slot = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// Normalizes the given amplitudes.
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dimension(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NormViolation(1.0));
        }
        Ok(Self {
            n,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Basis index with the largest probability; ties go to the lower index.
    pub fn most_probable(&self) -> u64 {
        let mut best = (0usize, -1.0);
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() > best.1 {
                best = (i, a.norm_sqr());
            }
        }
        best.0 as u64
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n > MAX_ATOMS {
        return Err(Error::DimensionTooLarge { n, cap: MAX_ATOMS });
    }
    Ok(())
}

/// Diagonal pieces of the Hamiltonian: `-sum D_j x_j` and `sum V x x` per basis state.
#[derive(Debug, Clone)]
pub(crate) struct DiagonalParts {
    pub detuning: Vec<f64>,
    pub interaction: Vec<f64>,
}

impl DiagonalParts {
    pub fn new(enc: &EncodedTarget) -> Result<Self> {
        check_dimension(enc.n)?;
        let dim = 1usize << enc.n;
        let mut detuning = vec![0.0; dim];
        let mut interaction = vec![0.0; dim];
        for b in 0..dim {
            let x = |i: usize| (b >> i) & 1 == 1;
            for j in 0..enc.n {
                if x(j) {
                    detuning[b] -= enc.delta_final[j];
                    for k in j + 1..enc.n {
                        if x(k) {
                            interaction[b] += enc.interactions[j][k];
                        }
                    }
                }
            }
        }
        Ok(Self {
            detuning,
            interaction,
        })
    }

    pub fn at(&self, delta_global: f64) -> Vec<f64> {
        self.detuning
            .iter()
            .zip(&self.interaction)
            .map(|(d, v)| delta_global * d + v)
            .collect()
    }
}

/// Hamiltonian at one instant: a diagonal plus a uniform transverse drive.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub n: usize,
    pub diagonal: Vec<f64>,
    pub omega: f64,
}

impl Hamiltonian {
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let half = 0.5 * self.omega;
        (0..psi.len())
            .map(|b| {
                let flips: Complex64 = (0..self.n).map(|j| psi[b ^ (1 << j)]).sum();
                psi[b] * self.diagonal[b] + flips * half
            })
            .collect()
    }

    /// Row-major dense matrix, real since the drive phase is fixed.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let dim = self.diagonal.len();
        let mut h = vec![vec![0.0; dim]; dim];
        for (b, row) in h.iter_mut().enumerate() {
            row[b] = self.diagonal[b];
            for j in 0..self.n {
                row[b ^ (1 << j)] += 0.5 * self.omega;
            }
        }
        h
    }
}

pub fn hamiltonian_at(enc: &EncodedTarget, s: &Schedule, t: f64) -> Result<Hamiltonian> {
    s.check_time(t)?;
    let p = s.profile()?;
    let parts = DiagonalParts::new(enc)?;
    Ok(Hamiltonian {
        n: enc.n,
        diagonal: parts.at(p.delta_global(t)),
        omega: p.omega(t),
    })
}

/// How to resolve a degenerate minimum of the initial diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Report the degeneracy as an error.
    #[default]
    Reject,
    /// Prefer the minimizer with the fewest excitations, then the lowest index.
    FewestExcitations,
}

/// Basis state minimizing the diagonal of `H(0)`.
pub fn initial_state(enc: &EncodedTarget, s: &Schedule) -> Result<QuantumState> {
    initial_state_with(enc, s.delta.initial, TieBreak::Reject)
}

pub fn initial_state_with(
    enc: &EncodedTarget,
    delta_initial: f64,
    tie: TieBreak,
) -> Result<QuantumState> {
    let (index, count) = initial_minimizer(enc, delta_initial)?;
    if count > 1 && tie == TieBreak::Reject {
        return Err(Error::DegenerateInitialState { count });
    }
    QuantumState::basis(enc.n, index)
}

/// Preferred minimizer of the initial diagonal and the size of the minimizing set.
pub fn initial_minimizer(enc: &EncodedTarget, delta_initial: f64) -> Result<(u64, usize)> {
    let diag = DiagonalParts::new(enc)?.at(delta_initial);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1.0);
    let minimizers: Vec<u64> = (0..diag.len() as u64)
        .filter(|&b| diag[b as usize] - lo <= 1e-9 * scale)
        .collect();
    let index = *minimizers
        .iter()
        .min_by_key(|b| (b.count_ones(), **b))
        .expect("nonempty");
    Ok((index, minimizers.len()))
}

/// First candidate value of `D_G(0)` giving a unique initial state.
pub fn choose_initial_detuning(enc: &EncodedTarget, candidates: &[f64]) -> Result<Option<f64>> {
    for &c in candidates {
        if initial_minimizer(enc, c)?.1 == 1 {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// `<psi| H_target |psi>` in encoded units.
pub fn expectation(state: &QuantumState, enc: &EncodedTarget) -> Result<f64> {
    let dev = (state.norm_sqr() - 1.0).abs();
    if dev > 1e-6 {
        return Err(Error::NormViolation(dev));
    }
    if state.n != enc.n {
        return Err(Error::VariableCountMismatch {
            left: state.n,
            right: enc.n,
        });
    }
    Ok(expectation_diag(state.amplitudes(), &enc.diagonal()))
}

pub(crate) fn expectation_diag(psi: &[Complex64], diag: &[f64]) -> f64 {
    psi.iter().zip(diag).map(|(a, d)| a.norm_sqr() * d).sum()
}

/// Total probability on the given basis states.
pub fn fidelity(state: &QuantumState, ground: &[u64]) -> f64 {
    fidelity_raw(state.amplitudes(), ground)
}

pub(crate) fn fidelity_raw(psi: &[Complex64], ground: &[u64]) -> f64 {
    ground
        .iter()
        .filter_map(|&g| psi.get(g as usize))
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .min(1.0)
}
