//! Mapping of an Ising model onto Rydberg interactions and detunings.
//!
//! Units: hbar = 1, frequencies and energies in rad/us, times in us and
//! lengths in um. Excitation `n_j = 1` corresponds to `x_j = 1`, `s_j = -1`.
//!
//! The Rydberg Hamiltonian at zero drive is `-sum_j D_j n_j + sum_{j<k} V_jk n_j n_k`.
//! Matching it term by term against `sum h s + sum J s s` gives `V = 4 J` and
//! `D_j = 2 h_j + (1/2) sum_k V_jk`.

mod layout;

pub use layout::{
    embed_layout, layout_interactions, validate, AtomLayout, EmbedOptions, PairError,
    ResidualReport, ValidationReport,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::IsingModel;

/// Dispersion coefficient of the 60S1/2 Cs state, in GHz um^6.
pub const C6_GHZ_UM6: f64 = 139.0;
/// Conversion from GHz to rad/us.
pub const GHZ_TO_RAD_PER_US: f64 = 2.0 * PI * 1.0e3;
/// Radiative lifetime in us, kept as metadata.
pub const RYDBERG_LIFETIME_US: f64 = 234.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareLimits {
    /// Largest detuning magnitude, rad/us.
    pub delta_max: f64,
    /// Largest Rabi frequency magnitude, rad/us.
    pub omega_max: f64,
    /// Closest allowed atom spacing, um.
    pub r_min: f64,
    /// Spacing beyond which an interaction counts as switched off, um.
    pub r_far: f64,
    /// Longest protocol, us.
    pub t_max: f64,
    /// rad/us um^6.
    pub c6: f64,
    /// us, metadata only.
    pub lifetime: f64,
}

impl Default for HardwareLimits {
    fn default() -> Self {
        Self {
            delta_max: 2.0 * PI * 20.0,
            omega_max: 2.0 * PI * 5.0,
            r_min: 2.0,
            r_far: 12.0,
            t_max: 200.0,
            c6: C6_GHZ_UM6 * GHZ_TO_RAD_PER_US,
            lifetime: RYDBERG_LIFETIME_US,
        }
    }
}

impl HardwareLimits {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.delta_max,
            self.omega_max,
            self.r_min,
            self.r_far,
            self.t_max,
            self.c6,
            self.lifetime,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::LimitsUnsatisfiable(
                "all hardware limits must be positive and finite".into(),
            ));
        }
        if self.r_far <= self.r_min {
            return Err(Error::LimitsUnsatisfiable("r_far must exceed r_min".into()));
        }
        Ok(())
    }

    /// Interaction strength at distance `r`.
    pub fn interaction_at(&self, r: f64) -> f64 {
        self.c6 / r.powi(6)
    }
}

/// How couplings of either sign are treated by [`encode_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingPolicy {
    /// Reject negative couplings, which no positive C6 geometry realizes.
    #[default]
    VanDerWaals,
    /// Keep signed interactions; suitable only for ideal-mode simulation.
    AllowSigned,
}

/// Rydberg interaction matrix and final detunings reproducing an Ising model.
///
/// For every excitation pattern `x`, `rydberg_energy(x) = scale * ising(s(x)) + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedTarget {
    pub n: usize,
    /// Symmetric, zero diagonal, rad/us.
    pub interactions: Vec<Vec<f64>>,
    /// Final per-atom detunings, rad/us.
    pub delta_final: Vec<f64>,
    pub constant: f64,
    pub scale: f64,
}

impl EncodedTarget {
    /// Diagonal target energy `-sum D_j x_j + sum_{j<k} V_jk x_j x_k` of a basis state.
    pub fn energy_index(&self, bits: u64) -> f64 {
        let x = |i: usize| (bits >> i) & 1 == 1;
        let mut e = 0.0;
        for j in 0..self.n {
            if x(j) {
                e -= self.delta_final[j];
                for k in j + 1..self.n {
                    if x(k) {
                        e += self.interactions[j][k];
                    }
                }
            }
        }
        e
    }

    /// Target energies of all `2^n` basis states.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1u64 << self.n).map(|b| self.energy_index(b)).collect()
    }

    /// Maps a target energy back to the source model's energy scale and offset.
    pub fn to_model_energy(&self, e: f64) -> f64 {
        (e - self.constant) / self.scale
    }

    pub fn from_model_energy(&self, e: f64) -> f64 {
        self.scale * e + self.constant
    }

    pub fn is_van_der_waals(&self) -> bool {
        self.interactions.iter().flatten().all(|&v| v >= 0.0)
    }

    pub fn max_abs_detuning(&self) -> f64 {
        self.delta_final.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn max_abs_interaction(&self) -> f64 {
        self.interactions
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copy with a different interaction matrix, e.g. one realized by a layout.
    pub fn with_interactions(&self, v: Vec<Vec<f64>>) -> Result<Self> {
        if v.len() != self.n || v.iter().any(|r| r.len() != self.n) {
            return Err(Error::InvalidModel(format!(
                "interaction matrix must be {0}x{0}",
                self.n
            )));
        }
        Ok(Self {
            interactions: v,
            ..self.clone()
        })
    }

    fn scaled(&self, lambda: f64) -> Self {
        Self {
            n: self.n,
            interactions: self
                .interactions
                .iter()
                .map(|r| r.iter().map(|v| v * lambda).collect())
                .collect(),
            delta_final: self.delta_final.iter().map(|d| d * lambda).collect(),
            constant: self.constant * lambda,
            scale: self.scale * lambda,
        }
    }
}

/// Encodes an antiferromagnetic Ising model; negative couplings are rejected.
pub fn encode(m: &IsingModel) -> Result<EncodedTarget> {
    encode_with(m, CouplingPolicy::VanDerWaals)
}

pub fn encode_with(m: &IsingModel, policy: CouplingPolicy) -> Result<EncodedTarget> {
    let n = m.n();
    let mut v = vec![vec![0.0; n]; n];
    for (&(i, j), &c) in m.couplings() {
        if c < 0.0 && policy == CouplingPolicy::VanDerWaals {
            return Err(Error::NotEncodable { i, j, value: c });
        }
        v[i][j] = 4.0 * c;
        v[j][i] = 4.0 * c;
    }
    let delta: Vec<f64> = (0..n)
        .map(|j| 2.0 * m.h()[j] + 0.5 * v[j].iter().sum::<f64>())
        .collect();
    // ising(s(x)) = rydberg(x) + constant + sum h + sum J
    let offset = m.constant() + m.h().iter().sum::<f64>() + m.couplings().values().sum::<f64>();
    Ok(EncodedTarget {
        n,
        interactions: v,
        delta_final: delta,
        constant: -offset,
        scale: 1.0,
    })
}

/// Applies one multiplicative factor to interactions, detunings and offset so
/// that detunings stay below `delta_max` and every implied spacing lies in
/// `[r_min, r_far)`. The factor is 1 when the target already fits.
pub fn rescale(t: &EncodedTarget, limits: &HardwareLimits) -> Result<EncodedTarget> {
    limits.validate()?;
    let mut upper = f64::INFINITY;
    let mut upper_reason = "";
    let dmax = t.max_abs_detuning();
    if dmax > 0.0 && limits.delta_max / dmax < upper {
        upper = limits.delta_max / dmax;
        upper_reason = "delta_max";
    }
    let vmax = t.max_abs_interaction();
    let v_closest = limits.interaction_at(limits.r_min);
    if vmax > 0.0 && v_closest / vmax < upper {
        upper = v_closest / vmax;
        upper_reason = "r_min";
    }
    let vmin = t
        .interactions
        .iter()
        .flatten()
        .filter(|v| **v > 0.0)
        .fold(f64::INFINITY, |m, v| m.min(*v));
    let lower = if vmin.is_finite() {
        limits.interaction_at(limits.r_far) / vmin
    } else {
        0.0
    };
    if lower > upper {
        return Err(Error::LimitsUnsatisfiable(format!(
            "weakest interaction needs a factor >= {lower:.6e} to sit inside r_far, \
             but {upper_reason} caps it at {upper:.6e}"
        )));
    }
    let lambda = 1.0f64.clamp(lower, upper);
    Ok(t.scaled(lambda))
}
