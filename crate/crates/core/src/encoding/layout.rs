//! Atom placements realizing a target interaction matrix through `C6 / r^6`.

use std::convert::Infallible;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EncodedTarget, HardwareLimits};
use crate::error::{Error, Result};
use crate::optimizer::quasi_newton::{bfgs, BfgsOptions, GradientObjective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomLayout {
    pub dim: usize,
    #[serde(rename = "positions_um")]
    pub positions: Vec<Vec<f64>>,
    #[serde(rename = "C6")]
    pub c6: f64,
}

impl AtomLayout {
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.positions[i]
            .iter()
            .zip(&self.positions[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::InvalidModel(format!(
                "layout dimension {} not in 2..=3",
                self.dim
            )));
        }
        if self.positions.iter().any(|p| p.len() != self.dim) {
            return Err(Error::InvalidModel("position of wrong dimension".into()));
        }
        if !(self.c6 > 0.0) {
            return Err(Error::InvalidModel("C6 must be positive".into()));
        }
        Ok(())
    }
}

/// Pairwise `C6 / r^6`; coincident atoms are an error.
pub fn layout_interactions(l: &AtomLayout) -> Result<Vec<Vec<f64>>> {
    l.validate()?;
    let n = l.n();
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = l.distance(i, j);
            if r == 0.0 {
                return Err(Error::CoincidentAtoms(i, j));
            }
            v[i][j] = l.c6 / r.powi(6);
            v[j][i] = v[i][j];
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max |C6/r^6 - V| / max V` over all pairs.
    pub max_error: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub stress: f64,
}

struct Stress<'a> {
    dim: usize,
    /// Target distance for interacting pairs, `None` for pairs to switch off.
    targets: &'a [(usize, usize, Option<f64>)],
    r_far: f64,
}

impl Stress<'_> {
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut f = 0.0;
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for &(i, j, target) in self.targets {
            let (pi, pj) = (
                &x[i * self.dim..(i + 1) * self.dim],
                &x[j * self.dim..(j + 1) * self.dim],
            );
            let r = pi
                .iter()
                .zip(pj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                .max(1e-12);
            let (term, dr) = match target {
                Some(t) => {
                    let u = (r - t) / t;
                    (u * u, 2.0 * u / t)
                }
                None if r < self.r_far => {
                    let u = (self.r_far - r) / self.r_far;
                    (u * u, -2.0 * u / self.r_far)
                }
                None => (0.0, 0.0),
            };
            f += term;
            if let Some(g) = g.as_deref_mut() {
                for k in 0..self.dim {
                    let c = dr * (pi[k] - pj[k]) / r;
                    g[i * self.dim + k] += c;
                    g[j * self.dim + k] -= c;
                }
            }
        }
        f
    }
}

impl GradientObjective for Stress<'_> {
    type Error = Infallible;
    fn value(&mut self, x: &[f64]) -> std::result::Result<f64, Infallible> {
        Ok(self.eval(x, None))
    }
    fn gradient(&mut self, x: &[f64], _: f64) -> std::result::Result<Vec<f64>, Infallible> {
        let mut g = vec![0.0; x.len()];
        self.eval(x, Some(&mut g));
        Ok(g)
    }
}

fn residual(t: &EncodedTarget, l: &AtomLayout) -> (f64, Option<(usize, usize)>) {
    let vmax = t.max_abs_interaction().max(f64::MIN_POSITIVE);
    let mut worst = (0.0, None);
    for i in 0..t.n {
        for j in i + 1..t.n {
            let r = l.distance(i, j);
            let realized = if r > 0.0 {
                l.c6 / r.powi(6)
            } else {
                f64::INFINITY
            };
            let e = (realized - t.interactions[i][j]).abs() / vmax;
            if worst.1.is_none() || e > worst.0 {
                worst = (e, Some((i, j)));
            }
        }
    }
    worst
}

/// Searches for positions whose `C6 / r^6` interactions match the target.
///
/// Positive entries fix a target spacing `(C6/V)^(1/6)`; zero entries push
/// atoms beyond `r_far`. The returned layout is the best of several seeded
/// restarts; in three dimensions the best planar solution is one of the
/// candidates so adding a dimension never worsens the residual.
pub fn embed_layout(
    t: &EncodedTarget,
    dim: usize,
    seed: u64,
    limits: &HardwareLimits,
    opts: &EmbedOptions,
) -> Result<(AtomLayout, ResidualReport)> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidModel(format!(
            "layout dimension {dim} not in 2..=3"
        )));
    }
    limits.validate()?;
    let n = t.n;
    let mut targets = Vec::new();
    let mut spacing = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = t.interactions[i][j];
            if v > 0.0 {
                let r = (limits.c6 / v).powf(1.0 / 6.0);
                spacing.push(r);
                targets.push((i, j, Some(r)));
            } else {
                targets.push((i, j, None));
            }
        }
    }
    let typical = if spacing.is_empty() {
        limits.r_far
    } else {
        spacing.iter().sum::<f64>() / spacing.len() as f64
    };
    let side = typical * (n.max(1) as f64).powf(1.0 / dim as f64);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|_| (0..n * dim).map(|_| rng.gen_range(0.0..side)).collect())
        .collect();
    let mut lifted = None;
    if dim == 3 && n > 0 {
        let (planar, _) = embed_layout(t, 2, seed, limits, opts)?;
        let x: Vec<f64> = planar
            .positions
            .iter()
            .flat_map(|p| [p[0], p[1], 0.0])
            .collect();
        starts.push(x.clone());
        lifted = Some(x);
    }

    let bfgs_opts = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: 1e-13,
        f_tol: 0.0,
        ..Default::default()
    };
    let mut candidates: Vec<(AtomLayout, f64, f64, Option<(usize, usize)>)> = starts
        .par_iter()
        .map(|x0| {
            let mut stress = Stress {
                dim,
                targets: &targets,
                r_far: limits.r_far,
            };
            let out = match bfgs(&mut stress, x0, &bfgs_opts) {
                Ok(o) => o,
                Err(e) => match e {},
            };
            let layout = AtomLayout {
                dim,
                positions: out.x.chunks(dim).map(|c| c.to_vec()).collect(),
                c6: limits.c6,
            };
            let (res, pair) = residual(t, &layout);
            (layout, out.f, res, pair)
        })
        .collect();
    if let Some(x) = lifted {
        let stress = Stress {
            dim,
            targets: &targets,
            r_far: limits.r_far,
        }
        .eval(&x, None);
        let layout = AtomLayout {
            dim,
            positions: x.chunks(dim).map(|c| c.to_vec()).collect(),
            c6: limits.c6,
        };
        let (res, pair) = residual(t, &layout);
        candidates.push((layout, stress, res, pair));
    }
    let (layout, stress, max_error, worst_pair) = candidates
        .into_iter()
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.1.total_cmp(&b.1)))
        .expect("at least one restart");
    let layout = if n == 0 {
        AtomLayout {
            dim,
            positions: vec![],
            c6: limits.c6,
        }
    } else {
        layout
    };
    Ok((
        layout,
        ResidualReport {
            max_error,
            worst_pair,
            stress,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub i: usize,
    pub j: usize,
    pub target: f64,
    pub realized: f64,
    /// Relative error for interacting pairs; unwanted interaction relative to
    /// the largest target for pairs meant to be switched off.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pairs: Vec<PairError>,
    pub max_relative_error: f64,
    pub max_unwanted: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub offending: Vec<(usize, usize)>,
}

/// Compares realized and target interactions pair by pair.
pub fn validate(t: &EncodedTarget, l: &AtomLayout, tol: f64) -> Result<ValidationReport> {
    if l.n() != t.n {
        return Err(Error::VariableCountMismatch {
            left: t.n,
            right: l.n(),
        });
    }
    let realized = layout_interactions(l)?;
    let vmax = t.max_abs_interaction();
    let mut pairs = Vec::new();
    let (mut max_rel, mut max_unwanted) = (0.0f64, 0.0f64);
    let mut offending = Vec::new();
    for i in 0..t.n {
        for j in i + 1..t.n {
            let (vt, vl) = (t.interactions[i][j], realized[i][j]);
            let error = if vt != 0.0 {
                let e = (vl - vt).abs() / vt.abs();
                max_rel = max_rel.max(e);
                e
            } else {
                let e = if vmax > 0.0 { vl / vmax } else { vl };
                max_unwanted = max_unwanted.max(e);
                e
            };
            if !(error <= tol) {
                offending.push((i, j));
            }
            pairs.push(PairError {
                i,
                j,
                target: vt,
                realized: vl,
                error,
            });
        }
    }
    Ok(ValidationReport {
        pairs,
        max_relative_error: max_rel,
        max_unwanted,
        tolerance: tol,
        passed: offending.is_empty(),
        offending,
    })
}
