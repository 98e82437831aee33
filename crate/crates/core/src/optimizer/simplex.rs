//! Nelder-Mead with dimension-adaptive coefficients and restarts.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Initial edge length.
    pub step: f64,
    /// Collapse threshold on the spread of values, relative to `1 + |f_best|`.
    pub f_tol: f64,
    /// Collapse threshold on the simplex diameter.
    pub x_tol: f64,
    /// Restarts stop once the edge length drops below this.
    pub min_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            step: 0.5,
            f_tol: 1e-10,
            x_tol: 1e-8,
            min_step: 1e-4,
        }
    }
}

/// Minimizes `f` from `x0`. Each collapse triggers a restart around the best
/// vertex with a halved edge and seeded random edge orientations. Returns the
/// best point and value; errors from `f` abort immediately.
pub fn nelder_mead<F, E, R>(
    mut f: F,
    x0: &[f64],
    opts: &SimplexOptions,
    rng: &mut R,
) -> Result<(Vec<f64>, f64), E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
    R: Rng,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut best = (x0.to_vec(), f(x0)?);
    if n == 0 {
        return Ok(best);
    }
    let mut step = opts.step;
    let mut first = true;
    while step >= opts.min_step {
        let mut verts: Vec<(Vec<f64>, f64)> = vec![best.clone()];
        for i in 0..n {
            let sign = if first || rng.gen_bool(0.5) {
                1.0
            } else {
                -1.0
            };
            let mut x = best.0.clone();
            x[i] += sign * step;
            let fx = f(&x)?;
            verts.push((x, fx));
        }
        first = false;
        loop {
            verts.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (f_lo, f_hi) = (verts[0].1, verts[n].1);
            let diameter = verts[1..]
                .iter()
                .map(|v| {
                    v.0.iter()
                        .zip(&verts[0].0)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                })
                .fold(0.0, f64::max);
            if f_hi - f_lo <= opts.f_tol * (1.0 + f_lo.abs()) || diameter <= opts.x_tol {
                break;
            }
            let mut c = vec![0.0; n];
            for v in &verts[..n] {
                c.iter_mut().zip(&v.0).for_each(|(ci, xi)| *ci += xi / nf);
            }
            let along = |t: f64, to: &[f64]| -> Vec<f64> {
                c.iter()
                    .zip(to)
                    .map(|(ci, xi)| ci + t * (xi - ci))
                    .collect()
            };
            let worst = verts[n].0.clone();
            let xr = along(-alpha, &worst);
            let fr = f(&xr)?;
            let accepted = if fr < verts[0].1 {
                let xe = along(-alpha * beta, &worst);
                let fe = f(&xe)?;
                Some(if fe < fr { (xe, fe) } else { (xr, fr) })
            } else if fr < verts[n - 1].1 {
                Some((xr, fr))
            } else if fr < verts[n].1 {
                let xc = along(-alpha * gamma, &worst);
                let fc = f(&xc)?;
                (fc <= fr).then_some((xc, fc))
            } else {
                let xc = along(gamma, &worst);
                let fc = f(&xc)?;
                (fc < verts[n].1).then_some((xc, fc))
            };
            match accepted {
                Some(v) => verts[n] = v,
                None => {
                    let x_lo = verts[0].0.clone();
                    for v in verts.iter_mut().skip(1) {
                        let x: Vec<f64> = x_lo
                            .iter()
                            .zip(&v.0)
                            .map(|(a, b)| a + delta * (b - a))
                            .collect();
                        let fx = f(&x)?;
                        *v = (x, fx);
                    }
                }
            }
        }
        if verts[0].1 < best.1 {
            best = verts[0].clone();
        }
        step *= 0.5;
    }
    Ok(best)
}
