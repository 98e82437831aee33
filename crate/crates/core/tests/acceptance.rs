//! Acceptance criteria, one PASS/FAIL line each. Runs with a custom harness
//! so the lines show up in plain `cargo test` output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rydberg_qubo::annealer::{
    initial_state_with, propagate, propagate_drive, propagate_from, Drive, PropagationConfig,
    QuantumState, Schedule, TieBreak,
};
use rydberg_qubo::encoding::{
    embed_layout, encode, encode_with, layout_interactions, rescale, validate, CouplingPolicy,
    EmbedOptions, EncodedTarget, HardwareLimits,
};
use rydberg_qubo::hardness::{analyze_model, EnergyConvention, SpectralRow, DEFAULT_EPSILON};
use rydberg_qubo::optimizer::{
    central_gradient, coordinate_scales, run_hybrid, OptimizationPlan, ParameterVector,
    INITIAL_DETUNING_CANDIDATES,
};
use rydberg_qubo::problems::{reference_instance, ProblemInstance, REFERENCE_NAMES};
use rydberg_qubo::qubo::IsingModel;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn bit(b: u64, i: usize) -> u8 {
    ((b >> i) & 1) as u8
}

/// Number of assignments attaining the minimum of `f` over `n` bits.
fn count_minimizers(n: usize, f: impl Fn(&[u8]) -> f64) -> (f64, usize) {
    let vals: Vec<f64> = (0..1u64 << n)
        .map(|b| f(&(0..n).map(|i| bit(b, i)).collect::<Vec<_>>()))
        .collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    (lo, vals.iter().filter(|v| (*v - lo).abs() < 1e-9).count())
}

// 1 -------------------------------------------------------------------------

fn hardness_closure() -> Check {
    // |E0|, G, D_opt, degeneracy of the single threatening subspace sitting one gap above
    let rows = [
        ("two_sat", 0.15, 0.30, 4, 4, 27.25),
        ("xor_sat", 0.30, 0.60, 6, 2, 1.13),
    ];
    let mut out = vec![];
    for (name, e0, g, d_opt, d, want) in rows {
        let row = SpectralRow {
            name: name.into(),
            e0: -e0,
            gap: g,
            d_opt,
            threats: vec![(d, 1.0)],
        };
        let hp = row.report().map_err(|e| e.to_string())?.hp;
        let oracle = d as f64 * (-1.0f64).exp() / (e0 * d_opt as f64 * g * g);
        ensure!(
            (hp - oracle).abs() <= 1e-12 * oracle,
            "{name}: library {hp} vs direct {oracle}"
        );
        ensure!(
            (hp - want).abs() / want < 0.01,
            "{name}: HP {hp} not within 1% of {want}"
        );
        out.push(format!("{name} HP={hp:.4}"));
    }
    Ok(out.join(", "))
}

// 2 -------------------------------------------------------------------------

fn degeneracy_oracle() -> Check {
    // counted from the constraints themselves, not from the QUBO
    let sat = |x: &[u8]| {
        let c1 = x[0] == 1 || x[1] == 1;
        let c2 = x[0] == 0 || x[2] == 1;
        (!c1) as u8 as f64 + (!c2) as u8 as f64
    };
    let xor_violations = |x: &[u8], cs: &[(usize, usize)]| {
        cs.iter().filter(|(i, j)| x[*i] ^ x[*j] != 1).count() as f64
    };
    let packing = |x: &[u8]| {
        let conflicts = [(0, 2), (0, 3), (1, 2), (1, 3)];
        if conflicts.iter().any(|&(i, j)| x[i] == 1 && x[j] == 1) {
            f64::INFINITY
        } else {
            -(x.iter().map(|&v| v as f64).sum::<f64>())
        }
    };
    let oracles: [(&str, usize, Box<dyn Fn(&[u8]) -> f64>, usize); 4] = [
        ("two_sat", 3, Box::new(sat), 4),
        (
            "xor_sat",
            3,
            Box::new(move |x: &[u8]| xor_violations(x, &[(0, 1), (1, 2), (2, 0)])),
            6,
        ),
        (
            "mixed",
            3,
            Box::new(move |x: &[u8]| sat(x) + xor_violations(x, &[(1, 2)])),
            2,
        ),
        ("set_packing", 4, Box::new(packing), 2),
    ];
    let mut out = vec![];
    for (name, n, f, published) in oracles {
        let (_, d_oracle) = count_minimizers(n, f);
        let r = reference_instance(name).map_err(|e| e.to_string())?;
        let h = analyze_model(&r.model, EnergyConvention::Ising, 0.0, DEFAULT_EPSILON)
            .map_err(|e| e.to_string())?;
        ensure!(
            d_oracle == published,
            "{name}: oracle D_opt {d_oracle} != {published}"
        );
        ensure!(
            h.d_opt == published,
            "{name}: enumerated D_opt {} != {published}",
            h.d_opt
        );
        ensure!(
            r.metadata.reference.d_opt_reproducible,
            "{name} should be a reproduction target"
        );
        out.push(format!("{name}={}", h.d_opt));
    }
    for name in ["qap", "clustering", "protein"] {
        let r = reference_instance(name).map_err(|e| e.to_string())?;
        let h = analyze_model(&r.model, EnergyConvention::Ising, 0.0, DEFAULT_EPSILON)
            .map_err(|e| e.to_string())?;
        ensure!(
            !r.metadata.reference.d_opt_reproducible,
            "{name} must be flagged"
        );
        out.push(format!(
            "{name}={} (flagged, published {})",
            h.d_opt, r.metadata.reference.d_opt
        ));
    }
    Ok(out.join(", "))
}

// 3 -------------------------------------------------------------------------

fn brute_force_values() -> Check {
    let w = [
        [0.0, 3.0, 0.0, 0.0, 1.0],
        [3.0, 0.0, 2.0, 0.0, 0.0],
        [0.0, 2.0, 0.0, 4.0, 1.0],
        [0.0, 0.0, 4.0, 0.0, 2.0],
        [1.0, 0.0, 1.0, 2.0, 0.0],
    ];
    let cut = |x: &[u8]| {
        let mut c = 0.0;
        for i in 0..5 {
            for j in i + 1..5 {
                if x[i] != x[j] {
                    c += w[i][j];
                }
            }
        }
        c
    };
    let (neg_max, _) = count_minimizers(5, |x| -cut(x));
    ensure!(-neg_max == 11.0, "max cut {} != 11", -neg_max);
    let clustering = reference_instance("clustering").map_err(|e| e.to_string())?;
    let (q_min, _) = count_minimizers(5, |x| clustering.model.evaluate(x).unwrap());
    ensure!(q_min == -11.0, "clustering QUBO minimum {q_min} != -11");

    let f = [[0.0, 3.0], [3.0, 0.0]];
    let d = [[0.0, 2.0], [2.0, 0.0]];
    let qap = reference_instance("qap").map_err(|e| e.to_string())?;
    let ProblemInstance::Qap(inst) = &qap.instance else {
        return Err("qap reference is not a QAP instance".into());
    };
    let mut costs = vec![];
    for perm in [[0usize, 1], [1, 0]] {
        let mut c = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                c += f[i][j] * d[perm[i]][perm[j]];
            }
        }
        ensure!(c == 12.0, "assignment {perm:?} costs {c}");
        ensure!(
            inst.assignment_cost(&perm) == 12.0,
            "library cost of {perm:?}"
        );
        let mut x = vec![0u8; 4];
        for (i, &k) in perm.iter().enumerate() {
            x[inst.index(i, k)] = 1;
        }
        let qv = qap.model.evaluate(&x).map_err(|e| e.to_string())?;
        ensure!((qv - 12.0).abs() < 1e-9, "QUBO value of {perm:?} is {qv}");
        costs.push(c);
    }

    let cs = [(0, 1), (1, 2), (2, 0)];
    let (min_viol, _) = count_minimizers(3, |x| {
        cs.iter().filter(|(i, j)| x[*i] ^ x[*j] != 1).count() as f64
    });
    ensure!(
        min_viol == 1.0,
        "XOR triangle minimum violations {min_viol}"
    );
    let xs = reference_instance("xor_sat").map_err(|e| e.to_string())?;
    let (q_min, _) = count_minimizers(3, |x| xs.model.evaluate(x).unwrap());
    ensure!(q_min == 1.0, "XOR QUBO minimum {q_min}");
    Ok(format!(
        "max cut 11, QAP costs {costs:?}, XOR min violations 1"
    ))
}

// 4 -------------------------------------------------------------------------

fn ising_direct(h: &[f64], j: &[(usize, usize, f64)], b: u64) -> f64 {
    let s = |i: usize| 1.0 - 2.0 * bit(b, i) as f64;
    h.iter().enumerate().map(|(i, hi)| hi * s(i)).sum::<f64>()
        + j.iter().map(|&(a, c, v)| v * s(a) * s(c)).sum::<f64>()
}

fn rydberg_direct(t: &EncodedTarget, b: u64) -> f64 {
    let mut e = 0.0;
    for i in 0..t.n {
        if bit(b, i) == 1 {
            e -= t.delta_final[i];
            for k in i + 1..t.n {
                if bit(b, k) == 1 {
                    e += t.interactions[i][k];
                }
            }
        }
    }
    e
}

fn argmin_set(vals: &[f64]) -> Vec<usize> {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (hi - lo).max(1.0);
    (0..vals.len()).filter(|&k| vals[k] - lo <= tol).collect()
}

fn encoding_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let limits = HardwareLimits::default();
    let mut worst: f64 = 0.0;
    let mut scaled = 0;
    for trial in 0..100 {
        let n = rng.gen_range(2..=8);
        // magnitudes from well below to well above what the hardware window admits
        let mag = 10f64.powf(rng.gen_range(-1.0..2.0));
        let h: Vec<f64> = (0..n).map(|_| mag * rng.gen_range(-1.0..1.0)).collect();
        let mut j = vec![];
        for a in 0..n {
            for c in a + 1..n {
                if rng.gen_bool(0.6) {
                    j.push((a, c, mag * rng.gen_range(0.1..1.0)));
                }
            }
        }
        let m = IsingModel::from_parts(h.clone(), j.iter().map(|&(a, c, v)| (a, c, v)), 0.0)
            .map_err(|e| e.to_string())?;
        let t = encode(&m).map_err(|e| format!("trial {trial}: {e}"))?;
        let ising: Vec<f64> = (0..1u64 << n).map(|b| ising_direct(&h, &j, b)).collect();
        let ryd: Vec<f64> = (0..1u64 << n).map(|b| rydberg_direct(&t, b)).collect();
        let width = ising
            .iter()
            .cloned()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for b in 0..ising.len() {
            let err = (ryd[b] - t.constant - ising[b]).abs() / width;
            worst = worst.max(err);
            ensure!(
                err <= 1e-10,
                "trial {trial} state {b}: relative error {err:e}"
            );
            let lib = t.energy_index(b as u64);
            ensure!(
                (lib - ryd[b]).abs() <= 1e-10 * width,
                "trial {trial}: library diagonal differs"
            );
        }
        let r = rescale(&t, &limits).map_err(|e| format!("trial {trial}: {e}"))?;
        if r.scale != 1.0 {
            scaled += 1;
        }
        let ryd_r: Vec<f64> = (0..1u64 << n).map(|b| rydberg_direct(&r, b)).collect();
        ensure!(
            argmin_set(&ryd_r) == argmin_set(&ising),
            "trial {trial}: argmin changed by rescale"
        );
        ensure!(
            argmin_set(&ryd) == argmin_set(&ising),
            "trial {trial}: argmin changed by encoding"
        );
    }
    Ok(format!(
        "100 models, worst relative error {worst:.1e}, {scaled} rescaled"
    ))
}

// 5 -------------------------------------------------------------------------

struct Constant {
    duration: f64,
    omega: f64,
}

impl Drive for Constant {
    fn duration(&self) -> f64 {
        self.duration
    }
    fn omega(&self, _: f64) -> f64 {
        self.omega
    }
    fn delta_global(&self, _: f64) -> f64 {
        0.0
    }
}

fn propagator_suite() -> Check {
    let cfg = PropagationConfig::default();

    // Rabi oscillation of one atom with no detuning
    let single = EncodedTarget {
        n: 1,
        interactions: vec![vec![0.0]],
        delta_final: vec![1.0],
        constant: 0.0,
        scale: 1.0,
    };
    let omega = 2.0;
    let mut rabi_err: f64 = 0.0;
    for t in [0.3, 1.0, 2.7, 5.0, 9.4] {
        let psi0 = QuantumState::basis(1, 0).map_err(|e| e.to_string())?;
        let (psi, _) = propagate_drive(&single, &Constant { duration: t, omega }, &psi0, 11, &cfg)
            .map_err(|e| e.to_string())?;
        let want = (omega * t / 2.0).sin().powi(2);
        rabi_err = rabi_err.max((psi.probabilities()[1] - want).abs());
        ensure!(
            (psi.norm_sqr() - 1.0).abs() <= 1e-9,
            "Rabi norm drift at t={t}"
        );
    }
    ensure!(rabi_err <= 1e-6, "Rabi error {rabi_err:e}");

    // norm under a generic driven schedule
    let tri = encode(
        &IsingModel::from_parts(
            vec![0.2, -0.1, 0.3],
            [(0, 1, 0.5), (1, 2, 0.4), (0, 2, 0.7)],
            0.0,
        )
        .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut s = Schedule::linear_ramp(8.0, -1.0, 10.0);
    s.omega.coefficients = vec![2.0, -0.7, 0.4];
    s.delta.coefficients = vec![0.3, 0.2];
    let mut norm_err: f64 = 0.0;
    for start in 0..8 {
        let psi0 = QuantumState::basis(3, start).map_err(|e| e.to_string())?;
        let (psi, _) = propagate_from(&tri, &s, &psi0, &cfg).map_err(|e| e.to_string())?;
        norm_err = norm_err.max((psi.norm_sqr() - 1.0).abs());
    }
    ensure!(norm_err <= 1e-9, "norm drift {norm_err:e}");

    // zero drive: populations stay put
    let flat = Schedule::linear_ramp(10.0, -1.0, 5.0);
    let amps = (0..8)
        .map(|k| num_complex::Complex64::new(1.0 + k as f64, 0.5))
        .collect();
    let psi0 = QuantumState::from_amplitudes(3, amps).map_err(|e| e.to_string())?;
    let (psi, _) = propagate_from(&tri, &flat, &psi0, &cfg).map_err(|e| e.to_string())?;
    let pop_err = psi
        .probabilities()
        .iter()
        .zip(psi0.probabilities())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ensure!(pop_err <= 1e-12, "populations moved by {pop_err:e}");

    // slow ramp on the antiferromagnetic pair
    let pair = encode(
        &IsingModel::from_parts(vec![0.0, 0.0], [(0, 1, 0.5)], 0.0).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut ramp = Schedule::linear_ramp(100.0, -1.0, 10.0);
    ramp.omega.coefficients = vec![1.0];
    let (_, traj) = propagate(&pair, &ramp, &cfg).map_err(|e| e.to_string())?;
    let f = traj.final_sample().fidelity;
    ensure!(
        traj.ground_states == vec![1, 2],
        "pair ground states {:?}",
        traj.ground_states
    );
    ensure!(f > 0.99, "adiabatic fidelity {f}");
    Ok(format!(
        "Rabi err {rabi_err:.1e}, norm err {norm_err:.1e}, population drift {pop_err:.1e}, adiabatic F={f:.5}"
    ))
}

// 6 -------------------------------------------------------------------------

fn ideal_target(name: &str) -> Result<(rydberg_qubo::qubo::QuboModel, EncodedTarget), String> {
    let r = reference_instance(name).map_err(|e| e.to_string())?;
    let enc =
        encode_with(&r.model.to_ising(), CouplingPolicy::AllowSigned).map_err(|e| e.to_string())?;
    let enc = rescale(&enc, &HardwareLimits::default()).map_err(|e| e.to_string())?;
    Ok((r.model, enc))
}

fn solution_quality() -> Check {
    let mut out = vec![];
    let mut failures = vec![];
    for name in REFERENCE_NAMES {
        let threshold = match name {
            "two_sat" | "xor_sat" | "set_packing" | "clustering" => 0.99,
            _ => 0.97,
        };
        let (model, enc) = ideal_target(name)?;
        let t0 = Instant::now();
        let res = run_hybrid(&enc, &OptimizationPlan::default(), 0)
            .map_err(|e| format!("{name}: {e}"))?;
        let elapsed = t0.elapsed();
        // independent ratio from the final state and brute-force costs
        let costs: Vec<f64> = (0..1u64 << model.n())
            .map(|b| model.evaluate_index(b))
            .collect();
        let c_opt = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let c_max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let c_obt: f64 = res
            .final_state
            .probabilities()
            .iter()
            .zip(&costs)
            .map(|(p, c)| p * c)
            .sum();
        let r_oracle = (c_max - c_obt) / (c_max - c_opt);
        ensure!(
            (r_oracle - res.r).abs() < 1e-8,
            "{name}: reported R {} vs recomputed {r_oracle}",
            res.r
        );
        if res.r < threshold || elapsed > Duration::from_secs(300) {
            failures.push(format!("{name} R={:.5} in {:.0?}", res.r, elapsed));
        }
        out.push(format!(
            "{name} R={:.5} F={:.3} ({:.1}s)",
            res.r,
            res.f_best,
            elapsed.as_secs_f64()
        ));
    }
    ensure!(
        failures.is_empty(),
        "below threshold or too slow: {}",
        failures.join(", ")
    );
    Ok(out.join(", "))
}

// 7 -------------------------------------------------------------------------

fn gradient_check() -> Check {
    let plan = OptimizationPlan::default();
    let mut worst: f64 = 0.0;
    let mut times = vec![];
    let start = Instant::now();
    for (k, name) in REFERENCE_NAMES.iter().enumerate() {
        let t0 = Instant::now();
        let (_, enc) = ideal_target(name)?;
        let (d0, tie) = match rydberg_qubo::annealer::choose_initial_detuning(
            &enc,
            &INITIAL_DETUNING_CANDIDATES,
        )
        .map_err(|e| e.to_string())?
        {
            Some(d) => (d, TieBreak::Reject),
            None => (INITIAL_DETUNING_CANDIDATES[0], TieBreak::FewestExcitations),
        };
        let template = plan.initial_schedule(d0);
        let delta_count = template.delta.coefficients.len();
        let cfg = PropagationConfig {
            fixed_steps: Some(200),
            tie_break: tie,
            ..Default::default()
        };
        let psi0 = initial_state_with(&enc, d0, tie).map_err(|e| e.to_string())?;
        let dim = ParameterVector::from_schedule(&template).values.len();
        let scales = coordinate_scales(delta_count, dim, plan.omega_max);
        // objective in the optimizer's scaled coordinates z = p / scale
        let f = |z: &[f64]| -> rydberg_qubo::Result<f64> {
            let values = z.iter().zip(&scales).map(|(a, b)| a * b).collect();
            let s = ParameterVector {
                values,
                delta_count,
            }
            .apply(&template)?;
            Ok(propagate_from(&enc, &s, &psi0, &cfg)?
                .1
                .final_sample()
                .energy)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let points: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let errs: Vec<Result<f64, String>> = points
            .par_iter()
            .map(|p| {
                let g = central_gradient(&f, p).map_err(|e| e.to_string())?;
                let g4: Vec<f64> = (0..dim)
                    .map(|i| {
                        // 2.5x the central-difference step; fourth-order truncation keeps
                        // the oracle well below the error under test
                        let h = 2.5e-4 * (1.0 + p[i].abs());
                        let at = |d: f64| {
                            let mut x = p.clone();
                            x[i] += d;
                            f(&x).unwrap()
                        };
                        (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
                    })
                    .collect();
                let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
                let diff = norm(&mut (0..dim).map(|i| g[i] - g4[i]));
                Ok(diff / norm(&mut g4.iter().cloned()).max(1e-300))
            })
            .collect();
        for e in errs {
            let e = e.map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max(e);
            ensure!(
                e < 1e-3,
                "{name}: relative gradient error |g - g4| / |g4| = {e:e}"
            );
        }
        times.push(format!("{name} {:.1}s", t0.elapsed().as_secs_f64()));
    }
    let total = start.elapsed();
    ensure!(
        total <= Duration::from_secs(120),
        "took {:.1}s, limit 120s",
        total.as_secs_f64()
    );
    Ok(format!(
        "7 instances x 20 vectors, worst relative error {worst:.1e} ({})",
        times.join(", ")
    ))
}

// 8 -------------------------------------------------------------------------

fn from_positions(pos: &[Vec<f64>], c6: f64) -> EncodedTarget {
    let n = pos.len();
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let r2: f64 = pos[i]
                    .iter()
                    .zip(&pos[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                v[i][j] = c6 / r2.powi(3);
            }
        }
    }
    EncodedTarget {
        n,
        interactions: v,
        delta_final: vec![0.0; n],
        constant: 0.0,
        scale: 1.0,
    }
}

fn geometry_round_trip() -> Check {
    let limits = HardwareLimits::default();
    let opts = EmbedOptions::default();
    let geometries: Vec<(&str, Vec<Vec<f64>>)> = vec![
        (
            "chain3",
            vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![10.5, 0.0]],
        ),
        (
            "chain4",
            vec![
                vec![0.0, 0.0],
                vec![4.0, 0.0],
                vec![8.5, 0.0],
                vec![12.0, 0.0],
            ],
        ),
        (
            "bent chain",
            vec![
                vec![0.0, 0.0],
                vec![5.0, 0.0],
                vec![8.0, 4.0],
                vec![8.0, 9.0],
            ],
        ),
        (
            "triangle",
            vec![vec![0.0, 0.0], vec![6.0, 0.0], vec![2.0, 4.5]],
        ),
        (
            "equilateral",
            vec![
                vec![0.0, 0.0],
                vec![5.0, 0.0],
                vec![2.5, 5.0 * 3f64.sqrt() / 2.0],
            ],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, pos) in &geometries {
        let target = from_positions(pos, limits.c6);
        let (layout, residual) =
            embed_layout(&target, 2, 7, &limits, &opts).map_err(|e| format!("{name}: {e}"))?;
        let realized = layout_interactions(&layout).map_err(|e| e.to_string())?;
        let vmax = target.max_abs_interaction();
        let mut err: f64 = 0.0;
        for i in 0..target.n {
            for j in i + 1..target.n {
                let r = layout.distance(i, j);
                let direct = limits.c6 / r.powi(6);
                ensure!(
                    (direct - realized[i][j]).abs() <= 1e-9 * direct,
                    "{name}: realized V inconsistent"
                );
                err = err.max((direct - target.interactions[i][j]).abs() / vmax);
            }
        }
        worst = worst.max(err);
        ensure!(
            err <= 1e-6,
            "{name}: residual {err:e} (reported {:e})",
            residual.max_error
        );
        ensure!(
            residual.max_error <= 1e-6,
            "{name}: reported residual {:e}",
            residual.max_error
        );
    }

    // star: leaves should not interact, but in the plane they must sit close together
    let n = 5;
    let v_leg = limits.c6 / 5.0f64.powi(6);
    let mut v = vec![vec![0.0; n]; n];
    for k in 1..n {
        v[0][k] = v_leg;
        v[k][0] = v_leg;
    }
    let star = EncodedTarget {
        n,
        interactions: v,
        delta_final: vec![0.0; n],
        constant: 0.0,
        scale: 1.0,
    };
    let (layout, _) = embed_layout(&star, 2, 7, &limits, &opts).map_err(|e| e.to_string())?;
    let report = validate(&star, &layout, 1e-3).map_err(|e| e.to_string())?;
    ensure!(!report.passed, "star graph reported as exact");
    ensure!(report.max_unwanted > 0.0, "no leakage reported");
    ensure!(
        report.offending.iter().any(|&(i, j)| i > 0 && j > 0),
        "leaf-leaf leakage missing from offending pairs {:?}",
        report.offending
    );
    Ok(format!(
        "{} feasible geometries, worst residual {worst:.1e}; star leakage {:.3} of max V on {} pairs",
        geometries.len(),
        report.max_unwanted,
        report.offending.len()
    ))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        (
            "hardness-formula closure on two summary rows",
            hardness_closure,
        ),
        (
            "ground degeneracy by exhaustive enumeration",
            degeneracy_oracle,
        ),
        ("brute-force instance values", brute_force_values),
        (
            "encoding exactness and argmin preservation",
            encoding_exactness,
        ),
        ("propagator physics suite", propagator_suite),
        ("end-to-end approximation ratio", solution_quality),
        (
            "finite-difference gradient vs higher-order stencil",
            gradient_check,
        ),
        (
            "geometry round trip and leakage report",
            geometry_round_trip,
        ),
    ];
    let mut failed = 0;
    println!();
    for (k, (title, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {title} [{secs:.1}s]: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {title} [{secs:.1}s]: {why}", k + 1);
            }
        }
    }
    println!(
        "\nacceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
