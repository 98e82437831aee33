use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rydberg_qubo::annealer::{
    choose_initial_detuning, initial_state_with, propagate_from, PropagationConfig, Schedule,
    TieBreak, Trajectory,
};
use rydberg_qubo::encoding::{
    embed_layout, encode_with, layout_interactions, rescale, validate, AtomLayout, CouplingPolicy,
    EmbedOptions, EncodedTarget, HardwareLimits, ResidualReport, ValidationReport,
};
use rydberg_qubo::hardness::{
    analyze_model, report_csv, report_text, EnergyConvention, HardnessReport, SpectralRow, TableRow,
};
use rydberg_qubo::optimizer::{run_hybrid, OptimizationPlan, INITIAL_DETUNING_CANDIDATES};
use rydberg_qubo::problems::{
    reference_instance, Literal, ProblemInstance, TwoSatInstance, XorConstraint, XorSatInstance,
    REFERENCE_NAMES,
};
use rydberg_qubo::qubo::{bits_of, enumerate_spectrum, ModelFile, QuboModel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exit::{fail, simulation, Exit, WithCode, BAD_ARGS, BELOW_THRESHOLD, BUILD_FAILED};
use crate::instance::{self, Loaded};
use crate::output::{num, to_value, write_csv, write_json, Output, RunManifest};
use crate::{Cli, Command, ConventionArg, InstanceArgs, Mode};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub dim: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Relative interaction error accepted by `validate` and `pipeline`.
    pub tolerance: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        let e = EmbedOptions::default();
        Self {
            dim: 2,
            restarts: e.restarts,
            max_iter: e.max_iter,
            tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub limits: HardwareLimits,
    pub plan: OptimizationPlan,
    /// Overrides `plan.propagation` when present.
    pub propagation: Option<PropagationConfig>,
    pub layout: LayoutConfig,
}

struct Ctx {
    seed: u64,
    mode: Mode,
    config: Config,
    out: Output,
}

impl Ctx {
    fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Ideal => "ideal",
            Mode::Physical => "physical",
        }
    }

    fn manifest(&self, command: &str, instance: &str, extra: Value) -> RunManifest {
        let config = json!({ "settings": self.config, "arguments": extra });
        RunManifest::new(command, instance, self.mode_name(), self.seed, config)
    }

    /// Plan from `--plan` or the config, with limits and overrides applied.
    fn plan(&self, path: Option<&PathBuf>) -> Result<OptimizationPlan, Exit> {
        let mut plan = match path {
            Some(p) => read_json::<OptimizationPlan>(p, "plan")?,
            None => self.config.plan.clone(),
        };
        if let Some(p) = self.config.propagation {
            plan.propagation = p;
        }
        if plan.omega_max > self.config.limits.omega_max {
            plan.omega_max = self.config.limits.omega_max;
        }
        if plan.duration > self.config.limits.t_max {
            return Err(fail(
                BAD_ARGS,
                format!(
                    "plan duration {} us exceeds t_max {} us",
                    plan.duration, self.config.limits.t_max
                ),
            ));
        }
        plan.validate().code(BAD_ARGS)?;
        Ok(plan)
    }

    /// Encoded and rescaled target for the current mode.
    fn encode(&self, model: &QuboModel) -> Result<EncodedTarget, Exit> {
        let policy = match self.mode {
            Mode::Ideal => CouplingPolicy::AllowSigned,
            Mode::Physical => CouplingPolicy::VanDerWaals,
        };
        let enc = encode_with(&model.to_ising(), policy).code(BUILD_FAILED)?;
        rescale(&enc, &self.config.limits).code(BUILD_FAILED)
    }

    fn embed(
        &self,
        enc: &EncodedTarget,
        dim: Option<usize>,
    ) -> Result<(AtomLayout, ResidualReport), Exit> {
        let lc = &self.config.layout;
        let opts = EmbedOptions {
            restarts: lc.restarts,
            max_iter: lc.max_iter,
        };
        embed_layout(
            enc,
            dim.unwrap_or(lc.dim),
            self.seed,
            &self.config.limits,
            &opts,
        )
        .code(BUILD_FAILED)
    }
}

/// The encoding actually simulated plus the layout behind it in physical mode.
struct Target {
    intended: EncodedTarget,
    simulated: EncodedTarget,
    layout: Option<(AtomLayout, ResidualReport, ValidationReport)>,
}

impl Target {
    fn to_json(&self) -> Value {
        let mut v = json!({ "encoding": self.intended });
        if let Some((l, r, val)) = &self.layout {
            v["layout"] = to_value(l);
            v["residual"] = to_value(r);
            v["validation"] = to_value(val);
            v["realized_encoding"] = to_value(&self.simulated);
        }
        v
    }
}

fn target(ctx: &Ctx, model: &QuboModel) -> Result<Target, Exit> {
    let intended = ctx.encode(model)?;
    if ctx.mode == Mode::Ideal {
        return Ok(Target {
            simulated: intended.clone(),
            intended,
            layout: None,
        });
    }
    let (layout, residual) = ctx.embed(&intended, None)?;
    let report = validate(&intended, &layout, ctx.config.layout.tolerance).code(BUILD_FAILED)?;
    if !report.passed {
        eprintln!(
            "warning: layout misses the target interactions (max relative error {}, worst unwanted {}); \
             simulating the realized interactions",
            num(report.max_relative_error),
            num(report.max_unwanted)
        );
    }
    let realized = layout_interactions(&layout).code(BUILD_FAILED)?;
    let simulated = intended.with_interactions(realized).code(BUILD_FAILED)?;
    Ok(Target {
        intended,
        simulated,
        layout: Some((layout, residual, report)),
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, Exit> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {what} {}", path.display()))
        .code(BAD_ARGS)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {what} {}", path.display()))
        .code(BAD_ARGS)
}

/// Like `read_json` but also accepts the value wrapped under `key`, as in
/// files written by this tool.
fn read_wrapped<T: for<'de> Deserialize<'de>>(path: &Path, key: &str) -> Result<T, Exit> {
    let v: Value = read_json(path, key)?;
    let inner = v.get(key).cloned().unwrap_or(v);
    serde_json::from_value(inner)
        .with_context(|| format!("parsing {key} {}", path.display()))
        .code(BAD_ARGS)
}

fn energy_convention(c: ConventionArg) -> EnergyConvention {
    match c {
        ConventionArg::Ising => EnergyConvention::Ising,
        ConventionArg::Cost => EnergyConvention::Cost,
    }
}

fn load(inst: &InstanceArgs) -> Result<Loaded, Exit> {
    instance::load(&inst.instance, &inst.penalties.penalties())
}

pub fn run(cli: Cli) -> Result<u8, Exit> {
    let config = match &cli.config {
        Some(p) => read_json::<Config>(p, "config")?,
        None => Config::default(),
    };
    config.limits.validate().code(BAD_ARGS)?;
    let ctx = Ctx {
        seed: cli.seed,
        mode: cli.mode,
        config,
        out: Output::new(&cli.out_dir)?,
    };
    match cli.command {
        Command::Problem {
            reference,
            family,
            params,
            clauses,
            constraints,
            n,
            penalties,
            out,
        } => cmd_problem(
            &ctx,
            reference,
            family,
            params,
            clauses,
            constraints,
            n,
            penalties.penalties(),
            out,
        ),
        Command::Encode { inst, out } => cmd_encode(&ctx, &inst, out),
        Command::Layout { inst, dim, out } => cmd_layout(&ctx, &inst, dim, out),
        Command::Validate {
            inst,
            layout,
            tol,
            out,
        } => cmd_validate(&ctx, &inst, &layout, tol, out),
        Command::Spectrum {
            inst,
            convention,
            out,
        } => cmd_spectrum(&ctx, &inst, convention, out),
        Command::Hardness {
            inst,
            epsilon,
            energy_shift,
            convention,
            out,
        } => cmd_hardness(&ctx, &inst, epsilon, energy_shift, convention, out),
        Command::Anneal {
            inst,
            schedule,
            out,
        } => cmd_anneal(&ctx, &inst, schedule, out),
        Command::Optimize { inst, plan, out } => cmd_optimize(&ctx, &inst, plan, out),
        Command::Pipeline {
            inst,
            plan,
            threshold,
        } => cmd_pipeline(&ctx, &inst, plan, threshold),
        Command::Report {
            files,
            all,
            from_spectral,
            out,
        } => cmd_report(&ctx, &files, all, &from_spectral, out),
    }
}

fn parse_arg<T: for<'de> Deserialize<'de>>(flag: &str, text: &str) -> Result<T, Exit> {
    serde_json::from_str(text)
        .with_context(|| format!("parsing {flag}"))
        .code(BAD_ARGS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_problem(
    ctx: &Ctx,
    reference: Option<String>,
    family: Option<String>,
    params: Option<String>,
    clauses: Option<String>,
    constraints: Option<String>,
    n: Option<usize>,
    penalties: instance::Penalties,
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    let (name, mut inst, details) = if let Some(r) = reference {
        let r = reference_instance(&r).code(BAD_ARGS)?;
        (
            r.metadata.name.clone(),
            r.instance,
            Some(to_value(&r.metadata)),
        )
    } else {
        let family = family.ok_or_else(|| fail(BAD_ARGS, "--family or --reference is required"))?;
        (
            family.clone(),
            family_instance(&family, params, clauses, constraints, n)?,
            None,
        )
    };
    penalties.apply(&mut inst)?;
    let model = inst.build().code(BUILD_FAILED)?;
    let mut file = ModelFile::from_qubo(&model);
    file.metadata = Some(
        json!({ "name": name, "family": inst.family(), "instance": inst, "reference": details }),
    );
    let manifest = ctx.manifest("problem", &name, json!({ "instance": inst }));
    let path = ctx.out.path(out.as_ref(), &format!("{name}.model.json"));
    write_json(&path, &manifest, vec![("model", to_value(&file))])?;
    println!("{name}: {} variables -> {}", model.n(), path.display());
    Ok(0)
}

fn family_instance(
    family: &str,
    params: Option<String>,
    clauses: Option<String>,
    constraints: Option<String>,
    n: Option<usize>,
) -> Result<ProblemInstance, Exit> {
    match (family, clauses, constraints) {
        ("two_sat", Some(c), None) => {
            let raw: Vec<[i64; 2]> = parse_arg("--clauses", &c)?;
            let clauses = raw
                .iter()
                .map(|[a, b]| Ok([Literal::from_signed(*a)?, Literal::from_signed(*b)?]))
                .collect::<rydberg_qubo::Result<Vec<_>>>()
                .code(BAD_ARGS)?;
            let inferred = clauses
                .iter()
                .flatten()
                .map(|l| l.var + 1)
                .max()
                .unwrap_or(0);
            Ok(ProblemInstance::TwoSat(TwoSatInstance {
                n: n.unwrap_or(inferred),
                clauses,
                penalty: 1.0,
            }))
        }
        ("xor_sat", None, Some(c)) => {
            let raw: Vec<(usize, usize, u8)> = parse_arg("--constraints", &c)?;
            let constraints: Vec<_> = raw
                .iter()
                .map(|&(i, j, p)| XorConstraint::new(i, j, p))
                .collect();
            let inferred = constraints
                .iter()
                .map(|c| c.i.max(c.j) + 1)
                .max()
                .unwrap_or(0);
            Ok(ProblemInstance::XorSat(XorSatInstance {
                n: n.unwrap_or(inferred),
                constraints,
            }))
        }
        (_, None, None) => {
            let p = params.ok_or_else(|| fail(BAD_ARGS, "--params is required for this family"))?;
            let mut v: Value = parse_arg("--params", &p)?;
            let obj = v
                .as_object_mut()
                .ok_or_else(|| fail(BAD_ARGS, "--params must be a JSON object"))?;
            obj.insert("family".into(), Value::String(family.to_string()));
            serde_json::from_value(v)
                .map_err(|e| anyhow!("family `{family}`: {e}"))
                .code(BAD_ARGS)
        }
        _ => Err(fail(
            BAD_ARGS,
            "--clauses is for two_sat and --constraints for xor_sat",
        )),
    }
}

fn cmd_encode(ctx: &Ctx, inst: &InstanceArgs, out: Option<PathBuf>) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let enc = ctx.encode(&loaded.model)?;
    let manifest = ctx.manifest(
        "encode",
        &inst.instance,
        json!({ "penalties": penalty_json(inst) }),
    );
    let path = ctx
        .out
        .path(out.as_ref(), &format!("{}.encoding.json", loaded.name));
    write_json(
        &path,
        &manifest,
        vec![
            ("encoding", to_value(&enc)),
            ("limits", to_value(&ctx.config.limits)),
        ],
    )?;
    println!(
        "{}: scale {} max|delta| {} max|V| {} -> {}",
        loaded.name,
        num(enc.scale),
        num(enc.max_abs_detuning()),
        num(enc.max_abs_interaction()),
        path.display()
    );
    Ok(0)
}

fn penalty_json(inst: &InstanceArgs) -> Value {
    let p = &inst.penalties;
    json!({ "penalty": p.penalty, "p1": p.p1, "p2": p.p2 })
}

fn cmd_layout(
    ctx: &Ctx,
    inst: &InstanceArgs,
    dim: Option<usize>,
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let enc = ctx.encode(&loaded.model)?;
    let (layout, residual) = ctx.embed(&enc, dim)?;
    let manifest = ctx.manifest(
        "layout",
        &inst.instance,
        json!({ "penalties": penalty_json(inst), "dim": dim }),
    );
    let path = ctx
        .out
        .path(out.as_ref(), &format!("{}.layout.json", loaded.name));
    write_json(
        &path,
        &manifest,
        vec![
            ("layout", to_value(&layout)),
            ("residual", to_value(&residual)),
        ],
    )?;
    println!(
        "{}: {}D layout, max relative error {} -> {}",
        loaded.name,
        layout.dim,
        num(residual.max_error),
        path.display()
    );
    Ok(0)
}

fn cmd_validate(
    ctx: &Ctx,
    inst: &InstanceArgs,
    layout_path: &Path,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let enc = ctx.encode(&loaded.model)?;
    let layout: AtomLayout = read_wrapped(layout_path, "layout")?;
    layout.validate().code(BAD_ARGS)?;
    let tol = tol.unwrap_or(ctx.config.layout.tolerance);
    let report = validate(&enc, &layout, tol).code(BAD_ARGS)?;
    let manifest = ctx.manifest(
        "validate",
        &inst.instance,
        json!({ "penalties": penalty_json(inst), "layout": layout, "tol": tol }),
    );
    let path = ctx
        .out
        .path(out.as_ref(), &format!("{}.validation.json", loaded.name));
    write_json(&path, &manifest, vec![("validation", to_value(&report))])?;
    println!(
        "{}: max relative error {}, worst unwanted {}, {}",
        loaded.name,
        num(report.max_relative_error),
        num(report.max_unwanted),
        if report.passed { "passed" } else { "FAILED" }
    );
    for (i, j) in &report.offending {
        println!("  offending pair ({i}, {j})");
    }
    Ok(if report.passed { 0 } else { BELOW_THRESHOLD })
}

fn bitstring(index: u64, n: usize) -> String {
    bits_of(index, n)
        .iter()
        .map(|b| char::from(b'0' + b))
        .collect()
}

fn cmd_spectrum(
    ctx: &Ctx,
    inst: &InstanceArgs,
    convention: ConventionArg,
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let ising = match convention {
        ConventionArg::Ising => loaded.model.to_ising().without_constant(),
        ConventionArg::Cost => loaded.model.to_ising(),
    };
    let spectrum = enumerate_spectrum(&ising).code(BUILD_FAILED)?;
    let n = loaded.model.n();
    let header: Vec<String> = ["level", "energy", "degeneracy", "states"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = spectrum
        .entries
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let states: Vec<String> = l.states.iter().map(|&s| bitstring(s, n)).collect();
            vec![
                k.to_string(),
                num(l.energy),
                l.degeneracy().to_string(),
                states.join(" "),
            ]
        })
        .collect();
    let manifest = ctx.manifest(
        "spectrum",
        &inst.instance,
        json!({ "penalties": penalty_json(inst), "convention": convention }),
    );
    let path = ctx
        .out
        .path(out.as_ref(), &format!("{}.spectrum.csv", loaded.name));
    write_csv(&path, &manifest, &header, &rows)?;
    let g = spectrum.ground();
    println!(
        "{}: {} levels, ground {} x{} -> {}",
        loaded.name,
        spectrum.entries.len(),
        num(g.energy),
        g.degeneracy(),
        path.display()
    );
    Ok(0)
}

fn cmd_hardness(
    ctx: &Ctx,
    inst: &InstanceArgs,
    epsilon: f64,
    shift: f64,
    convention: ConventionArg,
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let report = analyze_model(&loaded.model, energy_convention(convention), shift, epsilon)
        .code(BUILD_FAILED)?;
    let manifest = ctx.manifest(
        "hardness",
        &inst.instance,
        json!({ "penalties": penalty_json(inst), "epsilon": epsilon, "energy_shift": shift, "convention": convention }),
    );
    let rows = vec![TableRow {
        name: loaded.name.clone(),
        report: Ok(report.clone()),
        notes: reference_notes(&loaded.name),
    }];
    let json_path = ctx
        .out
        .path(out.as_ref(), &format!("{}.hardness.json", loaded.name));
    write_json(
        &json_path,
        &manifest,
        vec![
            ("instance", json!(loaded.name)),
            ("hardness", to_value(&report)),
        ],
    )?;
    let csv_path = json_path.with_extension("csv");
    write_report_csv(&csv_path, &manifest, &rows)?;
    print!("{}", report_text(&rows));
    Ok(0)
}

fn write_report_csv(path: &Path, manifest: &RunManifest, rows: &[TableRow]) -> Result<(), Exit> {
    let body = format!("# manifest={}\n{}", manifest.hash(), report_csv(rows));
    fs::write(path, body)
        .with_context(|| format!("writing {}", path.display()))
        .code(1)
}

/// Notes flagging reference rows whose published ground degeneracy cannot be
/// reproduced from the instance as stated.
fn reference_notes(name: &str) -> Vec<String> {
    match reference_instance(name) {
        Ok(r) if !r.metadata.reference.d_opt_reproducible => vec![format!(
            "reference D_opt={} depends on unstated penalties or normalization; not a reproduction target",
            r.metadata.reference.d_opt
        )],
        _ => vec![],
    }
}

/// `D_G(0)` and the propagation settings used for a plan without an explicit
/// starting schedule.
fn initial_detuning(
    enc: &EncodedTarget,
    plan: &OptimizationPlan,
) -> Result<(f64, PropagationConfig), Exit> {
    let mut cfg = plan.propagation;
    if let Some(d) = plan.delta_initial {
        return Ok((d, cfg));
    }
    match simulation(choose_initial_detuning(enc, &INITIAL_DETUNING_CANDIDATES))? {
        Some(d) => Ok((d, cfg)),
        None => {
            cfg.tie_break = TieBreak::FewestExcitations;
            Ok((INITIAL_DETUNING_CANDIDATES[0], cfg))
        }
    }
}

fn trajectory_rows(enc: &EncodedTarget, tr: &Trajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["t_us", "omega", "abs_omega", "delta_G"]
        .map(String::from)
        .to_vec();
    header.extend((1..=enc.n).map(|j| format!("delta_{j}")));
    header.extend(["E", "F"].map(String::from));
    let rows = tr
        .samples
        .iter()
        .map(|s| {
            let mut r = vec![
                num(s.t),
                num(s.omega),
                num(s.omega.abs()),
                num(s.delta_global),
            ];
            r.extend(enc.delta_final.iter().map(|d| num(s.delta_global * d)));
            r.push(num(s.energy));
            r.push(num(s.fidelity));
            r
        })
        .collect();
    (header, rows)
}

fn cmd_anneal(
    ctx: &Ctx,
    inst: &InstanceArgs,
    schedule: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let tgt = target(ctx, &loaded.model)?;
    let plan = ctx.plan(None)?;
    let (schedule, cfg) = match &schedule {
        Some(p) => {
            let s: Schedule = read_wrapped(p, "schedule")?;
            (s, plan.propagation)
        }
        None => {
            let (d0, cfg) = initial_detuning(&tgt.simulated, &plan)?;
            (plan.initial_schedule(d0), cfg)
        }
    };
    schedule.validate().code(BAD_ARGS)?;
    if schedule.duration > ctx.config.limits.t_max {
        return Err(fail(
            BAD_ARGS,
            format!("schedule duration {} us exceeds t_max", schedule.duration),
        ));
    }
    let psi0 = simulation(initial_state_with(
        &tgt.simulated,
        schedule.delta.initial,
        cfg.tie_break,
    ))?;
    let (state, tr) = simulation(propagate_from(&tgt.simulated, &schedule, &psi0, &cfg))?;
    let manifest = ctx.manifest(
        "anneal",
        &inst.instance,
        json!({ "penalties": penalty_json(inst), "schedule": schedule, "propagation": cfg }),
    );
    let base = out.unwrap_or_else(|| ctx.out.dir.join(format!("{}.anneal.json", loaded.name)));
    let (header, rows) = trajectory_rows(&tgt.simulated, &tr);
    write_csv(&base.with_extension("csv"), &manifest, &header, &rows)?;
    let last = tr.final_sample();
    write_json(
        &base,
        &manifest,
        vec![
            ("target", tgt.to_json()),
            ("schedule", to_value(&schedule)),
            ("energy", json!(last.energy)),
            ("fidelity", json!(last.fidelity)),
            ("steps", json!(tr.steps)),
            ("final_state", to_value(&state)),
        ],
    )?;
    println!(
        "{}: E(T) {} F {} steps {} -> {}",
        loaded.name,
        num(last.energy),
        num(last.fidelity),
        tr.steps,
        base.display()
    );
    Ok(0)
}

fn cmd_optimize(
    ctx: &Ctx,
    inst: &InstanceArgs,
    plan: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let tgt = target(ctx, &loaded.model)?;
    let plan = ctx.plan(plan.as_ref())?;
    let result = simulation(run_hybrid(&tgt.simulated, &plan, ctx.seed))?;
    let manifest = ctx.manifest(
        "optimize",
        &inst.instance,
        json!({ "penalties": penalty_json(inst), "plan": plan }),
    );
    let path = ctx
        .out
        .path(out.as_ref(), &format!("{}.result.json", loaded.name));
    write_json(
        &path,
        &manifest,
        vec![
            ("instance", json!(loaded.name)),
            ("target", tgt.to_json()),
            ("result", to_value(&result)),
        ],
    )?;
    let (header, rows) = trajectory_rows(&tgt.simulated, &result.trajectory);
    write_csv(&path.with_extension("csv"), &manifest, &header, &rows)?;
    println!(
        "{}: R {} F {} evaluations {} -> {}",
        loaded.name,
        num(result.r),
        num(result.f_best),
        result.evaluations,
        path.display()
    );
    Ok(0)
}

fn cmd_pipeline(
    ctx: &Ctx,
    inst: &InstanceArgs,
    plan: Option<PathBuf>,
    threshold: f64,
) -> Result<u8, Exit> {
    let loaded = load(inst)?;
    let tgt = target(ctx, &loaded.model)?;
    let plan = ctx.plan(plan.as_ref())?;
    let result = simulation(run_hybrid(&tgt.simulated, &plan, ctx.seed))?;
    let hardness = analyze_model(
        &loaded.model,
        EnergyConvention::Ising,
        0.0,
        rydberg_qubo::hardness::DEFAULT_EPSILON,
    );
    let passed = result.r >= threshold;
    let manifest = ctx.manifest(
        "pipeline",
        &inst.instance,
        json!({ "penalties": penalty_json(inst), "plan": plan, "threshold": threshold }),
    );
    let dir = &ctx.out.dir;
    write_json(
        &dir.join("result.json"),
        &manifest,
        vec![
            ("instance", json!(loaded.name)),
            ("metadata", loaded.metadata.clone()),
            ("model", to_value(&ModelFile::from_qubo(&loaded.model))),
            ("target", tgt.to_json()),
            ("result", to_value(&result)),
            (
                "hardness",
                hardness.as_ref().map(to_value).unwrap_or(Value::Null),
            ),
            ("threshold", json!(threshold)),
            ("passed", json!(passed)),
        ],
    )?;
    let (header, rows) = trajectory_rows(&tgt.simulated, &result.trajectory);
    write_csv(&dir.join("trajectory.csv"), &manifest, &header, &rows)?;
    let row = TableRow {
        name: loaded.name.clone(),
        report: hardness.map_err(|e| e.to_string()),
        notes: reference_notes(&loaded.name),
    };
    write_report_csv(
        &dir.join("hardness.csv"),
        &manifest,
        std::slice::from_ref(&row),
    )?;
    println!(
        "{}: R {} (threshold {}) F {} evaluations {}",
        loaded.name,
        num(result.r),
        num(threshold),
        num(result.f_best),
        result.evaluations
    );
    Ok(if passed { 0 } else { BELOW_THRESHOLD })
}

fn parse_spectral(text: &str) -> Result<TableRow, Exit> {
    let bad = |why: &str| fail(BAD_ARGS, format!("--from-spectral `{text}`: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 5 {
        return Err(bad("expected name:E0:G:D_opt:threats"));
    }
    let float = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("`{s}` is not a number")))
    };
    let int = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| bad(&format!("`{s}` is not a count")))
    };
    let mut threats = Vec::new();
    for t in parts[4].split(',').filter(|t| !t.trim().is_empty()) {
        let (d, x) = match t.split_once('@') {
            Some((d, x)) => (int(d)?, float(x)?),
            None => (int(t)?, 1.0),
        };
        threats.push((d, x));
    }
    let row = SpectralRow {
        name: parts[0].to_string(),
        e0: float(parts[1])?,
        gap: float(parts[2])?,
        d_opt: int(parts[3])?,
        threats,
    };
    let report = row.report().code(BAD_ARGS)?;
    Ok(TableRow {
        name: row.name,
        report: Ok(report),
        notes: vec!["from summary values".into()],
    })
}

fn cmd_report(
    ctx: &Ctx,
    files: &[PathBuf],
    all: bool,
    spectral: &[String],
    out: Option<PathBuf>,
) -> Result<u8, Exit> {
    if files.is_empty() && !all && spectral.is_empty() {
        return Err(fail(
            BAD_ARGS,
            "nothing to report: give files, --all or --from-spectral",
        ));
    }
    let mut rows = Vec::new();
    for f in files {
        let v: Value = read_json(f, "result")?;
        let report: HardnessReport = v
            .get("hardness")
            .cloned()
            .ok_or_else(|| anyhow!("{} has no hardness section", f.display()))
            .and_then(|h| serde_json::from_value(h).map_err(Into::into))
            .code(BAD_ARGS)?;
        let name = v
            .get("instance")
            .and_then(Value::as_str)
            .map(String::from)
            .unwrap_or_else(|| f.display().to_string());
        let notes = reference_notes(&name);
        rows.push(TableRow {
            name,
            report: Ok(report),
            notes,
        });
    }
    if all {
        for name in REFERENCE_NAMES {
            let r = reference_instance(name).code(BUILD_FAILED)?;
            let report = analyze_model(
                &r.model,
                EnergyConvention::Ising,
                0.0,
                rydberg_qubo::hardness::DEFAULT_EPSILON,
            )
            .map_err(|e| e.to_string());
            rows.push(TableRow {
                name: name.to_string(),
                report,
                notes: reference_notes(name),
            });
        }
    }
    for s in spectral {
        rows.push(parse_spectral(s)?);
    }
    let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    let manifest = ctx.manifest(
        "report",
        &names.join(","),
        json!({ "files": files, "all": all, "from_spectral": spectral }),
    );
    let path = ctx.out.path(out.as_ref(), "report.csv");
    write_report_csv(&path, &manifest, &rows)?;
    print!("{}", report_text(&rows));
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_rows_parse_offsets() {
        let r = parse_spectral("a:-0.15:0.3:4:4").unwrap();
        let h = r.report.unwrap();
        assert_eq!((h.d_opt, h.d_e1, h.threats), (4, 4, 1));
        assert!((h.sigma - 4.0 * (-1.0f64).exp()).abs() < 1e-12);
        let r = parse_spectral("b:1:1:2:3@0.5,1@2").unwrap().report.unwrap();
        let want = 3.0 * (-0.5f64).exp() + (-2.0f64).exp();
        assert!((r.sigma - want).abs() < 1e-12);
        for bad in ["a:1:1:2", "a:x:1:2:1", "a:1:0:2:1", "a:1:1:2:q"] {
            assert_eq!(parse_spectral(bad).unwrap_err().code, BAD_ARGS, "{bad}");
        }
    }

    #[test]
    fn family_shortcuts_infer_size() {
        match family_instance("two_sat", None, Some("[[1,-3]]".into()), None, None).unwrap() {
            ProblemInstance::TwoSat(t) => {
                assert_eq!(t.n, 3);
                assert!(t.clauses[0][1].negated);
            }
            other => panic!("{other:?}"),
        }
        let e = family_instance("qap", None, Some("[[1,2]]".into()), None, None).unwrap_err();
        assert_eq!(e.code, BAD_ARGS);
    }

    #[test]
    fn reference_notes_only_for_unreproducible_rows() {
        assert!(reference_notes("two_sat").is_empty());
        assert_eq!(reference_notes("qap").len(), 1);
        assert!(reference_notes("custom").is_empty());
    }
}
