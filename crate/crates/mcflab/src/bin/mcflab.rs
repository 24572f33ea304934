//! Command-line laboratory: geometry reports, the Dirichlet soliton solver,
//! flow runs, blow-down sampling, and the full verification battery.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numerical
//! divergence or non-finite output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use mcflab::analysis::{
    cauchy_bound_check, divergence_identity_check, dlambda_identity_check, estimate_cone,
    estimate_k, estimate_star, metric_bound_check, sample_blowdown, BlowdownSource, ConeProfile,
    DivergenceFieldSpec, EstimateReport, RateReport,
};
use mcflab::error::Error;
use mcflab::fixtures::FieldKind;
use mcflab::flow::{
    rhs_sup, run_mcf, run_rescaled, BoundaryPolicy, FlowConfig, FlowState,
    RescaledFlowState,
};
use mcflab::grid::{GraphField, GridSpec};
use mcflab::report::{
    fmt_float, write_estimates_csv, write_geometry_csv, RunManifest, Summary,
};
use mcflab::soliton::{equivalence_check, solve_dirichlet, soliton_residual, SolverConfig};
use mcflab::sphere::SphereSampling;

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Graphical mean curvature flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-node extrinsic geometry table of a field.
    Geometry(CommonArgs),
    /// Pseudo-time Dirichlet solver for the soliton system.
    SolveSoliton(CommonArgs),
    /// Explicit time stepping, plain or rescaled.
    RunFlow(CommonArgs),
    /// Blow-down family, Cauchy table, and cone profile.
    Blowdown(CommonArgs),
    /// Full verification battery with summary constants.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for stochastic sphere sampling.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Suppress informational messages.
    #[arg(long)]
    quiet: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Err(msg) = setup_threads() {
        eprintln!("error: {msg}");
        std::process::exit(2);
    }
    let code = match &cli.command {
        Command::Geometry(args) => dispatch("geometry", args, run_geometry),
        Command::SolveSoliton(args) => dispatch("solve-soliton", args, run_solve_soliton),
        Command::RunFlow(args) => dispatch("run-flow", args, run_flow),
        Command::Blowdown(args) => dispatch("blowdown", args, run_blowdown),
        Command::Verify(args) => dispatch("verify", args, run_verify),
    };
    std::process::exit(code);
}

fn setup_threads() -> Result<(), String> {
    match std::env::var("MCFLAB_THREADS") {
        Err(_) => Ok(()),
        Ok(text) => {
            let count: usize = text
                .trim()
                .parse()
                .map_err(|_| format!("MCFLAB_THREADS must be a non-negative integer, got {text:?}"))?;
            if count == 0 {
                return Ok(()); // auto
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(count)
                .build_global()
                .map_err(|e| format!("failed to configure {count} worker threads: {e}"))
        }
    }
}

struct Ctx<'a> {
    args: &'a CommonArgs,
    config: serde_json::Value,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl<'a> Ctx<'a> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.files.push(p.clone());
        p
    }

    fn info(&self, msg: &str) {
        if !self.args.quiet {
            eprintln!("{msg}");
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NonFiniteValue { .. } | Error::NonFiniteState { .. } => 3,
        _ => 2,
    }
}

fn dispatch(
    name: &str,
    args: &CommonArgs,
    run: fn(&mut Ctx) -> mcflab::Result<i32>,
) -> i32 {
    let started = Instant::now();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return 2;
        }
    };
    let config: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: config is not valid JSON: {e}");
            return 2;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create output directory {}: {e}", args.out.display());
        return 2;
    }
    let mut ctx = Ctx { args, config: config.clone(), out: args.out.clone(), files: Vec::new() };
    let outcome = run(&mut ctx);
    let code = match &outcome {
        Ok(code) => *code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(e)
        }
    };
    // flush the manifest even for failed runs so partial outputs are
    // accounted for
    let manifest = RunManifest::new(name, args.seed, config);
    if let Err(e) = manifest.finalize(&args.out, &ctx.files, started.elapsed().as_secs_f64()) {
        eprintln!("error: cannot write manifest: {e}");
        return 2;
    }
    code
}

fn parse_config<T: for<'de> Deserialize<'de>>(ctx: &Ctx) -> mcflab::Result<T> {
    serde_json::from_value(ctx.config.clone()).map_err(|e| {
        Error::InvalidConfig(format!("config does not match the subcommand schema: {e}"))
    })
}

// ---------------------------------------------------------------- geometry

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryConfig {
    spec: GridSpec,
    field: FieldKind,
}

fn run_geometry(ctx: &mut Ctx) -> mcflab::Result<i32> {
    let cfg: GeometryConfig = parse_config(ctx)?;
    let field = cfg.field.realize(&cfg.spec)?;
    let path = ctx.path("geometry.csv");
    write_geometry_csv(&path, &field)?;
    ctx.info(&format!("wrote {}", path.display()));
    Ok(0)
}

// ------------------------------------------------------------ solve-soliton

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    spec: GridSpec,
    boundary: FieldKind,
    #[serde(default)]
    init: Option<FieldKind>,
    #[serde(default)]
    solver: Option<SolverConfig>,
}

fn run_solve_soliton(ctx: &mut Ctx) -> mcflab::Result<i32> {
    let cfg: SolveConfig = parse_config(ctx)?;
    let boundary = cfg.boundary.realize(&cfg.spec)?;
    let init = match &cfg.init {
        None => boundary.clone(),
        Some(kind) => {
            let mut field = kind.realize(&cfg.spec)?;
            let k = cfg.spec.k();
            for flat in 0..cfg.spec.num_nodes() {
                if !cfg.spec.is_interior(flat, 1) {
                    let src = boundary.value(flat).to_vec();
                    field.values_mut()[flat * k..(flat + 1) * k].copy_from_slice(&src);
                }
            }
            field
        }
    };
    let solver_cfg = cfg.solver.unwrap_or_default();
    if let Some(warning) = solver_cfg.stability_warning() {
        ctx.info(&format!("warning: {warning}"));
    }
    let (solved, report) = solve_dirichlet(&init, &solver_cfg);

    let field_path = ctx.path("field.json");
    std::fs::write(&field_path, solved.to_json())?;
    let report_path = ctx.path("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")?;
    ctx.info(&format!(
        "solver: {} iterations, converged = {}, diverged = {}",
        report.iterations, report.converged, report.diverged
    ));
    Ok(if report.diverged { 3 } else { 0 })
}

// ---------------------------------------------------------------- run-flow

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum FlowMode {
    Plain,
    Rescaled,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowJson {
    #[serde(default = "default_cfl")]
    c: f64,
    t_end: f64,
    #[serde(default)]
    boundary: BoundaryPolicy,
    #[serde(default)]
    snapshots: Vec<f64>,
}

fn default_cfl() -> f64 {
    0.2
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFlowConfig {
    spec: GridSpec,
    initial: FieldKind,
    flow: FlowJson,
    mode: FlowMode,
}

fn run_flow(ctx: &mut Ctx) -> mcflab::Result<i32> {
    let cfg: RunFlowConfig = parse_config(ctx)?;
    if !(cfg.flow.t_end > 0.0 && cfg.flow.t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "flow.t_end must be positive and finite, got {}",
            cfg.flow.t_end
        )));
    }
    let field = cfg.initial.realize(&cfg.spec)?;
    let flow_cfg = FlowConfig {
        cfl: cfg.flow.c,
        t_end: cfg.flow.t_end,
        boundary: cfg.flow.boundary,
        snapshots: cfg.flow.snapshots.clone(),
    };
    let rescaled = matches!(cfg.mode, FlowMode::Rescaled);
    // (time, field) per recorded snapshot
    let snaps: Vec<(f64, GraphField)> = if rescaled {
        run_rescaled(RescaledFlowState::new(field, 0.0), &flow_cfg)?
            .into_iter()
            .map(|s| (s.s, s.field))
            .collect()
    } else {
        run_mcf(FlowState::new(field, 0.0), &flow_cfg)?
            .into_iter()
            .map(|s| (s.time, s.field))
            .collect()
    };

    let mut rows = vec!["t,sup_grad,sup_rhs".to_string()];
    for (index, (t, field)) in snaps.iter().enumerate() {
        let path = ctx.path(&format!("snapshot_{index:03}.json"));
        std::fs::write(&path, field.to_json())?;
        let grad = field.check_gradient_bound().measured;
        let sup = rhs_sup(field, rescaled);
        if !grad.is_finite() || !sup.is_finite() {
            return Err(Error::NonFiniteState {
                t: *t,
                what: "flow snapshot has non-finite diagnostics".to_string(),
            });
        }
        rows.push(format!("{},{},{}", fmt_float(*t), fmt_float(grad), fmt_float(sup)));
    }
    let csv_path = ctx.path("run.csv");
    std::fs::write(&csv_path, rows.join("\n") + "\n")?;
    ctx.info(&format!("recorded {} snapshots", snaps.len()));
    Ok(0)
}

// ---------------------------------------------------------------- blowdown

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlowdownConfig {
    /// Present for grid-sampled sources; absent for closed forms.
    #[serde(default)]
    spec: Option<GridSpec>,
    source: FieldKind,
    /// Required when `spec` is absent.
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    ladder: Option<Vec<f64>>,
    #[serde(default = "default_sampling_count")]
    sampling_count: usize,
    /// Radius ladder for the surface and Lebesgue estimates; only used for
    /// grid-sampled sources.
    #[serde(default)]
    radii: Option<Vec<f64>>,
    #[serde(default = "default_boundary_count")]
    boundary_count: usize,
}

fn default_sampling_count() -> usize {
    64
}

fn default_boundary_count() -> usize {
    512
}

fn power_ladder(limit: f64) -> Vec<f64> {
    let mut ladder = Vec::new();
    let mut lambda = 1.0;
    while lambda <= limit + 1e-12 {
        ladder.push(lambda);
        lambda *= 2.0;
    }
    ladder
}

struct BlowdownOutputs {
    cauchy: EstimateReport,
    profile: ConeProfile,
    rate: RateReport,
}

fn blowdown_pipeline(
    source: &BlowdownSource,
    ladder: &[f64],
    sampling: &SphereSampling,
) -> mcflab::Result<BlowdownOutputs> {
    let seq = sample_blowdown(source, ladder, sampling)?;
    let cauchy = cauchy_bound_check(&seq)?;
    let (profile, rate) = estimate_cone(&seq)?;
    Ok(BlowdownOutputs { cauchy, profile, rate })
}

#[derive(serde::Serialize)]
struct ProfileDoc {
    dimension: usize,
    scheme: String,
    seed: u64,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

fn write_profile(path: &Path, profile: &ConeProfile) -> mcflab::Result<()> {
    let doc = ProfileDoc {
        dimension: profile.sampling.dimension,
        scheme: profile.sampling.scheme.to_string(),
        seed: profile.sampling.seed,
        nodes: profile.sampling.nodes.iter().map(|v| v.iter().copied().collect()).collect(),
        weights: profile.sampling.weights.clone(),
        values: profile.values.iter().map(|v| v.iter().copied().collect()).collect(),
    };
    if doc.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState {
            t: f64::NAN,
            what: "cone profile contains non-finite values".to_string(),
        });
    }
    std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

fn run_blowdown(ctx: &mut Ctx) -> mcflab::Result<i32> {
    let cfg: BlowdownConfig = parse_config(ctx)?;
    let field = match &cfg.spec {
        Some(spec) => Some(cfg.source.realize(spec)?),
        None => None,
    };
    let n = match (&cfg.spec, cfg.n) {
        (Some(spec), _) => spec.n(),
        (None, Some(n)) => n,
        (None, None) => {
            return Err(Error::InvalidConfig(
                "closed-form sources need the dimension key 'n'".to_string(),
            ))
        }
    };
    if field.is_none() && matches!(cfg.source, FieldKind::File { .. }) {
        return Err(Error::InvalidConfig(
            "field kind 'file' needs a grid spec".to_string(),
        ));
    }
    let sampling = SphereSampling::default_for(n, 1.0, cfg.sampling_count, ctx.args.seed)?;
    let ladder = match &cfg.ladder {
        Some(l) => l.clone(),
        None => match &field {
            Some(f) => power_ladder(f.spec().half_width()),
            None => power_ladder(2048.0),
        },
    };

    let k = cfg.source.implied_k().unwrap_or(1);
    let source = &cfg.source;
    let closed_eval = move |x: &[f64]| source.evaluate(x, k).expect("closed form");
    let outputs = match &field {
        Some(f) => blowdown_pipeline(&BlowdownSource::Field(f), &ladder, &sampling)?,
        None => blowdown_pipeline(
            &BlowdownSource::ClosedForm { k, eval: &closed_eval },
            &ladder,
            &sampling,
        )?,
    };

    let mut reports: Vec<&EstimateReport> = Vec::new();
    let mut c_k = 0.0;
    let mut c_star_ok = true;
    let grid_reports = match (&field, &cfg.radii) {
        (Some(f), Some(radii)) => Some((
            estimate_star(f, radii, cfg.boundary_count)?,
            estimate_k(f, radii)?,
        )),
        _ => None,
    };
    if let Some((star, k_report)) = &grid_reports {
        c_k = k_report.fitted_c;
        c_star_ok = star.inequality_ok.unwrap_or(true);
        reports.push(star);
        reports.push(k_report);
    }
    reports.push(&outputs.cauchy);

    let estimates_path = ctx.path("estimates.csv");
    write_estimates_csv(&estimates_path, &reports)?;
    let profile_path = ctx.path("profile.json");
    write_profile(&profile_path, &outputs.profile)?;
    let summary = Summary {
        c_k,
        c_star_ok,
        c_cauchy: outputs.cauchy.fitted_c,
        rate_slope: outputs.rate.slope,
        antipodal_defect: outputs.rate.antipodal_defect,
    };
    let summary_path = ctx.path("summary.json");
    summary.write(&summary_path)?;
    ctx.info(&format!(
        "C_cauchy = {:.6}, rate slope = {:?}",
        summary.c_cauchy, summary.rate_slope
    ));
    Ok(0)
}

// ------------------------------------------------------------------ verify

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    spec: GridSpec,
    field: FieldKind,
    #[serde(default)]
    radii: Option<Vec<f64>>,
    #[serde(default)]
    ladder: Option<Vec<f64>>,
    #[serde(default = "default_sampling_count")]
    sampling_count: usize,
    #[serde(default = "default_boundary_count")]
    boundary_count: usize,
    /// Scales for the d/dlambda identity check; skipped when absent.
    #[serde(default)]
    dlambda: Option<Vec<f64>>,
}

#[derive(serde::Serialize)]
struct VerifyDoc {
    residual_sup_parametric: f64,
    residual_sup_scalar: f64,
    equivalence_defect: f64,
    metric_c0: f64,
    metric_c: f64,
    divergence_pointwise_defect: f64,
    divergence_integral_defect: f64,
    extension_defect_max: f64,
    cauchy_trend_ok: bool,
    star_inequality_ok: bool,
    dlambda_defect_a: Option<f64>,
    dlambda_defect_b: Option<f64>,
}

fn run_verify(ctx: &mut Ctx) -> mcflab::Result<i32> {
    let cfg: VerifyConfig = parse_config(ctx)?;
    let field = cfg.field.realize(&cfg.spec)?;
    let spec = field.spec();
    let usable = spec.half_width() - 2.0 * spec.spacing();
    if usable <= 0.0 {
        return Err(Error::InvalidConfig(
            "grid too small for boundary quadrature (need L > 2h)".to_string(),
        ));
    }

    let residual = soliton_residual(&field)?;
    let equivalence = equivalence_check(&field)?;
    let metric = metric_bound_check(&field)?;

    let radii = cfg
        .radii
        .clone()
        .unwrap_or_else(|| vec![0.25 * usable, 0.5 * usable, 0.75 * usable]);
    let x_spec = DivergenceFieldSpec::for_dimension(spec.n());
    let max_radius = radii.iter().cloned().fold(0.0f64, f64::max);
    let divergence =
        divergence_identity_check(&field, |p| x_spec.eval(p), max_radius, cfg.boundary_count)?;
    let star = estimate_star(&field, &radii, cfg.boundary_count)?;
    let k_report = estimate_k(&field, &radii)?;

    let ladder = cfg.ladder.clone().unwrap_or_else(|| power_ladder(spec.half_width()));
    if ladder.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "blow-down ladder needs at least 3 scales inside the domain, got {ladder:?}"
        )));
    }
    let sampling = SphereSampling::default_for(spec.n(), 1.0, cfg.sampling_count, ctx.args.seed)?;
    let outputs = blowdown_pipeline(&BlowdownSource::Field(&field), &ladder, &sampling)?;
    let extension_defect_max = outputs
        .profile
        .extension_defect(&[0.5, 2.0, -1.0])
        .iter()
        .fold(0.0f64, |a, &(_, d)| a.max(d));

    let dlambda = match &cfg.dlambda {
        None => None,
        Some(lambdas) => Some(dlambda_identity_check(&field, lambdas, &sampling)?),
    };

    let estimates_path = ctx.path("estimates.csv");
    write_estimates_csv(&estimates_path, &[&star, &k_report, &outputs.cauchy])?;
    let profile_path = ctx.path("profile.json");
    write_profile(&profile_path, &outputs.profile)?;

    let summary = Summary {
        c_k: k_report.fitted_c,
        c_star_ok: star.inequality_ok.unwrap_or(true),
        c_cauchy: outputs.cauchy.fitted_c,
        rate_slope: outputs.rate.slope,
        antipodal_defect: outputs.rate.antipodal_defect,
    };
    let summary_path = ctx.path("summary.json");
    summary.write(&summary_path)?;

    let doc = VerifyDoc {
        residual_sup_parametric: residual.sup_parametric,
        residual_sup_scalar: residual.sup_scalar,
        equivalence_defect: equivalence,
        metric_c0: metric.c0,
        metric_c: metric.c_metric,
        divergence_pointwise_defect: divergence.pointwise_defect,
        divergence_integral_defect: divergence.integral_defect,
        extension_defect_max,
        cauchy_trend_ok: outputs.cauchy.trend_ok.unwrap_or(true),
        star_inequality_ok: star.inequality_ok.unwrap_or(true),
        dlambda_defect_a: dlambda.as_ref().map(|d| d.max_defect_a),
        dlambda_defect_b: dlambda.as_ref().map(|d| d.max_defect_b),
    };
    let doc_text = serde_json::to_string_pretty(&doc)?;
    let finite = [
        doc.residual_sup_parametric,
        doc.residual_sup_scalar,
        doc.equivalence_defect,
        doc.metric_c0,
        doc.metric_c,
        doc.divergence_pointwise_defect,
        doc.divergence_integral_defect,
        doc.extension_defect_max,
    ]
    .iter()
    .all(|v| v.is_finite())
        && doc.dlambda_defect_a.map_or(true, f64::is_finite)
        && doc.dlambda_defect_b.map_or(true, f64::is_finite);
    if !finite {
        return Err(Error::NonFiniteState {
            t: f64::NAN,
            what: "verification defects contain non-finite values".to_string(),
        });
    }
    let verify_path = ctx.path("verify.json");
    std::fs::write(&verify_path, doc_text + "\n")?;
    ctx.info(&format!(
        "residual sup = {:.3e}, C_K = {:.6}, C_cauchy = {:.6}",
        doc.residual_sup_parametric, summary.c_k, summary.c_cauchy
    ));
    Ok(0)
}
