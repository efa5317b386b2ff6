//! The `heatcont` command-line tool. Exit codes: 0 success, 1 numerical or
//! acceptance failure, 2 usage error.

pub mod args;
mod figures;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use heatcont_core::{
    catalog_keys, geometric_grid, hessian_rate, localization_rate, make_builtin, smooth_eval, sweep_minimizers,
    trace_branch, value_rate, Branch, ContinuationError, ObjectiveError, Params, ScalingError, SearchWindow,
    SeparableObjective, SmoothingError, SweepError, SweepResult, TraceConfig,
};

use args::{Cli, Command, EvalArgs, NewtonArgs, ObjectiveArgs, ScalingArgs, ScalingKind, SweepArgs, TraceArgs};
use output::{num, write_csv, write_json, write_text, ObjectiveSource, RunManifest, Table};
use svg::{Panel, Series, Style, PALETTE};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<ObjectiveError> for CliError {
    fn from(e: ObjectiveError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SmoothingError> for CliError {
    fn from(e: SmoothingError) -> Self {
        match e {
            SmoothingError::Quadrature { .. } => CliError::Failure(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ContinuationError> for CliError {
    fn from(e: ContinuationError) -> Self {
        match e {
            ContinuationError::Smoothing(s) => s.into(),
            ContinuationError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Smoothing(s) => s.into(),
            SweepError::Continuation(c) => c.into(),
            SweepError::Input(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<ScalingError> for CliError {
    fn from(e: ScalingError) -> Self {
        match e {
            ScalingError::Smoothing(s) => s.into(),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Reproduce(a) => figures::reproduce(a.figure, &a.out_dir),
    }
}

/// Resolves a catalog key or a JSON config path.
pub fn load_objective(a: &ObjectiveArgs) -> Result<(SeparableObjective, ObjectiveSource), CliError> {
    let params: Params = a.params.iter().cloned().collect();
    if catalog_keys().contains(&a.objective.as_str()) {
        let obj = make_builtin(&a.objective, &params)?;
        return Ok((
            obj,
            ObjectiveSource::Catalog {
                name: a.objective.clone(),
                params,
            },
        ));
    }
    let path = Path::new(&a.objective);
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "unknown objective '{}': expected one of {} or a JSON config file",
            a.objective,
            catalog_keys().join(", ")
        )));
    }
    if !params.is_empty() {
        return Err(CliError::Usage("--param only applies to catalog objectives".into()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((
        SeparableObjective::from_json(&text)?,
        ObjectiveSource::Config {
            path: a.objective.clone(),
        },
    ))
}

fn trace_config(t_start: f64, t_end: f64, newton: &NewtonArgs, quad: &args::QuadArgs) -> TraceConfig {
    TraceConfig {
        newton_tol: newton.newton_tol,
        newton_max_iter: newton.newton_max_iter,
        lambda_floor: newton.lambda_floor,
        quadrature: quad.spec(),
        ..TraceConfig::between(t_start, t_end)
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let (obj, _) = load_objective(&a.objective)?;
    let jet = smooth_eval(&obj, a.t, &a.x, a.order as usize, &a.quad.spec())?;
    println!("{}", serde_json::to_string_pretty(&jet).expect("jet serializes"));
    Ok(())
}

fn x_columns(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["x".into()]
    } else {
        (0..n).map(|i| format!("x{i}")).collect()
    }
}

pub fn branch_table(branch: &Branch) -> Table {
    let n = branch.points.first().map_or(1, |p| p.x.len());
    let mut header = vec!["t".to_string()];
    header.extend(x_columns(n));
    header.extend(["grad_norm", "lambda_min", "energy", "laplacian"].map(String::from));
    let rows = branch
        .points
        .iter()
        .map(|p| {
            let mut r = vec![num(p.t)];
            r.extend(p.x.iter().map(|&v| num(v)));
            r.extend([p.grad_norm, p.lambda_min, p.energy, p.laplacian].map(num));
            r
        })
        .collect();
    Table { header, rows }
}

pub fn records_table(sweep: &SweepResult) -> Table {
    let n = sweep.records.first().map_or(1, |r| r.x.len());
    let mut header = vec!["t".to_string()];
    header.extend(x_columns(n));
    header.extend(["energy", "lambda_min", "grad_norm", "branch_label", "tie"].map(String::from));
    let rows = sweep
        .records
        .iter()
        .map(|r| {
            let mut row = vec![num(r.t)];
            row.extend(r.x.iter().map(|&v| num(v)));
            row.extend([num(r.energy), num(r.lambda_min), num(r.grad_norm)]);
            row.extend([r.branch_label.to_string(), r.tie.to_string()]);
            row
        })
        .collect();
    Table { header, rows }
}

pub fn switches_table(sweep: &SweepResult) -> Table {
    let mut t = Table::new(&[
        "t_star",
        "branch_from",
        "branch_to",
        "energy_slope_gap",
        "hessian_before",
        "hessian_after",
        "x_before",
        "x_after",
        "residual",
    ]);
    let join = |x: &[f64]| x.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" ");
    for s in &sweep.switches {
        t.rows.push(vec![
            num(s.t_star),
            s.branch_from.to_string(),
            s.branch_to.to_string(),
            num(s.energy_slope_gap),
            num(s.hessian_before),
            num(s.hessian_after),
            join(&s.x_before),
            join(&s.x_after),
            num(s.residual),
        ]);
    }
    t
}

/// `a.csv` -> `a.switches.csv`.
pub fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn branch_panels(branch: &Branch) -> Vec<Panel> {
    let n = branch.points.first().map_or(1, |p| p.x.len());
    let coords = (0..n)
        .map(|i| {
            let pts = branch.points.iter().map(|p| (p.t, p.x[i])).collect();
            Series::new(x_columns(n)[i].clone(), pts, PALETTE[i % PALETTE.len()], Style::Line)
        })
        .collect();
    vec![
        Panel {
            title: "branch position".into(),
            x_label: "t".into(),
            y_label: "x_t".into(),
            log_x: true,
            series: coords,
            ..Panel::default()
        },
        Panel {
            title: "smallest Hessian eigenvalue along the branch".into(),
            x_label: "t".into(),
            y_label: "lambda_min".into(),
            log_x: true,
            log_y: true,
            series: vec![Series::new(
                "lambda_min",
                branch.points.iter().map(|p| (p.t, p.lambda_min)).collect(),
                PALETTE[0],
                Style::Line,
            )],
            ..Panel::default()
        },
    ]
}

pub fn sweep_panels(sweep: &SweepResult) -> Vec<Panel> {
    let mut labels: Vec<usize> = sweep.records.iter().map(|r| r.branch_label).collect();
    labels.sort_unstable();
    labels.dedup();
    let map = labels
        .iter()
        .map(|&l| {
            let pts = sweep
                .records
                .iter()
                .filter(|r| r.branch_label == l)
                .map(|r| (r.t, r.x[0]))
                .collect();
            Series::new(format!("branch {l}"), pts, PALETTE[l % PALETTE.len()], Style::Dots)
        })
        .collect();
    let marks: Vec<(f64, String)> = sweep
        .switches
        .iter()
        .map(|s| (s.t_star, format!("t* = {:.4}", s.t_star)))
        .collect();
    vec![
        Panel {
            title: "global minimizer".into(),
            x_label: "t".into(),
            y_label: "x_t".into(),
            log_x: true,
            series: map,
            marks: marks.clone(),
            ..Panel::default()
        },
        Panel {
            title: "smallest Hessian eigenvalue along the global path".into(),
            x_label: "t".into(),
            y_label: "lambda_min".into(),
            log_x: true,
            log_y: true,
            series: vec![Series::new(
                "lambda_min",
                sweep.records.iter().map(|r| (r.t, r.lambda_min)).collect(),
                PALETTE[0],
                Style::Dots,
            )],
            marks,
        },
    ]
}

fn register(manifest: &mut RunManifest, out: &args::OutputArgs) {
    for p in [&out.csv, &out.json, &out.svg].into_iter().flatten() {
        manifest.output(p);
    }
}

fn cmd_trace(a: &TraceArgs) -> Result<(), CliError> {
    let (obj, source) = load_objective(&a.objective)?;
    let mut cfg = trace_config(a.t_start, a.t_end, &a.newton, &a.quad);
    cfg.predictor = a.predictor.into();
    cfg.domain = a.domain;
    if let Some(r) = a.step_ratio {
        cfg.step_ratio = r;
    }
    let branch = trace_branch(&obj, &cfg, &a.seed)?;
    let mut manifest = RunManifest::new("trace", Some(source))
        .with("seed", &a.seed)
        .with("config", &cfg);
    register(&mut manifest, &a.out);
    let table = branch_table(&branch);
    if let Some(p) = &a.out.csv {
        write_csv(p, &table, &manifest)?;
    }
    if let Some(p) = &a.out.json {
        write_json(p, &manifest, &branch)?;
    }
    if let Some(p) = &a.out.svg {
        write_text(p, &svg::render(&branch_panels(&branch), &manifest.to_json()))?;
    }
    if a.out.csv.is_none() && a.out.json.is_none() {
        table.to_stdout()?;
    }
    eprintln!("{} points; termination: {:?}", branch.points.len(), branch.termination);
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let (obj, source) = load_objective(&a.objective)?;
    let cfg = trace_config(a.t_from, a.t_to, &a.newton, &a.quad);
    let search = SearchWindow {
        x_lo: a.x_lo,
        x_hi: a.x_hi,
        grid_points: a.points,
    };
    let grid = geometric_grid(a.t_from, a.t_to, a.n);
    let sweep = sweep_minimizers(&obj, &grid, &search, &cfg)?;
    let mut manifest = RunManifest::new("sweep", Some(source))
        .with("t_grid", &grid)
        .with("search", search)
        .with("config", &cfg);
    register(&mut manifest, &a.out);
    if let Some(p) = &a.out.csv {
        manifest.output(&sibling(p, "switches"));
    }
    let table = records_table(&sweep);
    if let Some(p) = &a.out.csv {
        write_csv(p, &table, &manifest)?;
        write_csv(&sibling(p, "switches"), &switches_table(&sweep), &manifest)?;
    }
    if let Some(p) = &a.out.json {
        write_json(p, &manifest, &sweep)?;
    }
    if let Some(p) = &a.out.svg {
        write_text(p, &svg::render(&sweep_panels(&sweep), &manifest.to_json()))?;
    }
    if a.out.csv.is_none() && a.out.json.is_none() {
        table.to_stdout()?;
    }
    eprintln!("{} scales; {} switches", sweep.records.len(), sweep.switches.len());
    for s in &sweep.switches {
        eprintln!(
            "switch at t* = {} from branch {} to {} (lambda {} -> {})",
            s.t_star, s.branch_from, s.branch_to, s.hessian_before, s.hessian_after
        );
    }
    Ok(())
}

fn cmd_scaling(a: &ScalingArgs) -> Result<(), CliError> {
    let (obj, source) = load_objective(&a.objective)?;
    if a.per_decade == 0 {
        return Err(CliError::Usage("--per-decade must be positive".into()));
    }
    let decades = (a.t_from / a.t_to).log10().abs();
    let n = (decades * a.per_decade as f64).round() as usize + 1;
    let grid = geometric_grid(a.t_from, a.t_to, n);
    let spec = a.quad.spec();
    let fit = match a.kind {
        ScalingKind::Value => value_rate(&obj, &grid, &spec)?,
        ScalingKind::Hessian => {
            let cfg = TraceConfig {
                step_ratio: (a.t_to / a.t_from).powf(1.0 / (n - 1).max(1) as f64),
                quadrature: spec,
                ..TraceConfig::between(a.t_from, a.t_to)
            };
            let seed = a.seed.clone().unwrap_or_else(|| vec![0.0; obj.dim()]);
            hessian_rate(&obj, &trace_branch(&obj, &cfg, &seed)?)?
        }
        ScalingKind::Localization => {
            let cfg = TraceConfig {
                quadrature: spec,
                ..TraceConfig::default()
            };
            localization_rate(&sweep_minimizers(&obj, &grid, &SearchWindow::default(), &cfg)?)?
        }
    };
    let mut manifest = RunManifest::new("scaling", Some(source))
        .with("kind", format!("{:?}", a.kind).to_lowercase())
        .with("t_grid", &grid)
        .with("seed", &a.seed)
        .with("quadrature", spec);
    if let Some(p) = &a.json {
        manifest.output(p);
        write_json(p, &manifest, &fit)?;
    }
    println!("{}", serde_json::to_string_pretty(&fit).expect("fit serializes"));
    Ok(())
}
