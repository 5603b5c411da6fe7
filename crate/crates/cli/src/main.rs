use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use tsu_metrology::circuit::Circuit;
use tsu_metrology::metrology::{self, MetrologyError};
use tsu_metrology::optimize::{optimize_phases, Objective, OptOptions, OptimizeError};
use tsu_metrology::report::{self, format_param, Cell, Table};
use tsu_metrology::scalar::real_to_decimal;
use tsu_metrology::sweep::{self, run_sweep, vacuum_noise_map, AxisSpec, Param, PhaseMode, SweepError, SweepGrid, Target};

mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "tsu", version, about = "Limits of detection for classical and squeezed-light interferometers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moments and LOD of one circuit
    Lod(Common),
    /// LOD improvement of the squeezed circuit over the classical one
    Lodi(Common),
    /// Optimize the local-oscillator phases
    Optimize(Common),
    /// Sweep parameters and tabulate a target quantity
    Sweep(Common),
    /// Noise landscape of the unseeded circuit over the phases
    Vacuum(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// paper-start or g15
    #[arg(long)]
    preset: Option<String>,
    /// classical, tsu11, su11 or vacuum
    #[arg(long)]
    circuit: Option<String>,
    /// Output file (CSV, or JSON for `lod`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Significant decimal digits
    #[arg(long)]
    precision: Option<String>,
    /// NAME:MIN:MAX:COUNT[:log], repeatable
    #[arg(long, allow_hyphen_values = true)]
    axis: Vec<String>,
    /// probe or both
    #[arg(long)]
    arms: Option<String>,
    /// lod, lodi or variance
    #[arg(long)]
    target: Option<String>,
    /// fixed, aligned or optimized
    #[arg(long)]
    phases: Option<String>,
    /// Grid points per phase axis for optimization
    #[arg(long)]
    grid: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    /// Sets gamma and kappa together
    #[arg(long, allow_hyphen_values = true)]
    gamma_kappa: Option<String>,
    /// Sets eta_p1 and eta_c1 together
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta_p1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta_c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta_p2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta_c2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta_p3: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta_c3: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta_f: Option<String>,
    /// Sample phase; sets theta_f = -phi
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi_p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi_c: Option<String>,
}

impl Common {
    /// Flag settings as config key/value pairs, in a fixed order.
    fn settings(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        };
        push("circuit", &self.circuit);
        push("precision", &self.precision);
        push("arms", &self.arms);
        push("target", &self.target);
        push("phases", &self.phases);
        push("grid", &self.grid);
        push("r", &self.r);
        push("s", &self.s);
        push("alpha", &self.alpha);
        push("beta", &self.beta);
        push("gamma_kappa", &self.gamma_kappa);
        push("gamma", &self.gamma);
        push("kappa", &self.kappa);
        push("eta", &self.eta);
        push("eta_p1", &self.eta_p1);
        push("eta_c1", &self.eta_c1);
        push("eta_p2", &self.eta_p2);
        push("eta_c2", &self.eta_c2);
        push("eta_p3", &self.eta_p3);
        push("eta_c3", &self.eta_c3);
        push("phi", &self.phi);
        push("theta_f", &self.theta_f);
        push("phi_p", &self.phi_p);
        push("phi_c", &self.phi_c);
        for a in &self.axis {
            out.push(("axis".into(), a.clone()));
        }
        if let Some(o) = &self.out {
            out.push(("out".into(), o.display().to_string()));
        }
        out
    }

    fn resolve(&self) -> Result<RunConfig, Failure> {
        let cfg = config::resolve(self.preset.as_deref(), self.config.as_deref(), &self.settings()).map_err(Failure::Usage)?;
        cfg.params.validate().map_err(|e| Failure::Usage(e.into()))?;
        Ok(cfg)
    }
}

/// Error carrying its exit status.
enum Failure {
    /// Bad flags, config or output path (exit 2).
    Usage(anyhow::Error),
    /// The requested quantity does not exist at this point (exit 3).
    Undefined(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Undefined(_) => 3,
            Failure::Internal(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Undefined(e) | Failure::Internal(e) => e,
        }
    }
}

impl From<MetrologyError> for Failure {
    fn from(e: MetrologyError) -> Self {
        match e {
            MetrologyError::UndefinedLod { .. } => Failure::Undefined(e.into()),
            MetrologyError::Circuit(_) => Failure::Usage(e.into()),
            other => Failure::Internal(other.into()),
        }
    }
}

impl From<OptimizeError> for Failure {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Metrology(m) => m.into(),
            OptimizeError::NoFiniteCell => Failure::Undefined(e.into()),
            other => Failure::Usage(other.into()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Metrology(m) => m.into(),
            SweepError::Optimize(o) => o.into(),
            other => Failure::Usage(other.into()),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(Failure::Usage)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let p = out.with_extension("json");
    if p == out {
        PathBuf::from(format!("{}.sidecar.json", out.display()))
    } else {
        p
    }
}

/// CSV to `--out` plus a JSON sidecar, or CSV on stdout.
fn emit_table(cfg: &RunConfig, command: &str, table: &Table, details: Value) -> Result<(), Failure> {
    let csv = table.to_csv_string().map_err(|e| Failure::Internal(e.into()))?;
    match &cfg.out {
        Some(out) => {
            let side = report::sidecar(command, &cfg.params, table, details);
            let side = report::to_json_string(&side).map_err(|e| Failure::Internal(e.into()))?;
            write_file(out, &csv)?;
            write_file(&sidecar_path(out), &side)?;
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes()).map_err(|e| Failure::Internal(e.into()))?;
        }
    }
    Ok(())
}

fn cmd_lod(args: &Common) -> Result<(), Failure> {
    let mut cfg = args.resolve()?;
    if cfg.circuit == Circuit::Vacuum {
        cfg.params.alpha = 0.0;
        cfg.params.beta = 0.0;
    }
    let digits = cfg.params.precision.digits();
    let rep = metrology::evaluate(cfg.circuit, &cfg.params)?;
    println!("circuit        {}", rep.circuit);
    println!("source         {}", rep.source);
    println!("mean_j         {}", real_to_decimal(rep.mean_j.re(), digits));
    println!("second_moment  {}", real_to_decimal(rep.second_moment.re(), digits));
    println!("variance       {}", real_to_decimal(rep.variance.re(), digits));
    println!("dj_dphi_sq     {}", real_to_decimal(&rep.dj_dphi_sq, digits));
    match &rep.lod_db {
        Some(lod) => println!("lod_db         {} dB  [{}]", report::db4(lod), real_to_decimal(lod, digits)),
        None => println!("lod_db         undefined"),
    }
    if let Some(out) = &cfg.out {
        let v = json!({
            "engine": report::ENGINE_NAME,
            "engine_version": report::ENGINE_VERSION,
            "command": "lod",
            "params": report::params_json(&cfg.params),
            "report": report::metrology_json(&rep, digits),
        });
        write_file(out, &report::to_json_string(&v).map_err(|e| Failure::Internal(e.into()))?)?;
    }
    if rep.lod_db.is_none() {
        return Err(Failure::Undefined(anyhow!("LOD is undefined: the phase derivative of ⟨J⟩ vanishes")));
    }
    Ok(())
}

fn cmd_lodi(args: &Common) -> Result<(), Failure> {
    let mut cfg = args.resolve()?;
    if cfg.circuit == Circuit::Classical || cfg.circuit == Circuit::Vacuum {
        return Err(Failure::Usage(anyhow!("lodi compares a seeded squeezed circuit (tsu11 or su11) with the classical one")));
    }
    cfg.target = Target::Lodi;
    let table = if cfg.axes.is_empty() {
        single_point(&cfg)?
    } else {
        let grid = SweepGrid { phases: cfg.phases, opt_grid: cfg.grid, ..SweepGrid::new(cfg.axes.clone(), cfg.params.clone(), cfg.circuit, Target::Lodi) };
        run_sweep(&grid)?
    };
    if table.rows.len() == 1 {
        if let Some(Cell::Real(v)) = table.column("lodi_db").map(|i| &table.rows[0][i]) {
            eprintln!("lodi_db = {} dB", report::db4(v));
        }
    }
    emit_table(&cfg, "lodi", &table, json!({ "circuit": cfg.circuit.name(), "phases": cfg.phases.name() }))
}

fn single_point(cfg: &RunConfig) -> Result<Table, Failure> {
    let mut p = cfg.params.clone();
    match cfg.phases {
        PhaseMode::Fixed => {}
        PhaseMode::Aligned => {
            let phi = p.phi().to_f64();
            p = p.with_phases(phi, phi);
        }
        PhaseMode::Optimized => {
            let opts = OptOptions { grid: cfg.grid, ..OptOptions::default() };
            let r = optimize_phases(cfg.circuit, &p, Objective::Lodi, &opts)?;
            p = p.with_phases(r.phi_p, r.phi_c);
        }
    }
    let rep = metrology::lodi_db_for(cfg.circuit, &p)?;
    let mut t = Table::new(
        ["phi_p", "phi_c", "lod_quantum_db", "lod_classical_db", "lodi_db"].map(String::from).to_vec(),
        p.precision.digits(),
    );
    t.rows.push(vec![
        Cell::Param(p.phi_p),
        Cell::Param(p.phi_c),
        Cell::Real(rep.lod_tsu11_db),
        Cell::Real(rep.lod_classical_db),
        Cell::Real(rep.lodi_db),
    ]);
    Ok(t)
}

fn cmd_optimize(args: &Common) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let objective = match cfg.target {
        Target::Lod => Objective::Lod,
        Target::Lodi => Objective::Lodi,
        Target::Variance => return Err(Failure::Usage(anyhow!("optimize supports --target lod or lodi"))),
    };
    let opts = OptOptions { grid: cfg.grid, ..OptOptions::default() };
    let r = optimize_phases(cfg.circuit, &cfg.params, objective, &opts)?;
    let key = if objective == Objective::Lodi { "lodi_db" } else { "lod_db" };
    let summary = json!({
        "circuit": cfg.circuit.name(),
        "objective": cfg.target.name(),
        "phi_p": format_param(r.phi_p),
        "phi_c": format_param(r.phi_c),
        key: format_param(r.value_db),
        "lod_classical_db": r.lod_classical_db.map(format_param),
        "converged": r.converged,
        "iterations": r.iterations,
        "evaluations": r.evaluations,
        "grid": cfg.grid,
        "best_cell": {
            "phi_p": format_param(r.best_cell.phi_p),
            "phi_c": format_param(r.best_cell.phi_c),
            "value_db": r.best_cell.value_db.map(format_param),
        },
        "params": report::params_json(&cfg.params),
    });
    print!("{}", report::to_json_string(&summary).map_err(|e| Failure::Internal(e.into()))?);
    if cfg.out.is_some() {
        let mut t = Table::new(["phi_p", "phi_c", "value_db"].map(String::from).to_vec(), cfg.params.precision.digits());
        for c in &r.landscape {
            t.rows.push(vec![Cell::Param(c.phi_p), Cell::Param(c.phi_c), c.value_db.map_or(Cell::Empty, Cell::Param)]);
        }
        emit_table(&cfg, "optimize", &t, summary)?;
    }
    Ok(())
}

fn cmd_sweep(args: &Common) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    if cfg.axes.is_empty() {
        return Err(Failure::Usage(anyhow!("sweep needs at least one --axis NAME:MIN:MAX:COUNT[:log]")));
    }
    let grid = SweepGrid { phases: cfg.phases, opt_grid: cfg.grid, ..SweepGrid::new(cfg.axes.clone(), cfg.params.clone(), cfg.circuit, cfg.target) };
    let table = run_sweep(&grid)?;
    let details = json!({
        "circuit": cfg.circuit.name(),
        "target": cfg.target.name(),
        "phases": cfg.phases.name(),
        "axes": cfg.axes.iter().map(axis_json).collect::<Vec<_>>(),
    });
    emit_table(&cfg, "sweep", &table, details)
}

fn axis_json(a: &AxisSpec) -> Value {
    json!({
        "name": a.param.name(),
        "min": format_param(a.min),
        "max": format_param(a.max),
        "count": a.count,
        "scale": if a.scale == sweep::Scale::Log { "log" } else { "linear" },
    })
}

fn cmd_vacuum(args: &Common) -> Result<(), Failure> {
    let mut cfg = args.resolve()?;
    cfg.params.alpha = 0.0;
    cfg.params.beta = 0.0;
    if cfg.axes.is_empty() {
        use std::f64::consts::{FRAC_PI_2, PI};
        cfg.axes = vec![AxisSpec::linear(Param::Phi, -FRAC_PI_2, FRAC_PI_2, 37), AxisSpec::linear(Param::PhiP, -PI, PI, 73)];
    }
    let map = vacuum_noise_map(&cfg.params, &cfg.axes)?;
    let worst = map.minima.iter().map(|m| m.residual.abs()).fold(0.0, f64::max);
    eprintln!(
        "{} minima lines located; max |2phi - phi_p - phi_c| = {:.3e} (grid step {:.3e})",
        map.minima.len(),
        worst,
        map.resolution
    );
    let details = json!({
        "axes": cfg.axes.iter().map(axis_json).collect::<Vec<_>>(),
        "resolution": format_param(map.resolution),
        "minima": map.minima.iter().map(|m| json!({
            "phi": format_param(m.phi), "phi_p": format_param(m.phi_p), "phi_c": format_param(m.phi_c),
            "variance": format_param(m.variance), "residual": format_param(m.residual),
        })).collect::<Vec<_>>(),
        "max_minimum_residual": format_param(worst),
    });
    emit_table(&cfg, "vacuum", &map.table, details)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Lod(a) => cmd_lod(a),
        Command::Lodi(a) => cmd_lodi(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Vacuum(a) => cmd_vacuum(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
