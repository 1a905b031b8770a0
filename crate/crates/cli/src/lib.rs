//! `hsvp` command-line front end: batch solving, cross-checking, synthetic
//! data generation and benchmark tables.

pub mod engine;
pub mod error;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsvp::eval::{evaluate, MetricsRow};
use hsvp::io::{write_conds, write_hierarchy, write_probs, ProbRow};
use hsvp::prob::flat_to_hier;
use hsvp::synth::{generate, GenConfig, TreeShape};
use hsvp::{Budgets, DEFAULT_ENUM_GUARD};
use serde::Serialize;

pub use engine::{Context, Instance, Outcome, SetSolver, SolverKind};
pub use error::{CliError, CliResult};

/// Masses of different solvers on one instance may differ by this much.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "hsvp",
    version,
    about = "Set-valued prediction over class hierarchies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every instance and write one JSON object per line.
    Solve(SolveArgs),
    /// Run several solvers and verify their optimal masses agree.
    Check(CheckArgs),
    /// Write a random hierarchy and Dirichlet probability rows.
    Gen(GenArgs),
    /// Tabulate recall, set size, time and work per solver and budget.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
    #[arg(long)]
    pub probs: Option<PathBuf>,
    #[arg(long)]
    pub conds: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "rts")]
    pub solver: SolverKind,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report every time as 0 so output is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Solvers to compare; defaults to every solver that fits the guards.
    #[arg(long = "solver-set", value_delimiter = ',')]
    pub solvers: Vec<SolverKind>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Balanced,
    Random,
}

#[derive(Debug, Args)]
pub struct GenOpts {
    /// Number of classes K.
    #[arg(long, default_value_t = 16)]
    pub classes: usize,
    /// Mean branching factor (arity for balanced trees).
    #[arg(long, default_value_t = 2.0)]
    pub branching: f64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Random)]
    pub shape: ShapeArg,
    /// Symmetric Dirichlet concentration of the probability rows.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GenOpts {
    fn config(&self) -> GenConfig {
        GenConfig {
            classes: self.classes,
            branching: self.branching,
            shape: match self.shape {
                ShapeArg::Balanced => TreeShape::Balanced,
                ShapeArg::Random => TreeShape::Random,
            },
            alpha: self.alpha,
            instances: self.instances,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub opts: GenOpts,
    /// Output path of the hierarchy file.
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Output path of the probability table.
    #[arg(long)]
    pub probs: PathBuf,
    /// Optional output path for the matching conditionals.
    #[arg(long)]
    pub conds: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Used to synthesize a dataset when no --hierarchy is given.
    #[command(flatten)]
    pub gen: GenOpts,
    #[arg(
        long = "solver-set",
        value_delimiter = ',',
        default_value = "mvm,kcg,rts"
    )]
    pub solvers: Vec<SolverKind>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub r: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    pub k: Vec<usize>,
    /// Where to write the CSV table; printed after the text table if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

/// Size guard for the enumerated feasible family, overridable through
/// `HSVP_ENUM_GUARD`.
pub fn enum_guard() -> CliResult<u64> {
    match std::env::var("HSVP_ENUM_GUARD") {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Input(format!("HSVP_ENUM_GUARD={v:?} is not an unsigned integer"))
        }),
        Err(_) => Ok(DEFAULT_ENUM_GUARD),
    }
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn budget_grid(rs: &[usize], ks: &[usize]) -> CliResult<Vec<Budgets>> {
    let mut grid = Vec::new();
    for &r in rs {
        for &k in ks {
            grid.push(Budgets::new(r, k)?);
        }
    }
    Ok(grid)
}

fn load(input: &InputArgs) -> CliResult<(Context, Vec<Instance>)> {
    let path = input
        .hierarchy
        .as_deref()
        .ok_or_else(|| CliError::Input("--hierarchy is required".into()))?;
    let h = engine::load_hierarchy(path)?;
    let instances = engine::load_instances(&h, input.probs.as_deref(), input.conds.as_deref())?;
    Ok((Context::new(h, enum_guard()?), instances))
}

#[derive(Serialize)]
struct Record<'a> {
    instance_id: &'a str,
    solver: &'a str,
    r: usize,
    k: usize,
    set: &'a [usize],
    mass: f64,
    n: u64,
    time_us: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ilp_dims: Option<[usize; 2]>,
}

pub fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    let (mut ctx, instances) = load(&args.input)?;
    let b = Budgets::new(args.r, args.k)?;
    if args.solver == SolverKind::Mvm {
        ctx.prepare_matrix(b)
            .map_err(|e| CliError::from(e.clone()))?;
    }
    let outcomes = engine::solve_batch(&ctx, &args.solver, &instances, b, args.input.workers)?;
    let mut out = output(args.out.as_deref())?;
    for (inst, o) in instances.iter().zip(&outcomes) {
        let rec = Record {
            instance_id: &inst.id,
            solver: args.solver.name(),
            r: b.r,
            k: b.k,
            set: o.prediction.set.members(),
            mass: o.prediction.mass,
            n: o.prediction.n,
            time_us: if args.no_timing {
                0.0
            } else {
                o.prediction.time_us
            },
            ilp_dims: o.ilp_dims.map(|(r, c)| [r, c]),
        };
        serde_json::to_writer(&mut out, &rec).map_err(|e| CliError::Input(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// First instance on which solvers disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    pub instance_id: String,
    pub budgets: Budgets,
    pub masses: Vec<(String, f64)>,
}

/// Compares optimal masses of `solvers` on every instance and budget.
/// Progress lines go to `log`.
pub fn run_check(
    ctx: &Context,
    solvers: &[&dyn SetSolver],
    grid: &[Budgets],
    instances: &[Instance],
    workers: usize,
    log: &mut dyn Write,
) -> CliResult<Option<Disagreement>> {
    for &b in grid {
        let results = solvers
            .iter()
            .map(|s| engine::solve_batch(ctx, *s, instances, b, workers))
            .collect::<CliResult<Vec<_>>>()?;
        let mut spread: f64 = 0.0;
        for (i, inst) in instances.iter().enumerate() {
            let masses: Vec<f64> = results.iter().map(|r| r[i].prediction.mass).collect();
            let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > AGREEMENT_TOLERANCE {
                return Ok(Some(Disagreement {
                    instance_id: inst.id.clone(),
                    budgets: b,
                    masses: solvers
                        .iter()
                        .map(|s| s.name().to_string())
                        .zip(masses)
                        .collect(),
                }));
            }
            spread = spread.max(hi - lo);
        }
        let names: Vec<&str> = solvers.iter().map(|s| s.name()).collect();
        writeln!(
            log,
            "r={} k={}: {} instances, {} agree (max spread {spread:.3e})",
            b.r,
            b.k,
            instances.len(),
            names.join(",")
        )?;
    }
    Ok(None)
}

pub fn cmd_check(args: &CheckArgs) -> CliResult<()> {
    let (mut ctx, instances) = load(&args.input)?;
    let grid = budget_grid(&args.r, &args.k)?;
    let requested: Vec<SolverKind> = if args.solvers.is_empty() {
        SolverKind::ALL.to_vec()
    } else {
        args.solvers.clone()
    };
    let mut out = output(args.out.as_deref())?;
    for b in &grid {
        let mut active: Vec<SolverKind> = Vec::new();
        for &s in &requested {
            if ctx.applicable(s, *b) {
                active.push(s);
            } else {
                writeln!(out, "r={} k={}: skipping {s} (guard)", b.r, b.k)?;
            }
        }
        let dyns: Vec<&dyn SetSolver> = active.iter().map(|s| s as &dyn SetSolver).collect();
        if let Some(d) = run_check(
            &ctx,
            &dyns,
            std::slice::from_ref(b),
            &instances,
            args.input.workers,
            &mut out,
        )? {
            out.flush()?;
            return Err(CliError::CheckFailed(describe(&d)));
        }
    }
    out.flush()?;
    Ok(())
}

pub fn describe(d: &Disagreement) -> String {
    let masses: Vec<String> = d.masses.iter().map(|(s, m)| format!("{s}={m}")).collect();
    format!(
        "solvers disagree on instance {} (r={}, k={}): {}",
        d.instance_id,
        d.budgets.r,
        d.budgets.k,
        masses.join(" ")
    )
}

fn prob_rows(ds: &hsvp::synth::Dataset) -> Vec<ProbRow> {
    ds.rows
        .iter()
        .enumerate()
        .map(|(i, row)| ProbRow {
            instance_id: i.to_string(),
            y_true: Some(row.y_true),
            dist: row.dist.clone(),
        })
        .collect()
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let ds = generate(&args.opts.config()).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::write(&args.hierarchy, write_hierarchy(&ds.hierarchy))?;
    let rows = prob_rows(&ds);
    std::fs::write(&args.probs, write_probs(&rows))?;
    if let Some(path) = &args.conds {
        let conds: Vec<_> = rows
            .iter()
            .map(|r| (r.instance_id.clone(), flat_to_hier(&ds.hierarchy, &r.dist)))
            .collect();
        std::fs::write(path, write_conds(&ds.hierarchy, &conds))?;
    }
    Ok(())
}

/// One benchmark cell: metrics, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub solver: SolverKind,
    pub budgets: Budgets,
    pub metrics: Option<MetricsRow>,
    pub ilp_dims: Option<(usize, usize)>,
}

pub fn run_bench(
    ctx: &mut Context,
    instances: &[Instance],
    solvers: &[SolverKind],
    grid: &[Budgets],
    workers: usize,
    no_timing: bool,
) -> CliResult<Vec<BenchCell>> {
    let labeled: Vec<usize> = (0..instances.len())
        .filter(|&i| instances[i].y_true.is_some())
        .collect();
    if labeled.is_empty() {
        return Err(CliError::Input(
            "bench needs instances with known y_true".into(),
        ));
    }
    let mut cells = Vec::new();
    for &b in grid {
        for &s in solvers {
            if !ctx.applicable(s, b) {
                cells.push(BenchCell {
                    solver: s,
                    budgets: b,
                    metrics: None,
                    ilp_dims: None,
                });
                continue;
            }
            // warm-up, untimed
            s.solve(ctx, &instances[0], b)?;
            let outcomes = engine::solve_batch(ctx, &s, instances, b, workers)?;
            let preds: Vec<_> = labeled
                .iter()
                .map(|&i| {
                    let mut p = outcomes[i].prediction.clone();
                    if no_timing {
                        p.time_us = 0.0;
                    }
                    p
                })
                .collect();
            let truths: Vec<usize> = labeled
                .iter()
                .map(|&i| instances[i].y_true.unwrap())
                .collect();
            let metrics = evaluate(s.name(), b, &preds, &truths)?;
            cells.push(BenchCell {
                solver: s,
                budgets: b,
                metrics: Some(metrics),
                ilp_dims: outcomes[0].ilp_dims,
            });
        }
    }
    Ok(cells)
}

fn dims_text(d: Option<(usize, usize)>) -> String {
    d.map_or_else(|| "-".to_string(), |(r, c)| format!("{r}x{c}"))
}

pub fn bench_csv(cells: &[BenchCell]) -> String {
    let mut out = String::from("solver,r,k,recall,avg_set_size,avg_time_us,avg_n,ilp_dims,note\n");
    for c in cells {
        match &c.metrics {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{:.3},{},{},",
                    c.solver,
                    c.budgets.r,
                    c.budgets.k,
                    m.recall,
                    m.avg_set_size,
                    m.avg_time_us,
                    m.avg_n,
                    dims_text(c.ilp_dims)
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{},{},{},,,,,,skipped (guard)",
                    c.solver, c.budgets.r, c.budgets.k
                );
            }
        }
    }
    out
}

pub fn bench_text(cells: &[BenchCell]) -> String {
    let mut out = format!(
        "{:<7} {:>3} {:>4} {:>8} {:>8} {:>12} {:>12} {:>12}\n",
        "solver", "r", "k", "R", "|Y|", "t (us)", "n", "A dims"
    );
    for c in cells {
        let _ = match &c.metrics {
            Some(m) => writeln!(
                out,
                "{:<7} {:>3} {:>4} {:>8.4} {:>8.4} {:>12.3} {:>12.2} {:>12}",
                c.solver,
                c.budgets.r,
                c.budgets.k,
                m.recall,
                m.avg_set_size,
                m.avg_time_us,
                m.avg_n,
                dims_text(c.ilp_dims)
            ),
            None => writeln!(
                out,
                "{:<7} {:>3} {:>4} {:>8}",
                c.solver, c.budgets.r, c.budgets.k, "skipped (guard)"
            ),
        };
    }
    out
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let (mut ctx, instances) = if args.input.hierarchy.is_some() {
        load(&args.input)?
    } else {
        let ds = generate(&args.gen.config()).map_err(|e| CliError::Input(e.to_string()))?;
        let instances: Vec<Instance> = prob_rows(&ds)
            .into_iter()
            .map(|r| Instance {
                hier: flat_to_hier(&ds.hierarchy, &r.dist),
                id: r.instance_id,
                y_true: r.y_true,
                flat: r.dist,
            })
            .collect();
        if instances.is_empty() {
            return Err(CliError::Input("no instances requested".into()));
        }
        (Context::new(ds.hierarchy, enum_guard()?), instances)
    };
    let grid = budget_grid(&args.r, &args.k)?;
    let cells = run_bench(
        &mut ctx,
        &instances,
        &args.solvers,
        &grid,
        args.input.workers,
        args.no_timing,
    )?;
    let text = bench_text(&cells);
    let csv = bench_csv(&cells);
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    lock.write_all(text.as_bytes())?;
    match &args.out {
        Some(p) => std::fs::write(p, csv)?,
        None => {
            lock.write_all(b"\n")?;
            lock.write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Check(a) => cmd_check(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
    }
}
