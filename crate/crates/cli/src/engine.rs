//! Loaded inputs, solver dispatch and batch execution.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use hsvp::eval::{oracle_solve, ORACLE_MAX_CLASSES};
use hsvp::io::{parse_conds, parse_hierarchy, parse_probs};
use hsvp::kcg::{solve_kcg_flat, ConflictGraph};
use hsvp::mvm::{build_matrix, solve_mvm, FeasibleMatrix};
use hsvp::prob::{flat_to_hier, hier_to_flat};
use hsvp::rts::solve_rts;
use hsvp::{Budgets, FlatDistribution, HierarchicalDistribution, Hierarchy, Prediction};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Mvm,
    Kcg,
    Rts,
    Oracle,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Mvm,
        SolverKind::Kcg,
        SolverKind::Rts,
        SolverKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Mvm => "mvm",
            SolverKind::Kcg => "kcg",
            SolverKind::Rts => "rts",
            SolverKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver {s:?} (expected mvm, kcg, rts or oracle)"))
    }
}

/// One test instance with both distribution forms.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub y_true: Option<usize>,
    pub flat: FlatDistribution,
    pub hier: HierarchicalDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub prediction: Prediction,
    pub ilp_dims: Option<(usize, usize)>,
}

/// Shared, read-only solving context for one hierarchy.
pub struct Context {
    pub hierarchy: Hierarchy,
    pub conflicts: ConflictGraph,
    pub guard: u64,
    matrices: HashMap<Budgets, Result<FeasibleMatrix, hsvp::Error>>,
}

impl Context {
    pub fn new(hierarchy: Hierarchy, guard: u64) -> Self {
        let conflicts = ConflictGraph::from_tree(&hierarchy);
        Context {
            hierarchy,
            conflicts,
            guard,
            matrices: HashMap::new(),
        }
    }

    /// Builds the feasible matrix for `b` once; later calls reuse it.
    pub fn prepare_matrix(&mut self, b: Budgets) -> Result<&FeasibleMatrix, &hsvp::Error> {
        let h = &self.hierarchy;
        let guard = self.guard;
        self.matrices
            .entry(b)
            .or_insert_with(|| build_matrix(h, b, guard))
            .as_ref()
    }

    fn matrix(&self, b: Budgets) -> hsvp::Result<&FeasibleMatrix> {
        match self.matrices.get(&b) {
            Some(Ok(m)) => Ok(m),
            Some(Err(e)) => Err(e.clone()),
            None => Err(hsvp::Error::InvalidParameter(format!(
                "feasible matrix for r={} k={} was not prepared",
                b.r, b.k
            ))),
        }
    }

    /// Whether `solver` can run on this hierarchy for `b` (within the
    /// resource guards). Builds the feasible matrix as a side effect.
    pub fn applicable(&mut self, solver: SolverKind, b: Budgets) -> bool {
        match solver {
            SolverKind::Mvm => self.prepare_matrix(b).is_ok(),
            SolverKind::Oracle => self.hierarchy.class_count() <= ORACLE_MAX_CLASSES,
            SolverKind::Kcg | SolverKind::Rts => true,
        }
    }
}

/// Anything that maps an instance and budgets to a prediction.
pub trait SetSolver: Sync {
    fn name(&self) -> &str;
    fn solve(&self, ctx: &Context, inst: &Instance, b: Budgets) -> hsvp::Result<Outcome>;
}

impl SetSolver for SolverKind {
    fn name(&self) -> &str {
        SolverKind::name(*self)
    }

    fn solve(&self, ctx: &Context, inst: &Instance, b: Budgets) -> hsvp::Result<Outcome> {
        let h = &ctx.hierarchy;
        let plain = |prediction| Outcome {
            prediction,
            ilp_dims: None,
        };
        match self {
            SolverKind::Mvm => solve_mvm(ctx.matrix(b)?, &inst.flat).map(plain),
            SolverKind::Kcg => {
                let sol = solve_kcg_flat(h, &ctx.conflicts, &inst.flat, b);
                Ok(Outcome {
                    prediction: sol.prediction,
                    ilp_dims: Some(sol.ilp_dims),
                })
            }
            SolverKind::Rts => solve_rts(h, &inst.hier, b).map(plain),
            SolverKind::Oracle => oracle_solve(h, &inst.flat, b).map(plain),
        }
    }
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_hierarchy(path: &Path) -> CliResult<Hierarchy> {
    Ok(parse_hierarchy(
        &read_file(path)?,
        &path.display().to_string(),
    )?)
}

/// Loads instances from a probability table, a conditionals file, or both
/// (matched by instance id, in order).
pub fn load_instances(
    h: &Hierarchy,
    probs: Option<&Path>,
    conds: Option<&Path>,
) -> CliResult<Vec<Instance>> {
    let flat = probs
        .map(|p| {
            parse_probs(&read_file(p)?, &p.display().to_string(), h.class_count())
                .map_err(CliError::from)
        })
        .transpose()?;
    let hier = conds
        .map(|p| parse_conds(&read_file(p)?, &p.display().to_string(), h).map_err(CliError::from))
        .transpose()?;
    let instances: Vec<Instance> = match (flat, hier) {
        (None, None) => return Err(CliError::Input("need --probs or --conds".into())),
        (Some(rows), None) => rows
            .into_iter()
            .map(|r| Instance {
                hier: flat_to_hier(h, &r.dist),
                id: r.instance_id,
                y_true: r.y_true,
                flat: r.dist,
            })
            .collect(),
        (None, Some(conds)) => conds
            .into_iter()
            .map(|(id, d)| Instance {
                flat: hier_to_flat(h, &d),
                id,
                y_true: None,
                hier: d,
            })
            .collect(),
        (Some(rows), Some(conds)) => {
            if rows.len() != conds.len() {
                return Err(CliError::Input(format!(
                    "{} probability rows but {} conditional instances",
                    rows.len(),
                    conds.len()
                )));
            }
            rows.into_iter()
                .zip(conds)
                .map(|(r, (id, d))| {
                    if r.instance_id != id {
                        return Err(CliError::Input(format!(
                            "instance order differs: {:?} in probabilities, {id:?} in conditionals",
                            r.instance_id
                        )));
                    }
                    Ok(Instance {
                        id,
                        y_true: r.y_true,
                        flat: r.dist,
                        hier: d,
                    })
                })
                .collect::<CliResult<_>>()?
        }
    };
    if instances.is_empty() {
        return Err(CliError::Input("no instances in input".into()));
    }
    Ok(instances)
}

/// Solves every instance, in input order, on `workers` threads.
pub fn solve_batch(
    ctx: &Context,
    solver: &dyn SetSolver,
    instances: &[Instance],
    b: Budgets,
    workers: usize,
) -> CliResult<Vec<Outcome>> {
    let run = || {
        instances
            .par_iter()
            .map(|inst| solver.solve(ctx, inst, b))
            .collect::<hsvp::Result<Vec<_>>>()
    };
    let out = if workers <= 1 {
        instances
            .iter()
            .map(|inst| solver.solve(ctx, inst, b))
            .collect::<hsvp::Result<Vec<_>>>()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(run)
    };
    Ok(out?)
}
