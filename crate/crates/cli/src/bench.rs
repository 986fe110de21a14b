//! Benchmark harness: generated networks of growing size, several solvers
//! per network, one CSV row per (size, seed, solver).

use anyhow::{ensure, Context};
use bpo_core::fw::StepRule;
use bpo_core::ingest::{classify_influencers, CostScale};
use bpo_core::model::{metrics, TierCounts};
use bpo_core::netgen::{gen_ab, gen_er, SocialGraph};
use bpo_core::UtilitySpec;
use rayon::prelude::*;

use crate::args::{FeedArgs, GraphModel};
use crate::report::{fmt_num, Table};
use crate::runners::{instance_from_graph, run_solver, BudgetRule, SolverKind, SolverOptions};

pub const BENCH_HEADER: [&str; 10] = [
    "solver",
    "n",
    "seed",
    "objective",
    "runtime_ms",
    "iterations",
    "spend",
    "nano",
    "micro",
    "macro",
];

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub model: GraphModel,
    pub sizes: Vec<usize>,
    pub a: usize,
    pub budget_rule: BudgetRule,
    pub utility: UtilitySpec,
    pub solvers: Vec<SolverKind>,
    pub reps: usize,
    pub seed: u64,
    pub feed: FeedArgs,
    pub max_iters: usize,
    pub tol: f64,
    pub descent_iters: usize,
    pub mc_runs: usize,
}

impl BenchSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(!self.sizes.is_empty(), "no sizes given");
        ensure!(
            self.sizes.windows(2).all(|w| w[0] < w[1]),
            "sizes must be strictly ascending"
        );
        ensure!(self.reps >= 1, "at least one repetition");
        ensure!(!self.solvers.is_empty(), "no solvers given");
        Ok(())
    }

    pub fn generate(&self, n: usize, seed: u64) -> anyhow::Result<SocialGraph> {
        Ok(match self.model {
            GraphModel::Ab => gen_ab(n, self.a, seed)?,
            GraphModel::Er => gen_er(n, self.a, seed)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub solver: &'static str,
    pub n: usize,
    pub seed: u64,
    pub objective: f64,
    pub runtime_ms: f64,
    pub iterations: usize,
    pub spend: f64,
    pub tiers: TierCounts,
}

impl BenchRow {
    fn cells(&self) -> Vec<String> {
        vec![
            self.solver.to_string(),
            self.n.to_string(),
            self.seed.to_string(),
            fmt_num(self.objective),
            fmt_num(self.runtime_ms),
            self.iterations.to_string(),
            fmt_num(self.spend),
            self.tiers.nano.to_string(),
            self.tiers.micro.to_string(),
            self.tiers.macro_.to_string(),
        ]
    }
}

fn run_cell(spec: &BenchSpec, n: usize, seed: u64) -> anyhow::Result<Vec<BenchRow>> {
    let g = spec.generate(n, seed)?;
    let inst = instance_from_graph(&g, &spec.feed, 0, CostScale::Unit, &spec.budget_rule, seed)?;
    let tiers = classify_influencers(&g, &g.post_rates)?;
    let mut opts = SolverOptions::new(spec.max_iters, spec.tol, StepRule::LineSearch, None, seed);
    opts.descent.iters = spec.descent_iters;
    opts.mc_runs = spec.mc_runs;
    spec.solvers
        .iter()
        .map(|&kind| {
            let rep = run_solver(kind, &inst, &spec.utility, &opts)?;
            let m = metrics(&inst, &rep.participation, 1.0, 0.0, Some(&tiers.tiers))?;
            Ok(BenchRow {
                solver: kind.name(),
                n,
                seed,
                objective: rep.objective,
                runtime_ms: rep.total_ms(),
                iterations: rep.iterations,
                spend: rep.spend,
                tiers: m.selected,
            })
        })
        .collect()
}

/// Rows ordered by size, then seed, then the solver list order. Cells run
/// in parallel; the order does not depend on scheduling.
pub fn run_bench(spec: &BenchSpec) -> anyhow::Result<Vec<BenchRow>> {
    spec.validate()?;
    let cells: Vec<(usize, u64)> = spec
        .sizes
        .iter()
        .flat_map(|&n| (0..spec.reps as u64).map(move |r| (n, spec.seed + r)))
        .collect();
    let rows: Vec<anyhow::Result<Vec<BenchRow>>> = cells
        .par_iter()
        .map(|&(n, seed)| run_cell(spec, n, seed).with_context(|| format!("size {n}, seed {seed}")))
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

pub fn bench_table(rows: &[BenchRow]) -> Table {
    let mut t = Table::new(&BENCH_HEADER);
    for r in rows {
        t.push(r.cells());
    }
    t
}
