//! Shared plumbing between subcommands: budget rules, solver dispatch and
//! instance construction from generated graphs.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context};
use bpo_core::baselines::{
    solve_bim_celf, solve_mirror_descent, solve_projected_subgradient, DescentConfig, IcModel,
};
use bpo_core::fw::{
    heuristic_rule_of_thumb, solve_fw, CampaignObjective, Init, SolveReport, SolverConfig, StepRule,
};
use bpo_core::ingest::{build_instance, CostScale};
use bpo_core::model::{validate_instance, CampaignInstance, Violation};
use bpo_core::netgen::{direct_impressions, estimate_impressions, FeedSimConfig, SocialGraph};
use bpo_core::{BpoError, UtilitySpec};

use crate::args::{FeedArgs, ImpressionModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BudgetRule {
    Fixed(f64),
    /// `B = x N`.
    PerUser(f64),
}

impl BudgetRule {
    pub fn budget(&self, n_users: usize) -> f64 {
        match *self {
            BudgetRule::Fixed(b) => b,
            BudgetRule::PerUser(x) => x * n_users as f64,
        }
    }
}

impl FromStr for BudgetRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("expected fixed:<B> or per-user:<x>, got `{s}`"))?;
        let x: f64 = value.parse().map_err(|_| format!("bad number `{value}`"))?;
        if !(x >= 0.0) || !x.is_finite() {
            return Err(format!(
                "budget parameter must be finite and nonnegative, got {x}"
            ));
        }
        match kind {
            "fixed" => Ok(BudgetRule::Fixed(x)),
            "per-user" => Ok(BudgetRule::PerUser(x)),
            _ => Err(format!("unknown budget rule `{kind}`")),
        }
    }
}

impl fmt::Display for BudgetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetRule::Fixed(b) => write!(f, "fixed:{b}"),
            BudgetRule::PerUser(x) => write!(f, "per-user:{x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Fw,
    Ps,
    Md,
    Bim,
    Heuristic,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Fw => "fw",
            SolverKind::Ps => "ps",
            SolverKind::Md => "md",
            SolverKind::Bim => "bim",
            SolverKind::Heuristic => "heuristic",
        }
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fw" => Ok(SolverKind::Fw),
            "ps" => Ok(SolverKind::Ps),
            "md" => Ok(SolverKind::Md),
            "bim" => Ok(SolverKind::Bim),
            "heuristic" => Ok(SolverKind::Heuristic),
            _ => Err(format!("unknown solver `{s}` (fw, ps, md, bim, heuristic)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub fw: SolverConfig<f64>,
    pub descent: DescentConfig,
    pub mc_runs: usize,
    pub seed: u64,
}

impl SolverOptions {
    pub fn new(
        max_iters: usize,
        tol: f64,
        step: StepRule,
        curvature: Option<f64>,
        seed: u64,
    ) -> Self {
        Self {
            fw: SolverConfig {
                max_iters,
                gap_tolerance: tol,
                step_rule: step,
                curvature,
                seed,
                init: Init::Zeros,
            },
            descent: DescentConfig::default(),
            mc_runs: 100,
            seed,
        }
    }
}

/// Runs one solver; one-shot solvers report their whole runtime as a
/// single iteration time.
pub fn run_solver(
    kind: SolverKind,
    inst: &CampaignInstance<f64>,
    spec: &UtilitySpec,
    opts: &SolverOptions,
) -> anyhow::Result<SolveReport<f64>> {
    let report = match kind {
        SolverKind::Fw => solve_fw(inst, spec, &opts.fw)?,
        SolverKind::Ps => solve_projected_subgradient(inst, spec, &opts.descent)?,
        SolverKind::Md => solve_mirror_descent(inst, spec, &opts.descent)?,
        SolverKind::Heuristic => {
            let started = Instant::now();
            let a = heuristic_rule_of_thumb(inst)?;
            let ms = started.elapsed().as_secs_f64() * 1e3;
            let obj = CampaignObjective::new(inst, *spec)?;
            SolveReport::for_point("heuristic", &obj, &inst.feasible_set(), a.0, ms)
        }
        SolverKind::Bim => {
            let started = Instant::now();
            let model = IcModel::from_impressions(&inst.impressions, opts.mc_runs, opts.seed)?;
            let (_, a) = solve_bim_celf(inst, &model, inst.budget);
            let ms = started.elapsed().as_secs_f64() * 1e3;
            let obj = CampaignObjective::new(inst, *spec)?;
            SolveReport::for_point("bim", &obj, &inst.feasible_set(), a.0, ms)
        }
    };
    Ok(report)
}

/// Rejects instances a solver cannot run on: a negative budget or caps
/// outside `[0, 1]` make the problem infeasible, any other violation is
/// invalid input.
pub fn check_instance(inst: &CampaignInstance<f64>) -> anyhow::Result<()> {
    let v = validate_instance(inst);
    let infeasible = v.violations.iter().find(|x| {
        matches!(
            x,
            Violation::NegativeBudget(_) | Violation::CapOutOfRange { .. }
        )
    });
    if let Some(x) = infeasible {
        return Err(BpoError::Infeasible(x.to_string()).into());
    }
    if let Some(x) = v.violations.first() {
        bail!(BpoError::InvalidParameter(format!(
            "invalid instance: {x} ({} violation(s))",
            v.violations.len()
        )));
    }
    Ok(())
}

pub fn feed_config(feed: &FeedArgs, seed: u64) -> FeedSimConfig {
    FeedSimConfig {
        feed_size: feed.feed_size,
        snapshots: feed.snapshots,
        seed,
        ..FeedSimConfig::default()
    }
}

/// Impressions from the graph, default prices and the budget rule.
pub fn instance_from_graph(
    g: &SocialGraph,
    feed: &FeedArgs,
    advertiser: usize,
    scale: CostScale,
    budget: &BudgetRule,
    seed: u64,
) -> anyhow::Result<CampaignInstance<f64>> {
    let imp = match feed.impressions {
        ImpressionModel::Feed => estimate_impressions(g, &feed_config(feed, seed))?,
        ImpressionModel::Direct => direct_impressions(g)?,
    };
    build_instance(g, imp, advertiser, scale, budget.budget(g.n_nodes()))
        .context("building the instance")
}
