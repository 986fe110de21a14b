use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bpo_core::fw::{heuristic_rule_of_thumb, CampaignObjective, SolveReport};
use bpo_core::ingest::{
    build_star_graph, classify_influencers, derive_rates, parse_trace, tier_histogram,
};
use bpo_core::io::{load_instance, write_instance};
use bpo_core::model::validate_instance;
use bpo_core::multiplatform::{load_mp, solve_mp, MP_HEADER};
use bpo_core::netgen::{gen_ab, gen_er};
use bpo_core::{BpoError, UtilitySpec};
use serde::Serialize;

use crate::args::*;
use crate::bench::{bench_table, run_bench, BenchSpec};
use crate::report::{emit_report, fmt_num, write_json, Table};
use crate::runners::{check_instance, instance_from_graph, run_solver, SolverOptions};

fn output(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn options(s: &SolverArgs, seed: u64) -> SolverOptions {
    SolverOptions::new(s.max_iters, s.tol, s.step.into(), s.curvature, seed)
}

fn load(path: &Path) -> anyhow::Result<bpo_core::Instance> {
    let inst = load_instance(path).with_context(|| format!("reading {}", path.display()))?;
    check_instance(&inst)?;
    Ok(inst)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed = cli.seed;
    match &cli.command {
        Command::Gen(a) => {
            let mut g = match a.model {
                GraphModel::Ab => gen_ab(a.n, a.a, seed)?,
                GraphModel::Er => gen_er(a.n, a.a, seed)?,
            };
            g = g.with_uniform_rates(a.lambda, a.mu);
            let inst = instance_from_graph(
                &g,
                &a.feed,
                a.advertiser,
                a.cost_scale.into(),
                &a.budget_rule,
                seed,
            )?;
            let mut w = output(&cli.out)?;
            write_instance(&inst, &mut w)?;
            w.flush()?;
        }
        Command::Ingest(a) => {
            let trace =
                parse_trace(&a.trace).with_context(|| format!("reading {}", a.trace.display()))?;
            let rates = derive_rates(&trace.records, a.window)?;
            let star = build_star_graph(&trace.records)?;
            let mut g = star.graph;
            g.set_rates(rates.lambda.clone(), rates.mu.clone())?;
            let advertiser = match a.advertiser {
                None => 0,
                Some(id) => star.users.position(id).ok_or_else(|| {
                    BpoError::InvalidParameter(format!(
                        "advertiser {id} does not appear in the trace"
                    ))
                })?,
            };
            let inst = instance_from_graph(
                &g,
                &a.feed,
                advertiser,
                a.cost_scale.into(),
                &a.budget_rule,
                seed,
            )?;
            let tiers = classify_influencers(&g, &rates.lambda).ok();
            eprintln!(
                "records {}, rejected {}, users {}, edges {}, dangling {}, self re-posts {}, windows {}",
                trace.records.len(),
                trace.rejects.len(),
                star.users.len(),
                g.n_edges(),
                star.dangling,
                star.self_reposts,
                rates.windows,
            );
            if let Some(t) = tiers {
                eprintln!("tiers {:?}", tier_histogram(&t.tiers));
            }
            let mut w = output(&cli.out)?;
            write_instance(&inst, &mut w)?;
            w.flush()?;
        }
        Command::Solve(a) => {
            let inst = load(&a.instance)?;
            let rep =
                bpo_core::fw::solve_fw(&inst, &a.solver.utility, &options(&a.solver, seed).fw)?;
            let mut w = output(&cli.out)?;
            emit_report(&rep, a.output.format, a.output.omit_timings, &mut w)?;
            w.flush()?;
        }
        Command::SolveMp(a) => {
            let mut mp = load_mp::<f64>(&a.instance)
                .with_context(|| format!("reading {}", a.instance.display()))?;
            if let Some(v) = a.variant {
                mp.variant = v.into();
            }
            if let Some((l, j, s)) = mp.normalization_violations().first() {
                bail!(BpoError::InvalidParameter(format!(
                    "platform {l}, viewer {j}: impression ratios sum to {s}"
                )));
            }
            for b in &mp.blocks {
                check_instance(b)?;
            }
            let rep = solve_mp(&mp, &a.solver.utility, &options(&a.solver, seed).fw)?;
            let mut w = output(&cli.out)?;
            match a.output.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct MpOutput<'a> {
                        variant: String,
                        platform_spend: &'a [f64],
                        platform_roi: &'a [f64],
                        roi_ratio: Option<f64>,
                        report: &'a SolveReport<f64>,
                    }
                    let out = MpOutput {
                        variant: mp.variant.to_string(),
                        platform_spend: &rep.platform_spend,
                        platform_roi: &rep.platform_roi,
                        roi_ratio: rep.roi_ratio,
                        report: &rep.report,
                    };
                    write_json(&out, a.output.omit_timings, &mut w)?;
                }
                Format::Csv => {
                    emit_report(&rep.report, Format::Csv, a.output.omit_timings, &mut w)?
                }
            }
            w.flush()?;
        }
        Command::Heuristic(a) => {
            let inst = load(&a.instance)?;
            let started = std::time::Instant::now();
            let x = heuristic_rule_of_thumb(&inst)?;
            let ms = started.elapsed().as_secs_f64() * 1e3;
            let obj = CampaignObjective::new(&inst, a.utility)?;
            let rep = SolveReport::for_point("heuristic", &obj, &inst.feasible_set(), x.0, ms);
            let mut w = output(&cli.out)?;
            emit_report(&rep, a.output.format, a.output.omit_timings, &mut w)?;
            w.flush()?;
        }
        Command::Compare(a) => {
            let inst = load(&a.instance)?;
            let mut opts = options(&a.solver, seed);
            opts.descent.iters = a.baseline.descent_iters;
            opts.mc_runs = a.baseline.mc_runs;
            let table = compare(&inst, &a.solver.utility, &a.solvers, &opts)?;
            let mut w = output(&cli.out)?;
            table.write(a.omit_timings, &mut w)?;
            w.flush()?;
        }
        Command::Bench(a) => {
            let spec = BenchSpec {
                model: a.model,
                sizes: a.sizes.clone(),
                a: a.a,
                budget_rule: a.budget_rule,
                utility: a.utility,
                solvers: a.solvers.clone(),
                reps: a.reps,
                seed,
                feed: a.feed.clone(),
                max_iters: a.max_iters,
                tol: a.tol,
                descent_iters: a.baseline.descent_iters,
                mc_runs: a.baseline.mc_runs,
            };
            let rows = run_bench(&spec)?;
            let mut w = output(&cli.out)?;
            bench_table(&rows).write(a.omit_timings, &mut w)?;
            w.flush()?;
        }
        Command::Validate(a) => validate(&a.instance, &cli.out)?,
    }
    Ok(())
}

pub const COMPARE_HEADER: [&str; 5] = ["solver", "objective", "runtime_ms", "iterations", "spend"];

pub fn compare(
    inst: &bpo_core::Instance,
    spec: &UtilitySpec,
    solvers: &[crate::runners::SolverKind],
    opts: &SolverOptions,
) -> anyhow::Result<Table> {
    let mut table = Table::new(&COMPARE_HEADER);
    for &kind in solvers {
        let rep = run_solver(kind, inst, spec, opts)
            .with_context(|| format!("solver {}", kind.name()))?;
        table.push(vec![
            kind.name().to_string(),
            fmt_num(rep.objective),
            fmt_num(rep.total_ms()),
            rep.iterations.to_string(),
            fmt_num(rep.spend),
        ]);
    }
    Ok(table)
}

#[derive(Serialize)]
struct ValidationOutput {
    kind: &'static str,
    valid: bool,
    violations: Vec<String>,
    subnormal_viewers: usize,
}

fn validate(path: &Path, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let result = if first.split_whitespace().collect::<Vec<_>>().join(" ") == MP_HEADER {
        let mp = bpo_core::multiplatform::read_mp::<f64, _>(text.as_bytes())?;
        let mut violations: Vec<String> = mp
            .normalization_violations()
            .iter()
            .map(|(l, j, s)| {
                format!("platform {l}, viewer {j}: column normalization exceeded (sum {s})")
            })
            .collect();
        let mut subnormal = 0;
        for (b, block) in mp.blocks.iter().enumerate() {
            let v = validate_instance(block);
            subnormal += v.subnormal_viewers.len();
            violations.extend(
                v.violations
                    .iter()
                    .filter(|x| {
                        !matches!(
                            x,
                            bpo_core::model::Violation::ColumnNormalizationExceeded { .. }
                        )
                    })
                    .map(|x| format!("block {b}: {x}")),
            );
        }
        ValidationOutput {
            kind: "multi-platform",
            valid: violations.is_empty(),
            violations,
            subnormal_viewers: subnormal,
        }
    } else {
        let inst = bpo_core::io::read_instance::<f64, _>(text.as_bytes())?;
        let v = validate_instance(&inst);
        ValidationOutput {
            kind: "single-platform",
            valid: v.is_valid(),
            violations: v.violations.iter().map(|x| x.to_string()).collect(),
            subnormal_viewers: v.subnormal_viewers.len(),
        }
    };
    let mut w = output(out)?;
    write_json(&result, false, &mut w)?;
    w.flush()?;
    if !result.valid {
        bail!(BpoError::InvalidParameter(format!(
            "{} violation(s) in {}",
            result.violations.len(),
            path.display()
        )));
    }
    Ok(())
}
