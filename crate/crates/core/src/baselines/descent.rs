use std::time::Instant;

use crate::error::Result;
use crate::fw::{CampaignObjective, Objective, SolveReport, Termination};
use crate::model::CampaignInstance;
use crate::oracle::{fw_gap, FeasibleSet, LinearOracle};
use crate::scalar::Scalar;
use crate::utility::UtilitySpec;

use super::projection::project;

/// Iteration budget and step schedule `eta_t = eta0 / sqrt(t + 1)` shared by
/// the projected-subgradient and mirror-descent baselines.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentConfig {
    pub iters: usize,
    /// Initial step; by default the inverse gradient norm at the start point
    /// (Euclidean norm for subgradient, max norm scaled by
    /// [`MD_STEP_SCALE`] for mirror descent).
    pub eta0: Option<f64>,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            iters: 300,
            eta0: None,
        }
    }
}

pub fn solve_projected_subgradient<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    cfg: &DescentConfig,
) -> Result<SolveReport<T>> {
    let obj = CampaignObjective::new(inst, *spec)?;
    let oracle = LinearOracle::new(&inst.feasible_set())?;
    projected_subgradient(&obj, &oracle, cfg)
}

pub fn solve_mirror_descent<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    cfg: &DescentConfig,
) -> Result<SolveReport<T>> {
    let obj = CampaignObjective::new(inst, *spec)?;
    let oracle = LinearOracle::new(&inst.feasible_set())?;
    mirror_descent(&obj, &oracle, cfg)
}

/// `a <- P(a + eta_t grad)` from the origin; reports the best iterate.
pub fn projected_subgradient<T: Scalar, O: Objective<T>>(
    obj: &O,
    oracle: &LinearOracle<T>,
    cfg: &DescentConfig,
) -> Result<SolveReport<T>> {
    let a = vec![T::zero(); obj.dim()];
    let l2 = |g: &[T]| g.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    run("ps", obj, oracle, cfg, a, l2, |set, a, g, eta| {
        let x: Vec<T> = a.iter().zip(g).map(|(&v, &d)| v + eta * d).collect();
        project(set, &x)
    })
}

/// Mirror descent moves in log space, so a unit-scaled first step changes
/// coordinates by at most a factor `e` and needs thousands of iterations to
/// switch users off. `ln(1 / f64::EPSILON)` lets the first update span the
/// whole relative precision of a double.
pub const MD_STEP_SCALE: f64 = 36.04365338911715;

/// Entropic update `a <- a exp(eta_t grad)` followed by the entropic
/// projection back onto the feasible set; reports the best iterate.
pub fn mirror_descent<T: Scalar, O: Objective<T>>(
    obj: &O,
    oracle: &LinearOracle<T>,
    cfg: &DescentConfig,
) -> Result<SolveReport<T>> {
    let set = oracle.set();
    let total_cost = set.unit_costs.iter().fold(T::zero(), |s, &r| s + r);
    let level = set.budget / total_cost; // +inf when nothing costs money
    let half = T::lit(0.5);
    let a = set.caps.iter().map(|&r| r.min(level) * half).collect();
    let linf = |g: &[T]| g.iter().fold(T::zero(), |m, &x| m.max(x.abs())) / T::lit(MD_STEP_SCALE);
    run("md", obj, oracle, cfg, a, linf, |set, a, g, eta| {
        let raw: Vec<T> = a
            .iter()
            .zip(g)
            .map(|(&v, &d)| v * (eta * d).exp())
            .collect();
        restore(set, &raw)
    })
}

/// Bregman (relative-entropy) projection onto the feasible set:
/// `min(x exp(-theta rho), r)` with the smallest `theta >= 0` that meets the
/// budget, found by bisection.
fn restore<T: Scalar>(set: &FeasibleSet<T>, x: &[T]) -> Vec<T> {
    let at = |theta: T| -> Vec<T> {
        x.iter()
            .zip(&set.unit_costs)
            .zip(&set.caps)
            .map(|((&v, &rho), &r)| (v * (-theta * rho).exp()).min(r))
            .collect()
    };
    let clipped = at(T::zero());
    if set.spend(&clipped) <= set.budget {
        return clipped;
    }
    let mut hi = T::one();
    let mut best = at(hi);
    for _ in 0..200 {
        if set.spend(&best) <= set.budget {
            break;
        }
        hi = hi + hi;
        best = at(hi);
    }
    let mut lo = T::zero();
    for _ in 0..300 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let a = at(mid);
        if set.spend(&a) > set.budget {
            lo = mid;
        } else {
            hi = mid;
            best = a;
        }
    }
    best
}

fn run<T, O, N, U>(
    name: &str,
    obj: &O,
    oracle: &LinearOracle<T>,
    cfg: &DescentConfig,
    mut a: Vec<T>,
    norm: N,
    update: U,
) -> Result<SolveReport<T>>
where
    T: Scalar,
    O: Objective<T>,
    N: Fn(&[T]) -> T,
    U: Fn(&FeasibleSet<T>, &[T], &[T], T) -> Vec<T>,
{
    let set = oracle.set();
    let mut report = SolveReport::new(name, a.len());
    report.observe(set, &a);
    let mut grad = vec![T::zero(); a.len()];
    let mut s = vec![T::zero(); a.len()];
    let mut best = (T::neg_infinity(), a.clone());
    let mut eta0 = T::zero();
    for t in 0..=cfg.iters {
        let started = Instant::now();
        let value = obj.value_and_gradient(&a, &mut grad);
        oracle.solve_into(&grad, &mut s)?;
        report.objective_trace.push(value);
        report.gap_trace.push(fw_gap(&grad, &s, &a)?);
        if value > best.0 {
            best = (value, a.clone());
        }
        if t == cfg.iters {
            break;
        }
        if t == 0 {
            eta0 = match cfg.eta0 {
                Some(e) => T::lit(e),
                None => {
                    let n = norm(&grad);
                    if n > T::zero() {
                        T::one() / n
                    } else {
                        T::zero()
                    }
                }
            };
        }
        let eta = eta0 / T::lit((t as f64 + 1.0).sqrt());
        a = update(set, &a, &grad, eta);
        report.observe(set, &a);
        report.step_sizes.push(eta);
        report
            .iteration_ms
            .push(started.elapsed().as_secs_f64() * 1e3);
    }
    report.iterations = cfg.iters;
    report.termination = Termination::MaxIters;
    report.finish(set, best.1, best.0);
    Ok(report)
}
