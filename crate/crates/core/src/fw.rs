//! Frank-Wolfe over the budget-capped box.
//!
//! Each iteration linearizes the objective at the current point, asks the
//! [`LinearOracle`] for the best vertex `s`, and moves to
//! `(1 - gamma) a + gamma s`. Iterates are convex combinations of feasible
//! points and therefore stay feasible without any projection. The duality
//! gap `<grad, s - a>` bounds the suboptimality of concave objectives and
//! drives termination.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, BpoError, Result};
use crate::model::{accumulate_potentials, CampaignInstance, ParticipationVector, FEASIBILITY_TOL};
use crate::oracle::{fw_gap, FeasibleSet, LinearOracle};
use crate::scalar::Scalar;
use crate::utility::{gradient_from_potentials, influence_scores, UtilitySpec};

/// Gap-bound constant of the convergence theorem.
pub const GAP_BOUND_BETA: f64 = 27.0 / 8.0;
/// Probes used when a curvature constant has to be estimated.
pub const DEFAULT_CURVATURE_PROBES: usize = 64;
/// Safety factor applied to estimated curvature.
pub const CURVATURE_SAFETY: f64 = 2.0;
/// Lower bound of any curvature estimate.
pub const CURVATURE_FLOOR: f64 = 1e-12;
/// Absolute tolerance of the golden-section line search.
pub const LINE_SEARCH_TOL: f64 = 1e-8;

/// Smooth objective over a fixed-dimension decision vector.
pub trait Objective<T: Scalar> {
    fn dim(&self) -> usize;

    fn value(&self, a: &[T]) -> T;

    /// Writes the gradient into `grad` and returns the value.
    fn value_and_gradient(&self, a: &[T], grad: &mut [T]) -> T;

    /// `gamma -> U((1 - gamma) a + gamma s)`.
    fn segment<'s>(&'s self, a: &[T], s: &[T]) -> Box<dyn Fn(T) -> T + 's> {
        let (a, s) = (a.to_vec(), s.to_vec());
        Box::new(move |gamma| {
            let x: Vec<T> = a
                .iter()
                .zip(&s)
                .map(|(&x, &y)| (T::one() - gamma) * x + gamma * y)
                .collect();
            self.value(&x)
        })
    }
}

/// The single-platform campaign objective `sum_{j != i} U(w_j(a))`.
pub struct CampaignObjective<'a, T> {
    inst: &'a CampaignInstance<T>,
    spec: UtilitySpec,
}

impl<'a, T: Scalar> CampaignObjective<'a, T> {
    pub fn new(inst: &'a CampaignInstance<T>, spec: UtilitySpec) -> Result<Self> {
        spec.require_differentiable()?;
        Ok(Self { inst, spec })
    }

    fn potentials(&self, a: &[T]) -> Vec<T> {
        let mut omega = vec![T::zero(); self.inst.n_users()];
        accumulate_potentials(
            self.inst,
            a,
            self.inst.advertiser_participation(),
            &mut omega,
        );
        omega
    }

    fn total(&self, omega: &[T]) -> T {
        let i = self.inst.advertiser;
        omega
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(T::zero(), |acc, (_, &w)| acc + self.spec.value(w))
    }
}

impl<T: Scalar> Objective<T> for CampaignObjective<'_, T> {
    fn dim(&self) -> usize {
        self.inst.dim()
    }

    fn value(&self, a: &[T]) -> T {
        self.total(&self.potentials(a))
    }

    fn value_and_gradient(&self, a: &[T], grad: &mut [T]) -> T {
        let omega = self.potentials(a);
        gradient_from_potentials(self.inst, &self.spec, &omega, grad);
        self.total(&omega)
    }

    fn segment<'s>(&'s self, a: &[T], s: &[T]) -> Box<dyn Fn(T) -> T + 's> {
        // potentials are affine in a: one pass per endpoint, O(N) per query
        let wa = self.potentials(a);
        let ws = self.potentials(s);
        let i = self.inst.advertiser;
        Box::new(move |gamma| {
            let keep = T::one() - gamma;
            wa.iter()
                .zip(&ws)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(T::zero(), |acc, (_, (&x, &y))| {
                    acc + self.spec.value(keep * x + gamma * y)
                })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `2 / (t + 2)`
    Harmonic,
    /// `min(gap / C, 1)`
    GapOverCurvature,
    /// Exact maximization along the segment by golden-section search.
    LineSearch,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init<T> {
    Zeros,
    Given(Vec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub max_iters: usize,
    pub gap_tolerance: f64,
    pub step_rule: StepRule,
    /// Curvature for [`StepRule::GapOverCurvature`]; estimated when absent.
    pub curvature: Option<f64>,
    pub seed: u64,
    pub init: Init<T>,
}

impl<T> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 30,
            gap_tolerance: 0.1,
            step_rule: StepRule::LineSearch,
            curvature: None,
            seed: 0,
            init: Init::Zeros,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(BpoError::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.gap_tolerance > 0.0) {
            return Err(BpoError::InvalidParameter(
                "gap tolerance must be positive".into(),
            ));
        }
        if let Some(c) = self.curvature {
            if !(c > 0.0) {
                return Err(BpoError::InvalidParameter(format!(
                    "curvature must be positive (got {c})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapBelowTol,
    MaxIters,
}

/// Outcome of a solver run.
///
/// `objective_trace` and `gap_trace` hold one entry per visited iterate
/// (`iterations + 1` for Frank-Wolfe); `step_sizes` and `iteration_ms` hold
/// one entry per performed update. Residuals are maxima over all iterates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub solver: String,
    pub participation: Vec<T>,
    pub objective: T,
    pub spend: T,
    pub objective_trace: Vec<T>,
    pub gap_trace: Vec<T>,
    pub step_sizes: Vec<T>,
    #[serde(default)]
    pub iteration_ms: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
    pub budget_excess: T,
    pub box_excess: T,
}

impl<T: Scalar> SolveReport<T> {
    pub(crate) fn new(solver: &str, dim: usize) -> Self {
        Self {
            solver: solver.to_string(),
            participation: vec![T::zero(); dim],
            objective: T::zero(),
            spend: T::zero(),
            objective_trace: Vec::new(),
            gap_trace: Vec::new(),
            step_sizes: Vec::new(),
            iteration_ms: Vec::new(),
            termination: Termination::MaxIters,
            iterations: 0,
            budget_excess: T::zero(),
            box_excess: T::zero(),
        }
    }

    pub(crate) fn observe(&mut self, set: &FeasibleSet<T>, a: &[T]) {
        let r = set.residuals(a);
        self.budget_excess = self.budget_excess.max(r.budget_excess);
        self.box_excess = self.box_excess.max(r.box_excess);
    }

    pub(crate) fn finish(&mut self, set: &FeasibleSet<T>, a: Vec<T>, objective: T) {
        self.spend = set.spend(&a);
        self.participation = a;
        self.objective = objective;
    }

    /// Report for a point computed in one shot (heuristic, BIM).
    pub fn for_point<O: Objective<T>>(
        solver: &str,
        obj: &O,
        set: &FeasibleSet<T>,
        a: Vec<T>,
        elapsed_ms: f64,
    ) -> Self {
        let mut report = Self::new(solver, a.len());
        report.observe(set, &a);
        let value = obj.value(&a);
        report.objective_trace.push(value);
        report.iteration_ms.push(elapsed_ms);
        report.termination = Termination::GapBelowTol;
        report.finish(set, a, value);
        report
    }

    pub fn total_ms(&self) -> f64 {
        self.iteration_ms.iter().sum()
    }
}

pub(crate) fn check_init<T: Scalar>(set: &FeasibleSet<T>, init: &Init<T>) -> Result<Vec<T>> {
    match init {
        Init::Zeros => Ok(vec![T::zero(); set.dim()]),
        Init::Given(a) => {
            check_len(set.dim(), a.len())?;
            let r = set.residuals(a);
            let tol = T::tol(FEASIBILITY_TOL, set.budget);
            if r.box_excess > tol || r.budget_excess > tol {
                return Err(BpoError::Infeasible(format!(
                    "initial point: box excess {}, budget excess {}",
                    r.box_excess, r.budget_excess
                )));
            }
            Ok(a.clone())
        }
    }
}

/// Step size for iteration `t`.
///
/// `segment` is required by [`StepRule::LineSearch`]; `curvature` by
/// [`StepRule::GapOverCurvature`].
pub fn step_size<T: Scalar>(
    rule: StepRule,
    t: usize,
    gap: T,
    curvature: Option<T>,
    segment: Option<&dyn Fn(T) -> T>,
) -> Result<T> {
    match rule {
        StepRule::Harmonic => Ok(T::lit(2.0) / T::lit(t as f64 + 2.0)),
        StepRule::GapOverCurvature => {
            let c = curvature.ok_or_else(|| {
                BpoError::InvalidParameter("gap-over-curvature step needs a curvature".into())
            })?;
            if !(c > T::zero()) {
                return Err(BpoError::InvalidParameter(format!(
                    "curvature must be positive (got {c})"
                )));
            }
            Ok((gap.max(T::zero()) / c).min(T::one()))
        }
        StepRule::LineSearch => {
            let f = segment
                .ok_or_else(|| BpoError::InvalidParameter("line search needs a segment".into()))?;
            Ok(golden_section_max(f, T::tol(LINE_SEARCH_TOL, T::one())))
        }
    }
}

/// Maximizer of a concave `f` on `[0, 1]`; the endpoints win ties.
pub fn golden_section_max<T: Scalar>(f: &dyn Fn(T) -> T, tol: T) -> T {
    let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let mut best = (lo + hi) / T::lit(2.0);
    let mut fbest = f(best);
    let f1 = f(T::one());
    if f1 >= fbest {
        best = T::one();
        fbest = f1;
    }
    if f(T::zero()) > fbest {
        best = T::zero();
    }
    best
}

/// Frank-Wolfe on the single-platform campaign objective.
pub fn solve_fw<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    cfg: &SolverConfig<T>,
) -> Result<SolveReport<T>> {
    let obj = CampaignObjective::new(inst, *spec)?;
    let oracle = LinearOracle::new(&inst.feasible_set())?;
    frank_wolfe(&obj, &oracle, cfg)
}

/// Frank-Wolfe for any [`Objective`] over the oracle's polytope.
pub fn frank_wolfe<T: Scalar, O: Objective<T>>(
    obj: &O,
    oracle: &LinearOracle<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveReport<T>> {
    cfg.validate()?;
    let set = oracle.set();
    check_len(set.dim(), obj.dim())?;
    let mut a = check_init(set, &cfg.init)?;
    let curvature = match (cfg.step_rule, cfg.curvature) {
        (StepRule::GapOverCurvature, Some(c)) => Some(T::lit(c)),
        (StepRule::GapOverCurvature, None) => Some(
            estimate_curvature_with(obj, oracle, DEFAULT_CURVATURE_PROBES, cfg.seed)?
                * T::lit(CURVATURE_SAFETY),
        ),
        _ => None,
    };

    let mut report = SolveReport::new("fw", a.len());
    report.observe(set, &a);
    let mut grad = vec![T::zero(); a.len()];
    let mut s = vec![T::zero(); a.len()];
    let tol = T::lit(cfg.gap_tolerance);
    let mut t = 0;
    let mut value;
    loop {
        let started = Instant::now();
        value = obj.value_and_gradient(&a, &mut grad);
        oracle.solve_into(&grad, &mut s)?;
        let gap = fw_gap(&grad, &s, &a)?;
        report.objective_trace.push(value);
        report.gap_trace.push(gap);
        if gap < tol {
            report.termination = Termination::GapBelowTol;
            break;
        }
        if t == cfg.max_iters {
            report.termination = Termination::MaxIters;
            break;
        }
        let gamma = match cfg.step_rule {
            StepRule::LineSearch => {
                let seg = obj.segment(&a, &s);
                step_size(cfg.step_rule, t, gap, curvature, Some(&*seg))?
            }
            rule => step_size(rule, t, gap, curvature, None)?,
        };
        let keep = T::one() - gamma;
        for (x, &y) in a.iter_mut().zip(&s) {
            *x = keep * *x + gamma * y;
        }
        report.observe(set, &a);
        report.step_sizes.push(gamma);
        report
            .iteration_ms
            .push(started.elapsed().as_secs_f64() * 1e3);
        t += 1;
    }
    report.iterations = t;
    report.finish(set, a, value);
    Ok(report)
}

/// Empirical curvature of the campaign objective over its feasible set.
pub fn estimate_curvature<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    probes: usize,
    seed: u64,
) -> Result<T> {
    let obj = CampaignObjective::new(inst, *spec)?;
    let oracle = LinearOracle::new(&inst.feasible_set())?;
    estimate_curvature_with(&obj, &oracle, probes, seed)
}

/// Largest `(2/g^2) (U(a) + g <grad U(a), s - a> - U(a + g (s - a)))` over
/// random feasible pairs and `g in {1/4, 1/2, 1}`, floored at
/// [`CURVATURE_FLOOR`]. Base points mix random oracle vertices (every
/// fourth probe uses the origin); targets are oracle vertices.
pub fn estimate_curvature_with<T: Scalar, O: Objective<T>>(
    obj: &O,
    oracle: &LinearOracle<T>,
    probes: usize,
    seed: u64,
) -> Result<T> {
    let dim = obj.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertex = |rng: &mut ChaCha8Rng| -> Result<Vec<T>> {
        let k: Vec<T> = (0..dim).map(|_| T::lit(rng.gen_range(-0.5..1.0))).collect();
        oracle.solve(&k)
    };
    let mut best = T::lit(CURVATURE_FLOOR);
    let mut grad = vec![T::zero(); dim];
    for p in 0..probes {
        let a = if p % 4 == 0 {
            vec![T::zero(); dim]
        } else {
            let (v, w) = (vertex(&mut rng)?, vertex(&mut rng)?);
            let theta = T::lit(rng.gen_range(0.0..1.0));
            v.iter()
                .zip(&w)
                .map(|(&x, &y)| theta * x + (T::one() - theta) * y)
                .collect()
        };
        let s = vertex(&mut rng)?;
        let ua = obj.value_and_gradient(&a, &mut grad);
        let slope = fw_gap(&grad, &s, &a)?;
        let seg = obj.segment(&a, &s);
        for gamma in [0.25, 0.5, 1.0] {
            let g = T::lit(gamma);
            let q = T::lit(2.0 / (gamma * gamma)) * (ua + g * slope - seg(g));
            best = best.max(q);
        }
    }
    Ok(best)
}

/// Greedy fill by aggregate influence per unit cost: one oracle call with
/// `K_k = sum_{j != i, k} p[k -> j]`. Exact for linear utilities.
pub fn heuristic_rule_of_thumb<T: Scalar>(
    inst: &CampaignInstance<T>,
) -> Result<ParticipationVector<T>> {
    let oracle = LinearOracle::new(&inst.feasible_set())?;
    Ok(ParticipationVector(oracle.solve(&influence_scores(inst))?))
}
