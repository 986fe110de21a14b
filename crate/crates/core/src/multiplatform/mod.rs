//! Campaigns spanning several platforms and content types.
//!
//! Every `(platform l, content q)` pair is a *block*: its own rates, prices,
//! caps and impression ratios over one shared user population with one
//! advertiser. A viewer's potential on platform `l` is the content-weighted
//! sum `w_l(j) = sum_q zeta[l][q] * w_{l,q}(j)`. The objective is either
//! `sum_l sigma_l sum_{j != i} U(w_l(j))` (one utility per platform) or
//! `sum_{j != i} U(sum_l w_l(j))` (one shared utility). Flattening the
//! blocks gives a problem with the single-platform polytope, so the linear
//! oracle and Frank-Wolfe apply unchanged.

mod io;

pub use io::{load_mp, read_mp, save_mp, write_mp, MP_HEADER};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, BpoError, Result};
use crate::fw::{frank_wolfe, Objective, SolveReport, SolverConfig};
use crate::model::{accumulate_potentials, CampaignInstance, NORMALIZATION_SLACK};
use crate::oracle::{FeasibleSet, LinearOracle};
use crate::scalar::Scalar;
use crate::utility::{gradient_from_potentials, UtilitySpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpVariant {
    #[default]
    PerPlatform,
    Shared,
}

impl fmt::Display for MpVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MpVariant::PerPlatform => "per-platform",
            MpVariant::Shared => "shared",
        })
    }
}

impl FromStr for MpVariant {
    type Err = BpoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-platform" => Ok(MpVariant::PerPlatform),
            "shared" => Ok(MpVariant::Shared),
            _ => Err(BpoError::InvalidParameter(format!(
                "unknown variant `{s}` (expected per-platform or shared)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPlatformInstance<T> {
    pub n_platforms: usize,
    pub n_contents: usize,
    /// Block `l * n_contents + q`; every block has the same users and
    /// advertiser. Their budgets are overwritten with `budget`.
    pub blocks: Vec<CampaignInstance<T>>,
    /// Content weights, indexed like `blocks`.
    pub zeta: Vec<T>,
    /// Platform weights.
    pub sigma: Vec<T>,
    pub budget: T,
    pub variant: MpVariant,
}

impl<T: Scalar> MultiPlatformInstance<T> {
    pub fn new(
        n_platforms: usize,
        n_contents: usize,
        mut blocks: Vec<CampaignInstance<T>>,
        zeta: Vec<T>,
        sigma: Vec<T>,
        budget: T,
        variant: MpVariant,
    ) -> Result<Self> {
        if n_platforms == 0 || n_contents == 0 {
            return Err(BpoError::Empty("no platforms or contents".into()));
        }
        check_len(n_platforms * n_contents, blocks.len())?;
        check_len(blocks.len(), zeta.len())?;
        check_len(n_platforms, sigma.len())?;
        let (n, i) = (blocks[0].n_users(), blocks[0].advertiser);
        if blocks.iter().any(|b| b.n_users() != n || b.advertiser != i) {
            return Err(BpoError::InvalidParameter(
                "blocks must share users and advertiser".into(),
            ));
        }
        if zeta
            .iter()
            .chain(&sigma)
            .any(|&w| !(w >= T::zero()) || !w.is_finite())
        {
            return Err(BpoError::InvalidParameter(
                "content and platform weights must be finite and nonnegative".into(),
            ));
        }
        if !(budget >= T::zero()) || !budget.is_finite() {
            return Err(BpoError::InvalidParameter(
                "budget must be finite and nonnegative".into(),
            ));
        }
        blocks.iter_mut().for_each(|b| b.budget = budget);
        Ok(Self {
            n_platforms,
            n_contents,
            blocks,
            zeta,
            sigma,
            budget,
            variant,
        })
    }

    /// Single content per platform over disjoint user populations. The
    /// platforms' advertisers are identified with one global advertiser
    /// (user 0); the other users of platform `l` follow those of `l - 1`.
    pub fn disjoint_union(
        platforms: &[CampaignInstance<T>],
        sigma: Vec<T>,
        budget: T,
        variant: MpVariant,
    ) -> Result<Self> {
        if platforms.is_empty() {
            return Err(BpoError::Empty("no platforms".into()));
        }
        let n = 1 + platforms.iter().map(|p| p.n_users() - 1).sum::<usize>();
        let mut offset = 1;
        let mut blocks = Vec::with_capacity(platforms.len());
        for p in platforms {
            let global = |u: usize| match p.index_of(u) {
                None => 0,
                Some(k) => offset + k,
            };
            let triplets = p
                .impressions
                .entries()
                .map(|(s, v, x)| (global(s), global(v), x));
            let m = crate::model::ImpressionMatrix::from_triplets(n, triplets)?;
            let (mut rates, mut costs, mut caps) =
                (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
            for u in 0..p.n_users() {
                let g = global(u);
                rates[g] = p.rates[u];
                costs[g] = p.costs[u];
                caps[g] = p.caps[u];
            }
            blocks.push(CampaignInstance::new(m, 0, rates, costs, caps, budget)?);
            offset += p.n_users() - 1;
        }
        let l = platforms.len();
        Self::new(l, 1, blocks, vec![T::one(); l], sigma, budget, variant)
    }

    pub fn n_users(&self) -> usize {
        self.blocks[0].n_users()
    }

    pub fn advertiser(&self) -> usize {
        self.blocks[0].advertiser
    }

    pub fn block(&self, l: usize, q: usize) -> &CampaignInstance<T> {
        &self.blocks[l * self.n_contents + q]
    }

    pub fn dim(&self) -> usize {
        self.blocks.len() * (self.n_users() - 1)
    }

    /// `(platform, viewer, total)` for every platform row whose summed
    /// impression ratios exceed one.
    pub fn normalization_violations(&self) -> Vec<(usize, usize, T)> {
        let slack = T::one() + T::lit(NORMALIZATION_SLACK);
        let mut out = Vec::new();
        for l in 0..self.n_platforms {
            let mut col = vec![T::zero(); self.n_users()];
            for q in 0..self.n_contents {
                for (j, s) in self
                    .block(l, q)
                    .impressions
                    .column_sums()
                    .into_iter()
                    .enumerate()
                {
                    col[j] = col[j] + s;
                }
            }
            out.extend(
                col.into_iter()
                    .enumerate()
                    .filter(|&(_, s)| s > slack)
                    .map(|(j, s)| (l, j, s)),
            );
        }
        out
    }
}

/// Uniform content weights `1 / Q`.
pub fn uniform_zeta<T: Scalar>(n_platforms: usize, n_contents: usize) -> Vec<T> {
    vec![T::one() / T::lit(n_contents as f64); n_platforms * n_contents]
}

/// Platform weights proportional to a per-platform price level.
pub fn cost_proportional_sigma<T: Scalar>(prices: &[T]) -> Vec<T> {
    let total = prices.iter().fold(T::zero(), |s, &c| s + c);
    prices.iter().map(|&c| c / total).collect()
}

/// The flattened decision space: coordinate `b * (N - 1) + k` is decision
/// coordinate `k` of block `b = l * Q + q`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatProblem<T> {
    pub set: FeasibleSet<T>,
    pub n_platforms: usize,
    pub n_contents: usize,
    pub block_dim: usize,
}

impl<T: Scalar> FlatProblem<T> {
    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn flat_index(&self, l: usize, q: usize, k: usize) -> usize {
        (l * self.n_contents + q) * self.block_dim + k
    }

    /// `(platform, content, block coordinate)` of flat coordinate `x`.
    pub fn coordinate(&self, x: usize) -> (usize, usize, usize) {
        let (b, k) = (x / self.block_dim, x % self.block_dim);
        (b / self.n_contents, b % self.n_contents, k)
    }

    /// Splits a flat vector into per-block decision vectors.
    pub fn unflatten(&self, a: &[T]) -> Result<Vec<Vec<T>>> {
        check_len(self.dim(), a.len())?;
        Ok(a.chunks(self.block_dim.max(1)).map(<[T]>::to_vec).collect())
    }

    pub fn flatten_blocks(&self, blocks: &[Vec<T>]) -> Result<Vec<T>> {
        check_len(self.n_platforms * self.n_contents, blocks.len())?;
        let mut out = Vec::with_capacity(self.dim());
        for b in blocks {
            check_len(self.block_dim, b.len())?;
            out.extend_from_slice(b);
        }
        Ok(out)
    }

    /// Spend `sum_{q,n} rho a` on each platform.
    pub fn platform_spend(&self, a: &[T]) -> Result<Vec<T>> {
        check_len(self.dim(), a.len())?;
        let width = self.n_contents * self.block_dim;
        Ok((0..self.n_platforms)
            .map(|l| {
                let r = l * width..(l + 1) * width;
                a[r.clone()]
                    .iter()
                    .zip(&self.set.unit_costs[r])
                    .fold(T::zero(), |s, (&x, &rho)| s + x * rho)
            })
            .collect())
    }
}

pub fn flatten<T: Scalar>(mp: &MultiPlatformInstance<T>) -> FlatProblem<T> {
    let mut unit_costs = Vec::with_capacity(mp.dim());
    let mut caps = Vec::with_capacity(mp.dim());
    for b in &mp.blocks {
        let s = b.feasible_set();
        unit_costs.extend(s.unit_costs);
        caps.extend(s.caps);
    }
    FlatProblem {
        set: FeasibleSet {
            unit_costs,
            caps,
            budget: mp.budget,
        },
        n_platforms: mp.n_platforms,
        n_contents: mp.n_contents,
        block_dim: mp.n_users() - 1,
    }
}

fn platform_potentials<T: Scalar>(mp: &MultiPlatformInstance<T>, a: &[T]) -> Vec<Vec<T>> {
    let (n, d) = (mp.n_users(), mp.n_users() - 1);
    let mut out = vec![vec![T::zero(); n]; mp.n_platforms];
    let mut tmp = vec![T::zero(); n];
    for (b, block) in mp.blocks.iter().enumerate() {
        let z = mp.zeta[b];
        if z == T::zero() {
            continue;
        }
        tmp.iter_mut().for_each(|x| *x = T::zero());
        accumulate_potentials(
            block,
            &a[b * d..(b + 1) * d],
            block.advertiser_participation(),
            &mut tmp,
        );
        let row = &mut out[b / mp.n_contents];
        for (w, &x) in row.iter_mut().zip(&tmp) {
            *w = *w + z * x;
        }
    }
    out
}

/// Potentials `w_l(j)`, indexed `[platform][viewer]`. The advertiser's own
/// posts enter at their caps.
pub fn mp_potentials<T: Scalar>(mp: &MultiPlatformInstance<T>, a: &[T]) -> Result<Vec<Vec<T>>> {
    check_len(mp.dim(), a.len())?;
    Ok(platform_potentials(mp, a))
}

/// Objective value and flat gradient.
pub fn mp_objective_and_gradient<T: Scalar>(
    mp: &MultiPlatformInstance<T>,
    spec: &UtilitySpec,
    a: &[T],
) -> Result<(T, Vec<T>)> {
    let obj = MpObjective::new(mp, *spec)?;
    check_len(mp.dim(), a.len())?;
    let mut grad = vec![T::zero(); mp.dim()];
    let value = obj.value_and_gradient(a, &mut grad);
    Ok((value, grad))
}

/// Per-platform utility `sum_{j != i} sigma_l U(w_l(j))`.
pub fn platform_roi<T: Scalar>(
    mp: &MultiPlatformInstance<T>,
    spec: &UtilitySpec,
    a: &[T],
) -> Result<Vec<T>> {
    spec.validate()?;
    let omega = mp_potentials(mp, a)?;
    let i = mp.advertiser();
    omega
        .iter()
        .zip(&mp.sigma)
        .map(|(row, &s)| {
            let mut total = T::zero();
            for (j, &w) in row.iter().enumerate() {
                if j != i {
                    total = total + spec.eval(w)?;
                }
            }
            Ok(s * total)
        })
        .collect()
}

pub struct MpObjective<'a, T> {
    mp: &'a MultiPlatformInstance<T>,
    spec: UtilitySpec,
}

impl<'a, T: Scalar> MpObjective<'a, T> {
    pub fn new(mp: &'a MultiPlatformInstance<T>, spec: UtilitySpec) -> Result<Self> {
        spec.require_differentiable()?;
        Ok(Self { mp, spec })
    }

    fn sum_viewers(&self, row: &[T]) -> T {
        let i = self.mp.advertiser();
        row.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(T::zero(), |acc, (_, &w)| acc + self.spec.value(w))
    }

    fn shared(omega: &[Vec<T>]) -> Vec<T> {
        let mut total = omega[0].clone();
        for row in &omega[1..] {
            for (t, &w) in total.iter_mut().zip(row) {
                *t = *t + w;
            }
        }
        total
    }

    fn total(&self, omega: &[Vec<T>]) -> T {
        match self.mp.variant {
            MpVariant::PerPlatform => omega
                .iter()
                .zip(&self.mp.sigma)
                .fold(T::zero(), |acc, (row, &s)| acc + s * self.sum_viewers(row)),
            MpVariant::Shared => self.sum_viewers(&Self::shared(omega)),
        }
    }
}

impl<T: Scalar> Objective<T> for MpObjective<'_, T> {
    fn dim(&self) -> usize {
        self.mp.dim()
    }

    fn value(&self, a: &[T]) -> T {
        self.total(&platform_potentials(self.mp, a))
    }

    fn value_and_gradient(&self, a: &[T], grad: &mut [T]) -> T {
        let mp = self.mp;
        let omega = platform_potentials(mp, a);
        let shared = (mp.variant == MpVariant::Shared).then(|| Self::shared(&omega));
        let d = mp.n_users() - 1;
        for (b, block) in mp.blocks.iter().enumerate() {
            let l = b / mp.n_contents;
            let out = &mut grad[b * d..(b + 1) * d];
            let (at, weight) = match &shared {
                Some(total) => (total, mp.zeta[b]),
                None => (&omega[l], mp.sigma[l] * mp.zeta[b]),
            };
            gradient_from_potentials(block, &self.spec, at, out);
            if weight != T::one() {
                out.iter_mut().for_each(|g| *g = *g * weight);
            }
        }
        self.total(&omega)
    }

    fn segment<'s>(&'s self, a: &[T], s: &[T]) -> Box<dyn Fn(T) -> T + 's> {
        let wa = platform_potentials(self.mp, a);
        let ws = platform_potentials(self.mp, s);
        Box::new(move |gamma| {
            let keep = T::one() - gamma;
            let mix: Vec<Vec<T>> = wa
                .iter()
                .zip(&ws)
                .map(|(x, y)| {
                    x.iter()
                        .zip(y)
                        .map(|(&x, &y)| keep * x + gamma * y)
                        .collect()
                })
                .collect();
            self.total(&mix)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpReport<T> {
    /// Frank-Wolfe report over the flat coordinates.
    pub report: SolveReport<T>,
    pub platform_spend: Vec<T>,
    /// `sum_{j != i} sigma_l U(w_l(j))` per platform.
    pub platform_roi: Vec<T>,
    /// With two platforms, the ROI of platform 0 over that of platform 1.
    pub roi_ratio: Option<T>,
}

pub fn solve_mp<T: Scalar>(
    mp: &MultiPlatformInstance<T>,
    spec: &UtilitySpec,
    cfg: &SolverConfig<T>,
) -> Result<MpReport<T>> {
    let flat = flatten(mp);
    let obj = MpObjective::new(mp, *spec)?;
    let oracle = LinearOracle::new(&flat.set)?;
    let mut report = frank_wolfe(&obj, &oracle, cfg)?;
    report.solver = "fw-mp".into();
    let a = &report.participation;
    let platform_spend = flat.platform_spend(a)?;
    let platform_roi = platform_roi(mp, spec, a)?;
    let roi_ratio = (mp.n_platforms == 2).then(|| platform_roi[0] / platform_roi[1]);
    Ok(MpReport {
        report,
        platform_spend,
        platform_roi,
        roi_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fw::solve_fw;
    use crate::model::ImpressionMatrix;
    use crate::utility::value_and_gradient;

    fn single() -> CampaignInstance<f64> {
        let m = ImpressionMatrix::from_triplets(
            4,
            [
                (1, 2, 0.3),
                (1, 3, 0.2),
                (2, 3, 0.5),
                (3, 1, 0.4),
                (0, 1, 0.2),
                (2, 1, 0.1),
            ],
        )
        .unwrap();
        CampaignInstance::with_unit_caps(
            m,
            0,
            vec![1.0, 1.0, 2.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.5],
            1.2,
        )
        .unwrap()
    }

    fn lift(inst: &CampaignInstance<f64>, variant: MpVariant) -> MultiPlatformInstance<f64> {
        MultiPlatformInstance::new(
            1,
            1,
            vec![inst.clone()],
            vec![1.0],
            vec![1.0],
            inst.budget,
            variant,
        )
        .unwrap()
    }

    #[test]
    fn one_block_reduces_to_single_platform() {
        let inst = single();
        let spec = UtilitySpec::Log { delta: 3.0 };
        let a = [0.2, 0.7, 0.1];
        let mut g1 = vec![0.0; 3];
        let v1 = value_and_gradient(&inst, &spec, &a, &mut g1).unwrap();
        for variant in [MpVariant::PerPlatform, MpVariant::Shared] {
            let mp = lift(&inst, variant);
            assert_eq!(flatten(&mp).set, inst.feasible_set());
            let (v2, g2) = mp_objective_and_gradient(&mp, &spec, &a).unwrap();
            assert!((v1 - v2).abs() <= 1e-12);
            assert!(g1.iter().zip(&g2).all(|(x, y)| (x - y).abs() <= 1e-12));
        }
        let fw = solve_fw(&inst, &spec, &SolverConfig::default()).unwrap();
        let mp = solve_mp(
            &lift(&inst, MpVariant::PerPlatform),
            &spec,
            &SolverConfig::default(),
        )
        .unwrap();
        for (x, y) in fw.participation.iter().zip(&mp.report.participation) {
            assert!((x - y).abs() <= 1e-9);
        }
        assert!(mp.roi_ratio.is_none());
    }

    #[test]
    fn flat_layout() {
        let inst = CampaignInstance::with_unit_caps(
            ImpressionMatrix::empty(5),
            2,
            vec![1.0; 5],
            vec![1.0; 5],
            1.0,
        )
        .unwrap();
        let mp = MultiPlatformInstance::new(
            2,
            3,
            vec![inst; 6],
            uniform_zeta(2, 3),
            vec![1.0, 1.0],
            1.0,
            MpVariant::PerPlatform,
        )
        .unwrap();
        let flat = flatten(&mp);
        assert_eq!(flat.dim(), 24);
        assert_eq!(flat.coordinate(flat.flat_index(1, 2, 3)), (1, 2, 3));
        let a: Vec<f64> = (0..24).map(|x| x as f64).collect();
        assert_eq!(
            flat.flatten_blocks(&flat.unflatten(&a).unwrap()).unwrap(),
            a
        );
    }

    #[test]
    fn weighted_single_entry_potential() {
        let m = ImpressionMatrix::from_triplets(3, [(1, 2, 0.4)]).unwrap();
        let b = CampaignInstance::with_unit_caps(m, 0, vec![1.0; 3], vec![1.0; 3], 1.0).unwrap();
        let mp = MultiPlatformInstance::new(
            1,
            1,
            vec![b],
            vec![0.5],
            vec![1.0],
            1.0,
            MpVariant::PerPlatform,
        )
        .unwrap();
        assert_eq!(
            mp_potentials(&mp, &[1.0, 0.0]).unwrap(),
            vec![vec![0.0, 0.0, 0.2]]
        );
        assert_eq!(mp_potentials(&mp, &[0.0, 0.0]).unwrap(), vec![vec![0.0; 3]]);
    }

    #[test]
    fn disjoint_union_merges_advertisers() {
        let a = single();
        let b = CampaignInstance::with_unit_caps(
            ImpressionMatrix::from_triplets(2, [(1, 0, 1.0), (0, 1, 0.5)]).unwrap(),
            1,
            vec![1.0, 2.0],
            vec![3.0, 1.0],
            1.0,
        )
        .unwrap();
        let mp = MultiPlatformInstance::disjoint_union(
            &[a, b],
            vec![0.5, 0.5],
            2.0,
            MpVariant::PerPlatform,
        )
        .unwrap();
        assert_eq!(mp.n_users(), 5);
        // platform 1's user 0 becomes global user 4 and sees the advertiser
        let omega = mp_potentials(&mp, &[0.0; 8]).unwrap();
        assert_eq!(omega[1], vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let flat = flatten(&mp);
        assert_eq!(flat.set.unit_costs[7], 3.0);
        assert!(mp.normalization_violations().is_empty());
    }

    #[test]
    fn variant_round_trip() {
        for v in [MpVariant::PerPlatform, MpVariant::Shared] {
            assert_eq!(v.to_string().parse::<MpVariant>().unwrap(), v);
        }
        assert!("both".parse::<MpVariant>().is_err());
        assert_eq!(cost_proportional_sigma(&[1.0, 3.0]), vec![0.25, 0.75]);
    }
}
