//! Single-platform campaign instances.
//!
//! Users are indexed `0..N`. One of them is the advertiser, whose
//! participation is pinned to its cap; the remaining `N - 1` users form the
//! decision vector, ordered by ascending user id.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, BpoError, Result};
use crate::oracle::FeasibleSet;
use crate::scalar::Scalar;

/// Slack allowed on per-viewer column sums of impression ratios.
pub const NORMALIZATION_SLACK: f64 = 1e-6;
/// Absolute slack on budget and box constraints.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Participation above this counts as "selected".
pub const SELECTION_TOL: f64 = 1e-9;

/// Sparse matrix of average impression ratios `p[source -> viewer]`,
/// stored grouped by source with viewers ascending inside each group.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpressionMatrix<T> {
    n_users: usize,
    offsets: Vec<usize>,
    viewers: Vec<u32>,
    values: Vec<T>,
}

impl<T: Scalar> ImpressionMatrix<T> {
    /// Builds the matrix from `(source, viewer, value)` triplets.
    ///
    /// Self-impressions and exact zeros are dropped. Values are stored as
    /// given, so out-of-range entries survive for [`validate_instance`] to
    /// report.
    pub fn from_triplets<I>(n_users: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut items: Vec<(usize, usize, T)> = Vec::new();
        for (source, viewer, value) in triplets {
            if source >= n_users || viewer >= n_users {
                return Err(BpoError::InvalidParameter(format!(
                    "impression ({source}, {viewer}) outside 0..{n_users}"
                )));
            }
            if source == viewer || value == T::zero() {
                continue;
            }
            items.push((source, viewer, value));
        }
        // stable: duplicates keep input order
        items.sort_by_key(|&(s, v, _)| (s, v));

        let mut offsets = vec![0usize; n_users + 1];
        for &(s, _, _) in &items {
            offsets[s + 1] += 1;
        }
        for k in 0..n_users {
            offsets[k + 1] += offsets[k];
        }
        let viewers = items.iter().map(|&(_, v, _)| v as u32).collect();
        let values = items.iter().map(|&(_, _, p)| p).collect();
        Ok(Self {
            n_users,
            offsets,
            viewers,
            values,
        })
    }

    pub fn empty(n_users: usize) -> Self {
        Self {
            n_users,
            offsets: vec![0; n_users + 1],
            viewers: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// Number of stored (non-zero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries originating at `source`, as `(viewer, value)`.
    pub fn by_source(&self, source: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.offsets[source]..self.offsets[source + 1];
        self.viewers[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&v, &p)| (v as usize, p))
    }

    /// All entries as `(source, viewer, value)`, grouped by source.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_users).flat_map(move |s| self.by_source(s).map(move |(v, p)| (s, v, p)))
    }

    /// Sum of outgoing ratios of `source`, skipping the viewer `skip`.
    pub fn source_sum_excluding(&self, source: usize, skip: usize) -> T {
        self.by_source(source)
            .filter(|&(v, _)| v != skip)
            .fold(T::zero(), |acc, (_, p)| acc + p)
    }

    /// Per-viewer column sums `sum_n p[n -> j]`.
    pub fn column_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.n_users];
        for (_, v, p) in self.entries() {
            sums[v] = sums[v] + p;
        }
        sums
    }

    /// Converts the stored values to another scalar type.
    pub fn cast<U: Scalar>(&self) -> ImpressionMatrix<U> {
        ImpressionMatrix {
            n_users: self.n_users,
            offsets: self.offsets.clone(),
            viewers: self.viewers.clone(),
            values: self.values.iter().map(|p| U::lit(p.as_f64())).collect(),
        }
    }
}

/// A single-platform budgeted campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct CampaignInstance<T> {
    pub impressions: ImpressionMatrix<T>,
    pub advertiser: usize,
    /// Posts per time window, per user.
    pub rates: Vec<T>,
    /// Money per post, per user.
    pub costs: Vec<T>,
    /// Maximum participation ratio, per user.
    pub caps: Vec<T>,
    pub budget: T,
}

impl<T: Scalar> CampaignInstance<T> {
    /// Checks structural consistency only; value ranges are reported by
    /// [`validate_instance`].
    pub fn new(
        impressions: ImpressionMatrix<T>,
        advertiser: usize,
        rates: Vec<T>,
        costs: Vec<T>,
        caps: Vec<T>,
        budget: T,
    ) -> Result<Self> {
        let n = impressions.n_users();
        if n == 0 {
            return Err(BpoError::Empty("instance without users".into()));
        }
        if advertiser >= n {
            return Err(BpoError::InvalidParameter(format!(
                "advertiser {advertiser} outside 0..{n}"
            )));
        }
        check_len(n, rates.len())?;
        check_len(n, costs.len())?;
        check_len(n, caps.len())?;
        Ok(Self {
            impressions,
            advertiser,
            rates,
            costs,
            caps,
            budget,
        })
    }

    /// Instance with unit caps.
    pub fn with_unit_caps(
        impressions: ImpressionMatrix<T>,
        advertiser: usize,
        rates: Vec<T>,
        costs: Vec<T>,
        budget: T,
    ) -> Result<Self> {
        let caps = vec![T::one(); impressions.n_users()];
        Self::new(impressions, advertiser, rates, costs, caps, budget)
    }

    pub fn n_users(&self) -> usize {
        self.impressions.n_users()
    }

    /// Length of the decision vector, `N - 1`.
    pub fn dim(&self) -> usize {
        self.n_users() - 1
    }

    /// User id behind decision coordinate `k`.
    pub fn user_of(&self, k: usize) -> usize {
        if k < self.advertiser {
            k
        } else {
            k + 1
        }
    }

    /// Decision coordinate of `user`, `None` for the advertiser.
    pub fn index_of(&self, user: usize) -> Option<usize> {
        match user.cmp(&self.advertiser) {
            std::cmp::Ordering::Less => Some(user),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(user - 1),
        }
    }

    /// Fixed participation of the advertiser.
    pub fn advertiser_participation(&self) -> T {
        self.caps[self.advertiser]
    }

    /// Money per unit of participation of decision coordinate `k`.
    pub fn unit_cost(&self, k: usize) -> T {
        let u = self.user_of(k);
        self.costs[u] * self.rates[u]
    }

    /// Budget/box structure over the decision coordinates.
    pub fn feasible_set(&self) -> FeasibleSet<T> {
        let dim = self.dim();
        FeasibleSet {
            unit_costs: (0..dim).map(|k| self.unit_cost(k)).collect(),
            caps: (0..dim).map(|k| self.caps[self.user_of(k)]).collect(),
            budget: self.budget,
        }
    }

    pub fn cast<U: Scalar>(&self) -> CampaignInstance<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        CampaignInstance {
            impressions: self.impressions.cast(),
            advertiser: self.advertiser,
            rates: conv(&self.rates),
            costs: conv(&self.costs),
            caps: conv(&self.caps),
            budget: U::lit(self.budget.as_f64()),
        }
    }
}

/// Decision vector: participation of every non-advertiser user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipationVector<T>(pub Vec<T>);

impl<T: Scalar> ParticipationVector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fails unless `0 <= a <= r` and the budget holds within [`FEASIBILITY_TOL`].
    pub fn check_feasible(&self, inst: &CampaignInstance<T>) -> Result<()> {
        check_len(inst.dim(), self.len())?;
        let set = inst.feasible_set();
        let r = set.residuals(&self.0);
        let tol = T::tol(FEASIBILITY_TOL, inst.budget);
        if r.box_excess > tol || r.budget_excess > tol {
            return Err(BpoError::Infeasible(format!(
                "box excess {}, budget excess {}",
                r.box_excess, r.budget_excess
            )));
        }
        Ok(())
    }
}

impl<T> From<Vec<T>> for ParticipationVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

/// Influencer tier from follower-count deciles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Nano,
    Micro,
    Macro,
    NonInfluencer,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCounts {
    pub nano: usize,
    pub micro: usize,
    pub macro_: usize,
}

impl TierCounts {
    pub fn total(&self) -> usize {
        self.nano + self.micro + self.macro_
    }
}

/// Campaign metrics evaluated at a participation vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total_impressions: f64,
    pub total_sales: f64,
    pub total_reach: usize,
    pub selected: TierCounts,
    pub spend: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    ValueOutOfRange {
        source: usize,
        viewer: usize,
        value: f64,
    },
    DuplicateEntry {
        source: usize,
        viewer: usize,
    },
    ColumnNormalizationExceeded {
        viewer: usize,
        sum: f64,
    },
    NegativeRate {
        user: usize,
        value: f64,
    },
    NegativeCost {
        user: usize,
        value: f64,
    },
    CapOutOfRange {
        user: usize,
        value: f64,
    },
    NegativeBudget(f64),
    NonFinite {
        what: &'static str,
        index: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ValueOutOfRange {
                source,
                viewer,
                value,
            } => write!(
                f,
                "entry ({source} -> {viewer}): value out of [0,1] ({value})"
            ),
            Violation::DuplicateEntry { source, viewer } => {
                write!(f, "entry ({source} -> {viewer}): duplicate entry")
            }
            Violation::ColumnNormalizationExceeded { viewer, sum } => write!(
                f,
                "viewer {viewer}: column normalization exceeded (sum {sum})"
            ),
            Violation::NegativeRate { user, value } => {
                write!(f, "user {user}: negative posting rate ({value})")
            }
            Violation::NegativeCost { user, value } => {
                write!(f, "user {user}: negative cost per post ({value})")
            }
            Violation::CapOutOfRange { user, value } => {
                write!(f, "user {user}: cap out of [0,1] ({value})")
            }
            Violation::NegativeBudget(b) => write!(f, "budget: negative ({b})"),
            Violation::NonFinite { what, index } => write!(f, "{what} {index}: not finite"),
        }
    }
}

/// Diagnostics for an instance. `warnings` lists viewers whose impression
/// ratios sum to less than one, which is accepted for estimated matrices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Validation {
    pub violations: Vec<Violation>,
    pub subnormal_viewers: Vec<(usize, f64)>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_instance<T: Scalar>(inst: &CampaignInstance<T>) -> Validation {
    let mut out = Validation::default();
    let m = &inst.impressions;
    let mut last: Option<(usize, usize)> = None;
    for (s, v, p) in m.entries() {
        if !p.is_finite() {
            out.violations.push(Violation::NonFinite {
                what: "impression from user",
                index: s,
            });
        } else if p < T::zero() || p > T::one() {
            out.violations.push(Violation::ValueOutOfRange {
                source: s,
                viewer: v,
                value: p.as_f64(),
            });
        }
        if last == Some((s, v)) {
            out.violations.push(Violation::DuplicateEntry {
                source: s,
                viewer: v,
            });
        }
        last = Some((s, v));
    }
    let slack = T::one() + T::lit(NORMALIZATION_SLACK);
    for (viewer, sum) in m.column_sums().into_iter().enumerate() {
        if sum > slack {
            out.violations.push(Violation::ColumnNormalizationExceeded {
                viewer,
                sum: sum.as_f64(),
            });
        } else if sum < T::one() {
            out.subnormal_viewers.push((viewer, sum.as_f64()));
        }
    }
    for u in 0..inst.n_users() {
        let (rate, cost, cap) = (inst.rates[u], inst.costs[u], inst.caps[u]);
        if !(rate.is_finite() && cost.is_finite() && cap.is_finite()) {
            out.violations.push(Violation::NonFinite {
                what: "user",
                index: u,
            });
            continue;
        }
        if rate < T::zero() {
            out.violations.push(Violation::NegativeRate {
                user: u,
                value: rate.as_f64(),
            });
        }
        if cost < T::zero() {
            out.violations.push(Violation::NegativeCost {
                user: u,
                value: cost.as_f64(),
            });
        }
        if cap < T::zero() || cap > T::one() {
            out.violations.push(Violation::CapOutOfRange {
                user: u,
                value: cap.as_f64(),
            });
        }
    }
    if !inst.budget.is_finite() {
        out.violations.push(Violation::NonFinite {
            what: "budget",
            index: 0,
        });
    } else if inst.budget < T::zero() {
        out.violations
            .push(Violation::NegativeBudget(inst.budget.as_f64()));
    }
    out
}

/// Potentials `w[j] = sum_{n != j} a_n p[n -> j]` for every user `j`,
/// with the advertiser's own term at its fixed participation.
pub fn potentials<T: Scalar>(inst: &CampaignInstance<T>, a: &[T]) -> Result<Vec<T>> {
    check_len(inst.dim(), a.len())?;
    let mut omega = vec![T::zero(); inst.n_users()];
    accumulate_potentials(inst, a, inst.advertiser_participation(), &mut omega);
    Ok(omega)
}

/// Scatter `weight(source) * p` into `omega`, where the advertiser's weight
/// is `advertiser_weight` and every other user's is its coordinate in `a`.
pub(crate) fn accumulate_potentials<T: Scalar>(
    inst: &CampaignInstance<T>,
    a: &[T],
    advertiser_weight: T,
    omega: &mut [T],
) {
    let m = &inst.impressions;
    for source in 0..inst.n_users() {
        let w = match inst.index_of(source) {
            Some(k) => a[k],
            None => advertiser_weight,
        };
        if w == T::zero() {
            continue;
        }
        for (viewer, p) in m.by_source(source) {
            omega[viewer] = omega[viewer] + w * p;
        }
    }
}

/// Money spent: `sum_n c_n a_n lambda_n`.
pub fn spend<T: Scalar>(inst: &CampaignInstance<T>, a: &[T]) -> Result<T> {
    check_len(inst.dim(), a.len())?;
    Ok(a.iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, &x)| acc + inst.unit_cost(k) * x))
}

/// Impressions `delta * sum w`, sales `sum log(delta w + 1)`, reach
/// `#{w > eps}` over non-advertiser viewers, plus tier counts of selected
/// users when `tiers` (indexed by user id) is given.
pub fn metrics<T: Scalar>(
    inst: &CampaignInstance<T>,
    a: &[T],
    delta: f64,
    eps: f64,
    tiers: Option<&[Tier]>,
) -> Result<MetricsReport> {
    if !(delta > 0.0) || !(eps >= 0.0) {
        return Err(BpoError::InvalidParameter(format!(
            "metrics need delta > 0 and eps >= 0 (got {delta}, {eps})"
        )));
    }
    let omega = potentials(inst, a)?;
    let mut impressions = 0.0;
    let mut sales = 0.0;
    let mut reach = 0;
    for (j, w) in omega.iter().enumerate() {
        if j == inst.advertiser {
            continue;
        }
        let w = w.as_f64();
        impressions += w;
        sales += (delta * w).ln_1p();
        if w > eps {
            reach += 1;
        }
    }
    let mut selected = TierCounts::default();
    if let Some(tiers) = tiers {
        check_len(inst.n_users(), tiers.len())?;
        for (k, &x) in a.iter().enumerate() {
            if x.as_f64() <= SELECTION_TOL {
                continue;
            }
            match tiers[inst.user_of(k)] {
                Tier::Nano => selected.nano += 1,
                Tier::Micro => selected.micro += 1,
                Tier::Macro => selected.macro_ += 1,
                Tier::NonInfluencer => {}
            }
        }
    }
    Ok(MetricsReport {
        total_impressions: delta * impressions,
        total_sales: sales,
        total_reach: reach,
        selected,
        spend: spend(inst, a)?.as_f64(),
    })
}
