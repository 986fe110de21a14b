use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::model::{CampaignInstance, ParticipationVector};
use crate::scalar::Scalar;

use super::ic::IcModel;

/// Seeds chosen by the budgeted influence-maximization baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    /// User ids in selection order.
    pub seeds: Vec<usize>,
    pub total_cost: f64,
    /// Mean activated users over the cascade runs.
    pub spread: f64,
}

/// Price of seeding a user: its whole capped activity, `c lambda r`.
pub fn seed_cost<T: Scalar>(inst: &CampaignInstance<T>, user: usize) -> f64 {
    (inst.costs[user] * inst.rates[user] * inst.caps[user]).as_f64()
}

#[derive(Debug)]
struct Entry {
    ratio: f64,
    user: usize,
    gain: u64,
    round: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // max-heap: larger ratio first, then smaller user id
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio
            .total_cmp(&other.ratio)
            .then_with(|| other.user.cmp(&self.user))
    }
}

fn ratio(gain: u64, cost: f64) -> f64 {
    if gain == 0 {
        0.0
    } else if cost > 0.0 {
        gain as f64 / cost
    } else {
        f64::INFINITY
    }
}

/// Cost-sensitive lazy greedy (CELF): repeatedly adds the affordable user
/// with the best marginal spread per cost until no affordable user adds
/// spread. Marginal gains are exact integer counts over the model's shared
/// cascade runs, so stale heap entries are valid upper bounds.
pub fn solve_bim_celf<T: Scalar>(
    inst: &CampaignInstance<T>,
    model: &IcModel,
    budget: f64,
) -> (SeedSet, ParticipationVector<T>) {
    let mut active = model.activate(&[]);
    let mut heap: BinaryHeap<Entry> = (0..inst.n_users())
        .filter(|&u| u != inst.advertiser && seed_cost(inst, u) <= budget)
        .map(|u| {
            let gain = model.marginal(&active, u);
            Entry {
                ratio: ratio(gain, seed_cost(inst, u)),
                user: u,
                gain,
                round: 0,
            }
        })
        .collect();

    let mut seeds = Vec::new();
    let mut left = budget;
    let mut total = 0u64;
    while let Some(top) = heap.pop() {
        let cost = seed_cost(inst, top.user);
        if cost > left {
            continue;
        }
        if top.round == seeds.len() {
            if top.gain == 0 {
                break;
            }
            seeds.push(top.user);
            left -= cost;
            total += top.gain;
            model.extend(&mut active, top.user);
        } else {
            let gain = model.marginal(&active, top.user);
            heap.push(Entry {
                ratio: ratio(gain, cost),
                user: top.user,
                gain,
                round: seeds.len(),
            });
        }
    }

    let mut a = ParticipationVector::zeros(inst.dim());
    for &u in &seeds {
        if let Some(k) = inst.index_of(u) {
            a.0[k] = inst.caps[u];
        }
    }
    let set = SeedSet {
        total_cost: seeds.iter().map(|&u| seed_cost(inst, u)).sum(),
        spread: total as f64 / model.mc_runs() as f64,
        seeds,
    };
    (set, a)
}
