//! Dense reference implementations, written independently of the library's
//! sparse kernels, plus random instance generators.

#![allow(dead_code)]

use bpo_core::model::{CampaignInstance, ImpressionMatrix};
use bpo_core::UtilitySpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance: every viewer column sums to at most one, costs and
/// caps vary, the budget covers roughly a third of the total cost.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, density: f64) -> CampaignInstance<f64> {
    let mut triplets = Vec::new();
    for j in 0..n {
        let mut col = Vec::new();
        for s in (0..n).filter(|&s| s != j) {
            if rng.gen_bool(density) {
                col.push((s, rng.gen_range(0.05..1.0)));
            }
        }
        let total: f64 = col.iter().map(|e: &(usize, f64)| e.1).sum();
        let scale = rng.gen_range(0.3..1.0) / total.max(1.0);
        for (s, p) in col.drain(..) {
            triplets.push((s, j, p * scale));
        }
    }
    let m = ImpressionMatrix::from_triplets(n, triplets).unwrap();
    let rates: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
    let caps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..1.0)).collect();
    let advertiser = rng.gen_range(0..n);
    let total: f64 = (0..n)
        .filter(|&u| u != advertiser)
        .map(|u| rates[u] * costs[u] * caps[u])
        .sum();
    let budget = total * rng.gen_range(0.15..0.5);
    CampaignInstance::new(m, advertiser, rates, costs, caps, budget).unwrap()
}

/// Dense `P[source][viewer]`.
pub fn dense(inst: &CampaignInstance<f64>) -> Vec<Vec<f64>> {
    let n = inst.n_users();
    let mut p = vec![vec![0.0; n]; n];
    for (s, v, x) in inst.impressions.entries() {
        p[s][v] += x;
    }
    p
}

pub fn users(inst: &CampaignInstance<f64>) -> Vec<usize> {
    (0..inst.n_users())
        .filter(|&u| u != inst.advertiser)
        .collect()
}

pub fn u(spec: &UtilitySpec, w: f64) -> f64 {
    match *spec {
        UtilitySpec::Linear { delta } => delta * w,
        UtilitySpec::Log { delta } => (1.0 + delta * w).ln(),
        UtilitySpec::AlphaFair { alpha } if alpha == 1.0 => (1.0 + w).ln(),
        UtilitySpec::AlphaFair { alpha } => (1.0 + w).powf(1.0 - alpha) / (1.0 - alpha),
        UtilitySpec::ReachIndicator { eps } => f64::from(w > eps),
    }
}

pub fn du(spec: &UtilitySpec, w: f64) -> f64 {
    match *spec {
        UtilitySpec::Linear { delta } => delta,
        UtilitySpec::Log { delta } => delta / (1.0 + delta * w),
        UtilitySpec::AlphaFair { alpha } => (1.0 + w).powf(-alpha),
        UtilitySpec::ReachIndicator { .. } => 0.0,
    }
}

/// Bound on `|U''|` over nonnegative potentials.
pub fn curvature_bound(spec: &UtilitySpec) -> f64 {
    match *spec {
        UtilitySpec::Linear { .. } | UtilitySpec::ReachIndicator { .. } => 0.0,
        UtilitySpec::Log { delta } => delta * delta,
        UtilitySpec::AlphaFair { alpha } => alpha,
    }
}

pub fn dense_potentials(inst: &CampaignInstance<f64>, a: &[f64]) -> Vec<f64> {
    let p = dense(inst);
    let n = inst.n_users();
    let mut full = vec![0.0; n];
    full[inst.advertiser] = inst.caps[inst.advertiser];
    for (k, &user) in users(inst).iter().enumerate() {
        full[user] = a[k];
    }
    (0..n)
        .map(|j| (0..n).filter(|&s| s != j).map(|s| p[s][j] * full[s]).sum())
        .collect()
}

pub fn dense_value(inst: &CampaignInstance<f64>, spec: &UtilitySpec, a: &[f64]) -> f64 {
    let w = dense_potentials(inst, a);
    (0..inst.n_users())
        .filter(|&j| j != inst.advertiser)
        .map(|j| u(spec, w[j]))
        .sum()
}

pub fn dense_gradient(inst: &CampaignInstance<f64>, spec: &UtilitySpec, a: &[f64]) -> Vec<f64> {
    let p = dense(inst);
    let w = dense_potentials(inst, a);
    users(inst)
        .iter()
        .map(|&k| {
            (0..inst.n_users())
                .filter(|&j| j != inst.advertiser && j != k)
                .map(|j| du(spec, w[j]) * p[k][j])
                .sum()
        })
        .collect()
}

/// Polytope `{0 <= a <= r, rho . a <= B}` in dense form.
#[derive(Clone, Debug)]
pub struct Box1 {
    pub rho: Vec<f64>,
    pub r: Vec<f64>,
    pub b: f64,
}

impl Box1 {
    pub fn of(inst: &CampaignInstance<f64>) -> Self {
        let us = users(inst);
        Self {
            rho: us.iter().map(|&u| inst.costs[u] * inst.rates[u]).collect(),
            r: us.iter().map(|&u| inst.caps[u]).collect(),
            b: inst.budget,
        }
    }

    pub fn spend(&self, a: &[f64]) -> f64 {
        a.iter().zip(&self.rho).map(|(x, r)| x * r).sum()
    }

    /// All extreme points: every coordinate at 0 or its cap, plus at most
    /// one coordinate set fractionally so the budget binds.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.r.len();
        let mut out = Vec::new();
        for mask in 0u32..(1 << d) {
            let base: Vec<f64> = (0..d)
                .map(|k| if mask >> k & 1 == 1 { self.r[k] } else { 0.0 })
                .collect();
            let spent = self.spend(&base);
            if spent <= self.b * (1.0 + 1e-12) + 1e-15 {
                out.push(base.clone());
                for k in (0..d).filter(|&k| mask >> k & 1 == 0 && self.rho[k] > 0.0) {
                    let x = (self.b - spent) / self.rho[k];
                    if x > 0.0 && x < self.r[k] {
                        let mut v = base.clone();
                        v[k] = x;
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// `max_s <k, s>` by vertex enumeration.
    pub fn lp_max(&self, k: &[f64]) -> f64 {
        self.vertices()
            .iter()
            .map(|v| v.iter().zip(k).map(|(x, y)| x * y).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euclidean projection `clip(x - theta rho, 0, r)` with bisection on
    /// `theta`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let at = |theta: f64| -> Vec<f64> {
            x.iter()
                .zip(&self.rho)
                .zip(&self.r)
                .map(|((&v, &rho), &r)| (v - theta * rho).clamp(0.0, r))
                .collect()
        };
        if self.spend(&at(0.0)) <= self.b {
            return at(0.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.spend(&at(hi)) > self.b {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.spend(&at(mid)) > self.b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(hi)
    }
}

/// Optimum of the campaign objective by accelerated projected gradient
/// ascent, bracketed as `(U(a), U(a) + gap(a))` with the gap taken over
/// all polytope vertices.
pub fn dense_optimum(inst: &CampaignInstance<f64>, spec: &UtilitySpec, iters: usize) -> (f64, f64) {
    let poly = Box1::of(inst);
    let d = poly.r.len();
    let value = |a: &[f64]| dense_value(inst, spec, a);
    let bracket = |a: &[f64]| {
        let g = dense_gradient(inst, spec, a);
        let lin: f64 = g.iter().zip(a).map(|(x, y)| x * y).sum();
        let v = value(a);
        (v, v + (poly.lp_max(&g) - lin).max(0.0))
    };
    let p = dense(inst);
    let frob: f64 = p.iter().flatten().map(|x| x * x).sum();
    let lip = curvature_bound(spec) * frob;
    if lip == 0.0 {
        let best = poly
            .vertices()
            .into_iter()
            .max_by(|x, y| value(x).total_cmp(&value(y)))
            .unwrap();
        return bracket(&best);
    }
    let step = 1.0 / lip;
    let mut x = vec![0.0; d];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = value(&x);
    for _ in 0..iters {
        let g = dense_gradient(inst, spec, &y);
        let moved: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a + step * b).collect();
        let next = poly.project(&moved);
        let f_next = value(&next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f_next < fx {
            // restart momentum on a decrease
            y = x.clone();
            t = 1.0;
            continue;
        }
        y = next
            .iter()
            .zip(&x)
            .map(|(n, o)| n + (t - 1.0) / t_next * (n - o))
            .collect();
        x = next;
        fx = f_next;
        t = t_next;
    }
    bracket(&x)
}
