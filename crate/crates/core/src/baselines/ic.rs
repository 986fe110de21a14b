use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{BpoError, Result};
use crate::model::ImpressionMatrix;
use crate::scalar::Scalar;

/// Graphs above this size estimate path lengths from sampled sources.
pub const EXACT_PATH_LIMIT: usize = 2000;
pub const SAMPLED_SOURCES: usize = 256;

/// Directed adjacency in compressed form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Digraph {
    /// Support graph `n -> j` of every stored impression entry.
    pub fn support<T: Scalar>(imp: &ImpressionMatrix<T>) -> Self {
        Self::from_edges(imp.n_users(), imp.entries().map(|(s, v, _)| (s, v)))
    }

    /// Edges must not repeat; order is preserved within each source.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut e: Vec<(usize, usize)> = edges.into_iter().collect();
        e.sort_by_key(|&(s, _)| s);
        let mut offsets = vec![0usize; n + 1];
        for &(s, _) in &e {
            offsets[s + 1] += 1;
        }
        for k in 0..n {
            offsets[k + 1] += offsets[k];
        }
        Self {
            offsets,
            targets: e.into_iter().map(|(_, t)| t as u32).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len()
    }

    /// `(edge index, target)` pairs leaving `u`.
    fn out(&self, u: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.offsets[u]..self.offsets[u + 1]).map(move |e| (e, self.targets[e] as usize))
    }

    /// Sum and count of finite shortest-path lengths from `src`.
    fn bfs_lengths(&self, src: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) -> (u64, u64) {
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        dist[src] = 0;
        queue.clear();
        queue.push_back(src);
        let (mut sum, mut count) = (0u64, 0u64);
        while let Some(u) = queue.pop_front() {
            for (_, v) in self.out(u) {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    sum += dist[v] as u64;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        (sum, count)
    }

    /// Mean finite shortest-path length over ordered pairs, exact up to
    /// [`EXACT_PATH_LIMIT`] nodes and from evenly spaced sources beyond.
    /// `None` when no pair is connected.
    pub fn average_path_length(&self) -> Option<f64> {
        let n = self.n_nodes();
        let sources: Vec<usize> = if n <= EXACT_PATH_LIMIT {
            (0..n).collect()
        } else {
            (0..SAMPLED_SOURCES)
                .map(|k| k * n / SAMPLED_SOURCES)
                .collect()
        };
        let (sum, count) = sources
            .par_iter()
            .map_init(
                || (vec![u32::MAX; n], VecDeque::new()),
                |(dist, queue), &s| self.bfs_lengths(s, dist, queue),
            )
            .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
        (count > 0).then(|| sum as f64 / count as f64)
    }
}

/// Uniform propagation probability `sum p^(1/k) / N^2`, with `k` the mean
/// shortest-path length of the support graph; zero without any edge.
pub fn edge_probability<T: Scalar>(imp: &ImpressionMatrix<T>) -> Result<f64> {
    let n = imp.n_users();
    if n == 0 {
        return Err(BpoError::Empty("impression matrix".into()));
    }
    let Some(k) = Digraph::support(imp).average_path_length() else {
        return Ok(0.0);
    };
    let total: f64 = imp
        .entries()
        .map(|(_, _, p)| p.as_f64().powf(1.0 / k))
        .sum();
    Ok((total / (n as f64 * n as f64)).clamp(0.0, 1.0))
}

/// Independent-cascade model with pre-sampled live edges per run, so every
/// spread query within a model shares the same random outcomes. Each run
/// keeps only its live edges, so a cascade never scans the dead ones.
#[derive(Clone, Debug)]
pub struct IcModel {
    n: usize,
    p: f64,
    live: Vec<Digraph>,
}

impl IcModel {
    pub fn new(graph: Digraph, p: f64, mc_runs: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(BpoError::InvalidParameter(format!("edge probability {p}")));
        }
        if mc_runs == 0 {
            return Err(BpoError::InvalidParameter(
                "at least one cascade run".into(),
            ));
        }
        let n = graph.n_nodes();
        let live = (0..mc_runs)
            .into_par_iter()
            .map(|run| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(run as u64);
                let kept = (0..n).flat_map(|u| graph.out(u).map(move |(_, v)| (u, v)));
                let kept: Vec<(usize, usize)> = kept.filter(|_| rng.gen_bool(p)).collect();
                Digraph::from_edges(n, kept)
            })
            .collect();
        Ok(Self { n, p, live })
    }

    /// Model over the impression support with the formula probability.
    pub fn from_impressions<T: Scalar>(
        imp: &ImpressionMatrix<T>,
        mc_runs: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::new(Digraph::support(imp), edge_probability(imp)?, mc_runs, seed)
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    pub fn mc_runs(&self) -> usize {
        self.live.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Marks every node reached from `start` through live edges of `run`
    /// that is not yet in `active`; returns how many were newly reached.
    fn spread_from(
        &self,
        run: usize,
        start: &[usize],
        active: &mut [bool],
        queue: &mut Vec<usize>,
    ) -> u64 {
        let live = &self.live[run];
        queue.clear();
        let mut fresh = 0;
        for &s in start {
            if !active[s] {
                active[s] = true;
                fresh += 1;
                queue.push(s);
            }
        }
        while let Some(u) = queue.pop() {
            for (_, v) in live.out(u) {
                if !active[v] {
                    active[v] = true;
                    fresh += 1;
                    queue.push(v);
                }
            }
        }
        fresh
    }

    /// Total activations over all runs (mean spread times runs).
    pub fn total_activations(&self, seeds: &[usize]) -> u64 {
        let n = self.n_nodes();
        (0..self.mc_runs())
            .into_par_iter()
            .map(|run| {
                let mut active = vec![false; n];
                self.spread_from(run, seeds, &mut active, &mut Vec::new())
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }

    /// Per-run activation state of `seeds`, for incremental queries.
    pub(crate) fn activate(&self, seeds: &[usize]) -> Vec<Vec<bool>> {
        let n = self.n_nodes();
        (0..self.mc_runs())
            .into_par_iter()
            .map(|run| {
                let mut active = vec![false; n];
                self.spread_from(run, seeds, &mut active, &mut Vec::new());
                active
            })
            .collect()
    }

    /// Activations added by `u` on top of per-run states, summed over runs.
    pub(crate) fn marginal(&self, active: &[Vec<bool>], u: usize) -> u64 {
        (0..self.mc_runs())
            .into_par_iter()
            .map(|run| {
                let mut scratch = active[run].clone();
                self.spread_from(run, &[u], &mut scratch, &mut Vec::new())
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }

    /// Adds `u` to the per-run states.
    pub(crate) fn extend(&self, active: &mut [Vec<bool>], u: usize) {
        active.par_iter_mut().enumerate().for_each(|(run, state)| {
            self.spread_from(run, &[u], state, &mut Vec::new());
        });
    }
}

/// Mean number of users activated by `seeds` over the model's runs.
pub fn ic_spread(model: &IcModel, seeds: &[usize]) -> f64 {
    model.total_activations(seeds) as f64 / model.mc_runs() as f64
}
