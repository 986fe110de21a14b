use std::collections::{BTreeMap, VecDeque};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BpoError, Result};
use crate::model::ImpressionMatrix;

use super::graph::SocialGraph;

/// Parameters of the newsfeed snapshot simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedSimConfig {
    pub feed_size: usize,
    /// Events before the first snapshot; `None` means `50 N`.
    pub warmup_events: Option<usize>,
    pub snapshots: usize,
    /// Events between snapshots; `None` means `N`.
    pub events_between: Option<usize>,
    pub seed: u64,
}

impl Default for FeedSimConfig {
    fn default() -> Self {
        Self {
            feed_size: 20,
            warmup_events: None,
            snapshots: 200,
            events_between: None,
            seed: 0,
        }
    }
}

/// Estimates impression ratios by simulating newsfeeds.
///
/// Events pick a node with probability proportional to `lambda + mu`. A
/// post (probability `lambda / (lambda + mu)`) puts a new item with that
/// node as origin at the head of each follower's feed; a re-post copies a
/// uniformly chosen item of the node's own feed, origin preserved. Feeds
/// keep the newest `feed_size` items. After the warmup, each snapshot
/// records, per viewer, the share of feed items of every origin; the result
/// is the mean share over snapshots (an empty feed contributes nothing),
/// with self-origin shares dropped.
pub fn estimate_impressions(g: &SocialGraph, cfg: &FeedSimConfig) -> Result<ImpressionMatrix<f64>> {
    let n = g.n_nodes();
    if cfg.feed_size == 0 || cfg.snapshots == 0 {
        return Err(BpoError::InvalidParameter(
            "feed size and snapshot count must be positive".into(),
        ));
    }
    let weights: Vec<f64> = g
        .post_rates
        .iter()
        .zip(&g.repost_rates)
        .map(|(l, m)| l + m)
        .collect();
    let pick = WeightedIndex::new(&weights)
        .map_err(|_| BpoError::InvalidParameter("graph has no posting activity".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut feeds: Vec<VecDeque<u32>> = vec![VecDeque::with_capacity(cfg.feed_size + 1); n];

    let step = |rng: &mut ChaCha8Rng, feeds: &mut Vec<VecDeque<u32>>| {
        let u = pick.sample(rng);
        let post_share = g.post_rates[u] / weights[u];
        let origin = if rng.gen_bool(post_share.clamp(0.0, 1.0)) {
            u as u32
        } else {
            let own = &feeds[u];
            if own.is_empty() {
                return;
            }
            own[rng.gen_range(0..own.len())]
        };
        for &f in g.followers(u) {
            let feed = &mut feeds[f];
            feed.push_front(origin);
            if feed.len() > cfg.feed_size {
                feed.pop_back();
            }
        }
    };

    for _ in 0..cfg.warmup_events.unwrap_or(50 * n) {
        step(&mut rng, &mut feeds);
    }
    let between = cfg.events_between.unwrap_or(n);
    let mut shares: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n];
    let mut counts: Vec<(u32, usize)> = Vec::with_capacity(cfg.feed_size);
    for _ in 0..cfg.snapshots {
        for _ in 0..between {
            step(&mut rng, &mut feeds);
        }
        for (viewer, feed) in feeds.iter().enumerate() {
            if feed.is_empty() {
                continue;
            }
            counts.clear();
            for &o in feed {
                match counts.iter_mut().find(|(x, _)| *x == o) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((o, 1)),
                }
            }
            let len = feed.len() as f64;
            for &(o, c) in &counts {
                *shares[viewer].entry(o).or_insert(0.0) += c as f64 / len;
            }
        }
    }

    let s = cfg.snapshots as f64;
    let triplets = shares.into_iter().enumerate().flat_map(|(viewer, m)| {
        m.into_iter()
            .map(move |(origin, total)| (origin as usize, viewer, total / s))
    });
    ImpressionMatrix::from_triplets(n, triplets)
}

/// Long-run feed shares without re-posting: viewer `j` sees leader `n`
/// with probability `lambda_n / sum_{m in leaders(j)} lambda_m`.
pub fn direct_impressions(g: &SocialGraph) -> Result<ImpressionMatrix<f64>> {
    let leaders = g.leaders();
    let mut triplets = Vec::with_capacity(g.n_edges());
    for (viewer, ls) in leaders.iter().enumerate() {
        let total: f64 = ls.iter().map(|&l| g.post_rates[l]).sum();
        if total > 0.0 {
            for &l in ls {
                triplets.push((l, viewer, g.post_rates[l] / total));
            }
        }
    }
    ImpressionMatrix::from_triplets(g.n_nodes(), triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(seed: u64) -> FeedSimConfig {
        FeedSimConfig {
            seed,
            ..FeedSimConfig::default()
        }
    }

    #[test]
    fn single_source_fills_the_feed() {
        // node 0 follows node 1
        let g = SocialGraph::from_edges(2, [(1, 0)])
            .unwrap()
            .with_uniform_rates(1.0, 0.0);
        let m = estimate_impressions(&g, &quick(1)).unwrap();
        assert_eq!(m.entries().collect::<Vec<_>>(), vec![(1, 0, 1.0)]);
    }

    #[test]
    fn two_cycle_without_reposts() {
        let g = SocialGraph::from_undirected(2, [(0, 1)])
            .unwrap()
            .with_uniform_rates(1.0, 0.0);
        let m = estimate_impressions(&g, &quick(2)).unwrap();
        assert_eq!(
            m.entries().collect::<Vec<_>>(),
            vec![(0, 1, 1.0), (1, 0, 1.0)]
        );
    }

    #[test]
    fn reposts_carry_influence_two_hops() {
        // 0 -> 1 -> 2: node 1's feed only holds items of 0, and half of its
        // events are re-posts, so node 2 sees origin 0 half of the time.
        let g = SocialGraph::from_edges(3, [(0, 1), (1, 2)])
            .unwrap()
            .with_uniform_rates(1.0, 1.0);
        let reach: Vec<f64> = (0..3)
            .map(|seed| {
                let cfg = FeedSimConfig {
                    snapshots: 20_000,
                    events_between: Some(30),
                    ..quick(seed)
                };
                let m = estimate_impressions(&g, &cfg).unwrap();
                let p = m
                    .by_source(0)
                    .find(|&(v, _)| v == 2)
                    .map_or(0.0, |(_, p)| p);
                p
            })
            .collect();
        assert!(reach.iter().all(|&p| (p - 0.5).abs() < 0.02), "{reach:?}");
        let spread = reach.iter().cloned().fold(f64::MIN, f64::max)
            - reach.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.02, "{reach:?}");
    }

    #[test]
    fn silent_graph_is_rejected() {
        let g = SocialGraph::from_edges(2, [(0, 1)]).unwrap();
        assert!(estimate_impressions(&g, &quick(0)).is_err());
    }

    #[test]
    fn direct_shares_split_by_rate() {
        let mut g = SocialGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        g.set_rates(vec![1.0, 3.0, 0.0], vec![0.0; 3]).unwrap();
        let m = direct_impressions(&g).unwrap();
        assert_eq!(
            m.entries().collect::<Vec<_>>(),
            vec![(0, 2, 0.25), (1, 2, 0.75)]
        );
    }
}
