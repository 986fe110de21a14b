//! Activity-trace ingestion.
//!
//! A trace holds one record per post, `tweet_id timestamp user_id
//! retweet_id` (whitespace- or comma-separated), with `retweet_id = -1` for
//! original posts. From it we derive per-user posting and re-posting rates,
//! a "star" follower graph (an edge from an author to everyone who re-posted
//! them), influencer tiers by follower-count deciles, and per-post prices.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BpoError, Result};
use crate::model::{CampaignInstance, ImpressionMatrix, Tier};
use crate::netgen::SocialGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tweet_id: i64,
    pub timestamp: i64,
    pub user_id: i64,
    /// `-1` for an original post.
    pub retweet_id: i64,
}

impl TraceRecord {
    pub fn is_self_post(&self) -> bool {
        self.retweet_id == -1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub content: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTrace {
    pub records: Vec<TraceRecord>,
    pub rejects: Vec<Reject>,
}

/// Parses a trace; malformed lines are collected, not fatal. Blank lines
/// and `#` comments are skipped.
pub fn read_trace<R: BufRead>(r: R) -> Result<ParsedTrace> {
    let mut out = ParsedTrace::default();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let parsed: std::result::Result<Vec<i64>, _> = fields.iter().map(|t| t.parse()).collect();
        let reject = |reason: &str| Reject {
            line: idx + 1,
            content: line.clone(),
            reason: reason.to_string(),
        };
        match parsed {
            Ok(v) if v.len() == 4 => {
                if v[3] < -1 {
                    out.rejects.push(reject("retweet id below -1"));
                } else {
                    out.records.push(TraceRecord {
                        tweet_id: v[0],
                        timestamp: v[1],
                        user_id: v[2],
                        retweet_id: v[3],
                    });
                }
            }
            Ok(_) => out.rejects.push(reject("expected 4 fields")),
            Err(_) => out.rejects.push(reject("non-integer field")),
        }
    }
    Ok(out)
}

pub fn parse_trace(path: &Path) -> Result<ParsedTrace> {
    read_trace(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Dense index over the distinct user ids of a trace, ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserIndex {
    pub ids: Vec<i64>,
}

impl UserIndex {
    pub fn from_records(records: &[TraceRecord]) -> Self {
        let ids: BTreeSet<i64> = records.iter().map(|r| r.user_id).collect();
        Self {
            ids: ids.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, user_id: i64) -> Option<usize> {
        self.ids.binary_search(&user_id).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub users: UserIndex,
    /// Original posts per window, indexed like `users`.
    pub lambda: Vec<f64>,
    /// Re-posts per window.
    pub mu: Vec<f64>,
    pub windows: u64,
}

/// Per-user posting and re-posting rates over
/// `max(1, ceil(span / window_length))` windows.
pub fn derive_rates(records: &[TraceRecord], window_length: f64) -> Result<Rates> {
    if !(window_length > 0.0) {
        return Err(BpoError::InvalidParameter(format!(
            "window length must be positive (got {window_length})"
        )));
    }
    if records.is_empty() {
        return Err(BpoError::Empty("trace without records".into()));
    }
    let users = UserIndex::from_records(records);
    let lo = records.iter().map(|r| r.timestamp).min().unwrap_or(0);
    let hi = records.iter().map(|r| r.timestamp).max().unwrap_or(0);
    let windows = (((hi - lo) as f64 / window_length).ceil() as u64).max(1);
    let mut posts = vec![0u64; users.len()];
    let mut reposts = vec![0u64; users.len()];
    for r in records {
        let u = users.position(r.user_id).expect("indexed above");
        if r.is_self_post() {
            posts[u] += 1;
        } else {
            reposts[u] += 1;
        }
    }
    let w = windows as f64;
    Ok(Rates {
        lambda: posts.iter().map(|&c| c as f64 / w).collect(),
        mu: reposts.iter().map(|&c| c as f64 / w).collect(),
        users,
        windows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarGraph {
    /// Nodes follow the order of `users`.
    pub graph: SocialGraph,
    pub users: UserIndex,
    /// Re-posts of tweets that are not in the trace.
    pub dangling: usize,
    /// Re-posts of one's own tweets.
    pub self_reposts: usize,
}

/// Edge author -> re-poster, once per distinct pair.
pub fn build_star_graph(records: &[TraceRecord]) -> Result<StarGraph> {
    let users = UserIndex::from_records(records);
    let author: HashMap<i64, i64> = records.iter().map(|r| (r.tweet_id, r.user_id)).collect();
    let mut edges = BTreeSet::new();
    let (mut dangling, mut self_reposts) = (0, 0);
    for r in records.iter().filter(|r| !r.is_self_post()) {
        match author.get(&r.retweet_id) {
            None => dangling += 1,
            Some(&a) if a == r.user_id => self_reposts += 1,
            Some(&a) => {
                let l = users.position(a).expect("authors are users");
                let f = users.position(r.user_id).expect("indexed above");
                edges.insert((l, f));
            }
        }
    }
    Ok(StarGraph {
        graph: SocialGraph::from_edges(users.len(), edges)?,
        users,
        dangling,
        self_reposts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierAssignment {
    pub tiers: Vec<Tier>,
    /// Follower count at the 6th decile of candidates.
    pub nano_max: usize,
    /// Follower count at the 9th decile of candidates.
    pub micro_max: usize,
}

/// Nearest-rank quantile `sorted[max(1, floor(q n)) - 1]`.
fn decile(sorted: &[usize], q: f64) -> usize {
    let rank = ((q * sorted.len() as f64).floor() as usize).max(1);
    sorted[rank - 1]
}

/// Tiers from follower-count deciles over candidates (positive posting rate
/// and at least one follower): Nano up to the 6th decile, Micro up to the
/// 9th, Macro above. Everyone else is a non-influencer.
pub fn classify_influencers(g: &SocialGraph, lambda: &[f64]) -> Result<TierAssignment> {
    crate::error::check_len(g.n_nodes(), lambda.len())?;
    let candidate = |u: usize| lambda[u] > 0.0 && g.follower_count(u) >= 1;
    let mut counts: Vec<usize> = (0..g.n_nodes())
        .filter(|&u| candidate(u))
        .map(|u| g.follower_count(u))
        .collect();
    if counts.is_empty() {
        return Err(BpoError::Empty("no influencer candidates".into()));
    }
    counts.sort_unstable();
    let nano_max = decile(&counts, 0.6);
    let micro_max = decile(&counts, 0.9);
    let tiers = (0..g.n_nodes())
        .map(|u| {
            let f = g.follower_count(u);
            if !candidate(u) {
                Tier::NonInfluencer
            } else if f <= nano_max {
                Tier::Nano
            } else if f <= micro_max {
                Tier::Micro
            } else {
                Tier::Macro
            }
        })
        .collect();
    Ok(TierAssignment {
        tiers,
        nano_max,
        micro_max,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostScale {
    /// `2 * followers` per post.
    Unit,
    /// `2 * followers / 1000` per post.
    PerThousand,
}

pub fn default_costs(g: &SocialGraph, scale: CostScale) -> Vec<f64> {
    let div = match scale {
        CostScale::Unit => 1.0,
        CostScale::PerThousand => 1000.0,
    };
    (0..g.n_nodes())
        .map(|u| 2.0 * g.follower_count(u) as f64 / div)
        .collect()
}

/// Campaign over a graph's users with its posting rates, default prices
/// and unit caps.
pub fn build_instance(
    g: &SocialGraph,
    impressions: ImpressionMatrix<f64>,
    advertiser: usize,
    scale: CostScale,
    budget: f64,
) -> Result<CampaignInstance<f64>> {
    CampaignInstance::with_unit_caps(
        impressions,
        advertiser,
        g.post_rates.clone(),
        default_costs(g, scale),
        budget,
    )
}

/// Number of users per tier, for reporting.
pub fn tier_histogram(tiers: &[Tier]) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for t in tiers {
        let key = match t {
            Tier::Nano => "nano",
            Tier::Micro => "micro",
            Tier::Macro => "macro",
            Tier::NonInfluencer => "none",
        };
        *out.entry(key).or_insert(0) += 1;
    }
    out
}
