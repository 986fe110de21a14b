use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BpoError, Result};

use super::graph::SocialGraph;

/// Preferential attachment: a clique on the first `a` nodes, then every new
/// node links to `a` distinct existing nodes drawn proportionally to degree
/// (uniformly while no node has a degree yet). Adds exactly `a (n - a)`
/// attachment edges on top of the `a (a - 1) / 2` clique edges. Rates are
/// set to one post and one re-post per window.
pub fn gen_ab(n: usize, a: usize, seed: u64) -> Result<SocialGraph> {
    if a == 0 || a >= n {
        return Err(BpoError::InvalidParameter(format!(
            "preferential attachment needs 1 <= A < N (got A={a}, N={n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(a * (a - 1) / 2 + a * (n - a));
    // every edge endpoint appears once: sampling from it is degree-proportional
    let mut ends: Vec<usize> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..a {
        for v in (u + 1)..a {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    let mut picked = Vec::with_capacity(a);
    for v in a..n {
        picked.clear();
        let mut tries = 0;
        while picked.len() < a {
            let u = if ends.is_empty() || tries > 64 * a {
                rng.gen_range(0..v)
            } else {
                ends[rng.gen_range(0..ends.len())]
            };
            tries += 1;
            if !picked.contains(&u) {
                picked.push(u);
            }
        }
        for &u in &picked {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    Ok(SocialGraph::from_undirected(n, edges)?.with_uniform_rates(1.0, 1.0))
}

/// Erdos-Renyi graph with `a (n - a)` expected edges.
pub fn gen_er(n: usize, a: usize, seed: u64) -> Result<SocialGraph> {
    if n < 2 {
        return gen_er_with_probability(n, 0.0, seed);
    }
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    let p = a as f64 * (n as f64 - a as f64) / pairs;
    gen_er_with_probability(n, p, seed)
}

/// Erdos-Renyi graph where each unordered pair is an edge with probability
/// `p`, enumerated by geometric skipping in `O(n + edges)`.
pub fn gen_er_with_probability(n: usize, p: f64, seed: u64) -> Result<SocialGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BpoError::InvalidParameter(format!("edge probability {p}")));
    }
    let mut edges = Vec::new();
    if p > 0.0 && n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log_q = (1.0 - p).ln();
        // pairs (w, v) with w < v, visited in row-major order
        let (mut v, mut w) = (1usize, -1i64);
        while v < n {
            let skip = if p >= 1.0 {
                0
            } else {
                let r: f64 = rng.gen_range(f64::EPSILON..1.0);
                (r.ln() / log_q).floor() as i64
            };
            w += 1 + skip;
            while v < n && w >= v as i64 {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((w as usize, v));
            }
        }
    }
    Ok(SocialGraph::from_undirected(n, edges)?.with_uniform_rates(1.0, 1.0))
}
