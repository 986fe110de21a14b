use serde::{Deserialize, Serialize};

use crate::error::{check_len, BpoError, Result};

/// Follower graph: an edge `leader -> follower` means the follower sees the
/// leader's posts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocialGraph {
    followers: Vec<Vec<usize>>,
    /// Posts per time window.
    pub post_rates: Vec<f64>,
    /// Re-posts per time window.
    pub repost_rates: Vec<f64>,
}

impl SocialGraph {
    /// Directed graph from `(leader, follower)` pairs; self-loops and
    /// repeated pairs are dropped. Rates start at zero.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Result<Self> {
        let mut followers = vec![Vec::new(); n];
        for (l, f) in edges {
            if l >= n || f >= n {
                return Err(BpoError::InvalidParameter(format!(
                    "edge ({l}, {f}) outside 0..{n}"
                )));
            }
            if l != f {
                followers[l].push(f);
            }
        }
        for list in &mut followers {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            followers,
            post_rates: vec![0.0; n],
            repost_rates: vec![0.0; n],
        })
    }

    /// Each undirected edge becomes two follower edges.
    pub fn from_undirected<I: IntoIterator<Item = (usize, usize)>>(
        n: usize,
        edges: I,
    ) -> Result<Self> {
        let both: Vec<(usize, usize)> = edges
            .into_iter()
            .flat_map(|(u, v)| [(u, v), (v, u)])
            .collect();
        Self::from_edges(n, both)
    }

    pub fn n_nodes(&self) -> usize {
        self.followers.len()
    }

    pub fn n_edges(&self) -> usize {
        self.followers.iter().map(Vec::len).sum()
    }

    /// Followers of `leader`, ascending.
    pub fn followers(&self, leader: usize) -> &[usize] {
        &self.followers[leader]
    }

    pub fn follower_count(&self, leader: usize) -> usize {
        self.followers[leader].len()
    }

    /// Leaders of every node, ascending.
    pub fn leaders(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_nodes()];
        for (l, fs) in self.followers.iter().enumerate() {
            for &f in fs {
                out[f].push(l);
            }
        }
        out
    }

    /// All `(leader, follower)` edges, grouped by leader.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.followers
            .iter()
            .enumerate()
            .flat_map(|(l, fs)| fs.iter().map(move |&f| (l, f)))
    }

    /// Same rates for every node.
    pub fn with_uniform_rates(mut self, post: f64, repost: f64) -> Self {
        self.post_rates.iter_mut().for_each(|x| *x = post);
        self.repost_rates.iter_mut().for_each(|x| *x = repost);
        self
    }

    pub fn set_rates(&mut self, post: Vec<f64>, repost: Vec<f64>) -> Result<()> {
        check_len(self.n_nodes(), post.len())?;
        check_len(self.n_nodes(), repost.len())?;
        if post
            .iter()
            .chain(&repost)
            .any(|&r| !(r >= 0.0) || !r.is_finite())
        {
            return Err(BpoError::InvalidParameter(
                "rates must be finite and nonnegative".into(),
            ));
        }
        self.post_rates = post;
        self.repost_rates = repost;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_loops_and_duplicates_are_dropped() {
        let g = SocialGraph::from_edges(3, [(0, 1), (0, 1), (2, 2), (1, 0)]).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.leaders(), vec![vec![1], vec![0], vec![]]);
        assert!(SocialGraph::from_edges(2, [(0, 2)]).is_err());
    }
}
