//! Synthetic follower graphs and impression-ratio estimation.

pub mod feed;
pub mod generators;
pub mod graph;

pub use feed::{direct_impressions, estimate_impressions, FeedSimConfig};
pub use generators::{gen_ab, gen_er, gen_er_with_probability};
pub use graph::SocialGraph;
