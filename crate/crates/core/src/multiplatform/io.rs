//! Plain-text multi-platform format.
//!
//! ```text
//! bpo-mp v1
//! L 2
//! Q 1
//! N 3
//! advertiser 0
//! budget 2
//! variant per-platform
//! sigma 1 0.75
//! zeta 0 0 1
//! user 0 0 1 2 0.5 1
//! imp 1 0 1 2 0.25
//! ```
//!
//! `user <l> <q> <id> <lambda> <cost> <cap>` and `imp <l> <q> <source>
//! <viewer> <ratio>` carry a `(platform, content)` prefix. Omitted users
//! default to rate 0, cost 0, cap 1; omitted weights to `zeta = 1/Q` and
//! `sigma = 1`; the variant to `per-platform`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{BpoError, Result};
use crate::io::{data_lines, expect_header, field, parse_err};
use crate::model::{CampaignInstance, ImpressionMatrix};
use crate::scalar::Scalar;

use super::{MpVariant, MultiPlatformInstance};

pub const MP_HEADER: &str = "bpo-mp v1";

pub fn write_mp<T: Scalar, W: Write>(mp: &MultiPlatformInstance<T>, mut w: W) -> Result<()> {
    writeln!(w, "{MP_HEADER}")?;
    writeln!(w, "L {}", mp.n_platforms)?;
    writeln!(w, "Q {}", mp.n_contents)?;
    writeln!(w, "N {}", mp.n_users())?;
    writeln!(w, "advertiser {}", mp.advertiser())?;
    writeln!(w, "budget {}", mp.budget)?;
    writeln!(w, "variant {}", mp.variant)?;
    for (l, s) in mp.sigma.iter().enumerate() {
        writeln!(w, "sigma {l} {s}")?;
    }
    for l in 0..mp.n_platforms {
        for q in 0..mp.n_contents {
            writeln!(w, "zeta {l} {q} {}", mp.zeta[l * mp.n_contents + q])?;
        }
    }
    for l in 0..mp.n_platforms {
        for q in 0..mp.n_contents {
            let b = mp.block(l, q);
            for u in 0..b.n_users() {
                writeln!(
                    w,
                    "user {l} {q} {u} {} {} {}",
                    b.rates[u], b.costs[u], b.caps[u]
                )?;
            }
            for (s, v, p) in b.impressions.entries() {
                writeln!(w, "imp {l} {q} {s} {v} {p}")?;
            }
        }
    }
    Ok(())
}

struct Dims {
    l: usize,
    q: usize,
    n: usize,
}

pub fn read_mp<T: Scalar, R: BufRead>(r: R) -> Result<MultiPlatformInstance<T>> {
    let mut lines = data_lines(r);
    expect_header(&mut lines, MP_HEADER)?;

    let (mut l_count, mut q_count, mut n_count) = (None, None, None);
    let mut advertiser: Option<usize> = None;
    let mut budget: Option<f64> = None;
    let mut variant = MpVariant::PerPlatform;
    let mut sigma: Vec<Option<f64>> = Vec::new();
    let mut zeta: Vec<Option<f64>> = Vec::new();
    let mut users: Vec<Vec<Option<(f64, f64, f64)>>> = Vec::new();
    let mut triplets: Vec<Vec<(usize, usize, T)>> = Vec::new();

    for item in lines {
        let (ln, line) = item?;
        let mut tok = line.split_whitespace();
        let key = tok.next().unwrap_or_default();
        let below = |x: usize, bound: usize, what: &str| {
            if x < bound {
                Ok(x)
            } else {
                Err(parse_err(ln, format!("{what} {x} outside 0..{bound}")))
            }
        };
        let mut count = |slot: &mut Option<usize>, what: &str| -> Result<()> {
            if slot.is_some() {
                return Err(parse_err(ln, format!("duplicate `{what}`")));
            }
            *slot = Some(field(ln, tok.next(), what)?);
            Ok(())
        };
        match key {
            "L" => count(&mut l_count, "L")?,
            "Q" => count(&mut q_count, "Q")?,
            "N" => count(&mut n_count, "N")?,
            _ => {}
        }
        if matches!(key, "L" | "Q" | "N") {
            if let (Some(l), Some(q), Some(n)) = (l_count, q_count, n_count) {
                if users.is_empty() {
                    sigma = vec![None; l];
                    zeta = vec![None; l * q];
                    users = vec![vec![None; n]; l * q];
                    triplets = vec![Vec::new(); l * q];
                }
            }
        } else {
            let dims = || match (l_count, q_count, n_count) {
                (Some(l), Some(q), Some(n)) => Ok(Dims { l, q, n }),
                _ => Err(parse_err(ln, "`L`, `Q` and `N` must come first")),
            };
            match key {
                "advertiser" => advertiser = Some(field(ln, tok.next(), "advertiser id")?),
                "budget" => budget = Some(field(ln, tok.next(), "budget")?),
                "variant" => {
                    let v: String = field(ln, tok.next(), "variant")?;
                    variant = v
                        .parse()
                        .map_err(|e: BpoError| parse_err(ln, e.to_string()))?;
                }
                "sigma" => {
                    let d = dims()?;
                    let l = below(field(ln, tok.next(), "platform")?, d.l, "platform")?;
                    if sigma[l].replace(field(ln, tok.next(), "weight")?).is_some() {
                        return Err(parse_err(ln, format!("duplicate sigma for platform {l}")));
                    }
                }
                "zeta" => {
                    let d = dims()?;
                    let l = below(field(ln, tok.next(), "platform")?, d.l, "platform")?;
                    let q = below(field(ln, tok.next(), "content")?, d.q, "content")?;
                    if zeta[l * d.q + q]
                        .replace(field(ln, tok.next(), "weight")?)
                        .is_some()
                    {
                        return Err(parse_err(ln, format!("duplicate zeta for ({l}, {q})")));
                    }
                }
                "user" => {
                    let d = dims()?;
                    let l = below(field(ln, tok.next(), "platform")?, d.l, "platform")?;
                    let q = below(field(ln, tok.next(), "content")?, d.q, "content")?;
                    let id = below(field(ln, tok.next(), "user id")?, d.n, "user")?;
                    let rate = field(ln, tok.next(), "rate")?;
                    let cost = field(ln, tok.next(), "cost")?;
                    let cap = field(ln, tok.next(), "cap")?;
                    if users[l * d.q + q][id].replace((rate, cost, cap)).is_some() {
                        return Err(parse_err(ln, format!("duplicate user {id} in ({l}, {q})")));
                    }
                }
                "imp" => {
                    let d = dims()?;
                    let l = below(field(ln, tok.next(), "platform")?, d.l, "platform")?;
                    let q = below(field(ln, tok.next(), "content")?, d.q, "content")?;
                    let s = below(field(ln, tok.next(), "source")?, d.n, "user")?;
                    let v = below(field(ln, tok.next(), "viewer")?, d.n, "user")?;
                    let p: f64 = field(ln, tok.next(), "ratio")?;
                    triplets[l * d.q + q].push((s, v, T::lit(p)));
                }
                other => return Err(parse_err(ln, format!("unknown record `{other}`"))),
            }
        }
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing fields"));
        }
    }

    let (l, q, n) = match (l_count, q_count, n_count) {
        (Some(l), Some(q), Some(n)) => (l, q, n),
        _ => return Err(parse_err(0, "missing `L`, `Q` or `N`")),
    };
    let advertiser = advertiser.ok_or_else(|| parse_err(0, "missing `advertiser`"))?;
    let budget = T::lit(budget.ok_or_else(|| parse_err(0, "missing `budget`"))?);
    let mut blocks = Vec::with_capacity(l * q);
    for (rows, trip) in users.into_iter().zip(triplets) {
        let (mut rates, mut costs, mut caps) = (Vec::new(), Vec::new(), Vec::new());
        for u in rows {
            let (x, c, r) = u.unwrap_or((0.0, 0.0, 1.0));
            rates.push(T::lit(x));
            costs.push(T::lit(c));
            caps.push(T::lit(r));
        }
        let m = ImpressionMatrix::from_triplets(n, trip)?;
        blocks.push(CampaignInstance::new(
            m, advertiser, rates, costs, caps, budget,
        )?);
    }
    let default_zeta = 1.0 / q as f64;
    let zeta = zeta
        .into_iter()
        .map(|z| T::lit(z.unwrap_or(default_zeta)))
        .collect();
    let sigma = sigma
        .into_iter()
        .map(|s| T::lit(s.unwrap_or(1.0)))
        .collect();
    MultiPlatformInstance::new(l, q, blocks, zeta, sigma, budget, variant)
}

pub fn save_mp<T: Scalar>(mp: &MultiPlatformInstance<T>, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mp(mp, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_mp<T: Scalar>(path: &Path) -> Result<MultiPlatformInstance<T>> {
    read_mp(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "bpo-mp v1\nL 2\nQ 2\nN 3\nadvertiser 0\nbudget 2\n\
        variant shared\nsigma 1 0.75\nzeta 0 1 0.3\n\
        user 0 0 1 2 0.5 1\nimp 1 0 1 2 0.25 # comment\n";

    #[test]
    fn reads_defaults_and_round_trips() {
        let mp: MultiPlatformInstance<f64> = read_mp(SAMPLE.as_bytes()).unwrap();
        assert_eq!(mp.variant, MpVariant::Shared);
        assert_eq!(mp.sigma, vec![1.0, 0.75]);
        assert_eq!(mp.zeta, vec![0.5, 0.3, 0.5, 0.5]);
        assert_eq!(mp.block(0, 0).costs, vec![0.0, 0.5, 0.0]);
        assert_eq!(mp.block(1, 0).impressions.nnz(), 1);
        let mut buf = Vec::new();
        write_mp(&mp, &mut buf).unwrap();
        let back: MultiPlatformInstance<f64> = read_mp(buf.as_slice()).unwrap();
        assert_eq!(back, mp);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "bpo-instance v1\n",
            "bpo-mp v1\nL 1\nQ 1\nuser 0 0 0 1 1 1\n",
            "bpo-mp v1\nL 1\nQ 1\nN 2\nadvertiser 0\nbudget 1\nuser 1 0 0 1 1 1\n",
            "bpo-mp v1\nL 1\nQ 1\nN 2\nadvertiser 0\nbudget 1\nsigma 0 1 2\n",
            "bpo-mp v1\nL 1\nQ 1\nN 2\nadvertiser 0\nbudget 1\nvariant mixed\n",
            "bpo-mp v1\nL 1\nQ 1\nN 2\nadvertiser 0\n",
        ] {
            assert!(read_mp::<f64, _>(bad.as_bytes()).is_err(), "{bad}");
        }
    }
}
