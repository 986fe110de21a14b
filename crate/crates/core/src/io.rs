//! Plain-text instance format.
//!
//! ```text
//! bpo-instance v1
//! N 3
//! advertiser 0
//! budget 1.5
//! user 1 2 0.5 1
//! imp 1 2 0.25
//! ```
//!
//! `user <id> <lambda> <cost> <cap>` lines may be omitted (rate 0, cost 0,
//! cap 1). `#` starts a comment. Numbers are written with Rust's shortest
//! round-trip formatting, so write-then-read is lossless.

use std::io::{BufRead, Write};

use crate::error::{BpoError, Result};
use crate::model::{CampaignInstance, ImpressionMatrix};
use crate::scalar::Scalar;

pub const INSTANCE_HEADER: &str = "bpo-instance v1";

pub fn write_instance<T: Scalar, W: Write>(inst: &CampaignInstance<T>, mut w: W) -> Result<()> {
    writeln!(w, "{INSTANCE_HEADER}")?;
    writeln!(w, "N {}", inst.n_users())?;
    writeln!(w, "advertiser {}", inst.advertiser)?;
    writeln!(w, "budget {}", inst.budget)?;
    for u in 0..inst.n_users() {
        writeln!(
            w,
            "user {u} {} {} {}",
            inst.rates[u], inst.costs[u], inst.caps[u]
        )?;
    }
    for (s, v, p) in inst.impressions.entries() {
        writeln!(w, "imp {s} {v} {p}")?;
    }
    Ok(())
}

/// Tokenized non-empty, non-comment lines with their 1-based numbers.
pub(crate) fn data_lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(idx, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(line) => {
            let body = line.split('#').next().unwrap_or("").trim().to_string();
            (!body.is_empty()).then_some(Ok((idx + 1, body)))
        }
    })
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> BpoError {
    BpoError::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn field<F: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<F> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

pub(crate) fn expect_header<I>(lines: &mut I, header: &str) -> Result<()>
where
    I: Iterator<Item = Result<(usize, String)>>,
{
    match lines.next().transpose()? {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>().join(" ") == header => Ok(()),
        Some((n, l)) => Err(parse_err(n, format!("expected `{header}`, found `{l}`"))),
        None => Err(BpoError::Empty("instance file".into())),
    }
}

pub fn read_instance<T: Scalar, R: BufRead>(r: R) -> Result<CampaignInstance<T>> {
    let mut lines = data_lines(r);
    expect_header(&mut lines, INSTANCE_HEADER)?;

    let mut n: Option<usize> = None;
    let mut advertiser: Option<usize> = None;
    let mut budget: Option<f64> = None;
    let mut users: Vec<Option<(f64, f64, f64)>> = Vec::new();
    let mut triplets: Vec<(usize, usize, T)> = Vec::new();

    for item in lines {
        let (ln, line) = item?;
        let mut tok = line.split_whitespace();
        let key = tok.next().unwrap_or_default();
        let need_n = |n: Option<usize>| n.ok_or_else(|| parse_err(ln, "`N` must come first"));
        let check_id = |id: usize, n: usize| {
            if id < n {
                Ok(id)
            } else {
                Err(parse_err(ln, format!("user {id} outside 0..{n}")))
            }
        };
        match key {
            "N" => {
                if n.is_some() {
                    return Err(parse_err(ln, "duplicate `N`"));
                }
                let count: usize = field(ln, tok.next(), "user count")?;
                users = vec![None; count];
                n = Some(count);
            }
            "advertiser" => advertiser = Some(field(ln, tok.next(), "advertiser id")?),
            "budget" => budget = Some(field(ln, tok.next(), "budget")?),
            "user" => {
                let n = need_n(n)?;
                let id = check_id(field(ln, tok.next(), "user id")?, n)?;
                let rate = field(ln, tok.next(), "rate")?;
                let cost = field(ln, tok.next(), "cost")?;
                let cap = field(ln, tok.next(), "cap")?;
                if users[id].replace((rate, cost, cap)).is_some() {
                    return Err(parse_err(ln, format!("duplicate user {id}")));
                }
            }
            "imp" => {
                let n = need_n(n)?;
                let s = check_id(field(ln, tok.next(), "source")?, n)?;
                let v = check_id(field(ln, tok.next(), "viewer")?, n)?;
                let p: f64 = field(ln, tok.next(), "ratio")?;
                triplets.push((s, v, T::lit(p)));
            }
            other => return Err(parse_err(ln, format!("unknown record `{other}`"))),
        }
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing fields"));
        }
    }

    let n = n.ok_or_else(|| parse_err(0, "missing `N`"))?;
    let advertiser = advertiser.ok_or_else(|| parse_err(0, "missing `advertiser`"))?;
    let budget = budget.ok_or_else(|| parse_err(0, "missing `budget`"))?;
    let (mut rates, mut costs, mut caps) = (Vec::new(), Vec::new(), Vec::new());
    for u in users {
        let (l, c, r) = u.unwrap_or((0.0, 0.0, 1.0));
        rates.push(T::lit(l));
        costs.push(T::lit(c));
        caps.push(T::lit(r));
    }
    let m = ImpressionMatrix::from_triplets(n, triplets)?;
    CampaignInstance::new(m, advertiser, rates, costs, caps, T::lit(budget))
}

pub fn save_instance<T: Scalar>(inst: &CampaignInstance<T>, path: &std::path::Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_instance(inst, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_instance<T: Scalar>(path: &std::path::Path) -> Result<CampaignInstance<T>> {
    read_instance(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let m = ImpressionMatrix::from_triplets(3, [(1, 2, 0.1 + 0.2), (2, 0, 1.0 / 3.0)]).unwrap();
        let inst = CampaignInstance::new(
            m,
            1,
            vec![0.5, 1.0, 2.0],
            vec![0.002, 7.0, 1e-9],
            vec![1.0, 0.75, 1.0],
            0.03,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        let back: CampaignInstance<f64> = read_instance(&buf[..]).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn defaults_comments_and_self_loops() {
        let text = "# demo\nbpo-instance v1\nN 3\nadvertiser 0\nbudget 2 # money\n\
                    user 2 1 1 0.5\nimp 1 1 0.9\nimp 1 2 0.4\n";
        let inst: CampaignInstance<f64> = read_instance(text.as_bytes()).unwrap();
        assert_eq!(inst.rates, vec![0.0, 0.0, 1.0]);
        assert_eq!(inst.caps, vec![1.0, 1.0, 0.5]);
        assert_eq!(inst.impressions.nnz(), 1);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let bad = [
            "bpo-instance v2\nN 1\nadvertiser 0\nbudget 1\n",
            "bpo-instance v1\nadvertiser 0\nbudget 1\n",
            "bpo-instance v1\nN 2\nadvertiser 0\nbudget 1\nuser 0 1 1 1\nuser 0 1 1 1\n",
            "bpo-instance v1\nN 2\nadvertiser 0\nbudget 1\nimp 0 5 0.1\n",
            "bpo-instance v1\nN 2\nadvertiser 0\nbudget x\n",
            "bpo-instance v1\nN 2\nadvertiser 3\nbudget 1\n",
        ];
        for text in bad {
            assert!(read_instance::<f64, _>(text.as_bytes()).is_err(), "{text}");
        }
    }
}
