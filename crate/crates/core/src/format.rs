//! Text formats. All three are line-oriented, versioned by the header, and
//! serialize canonically so files round-trip byte-for-byte.
//!
//! ```text
//! plmap 1          density 1        porbit 1
//! 0 0              0 1/2            delta 1/64
//! 1/2 1            1/2 3/2          period 3
//! 1 0              1 3/2            0
//!                                   1/2
//!                                   1
//! ```
//!
//! The density footer line repeats the last cell's value at cut 1, so every
//! line is a (position, value) pair. `period` is optional in a porbit.

use crate::density::PiecewiseConstDensity;
use crate::error::{Error, Result};
use crate::plmap::PLMap;
use crate::rat::{format_rat, parse_rat, Rat};

/// Pseudo-orbit exchange record: the per-step slack, the points, and an
/// optional claimed period for cyclic orbits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PorbitFile {
    pub delta: Rat,
    pub period: Option<usize>,
    pub points: Vec<Rat>,
}

fn body_lines(input: &str, header: &str) -> Result<Vec<String>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        Some(h) => {
            return Err(Error::Parse(format!(
                "expected header {header:?}, found {h:?}"
            )))
        }
        None => return Err(Error::Parse("empty input".into())),
    }
    Ok(lines
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn split_pair(line: &str) -> Result<(Rat, Rat)> {
    let mut it = line.split_whitespace();
    let a = it
        .next()
        .ok_or_else(|| Error::Parse(format!("missing fields in line {line:?}")))?;
    let b = it
        .next()
        .ok_or_else(|| Error::Parse(format!("missing second field in line {line:?}")))?;
    if it.next().is_some() {
        return Err(Error::Parse(format!("too many fields in line {line:?}")));
    }
    Ok((parse_rat(a)?, parse_rat(b)?))
}

pub fn parse_plmap(input: &str) -> Result<PLMap> {
    let pts = body_lines(input, "plmap 1")?
        .iter()
        .map(|l| split_pair(l))
        .collect::<Result<Vec<_>>>()?;
    PLMap::new(pts)
}

pub fn write_plmap(map: &PLMap) -> String {
    let mut out = String::from("plmap 1\n");
    for (x, y) in map.breakpoints() {
        out.push_str(&format_rat(x));
        out.push(' ');
        out.push_str(&format_rat(y));
        out.push('\n');
    }
    out
}

pub fn parse_density(input: &str) -> Result<PiecewiseConstDensity> {
    let pairs = body_lines(input, "density 1")?
        .iter()
        .map(|l| split_pair(l))
        .collect::<Result<Vec<_>>>()?;
    if pairs.len() < 2 {
        return Err(Error::Parse("density needs at least two lines".into()));
    }
    let cuts: Vec<Rat> = pairs.iter().map(|(c, _)| c.clone()).collect();
    let values: Vec<Rat> = pairs[..pairs.len() - 1]
        .iter()
        .map(|(_, v)| v.clone())
        .collect();
    let last = &pairs[pairs.len() - 1];
    if last.1 != values[values.len() - 1] {
        return Err(Error::Parse(format!(
            "footer line must repeat the last value {}, found {}",
            values[values.len() - 1],
            last.1
        )));
    }
    PiecewiseConstDensity::new(cuts, values)
}

pub fn write_density(d: &PiecewiseConstDensity) -> String {
    let mut out = String::from("density 1\n");
    let cuts = d.cuts();
    let values = d.values();
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format_rat(&cuts[i]));
        out.push(' ');
        out.push_str(&format_rat(v));
        out.push('\n');
    }
    out.push_str(&format_rat(&cuts[cuts.len() - 1]));
    out.push(' ');
    out.push_str(&format_rat(&values[values.len() - 1]));
    out.push('\n');
    out
}

pub fn parse_porbit(input: &str) -> Result<PorbitFile> {
    let lines = body_lines(input, "porbit 1")?;
    let mut delta: Option<Rat> = None;
    let mut period: Option<usize> = None;
    let mut points: Vec<Rat> = Vec::new();
    for l in &lines {
        if let Some(rest) = l.strip_prefix("delta ") {
            if delta.is_some() || !points.is_empty() {
                return Err(Error::Parse("misplaced delta line".into()));
            }
            delta = Some(parse_rat(rest)?);
        } else if let Some(rest) = l.strip_prefix("period ") {
            if period.is_some() || !points.is_empty() {
                return Err(Error::Parse("misplaced period line".into()));
            }
            period = Some(
                rest.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad period {rest:?}: {e}")))?,
            );
        } else {
            points.push(parse_rat(l)?);
        }
    }
    let delta = delta.ok_or_else(|| Error::Parse("porbit needs a delta line".into()))?;
    if points.is_empty() {
        return Err(Error::Parse("porbit needs at least one point".into()));
    }
    Ok(PorbitFile {
        delta,
        period,
        points,
    })
}

pub fn write_porbit(p: &PorbitFile) -> String {
    let mut out = String::from("porbit 1\n");
    out.push_str("delta ");
    out.push_str(&format_rat(&p.delta));
    out.push('\n');
    if let Some(n) = p.period {
        out.push_str(&format!("period {n}\n"));
    }
    for x in &p.points {
        out.push_str(&format_rat(x));
        out.push('\n');
    }
    out
}
