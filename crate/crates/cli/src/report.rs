//! The `cpreport 1` analysis record: a line-oriented, exactly-rational,
//! deterministically-ordered dump of everything the library can certify
//! about one map. Reports render to text, parse back, and re-verify: every
//! embedded witness replays through the owning module's checker, so a
//! report is evidence, not narration.

use anyhow::{anyhow, bail, Context, Result};
use num::BigUint;
use plim::chains::{self, ChainReport};
use plim::density::{MeasureVerdict, PiecewiseConstDensity};
use plim::interval::{IntervalSet, RatInterval};
use plim::markov;
use plim::periodic::{self, CellCert, DensePeriodicityReport, PerSet};
use plim::rat::{self, format_rat, parse_rat, rat_int, Rat};
use plim::shadowing::{self, LinkingReport};
use plim::structure::{
    self, EntropyBounds, LeoCertificate, LogBound, Obstruction, SplitWitness, TurbulenceWitness,
    Verdict,
};
use plim::{format, PLMap};

/// FNV-1a over the canonical serialization; stable across platforms and
/// releases, unlike the std hasher.
pub fn digest(map: &PLMap) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in format::write_plmap(map).bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct ChainScale {
    pub eps: Rat,
    pub mesh: Rat,
    pub cells: usize,
    pub certified: usize,
    pub refuted: usize,
    pub unknown: usize,
    /// A genuine strict ε-chain from 1/2 back to itself, when that cell
    /// certified; replayable by itself.
    pub witness_chain: Option<Vec<Rat>>,
}

impl ChainScale {
    pub fn verdict(&self) -> &'static str {
        if self.certified == self.cells {
            "chain-recurrent"
        } else if self.refuted > 0 {
            "not-chain-recurrent"
        } else {
            "undecided"
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub digest: u64,
    pub pieces: usize,
    pub max_slope: Rat,
    pub surjective: bool,
    pub image: RatInterval,
    pub lebesgue: MeasureVerdict,
    pub max_period: usize,
    pub fixes: Vec<IntervalSet>,
    pub pers: Vec<PerSet>,
    pub dense: DensePeriodicityReport,
    pub chains: Vec<ChainScale>,
    pub leo: Verdict<LeoCertificate, Obstruction>,
    pub turbulence: Option<TurbulenceWitness>,
    pub square_turbulence: Option<TurbulenceWitness>,
    pub entropy_depth: usize,
    pub entropy: EntropyBounds,
    pub decomposition: structure::Decomposition,
    pub split: Option<SplitWitness>,
    pub linking: LinkingReport,
}

/// Run the full analysis pipeline. `scales` drive both chain certification
/// and the linking scan; `resolution` is the cell width for the dense
/// periodicity grid and a ceiling on the chain mesh; `depth` bounds the
/// entropy iterate, capped so iterates stay well under the piece budget,
/// and the linking search.
pub fn build(f: &PLMap, k: usize, scales: &[Rat], resolution: &Rat, depth: usize) -> Result<AnalysisReport> {
    if k == 0 || depth < 2 {
        bail!("analysis needs k >= 1 and depth >= 2");
    }
    if *resolution <= rat::zero() || *resolution > rat::one() {
        bail!("resolution must lie in (0, 1]");
    }
    let cells = cells_for(resolution)?;

    let mut fixes = Vec::with_capacity(k);
    let mut pers = Vec::with_capacity(k);
    for n in 1..=k {
        fixes.push(periodic::fix_set(f, n)?);
        pers.push(periodic::per_set(f, n)?);
    }
    let dense = periodic::dense_periodicity(f, cells, k)?;

    let mut chain_scales = Vec::with_capacity(scales.len());
    for eps in scales {
        let eight = rat_int(8);
        let mesh = rat::min(resolution.clone(), eps / eight);
        let report = chains::certify_chain_recurrent(f, eps, &mesh)?;
        chain_scales.push(summarize_chains(f, &report, &mesh));
    }

    let f2 = f.iterate(2)?;
    let entropy_depth = entropy_depth_for(f, depth);

    Ok(AnalysisReport {
        digest: digest(f),
        pieces: f.piece_count(),
        max_slope: f.max_abs_slope(),
        surjective: f.is_surjective(),
        image: f.image(),
        lebesgue: PiecewiseConstDensity::lebesgue().check_invariance(f),
        max_period: k,
        fixes,
        pers,
        dense,
        chains: chain_scales,
        leo: structure::certify_leo(f),
        turbulence: structure::find_turbulence(f),
        square_turbulence: structure::find_turbulence(&f2),
        entropy_depth,
        entropy: structure::entropy_bounds(f, entropy_depth)?,
        decomposition: structure::decompose(f)?,
        split: structure::find_split(f)?,
        linking: shadowing::check_linking(f, scales, depth)?,
    })
}

fn summarize_chains(f: &PLMap, report: &ChainReport, mesh: &Rat) -> ChainScale {
    let mut certified = 0;
    let mut refuted = 0;
    let mut unknown = 0;
    for v in &report.verdicts {
        match v {
            chains::CellVerdict::Certified { .. } => certified += 1,
            chains::CellVerdict::Refuted { .. } => refuted += 1,
            chains::CellVerdict::Unknown => unknown += 1,
        }
    }
    ChainScale {
        eps: report.eps.clone(),
        mesh: mesh.clone(),
        cells: report.verdicts.len(),
        certified,
        refuted,
        unknown,
        witness_chain: report.genuine_chain(f, &rat::rat(1, 2)),
    }
}

fn cells_for(resolution: &Rat) -> Result<usize> {
    let mut n = 1usize;
    while rat::one() / rat_int(n as i64) > *resolution {
        n += 1;
        if n > 4096 {
            bail!("resolution finer than 1/4096 is not supported");
        }
    }
    Ok(n)
}

/// Largest iterate depth (≤ wanted) whose lap count stays under 10⁵, so
/// entropy never trips the piece cap on spiky inputs.
fn entropy_depth_for(f: &PLMap, wanted: usize) -> usize {
    let laps = f.lap_count().max(2) as u64;
    let mut d = 1usize;
    let mut total = laps;
    while d < wanted && total.saturating_mul(laps) <= 100_000 {
        total = total.saturating_mul(laps);
        d += 1;
    }
    d
}

// ---------------------------------------------------------------------------
// rendering

fn iv(i: &RatInterval) -> String {
    format!("[{},{}]", format_rat(&i.lo), format_rat(&i.hi))
}

/// Items rendered with a leading space each, so `key{rats(..)}` never
/// leaves a trailing space on an empty list.
fn rats(xs: &[Rat]) -> String {
    xs.iter().map(|x| format!(" {}", format_rat(x))).collect()
}

fn ivs(xs: &[RatInterval]) -> String {
    xs.iter().map(|x| format!(" {}", iv(x))).collect()
}

fn log_bound(b: &LogBound) -> String {
    format!("log({})/{}", b.base, b.root)
}

pub fn render(r: &AnalysisReport) -> String {
    let mut o = String::new();
    o.push_str("cpreport 1\n");
    o.push_str(&format!("digest {:016x}\n", r.digest));
    o.push_str(&format!("pieces {}\n", r.pieces));
    o.push_str(&format!("max-slope {}\n", format_rat(&r.max_slope)));

    o.push_str("\n[surjectivity]\n");
    o.push_str(&format!("surjective {}\n", r.surjective));
    o.push_str(&format!(
        "image {} {}\n",
        format_rat(&r.image.lo),
        format_rat(&r.image.hi)
    ));

    o.push_str("\n[measure]\n");
    match &r.lebesgue {
        MeasureVerdict::Preserved => o.push_str("lebesgue preserved\n"),
        MeasureVerdict::Violated {
            cell,
            direct_mass,
            pullback_mass,
        } => {
            o.push_str("lebesgue violated\n");
            o.push_str(&format!("violation-cell {}\n", iv(cell)));
            o.push_str(&format!("direct-mass {}\n", format_rat(direct_mass)));
            o.push_str(&format!("pullback-mass {}\n", format_rat(pullback_mass)));
        }
    }

    o.push_str("\n[periodic]\n");
    o.push_str(&format!("max-period {}\n", r.max_period));
    for (i, fixn) in r.fixes.iter().enumerate() {
        let n = i + 1;
        let pts: Vec<Rat> = fixn
            .parts()
            .iter()
            .filter(|p| p.is_point())
            .map(|p| p.lo.clone())
            .collect();
        let segs: Vec<RatInterval> = fixn
            .parts()
            .iter()
            .filter(|p| !p.is_point())
            .cloned()
            .collect();
        o.push_str(&format!("fix {} points{}\n", n, rats(&pts)));
        if !segs.is_empty() {
            o.push_str(&format!("fix {} intervals{}\n", n, ivs(&segs)));
        }
    }
    for (i, per) in r.pers.iter().enumerate() {
        let n = i + 1;
        o.push_str(&format!("per {} points{}\n", n, rats(&per.isolated)));
        if !per.interval_components.is_empty() {
            o.push_str(&format!(
                "per {} intervals{}\n",
                n,
                ivs(&per.interval_components)
            ));
        }
    }

    o.push_str("\n[dense-periodicity]\n");
    o.push_str(&format!(
        "cells {} max-period {}\n",
        r.dense.cells, r.dense.max_period
    ));
    o.push_str(&format!("all-witnessed {}\n", r.dense.all_witnessed()));
    for (i, v) in r.dense.verdicts.iter().enumerate() {
        let lo = rat_int(i as i64) / rat_int(r.dense.cells as i64);
        let hi = rat_int(i as i64 + 1) / rat_int(r.dense.cells as i64);
        let cell = RatInterval::new(lo, hi);
        match v {
            CellCert::Witnessed { period, point } => o.push_str(&format!(
                "cell {} {} period {} point {}\n",
                i,
                iv(&cell),
                period,
                format_rat(point)
            )),
            CellCert::Exhausted { max_period } => o.push_str(&format!(
                "cell {} {} exhausted {}\n",
                i,
                iv(&cell),
                max_period
            )),
        }
    }

    o.push_str("\n[chains]\n");
    for s in &r.chains {
        o.push_str(&format!(
            "scale {} mesh {} cells {} certified {} refuted {} unknown {} verdict {}\n",
            format_rat(&s.eps),
            format_rat(&s.mesh),
            s.cells,
            s.certified,
            s.refuted,
            s.unknown,
            s.verdict()
        ));
        if let Some(chain) = &s.witness_chain {
            o.push_str(&format!("witness-chain{}\n", rats(chain)));
        }
    }

    o.push_str("\n[leo]\n");
    match &r.leo {
        Verdict::Certified(c) => {
            o.push_str("verdict certified\n");
            o.push_str(&format!("grid{}\n", rats(&c.grid)));
            o.push_str(&format!("exponent {}\n", c.exponent));
            o.push_str(&format!("min-slope {}\n", format_rat(&c.min_slope)));
        }
        Verdict::Disproved(ob) => {
            o.push_str("verdict disproved\n");
            o.push_str(&render_obstruction(ob));
        }
        Verdict::Unknown(why) => {
            o.push_str("verdict unknown\n");
            o.push_str(&format!("reason {why}\n"));
        }
    }

    o.push_str("\n[turbulence]\n");
    match &r.turbulence {
        Some(w) => o.push_str(&format!("map-witness {} {}\n", iv(&w.left), iv(&w.right))),
        None => o.push_str("map-witness none\n"),
    }
    match &r.square_turbulence {
        Some(w) => o.push_str(&format!(
            "square-witness {} {}\n",
            iv(&w.left),
            iv(&w.right)
        )),
        None => o.push_str("square-witness none\n"),
    }

    o.push_str("\n[entropy]\n");
    o.push_str(&format!("depth {}\n", r.entropy_depth));
    o.push_str(&format!(
        "lower {} source {}\n",
        log_bound(&r.entropy.lower),
        r.entropy.lower_source
    ));
    o.push_str(&format!(
        "upper {} source {}\n",
        log_bound(&r.entropy.upper),
        r.entropy.upper_source
    ));
    o.push_str(&format!(
        "approx ~{:.4} ~{:.4}\n",
        r.entropy.lower.approx(),
        r.entropy.upper.approx()
    ));

    o.push_str("\n[decomposition]\n");
    o.push_str(&format!("pieces {}\n", r.decomposition.pieces.len()));
    for (i, p) in r.decomposition.pieces.iter().enumerate() {
        o.push_str(&format!("piece {} {} -> {}\n", i, iv(p), r.decomposition.sigma[i]));
    }

    o.push_str("\n[split]\n");
    match &r.split {
        Some(s) => o.push_str(&format!(
            "cut {} swapped {}\n",
            format_rat(&s.cut),
            s.swapped
        )),
        None => o.push_str("split none\n"),
    }

    o.push_str("\n[linking]\n");
    o.push_str(&format!("depth {}\n", r.linking.depth));
    o.push_str(&format!("scales{}\n", rats(&r.linking.scales)));
    o.push_str(&format!("critical{}\n", rats(&r.linking.critical)));
    for f in &r.linking.findings {
        o.push_str(&format!(
            "finding from {} to {} scale {} depth {} witness {}\n",
            format_rat(&f.from),
            format_rat(&f.to),
            format_rat(&f.scale),
            f.depth,
            format_rat(&f.z)
        ));
    }
    for g in &r.linking.gaps {
        o.push_str(&format!(
            "gap from {} scale {} searched-to {}\n",
            format_rat(&g.from),
            format_rat(&g.scale),
            g.searched_to
        ));
    }
    o.push_str(&format!("fully-linked {}\n", r.linking.fully_linked()));
    o.push_str(&format!("tube-overflow {}\n", r.linking.tube_overflow));
    o.push_str(&format!("note {}\n", r.linking.note));
    o
}

fn render_obstruction(ob: &Obstruction) -> String {
    match ob {
        Obstruction::FlatPiece { domain, value } => {
            format!("obstruction flat-piece {} value {}\n", iv(domain), format_rat(value))
        }
        Obstruction::NotSurjective { image } => {
            format!("obstruction not-surjective {}\n", iv(image))
        }
        Obstruction::TrappedUnion { cells } => {
            format!("obstruction trapped-union{}\n", ivs(cells))
        }
        Obstruction::PeriodicClasses { period, class_union } => format!(
            "obstruction periodic-classes period {} union{}\n",
            period,
            ivs(class_union)
        ),
        Obstruction::ImageCycle {
            seed,
            entered_at,
            period,
            members,
        } => format!(
            "obstruction image-cycle seed {} entered-at {} period {} members{}\n",
            iv(seed),
            entered_at,
            period,
            ivs(members)
        ),
    }
}

// ---------------------------------------------------------------------------
// parsing

/// A report read back from text. Everything is optional so that damaged
/// reports still parse far enough for verification to say what is wrong.
#[derive(Debug, Default)]
pub struct ParsedReport {
    pub digest: Option<u64>,
    pub pieces: Option<usize>,
    pub surjective: Option<bool>,
    pub image: Option<RatInterval>,
    pub lebesgue_preserved: Option<bool>,
    pub violation: Option<(RatInterval, Rat, Rat)>,
    pub fix_points: Vec<(usize, Vec<Rat>)>,
    pub fix_intervals: Vec<(usize, Vec<RatInterval>)>,
    pub per_points: Vec<(usize, Vec<Rat>)>,
    pub dense_witnessed: Vec<(RatInterval, usize, Rat)>,
    pub chain_witnesses: Vec<(Rat, Vec<Rat>)>,
    pub leo_verdict: Option<String>,
    pub leo_grid: Option<Vec<Rat>>,
    pub leo_exponent: Option<usize>,
    pub leo_min_slope: Option<Rat>,
    pub obstruction: Option<ParsedObstruction>,
    pub map_turbulence: Option<Option<TurbulenceWitness>>,
    pub square_turbulence: Option<Option<TurbulenceWitness>>,
    pub entropy_depth: Option<usize>,
    pub entropy_lower: Option<LogBound>,
    pub entropy_upper: Option<LogBound>,
    pub decomposition: Vec<(RatInterval, usize)>,
    pub split: Option<Option<SplitWitness>>,
    pub findings: Vec<(Rat, Rat, Rat, usize, Rat)>,
}

#[derive(Debug)]
pub enum ParsedObstruction {
    FlatPiece(RatInterval, Rat),
    NotSurjective(RatInterval),
    TrappedUnion(Vec<RatInterval>),
    PeriodicClasses(usize, Vec<RatInterval>),
    ImageCycle(RatInterval, usize, usize, Vec<RatInterval>),
}

fn parse_iv(tok: &str) -> Result<RatInterval> {
    let inner = tok
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| anyhow!("bad interval token {tok:?}"))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| anyhow!("bad interval token {tok:?}"))?;
    Ok(RatInterval::new(parse_rat(a)?, parse_rat(b)?))
}

fn parse_rat_list(toks: &[&str]) -> Result<Vec<Rat>> {
    toks.iter().map(|t| Ok(parse_rat(t)?)).collect()
}

fn parse_iv_list(toks: &[&str]) -> Result<Vec<RatInterval>> {
    toks.iter().map(|t| parse_iv(t)).collect()
}

fn parse_log_bound(tok: &str) -> Result<LogBound> {
    let rest = tok
        .strip_prefix("log(")
        .ok_or_else(|| anyhow!("bad bound {tok:?}"))?;
    let (base, root) = rest
        .split_once(")/")
        .ok_or_else(|| anyhow!("bad bound {tok:?}"))?;
    Ok(LogBound {
        base: base.parse::<BigUint>().context("bad bound base")?,
        root: root.parse().context("bad bound root")?,
    })
}

pub fn parse(input: &str) -> Result<ParsedReport> {
    let mut lines = input.lines();
    if lines.next().map(str::trim) != Some("cpreport 1") {
        bail!("not a cpreport 1 file");
    }
    let mut r = ParsedReport::default();
    let mut section = String::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = line.to_string();
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let key = toks[0];
        let rest = &toks[1..];
        match (section.as_str(), key) {
            ("", "digest") => {
                r.digest = Some(u64::from_str_radix(rest[0], 16).context("bad digest")?)
            }
            ("", "pieces") => r.pieces = Some(rest[0].parse()?),
            ("", "max-slope") => {}
            ("[surjectivity]", "surjective") => r.surjective = Some(rest[0].parse()?),
            ("[surjectivity]", "image") => {
                r.image = Some(RatInterval::new(parse_rat(rest[0])?, parse_rat(rest[1])?))
            }
            ("[measure]", "lebesgue") => r.lebesgue_preserved = Some(rest[0] == "preserved"),
            ("[measure]", "violation-cell") => {
                let cell = parse_iv(rest[0])?;
                r.violation = Some((cell, rat::zero(), rat::zero()));
            }
            ("[measure]", "direct-mass") => {
                if let Some(v) = r.violation.as_mut() {
                    v.1 = parse_rat(rest[0])?;
                }
            }
            ("[measure]", "pullback-mass") => {
                if let Some(v) = r.violation.as_mut() {
                    v.2 = parse_rat(rest[0])?;
                }
            }
            ("[periodic]", "max-period") => {}
            ("[periodic]", "fix") => {
                let n: usize = rest[0].parse()?;
                match rest[1] {
                    "points" => r.fix_points.push((n, parse_rat_list(&rest[2..])?)),
                    "intervals" => r.fix_intervals.push((n, parse_iv_list(&rest[2..])?)),
                    other => bail!("bad fix line kind {other:?}"),
                }
            }
            ("[periodic]", "per") => {
                let n: usize = rest[0].parse()?;
                if rest[1] == "points" {
                    r.per_points.push((n, parse_rat_list(&rest[2..])?));
                }
            }
            ("[dense-periodicity]", "cell") => {
                if rest[2] == "period" {
                    r.dense_witnessed.push((
                        parse_iv(rest[1])?,
                        rest[3].parse()?,
                        parse_rat(rest[5])?,
                    ));
                }
            }
            ("[dense-periodicity]", _) => {}
            ("[chains]", "scale") => {
                // remember the scale so a following witness-chain can bind to it
                r.chain_witnesses.push((parse_rat(rest[0])?, Vec::new()));
            }
            ("[chains]", "witness-chain") => {
                let chain = parse_rat_list(rest)?;
                let slot = r
                    .chain_witnesses
                    .last_mut()
                    .ok_or_else(|| anyhow!("witness-chain before any scale line"))?;
                slot.1 = chain;
            }
            ("[leo]", "verdict") => r.leo_verdict = Some(rest[0].to_string()),
            ("[leo]", "grid") => r.leo_grid = Some(parse_rat_list(rest)?),
            ("[leo]", "exponent") => r.leo_exponent = Some(rest[0].parse()?),
            ("[leo]", "min-slope") => r.leo_min_slope = Some(parse_rat(rest[0])?),
            ("[leo]", "obstruction") => r.obstruction = Some(parse_obstruction(rest)?),
            ("[leo]", "reason") => {}
            ("[turbulence]", "map-witness") => {
                r.map_turbulence = Some(parse_turbulence(rest)?);
            }
            ("[turbulence]", "square-witness") => {
                r.square_turbulence = Some(parse_turbulence(rest)?);
            }
            ("[entropy]", "depth") => r.entropy_depth = Some(rest[0].parse()?),
            ("[entropy]", "lower") => r.entropy_lower = Some(parse_log_bound(rest[0])?),
            ("[entropy]", "upper") => r.entropy_upper = Some(parse_log_bound(rest[0])?),
            ("[entropy]", "approx") => {}
            ("[decomposition]", "pieces") => {}
            ("[decomposition]", "piece") => {
                r.decomposition.push((parse_iv(rest[1])?, rest[3].parse()?));
            }
            ("[split]", "cut") => {
                r.split = Some(Some(SplitWitness {
                    cut: parse_rat(rest[0])?,
                    swapped: rest[2].parse()?,
                }))
            }
            ("[split]", "split") => r.split = Some(None),
            ("[linking]", "finding") => {
                r.findings.push((
                    parse_rat(rest[1])?,
                    parse_rat(rest[3])?,
                    parse_rat(rest[5])?,
                    rest[7].parse()?,
                    parse_rat(rest[9])?,
                ));
            }
            ("[linking]", _) => {}
            _ => {}
        }
    }
    Ok(r)
}

fn parse_turbulence(rest: &[&str]) -> Result<Option<TurbulenceWitness>> {
    if rest[0] == "none" {
        return Ok(None);
    }
    Ok(Some(TurbulenceWitness {
        left: parse_iv(rest[0])?,
        right: parse_iv(rest[1])?,
    }))
}

fn parse_obstruction(rest: &[&str]) -> Result<ParsedObstruction> {
    match rest[0] {
        "flat-piece" => Ok(ParsedObstruction::FlatPiece(
            parse_iv(rest[1])?,
            parse_rat(rest[3])?,
        )),
        "not-surjective" => Ok(ParsedObstruction::NotSurjective(parse_iv(rest[1])?)),
        "trapped-union" => Ok(ParsedObstruction::TrappedUnion(parse_iv_list(&rest[1..])?)),
        "periodic-classes" => Ok(ParsedObstruction::PeriodicClasses(
            rest[2].parse()?,
            parse_iv_list(&rest[4..])?,
        )),
        "image-cycle" => Ok(ParsedObstruction::ImageCycle(
            parse_iv(rest[2])?,
            rest[4].parse()?,
            rest[6].parse()?,
            parse_iv_list(&rest[8..])?,
        )),
        other => bail!("unknown obstruction kind {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// verification: replay every embedded witness against the map

pub struct Check {
    pub what: String,
    pub ok: bool,
    pub detail: String,
}

fn check(list: &mut Vec<Check>, what: &str, ok: bool, detail: impl Into<String>) {
    list.push(Check {
        what: what.to_string(),
        ok,
        detail: detail.into(),
    });
}

/// Replay a parsed report against a map. Witness lines are re-verified
/// exactly; pure exhaustion statements (dense-periodicity `exhausted`,
/// linking gaps) carry no witness and are skipped.
pub fn verify(r: &ParsedReport, f: &PLMap) -> Vec<Check> {
    let mut out = Vec::new();

    match r.digest {
        Some(d) => check(
            &mut out,
            "digest",
            d == digest(f),
            "map digest matches the report",
        ),
        None => check(&mut out, "digest", false, "digest line missing"),
    }
    if let Some(p) = r.pieces {
        check(&mut out, "pieces", p == f.piece_count(), "piece count");
    }
    match (&r.surjective, &r.image) {
        (Some(s), Some(im)) => {
            let actual = f.image();
            check(
                &mut out,
                "surjectivity",
                *s == f.is_surjective() && *im == actual,
                "image recomputed",
            );
        }
        _ => check(&mut out, "surjectivity", false, "section missing"),
    }

    match r.lebesgue_preserved {
        Some(claim) => {
            let verdict = PiecewiseConstDensity::lebesgue().check_invariance(f);
            let actual = matches!(verdict, MeasureVerdict::Preserved);
            let mut ok = claim == actual;
            let mut detail = String::from("invariance recomputed");
            if let (false, Some((cell, direct, pullback))) = (claim, &r.violation) {
                let mu = PiecewiseConstDensity::lebesgue();
                let direct_actual = mu.mass_on(cell);
                let mut pullback_actual = rat::zero();
                for part in f.preimage_interval(cell).parts() {
                    pullback_actual = pullback_actual + mu.mass_on(part);
                }
                ok = ok && direct_actual == *direct && pullback_actual == *pullback;
                ok = ok && direct != pullback;
                detail = "violation cell masses replayed".into();
            }
            check(&mut out, "measure", ok, detail);
        }
        None => check(&mut out, "measure", false, "section missing"),
    }

    for (n, pts) in &r.fix_points {
        let ok = pts.iter().all(|x| {
            let mut w = x.clone();
            for _ in 0..*n {
                w = f.eval(&w);
            }
            w == *x
        });
        check(
            &mut out,
            &format!("fix {n}"),
            ok,
            format!("{} fixed points of the {n}-th iterate replayed", pts.len()),
        );
    }
    for (n, segs) in &r.fix_intervals {
        let ok = segs.iter().all(|s| {
            [&s.lo, &s.hi, &s.midpoint()].iter().all(|x| {
                let mut w = (*x).clone();
                for _ in 0..*n {
                    w = f.eval(&w);
                }
                w == **x
            })
        });
        check(
            &mut out,
            &format!("fix {n} segments"),
            ok,
            "segment endpoints and midpoints replayed",
        );
    }
    for (n, pts) in &r.per_points {
        let ok = pts.iter().all(|x| minimal_period(f, x, *n));
        check(
            &mut out,
            &format!("per {n}"),
            ok,
            format!("{} minimal-period-{n} points replayed", pts.len()),
        );
    }

    let dense_ok = r.dense_witnessed.iter().all(|(cell, period, point)| {
        if !cell.contains(point) {
            return false;
        }
        let mut w = point.clone();
        for _ in 0..*period {
            w = f.eval(&w);
        }
        w == *point
    });
    check(
        &mut out,
        "dense-periodicity",
        dense_ok,
        format!("{} cell witnesses replayed", r.dense_witnessed.len()),
    );

    for (eps, chain) in &r.chain_witnesses {
        if chain.is_empty() {
            continue;
        }
        let ok = chains::verify_chain(f, chain, eps) && chain.first() == chain.last();
        check(
            &mut out,
            &format!("chain witness at {}", format_rat(eps)),
            ok,
            "strict closed chain replayed",
        );
    }

    verify_leo(&mut out, r, f);

    if let Some(w) = r.map_turbulence.as_ref().and_then(|o| o.as_ref()) {
        check(
            &mut out,
            "turbulence",
            structure::verify_turbulence(f, w),
            "witness intervals replayed",
        );
    }
    if let Some(w) = r.square_turbulence.as_ref().and_then(|o| o.as_ref()) {
        let ok = match f.iterate(2) {
            Ok(f2) => structure::verify_turbulence(&f2, w),
            Err(_) => false,
        };
        check(&mut out, "square turbulence", ok, "witness replayed on the second iterate");
    }

    match (r.entropy_depth, &r.entropy_lower, &r.entropy_upper) {
        (Some(d), Some(lo), Some(hi)) => match structure::entropy_bounds(f, d) {
            Ok(b) => check(
                &mut out,
                "entropy",
                b.lower == *lo && b.upper == *hi,
                format!("bounds recomputed at depth {d}"),
            ),
            Err(e) => check(&mut out, "entropy", false, format!("recompute failed: {e}")),
        },
        _ => check(&mut out, "entropy", false, "section missing"),
    }

    if !r.decomposition.is_empty() {
        let ok = verify_decomposition(f, &r.decomposition);
        check(
            &mut out,
            "decomposition",
            ok,
            "tiling and exact piece permutation replayed",
        );
    }

    if let Some(Some(s)) = &r.split {
        let left = RatInterval::new(rat::zero(), s.cut.clone());
        let right = RatInterval::new(s.cut.clone(), rat::one());
        let il = f.image_interval(&left);
        let ir = f.image_interval(&right);
        let ok = if s.swapped {
            right.contains_interval(&il) && left.contains_interval(&ir)
        } else {
            left.contains_interval(&il) && right.contains_interval(&ir)
        };
        check(&mut out, "split", ok, "two-piece invariance replayed");
    }

    let link_ok = r.findings.iter().all(|(from, to, scale, depth, z)| {
        if rat::abs(&(z - from)) >= *scale {
            return false;
        }
        let mut w = z.clone();
        let mut o = from.clone();
        for _ in 1..*depth {
            w = f.eval(&w);
            o = f.eval(&o);
            if rat::abs(&(&w - &o)) >= *scale {
                return false;
            }
        }
        f.eval(&w) == *to
    });
    check(
        &mut out,
        "linking",
        link_ok,
        format!("{} findings replayed strictly", r.findings.len()),
    );

    out
}

/// The claimed pieces must tile [0,1] left to right, sigma must permute
/// them, and f must carry each piece exactly onto its image piece.
fn verify_decomposition(f: &PLMap, pieces: &[(RatInterval, usize)]) -> bool {
    if pieces[0].0.lo != rat::zero() || pieces.last().unwrap().0.hi != rat::one() {
        return false;
    }
    for w in pieces.windows(2) {
        if w[0].0.hi != w[1].0.lo {
            return false;
        }
    }
    let mut hit = vec![false; pieces.len()];
    for (p, target) in pieces {
        let Some(slot) = hit.get_mut(*target) else {
            return false;
        };
        if *slot || f.image_interval(p) != pieces[*target].0 {
            return false;
        }
        *slot = true;
    }
    true
}

fn minimal_period(f: &PLMap, x: &Rat, n: usize) -> bool {
    let mut w = x.clone();
    for step in 1..=n {
        w = f.eval(&w);
        if step < n && w == *x {
            return false;
        }
    }
    w == *x
}

fn verify_leo(out: &mut Vec<Check>, r: &ParsedReport, f: &PLMap) {
    match r.leo_verdict.as_deref() {
        Some("certified") => {
            let (Some(grid), Some(exponent), Some(min_slope)) =
                (&r.leo_grid, r.leo_exponent, &r.leo_min_slope)
            else {
                check(out, "leo", false, "certificate lines missing");
                return;
            };
            // the grid is the whole certificate: markovizing over it must
            // add nothing, and primitivity plus expansion must replay
            let ok = match markov::markovize(f, grid, grid.len() + f.piece_count() + 2) {
                Ok(model) => {
                    model.points() == grid.as_slice()
                        && model.primitivity_exponent() == Some(exponent)
                        && (0..model.cell_count()).all(|i| rat::abs(model.slope(i)) >= *min_slope)
                        && *min_slope > rat::one()
                }
                Err(_) => false,
            };
            check(out, "leo", ok, "invariant grid and primitivity replayed");
        }
        Some("disproved") => {
            let ok = match &r.obstruction {
                Some(ob) => verify_obstruction(f, ob),
                None => false,
            };
            check(out, "leo", ok, "obstruction replayed");
        }
        Some("unknown") => check(out, "leo", true, "no witness to replay"),
        _ => check(out, "leo", false, "verdict line missing"),
    }
}

fn verify_obstruction(f: &PLMap, ob: &ParsedObstruction) -> bool {
    let unit = RatInterval::new(rat::zero(), rat::one());
    match ob {
        ParsedObstruction::FlatPiece(domain, value) => {
            !domain.is_point() && f.image_interval(domain) == RatInterval::point(value.clone())
        }
        ParsedObstruction::NotSurjective(image) => f.image() == *image && *image != unit,
        ParsedObstruction::TrappedUnion(cells) => {
            let union = IntervalSet::from_parts(cells.clone());
            let covers_all = union.contains(&rat::zero())
                && union.contains(&rat::one())
                && union.parts().len() == 1;
            !covers_all
                && cells.iter().all(|c| {
                    f.image_interval(c)
                        .subdivide_into(&union)
                })
        }
        ParsedObstruction::PeriodicClasses(period, class_union) => {
            if *period < 2 {
                return false;
            }
            let union = IntervalSet::from_parts(class_union.clone());
            class_union.iter().all(|c| {
                let mut img = c.clone();
                // one step must leave the class, `period` steps must return
                let mut leaves = false;
                for step in 1..=*period {
                    img = f.image_interval(&img);
                    if step == 1 {
                        leaves = img_outside(&img, &union);
                    }
                }
                leaves && img.subdivide_into(&union)
            })
        }
        ParsedObstruction::ImageCycle(seed, entered_at, period, members) => {
            if members.len() != *period || members.iter().any(|m| *m == unit) {
                return false;
            }
            let mut img = seed.clone();
            for _ in 0..*entered_at {
                img = f.image_interval(&img);
            }
            if img != members[0] {
                return false;
            }
            (0..*period).all(|i| f.image_interval(&members[i]) == members[(i + 1) % period])
        }
    }
}

fn img_outside(img: &RatInterval, union: &IntervalSet) -> bool {
    union.intersect_interval(img).parts().iter().all(|p| p.is_point())
}

trait SubdivideExt {
    fn subdivide_into(&self, set: &IntervalSet) -> bool;
}

impl SubdivideExt for RatInterval {
    /// Whole-interval containment in a finite union.
    fn subdivide_into(&self, set: &IntervalSet) -> bool {
        let within = set.intersect_interval(self);
        within.parts().len() == 1 && within.parts()[0] == *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use plim::maps;
    use plim::rat::rat;

    fn tent_report() -> AnalysisReport {
        build(
            &maps::tent(),
            4,
            &[rat(1, 4), rat(1, 10)],
            &rat(1, 16),
            6,
        )
        .unwrap()
    }

    #[test]
    fn tent_report_renders_the_headline_certificates() {
        let text = render(&tent_report());
        assert!(text.starts_with("cpreport 1\n"));
        assert!(text.contains("lebesgue preserved"));
        assert!(text.contains("fix 1 points 0 2/3"));
        assert!(text.contains("per 2 points 2/5 4/5"));
        assert!(text.contains("verdict certified"));
        assert!(text.contains("lower log(64)/6"));
        assert!(text.contains("upper log(64)/6"));
        assert!(text.contains("all-witnessed true"));
        assert!(text.contains("verdict chain-recurrent"));
        assert!(text.contains("fully-linked true"));
    }

    #[test]
    fn reports_replay_through_their_own_verifier() {
        let f = maps::tent();
        let text = render(&tent_report());
        let parsed = parse(&text).unwrap();
        let checks = verify(&parsed, &f);
        assert!(!checks.is_empty());
        for c in &checks {
            assert!(c.ok, "{} failed: {}", c.what, c.detail);
        }
        // same report against a different map must fail the digest
        let other = maps::identity();
        let checks = verify(&parsed, &other);
        assert!(checks.iter().any(|c| !c.ok));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render(&tent_report());
        let b = render(&tent_report());
        assert_eq!(a, b);
    }

    #[test]
    fn identity_report_lands_in_the_zero_entropy_branch() {
        let f = maps::identity();
        let r = build(&f, 2, &[rat(1, 4)], &rat(1, 8), 4).unwrap();
        let text = render(&r);
        assert!(text.contains("lower log(1)/1"));
        assert!(text.contains("upper log(1)/4"));
        assert!(text.contains("fix 1 intervals [0,1]"));
        assert!(text.contains("verdict disproved"));
        let parsed = parse(&text).unwrap();
        for c in verify(&parsed, &f) {
            assert!(c.ok, "{} failed: {}", c.what, c.detail);
        }
    }
}
