//! Dynamical structure certificates: locally-eventually-onto and mixing
//! verdicts with exact witnesses either way, turbulence witnesses, entropy
//! bounds as exact logarithmic brackets, exactly-permuted interval
//! decompositions, two-piece splits, and the straight-line homotopy to the
//! identity inside the measure-preserving class.

use crate::error::{Error, Result};
use crate::interval::{IntervalSet, RatInterval};
use crate::markov::{markovize, MarkovModel};
use crate::plmap::PLMap;
use crate::rat::{self, Rat};
use num::BigUint;
use std::collections::BTreeMap;

/// Three-valued certification outcome. `Unknown` is an honest refusal, not
/// a failure: it names what stopped the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<C, O> {
    Certified(C),
    Disproved(O),
    Unknown(String),
}

impl<C, O> Verdict<C, O> {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified(_))
    }
    pub fn is_disproved(&self) -> bool {
        matches!(self, Verdict::Disproved(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeoCertificate {
    /// The f-invariant grid underlying the covering argument.
    pub grid: Vec<Rat>,
    /// Minimal k such that every cell k-step covers every cell.
    pub exponent: usize,
    /// min |slope|; > 1 is what upgrades primitivity to expansion.
    pub min_slope: Rat,
}

/// Exact witnesses that a map fails to be locally eventually onto (and in
/// most cases fails mixing too).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Obstruction {
    /// A nondegenerate interval collapses to a point.
    FlatPiece { domain: RatInterval, value: Rat },
    /// Images can never escape f([0,1]) ≠ [0,1].
    NotSurjective { image: RatInterval },
    /// A proper union of grid cells maps into itself.
    TrappedUnion { cells: Vec<RatInterval> },
    /// Grid cells split into p ≥ 2 classes permuted cyclically.
    PeriodicClasses {
        period: usize,
        class_union: Vec<RatInterval>,
    },
    /// The exact forward images of a seed interval fall into a cycle of
    /// proper subintervals.
    ImageCycle {
        seed: RatInterval,
        entered_at: usize,
        period: usize,
        members: Vec<RatInterval>,
    },
}

pub type LeoVerdict = Verdict<LeoCertificate, Obstruction>;

const MARKOV_BUDGET: usize = 4096;
const SCAN_CELLS: usize = 64;
const SCAN_BUDGET: usize = 512;

/// Locally eventually onto: every nondegenerate closed subinterval has some
/// forward image equal to [0,1].
///
/// Certification: an invariant Markov grid whose covering matrix is
/// primitive, together with min |slope| > 1. Expansion forces every
/// interval to eventually contain a full grid cell, and primitivity
/// pushes a cell onto everything.
pub fn certify_leo(f: &PLMap) -> LeoVerdict {
    if let Some(w) = flat_piece(f) {
        return Verdict::Disproved(w);
    }
    let image = f.image();
    if !(image.lo == rat::zero() && image.hi == rat::one()) {
        return Verdict::Disproved(Obstruction::NotSurjective { image });
    }
    match markovize(f, &[], MARKOV_BUDGET) {
        Ok(model) => match covering_obstruction(&model) {
            Some(o) => Verdict::Disproved(o),
            None => {
                // primitive from here on
                let min_slope = f.min_abs_slope();
                if min_slope > rat::one() {
                    let exponent = model
                        .primitivity_exponent()
                        .expect("primitive covering has an exponent");
                    Verdict::Certified(LeoCertificate {
                        grid: model.points().to_vec(),
                        exponent,
                        min_slope,
                    })
                } else {
                    match image_cycle_scan(f, SCAN_CELLS, SCAN_BUDGET) {
                        Some(o) => Verdict::Disproved(o),
                        None => Verdict::Unknown(format!(
                            "covering is primitive but min |slope| = {min_slope} ≤ 1; \
                             no image cycle at resolution 1/{SCAN_CELLS}"
                        )),
                    }
                }
            }
        },
        Err(_) => match image_cycle_scan(f, SCAN_CELLS, SCAN_BUDGET) {
            Some(o) => Verdict::Disproved(o),
            None => Verdict::Unknown(format!(
                "breakpoint orbit does not stabilize and no image cycle shows up \
                 at resolution 1/{SCAN_CELLS}"
            )),
        },
    }
}

/// Topological mixing. Leo implies mixing, so certification goes through
/// the same covering certificate; every disproof except the bare flat
/// piece transfers (a flat piece alone does not preclude mixing).
pub fn certify_mixing(f: &PLMap) -> Verdict<LeoCertificate, Obstruction> {
    let image = f.image();
    if !(image.lo == rat::zero() && image.hi == rat::one()) {
        return Verdict::Disproved(Obstruction::NotSurjective { image });
    }
    match markovize(f, &[], MARKOV_BUDGET) {
        Ok(model) => match covering_obstruction(&model) {
            Some(o) => Verdict::Disproved(o),
            None => {
                let min_slope = f.min_abs_slope();
                if min_slope > rat::one() {
                    let exponent = model
                        .primitivity_exponent()
                        .expect("primitive covering has an exponent");
                    Verdict::Certified(LeoCertificate {
                        grid: model.points().to_vec(),
                        exponent,
                        min_slope,
                    })
                } else {
                    match image_cycle_scan(f, SCAN_CELLS, SCAN_BUDGET) {
                        Some(o) => Verdict::Disproved(o),
                        None => Verdict::Unknown(format!(
                            "covering is primitive but min |slope| = {min_slope} ≤ 1; \
                             no image cycle at resolution 1/{SCAN_CELLS}"
                        )),
                    }
                }
            }
        },
        Err(_) => match image_cycle_scan(f, SCAN_CELLS, SCAN_BUDGET) {
            Some(o) => Verdict::Disproved(o),
            None => Verdict::Unknown(
                "breakpoint orbit does not stabilize and no image cycle found".into(),
            ),
        },
    }
}

fn flat_piece(f: &PLMap) -> Option<Obstruction> {
    for w in f.breakpoints().windows(2) {
        if w[0].1 == w[1].1 {
            return Some(Obstruction::FlatPiece {
                domain: RatInterval::new(w[0].0.clone(), w[1].0.clone()),
                value: w[0].1.clone(),
            });
        }
    }
    None
}

/// Reducibility or periodicity of the covering digraph, as an exact trap.
fn covering_obstruction(model: &MarkovModel) -> Option<Obstruction> {
    let n = model.cell_count();
    let succ = |i: usize| (0..n).filter(move |&j| model.covers(i, j));
    let scc = crate::graph::tarjan_scc(n, succ);
    if scc.comps.len() > 1 {
        // first terminal class in emission order is the deterministic pick
        for cid in 0..scc.comps.len() {
            if scc.is_terminal(cid, succ) {
                return Some(Obstruction::TrappedUnion {
                    cells: scc.comps[cid].iter().map(|&i| model.cell(i)).collect(),
                });
            }
        }
        unreachable!("a finite digraph has a terminal component");
    }
    if !scc.has_internal_edge(0, succ) {
        // single cell, no self-cover: nothing ever covers anything
        return Some(Obstruction::TrappedUnion {
            cells: vec![model.cell(0)],
        });
    }
    let p = crate::graph::strongly_connected_period(n, succ);
    if p >= 2 {
        let levels = crate::graph::bfs_levels(n, succ, 0);
        let class0: Vec<RatInterval> = (0..n)
            .filter(|&i| levels[i].expect("strongly connected") % p == 0)
            .map(|i| model.cell(i))
            .collect();
        return Some(Obstruction::PeriodicClasses {
            period: p,
            class_union: class0,
        });
    }
    None
}

/// Iterate exact images of every cell of a uniform seed grid, looking for a
/// cycle of proper intervals — a sound disproof of both leo and mixing
/// (the cycle members are proper, so some open set is missed along a whole
/// residue class of times).
fn image_cycle_scan(f: &PLMap, cells: usize, budget: usize) -> Option<Obstruction> {
    let full = RatInterval::new(rat::zero(), rat::one());
    for i in 0..cells {
        let seed = RatInterval::new(
            rat::rat_int(i as i64) / rat::rat_int(cells as i64),
            rat::rat_int(i as i64 + 1) / rat::rat_int(cells as i64),
        );
        let mut seen: BTreeMap<RatInterval, usize> = BTreeMap::new();
        let mut cur = seed.clone();
        let mut onto = false;
        for step in 0..budget {
            if cur == full {
                onto = true;
                break;
            }
            if let Some(&first) = seen.get(&cur) {
                let period = step - first;
                let mut members: Vec<RatInterval> =
                    seen.iter().filter(|(_, &s)| s >= first).map(|(iv, _)| iv.clone()).collect();
                members.sort();
                return Some(Obstruction::ImageCycle {
                    seed,
                    entered_at: first,
                    period,
                    members,
                });
            }
            seen.insert(cur.clone(), step);
            cur = f.image_interval(&cur);
        }
        if !onto {
            // budget exhausted without a verdict for this seed: give up the
            // scan rather than report something unsound
            continue;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// turbulence

/// Two closed intervals with disjoint interiors, each mapping onto their
/// union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurbulenceWitness {
    pub left: RatInterval,
    pub right: RatInterval,
}

pub fn verify_turbulence(f: &PLMap, w: &TurbulenceWitness) -> bool {
    if w.left.hi != w.right.lo || w.left.is_point() || w.right.is_point() {
        return false;
    }
    let hull = RatInterval::new(w.left.lo.clone(), w.right.hi.clone());
    f.image_interval(&w.left).contains_interval(&hull)
        && f.image_interval(&w.right).contains_interval(&hull)
}

/// Search for a turbulence witness with endpoints on the anchor grid
/// (breakpoints, fixed points, their one-step preimages, 0, 1). Sound but
/// not complete: `None` means no witness on this grid, not a disproof.
pub fn find_turbulence(f: &PLMap) -> Option<TurbulenceWitness> {
    let mut anchors: Vec<Rat> = f.breakpoints().iter().map(|(x, _)| x.clone()).collect();
    let fix = fixed_points(f);
    for p in fix.parts() {
        anchors.push(p.lo.clone());
        anchors.push(p.hi.clone());
        for pre in f.preimage_point(&p.lo).parts() {
            anchors.push(pre.lo.clone());
            anchors.push(pre.hi.clone());
        }
        if !p.is_point() {
            for pre in f.preimage_point(&p.hi).parts() {
                anchors.push(pre.lo.clone());
                anchors.push(pre.hi.clone());
            }
        }
    }
    anchors.sort();
    anchors.dedup();
    let n = anchors.len();
    if n < 3 {
        return None;
    }
    // range extrema of f over [anchors[i], anchors[j]]: f is affine between
    // consecutive anchors (all breakpoints are anchors), so cell extremes
    // are endpoint values
    let vals: Vec<Rat> = anchors.iter().map(|x| f.eval(x)).collect();
    let mut rmin = vec![vec![rat::zero(); n]; n];
    let mut rmax = vec![vec![rat::zero(); n]; n];
    for i in 0..n {
        rmin[i][i] = vals[i].clone();
        rmax[i][i] = vals[i].clone();
        for j in i + 1..n {
            rmin[i][j] = rat::min(rmin[i][j - 1].clone(), vals[j].clone());
            rmax[i][j] = rat::max(rmax[i][j - 1].clone(), vals[j].clone());
        }
    }
    for i in 0..n {
        let a = &anchors[i];
        for k in (i + 2..n).rev() {
            let d = &anchors[k];
            for j in i + 1..k {
                if &rmin[i][j] <= a && &rmax[i][j] >= d && &rmin[j][k] <= a && &rmax[j][k] >= d
                {
                    let w = TurbulenceWitness {
                        left: RatInterval::new(a.clone(), anchors[j].clone()),
                        right: RatInterval::new(anchors[j].clone(), d.clone()),
                    };
                    debug_assert!(verify_turbulence(f, &w));
                    return Some(w);
                }
            }
        }
    }
    None
}

fn fixed_points(f: &PLMap) -> IntervalSet {
    crate::periodic::fix_set(f, 1).expect("one iterate never exceeds the cap")
}

// ---------------------------------------------------------------------------
// entropy

/// The exact quantity log(base)/root. Comparisons cross-exponentiate, so
/// certificates at different roots are ordered without any rounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogBound {
    pub base: BigUint,
    pub root: u32,
}

impl LogBound {
    pub fn zero() -> Self {
        LogBound {
            base: BigUint::from(1u32),
            root: 1,
        }
    }

    /// self ≤ other as real numbers: log(b)/r ≤ log(c)/s ⟺ b^s ≤ c^r.
    pub fn le(&self, other: &LogBound) -> bool {
        self.base.pow(other.root) <= other.base.pow(self.root)
    }

    pub fn approx(&self) -> f64 {
        let digits = self.base.to_string();
        let head: f64 = digits[..digits.len().min(15)].parse().unwrap_or(f64::NAN);
        let rest = (digits.len() - digits.len().min(15)) as f64;
        (head.ln() + rest * std::f64::consts::LN_10) / self.root as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntropyBounds {
    pub lower: LogBound,
    pub upper: LogBound,
    pub lower_source: String,
    pub upper_source: String,
}

/// Certified entropy bracket at iteration depth k:
/// - lower bounds from covering-chain counts (min row sum of Mᵏ) and from
///   turbulence of f or f² (log 2, (log 2)/2);
/// - upper bounds from lap counts of fᵏ and from max row sums of Mᵏ.
pub fn entropy_bounds(f: &PLMap, depth: usize) -> Result<EntropyBounds> {
    assert!(depth >= 1);
    let mut lower = (LogBound::zero(), "trivial".to_string());
    let mut push_lower = |cand: LogBound, src: &str| {
        if lower.0.le(&cand) && !(cand.le(&lower.0)) {
            lower = (cand, src.to_string());
        }
    };

    let fk = f.iterate(depth)?;
    let laps = fk.lap_count();
    let mut upper = (
        LogBound {
            base: BigUint::from(laps),
            root: depth as u32,
        },
        format!("lap count of f^{depth}"),
    );

    if let Ok(model) = markovize(f, &[], MARKOV_BUDGET) {
        let (lo, hi) = model.covering_power_row_sums(depth);
        let lo = if lo == BigUint::from(0u32) {
            BigUint::from(1u32)
        } else {
            lo
        };
        push_lower(
            LogBound {
                base: lo,
                root: depth as u32,
            },
            &format!("covering chains at depth {depth}"),
        );
        let hi_bound = LogBound {
            base: hi,
            root: depth as u32,
        };
        if hi_bound.le(&upper.0) {
            upper = (hi_bound, format!("covering row sums at depth {depth}"));
        }
    }

    if find_turbulence(f).is_some() {
        push_lower(
            LogBound {
                base: BigUint::from(2u32),
                root: 1,
            },
            "turbulence of f",
        );
    } else if find_turbulence(&f.iterate(2)?).is_some() {
        push_lower(
            LogBound {
                base: BigUint::from(2u32),
                root: 2,
            },
            "turbulence of f^2",
        );
    }

    let (lower, lower_source) = lower;
    let (upper, upper_source) = upper;
    Ok(EntropyBounds {
        lower,
        upper,
        lower_source,
        upper_source,
    })
}

// ---------------------------------------------------------------------------
// exactly-permuted decompositions

/// Partition of [0,1] into closed intervals that f permutes exactly:
/// f(pieces[i]) = pieces[sigma[i]].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub pieces: Vec<RatInterval>,
    pub sigma: Vec<usize>,
}

/// Finest partition found by closing the candidate cut set (endpoints of
/// Fix(f²) components) under the forced merges: a cut strictly inside some
/// piece image cannot survive, and a piece whose image is not exactly a
/// piece merges with its neighbours.
pub fn decompose(f: &PLMap) -> Result<Decomposition> {
    let fix2 = crate::periodic::fix_set(f, 2)?;
    let mut cuts: Vec<Rat> = Vec::new();
    for p in fix2.parts() {
        for c in [&p.lo, &p.hi] {
            if *c > rat::zero() && *c < rat::one() {
                cuts.push(c.clone());
            }
        }
    }
    cuts.sort();
    cuts.dedup();

    'outer: loop {
        let pieces = pieces_of(&cuts);
        let images: Vec<RatInterval> = pieces.iter().map(|p| f.image_interval(p)).collect();
        // rule 1: no cut may lie strictly inside an image
        let mut removed = false;
        let mut keep = vec![true; cuts.len()];
        for img in &images {
            for (ci, c) in cuts.iter().enumerate() {
                if keep[ci] && c > &img.lo && c < &img.hi {
                    keep[ci] = false;
                    removed = true;
                }
            }
        }
        if removed {
            cuts = cuts
                .into_iter()
                .zip(keep)
                .filter_map(|(c, k)| k.then_some(c))
                .collect();
            continue 'outer;
        }
        // rule 2: every image must now be exactly a piece; a piece whose
        // image is a proper subinterval (or a point) merges with its
        // neighbours by dropping its own cuts
        for (pi, img) in images.iter().enumerate() {
            let exact = pieces.iter().any(|q| q == img);
            if !exact {
                let mut changed = false;
                for c in [&pieces[pi].lo, &pieces[pi].hi] {
                    if let Ok(ix) = cuts.binary_search(c) {
                        cuts.remove(ix);
                        changed = true;
                    }
                }
                if !changed {
                    // the piece is already [0,1]: no exactly-permuted
                    // decomposition exists (the map is not surjective)
                    return Err(Error::Infeasible(format!(
                        "image of [0,1] is {img}, not [0,1]: no exactly-permuted \
                         decomposition"
                    )));
                }
                continue 'outer;
            }
        }
        // rule 3: two pieces sharing a target cannot both survive — drop
        // every cut between them (coarsenings are by intervals)
        let sigma: Vec<usize> = images
            .iter()
            .map(|img| {
                pieces
                    .iter()
                    .position(|q| q == img)
                    .expect("exactness was just checked")
            })
            .collect();
        let mut by_target: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (pi, &s) in sigma.iter().enumerate() {
            by_target.entry(s).or_default().push(pi);
        }
        if let Some((_, group)) = by_target.iter().find(|(_, g)| g.len() > 1) {
            let lo = &pieces[group[0]].lo;
            let hi = &pieces[*group.last().unwrap()].hi;
            let before = cuts.len();
            cuts.retain(|c| !(c > lo && c < hi));
            if cuts.len() == before {
                return Err(Error::Infeasible(
                    "no exactly-permuted decomposition: the map is not surjective".into(),
                ));
            }
            continue 'outer;
        }
        return Ok(Decomposition { pieces, sigma });
    }
}

fn pieces_of(cuts: &[Rat]) -> Vec<RatInterval> {
    let mut ends = vec![rat::zero()];
    ends.extend(cuts.iter().cloned());
    ends.push(rat::one());
    ends.windows(2)
        .map(|w| RatInterval::new(w[0].clone(), w[1].clone()))
        .collect()
}

/// A two-piece exact decomposition at an interior cut: f either leaves both
/// halves invariant or swaps them. Returns the smallest working cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitWitness {
    pub cut: Rat,
    pub swapped: bool,
}

pub fn find_split(f: &PLMap) -> Result<Option<SplitWitness>> {
    let fix2 = crate::periodic::fix_set(f, 2)?;
    let mut cands: Vec<Rat> = Vec::new();
    for p in fix2.parts() {
        for c in [&p.lo, &p.hi] {
            if *c > rat::zero() && *c < rat::one() {
                cands.push(c.clone());
            }
        }
    }
    cands.sort();
    cands.dedup();
    for c in cands {
        let left = RatInterval::new(rat::zero(), c.clone());
        let right = RatInterval::new(c.clone(), rat::one());
        let il = f.image_interval(&left);
        let ir = f.image_interval(&right);
        if il == left && ir == right {
            return Ok(Some(SplitWitness {
                cut: c,
                swapped: false,
            }));
        }
        if il == right && ir == left {
            return Ok(Some(SplitWitness {
                cut: c,
                swapped: true,
            }));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// homotopy

/// The contraction g_α: identity on [0, α], an affine copy of f on [α, 1].
/// Needs f(0) = 0 for continuity at the seam. Slopes on the copied part are
/// exactly f's slopes, so the measure-preserving class is preserved along
/// the path; g_0 = f and g_1 = id.
pub fn homotopy_to_identity(f: &PLMap, alpha: &Rat) -> Result<PLMap> {
    if *alpha < rat::zero() || *alpha > rat::one() {
        return Err(Error::InvalidSpec(format!(
            "homotopy parameter {alpha} outside [0,1]"
        )));
    }
    if f.eval(&rat::zero()) != rat::zero() {
        return Err(Error::Infeasible(
            "homotopy to the identity needs f(0) = 0".into(),
        ));
    }
    if *alpha == rat::zero() {
        return Ok(f.clone());
    }
    if *alpha == rat::one() {
        return Ok(crate::maps::identity());
    }
    let scale = rat::one() - alpha;
    let mut pts = vec![(rat::zero(), rat::zero())];
    for (x, y) in f.breakpoints() {
        pts.push((alpha + &scale * x, alpha + &scale * y));
    }
    PLMap::new(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{MeasureVerdict, PiecewiseConstDensity};
    use crate::maps;
    use crate::rat::{rat, rat_int};

    #[test]
    fn log_bound_ordering() {
        let l21 = LogBound { base: BigUint::from(2u32), root: 1 };
        let l42 = LogBound { base: BigUint::from(4u32), root: 2 };
        let l22 = LogBound { base: BigUint::from(2u32), root: 2 };
        let l31 = LogBound { base: BigUint::from(3u32), root: 1 };
        assert!(l21.le(&l42) && l42.le(&l21)); // equal
        assert!(l22.le(&l21) && !l21.le(&l22));
        assert!(l21.le(&l31) && !l31.le(&l21));
        assert!(LogBound::zero().le(&l22));
    }

    #[test]
    fn tent_certificates() {
        let t = maps::tent();
        match certify_leo(&t) {
            Verdict::Certified(c) => {
                assert_eq!(c.exponent, 1);
                assert_eq!(c.min_slope, rat_int(2));
            }
            v => panic!("tent is leo, got {v:?}"),
        }
        assert!(certify_mixing(&t).is_certified());

        let w = find_turbulence(&t).expect("tent is turbulent");
        assert_eq!(w.left, RatInterval::new(rat_int(0), rat(1, 2)));
        assert_eq!(w.right, RatInterval::new(rat(1, 2), rat_int(1)));
        assert!(verify_turbulence(&t, &w));

        let e = entropy_bounds(&t, 4).unwrap();
        // both bounds equal log 2
        let log2 = LogBound { base: BigUint::from(2u32), root: 1 };
        assert!(e.lower.le(&log2) && log2.le(&e.lower));
        assert!(e.upper.le(&log2) && log2.le(&e.upper));
    }

    #[test]
    fn three_tent_entropy_is_log_three() {
        let e = entropy_bounds(&maps::three_tent(), 3).unwrap();
        let log3 = LogBound { base: BigUint::from(3u32), root: 1 };
        assert!(e.lower.le(&log3) && log3.le(&e.lower));
        assert!(e.upper.le(&log3) && log3.le(&e.upper));
    }

    #[test]
    fn identity_is_not_leo_with_image_cycle_witness() {
        match certify_leo(&maps::identity()) {
            Verdict::Disproved(Obstruction::ImageCycle {
                seed,
                entered_at,
                period,
                ..
            }) => {
                assert_eq!(seed, RatInterval::new(rat_int(0), rat(1, 64)));
                assert_eq!(entered_at, 0);
                assert_eq!(period, 1);
            }
            v => panic!("identity must be disproved by an image cycle, got {v:?}"),
        }
        assert!(certify_mixing(&maps::identity()).is_disproved());
        assert!(find_turbulence(&maps::identity()).is_none());
        let e = entropy_bounds(&maps::identity(), 4).unwrap();
        assert!(e.upper.le(&LogBound::zero()));
    }

    #[test]
    fn exchange_is_blocked_by_periodic_classes() {
        match certify_leo(&maps::exchange_with_tents()) {
            Verdict::Disproved(Obstruction::PeriodicClasses { period, class_union }) => {
                assert_eq!(period, 2);
                let merged = IntervalSet::from_parts(class_union);
                assert_eq!(
                    merged.parts(),
                    &[RatInterval::new(rat_int(0), rat(1, 2))]
                );
            }
            v => panic!("expected periodic classes, got {v:?}"),
        }
    }

    #[test]
    fn glued_map_is_trapped() {
        match certify_leo(&maps::glued_identity_zigzag()) {
            Verdict::Disproved(Obstruction::TrappedUnion { cells }) => {
                let merged = IntervalSet::from_parts(cells);
                assert_eq!(merged.parts().len(), 1);
            }
            v => panic!("expected a trapped union, got {v:?}"),
        }
    }

    #[test]
    fn flat_and_nonsurjective_obstructions() {
        let flat = PLMap::new(vec![
            (rat_int(0), rat_int(0)),
            (rat(1, 4), rat_int(1)),
            (rat(1, 2), rat_int(1)),
            (rat_int(1), rat_int(0)),
        ])
        .unwrap();
        assert!(matches!(
            certify_leo(&flat),
            Verdict::Disproved(Obstruction::FlatPiece { .. })
        ));

        let small = PLMap::new(vec![
            (rat_int(0), rat_int(0)),
            (rat(1, 2), rat(1, 2)),
            (rat_int(1), rat_int(0)),
        ])
        .unwrap();
        match certify_leo(&small) {
            Verdict::Disproved(Obstruction::NotSurjective { image }) => {
                assert_eq!(image, RatInterval::new(rat_int(0), rat(1, 2)));
            }
            v => panic!("expected non-surjectivity, got {v:?}"),
        }
    }

    #[test]
    fn slope_one_primitive_map_is_honestly_unknown() {
        // c0 -> c1 (slope 1), c1 -> both (slope -2): primitive but not
        // uniformly expanding; the image scan finds growth, not a cycle
        let f = PLMap::new(vec![
            (rat_int(0), rat(1, 2)),
            (rat(1, 2), rat_int(1)),
            (rat_int(1), rat_int(0)),
        ])
        .unwrap();
        assert!(matches!(certify_leo(&f), Verdict::Unknown(_)));
    }

    #[test]
    fn three_tent_turbulence_witness() {
        let w = find_turbulence(&maps::three_tent()).expect("three-tent is turbulent");
        assert_eq!(w.left, RatInterval::new(rat_int(0), rat(1, 3)));
        assert_eq!(w.right, RatInterval::new(rat(1, 3), rat_int(1)));
    }

    #[test]
    fn decomposition_of_the_three_fixtures() {
        let d = decompose(&maps::tent()).unwrap();
        assert_eq!(d.pieces, vec![RatInterval::new(rat_int(0), rat_int(1))]);
        assert_eq!(d.sigma, vec![0]);

        let d = decompose(&maps::exchange_with_tents()).unwrap();
        assert_eq!(
            d.pieces,
            vec![
                RatInterval::new(rat_int(0), rat(1, 2)),
                RatInterval::new(rat(1, 2), rat_int(1))
            ]
        );
        assert_eq!(d.sigma, vec![1, 0]);

        let d = decompose(&maps::glued_identity_zigzag()).unwrap();
        assert_eq!(
            d.pieces,
            vec![
                RatInterval::new(rat_int(0), rat(1, 3)),
                RatInterval::new(rat(1, 3), rat_int(1))
            ]
        );
        assert_eq!(d.sigma, vec![0, 1]);
    }

    #[test]
    fn non_surjective_maps_have_no_decomposition() {
        let small = PLMap::new(vec![
            (rat_int(0), rat_int(0)),
            (rat(1, 2), rat(1, 2)),
            (rat_int(1), rat_int(0)),
        ])
        .unwrap();
        assert!(decompose(&small).is_err());
    }

    #[test]
    fn split_witnesses() {
        assert_eq!(find_split(&maps::tent()).unwrap(), None);
        assert_eq!(
            find_split(&maps::exchange_with_tents()).unwrap(),
            Some(SplitWitness {
                cut: rat(1, 2),
                swapped: true
            })
        );
        assert_eq!(
            find_split(&maps::glued_identity_zigzag()).unwrap(),
            Some(SplitWitness {
                cut: rat(1, 3),
                swapped: false
            })
        );
    }

    #[test]
    fn homotopy_path_stays_measure_preserving() {
        let t = maps::tent();
        assert_eq!(homotopy_to_identity(&t, &rat_int(0)).unwrap(), t);
        assert_eq!(
            homotopy_to_identity(&t, &rat_int(1)).unwrap(),
            maps::identity()
        );
        let g = homotopy_to_identity(&t, &rat(1, 2)).unwrap();
        assert_eq!(
            g.breakpoints(),
            &[
                (rat_int(0), rat_int(0)),
                (rat(1, 2), rat(1, 2)),
                (rat(3, 4), rat_int(1)),
                (rat_int(1), rat(1, 2))
            ][..]
        );
        let leb = PiecewiseConstDensity::lebesgue();
        assert_eq!(leb.check_invariance(&g), MeasureVerdict::Preserved);

        // seam needs f(0) = 0
        assert!(homotopy_to_identity(&maps::reflection(), &rat(1, 2)).is_err());
    }
}
