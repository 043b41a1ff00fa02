//! Structured perturbations: window folds, boundary nudges, horseshoe
//! splices, Denjoy-style blowups, and Cantor-set periodic seeding.
//!
//! The shared move is graph surgery over a small window. Folding a map's own
//! graph back and forth over a partition of the window keeps continuity and
//! (for Lebesgue) measure invariance exactly, while the sup-distance to the
//! original is controlled by the diameter of the image of the window. All
//! arithmetic is exact; every constructor re-verifies the invariants it
//! promises and returns certified data rather than best-effort output.

pub mod blowup;
pub mod cantor;

use crate::density::{MeasureVerdict, PiecewiseConstDensity};
use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::maps;
use crate::periodic;
use crate::plmap::PLMap;
use crate::rat::{self, rat_int, Rat};
use crate::structure::LogBound;
use num::BigUint;

/// A window together with the partition its folds will live on.
///
/// The partition must tile the window left to right with an odd number of
/// nondegenerate cells; odd counts are what keep a fold that starts and ends
/// upward-oriented, which is what continuity at an interior window edge
/// demands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    window: RatInterval,
    parts: Vec<RatInterval>,
}

impl WindowSpec {
    /// Equal-width partition into `m` cells, `m` odd.
    pub fn regular(window: RatInterval, m: usize) -> Result<Self> {
        if m == 0 || m % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "fold count must be odd and positive, got {m}"
            )));
        }
        let step = window.len() / rat_int(m as i64);
        let mut parts = Vec::with_capacity(m);
        for i in 0..m {
            let lo = &window.lo + rat_int(i as i64) * &step;
            let hi = if i + 1 == m {
                window.hi.clone()
            } else {
                &window.lo + rat_int(i as i64 + 1) * &step
            };
            parts.push(RatInterval::new(lo, hi));
        }
        Self::with_parts(window, parts)
    }

    /// Explicit partition. Cells must be nondegenerate, contiguous, and
    /// odd in number; the window itself must sit inside [0, 1].
    pub fn with_parts(window: RatInterval, parts: Vec<RatInterval>) -> Result<Self> {
        if window.lo < rat::zero() || window.hi > rat::one() {
            return Err(Error::InvalidSpec(
                "window must lie inside the unit interval".into(),
            ));
        }
        if window.is_point() {
            return Err(Error::InvalidSpec("window must be nondegenerate".into()));
        }
        if parts.is_empty() || parts.len() % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "fold count must be odd and positive, got {}",
                parts.len()
            )));
        }
        let mut cursor = window.lo.clone();
        for part in &parts {
            if part.lo != cursor {
                return Err(Error::InvalidSpec(
                    "partition cells must tile the window without gaps".into(),
                ));
            }
            if part.is_point() {
                return Err(Error::InvalidSpec(
                    "partition cells must be nondegenerate".into(),
                ));
            }
            cursor = part.hi.clone();
        }
        if cursor != window.hi {
            return Err(Error::InvalidSpec(
                "partition cells must cover the whole window".into(),
            ));
        }
        Ok(WindowSpec { window, parts })
    }

    pub fn window(&self) -> &RatInterval {
        &self.window
    }

    pub fn parts(&self) -> &[RatInterval] {
        &self.parts
    }

    pub fn folds(&self) -> usize {
        self.parts.len()
    }

    pub fn is_regular(&self) -> bool {
        let first = self.parts[0].len();
        self.parts.iter().all(|p| p.len() == first)
    }
}

/// Replace `f` on `window` by affine copies of its own graph, one per
/// partition cell, alternating orientation starting from `first_up`.
///
/// Continuity between adjacent copies is automatic (an upward copy ends at
/// the value a downward copy starts at). At the window's outer edges the
/// copy must be upward whenever the edge is interior to [0, 1], so the new
/// graph meets the untouched part of the old one without a jump.
fn window_copies(
    f: &PLMap,
    window: &RatInterval,
    parts: &[RatInterval],
    first_up: bool,
) -> Result<PLMap> {
    let template = f.graph_on(window);
    let c = window.lo.clone();
    let d = window.hi.clone();
    let wlen = window.len();
    let last_up = first_up == (parts.len() % 2 == 1);
    if c > rat::zero() && !first_up {
        return Err(Error::InvalidSpec(
            "first fold must be upward when the window starts inside (0, 1)".into(),
        ));
    }
    if d < rat::one() && !last_up {
        return Err(Error::InvalidSpec(
            "last fold must be upward when the window ends inside (0, 1)".into(),
        ));
    }

    let mut pts: Vec<(Rat, Rat)> = Vec::new();
    let push = |pts: &mut Vec<(Rat, Rat)>, x: Rat, y: Rat| {
        if let Some((px, py)) = pts.last() {
            if *px == x {
                assert_eq!(*py, y, "window copies disagree where they meet");
                return;
            }
        }
        pts.push((x, y));
    };

    if c > rat::zero() {
        for (x, y) in f.graph_on(&RatInterval::new(rat::zero(), c.clone())) {
            push(&mut pts, x, y);
        }
    }
    for (i, part) in parts.iter().enumerate() {
        let up = first_up == (i % 2 == 0);
        let scale = part.len() / &wlen;
        if up {
            for (x, y) in &template {
                let mx = &part.lo + (x - &c) * &scale;
                push(&mut pts, mx, y.clone());
            }
        } else {
            for (x, y) in template.iter().rev() {
                let mx = &part.lo + (&d - x) * &scale;
                push(&mut pts, mx, y.clone());
            }
        }
    }
    if d < rat::one() {
        for (x, y) in f.graph_on(&RatInterval::new(d.clone(), rat::one())) {
            push(&mut pts, x, y);
        }
    }
    PLMap::new(pts)
}

/// Fold `f` over the window so the result is a genuine Lebesgue-preserving
/// perturbation: equal to `f` off the window, within `diam f(window)` of it
/// everywhere, and still exactly in the Lebesgue-preserving class.
///
/// The measure argument is a branch sum: each copy over a cell of width w
/// contributes w/|window| of the window's original branch mass, and the
/// cell widths sum to the window's width.
pub fn window_perturb_lambda(f: &PLMap, spec: &WindowSpec) -> Result<PLMap> {
    let lambda = PiecewiseConstDensity::lebesgue();
    if !matches!(lambda.check_invariance(f), MeasureVerdict::Preserved) {
        return Err(Error::Infeasible(
            "window perturbation needs a Lebesgue-preserving input map".into(),
        ));
    }
    let g = window_copies(f, spec.window(), spec.parts(), true)?;
    assert!(
        matches!(lambda.check_invariance(&g), MeasureVerdict::Preserved),
        "folded map lost Lebesgue invariance"
    );
    let bound = f.image_interval(spec.window()).len();
    assert!(
        f.sup_distance(&g) <= bound,
        "fold strayed beyond the image diameter of the window"
    );
    Ok(g)
}

/// Window fold respecting an arbitrary full-support invariant density:
/// straighten the measure to Lebesgue with its distribution homeomorphism,
/// fold there, and pull back. The window spec is read in the straightened
/// coordinate.
pub fn window_perturb_cp(
    f: &PLMap,
    mu: &PiecewiseConstDensity,
    spec: &WindowSpec,
) -> Result<PLMap> {
    if !matches!(mu.check_invariance(f), MeasureVerdict::Preserved) {
        return Err(Error::Infeasible(
            "map does not preserve the supplied measure".into(),
        ));
    }
    let psi = mu.measure_homeo()?;
    let fhat = psi.conjugate(f)?;
    let ghat = window_perturb_lambda(&fhat, spec)?;
    let g = psi.inverse().conjugate(&ghat)?;
    assert!(
        matches!(mu.check_invariance(&g), MeasureVerdict::Preserved),
        "conjugated fold lost measure invariance"
    );
    Ok(g)
}

fn hits_boundary(v: &Rat) -> bool {
    *v == rat::zero() || *v == rat::one()
}

/// Smallest dyadic window at `side` over which `f` moves less than `eps`
/// and whose inner edge does not map to {0, 1}.
fn boundary_window(f: &PLMap, eps: &Rat, left: bool) -> Result<Rat> {
    let cap = rat::min(eps.clone(), rat::one());
    let mut a = cap / rat_int(2);
    for _ in 0..64 {
        let window = if left {
            RatInterval::new(rat::zero(), a.clone())
        } else {
            RatInterval::new(rat::one() - &a, rat::one())
        };
        let inner = f.eval(if left { &window.hi } else { &window.lo });
        if f.image_interval(&window).len() < *eps && !hits_boundary(&inner) {
            return Ok(a);
        }
        a = a / rat_int(2);
    }
    Err(Error::Infeasible(
        "no boundary window small enough; the map pins an entire neighborhood to {0, 1}".into(),
    ))
}

/// Perturb a Lebesgue-preserving map so neither endpoint of [0, 1] maps
/// into {0, 1}, at sup-distance strictly below `eps`.
///
/// A two-fold copy over a tiny end window does it: the fold anchors the
/// endpoint's new value at the window's inner image, which the window scan
/// guarantees is interior. Even fold counts are fine here because a window
/// touching {0, 1} has a free outer edge.
pub fn fix_boundary(f: &PLMap, eps: &Rat) -> Result<PLMap> {
    assert!(*eps > rat::zero(), "tolerance must be positive");
    if !hits_boundary(&f.eval(&rat::zero())) && !hits_boundary(&f.eval(&rat::one())) {
        return Ok(f.clone());
    }
    let lambda = PiecewiseConstDensity::lebesgue();
    if !matches!(lambda.check_invariance(f), MeasureVerdict::Preserved) {
        return Err(Error::Infeasible(
            "boundary fix needs a Lebesgue-preserving input map".into(),
        ));
    }
    let mut g = f.clone();
    if hits_boundary(&g.eval(&rat::zero())) {
        let a = boundary_window(&g, eps, true)?;
        let window = RatInterval::new(rat::zero(), a.clone());
        let mid = RatInterval::new(rat::zero(), &a / rat_int(2));
        let parts = vec![mid.clone(), RatInterval::new(mid.hi.clone(), a)];
        g = window_copies(&g, &window, &parts, false)?;
    }
    if hits_boundary(&g.eval(&rat::one())) {
        let b = boundary_window(&g, eps, false)?;
        let window = RatInterval::new(rat::one() - &b, rat::one());
        let mid = &window.lo + &b / rat_int(2);
        let parts = vec![
            RatInterval::new(window.lo.clone(), mid.clone()),
            RatInterval::new(mid, rat::one()),
        ];
        g = window_copies(&g, &window, &parts, true)?;
    }
    assert!(f.sup_distance(&g) < *eps, "boundary fix overshot");
    assert!(!hits_boundary(&g.eval(&rat::zero())) && !hits_boundary(&g.eval(&rat::one())));
    assert!(
        matches!(lambda.check_invariance(&g), MeasureVerdict::Preserved),
        "boundary fix lost Lebesgue invariance"
    );
    Ok(g)
}

/// Witness that a map carries an `n`-branch horseshoe on `window`: that many
/// disjoint subintervals each map across the whole window, so topological
/// entropy is at least log(base).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorseshoeCertificate {
    pub window: RatInterval,
    pub full_branches: usize,
    pub bound: LogBound,
}

/// Splice an `n`-branch horseshoe into a width-`width` neighborhood of a
/// transverse fixed point. The window must already be expanded across
/// itself by `f`; the zigzag then rides the existing expansion, so the
/// perturbation costs no more than the diameter of `f`'s image of the
/// window.
pub fn insert_horseshoe(
    f: &PLMap,
    p: &Rat,
    n: usize,
    width: &Rat,
) -> Result<(PLMap, HorseshoeCertificate)> {
    if n < 2 {
        return Err(Error::InvalidSpec(
            "a horseshoe needs at least two branches".into(),
        ));
    }
    if f.eval(p) != *p {
        return Err(Error::InvalidSpec(
            "horseshoe pivot must be a fixed point".into(),
        ));
    }
    if !periodic::is_transverse(f, p) {
        return Err(Error::InvalidSpec(
            "horseshoe pivot must be a transverse fixed point".into(),
        ));
    }
    let half = width / rat_int(2);
    let (lo, hi) = (p - &half, p + &half);
    if lo < rat::zero() || hi > rat::one() || lo >= hi {
        return Err(Error::InvalidSpec(
            "horseshoe window leaves the unit interval".into(),
        ));
    }
    let window = RatInterval::new(lo, hi);
    let img = f.image_interval(&window);
    if !img.contains_interval(&window) {
        return Err(Error::InvalidSpec(
            "window is not expanded across itself".into(),
        ));
    }

    let fc = f.eval(&window.lo);
    let fd = f.eval(&window.hi);
    // First turn goes to whichever extreme f(c) is not already pinned to;
    // otherwise start toward the farther endpoint of the image.
    let first_hi = if fc == img.hi {
        false
    } else if fc == img.lo {
        true
    } else {
        fc <= fd
    };
    let mut vals = vec![fc.clone()];
    for t in 0..=n {
        let go_hi = (t % 2 == 0) == first_hi;
        vals.push(if go_hi { img.hi.clone() } else { img.lo.clone() });
    }
    vals.push(fd.clone());

    let mut pts: Vec<(Rat, Rat)> = Vec::new();
    if window.lo > rat::zero() {
        pts.extend(f.graph_on(&RatInterval::new(rat::zero(), window.lo.clone())));
        pts.pop();
    }
    pts.extend(maps::zigzag_through(&window.lo, &window.hi, &vals));
    if window.hi < rat::one() {
        let tail = f.graph_on(&RatInterval::new(window.hi.clone(), rat::one()));
        pts.extend(tail.into_iter().skip(1));
    }
    let g = PLMap::new(pts)?;

    let mut full = 0usize;
    let bps = g.breakpoints();
    for k in 1..bps.len() {
        let (x0, y0) = &bps[k - 1];
        let (x1, y1) = &bps[k];
        if *x0 >= window.lo && *x1 <= window.hi {
            let span = RatInterval::new(
                rat::min(y0.clone(), y1.clone()),
                rat::max(y0.clone(), y1.clone()),
            );
            if span.contains_interval(&window) {
                full += 1;
            }
        }
    }
    assert!(full >= n, "zigzag produced fewer full branches than folds");
    assert!(
        f.sup_distance(&g) <= img.len(),
        "horseshoe strayed beyond the window's image diameter"
    );

    let cert = HorseshoeCertificate {
        window,
        full_branches: full,
        bound: LogBound {
            base: BigUint::from(n as u64),
            root: 1,
        },
    };
    Ok((g, cert))
}
