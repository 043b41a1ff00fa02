//! Piecewise-linear self-maps of [0,1] with exact rational breakpoints.
//!
//! A map is stored as its breakpoint graph: a list of `(x, y)` pairs with
//! strictly increasing `x`, `x` running from 0 to 1, and every `y` in [0,1].
//! The list is kept canonical (no interior point lies on the segment through
//! its neighbours), so structural equality is semantic equality.

use crate::error::{Error, Result};
use crate::interval::{IntervalSet, RatInterval};
use crate::rat::{self, Rat};
use std::fmt;

/// Hard ceiling on breakpoint-graph size for operations that can blow up
/// (composition, iteration, perturbation). Exceeding it is an error, not a
/// panic: callers decide whether to retry with different parameters.
pub const PIECE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLMap {
    points: Vec<(Rat, Rat)>,
}

impl PLMap {
    pub fn new(points: Vec<(Rat, Rat)>) -> Result<Self> {
        Self::with_cap(points, PIECE_CAP)
    }

    pub fn with_cap(points: Vec<(Rat, Rat)>, cap: usize) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMap(
                "need at least two breakpoints".into(),
            ));
        }
        if points[0].0 != rat::zero() {
            return Err(Error::InvalidMap(format!(
                "first breakpoint must be at x=0, got x={}",
                points[0].0
            )));
        }
        if points[points.len() - 1].0 != rat::one() {
            return Err(Error::InvalidMap(format!(
                "last breakpoint must be at x=1, got x={}",
                points[points.len() - 1].0
            )));
        }
        for w in points.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidMap(format!(
                    "breakpoint abscissas must strictly increase: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for (x, y) in &points {
            if *y < rat::zero() || *y > rat::one() {
                return Err(Error::InvalidMap(format!(
                    "value {y} at x={x} falls outside [0,1]"
                )));
            }
        }
        let points = prune_collinear(points);
        let pieces = points.len() - 1;
        if pieces > cap {
            return Err(Error::PieceCapExceeded { needed: pieces, cap });
        }
        Ok(PLMap { points })
    }

    pub fn breakpoints(&self) -> &[(Rat, Rat)] {
        &self.points
    }

    pub fn piece_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Evaluate at `x`. Panics if `x` is outside [0,1]; public entry points
    /// validate their inputs before calling.
    pub fn eval(&self, x: &Rat) -> Rat {
        assert!(
            *x >= rat::zero() && *x <= rat::one(),
            "eval outside [0,1]: {x}"
        );
        graph_eval(&self.points, x)
    }

    /// Slope of each piece, left to right.
    pub fn slopes(&self) -> Vec<Rat> {
        self.points
            .windows(2)
            .map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0))
            .collect()
    }

    pub fn max_abs_slope(&self) -> Rat {
        self.slopes()
            .into_iter()
            .map(|s| rat::abs(&s))
            .max()
            .expect("a map has at least one piece")
    }

    pub fn min_abs_slope(&self) -> Rat {
        self.slopes()
            .into_iter()
            .map(|s| rat::abs(&s))
            .min()
            .expect("a map has at least one piece")
    }

    /// A flat piece of positive length (every piece has positive length, so
    /// any zero slope qualifies).
    pub fn has_flat_piece(&self) -> bool {
        self.points.windows(2).any(|w| w[0].1 == w[1].1)
    }

    /// Number of maximal weakly-monotone pieces. Flat stretches glue onto
    /// either neighbour, so this is the minimal count.
    pub fn lap_count(&self) -> usize {
        let mut laps = 1usize;
        let mut dir = 0i8; // sign of the current lap, 0 while undecided
        for w in self.points.windows(2) {
            let s = if w[1].1 > w[0].1 {
                1
            } else if w[1].1 < w[0].1 {
                -1
            } else {
                0
            };
            if s == 0 {
                continue;
            }
            if dir == 0 {
                dir = s;
            } else if s != dir {
                laps += 1;
                dir = s;
            }
        }
        laps
    }

    /// Interior local extrema: breakpoints where the nearest nonzero slopes
    /// on either side disagree in sign. Both edges of a flat plateau sitting
    /// between opposite slopes qualify.
    pub fn turning_points(&self) -> Vec<Rat> {
        let slopes = self.slopes();
        let mut out = Vec::new();
        for i in 1..self.points.len() - 1 {
            let left = slopes[..i].iter().rev().find(|s| **s != rat::zero());
            let right = slopes[i..].iter().find(|s| **s != rat::zero());
            if let (Some(l), Some(r)) = (left, right) {
                if l.clone() * r < rat::zero() {
                    out.push(self.points[i].0.clone());
                }
            }
        }
        out
    }

    /// Exact image of a subinterval: attained because pieces are closed.
    pub fn image_interval(&self, iv: &RatInterval) -> RatInterval {
        assert!(
            iv.lo >= rat::zero() && iv.hi <= rat::one(),
            "image of interval outside [0,1]: {iv}"
        );
        let mut lo = self.eval(&iv.lo);
        let mut hi = lo.clone();
        let end = self.eval(&iv.hi);
        if end < lo {
            lo = end;
        } else if end > hi {
            hi = end;
        }
        // interior breakpoints
        let start = self.points.partition_point(|p| p.0 <= iv.lo);
        for (x, y) in &self.points[start..] {
            if *x >= iv.hi {
                break;
            }
            if *y < lo {
                lo = y.clone();
            } else if *y > hi {
                hi = y.clone();
            }
        }
        RatInterval::new(lo, hi)
    }

    pub fn image(&self) -> RatInterval {
        self.image_interval(&RatInterval::new(rat::zero(), rat::one()))
    }

    pub fn is_surjective(&self) -> bool {
        let im = self.image();
        im.lo == rat::zero() && im.hi == rat::one()
    }

    /// All x with f(x) inside `target`, as a closed-interval union.
    pub fn preimage_interval(&self, target: &RatInterval) -> IntervalSet {
        let mut parts = Vec::new();
        for w in self.points.windows(2) {
            let (x0, y0) = &w[0];
            let (x1, y1) = &w[1];
            let vals = RatInterval::new(
                rat::min(y0.clone(), y1.clone()),
                rat::max(y0.clone(), y1.clone()),
            );
            let clip = match vals.intersect(target) {
                Some(c) => c,
                None => continue,
            };
            if y0 == y1 {
                parts.push(RatInterval::new(x0.clone(), x1.clone()));
            } else {
                let s = (y1 - y0) / (x1 - x0);
                let xa = x0 + (&clip.lo - y0) / &s;
                let xb = x0 + (&clip.hi - y0) / &s;
                parts.push(RatInterval::new(
                    rat::min(xa.clone(), xb.clone()),
                    rat::max(xa, xb),
                ));
            }
        }
        IntervalSet::from_parts(parts)
    }

    pub fn preimage_point(&self, y: &Rat) -> IntervalSet {
        self.preimage_interval(&RatInterval::point(y.clone()))
    }

    /// Exact sup-distance. Both maps are affine between the merged
    /// breakpoint abscissas, so the max is attained on the merged grid.
    pub fn sup_distance(&self, other: &PLMap) -> Rat {
        let mut best = rat::zero();
        for x in merge_xs(&self.points, &other.points) {
            let d = rat::abs(&(self.eval(&x) - other.eval(&x)));
            if d > best {
                best = d;
            }
        }
        best
    }

    /// self ∘ other: x ↦ self(other(x)).
    pub fn compose(&self, other: &PLMap) -> Result<PLMap> {
        self.compose_capped(other, PIECE_CAP)
    }

    pub fn compose_capped(&self, other: &PLMap, cap: usize) -> Result<PLMap> {
        let graph = compose_graph(self, &other.points, cap)?;
        PLMap::with_cap(graph, cap)
    }

    /// n-fold iterate; n = 0 gives the identity.
    pub fn iterate(&self, n: usize) -> Result<PLMap> {
        self.iterate_capped(n, PIECE_CAP)
    }

    pub fn iterate_capped(&self, n: usize, cap: usize) -> Result<PLMap> {
        let mut out = PLMap::with_cap(
            vec![(rat::zero(), rat::zero()), (rat::one(), rat::one())],
            cap,
        )?;
        for _ in 0..n {
            out = self.compose_capped(&out, cap)?;
        }
        Ok(out)
    }

    /// Breakpoint graph of the restriction to `iv` (endpoints evaluated,
    /// interior breakpoints kept verbatim).
    pub fn graph_on(&self, iv: &RatInterval) -> Vec<(Rat, Rat)> {
        let mut g = vec![(iv.lo.clone(), self.eval(&iv.lo))];
        let start = self.points.partition_point(|p| p.0 <= iv.lo);
        for (x, y) in &self.points[start..] {
            if *x >= iv.hi {
                break;
            }
            g.push((x.clone(), y.clone()));
        }
        if iv.hi > iv.lo {
            g.push((iv.hi.clone(), self.eval(&iv.hi)));
        }
        g
    }
}

impl fmt::Display for PLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, y)) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "({x},{y})")?;
        }
        Ok(())
    }
}

/// Evaluate a PL graph (strictly increasing x) at a point of its domain.
pub(crate) fn graph_eval(points: &[(Rat, Rat)], x: &Rat) -> Rat {
    let n = points.len();
    assert!(
        *x >= points[0].0 && *x <= points[n - 1].0,
        "graph_eval outside domain"
    );
    let i = points.partition_point(|p| p.0 <= *x);
    if i == n {
        return points[n - 1].1.clone();
    }
    let (x0, y0) = &points[i - 1];
    let (x1, y1) = &points[i];
    if x == x0 {
        return y0.clone();
    }
    y0 + (x - x0) * (y1 - y0) / (x1 - x0)
}

/// Graph of f ∘ h for an arbitrary PL graph h with values in [0,1].
/// h's domain is preserved; new breakpoints appear where h crosses a
/// breakpoint abscissa of f.
pub(crate) fn compose_graph(
    f: &PLMap,
    h: &[(Rat, Rat)],
    cap: usize,
) -> Result<Vec<(Rat, Rat)>> {
    let fxs: Vec<&Rat> = f.points.iter().map(|p| &p.0).collect();
    let mut xs: Vec<Rat> = h.iter().map(|p| p.0.clone()).collect();
    for w in h.windows(2) {
        let (a, va) = &w[0];
        let (b, vb) = &w[1];
        if va == vb {
            continue;
        }
        let (lo, hi) = if va < vb { (va, vb) } else { (vb, va) };
        // f breakpoints strictly inside the value range of this piece
        let i0 = fxs.partition_point(|c| *c <= lo);
        let i1 = fxs.partition_point(|c| *c < hi);
        for c in &fxs[i0..i1] {
            let x = a + (*c - va) * (b - a) / (vb - va);
            xs.push(x);
        }
        if xs.len() > cap.saturating_mul(2) + 2 {
            return Err(Error::PieceCapExceeded {
                needed: xs.len(),
                cap,
            });
        }
    }
    xs.sort();
    xs.dedup();
    if xs.len() > cap + 1 {
        return Err(Error::PieceCapExceeded {
            needed: xs.len() - 1,
            cap,
        });
    }
    let out: Vec<(Rat, Rat)> = xs
        .into_iter()
        .map(|x| {
            let v = graph_eval(h, &x);
            let y = f.eval(&v);
            (x, y)
        })
        .collect();
    Ok(prune_collinear(out))
}

/// Drop interior points lying on the segment through their neighbours.
pub(crate) fn prune_collinear(points: Vec<(Rat, Rat)>) -> Vec<(Rat, Rat)> {
    let mut kept: Vec<(Rat, Rat)> = Vec::with_capacity(points.len());
    for p in points {
        while kept.len() >= 2 {
            let a = &kept[kept.len() - 2];
            let b = &kept[kept.len() - 1];
            // collinear over strictly increasing x: cross-multiplied slopes
            let lhs = (&b.1 - &a.1) * (&p.0 - &b.0);
            let rhs = (&p.1 - &b.1) * (&b.0 - &a.0);
            if lhs == rhs {
                kept.pop();
            } else {
                break;
            }
        }
        kept.push(p);
    }
    kept
}

fn merge_xs(a: &[(Rat, Rat)], b: &[(Rat, Rat)]) -> Vec<Rat> {
    let mut xs: Vec<Rat> = a.iter().map(|p| p.0.clone()).collect();
    xs.extend(b.iter().map(|p| p.0.clone()));
    xs.sort();
    xs.dedup();
    xs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;
    use crate::rat::{rat, rat_int};

    fn pts(raw: &[(i64, i64, i64, i64)]) -> Vec<(Rat, Rat)> {
        raw.iter()
            .map(|&(xn, xd, yn, yd)| (rat(xn, xd), rat(yn, yd)))
            .collect()
    }

    #[test]
    fn tent_evaluates() {
        let t = maps::tent();
        assert_eq!(t.eval(&rat(1, 3)), rat(2, 3));
        assert_eq!(t.eval(&rat(1, 2)), rat_int(1));
        assert_eq!(t.eval(&rat(3, 4)), rat(1, 2));
        assert_eq!(t.eval(&rat_int(0)), rat_int(0));
        assert_eq!(t.eval(&rat_int(1)), rat_int(0));
    }

    #[test]
    fn tent_squared_breakpoints() {
        let t = maps::tent();
        let t2 = t.compose(&t).unwrap();
        assert_eq!(
            t2.breakpoints(),
            &pts(&[
                (0, 1, 0, 1),
                (1, 4, 1, 1),
                (1, 2, 0, 1),
                (3, 4, 1, 1),
                (1, 1, 0, 1)
            ])[..]
        );
        assert_eq!(t.iterate(2).unwrap(), t2);
    }

    #[test]
    fn collinear_points_are_pruned() {
        let m = PLMap::new(pts(&[(0, 1, 0, 1), (1, 2, 1, 2), (1, 1, 1, 1)])).unwrap();
        assert_eq!(m.breakpoints(), &pts(&[(0, 1, 0, 1), (1, 1, 1, 1)])[..]);
        assert_eq!(m.piece_count(), 1);
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        assert!(PLMap::new(pts(&[(0, 1, 0, 1)])).is_err());
        assert!(PLMap::new(pts(&[(0, 1, 0, 1), (1, 2, 1, 1)])).is_err());
        assert!(PLMap::new(pts(&[(1, 8, 0, 1), (1, 1, 1, 1)])).is_err());
        assert!(PLMap::new(pts(&[(0, 1, 0, 1), (1, 2, 2, 1), (1, 1, 0, 1)])).is_err());
        // duplicate abscissa
        assert!(PLMap::new(pts(&[
            (0, 1, 0, 1),
            (1, 2, 1, 1),
            (1, 2, 0, 1),
            (1, 1, 1, 1)
        ]))
        .is_err());
    }

    #[test]
    fn image_and_preimage() {
        let t = maps::tent();
        assert_eq!(
            t.image_interval(&RatInterval::new(rat(1, 4), rat(3, 4))),
            RatInterval::new(rat(1, 2), rat_int(1))
        );
        assert!(t.is_surjective());

        let pre = t.preimage_point(&rat(1, 2));
        assert_eq!(
            pre.parts(),
            &[
                RatInterval::point(rat(1, 4)),
                RatInterval::point(rat(3, 4))
            ]
        );
        let pre = t.preimage_interval(&RatInterval::new(rat(1, 2), rat_int(1)));
        assert_eq!(pre.parts(), &[RatInterval::new(rat(1, 4), rat(3, 4))]);
    }

    #[test]
    fn preimage_sees_flat_pieces() {
        let m = PLMap::new(pts(&[
            (0, 1, 0, 1),
            (1, 4, 1, 2),
            (3, 4, 1, 2),
            (1, 1, 1, 1),
        ]))
        .unwrap();
        let pre = m.preimage_point(&rat(1, 2));
        assert_eq!(pre.parts(), &[RatInterval::new(rat(1, 4), rat(3, 4))]);
        assert!(m.has_flat_piece());
        assert_eq!(m.min_abs_slope(), rat_int(0));
    }

    #[test]
    fn sup_distance_tent_identity() {
        let t = maps::tent();
        let id = maps::identity();
        assert_eq!(t.sup_distance(&id), rat_int(1));
        assert_eq!(t.sup_distance(&t), rat_int(0));
    }

    #[test]
    fn laps_and_slopes() {
        let t = maps::tent();
        assert_eq!(t.lap_count(), 2);
        assert_eq!(t.iterate(2).unwrap().lap_count(), 4);
        assert_eq!(maps::identity().lap_count(), 1);
        assert_eq!(t.max_abs_slope(), rat_int(2));
        assert_eq!(t.min_abs_slope(), rat_int(2));

        let flat = PLMap::new(pts(&[(0, 1, 1, 2), (1, 1, 1, 2)])).unwrap();
        assert_eq!(flat.lap_count(), 1);
        assert!(!flat.is_surjective());
    }

    #[test]
    fn flat_shoulder_merges_into_one_lap() {
        // up, flat, up again: still a single weakly-monotone lap
        let m = PLMap::new(pts(&[
            (0, 1, 0, 1),
            (1, 4, 1, 2),
            (1, 2, 1, 2),
            (1, 1, 1, 1),
        ]))
        .unwrap();
        assert_eq!(m.lap_count(), 1);
        // up, flat, down: two laps
        let m = PLMap::new(pts(&[
            (0, 1, 0, 1),
            (1, 4, 1, 2),
            (1, 2, 1, 2),
            (1, 1, 0, 1),
        ]))
        .unwrap();
        assert_eq!(m.lap_count(), 2);
    }

    #[test]
    fn iterate_hits_piece_cap() {
        let t = maps::tent();
        // tent^n has 2^n pieces; cap 8 admits n=3 but not n=4
        assert!(t.iterate_capped(3, 8).is_ok());
        match t.iterate_capped(4, 8) {
            Err(Error::PieceCapExceeded { cap: 8, .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn graph_on_restriction() {
        let t = maps::tent();
        let g = t.graph_on(&RatInterval::new(rat(1, 4), rat(3, 4)));
        assert_eq!(
            g,
            pts(&[(1, 4, 1, 2), (1, 2, 1, 1), (3, 4, 1, 2)])
        );
        let gp = t.graph_on(&RatInterval::point(rat(1, 2)));
        assert_eq!(gp, pts(&[(1, 2, 1, 1)]));
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        fn arb_rat_unit() -> impl Strategy<Value = Rat> {
            (0i64..=64).prop_map(|n| rat(n, 64))
        }

        fn arb_map() -> impl Strategy<Value = PLMap> {
            (
                proptest::collection::btree_set(1i64..64, 0..6),
                proptest::collection::vec(0i64..=64, 8),
            )
                .prop_map(|(xs, ys)| {
                    let mut points = vec![(rat_int(0), rat(ys[0], 64))];
                    for (i, x) in xs.iter().enumerate() {
                        points.push((rat(*x, 64), rat(ys[i + 1], 64)));
                    }
                    points.push((rat_int(1), rat(ys[7], 64)));
                    PLMap::new(points).unwrap()
                })
        }

        proptest! {
            #[test]
            fn identity_is_neutral(f in arb_map()) {
                let id = maps::identity();
                prop_assert_eq!(f.compose(&id).unwrap(), f.clone());
                prop_assert_eq!(id.compose(&f).unwrap(), f);
            }

            #[test]
            fn eval_point_lands_in_preimage(f in arb_map(), x in arb_rat_unit()) {
                let y = f.eval(&x);
                prop_assert!(f.preimage_point(&y).contains(&x));
            }

            #[test]
            fn compose_matches_pointwise(f in arb_map(), g in arb_map(), x in arb_rat_unit()) {
                let fg = f.compose(&g).unwrap();
                prop_assert_eq!(fg.eval(&x), f.eval(&g.eval(&x)));
            }

            #[test]
            fn image_bounds_are_attained(f in arb_map(), x in arb_rat_unit()) {
                let im = f.image();
                let y = f.eval(&x);
                prop_assert!(im.contains(&y));
                prop_assert!(!f.preimage_point(&im.lo).is_empty());
                prop_assert!(!f.preimage_point(&im.hi).is_empty());
            }

            #[test]
            fn sup_distance_is_a_metric_bound(f in arb_map(), g in arb_map(), x in arb_rat_unit()) {
                let d = f.sup_distance(&g);
                let here = rat::abs(&(f.eval(&x) - g.eval(&x)));
                prop_assert!(here <= d);
            }
        }
    }
}
