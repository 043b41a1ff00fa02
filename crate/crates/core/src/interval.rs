//! Closed rational intervals and finite unions of them.

use crate::rat::{max, min, Rat};
use std::fmt;

/// A closed interval [lo, hi] with lo <= hi. Degenerate (lo == hi) is legal
/// and shows up constantly as fixed points and collapsed images.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RatInterval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    pub fn point(x: Rat) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    pub fn len(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &RatInterval) -> bool {
        max(self.lo.clone(), other.lo.clone()) <= min(self.hi.clone(), other.hi.clone())
    }

    pub fn intersect(&self, other: &RatInterval) -> Option<RatInterval> {
        let lo = max(self.lo.clone(), other.lo.clone());
        let hi = min(self.hi.clone(), other.hi.clone());
        if lo <= hi {
            Some(RatInterval { lo, hi })
        } else {
            None
        }
    }

    pub fn hull(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: min(self.lo.clone(), other.lo.clone()),
            hi: max(self.hi.clone(), other.hi.clone()),
        }
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / crate::rat::two()
    }

    /// Expand by r on both sides, clamped to [0,1].
    pub fn ball_in_unit(&self, r: &Rat) -> RatInterval {
        RatInterval {
            lo: max(crate::rat::zero(), &self.lo - r),
            hi: min(crate::rat::one(), &self.hi + r),
        }
    }

    /// Hausdorff-style sup distance between closed intervals:
    /// max(|lo-lo'|, |hi-hi'|) bounds it from above and is what the chain
    /// machinery needs; for nested/overlapping intervals it is exactly the
    /// Hausdorff distance for this 1-D closed case.
    pub fn endpoint_distance(&self, other: &RatInterval) -> Rat {
        max(
            crate::rat::abs(&(&self.lo - &other.lo)),
            crate::rat::abs(&(&self.hi - &other.hi)),
        )
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A finite union of closed intervals, kept sorted and merged (touching
/// intervals coalesce: [a,b] ∪ [b,c] = [a,c]).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    parts: Vec<RatInterval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn from_parts(mut parts: Vec<RatInterval>) -> Self {
        parts.sort();
        let mut merged: Vec<RatInterval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi => {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                    }
                }
                _ => merged.push(p),
            }
        }
        IntervalSet { parts: merged }
    }

    pub fn push(&mut self, iv: RatInterval) {
        let mut parts = std::mem::take(&mut self.parts);
        parts.push(iv);
        *self = IntervalSet::from_parts(parts);
    }

    pub fn parts(&self) -> &[RatInterval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: &Rat) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    pub fn intersect_interval(&self, iv: &RatInterval) -> IntervalSet {
        IntervalSet {
            parts: self.parts.iter().filter_map(|p| p.intersect(iv)).collect(),
        }
    }

    pub fn min(&self) -> Option<&Rat> {
        self.parts.first().map(|p| &p.lo)
    }

    pub fn max(&self) -> Option<&Rat> {
        self.parts.last().map(|p| &p.hi)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    #[test]
    fn merge_touching_and_overlapping() {
        let s = IntervalSet::from_parts(vec![
            RatInterval::new(rat(1, 2), rat(3, 4)),
            RatInterval::new(rat(0, 1), rat(1, 4)),
            RatInterval::new(rat(1, 4), rat(1, 2)),
        ]);
        assert_eq!(
            s.parts(),
            &[RatInterval::new(rat_int(0), rat(3, 4))]
        );
    }

    #[test]
    fn keeps_gaps() {
        let s = IntervalSet::from_parts(vec![
            RatInterval::new(rat(0, 1), rat(1, 4)),
            RatInterval::new(rat(1, 2), rat(3, 4)),
        ]);
        assert_eq!(s.parts().len(), 2);
        assert!(s.contains(&rat(1, 8)));
        assert!(!s.contains(&rat(3, 8)));
    }

    #[test]
    fn degenerate_points_merge_into_intervals() {
        let s = IntervalSet::from_parts(vec![
            RatInterval::point(rat(1, 2)),
            RatInterval::new(rat(1, 2), rat(5, 8)),
        ]);
        assert_eq!(s.parts(), &[RatInterval::new(rat(1, 2), rat(5, 8))]);
    }

    #[test]
    fn interval_ops() {
        let a = RatInterval::new(rat(1, 4), rat(1, 2));
        let b = RatInterval::new(rat(3, 8), rat(3, 4));
        assert!(a.intersects(&b));
        assert_eq!(
            a.intersect(&b).unwrap(),
            RatInterval::new(rat(3, 8), rat(1, 2))
        );
        assert_eq!(a.hull(&b), RatInterval::new(rat(1, 4), rat(3, 4)));
        assert_eq!(a.midpoint(), rat(3, 8));
        let big = RatInterval::new(rat(0, 1), rat(1, 1));
        assert_eq!(a.ball_in_unit(&rat(1, 3)), RatInterval::new(rat_int(0), rat(5, 6)));
        assert!(big.contains_interval(&a));
    }
}
