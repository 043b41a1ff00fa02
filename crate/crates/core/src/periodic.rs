//! Fixed and periodic point structure: exact fixed sets of iterates,
//! exact-period decomposition, transversality of diagonal crossings, and
//! per-cell dense-periodicity certificates.

use crate::error::Result;
use crate::interval::{IntervalSet, RatInterval};
use crate::plmap::PLMap;
use crate::rat::{self, Rat};

/// Fix(fⁿ) as a finite union of closed intervals (isolated fixed points are
/// degenerate intervals; slope-1 pieces on the diagonal contribute whole
/// segments).
pub fn fix_set(f: &PLMap, n: usize) -> Result<IntervalSet> {
    let g = f.iterate(n)?;
    Ok(fixed_points_of(&g))
}

fn fixed_points_of(g: &PLMap) -> IntervalSet {
    let mut parts = Vec::new();
    for w in g.breakpoints().windows(2) {
        let (x0, y0) = &w[0];
        let (x1, y1) = &w[1];
        let s = (y1 - y0) / (x1 - x0);
        if s == rat::one() {
            if y0 == x0 {
                parts.push(RatInterval::new(x0.clone(), x1.clone()));
            }
        } else {
            // y0 + s (x - x0) = x  ⇔  x = (y0 - s x0) / (1 - s)
            let x = (y0 - &s * x0) / (rat::one() - &s);
            if &x >= x0 && &x <= x1 {
                parts.push(RatInterval::point(x));
            }
        }
    }
    IntervalSet::from_parts(parts)
}

/// Points of exact period n, split into isolated points and positive-length
/// components of Fix(fⁿ) that still contain exact-period-n points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerSet {
    pub period: usize,
    pub isolated: Vec<Rat>,
    pub interval_components: Vec<RatInterval>,
}

impl PerSet {
    pub fn is_empty(&self) -> bool {
        self.isolated.is_empty() && self.interval_components.is_empty()
    }
}

pub fn per_set(f: &PLMap, n: usize) -> Result<PerSet> {
    let fixn = fix_set(f, n)?;
    let mut divisor_parts: Vec<RatInterval> = Vec::new();
    for d in 1..n {
        if n % d == 0 {
            divisor_parts.extend(fix_set(f, d)?.parts().iter().cloned());
        }
    }
    let lower = IntervalSet::from_parts(divisor_parts);

    let mut isolated = Vec::new();
    let mut interval_components = Vec::new();
    for comp in fixn.parts() {
        if comp.is_point() {
            if !lower.contains(&comp.lo) {
                isolated.push(comp.lo.clone());
            }
        } else {
            // the component survives unless the union of lower fixed sets
            // covers it: both are closed, so covering means equality of
            // the clipped union with the component
            let clipped = lower.intersect_interval(comp);
            let covered = clipped.parts() == [comp.clone()];
            if !covered {
                interval_components.push(comp.clone());
            }
        }
    }
    Ok(PerSet {
        period: n,
        isolated,
        interval_components,
    })
}

/// Whether the graph of `g` crosses the diagonal transversally at a fixed
/// point x: the displacement g − id changes sign there. Decided purely from
/// the one-sided slopes; endpoints of [0,1] are never transverse (no
/// two-sided crossing exists).
pub fn is_transverse(g: &PLMap, x: &Rat) -> bool {
    assert_eq!(&g.eval(x), x, "transversality asked at a non-fixed point");
    if *x == rat::zero() || *x == rat::one() {
        return false;
    }
    let bps = g.breakpoints();
    let slopes = g.slopes();
    // piece index whose open interior or right endpoint contains x
    let i = bps.partition_point(|p| p.0 < *x); // first bp with bp.x >= x
    let left = &slopes[i - 1];
    let right = if bps[i].0 == *x {
        if i == slopes.len() {
            left
        } else {
            &slopes[i]
        }
    } else {
        left
    };
    let sl = left - rat::one();
    let sr = right - rat::one();
    sl.clone() * sr > rat::zero()
}

/// Per-cell certificate that periodic points meet every cell of the uniform
/// grid, searching periods 1..=max_period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellCert {
    /// Least period whose fixed set meets the cell, with the leftmost
    /// witness point in the intersection.
    Witnessed { period: usize, point: Rat },
    /// No iterate up to the budget has a fixed point in the cell.
    Exhausted { max_period: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensePeriodicityReport {
    pub cells: usize,
    pub max_period: usize,
    pub verdicts: Vec<CellCert>,
}

impl DensePeriodicityReport {
    pub fn all_witnessed(&self) -> bool {
        self.verdicts
            .iter()
            .all(|v| matches!(v, CellCert::Witnessed { .. }))
    }
}

pub fn dense_periodicity(
    f: &PLMap,
    cells: usize,
    max_period: usize,
) -> Result<DensePeriodicityReport> {
    assert!(cells >= 1 && max_period >= 1);
    let cell_iv = |i: usize| {
        RatInterval::new(
            rat::rat_int(i as i64) / rat::rat_int(cells as i64),
            rat::rat_int(i as i64 + 1) / rat::rat_int(cells as i64),
        )
    };
    let mut verdicts = vec![None; cells];
    let mut open = cells;
    let mut g = crate::maps::identity();
    for n in 1..=max_period {
        g = f.compose(&g)?;
        let fixn = fixed_points_of(&g);
        for i in 0..cells {
            if verdicts[i].is_some() {
                continue;
            }
            let hit = fixn.intersect_interval(&cell_iv(i));
            if let Some(p) = hit.min() {
                verdicts[i] = Some(CellCert::Witnessed {
                    period: n,
                    point: p.clone(),
                });
                open -= 1;
            }
        }
        if open == 0 {
            break;
        }
    }
    Ok(DensePeriodicityReport {
        cells,
        max_period,
        verdicts: verdicts
            .into_iter()
            .map(|v| v.unwrap_or(CellCert::Exhausted { max_period }))
            .collect(),
    })
}
