//! Piecewise-constant probability densities on [0,1] and the exact
//! invariance check μ(f⁻¹A) = μ(A).

use crate::error::{Error, Result};
use crate::homeo::PLHomeo;
use crate::interval::RatInterval;
use crate::plmap::PLMap;
use crate::rat::{self, Rat};

/// cuts: 0 = c₀ < c₁ < … < c_k = 1; values: one nonnegative density value
/// per cell [cᵢ, cᵢ₊₁]; total mass exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseConstDensity {
    cuts: Vec<Rat>,
    values: Vec<Rat>,
}

/// Outcome of the invariance check. `Violated` carries one exact witness
/// cell where the pulled-back mass and the direct mass disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureVerdict {
    Preserved,
    Violated {
        cell: RatInterval,
        direct_mass: Rat,
        pullback_mass: Rat,
    },
}

impl PiecewiseConstDensity {
    pub fn new(cuts: Vec<Rat>, values: Vec<Rat>) -> Result<Self> {
        if cuts.len() < 2 || values.len() + 1 != cuts.len() {
            return Err(Error::InvalidDensity(format!(
                "{} cuts with {} values",
                cuts.len(),
                values.len()
            )));
        }
        if cuts[0] != rat::zero() || cuts[cuts.len() - 1] != rat::one() {
            return Err(Error::InvalidDensity("cuts must run from 0 to 1".into()));
        }
        for w in cuts.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidDensity(format!(
                    "cuts must strictly increase: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let mut mass = rat::zero();
        for (i, v) in values.iter().enumerate() {
            if *v < rat::zero() {
                return Err(Error::InvalidDensity(format!("negative value {v}")));
            }
            mass += v * (&cuts[i + 1] - &cuts[i]);
        }
        if mass != rat::one() {
            return Err(Error::InvalidDensity(format!(
                "total mass is {mass}, must be 1"
            )));
        }
        // canonical form: fuse adjacent cells with equal values so that
        // structural equality is semantic equality
        let mut ccuts = vec![cuts[0].clone()];
        let mut cvalues: Vec<Rat> = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            if cvalues.last() == Some(&v) {
                *ccuts.last_mut().unwrap() = cuts[i + 1].clone();
                continue;
            }
            cvalues.push(v);
            ccuts.push(cuts[i + 1].clone());
        }
        Ok(PiecewiseConstDensity {
            cuts: ccuts,
            values: cvalues,
        })
    }

    pub fn lebesgue() -> Self {
        PiecewiseConstDensity {
            cuts: vec![rat::zero(), rat::one()],
            values: vec![rat::one()],
        }
    }

    pub fn cuts(&self) -> &[Rat] {
        &self.cuts
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn is_full_support(&self) -> bool {
        self.values.iter().all(|v| *v > rat::zero())
    }

    /// Density value at a point; at a cut the right cell wins (the left
    /// cell at 1). Value-at-a-point only matters through integrals.
    pub fn value_at(&self, x: &Rat) -> Rat {
        assert!(*x >= rat::zero() && *x <= rat::one());
        let i = self.cuts.partition_point(|c| c <= x);
        if i == self.cuts.len() {
            self.values[self.values.len() - 1].clone()
        } else {
            self.values[i - 1].clone()
        }
    }

    /// μ([0, x]).
    pub fn cdf(&self, x: &Rat) -> Rat {
        assert!(*x >= rat::zero() && *x <= rat::one());
        let mut acc = rat::zero();
        for i in 0..self.values.len() {
            let lo = &self.cuts[i];
            let hi = &self.cuts[i + 1];
            if x <= lo {
                break;
            }
            let top = if x < hi { x } else { hi };
            acc += &self.values[i] * (top - lo);
        }
        acc
    }

    pub fn mass_on(&self, iv: &RatInterval) -> Rat {
        self.cdf(&iv.hi) - self.cdf(&iv.lo)
    }

    /// The cdf as a PL homeomorphism; needs full support, else the cdf is
    /// not injective.
    pub fn measure_homeo(&self) -> Result<PLHomeo> {
        if !self.is_full_support() {
            return Err(Error::InvalidDensity(
                "cdf of a density with a zero-density cell is not a homeomorphism".into(),
            ));
        }
        let pts: Vec<(Rat, Rat)> = self
            .cuts
            .iter()
            .map(|c| (c.clone(), self.cdf(c)))
            .collect();
        let map = PLMap::new(pts)?;
        PLHomeo::new(map)
    }

    /// Push the density forward through a homeomorphism:
    /// (ψ_*μ)(A) = μ(ψ⁻¹A), with density ρ(ψ⁻¹(y)) / |ψ'(ψ⁻¹(y))|.
    pub fn pushforward_homeo(&self, psi: &PLHomeo) -> Result<PiecewiseConstDensity> {
        // cut grid in the image: ψ of density cuts and ψ's own breakpoints
        let mut cuts: Vec<Rat> = self.cuts.iter().map(|c| psi.eval(c)).collect();
        cuts.extend(psi.as_map().breakpoints().iter().map(|(_, y)| y.clone()));
        cuts.sort();
        cuts.dedup();
        let inv = psi.inverse();
        let mut values = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / rat::two();
            let x = inv.eval(&mid);
            // |ψ'| at x: slope of the piece containing x (midpoints never
            // sit on a breakpoint of ψ∘the grid, but guard anyway by
            // sampling the slope through a two-point difference)
            let x2 = inv.eval(&w[1]);
            let x1 = inv.eval(&w[0]);
            let dslope = rat::abs(&((&w[1] - &w[0]) / (x2 - x1)));
            values.push(self.value_at(&x) / dslope);
        }
        PiecewiseConstDensity::new(cuts, values)
    }

    /// Exact invariance check for μ with this density under `f`.
    ///
    /// On any value cell that avoids f(breakpoints), f(cuts) and the cuts
    /// themselves, both t ↦ μ(f⁻¹[0,t]) and t ↦ μ([0,t]) are affine, so
    /// invariance reduces to matching their slopes cell by cell — that is,
    /// Σ_branches ρ(branch⁻¹(t))/|slope| = ρ(t) at the cell midpoint —
    /// plus the requirement that no flat piece carries positive mass
    /// (a flat piece with mass dumps an atom where μ has none).
    pub fn check_invariance(&self, f: &PLMap) -> MeasureVerdict {
        let bps = f.breakpoints();
        for w in bps.windows(2) {
            if w[0].1 == w[1].1 {
                let dom = RatInterval::new(w[0].0.clone(), w[1].0.clone());
                let m = self.mass_on(&dom);
                if m > rat::zero() {
                    return MeasureVerdict::Violated {
                        cell: RatInterval::point(w[0].1.clone()),
                        direct_mass: rat::zero(),
                        pullback_mass: m,
                    };
                }
            }
        }

        let mut grid: Vec<Rat> = self.cuts.clone();
        grid.extend(bps.iter().map(|(_, y)| y.clone()));
        grid.extend(self.cuts.iter().map(|c| f.eval(c)));
        grid.sort();
        grid.dedup();

        for w in grid.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / rat::two();
            let direct = self.value_at(&mid);
            let mut pulled = rat::zero();
            for p in bps.windows(2) {
                let (x0, y0) = &p[0];
                let (x1, y1) = &p[1];
                if y0 == y1 {
                    continue; // flat pieces already known to carry no mass
                }
                let (vlo, vhi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
                if !(vlo <= a && b <= vhi) {
                    continue;
                }
                let s = (y1 - y0) / (x1 - x0);
                let x = x0 + (&mid - y0) / &s;
                pulled += self.value_at(&x) / rat::abs(&s);
            }
            if pulled != direct {
                let cell = RatInterval::new(a.clone(), b.clone());
                let len = cell.len();
                return MeasureVerdict::Violated {
                    direct_mass: &direct * &len,
                    pullback_mass: &pulled * &len,
                    cell,
                };
            }
        }
        MeasureVerdict::Preserved
    }
}
