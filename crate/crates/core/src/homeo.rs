//! Piecewise-linear homeomorphisms of [0,1] and conjugation.

use crate::error::{Error, Result};
use crate::plmap::PLMap;
use crate::rat::{self, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLHomeo {
    map: PLMap,
    increasing: bool,
}

impl PLHomeo {
    /// A PL self-map of [0,1] is a homeomorphism iff it is strictly
    /// monotone and onto, which for breakpoint graphs means: no flat piece,
    /// all slopes of one sign, endpoints hitting {0,1}.
    pub fn new(map: PLMap) -> Result<Self> {
        let slopes = map.slopes();
        let increasing = slopes[0] > rat::zero();
        let decreasing = slopes[0] < rat::zero();
        if !increasing && !decreasing {
            return Err(Error::InvalidMap("homeomorphism has a flat piece".into()));
        }
        for s in &slopes {
            if (increasing && *s <= rat::zero()) || (decreasing && *s >= rat::zero()) {
                return Err(Error::InvalidMap(
                    "homeomorphism must be strictly monotone".into(),
                ));
            }
        }
        let f0 = map.eval(&rat::zero());
        let f1 = map.eval(&rat::one());
        let onto = if increasing {
            f0 == rat::zero() && f1 == rat::one()
        } else {
            f0 == rat::one() && f1 == rat::zero()
        };
        if !onto {
            return Err(Error::InvalidMap(
                "homeomorphism must map endpoints onto {0,1}".into(),
            ));
        }
        Ok(PLHomeo { map, increasing })
    }

    pub fn as_map(&self) -> &PLMap {
        &self.map
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.map.eval(x)
    }

    /// Inverse: swap the coordinates of the graph (reversing for the
    /// decreasing case so abscissas increase again).
    pub fn inverse(&self) -> PLHomeo {
        let mut pts: Vec<(Rat, Rat)> = self
            .map
            .breakpoints()
            .iter()
            .map(|(x, y)| (y.clone(), x.clone()))
            .collect();
        if !self.increasing {
            pts.reverse();
        }
        let map = PLMap::new(pts).expect("inverse of a homeomorphism is valid");
        PLHomeo {
            map,
            increasing: self.increasing,
        }
    }

    /// ψ ∘ f ∘ ψ⁻¹ — the dynamics of `f` seen through the coordinate
    /// change ψ.
    pub fn conjugate(&self, f: &PLMap) -> Result<PLMap> {
        let inv = self.inverse();
        let inner = f.compose(inv.as_map())?;
        self.map.compose(&inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;
    use crate::rat::{rat, rat_int};

    fn psi() -> PLHomeo {
        let m = PLMap::new(vec![
            (rat_int(0), rat_int(0)),
            (rat(1, 2), rat(1, 4)),
            (rat_int(1), rat_int(1)),
        ])
        .unwrap();
        PLHomeo::new(m).unwrap()
    }

    #[test]
    fn validates_homeomorphisms() {
        assert!(PLHomeo::new(maps::identity()).is_ok());
        assert!(PLHomeo::new(maps::reflection()).is_ok());
        assert!(PLHomeo::new(maps::tent()).is_err());
        // monotone but not onto
        let m = PLMap::new(vec![(rat_int(0), rat(1, 4)), (rat_int(1), rat_int(1))]).unwrap();
        assert!(PLHomeo::new(m).is_err());
    }

    #[test]
    fn inverse_swaps_coordinates() {
        let p = psi();
        let inv = p.inverse();
        assert_eq!(
            inv.as_map().breakpoints(),
            &[
                (rat_int(0), rat_int(0)),
                (rat(1, 4), rat(1, 2)),
                (rat_int(1), rat_int(1))
            ][..]
        );
        assert_eq!(inv.eval(&p.eval(&rat(1, 3))), rat(1, 3));

        let r = PLHomeo::new(maps::reflection()).unwrap();
        let rinv = r.inverse();
        assert_eq!(rinv.as_map(), &maps::reflection());
    }

    #[test]
    fn conjugation_moves_fixed_points() {
        // ψ(2/3) = 1/2, so the conjugated tent fixes 1/2
        let p = psi();
        let h = p.conjugate(&maps::tent()).unwrap();
        assert_eq!(h.eval(&rat(1, 2)), rat(1, 2));
        assert_eq!(h.eval(&rat_int(0)), rat_int(0));
        assert_eq!(p.eval(&rat(2, 3)), rat(1, 2));
    }

    #[test]
    fn conjugating_by_reflection_flips_the_tent() {
        let r = PLHomeo::new(maps::reflection()).unwrap();
        let g = r.conjugate(&maps::tent()).unwrap();
        assert_eq!(
            g.breakpoints(),
            &[
                (rat_int(0), rat_int(1)),
                (rat(1, 2), rat_int(0)),
                (rat_int(1), rat_int(1))
            ][..]
        );
    }
}
