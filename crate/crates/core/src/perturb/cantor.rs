//! Seeding periodic points along transverse periodic orbits.
//!
//! Folding the map (2n+1)-fold over a small window around each point of a
//! transverse periodic orbit multiplies the periodic points passing through
//! the windows: a representative of minimal period κ dividing the ambient
//! period k ends up with exactly (2n+1)^(k/κ) · κ fixed points of the k-th
//! iterate inside its orbit windows, spread over branches of width
//! 2a/(2n+1)^(k/κ). The counts are exact and re-verified by solving for the
//! fixed-point set of the perturbed iterate, never assumed.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::periodic::fix_set;
use crate::plmap::PLMap;
use crate::rat::{self, rat, rat_int, Rat};

/// What to seed: representatives of periodic orbits, the ambient period k,
/// and the fold count n per window. `half_width` fixes the window radius;
/// `None` lets the search shrink from 1/4 until the exact counts lock in.
#[derive(Debug, Clone)]
pub struct CantorPlan {
    pub period: usize,
    pub representatives: Vec<Rat>,
    pub folds: usize,
    pub half_width: Option<Rat>,
}

/// Exact bookkeeping for one representative.
#[derive(Debug, Clone)]
pub struct CantorCount {
    pub representative: Rat,
    pub minimal_period: usize,
    pub expected: usize,
    pub found: usize,
    pub branch_width: Rat,
    pub windows: Vec<RatInterval>,
}

#[derive(Debug, Clone)]
pub struct CantorOutcome {
    pub map: PLMap,
    pub half_width: Rat,
    pub reports: Vec<CantorCount>,
}

/// Slope of `f` at a non-breakpoint.
fn slope_at(f: &PLMap, x: &Rat) -> Rat {
    let bps = f.breakpoints();
    let j = bps.partition_point(|(bx, _)| bx <= x);
    f.slopes()[j - 1].clone()
}

fn is_breakpoint(f: &PLMap, x: &Rat) -> bool {
    f.breakpoints()
        .binary_search_by(|(bx, _)| bx.cmp(x))
        .is_ok()
}

struct RepOrbit {
    orbit: Vec<Rat>,
    kappa: usize,
}

fn rep_orbit(f: &PLMap, x: &Rat, period: usize) -> Result<RepOrbit> {
    let mut orbit = vec![x.clone()];
    let mut cur = f.eval(x);
    while cur != *x {
        if orbit.len() > period {
            return Err(Error::InvalidSpec(format!(
                "{x} is not periodic with period dividing {period}"
            )));
        }
        orbit.push(cur.clone());
        cur = f.eval(&cur);
    }
    let kappa = orbit.len();
    if period % kappa != 0 {
        return Err(Error::InvalidSpec(format!(
            "minimal period {kappa} of {x} does not divide {period}"
        )));
    }
    for p in &orbit {
        if is_breakpoint(f, p) {
            return Err(Error::InvalidSpec(format!(
                "the orbit of {x} passes through the breakpoint {p}"
            )));
        }
    }
    let prod = orbit
        .iter()
        .fold(rat::one(), |acc, p| acc * slope_at(f, p));
    if rat::abs(&prod) == rat::one() {
        return Err(Error::InvalidSpec(format!(
            "the orbit of {x} is not transverse (multiplier {prod})"
        )));
    }
    Ok(RepOrbit { orbit, kappa })
}

/// Fold the map around every orbit window and certify the exact number of
/// seeded periodic points per representative.
pub fn cantor_plan_perturb(f: &PLMap, plan: &CantorPlan) -> Result<CantorOutcome> {
    if plan.period == 0 {
        return Err(Error::InvalidSpec("ambient period must be positive".into()));
    }
    if plan.representatives.is_empty() {
        return Err(Error::InvalidSpec(
            "at least one representative is required".into(),
        ));
    }
    let reps: Vec<RepOrbit> = plan
        .representatives
        .iter()
        .map(|x| rep_orbit(f, x, plan.period))
        .collect::<Result<_>>()?;
    let mut all_points: BTreeSet<Rat> = BTreeSet::new();
    for r in &reps {
        for p in &r.orbit {
            if !all_points.insert(p.clone()) {
                return Err(Error::InvalidSpec(format!(
                    "representatives share the orbit point {p}"
                )));
            }
        }
    }
    let m = 2 * plan.folds + 1;
    let mut expected = Vec::with_capacity(reps.len());
    for r in &reps {
        let branches = m
            .checked_pow((plan.period / r.kappa) as u32)
            .and_then(|b| b.checked_mul(r.kappa));
        match branches {
            Some(e) => expected.push(e),
            None => {
                return Err(Error::InvalidSpec(
                    "expected count overflows; lower the fold count or period".into(),
                ))
            }
        }
    }

    let attempts: Vec<Rat> = match &plan.half_width {
        Some(a) => {
            if *a <= rat::zero() {
                return Err(Error::InvalidSpec("half-width must be positive".into()));
            }
            vec![a.clone()]
        }
        None => {
            let mut v = Vec::with_capacity(40);
            let mut a = rat(1, 4);
            for _ in 0..40 {
                v.push(a.clone());
                a = a / rat_int(2);
            }
            v
        }
    };
    let explicit = plan.half_width.is_some();

    'attempt: for a in &attempts {
        // Geometry first: interior windows, one affine piece each, strictly
        // pairwise disjoint across everything we fold.
        let mut all_windows: Vec<RatInterval> = Vec::new();
        let mut per_rep: Vec<Vec<RatInterval>> = Vec::new();
        for r in &reps {
            let mut ws = Vec::with_capacity(r.kappa);
            for p in &r.orbit {
                let w = RatInterval::new(p - a, p + a);
                if w.lo <= rat::zero() || w.hi >= rat::one() {
                    if explicit {
                        return Err(Error::Infeasible(format!(
                            "window around {p} leaves the open unit interval"
                        )));
                    }
                    continue 'attempt;
                }
                let spans_break = f
                    .breakpoints()
                    .iter()
                    .any(|(bx, _)| *bx >= w.lo && *bx <= w.hi);
                if spans_break {
                    if explicit {
                        return Err(Error::Infeasible(format!(
                            "window around {p} spans a breakpoint"
                        )));
                    }
                    continue 'attempt;
                }
                ws.push(w.clone());
                all_windows.push(w);
            }
            per_rep.push(ws);
        }
        all_windows.sort_by(|x, y| x.lo.cmp(&y.lo));
        for pair in all_windows.windows(2) {
            if pair[0].hi >= pair[1].lo {
                if explicit {
                    return Err(Error::Infeasible(
                        "orbit windows overlap at this half-width".into(),
                    ));
                }
                continue 'attempt;
            }
        }

        // Fold only the representative's own window. The orbit re-enters it
        // every kappa steps, so the k-th iterate picks up a factor 2n+1 per
        // re-entry; the remaining orbit windows just have to stay affine and
        // disjoint for the census to attribute points cleanly.
        let folded: Vec<RatInterval> = per_rep.iter().map(|ws| ws[0].clone()).collect();
        let mut g = f.clone();
        for w in &folded {
            let step = w.len() / rat_int(m as i64);
            let mut parts = Vec::with_capacity(m);
            for i in 0..m {
                let lo = &w.lo + rat_int(i as i64) * &step;
                let hi = if i + 1 == m {
                    w.hi.clone()
                } else {
                    &w.lo + rat_int(i as i64 + 1) * &step
                };
                parts.push(RatInterval::new(lo, hi));
            }
            g = super::window_copies(&g, w, &parts, true)?;
        }
        let width_bound = all_windows
            .iter()
            .map(|w| f.image_interval(w).len())
            .max()
            .expect("at least one window");
        assert!(
            f.sup_distance(&g) <= width_bound,
            "folds strayed beyond their windows' image diameters"
        );

        // Exact census of fix(g^k) inside each representative's windows.
        let fixed = fix_set(&g, plan.period)?;
        let mut found = vec![0usize; reps.len()];
        let mut clean = true;
        for part in fixed.parts() {
            let home = per_rep
                .iter()
                .position(|ws| ws.iter().any(|w| w.intersects(part)));
            if let Some(i) = home {
                if part.is_point() {
                    found[i] += 1;
                } else {
                    // A fixed plateau inside a window: transversality failed.
                    clean = false;
                    break;
                }
            }
        }
        let all_match = clean && found == expected;
        if !all_match {
            if explicit {
                return Err(Error::Infeasible(format!(
                    "seeded counts {found:?} do not match the expected {expected:?} at half-width {a}"
                )));
            }
            continue 'attempt;
        }

        let mut reports = Vec::with_capacity(reps.len());
        for (i, r) in reps.iter().enumerate() {
            let denom = m.checked_pow((plan.period / r.kappa) as u32).unwrap();
            reports.push(CantorCount {
                representative: plan.representatives[i].clone(),
                minimal_period: r.kappa,
                expected: expected[i],
                found: found[i],
                branch_width: rat_int(2) * a / rat_int(denom as i64),
                windows: per_rep[i].clone(),
            });
        }
        return Ok(CantorOutcome {
            map: g,
            half_width: a.clone(),
            reports,
        });
    }
    Err(Error::Infeasible(
        "no half-width locked in the expected counts".into(),
    ))
}
