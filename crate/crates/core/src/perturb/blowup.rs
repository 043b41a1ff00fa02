//! Orbit blowups: inflate a finite forward-invariant family of points into
//! intervals, Denjoy style, and control what the new map does on them.
//!
//! Given a base map T with no flat pieces and a finite family D of interior
//! non-turning points with T(D) ⊆ D, each d ∈ D becomes an interval I_d. Off
//! the inflated blocks the new map G re-reads T through the inflation; a
//! block maps onto its target block affinely, except that a fixed block may
//! instead get a contracting core strictly below the diagonal. A monotone
//! collapse π flattens every block back to its point and satisfies
//! T ∘ π = π ∘ G exactly at every vertex of G. Between vertices a
//! finite-stage blowup necessarily sweeps across each block its pieces
//! cross; that caveat travels with every result as `note`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::maps;
use crate::plmap::PLMap;
use crate::rat::{self, rat_int, Rat};

/// What the blowup does on a block over a φ-fixed family point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKind {
    /// Fixed blocks carry the identity (orientation-preserving) or the
    /// reflection (orientation-reversing); periodic blocks stay filled
    /// with periodic points.
    AffineCycle,
    /// Fixed blocks get a two-piece graph strictly below the diagonal on
    /// the interior: endpoints stay fixed, everything between drifts to
    /// the left endpoint, and no interior periodic point survives.
    Contracting,
}

pub const TRUNCATION_NOTE: &str = "finite-stage blowup: T∘π = π∘G holds exactly at every \
vertex of the blown map; between vertices each piece sweeps across the blocks it crosses, \
as any finite piecewise-linear stage must";

/// A blowup request: which points to inflate, how fast the inserted lengths
/// decay, and what to do on fixed blocks. The k-th enumerated point gets an
/// interval of length eta^(k+2), so the total insertion stays below eta.
#[derive(Debug, Clone)]
pub struct BlowupPlan {
    base: PLMap,
    points: Vec<Rat>,
    eta: Rat,
    core: CoreKind,
}

impl BlowupPlan {
    /// No points at all; blowing up reproduces the base map.
    pub fn empty(base: PLMap) -> Self {
        BlowupPlan {
            base,
            points: Vec::new(),
            eta: rat::rat(1, 4),
            core: CoreKind::AffineCycle,
        }
    }

    /// Breadth-first preimage tree of a fixed point: level 0 is the seed,
    /// level m+1 holds the new preimages of level m, ascending within each
    /// level.
    pub fn preimage_tree(
        base: PLMap,
        seed: Rat,
        depth: usize,
        eta: Rat,
        core: CoreKind,
    ) -> Result<Self> {
        check_eta(&eta)?;
        if base.eval(&seed) != seed {
            return Err(Error::InvalidSpec(format!(
                "preimage tree needs a fixed seed, got {seed}"
            )));
        }
        let mut points = vec![seed.clone()];
        let mut seen: BTreeSet<Rat> = points.iter().cloned().collect();
        let mut frontier = vec![seed];
        for _ in 0..depth {
            let mut next: BTreeSet<Rat> = BTreeSet::new();
            for p in &frontier {
                for q in point_preimages(&base, p)? {
                    if !seen.contains(&q) {
                        next.insert(q);
                    }
                }
            }
            frontier = next.into_iter().collect();
            for q in &frontier {
                seen.insert(q.clone());
            }
            points.extend(frontier.iter().cloned());
        }
        Ok(BlowupPlan {
            base,
            points,
            eta,
            core,
        })
    }

    /// The forward orbit of a point, enumerated in orbit order, up to the
    /// first exact repeat.
    pub fn forward_orbit(base: PLMap, x0: Rat, eta: Rat, core: CoreKind) -> Result<Self> {
        check_eta(&eta)?;
        let mut points = Vec::new();
        let mut seen: BTreeSet<Rat> = BTreeSet::new();
        let mut cur = x0;
        for _ in 0..256 {
            if seen.contains(&cur) {
                return Ok(BlowupPlan {
                    base,
                    points,
                    eta,
                    core,
                });
            }
            seen.insert(cur.clone());
            points.push(cur.clone());
            cur = base.eval(&cur);
        }
        Err(Error::Infeasible(
            "orbit did not close within 256 steps".into(),
        ))
    }

    pub fn points(&self) -> &[Rat] {
        &self.points
    }

    pub fn eta(&self) -> &Rat {
        &self.eta
    }

    pub fn core(&self) -> CoreKind {
        self.core
    }

    pub fn base(&self) -> &PLMap {
        &self.base
    }
}

fn check_eta(eta: &Rat) -> Result<()> {
    if *eta <= rat::zero() || *eta >= rat::rat(1, 2) {
        return Err(Error::InvalidSpec(format!(
            "inflation rate must sit in (0, 1/2), got {eta}"
        )));
    }
    Ok(())
}

/// Exact preimage points; an interval part means a flat piece, which the
/// blowup machinery refuses to work over.
fn point_preimages(f: &PLMap, y: &Rat) -> Result<Vec<Rat>> {
    let set = f.preimage_point(y);
    let mut out = Vec::new();
    for part in set.parts() {
        if !part.is_point() {
            return Err(Error::InvalidSpec(
                "preimage contains an interval; the base map has a flat piece".into(),
            ));
        }
        out.push(part.lo.clone());
    }
    Ok(out)
}

/// One-sided slopes of `f` at `x`: the slope just left and just right.
/// `None` on the missing side of 0 or 1.
fn side_slopes(f: &PLMap, x: &Rat) -> (Option<Rat>, Option<Rat>) {
    let bps = f.breakpoints();
    let slopes = f.slopes();
    let j = bps.partition_point(|(bx, _)| bx < x);
    if j < bps.len() && bps[j].0 == *x {
        let left = if j > 0 { Some(slopes[j - 1].clone()) } else { None };
        let right = if j < slopes.len() {
            Some(slopes[j].clone())
        } else {
            None
        };
        (left, right)
    } else {
        let s = slopes[j - 1].clone();
        (Some(s.clone()), Some(s))
    }
}

/// A completed blowup: the inflated map, the collapse semiconjugacy, and
/// the exact geometry of the inserted blocks (in the rescaled coordinate,
/// enumeration order).
#[derive(Debug, Clone)]
pub struct Blowup {
    pub map: PLMap,
    pub collapse: PLMap,
    pub base: PLMap,
    pub gamma: Rat,
    pub intervals: Vec<RatInterval>,
    pub phi: Vec<usize>,
    pub core: CoreKind,
    pub rho: Rat,
    pub note: &'static str,
}

/// Carry out the blowup. The collapse identity T∘π = π∘G is asserted at
/// every raw vertex, and the distance to the base map is certified against
/// the (3 + Lip T)·gamma budget.
pub fn blowup(plan: &BlowupPlan) -> Result<Blowup> {
    let t = &plan.base;
    let d = &plan.points;
    if d.is_empty() {
        return Ok(Blowup {
            map: t.clone(),
            collapse: maps::identity(),
            base: t.clone(),
            gamma: rat::zero(),
            intervals: Vec::new(),
            phi: Vec::new(),
            core: plan.core,
            rho: rat::zero(),
            note: TRUNCATION_NOTE,
        });
    }
    if t.has_flat_piece() {
        return Err(Error::InvalidSpec(
            "blowup base must have no flat pieces".into(),
        ));
    }
    let distinct: BTreeSet<&Rat> = d.iter().collect();
    if distinct.len() != d.len() {
        return Err(Error::InvalidSpec("blown points must be distinct".into()));
    }
    for p in d {
        if *p <= rat::zero() || *p >= rat::one() {
            return Err(Error::InvalidSpec(format!(
                "blown point {p} must be interior to (0, 1)"
            )));
        }
        let (l, r) = side_slopes(t, p);
        let (l, r) = (l.expect("interior point"), r.expect("interior point"));
        if &l * &r <= rat::zero() {
            return Err(Error::InvalidSpec(format!(
                "blown point {p} is a turning point of the base map"
            )));
        }
    }
    let mut phi = Vec::with_capacity(d.len());
    for p in d {
        let y = t.eval(p);
        match d.iter().position(|q| *q == y) {
            Some(j) => phi.push(j),
            None => {
                return Err(Error::Infeasible(format!(
                    "family is not forward invariant: the image {y} of {p} is not in it"
                )))
            }
        }
    }
    if plan.core == CoreKind::Contracting && !phi.iter().enumerate().any(|(k, j)| *j == k) {
        return Err(Error::InvalidSpec(
            "a contracting core needs a fixed point in the family".into(),
        ));
    }

    // Inserted lengths decay geometrically in enumeration order; their sum
    // stays below eta because eta < 1/2.
    let mut lens = Vec::with_capacity(d.len());
    let mut cur = &plan.eta * &plan.eta;
    for _ in 0..d.len() {
        lens.push(cur.clone());
        cur = cur * &plan.eta;
    }
    let gamma: Rat = lens.iter().fold(rat::zero(), |a, l| a + l);
    assert!(gamma < plan.eta, "length budget exceeded");

    // Stretched positions: block k occupies [u_k, v_k] in [0, 1 + gamma].
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|a, b| d[*a].cmp(&d[*b]));
    let mut u = vec![rat::zero(); d.len()];
    let mut v = vec![rat::zero(); d.len()];
    let mut acc = rat::zero();
    for &k in &order {
        u[k] = &d[k] + &acc;
        v[k] = &u[k] + &lens[k];
        acc = acc + &lens[k];
    }
    let sorted_pts: Vec<Rat> = order.iter().map(|&k| d[k].clone()).collect();
    let mut cum = vec![rat::zero()];
    for &k in &order {
        cum.push(cum.last().unwrap() + &lens[k]);
    }
    let iota = |x: &Rat| -> Rat {
        let i = sorted_pts.partition_point(|p| p < x);
        x + &cum[i]
    };

    // Event grid in the base coordinate: T's own breakpoints, the blown
    // points, and every crossing (a non-blown preimage of a blown point).
    let mut events: BTreeSet<Rat> = t.breakpoints().iter().map(|(x, _)| x.clone()).collect();
    for p in d {
        events.insert(p.clone());
    }
    for p in d {
        for q in point_preimages(t, p)? {
            if !d.contains(&q) {
                events.insert(q);
            }
        }
    }

    let mut raw: Vec<(Rat, Rat)> = Vec::new();
    for x in &events {
        if let Some(k) = d.iter().position(|p| p == x) {
            let j = phi[k];
            let (l, _) = side_slopes(t, x);
            let increasing = l.expect("interior point") > rat::zero();
            if plan.core == CoreKind::Contracting && j == k {
                let len = &v[k] - &u[k];
                let mid = (&u[k] + &v[k]) / rat_int(2);
                raw.push((u[k].clone(), u[k].clone()));
                raw.push((mid, &u[k] + len / rat_int(4)));
                raw.push((v[k].clone(), v[k].clone()));
            } else if increasing {
                raw.push((u[k].clone(), u[j].clone()));
                raw.push((v[k].clone(), v[j].clone()));
            } else {
                raw.push((u[k].clone(), v[j].clone()));
                raw.push((v[k].clone(), u[j].clone()));
            }
        } else {
            let y = t.eval(x);
            let val = if let Some(ky) = d.iter().position(|p| *p == y) {
                // One-sided reading: the left-approach limit decides which
                // end of the target block the vertex pins; at x = 0 the
                // right side plays the mirror role.
                let (l, r) = side_slopes(t, x);
                if *x == rat::zero() {
                    if r.expect("right side at 0") > rat::zero() {
                        v[ky].clone()
                    } else {
                        u[ky].clone()
                    }
                } else if l.expect("left side") > rat::zero() {
                    u[ky].clone()
                } else {
                    v[ky].clone()
                }
            } else {
                iota(&y)
            };
            raw.push((iota(x), val));
        }
    }

    let scale = rat::one() + &gamma;
    let g = PLMap::new(raw.iter().map(|(x, y)| (x / &scale, y / &scale)).collect())?;

    let mut cps: Vec<(Rat, Rat)> = vec![(rat::zero(), rat::zero())];
    for &k in &order {
        cps.push((&u[k] / &scale, d[k].clone()));
        cps.push((&v[k] / &scale, d[k].clone()));
    }
    cps.push((rat::one(), rat::one()));
    let collapse = PLMap::new(cps)?;

    for (x, y) in &raw {
        let px = collapse.eval(&(x / &scale));
        let py = collapse.eval(&(y / &scale));
        assert_eq!(
            t.eval(&px),
            py,
            "collapse semiconjugacy broken at vertex {x}"
        );
    }

    let intervals: Vec<RatInterval> = (0..d.len())
        .map(|k| RatInterval::new(&u[k] / &scale, &v[k] / &scale))
        .collect();

    let rho = t.sup_distance(&g);
    assert!(
        rho <= (rat_int(3) + t.max_abs_slope()) * &gamma,
        "blowup drifted beyond its insertion budget"
    );

    Ok(Blowup {
        map: g,
        collapse,
        base: t.clone(),
        gamma,
        intervals,
        phi: phi.clone(),
        core: plan.core,
        rho,
        note: TRUNCATION_NOTE,
    })
}

/// Search for a fold anchor in `zone` whose forward orbit provably lands on
/// a block endpoint without visiting the interior of any replaced block.
///
/// Block endpoints map to block endpoints forever, and the mixing surgery
/// keeps every block-endpoint value, so such an anchor has a finite forward
/// orbit under the perturbed map as well — which is what keeps the Markov
/// grid of the result finite.
fn anchor_in_zone(
    g: &PLMap,
    zone_lo: &Rat,
    zone_hi: &Rat,
    lo_strict: bool,
    hi_strict: bool,
    forbidden: &[RatInterval],
    targets: &[Rat],
) -> Result<Rat> {
    let in_zone = |x: &Rat| -> bool {
        let above = if lo_strict { x > zone_lo } else { x >= zone_lo };
        let below = if hi_strict { x < zone_hi } else { x <= zone_hi };
        above && below
    };
    let interior_hit = |x: &Rat| forbidden.iter().any(|w| x > &w.lo && x < &w.hi);
    let bps = g.breakpoints();
    let slopes = g.slopes();

    // Ride one affine branch forward: tcur is the surviving sub-zone, and
    // x_i = mul·t + add for t in tcur. Expansion makes the image interval
    // swallow a target after a few dozen steps.
    let mut tlo = zone_lo.clone();
    let mut thi = zone_hi.clone();
    let mut mul = rat::one();
    let mut add = rat::zero();
    for step in 0..128 {
        let (clo, chi) = {
            let a = &mul * &tlo + &add;
            let b = &mul * &thi + &add;
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        };
        for e in targets {
            if *e < clo || *e > chi {
                continue;
            }
            let tcand = (e - &add) / &mul;
            if !in_zone(&tcand) || interior_hit(&tcand) {
                continue;
            }
            // Defensive exact replay of the whole chain.
            let mut x = tcand.clone();
            let mut ok = true;
            for _ in 0..step {
                if interior_hit(&x) {
                    ok = false;
                    break;
                }
                x = g.eval(&x);
            }
            if ok && x == *e {
                return Ok(tcand);
            }
        }
        // Extend the branch by the allowed piece with the longest image.
        let mut best: Option<(Rat, Rat, Rat, Rat)> = None; // seg_lo, seg_hi, slope, intercept
        for i in 0..slopes.len() {
            let (px0, py0) = &bps[i];
            let (px1, _) = &bps[i + 1];
            let mut seg_lo = rat::max(px0.clone(), clo.clone());
            let mut seg_hi = rat::min(px1.clone(), chi.clone());
            if seg_lo >= seg_hi {
                continue;
            }
            // Clip away replaced interiors; keep the widest remaining part.
            for w in forbidden {
                if seg_lo >= w.lo && seg_hi <= w.hi {
                    seg_lo = seg_hi.clone(); // fully swallowed
                    break;
                }
                if seg_lo < w.lo && seg_hi > w.lo && seg_hi <= w.hi {
                    seg_hi = w.lo.clone();
                } else if seg_lo >= w.lo && seg_lo < w.hi && seg_hi > w.hi {
                    seg_lo = w.hi.clone();
                } else if seg_lo < w.lo && seg_hi > w.hi {
                    // Straddles the whole block: keep the longer side.
                    if &w.lo - &seg_lo >= &seg_hi - &w.hi {
                        seg_hi = w.lo.clone();
                    } else {
                        seg_lo = w.hi.clone();
                    }
                }
            }
            if seg_lo >= seg_hi {
                continue;
            }
            let gain = rat::abs(&slopes[i]) * (&seg_hi - &seg_lo);
            let better = match &best {
                None => true,
                Some((blo, bhi, bs, _)) => gain > rat::abs(bs) * (bhi - blo),
            };
            if better {
                let intercept = py0 - &slopes[i] * px0;
                best = Some((seg_lo, seg_hi, slopes[i].clone(), intercept));
            }
        }
        let Some((seg_lo, seg_hi, s, c)) = best else {
            break;
        };
        // Pull the clipped segment back through the branch, then compose.
        let (a, b) = ((&seg_lo - &add) / &mul, (&seg_hi - &add) / &mul);
        if a <= b {
            tlo = a;
            thi = b;
        } else {
            tlo = b;
            thi = a;
        }
        add = &s * &add + &c;
        mul = &s * &mul;
    }
    Err(Error::Infeasible(
        "geometric infeasibility: no finite-orbit fold anchor in reach".into(),
    ))
}

/// Replace every block with enumeration index >= n by a five-piece fold
/// across a hull slightly larger than its target block. Earlier blocks
/// keep their blowup dynamics, so increasing n walks the approximants back
/// toward the blown map while each stage stays uniformly expanding on the
/// replaced blocks.
pub fn mixing_approximant(b: &Blowup, n: usize) -> Result<PLMap> {
    if b.core == CoreKind::Contracting {
        if let Some(k) = b.phi.iter().enumerate().find(|(k, j)| **j == *k).map(|(k, _)| k) {
            if k < n {
                return Err(Error::InvalidSpec(
                    "a contracting core must be replaced, not kept".into(),
                ));
            }
        }
    }
    let selected: Vec<usize> = (n..b.intervals.len()).collect();
    if selected.is_empty() {
        return Ok(b.map.clone());
    }
    let gamma_tilde = &b.gamma / (rat::one() + &b.gamma);
    let forbidden: Vec<RatInterval> = selected.iter().map(|&k| b.intervals[k].clone()).collect();
    let mut targets: BTreeSet<Rat> = BTreeSet::new();
    for w in &b.intervals {
        targets.insert(w.lo.clone());
        targets.insert(w.hi.clone());
    }
    let targets: Vec<Rat> = targets.into_iter().collect();

    struct Fold {
        window: RatInterval,
        vals: Vec<Rat>,
        delta: Rat,
    }
    let mut folds: Vec<Fold> = Vec::new();
    for &k in &selected {
        let ik = &b.intervals[k];
        let jv = &b.intervals[b.phi[k]];
        let dk = ik.len();
        let dj = jv.len();
        let maxd = rat::max(dk.clone(), dj.clone());
        let delta = rat::min(
            rat_int(2) * &maxd,
            (&maxd + &gamma_tilde) / rat_int(2),
        );
        let slack = (&delta - &dj) / rat_int(2);
        let s_min = (&maxd - &dj) / rat_int(2);
        if slack <= s_min {
            return Err(Error::Infeasible(
                "geometric infeasibility: the fold hull has no room around the target block"
                    .into(),
            ));
        }
        let c_lo = anchor_in_zone(
            &b.map,
            &rat::max(rat::zero(), &jv.lo - &slack),
            &(&jv.lo - &s_min),
            false,
            true,
            &forbidden,
            &targets,
        )?;
        let c_hi = anchor_in_zone(
            &b.map,
            &(&jv.hi + &s_min),
            &rat::min(rat::one(), &jv.hi + &slack),
            true,
            false,
            &forbidden,
            &targets,
        )?;
        let hull = RatInterval::new(c_lo, c_hi);
        assert!(hull.lo < jv.lo && hull.hi > jv.hi, "hull must engulf the target block");
        assert!(hull.len() > maxd, "hull must exceed both block diameters");
        assert!(hull.len() <= delta && delta < gamma_tilde);

        let s = b.map.eval(&ik.lo);
        let e = b.map.eval(&ik.hi);
        debug_assert!(s == jv.lo || s == jv.hi);
        debug_assert!(e == jv.lo || e == jv.hi);
        let start_hi = s <= e;
        let mut vals = vec![s];
        for t in 0..4 {
            let hi = (t % 2 == 0) == start_hi;
            vals.push(if hi { hull.hi.clone() } else { hull.lo.clone() });
        }
        vals.push(e);
        let totvar: Rat = vals
            .windows(2)
            .fold(rat::zero(), |a, w| a + rat::abs(&(&w[1] - &w[0])));
        assert!(
            totvar > rat_int(3) * &dk,
            "fold must be uniformly expanding on its block"
        );
        folds.push(Fold {
            window: ik.clone(),
            vals,
            delta,
        });
    }
    folds.sort_by(|a, b| a.window.lo.cmp(&b.window.lo));

    let mut pts: Vec<(Rat, Rat)> = Vec::new();
    let push = |pts: &mut Vec<(Rat, Rat)>, x: Rat, y: Rat| {
        if let Some((px, py)) = pts.last() {
            if *px == x {
                assert_eq!(*py, y, "mixing surgery tore the graph");
                return;
            }
        }
        pts.push((x, y));
    };
    let mut cursor = rat::zero();
    for fold in &folds {
        if cursor < fold.window.lo {
            for (x, y) in b
                .map
                .graph_on(&RatInterval::new(cursor.clone(), fold.window.lo.clone()))
            {
                push(&mut pts, x, y);
            }
        }
        for (x, y) in maps::zigzag_through(&fold.window.lo, &fold.window.hi, &fold.vals) {
            push(&mut pts, x, y);
        }
        cursor = fold.window.hi.clone();
    }
    if cursor < rat::one() {
        for (x, y) in b.map.graph_on(&RatInterval::new(cursor, rat::one())) {
            push(&mut pts, x, y);
        }
    }
    let f = PLMap::new(pts)?;

    let rho = b.map.sup_distance(&f);
    let max_delta = folds
        .iter()
        .map(|w| w.delta.clone())
        .max()
        .expect("at least one fold");
    assert!(rho <= max_delta, "surgery strayed beyond its fold hulls");
    assert!(rho < gamma_tilde);
    Ok(f)
}
