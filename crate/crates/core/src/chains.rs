//! ε-chain machinery: discretized chain graphs with over- and
//! under-approximating edge sets, sound per-cell certification and
//! refutation of chain recurrence, and the constructive pipeline that turns
//! a certified chain-recurrent map into a nearby uniformly-expanding map
//! with a covering (leo) certificate, within sup-distance 2ε.
//!
//! Soundness conventions. Over-edges I→J exist whenever the open
//! ε-neighborhood of f(I) meets J, so every genuine ε-chain projects to an
//! over-path; no over-cycle through a cell refutes recurrence for every
//! point of that cell. Under-edges demand sup_{x∈I} dist(f(x), J) < ε; a
//! cycle of under-edges at the reduced threshold ε − mesh expands to a
//! genuine strict ε-chain through ANY point of any of its cells (the mesh
//! slack pays for landing on a specific point rather than somewhere in the
//! cell — at threshold ε itself that last step can exceed ε, so the
//! reduction is what makes certification sound).

use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::markov::{markovize, MarkovModel};
use crate::maps;
use crate::plmap::PLMap;
use crate::rat::{self, rat, Rat};
use crate::structure::{certify_leo, LeoCertificate, Obstruction, Verdict};
use num::ToPrimitive;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

const MAX_CELLS: usize = 10_000_000;

/// Uniform-cell discretization of the ε-step relation.
#[derive(Debug, Clone)]
pub struct ChainGraph {
    pub eps: Rat,
    pub mesh: Rat,
    over: Vec<Vec<usize>>,
    under: Vec<Vec<usize>>,
}

pub fn build_chain_graph(f: &PLMap, eps: &Rat, mesh: &Rat) -> Result<ChainGraph> {
    if *eps <= rat::zero() || *mesh <= rat::zero() || mesh >= eps || *mesh > rat(1, 2) {
        return Err(Error::InvalidSpec(format!(
            "degenerate chain mesh: need 0 < mesh < ε and mesh ≤ 1/2, got mesh {mesh}, ε {eps}"
        )));
    }
    let n_rat = (rat::one() / mesh).ceil();
    let n = n_rat
        .to_integer()
        .to_usize()
        .filter(|&n| n <= MAX_CELLS)
        .ok_or_else(|| Error::InvalidSpec(format!("mesh {mesh} yields too many cells")))?;
    let cell = |i: usize| -> RatInterval {
        let lo = rat::rat_int(i as i64) * mesh;
        let hi = rat::min((rat::rat_int(i as i64 + 1)) * mesh, rat::one());
        RatInterval::new(lo, hi)
    };
    let mut over = Vec::with_capacity(n);
    let mut under = Vec::with_capacity(n);
    let last = n as i64 - 1;
    for i in 0..n {
        let img = f.image_interval(&cell(i));
        let (m, big_m) = (&img.lo, &img.hi);
        // over: J.hi > m − ε and J.lo < M + ε
        let o_lo = idx_floor(&((m - eps) / mesh)).max(0);
        let o_hi = (idx_ceil(&((big_m + eps) / mesh)) - 1).min(last);
        over.push(range_vec(o_lo, o_hi));
        // under: J.hi > M − ε and J.lo < m + ε
        let u_lo = idx_floor(&((big_m - eps) / mesh)).max(0);
        let u_hi = (idx_ceil(&((m + eps) / mesh)) - 1).min(last);
        under.push(range_vec(u_lo, u_hi));
    }
    Ok(ChainGraph {
        eps: eps.clone(),
        mesh: mesh.clone(),
        over,
        under,
    })
}

fn idx_floor(r: &Rat) -> i64 {
    r.floor().to_integer().to_i64().expect("cell index fits i64")
}

fn idx_ceil(r: &Rat) -> i64 {
    r.ceil().to_integer().to_i64().expect("cell index fits i64")
}

fn range_vec(lo: i64, hi: i64) -> Vec<usize> {
    if lo > hi {
        Vec::new()
    } else {
        (lo as usize..=hi as usize).collect()
    }
}

impl ChainGraph {
    pub fn cells(&self) -> usize {
        self.over.len()
    }

    pub fn cell(&self, i: usize) -> RatInterval {
        let lo = rat::rat_int(i as i64) * &self.mesh;
        let hi = rat::min(rat::rat_int(i as i64 + 1) * &self.mesh, rat::one());
        RatInterval::new(lo, hi)
    }

    pub fn cell_of(&self, x: &Rat) -> usize {
        assert!(*x >= rat::zero() && *x <= rat::one());
        let i = idx_floor(&(x / &self.mesh));
        (i.max(0) as usize).min(self.cells() - 1)
    }

    pub fn over_successors(&self, i: usize) -> &[usize] {
        &self.over[i]
    }

    pub fn under_successors(&self, i: usize) -> &[usize] {
        &self.under[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellVerdict {
    /// The cell lies on this cycle of under-edges (listed once, without the
    /// closing repeat); every point of the cell is ε-chain recurrent.
    Certified { cycle: Vec<usize> },
    /// The cell lies on no over-edge cycle; no point of it admits an
    /// ε-chain to itself. The witness is its over-edge component.
    Refuted { component: Vec<usize> },
    Unknown,
}

#[derive(Debug, Clone)]
pub struct ChainReport {
    pub eps: Rat,
    pub mesh: Rat,
    pub verdicts: Vec<CellVerdict>,
    under: ChainGraph,
}

/// Per-cell chain-recurrence verdicts at scale ε. Certification runs on
/// under-edges at the internal threshold ε − mesh (see module docs);
/// refutation runs on over-edges at ε itself.
pub fn certify_chain_recurrent(f: &PLMap, eps: &Rat, mesh: &Rat) -> Result<ChainReport> {
    let four = rat::rat_int(4);
    if *mesh <= rat::zero() || four * mesh >= *eps {
        return Err(Error::InvalidSpec(format!(
            "chain certification needs 0 < 4·mesh < ε, got mesh {mesh}, ε {eps}"
        )));
    }
    let over_g = build_chain_graph(f, eps, mesh)?;
    let under_g = build_chain_graph(f, &(eps - mesh), mesh)?;
    let n = over_g.cells();

    let over_scc = crate::graph::tarjan_scc(n, |i| over_g.over[i].iter().copied());
    let mut comp_cyclic = vec![false; n];
    for cid in 0..over_scc.comps.len() {
        if over_scc.has_internal_edge(cid, |i| over_g.over[i].iter().copied()) {
            for &v in &over_scc.comps[cid] {
                comp_cyclic[v] = true;
            }
        }
    }

    let mut verdicts = Vec::with_capacity(n);
    for i in 0..n {
        if let Some(cycle) = shortest_cycle_through(&under_g.under, i) {
            verdicts.push(CellVerdict::Certified { cycle });
        } else if !comp_cyclic[i] {
            let comp = &over_scc.comps[over_scc.comp_of[i]];
            verdicts.push(CellVerdict::Refuted {
                component: comp.clone(),
            });
        } else {
            verdicts.push(CellVerdict::Unknown);
        }
    }
    Ok(ChainReport {
        eps: eps.clone(),
        mesh: mesh.clone(),
        verdicts,
        under: under_g,
    })
}

/// Shortest directed cycle through `c`: BFS out of `c`, close over any edge
/// back into `c`. Returns the cell sequence starting at `c`, no repeat.
fn shortest_cycle_through(adj: &[Vec<usize>], c: usize) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[c] = 0;
    queue.push_back(c);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    // best closing edge u → c
    let mut best: Option<usize> = None;
    for u in 0..n {
        if dist[u] != usize::MAX && adj[u].binary_search(&c).is_ok() {
            let better = match best {
                None => true,
                Some(b) => dist[u] < dist[b] || (dist[u] == dist[b] && u < b),
            };
            if better {
                best = Some(u);
            }
        }
    }
    let mut u = best?;
    let mut path = vec![];
    while u != c {
        path.push(u);
        u = parent[u];
    }
    path.push(c);
    path.reverse();
    Some(path)
}

impl ChainReport {
    pub fn all_certified(&self) -> bool {
        self.verdicts
            .iter()
            .all(|v| matches!(v, CellVerdict::Certified { .. }))
    }

    pub fn any_refuted(&self) -> bool {
        self.verdicts
            .iter()
            .any(|v| matches!(v, CellVerdict::Refuted { .. }))
    }

    pub fn cell_of(&self, x: &Rat) -> usize {
        self.under.cell_of(x)
    }

    pub fn cell(&self, i: usize) -> RatInterval {
        self.under.cell(i)
    }

    /// Expand the certified cycle of x's cell into a genuine strict ε-chain
    /// from x back to x, landing each step on the nearest point of the next
    /// cell. None when the cell is not certified.
    pub fn genuine_chain(&self, f: &PLMap, x: &Rat) -> Option<Vec<Rat>> {
        let c = self.cell_of(x);
        let CellVerdict::Certified { cycle } = &self.verdicts[c] else {
            return None;
        };
        let mut pts = vec![x.clone()];
        let mut cur = x.clone();
        for &cell in &cycle[1..] {
            let next = clamp_to(&f.eval(&cur), &self.under.cell(cell));
            pts.push(next.clone());
            cur = next;
        }
        pts.push(x.clone());
        assert!(
            verify_chain(f, &pts, &self.eps),
            "certified cycle must replay as a strict ε-chain"
        );
        Some(pts)
    }
}

/// |f(xᵢ) − xᵢ₊₁| < ε, strictly, for every step.
pub fn verify_chain(f: &PLMap, pts: &[Rat], eps: &Rat) -> bool {
    pts.len() >= 2
        && pts
            .windows(2)
            .all(|w| rat::abs(&(f.eval(&w[0]) - &w[1])) < *eps)
}

fn clamp_to(y: &Rat, iv: &RatInterval) -> Rat {
    if y < &iv.lo {
        iv.lo.clone()
    } else if y > &iv.hi {
        iv.hi.clone()
    } else {
        y.clone()
    }
}

// ---------------------------------------------------------------------------
// chain families and the expanding approximation

/// A finite family of disjoint genuine ε-chains (cyclic pseudo-orbits),
/// stored in spatial order with the successor permutation φ.
#[derive(Debug, Clone)]
pub struct ChainFamily {
    /// Scale of the chains: |f(p) − φ(p)| < scale for every member.
    pub scale: Rat,
    /// All chain points in increasing spatial order; 0 and 1 are members.
    pub points: Vec<Rat>,
    /// Successor indices: φ(points[i]) = points[phi[i]].
    pub phi: Vec<usize>,
    /// Which chain each point belongs to.
    pub chain_id: Vec<usize>,
}

impl ChainFamily {
    pub fn successor_value(&self, i: usize) -> &Rat {
        &self.points[self.phi[i]]
    }
}

/// Output of the chain-recurrent → expanding approximation.
#[derive(Debug, Clone)]
pub struct CpApproximation {
    /// The expanding map h.
    pub map: PLMap,
    /// The connect-the-dots interpolation g of the chain family.
    pub dots: PLMap,
    pub family: ChainFamily,
    /// sup |f − g|, exact; < 5ε/6 by construction.
    pub rho_dots: Rat,
    /// sup |f − h|, exact; < 2ε by construction.
    pub rho: Rat,
    /// Covering certificate for h.
    pub leo: Verdict<LeoCertificate, Obstruction>,
}

/// Build a uniformly-expanding map within 2ε of a chain-recurrent f.
///
/// Pipeline: certify chain recurrence at scale ε/6 on a mesh of ε/48;
/// extract disjoint cyclic ε/6-chains through the cells of 0 and 1, then
/// through midpoints of offending gaps until consecutive chain points are
/// closer than 2ε/3 and f oscillates less than ε/6 on each gap; let g
/// interpolate the successor map; replace g on each gap by a constant-slope
/// zigzag (|slope| ≥ 3) whose turns overshoot one family point beyond the
/// endpoint values, extended further while the detour stays below 7ε/6.
pub fn approximate_by_cp(f: &PLMap, eps: &Rat) -> Result<CpApproximation> {
    if *eps <= rat::zero() || *eps > rat::one() {
        return Err(Error::InvalidSpec(format!(
            "approximation scale must lie in (0, 1], got {eps}"
        )));
    }
    let eps6 = eps / rat::rat_int(6);
    let mesh = eps / rat::rat_int(48);
    let report = certify_chain_recurrent(f, &eps6, &mesh)?;
    if !report.all_certified() {
        let bad = report
            .verdicts
            .iter()
            .position(|v| !matches!(v, CellVerdict::Certified { .. }))
            .unwrap();
        return Err(Error::Infeasible(format!(
            "input is not certified chain-recurrent at scale ε/6: cell {} of {} ({}) is {:?}",
            bad,
            report.verdicts.len(),
            report.cell(bad),
            match &report.verdicts[bad] {
                CellVerdict::Refuted { .. } => "refuted",
                _ => "unknown",
            }
        )));
    }
    let family = build_chain_family(f, &report, &eps6)?;

    let g = PLMap::new(
        (0..family.points.len())
            .map(|i| (family.points[i].clone(), family.successor_value(i).clone()))
            .collect(),
    )?;
    let rho_dots = f.sup_distance(&g);
    let five_sixth = rat(5, 6) * eps;
    assert!(
        rho_dots < five_sixth,
        "dots map drifted {rho_dots} ≥ 5ε/6 from the input"
    );

    let h = expanding_zigzag_map(&family, eps)?;
    // h agrees with g on the family
    for (i, p) in family.points.iter().enumerate() {
        assert_eq!(
            h.eval(p),
            family.points[family.phi[i]],
            "zigzag map must interpolate the successor map"
        );
    }
    assert!(h.min_abs_slope() >= rat::rat_int(3));
    let rho_gh = g.sup_distance(&h);
    let seven_sixth = rat(7, 6) * eps;
    assert!(rho_gh < seven_sixth, "zigzag detour {rho_gh} ≥ 7ε/6");
    let rho = f.sup_distance(&h);
    let two_eps = rat::rat_int(2) * eps;
    assert!(rho < two_eps, "approximation error {rho} ≥ 2ε");

    let leo = certify_leo(&h);
    Ok(CpApproximation {
        map: h,
        dots: g,
        family,
        rho_dots,
        rho,
        leo,
    })
}

fn build_chain_family(f: &PLMap, report: &ChainReport, eps6: &Rat) -> Result<ChainFamily> {
    let mut taken: BTreeSet<Rat> = BTreeSet::new();
    let mut chains: Vec<Vec<Rat>> = Vec::new();

    add_chain(f, report, eps6, rat::zero(), &mut taken, &mut chains)?;
    if !taken.contains(&rat::one()) {
        add_chain(f, report, eps6, rat::one(), &mut taken, &mut chains)?;
    }

    let gap_limit = rat::rat_int(4) * eps6; // 2ε/3
    let mut ok = false;
    for _ in 0..4096 {
        let sorted: Vec<Rat> = taken.iter().cloned().collect();
        let mut offender = None;
        for w in sorted.windows(2) {
            let gap_len = &w[1] - &w[0];
            let osc = f
                .image_interval(&RatInterval::new(w[0].clone(), w[1].clone()))
                .len();
            if gap_len >= gap_limit || osc >= *eps6 {
                offender = Some((w[0].clone(), w[1].clone()));
                break;
            }
        }
        match offender {
            None => {
                ok = true;
                break;
            }
            Some((a, b)) => {
                let q = (a + b) / rat::rat_int(2);
                add_chain(f, report, eps6, q, &mut taken, &mut chains)?;
            }
        }
    }
    if !ok {
        return Err(Error::Infeasible(
            "chain family did not satisfy the gap conditions within 4096 refinements".into(),
        ));
    }

    let points: Vec<Rat> = taken.into_iter().collect();
    let index: BTreeMap<&Rat, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut phi = vec![usize::MAX; points.len()];
    let mut chain_id = vec![usize::MAX; points.len()];
    for (cid, chain) in chains.iter().enumerate() {
        for (k, p) in chain.iter().enumerate() {
            let i = index[p];
            phi[i] = index[&chain[(k + 1) % chain.len()]];
            chain_id[i] = cid;
        }
    }
    assert!(phi.iter().all(|&s| s != usize::MAX));
    for (i, p) in points.iter().enumerate() {
        assert!(
            rat::abs(&(f.eval(p) - &points[phi[i]])) < *eps6,
            "chain family step exceeds the pseudo-orbit scale"
        );
    }
    Ok(ChainFamily {
        scale: eps6.clone(),
        points,
        phi,
        chain_id,
    })
}

/// Grow one genuine cyclic ε/6-chain based at `base`, nudging landing
/// points so all family members stay pairwise distinct.
fn add_chain(
    f: &PLMap,
    report: &ChainReport,
    eps6: &Rat,
    base: Rat,
    taken: &mut BTreeSet<Rat>,
    chains: &mut Vec<Vec<Rat>>,
) -> Result<()> {
    assert!(!taken.contains(&base), "chain bases are fresh by choice");
    let c = report.cell_of(&base);
    let CellVerdict::Certified { cycle } = &report.verdicts[c] else {
        unreachable!("family extraction runs only on fully certified maps");
    };
    let mut chain = vec![base.clone()];
    taken.insert(base.clone());
    let mut cur = base.clone();
    for &cell_ix in &cycle[1..] {
        let target = f.eval(&cur);
        let cell = report.cell(cell_ix);
        let proj = clamp_to(&target, &cell);
        let next = nudge_free(&proj, &target, &cell, eps6, taken).ok_or_else(|| {
            Error::Infeasible("could not place a fresh chain point inside its cell".into())
        })?;
        taken.insert(next.clone());
        chain.push(next.clone());
        cur = next;
    }
    // the closing step is what the under-cycle soundness guarantees
    assert!(
        rat::abs(&(f.eval(chain.last().unwrap()) - &base)) < *eps6,
        "under-cycle failed to close into a strict chain"
    );
    chains.push(chain);
    Ok(())
}

/// First point near `proj` that stays inside the cell, within the open
/// ε-ball around `target`, and is not yet taken. Offsets shrink dyadically
/// from a quarter cell, so the chain-step slack (ε − mesh from the
/// under-edge, minus at most mesh/4 here) stays strictly positive.
fn nudge_free(
    proj: &Rat,
    target: &Rat,
    cell: &RatInterval,
    eps: &Rat,
    taken: &BTreeSet<Rat>,
) -> Option<Rat> {
    let width = cell.len();
    let mut offset = width / rat::rat_int(4);
    if !taken.contains(proj) {
        return Some(proj.clone());
    }
    for _ in 0..64 {
        for cand in [proj + &offset, proj - &offset] {
            if cell.contains(&cand)
                && rat::abs(&(&cand - target)) < *eps
                && !taken.contains(&cand)
            {
                return Some(cand);
            }
        }
        offset = offset / rat::rat_int(2);
    }
    None
}

/// Replace each gap of the interpolation by a constant-|slope| zigzag
/// through overshoot targets, slope at least 3.
fn expanding_zigzag_map(family: &ChainFamily, eps: &Rat) -> Result<PLMap> {
    let pts = &family.points;
    let n = pts.len();
    let budget = rat(7, 6) * eps;
    let three = rat::rat_int(3);
    let mut hpts: Vec<(Rat, Rat)> = vec![(pts[0].clone(), family.successor_value(0).clone())];
    for k in 0..n - 1 {
        let (x0, x1) = (&pts[k], &pts[k + 1]);
        let y0 = family.successor_value(k).clone();
        let y1 = family.successor_value(k + 1).clone();
        let min_y = rat::min(y0.clone(), y1.clone());
        let max_y = rat::max(y0.clone(), y1.clone());
        let min_ix = pts.binary_search(&min_y).expect("values are family points");
        let max_ix = pts.binary_search(&max_y).expect("values are family points");
        // minimal overshoot: one family point beyond each endpoint value
        let mut lo_ix = min_ix.saturating_sub(1);
        let mut hi_ix = (max_ix + 1).min(n - 1);
        assert!(&max_y - &pts[lo_ix] < budget && &pts[hi_ix] - &min_y < budget);
        // extend while the detour stays under the budget
        while lo_ix > 0 && &max_y - &pts[lo_ix - 1] < budget {
            lo_ix -= 1;
        }
        while hi_ix + 1 < n && &pts[hi_ix + 1] - &min_y < budget {
            hi_ix += 1;
        }
        let (lo_t, hi_t) = (&pts[lo_ix], &pts[hi_ix]);

        let start_hi = y0 <= y1;
        let width = x1 - x0;
        let mut folds = 2usize;
        let vals = loop {
            let mut vals = vec![y0.clone()];
            for t in 0..folds {
                vals.push(if (t % 2 == 0) == start_hi {
                    hi_t.clone()
                } else {
                    lo_t.clone()
                });
            }
            vals.push(y1.clone());
            let total: Rat = vals.windows(2).map(|w| rat::abs(&(&w[1] - &w[0]))).sum();
            if total >= &three * &width {
                break vals;
            }
            folds += 2;
            if folds > 512 {
                return Err(Error::Infeasible(
                    "zigzag amplitude too small to reach expanding slope".into(),
                ));
            }
        };
        let seg = maps::zigzag_through(x0, x1, &vals);
        hpts.extend(seg.into_iter().skip(1));
    }
    let h = PLMap::new(hpts)?;
    // overshoot condition: each gap's image covers one family point beyond
    // the interpolated values on both sides
    for k in 0..n - 1 {
        let y_lo = rat::min(
            family.successor_value(k).clone(),
            family.successor_value(k + 1).clone(),
        );
        let y_hi = rat::max(
            family.successor_value(k).clone(),
            family.successor_value(k + 1).clone(),
        );
        let lo_req = match pts.binary_search(&y_lo) {
            Ok(0) => pts[0].clone(),
            Ok(i) => pts[i - 1].clone(),
            Err(_) => unreachable!(),
        };
        let hi_req = match pts.binary_search(&y_hi) {
            Ok(i) if i + 1 < n => pts[i + 1].clone(),
            Ok(_) => pts[n - 1].clone(),
            Err(_) => unreachable!(),
        };
        let img = h.image_interval(&RatInterval::new(pts[k].clone(), pts[k + 1].clone()));
        assert!(
            img.contains_interval(&RatInterval::new(lo_req, hi_req)),
            "gap image must overshoot its interpolation neighbors"
        );
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// backward replay

/// A periodic orbit of the approximating map replayed as a chain of the
/// original map: x, g(p), …, g^{L−1}(p), x with every step within `scale`.
#[derive(Debug, Clone)]
pub struct BackwardReplay {
    pub periodic_point: Rat,
    pub period: usize,
    pub chain: Vec<Rat>,
    pub scale: Rat,
}

/// Find a periodic point p of g near x and replay its orbit as a genuine
/// strict (7ε/3)-chain of f from x to x. Works whenever ρ(f, g) < 2ε and g
/// carries an expanding Markov structure (as the maps produced by
/// [`approximate_by_cp`] do); every claim is re-verified exactly before
/// returning.
pub fn backward_chain_replay(f: &PLMap, g: &PLMap, x: &Rat, eps: &Rat) -> Result<BackwardReplay> {
    let scale = rat(7, 3) * eps;
    let model = markovize(g, &[], 4096)?;
    let sf = f.max_abs_slope();
    let mut delta = eps / (rat::rat_int(3) * (sf + rat::one()));
    for _ in 0..3 {
        if let Some(rep) = replay_attempt(f, g, &model, x, &delta, &scale) {
            return Ok(rep);
        }
        delta = delta / rat::rat_int(4);
    }
    Err(Error::Infeasible(format!(
        "no verifiable backward replay at scale {scale} near {x}"
    )))
}

fn replay_attempt(
    f: &PLMap,
    g: &PLMap,
    model: &MarkovModel,
    x: &Rat,
    delta: &Rat,
    scale: &Rat,
) -> Option<BackwardReplay> {
    let n = model.cell_count();
    let grid = model.points();
    let ci = match grid.binary_search(x) {
        Ok(i) => i.min(n - 1),
        Err(i) => i - 1,
    };
    let home = model.cell(ci);
    let k0 = RatInterval::new(
        rat::max(home.lo.clone(), x - delta),
        rat::min(home.hi.clone(), x + delta),
    );
    if k0.is_point() {
        return None;
    }

    // forward: expand under single affine branches until a full cell is
    // covered, tracking the branch composition
    let mut branches: Vec<(Rat, Rat)> = Vec::new();
    let mut cur = k0.clone();
    let mut cur_cell = ci;
    let mut covered: Option<usize> = None;
    for _ in 0..128 {
        branches.push(affine_on_cell(g, model, cur_cell));
        let img = g.image_interval(&cur);
        if let Some(d) = (0..n).find(|&j| img.contains_interval(&model.cell(j))) {
            covered = Some(d);
            break;
        }
        // clip to the cell with the largest overlap
        let mut best: Option<(usize, RatInterval)> = None;
        for j in 0..n {
            if let Some(iv) = img.intersect(&model.cell(j)) {
                let better = match &best {
                    None => true,
                    Some((_, biv)) => iv.len() > biv.len(),
                };
                if better {
                    best = Some((j, iv));
                }
            }
        }
        let (j, iv) = best?;
        if iv.is_point() {
            return None;
        }
        cur = iv;
        cur_cell = j;
    }
    let d0 = covered?;

    // covering path back to x's cell
    let path = covering_path(model, d0, ci)?;
    for w in path.windows(2) {
        branches.push(affine_on_cell(g, model, w[0]));
    }

    // fixed point of the affine composition
    let (mut a, mut b) = (rat::one(), rat::zero());
    for (s, t) in &branches {
        a = s * &a;
        b = s * &b + t;
    }
    if a == rat::one() {
        return None;
    }
    let p = b / (rat::one() - a);
    if !k0.contains(&p) {
        return None;
    }
    let period = branches.len();
    // exact re-verification of periodicity
    let mut orbit = vec![p.clone()];
    let mut q = p.clone();
    for _ in 0..period {
        q = g.eval(&q);
        orbit.push(q.clone());
    }
    if orbit[period] != p {
        return None;
    }

    let chain = if period == 1 {
        vec![x.clone(), p.clone(), x.clone()]
    } else {
        let mut c = vec![x.clone()];
        c.extend(orbit[1..period].iter().cloned());
        c.push(x.clone());
        c
    };
    if !verify_chain(f, &chain, scale) {
        return None;
    }
    Some(BackwardReplay {
        periodic_point: p,
        period,
        chain,
        scale: scale.clone(),
    })
}

fn affine_on_cell(g: &PLMap, model: &MarkovModel, i: usize) -> (Rat, Rat) {
    let cell = model.cell(i);
    let (u, v) = (&cell.lo, &cell.hi);
    let s = (g.eval(v) - g.eval(u)) / (v - u);
    let t = g.eval(u) - &s * u;
    (s, t)
}

fn covering_path(model: &MarkovModel, from: usize, to: usize) -> Option<Vec<usize>> {
    let n = model.cell_count();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut v = to;
            while v != from {
                v = parent[v];
                path.push(v);
            }
            path.reverse();
            return Some(path);
        }
        for v in 0..n {
            if !seen[v] && model.covers(u, v) {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;
    use crate::rat::{rat, rat_int};

    fn skew() -> PLMap {
        PLMap::new(vec![
            (rat_int(0), rat_int(0)),
            (rat(1, 2), rat(1, 4)),
            (rat_int(1), rat_int(1)),
        ])
        .unwrap()
    }

    #[test]
    fn identity_under_graph_has_self_loops() {
        let g = build_chain_graph(&maps::identity(), &rat(1, 10), &rat(1, 100)).unwrap();
        assert_eq!(g.cells(), 100);
        for i in 0..g.cells() {
            assert!(g.under_successors(i).binary_search(&i).is_ok());
        }
    }

    #[test]
    fn tent_chain_graph_is_strongly_connected() {
        let g = build_chain_graph(&maps::tent(), &rat(1, 10), &rat(1, 100)).unwrap();
        let n = g.cells();
        let over = crate::graph::tarjan_scc(n, |i| g.over_successors(i).iter().copied());
        assert_eq!(over.comps.len(), 1);
        let under = crate::graph::tarjan_scc(n, |i| g.under_successors(i).iter().copied());
        assert_eq!(under.comps.len(), 1);
    }

    #[test]
    fn under_edges_are_over_edges() {
        for f in [maps::tent(), skew(), maps::exchange_with_tents()] {
            let g = build_chain_graph(&f, &rat(1, 10), &rat(1, 64)).unwrap();
            for i in 0..g.cells() {
                for j in g.under_successors(i) {
                    assert!(g.over_successors(i).binary_search(j).is_ok());
                }
            }
        }
    }

    #[test]
    fn reflection_and_tent_fully_certified() {
        for f in [maps::reflection(), maps::tent()] {
            let r = certify_chain_recurrent(&f, &rat(1, 10), &rat(1, 100)).unwrap();
            assert!(r.all_certified());
            let chain = r.genuine_chain(&f, &rat(1, 3)).unwrap();
            assert!(verify_chain(&f, &chain, &rat(1, 10)));
        }
    }

    #[test]
    fn gradient_map_interior_refuted() {
        // f(x) < x on (0,1): nothing in the middle can chain back
        let r = certify_chain_recurrent(&skew(), &rat(1, 100), &rat(1, 1000)).unwrap();
        assert!(!r.all_certified());
        assert!(r.any_refuted());
        let mid = r.cell_of(&rat(1, 2));
        assert!(matches!(r.verdicts[mid], CellVerdict::Refuted { .. }));
        // the fixed endpoints still certify
        assert!(matches!(
            r.verdicts[r.cell_of(&rat_int(0))],
            CellVerdict::Certified { .. }
        ));
        assert!(matches!(
            r.verdicts[r.cell_of(&rat_int(1))],
            CellVerdict::Certified { .. }
        ));
    }

    #[test]
    fn approximate_identity() {
        let out = approximate_by_cp(&maps::identity(), &rat(1, 4)).unwrap();
        assert!(out.rho < rat(1, 2));
        assert!(out.rho_dots < rat(5, 24));
        assert!(out.leo.is_certified(), "leo verdict: {:?}", out.leo);
        assert!(out.family.points.contains(&rat_int(0)));
        assert!(out.family.points.contains(&rat_int(1)));
    }

    #[test]
    fn approximate_tent() {
        let out = approximate_by_cp(&maps::tent(), &rat(1, 10)).unwrap();
        assert!(out.rho < rat(1, 5));
        assert!(out.leo.is_certified(), "leo verdict: {:?}", out.leo);
    }

    #[test]
    fn approximate_reflection() {
        let out = approximate_by_cp(&maps::reflection(), &rat(1, 10)).unwrap();
        assert!(out.rho < rat(1, 5));
        assert!(out.leo.is_certified(), "leo verdict: {:?}", out.leo);
    }

    #[test]
    fn non_recurrent_input_is_rejected() {
        assert!(matches!(
            approximate_by_cp(&skew(), &rat(1, 100)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn backward_replay_from_identity_approximant() {
        let eps = rat(1, 4);
        let out = approximate_by_cp(&maps::identity(), &eps).unwrap();
        let rep = backward_chain_replay(&maps::identity(), &out.map, &rat(1, 3), &eps).unwrap();
        assert!(verify_chain(&maps::identity(), &rep.chain, &rep.scale));
        assert_eq!(rep.scale, rat(7, 12));
        // the periodic point really is periodic
        let mut q = rep.periodic_point.clone();
        for _ in 0..rep.period {
            q = out.map.eval(&q);
        }
        assert_eq!(q, rep.periodic_point);
        assert_eq!(rep.chain.first(), Some(&rat(1, 3)));
        assert_eq!(rep.chain.last(), Some(&rat(1, 3)));
    }

    #[test]
    fn chain_family_steps_are_genuine(){
        let out = approximate_by_cp(&maps::tent(), &rat(1, 8)).unwrap();
        let fam = &out.family;
        let t = maps::tent();
        for (i, p) in fam.points.iter().enumerate() {
            assert!(rat::abs(&(t.eval(p) - fam.successor_value(i))) < fam.scale);
        }
        // spatial gaps obey condition (ii)
        for w in fam.points.windows(2) {
            assert!(&w[1] - &w[0] < rat(4, 6) * rat(1, 8));
        }
    }
}
