//! Markov models of PL maps: stabilize the breakpoint orbit into a finite
//! invariant grid, read off the cell-covering matrix, and extract exact
//! spectral data (primitivity, covering-chain counts, invariant densities).

use crate::density::PiecewiseConstDensity;
use crate::error::{Error, Result};
use crate::graph;
use crate::interval::RatInterval;
use crate::plmap::PLMap;
use crate::rat::{self, Rat};
use num::BigUint;
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct MarkovModel {
    points: Vec<Rat>,
    /// covers[i][j]: f(cell i) ⊇ cell j, exactly.
    covers: Vec<Vec<bool>>,
    /// slope of f on cell i (f is affine there by construction).
    slopes: Vec<Rat>,
}

/// Close {0, 1, breakpoints, extra} under forward images. Fails if the
/// orbit does not stabilize within `max_points` points — PL maps with
/// mass-changing slopes usually have infinite rational orbits, and that is
/// a genuine obstruction, not a budget knob to crank.
pub fn markovize(f: &PLMap, extra: &[Rat], max_points: usize) -> Result<MarkovModel> {
    let mut set: BTreeSet<Rat> = BTreeSet::new();
    let mut pending: Vec<Rat> = Vec::new();
    let add = |set: &mut BTreeSet<Rat>, pending: &mut Vec<Rat>, p: Rat| -> Result<()> {
        if p < rat::zero() || p > rat::one() {
            return Err(Error::DomainViolation(format!(
                "grid point {p} outside [0,1]"
            )));
        }
        if set.insert(p.clone()) {
            pending.push(p);
        }
        Ok(())
    };
    for (x, _) in f.breakpoints() {
        add(&mut set, &mut pending, x.clone())?;
    }
    for x in extra {
        add(&mut set, &mut pending, x.clone())?;
    }
    while let Some(p) = pending.pop() {
        if set.len() > max_points {
            return Err(Error::Infeasible(format!(
                "breakpoint orbit does not stabilize within {max_points} points"
            )));
        }
        let y = f.eval(&p);
        add(&mut set, &mut pending, y)?;
    }

    let points: Vec<Rat> = set.into_iter().collect();
    let n = points.len() - 1;
    let mut covers = vec![vec![false; n]; n];
    let mut slopes = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (&points[i], &points[i + 1]);
        let (fa, fb) = (f.eval(a), f.eval(b));
        slopes.push((&fb - &fa) / (b - a));
        let (lo, hi) = if fa <= fb { (fa, fb) } else { (fb, fa) };
        // covered cells form a contiguous index range: cells j with
        // lo <= points[j] and points[j+1] <= hi
        let j0 = points.partition_point(|p| *p < lo);
        for j in j0..n {
            if points[j + 1] > hi {
                break;
            }
            covers[i][j] = true;
        }
    }
    Ok(MarkovModel {
        points,
        covers,
        slopes,
    })
}

impl MarkovModel {
    pub fn points(&self) -> &[Rat] {
        &self.points
    }

    pub fn cell_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn cell(&self, i: usize) -> RatInterval {
        RatInterval::new(self.points[i].clone(), self.points[i + 1].clone())
    }

    pub fn covers(&self, i: usize, j: usize) -> bool {
        self.covers[i][j]
    }

    pub fn slope(&self, i: usize) -> &Rat {
        &self.slopes[i]
    }

    fn succ(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.covers[i];
        (0..self.cell_count()).filter(move |&j| row[j])
    }

    /// Strong connectivity of the covering digraph, demanding a real edge
    /// (a single cell without a self-covering does not count).
    pub fn is_strongly_connected(&self) -> bool {
        let r = graph::tarjan_scc(self.cell_count(), |v| self.succ(v));
        r.comps.len() == 1 && r.has_internal_edge(0, |v| self.succ(v))
    }

    /// Cyclic period of the covering digraph; None if not strongly
    /// connected.
    pub fn period(&self) -> Option<usize> {
        if !self.is_strongly_connected() {
            return None;
        }
        Some(graph::strongly_connected_period(self.cell_count(), |v| {
            self.succ(v)
        }))
    }

    pub fn is_primitive(&self) -> bool {
        self.period() == Some(1)
    }

    /// Minimal k with all entries of Mᵏ positive; None if not primitive.
    /// Wielandt's bound (n−1)² + 1 caps the search; once the matrix is
    /// known primitive, positivity is monotone in k (no zero rows or
    /// columns), so doubling plus binary search lands the minimum.
    pub fn primitivity_exponent(&self) -> Option<usize> {
        if !self.is_primitive() {
            return None;
        }
        let n = self.cell_count();
        let m1 = BitMat::from_covers(&self.covers);
        if m1.all_ones() {
            return Some(1);
        }
        let bound = (n - 1) * (n - 1) + 1;
        // doublings: pows[j] = M^(2^j)
        let mut pows = vec![m1.clone()];
        let mut k = 1usize;
        let mut cur = m1;
        while !cur.all_ones() {
            if k > bound {
                return None; // defensive: contradicts primitivity
            }
            cur = cur.mul(&cur);
            k *= 2;
            pows.push(cur.clone());
        }
        let test = |t: usize| -> bool {
            let mut acc: Option<BitMat> = None;
            let mut bit = 0;
            let mut rest = t;
            while rest > 0 {
                if rest & 1 == 1 {
                    acc = Some(match acc {
                        None => pows[bit].clone(),
                        Some(a) => a.mul(&pows[bit]),
                    });
                }
                rest >>= 1;
                bit += 1;
            }
            acc.expect("t > 0").all_ones()
        };
        let (mut lo, mut hi) = (k / 2, k); // lo fails, hi passes
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if test(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// Min and max row sum of the k-th power of the 0/1 covering matrix —
    /// exact covering-chain counts bracketing the Perron root:
    /// min^(1/k) ≤ λ ≤ max^(1/k).
    pub fn covering_power_row_sums(&self, k: usize) -> (BigUint, BigUint) {
        assert!(k >= 1);
        let n = self.cell_count();
        let zero = BigUint::from(0u32);
        let one = BigUint::from(1u32);
        let mut m: Vec<Vec<BigUint>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if self.covers[i][j] { one.clone() } else { zero.clone() })
                    .collect()
            })
            .collect();
        let base = m.clone();
        for _ in 1..k {
            m = mat_mul(&m, &base);
        }
        let sums: Vec<BigUint> = m
            .iter()
            .map(|row| row.iter().fold(zero.clone(), |a, b| a + b))
            .collect();
        (
            sums.iter().min().unwrap().clone(),
            sums.iter().max().unwrap().clone(),
        )
    }

    /// One extreme (ergodic) invariant density per terminal class of the
    /// covering digraph: exact Perron vector of the transfer matrix
    /// restricted to the class, extended by zero, normalized to mass 1.
    pub fn extreme_invariant_densities(&self) -> Vec<PiecewiseConstDensity> {
        let n = self.cell_count();
        let scc = graph::tarjan_scc(n, |v| self.succ(v));
        let mut out = Vec::new();
        for cid in 0..scc.comps.len() {
            if !scc.is_terminal(cid, |v| self.succ(v)) {
                continue;
            }
            if !scc.has_internal_edge(cid, |v| self.succ(v)) {
                continue; // an isolated cell with no dynamics inside
            }
            let cells = &scc.comps[cid];
            let m = cells.len();
            // (A - I) v = 0 where A[j][i] = 1/|s_i| when cell i covers j
            let mut a = vec![vec![rat::zero(); m]; m];
            for (ii, &gi) in cells.iter().enumerate() {
                let s = rat::abs(&self.slopes[gi]);
                debug_assert!(s > rat::zero(), "cells inside a class are never flat");
                for (jj, &gj) in cells.iter().enumerate() {
                    if self.covers[gi][gj] {
                        a[jj][ii] = rat::one() / &s;
                    }
                }
                a[ii][ii] -= rat::one();
            }
            let basis = kernel_basis(a);
            assert_eq!(
                basis.len(),
                1,
                "transfer matrix of an irreducible class has a simple unit eigenvalue"
            );
            let mut v = basis.into_iter().next().unwrap();
            let total: Rat = v
                .iter()
                .enumerate()
                .map(|(ii, vi)| vi * self.cell(cells[ii]).len())
                .sum();
            assert!(total != rat::zero());
            for vi in v.iter_mut() {
                *vi /= total.clone();
            }
            assert!(
                v.iter().all(|vi| *vi > rat::zero()),
                "Perron vector of an irreducible class is positive"
            );
            let mut values = vec![rat::zero(); n];
            for (ii, &gi) in cells.iter().enumerate() {
                values[gi] = v[ii].clone();
            }
            out.push(
                PiecewiseConstDensity::new(self.points.clone(), values)
                    .expect("normalized Perron density is valid"),
            );
        }
        out
    }
}

fn mat_mul(a: &[Vec<BigUint>], b: &[Vec<BigUint>]) -> Vec<Vec<BigUint>> {
    let n = a.len();
    let zero = BigUint::from(0u32);
    let mut c = vec![vec![zero; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == BigUint::from(0u32) {
                continue;
            }
            for j in 0..n {
                if b[k][j] == BigUint::from(0u32) {
                    continue;
                }
                let prod = &a[i][k] * &b[k][j];
                c[i][j] += prod;
            }
        }
    }
    c
}

/// Dense boolean matrix with u64-packed rows.
#[derive(Clone)]
struct BitMat {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BitMat {
    fn from_covers(covers: &[Vec<bool>]) -> Self {
        let n = covers.len();
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for (i, row) in covers.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c {
                    rows[i * words + j / 64] |= 1u64 << (j % 64);
                }
            }
        }
        BitMat { n, words, rows }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn mul(&self, other: &BitMat) -> BitMat {
        let mut out = BitMat {
            n: self.n,
            words: self.words,
            rows: vec![0u64; self.n * self.words],
        };
        for i in 0..self.n {
            let mut acc = vec![0u64; self.words];
            for (w, &bits) in self.row(i).iter().enumerate() {
                let mut b = bits;
                while b != 0 {
                    let j = w * 64 + b.trailing_zeros() as usize;
                    b &= b - 1;
                    for (t, &o) in other.row(j).iter().enumerate() {
                        acc[t] |= o;
                    }
                }
            }
            out.rows[i * self.words..(i + 1) * self.words].copy_from_slice(&acc);
        }
        out
    }

    fn all_ones(&self) -> bool {
        for i in 0..self.n {
            let row = self.row(i);
            for w in 0..self.words {
                let expect = if (w + 1) * 64 <= self.n {
                    u64::MAX
                } else {
                    (1u64 << (self.n - w * 64)) - 1
                };
                if row[w] & expect != expect {
                    return false;
                }
            }
        }
        true
    }
}

/// Basis of the kernel of a square rational matrix, by exact Gauss-Jordan.
pub(crate) fn kernel_basis(mut m: Vec<Vec<Rat>>) -> Vec<Vec<Rat>> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivot_col_of_row: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        let mut pr = None;
        for i in r..rows {
            if m[i][c] != rat::zero() {
                pr = Some(i);
                break;
            }
        }
        let Some(pr) = pr else { continue };
        m.swap(r, pr);
        let inv = rat::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x *= inv.clone();
        }
        for i in 0..rows {
            if i != r && m[i][c] != rat::zero() {
                let factor = m[i][c].clone();
                for j in 0..cols {
                    let sub = &factor * &m[r][j];
                    m[i][j] -= sub;
                }
            }
        }
        pivot_col_of_row.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let pivot_cols: BTreeSet<usize> = pivot_col_of_row.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![rat::zero(); cols];
        v[free] = rat::one();
        for (row, &pc) in pivot_col_of_row.iter().enumerate() {
            v[pc] = -m[row][free].clone();
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;
    use crate::rat::{rat, rat_int};

    #[test]
    fn tent_model_is_full_shift() {
        let m = markovize(&maps::tent(), &[], 64).unwrap();
        assert_eq!(m.points(), &[rat_int(0), rat(1, 2), rat_int(1)]);
        assert!(m.covers(0, 0) && m.covers(0, 1) && m.covers(1, 0) && m.covers(1, 1));
        assert_eq!(m.slope(0), &rat_int(2));
        assert_eq!(m.slope(1), &rat_int(-2));
        assert!(m.is_primitive());
        assert_eq!(m.primitivity_exponent(), Some(1));
        let d = m.extreme_invariant_densities();
        assert_eq!(d, vec![PiecewiseConstDensity::lebesgue()]);
        let (lo, hi) = m.covering_power_row_sums(5);
        assert_eq!(lo, BigUint::from(32u32));
        assert_eq!(hi, BigUint::from(32u32));
    }

    #[test]
    fn exchange_model_has_period_two() {
        let m = markovize(&maps::exchange_with_tents(), &[], 64).unwrap();
        assert_eq!(
            m.points(),
            &[rat_int(0), rat(1, 4), rat(1, 2), rat(3, 4), rat_int(1)]
        );
        assert!(m.is_strongly_connected());
        assert_eq!(m.period(), Some(2));
        assert!(!m.is_primitive());
        assert_eq!(m.primitivity_exponent(), None);
        // still uniquely ergodic among densities on this grid
        let d = m.extreme_invariant_densities();
        assert_eq!(d, vec![PiecewiseConstDensity::lebesgue()]);
    }

    #[test]
    fn reducible_model_has_two_extremes() {
        let m = markovize(&maps::glued_identity_zigzag(), &[], 64).unwrap();
        assert!(!m.is_strongly_connected());
        let d = m.extreme_invariant_densities();
        assert_eq!(d.len(), 2);
        // supported on [0,1/3] and on [1/3,1], each of mass 1
        let on_left = PiecewiseConstDensity::new(
            vec![rat_int(0), rat(1, 3), rat_int(1)],
            vec![rat_int(3), rat_int(0)],
        )
        .unwrap();
        let on_right = PiecewiseConstDensity::new(
            vec![rat_int(0), rat(1, 3), rat_int(1)],
            vec![rat_int(0), rat(3, 2)],
        )
        .unwrap();
        assert!(d.contains(&on_left));
        assert!(d.contains(&on_right));
    }

    #[test]
    fn fibonacci_covering() {
        // c0 covers exactly c1; c1 covers both: golden-mean shift
        let f = PLMap::new(vec![
            (rat_int(0), rat(1, 2)),
            (rat(1, 2), rat_int(1)),
            (rat_int(1), rat_int(0)),
        ])
        .unwrap();
        let m = markovize(&f, &[], 64).unwrap();
        assert_eq!(m.cell_count(), 2);
        assert!(!m.covers(0, 0) && m.covers(0, 1));
        assert!(m.covers(1, 0) && m.covers(1, 1));
        assert!(m.is_primitive());
        assert_eq!(m.primitivity_exponent(), Some(2));
        let (lo, hi) = m.covering_power_row_sums(4);
        // M^4 row sums: (5, 8)
        assert_eq!(lo, BigUint::from(5u32));
        assert_eq!(hi, BigUint::from(8u32));
        let d = m.extreme_invariant_densities();
        assert_eq!(d.len(), 1);
        let expect = PiecewiseConstDensity::new(
            vec![rat_int(0), rat(1, 2), rat_int(1)],
            vec![rat(2, 3), rat(4, 3)],
        )
        .unwrap();
        assert_eq!(d[0], expect);
    }

    #[test]
    fn identity_model_is_degenerate_but_primitive() {
        let m = markovize(&maps::identity(), &[], 64).unwrap();
        assert_eq!(m.cell_count(), 1);
        assert!(m.is_primitive());
        assert_eq!(m.primitivity_exponent(), Some(1));
    }

    #[test]
    fn orbit_that_never_stabilizes_is_rejected() {
        let f = PLMap::new(vec![(rat_int(0), rat(1, 3)), (rat_int(1), rat_int(1))]).unwrap();
        match markovize(&f, &[], 64) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected stabilization failure, got {other:?}"),
        }
    }

    #[test]
    fn extra_points_refine_the_grid() {
        let m = markovize(&maps::tent(), &[rat(1, 4)], 64).unwrap();
        // 1/4 pulls in its orbit 1/2, 1, 0
        assert_eq!(
            m.points(),
            &[rat_int(0), rat(1, 4), rat(1, 2), rat_int(1)]
        );
        assert!(m.is_primitive());
    }

    #[test]
    fn kernel_solver_on_small_systems() {
        // x + y = 0 twice: kernel dim 1
        let b = kernel_basis(vec![
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(2), rat_int(2)],
        ]);
        assert_eq!(b, vec![vec![rat_int(-1), rat_int(1)]]);
        // identity: trivial kernel
        let b = kernel_basis(vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
        ]);
        assert!(b.is_empty());
        // zero matrix: full kernel
        let b = kernel_basis(vec![
            vec![rat_int(0), rat_int(0)],
            vec![rat_int(0), rat_int(0)],
        ]);
        assert_eq!(b.len(), 2);
    }
}
