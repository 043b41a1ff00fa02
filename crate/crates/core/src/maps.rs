//! Stock maps used as fixtures throughout the crate and the CLI examples.

use crate::plmap::PLMap;
use crate::rat::{rat, rat_int, Rat};

fn mk(raw: &[(Rat, Rat)]) -> PLMap {
    PLMap::new(raw.to_vec()).expect("stock map is valid")
}

pub fn identity() -> PLMap {
    mk(&[(rat_int(0), rat_int(0)), (rat_int(1), rat_int(1))])
}

pub fn reflection() -> PLMap {
    mk(&[(rat_int(0), rat_int(1)), (rat_int(1), rat_int(0))])
}

/// Full tent: x ↦ 1 − |2x − 1|.
pub fn tent() -> PLMap {
    mk(&[
        (rat_int(0), rat_int(0)),
        (rat(1, 2), rat_int(1)),
        (rat_int(1), rat_int(0)),
    ])
}

/// Three-branch uniform zigzag (slope ±3), up-down-up.
pub fn three_tent() -> PLMap {
    mk(&[
        (rat_int(0), rat_int(0)),
        (rat(1, 3), rat_int(1)),
        (rat(2, 3), rat_int(0)),
        (rat_int(1), rat_int(1)),
    ])
}

/// Continuous m-fold zigzag: alternating full sweeps between 0 and 1,
/// starting upward, uniform slope ±m. m >= 1; m = 1 is the identity.
pub fn zigzag(m: usize) -> PLMap {
    assert!(m >= 1);
    let mut pts = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let x = rat(k as i64, m as i64);
        let y = if k % 2 == 0 { rat_int(0) } else { rat_int(1) };
        pts.push((x, y));
    }
    mk(&pts)
}

/// Exchanges the two halves of [0,1], with a tent on each half: a map with
/// one interior fixed point at 1/2 and no fixed point in the open halves.
pub fn exchange_with_tents() -> PLMap {
    mk(&[
        (rat_int(0), rat(1, 2)),
        (rat(1, 4), rat_int(1)),
        (rat(1, 2), rat(1, 2)),
        (rat(3, 4), rat_int(0)),
        (rat_int(1), rat(1, 2)),
    ])
}

/// Identity on [0,1/3] glued to an expanding zigzag on [1/3,1]: its fixed
/// set has an interval component plus an isolated transverse point.
pub fn glued_identity_zigzag() -> PLMap {
    mk(&[
        (rat_int(0), rat_int(0)),
        (rat(1, 3), rat(1, 3)),
        (rat(2, 3), rat_int(1)),
        (rat_int(1), rat(1, 3)),
    ])
}

/// Breakpoints of the constant-|slope| zigzag over [x0, x1] through the
/// value sequence `values` (first value at x0, last at x1, the rest are
/// interior turns). Piece widths are proportional to the value jumps, so
/// every piece gets the same absolute slope total-variation/(x1−x0).
/// Consecutive equal values fuse; at least one nonzero jump is required.
pub fn zigzag_through(x0: &Rat, x1: &Rat, values: &[Rat]) -> Vec<(Rat, Rat)> {
    assert!(x0 < x1, "zigzag needs a nondegenerate base interval");
    let mut vals: Vec<Rat> = Vec::with_capacity(values.len());
    for v in values {
        if vals.last() != Some(v) {
            vals.push(v.clone());
        }
    }
    assert!(vals.len() >= 2, "zigzag needs at least one nonzero jump");
    let total: Rat = vals
        .windows(2)
        .map(|w| crate::rat::abs(&(&w[1] - &w[0])))
        .sum();
    let width = x1 - x0;
    let mut pts = vec![(x0.clone(), vals[0].clone())];
    let mut x = x0.clone();
    for w in vals.windows(2) {
        x = &x + crate::rat::abs(&(&w[1] - &w[0])) * &width / &total;
        pts.push((x.clone(), w[1].clone()));
    }
    // the cumulative widths telescope to exactly x1
    let last = pts.last_mut().unwrap();
    debug_assert_eq!(last.0, *x1);
    last.0 = x1.clone();
    pts
}
