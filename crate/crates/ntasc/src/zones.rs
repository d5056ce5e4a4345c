//! Difference bound matrices and a zone-graph reachability engine.
//!
//! Used as an independent check of the region engine; both must agree on
//! every reachability verdict.

use std::collections::HashMap;
use std::fmt;

use crate::model::{Action, Rel};
use crate::regions::{cartesian, CConstraint, RegionError, System};

/// `(c, strict)` packed as `2c + (strict ? 0 : 1)`; `INF` is no bound.
pub type Bound = i64;
pub const INF: Bound = i64::MAX;

pub fn bound(c: i64, strict: bool) -> Bound {
    2 * c + if strict { 0 } else { 1 }
}

pub const LE_ZERO: Bound = 1;

fn add(a: Bound, b: Bound) -> Bound {
    if a == INF || b == INF {
        INF
    } else {
        // sum of constants, strict if either is
        (a & !1) + (b & !1) + ((a & 1) & (b & 1))
    }
}

/// Clock 0 is the constant zero; entry `(i, j)` bounds `x_i - x_j`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    n: usize,
    m: Vec<Bound>,
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let b = self.get(i, j);
                    if b == INF {
                        "inf".into()
                    } else {
                        format!("{}{}", if b & 1 == 1 { "<=" } else { "<" }, b >> 1)
                    }
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl Dbm {
    /// All clocks equal to zero, over `clocks` real clocks.
    pub fn zero(clocks: usize) -> Dbm {
        let n = clocks + 1;
        Dbm { n, m: vec![LE_ZERO; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.n + j] = b;
    }

    pub fn is_empty(&self) -> bool {
        (0..self.n).any(|i| self.get(i, i) < LE_ZERO)
    }

    /// Floyd–Warshall closure.
    pub fn canonicalize(&mut self) {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                let ik = self.get(i, k);
                if ik == INF {
                    continue;
                }
                for j in 0..n {
                    let s = add(ik, self.get(k, j));
                    if s < self.get(i, j) {
                        self.set(i, j, s);
                    }
                }
            }
        }
    }

    /// Intersect with `x_i - x_j ≺ b` and re-close.
    pub fn constrain(&mut self, i: usize, j: usize, b: Bound) {
        if b < self.get(i, j) {
            self.set(i, j, b);
            self.canonicalize();
        }
    }

    fn constrain_rel(&mut self, i: usize, j: usize, rel: Rel, k: i64) {
        match rel {
            Rel::Lt => self.constrain(i, j, bound(k, true)),
            Rel::Le => self.constrain(i, j, bound(k, false)),
            Rel::Eq => {
                self.constrain(i, j, bound(k, false));
                self.constrain(j, i, bound(-k, false));
            }
            Rel::Ge => self.constrain(j, i, bound(-k, false)),
            Rel::Gt => self.constrain(j, i, bound(-k, true)),
        }
    }

    /// Intersect with a compiled constraint (clock `c` is DBM index `c + 1`).
    pub fn apply(&mut self, g: &CConstraint) {
        for a in &g.atoms {
            self.constrain_rel(a.clock + 1, 0, a.rel, a.k as i64);
            if self.is_empty() {
                return;
            }
        }
        for d in &g.diags {
            self.constrain_rel(d.x + 1, d.y + 1, d.rel, d.k as i64);
            if self.is_empty() {
                return;
            }
        }
    }

    /// Let time elapse.
    pub fn up(&mut self) {
        for i in 1..self.n {
            self.set(i, 0, INF);
        }
    }

    pub fn reset(&mut self, c: usize) {
        let x = c + 1;
        for j in 0..self.n {
            let (b0j, bj0) = (self.get(0, j), self.get(j, 0));
            self.set(x, j, b0j);
            self.set(j, x, bj0);
        }
        self.set(x, x, LE_ZERO);
    }

    /// `t := s`.
    pub fn copy(&mut self, t: usize, s: usize) {
        let (t, s) = (t + 1, s + 1);
        if t == s {
            return;
        }
        for j in 0..self.n {
            let (bsj, bjs) = (self.get(s, j), self.get(j, s));
            self.set(t, j, bsj);
            self.set(j, t, bjs);
        }
        self.set(t, t, LE_ZERO);
        self.set(t, s, LE_ZERO);
        self.set(s, t, LE_ZERO);
    }

    /// Classical max-bound extrapolation.
    pub fn extrapolate(&mut self, maxc: &[u32]) {
        let k = |i: usize| if i == 0 { 0 } else { maxc[i - 1] as i64 };
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if b == INF {
                    continue;
                }
                if b > bound(k(i), false) {
                    self.set(i, j, INF);
                } else if b < bound(-k(j), true) {
                    self.set(i, j, bound(-k(j), true));
                }
            }
        }
        self.canonicalize();
    }

    pub fn includes(&self, other: &Dbm) -> bool {
        self.m.iter().zip(&other.m).all(|(a, b)| b <= a)
    }
}

/// Does the zone graph of `sys` reach a location vector satisfying `target`?
pub fn reachable(sys: &System, budget: usize, target: &dyn Fn(&[usize]) -> bool) -> Result<bool, RegionError> {
    let n = sys.space.len();
    let maxc = &sys.space.maxc;
    let inv = |locs: &[usize], z: &mut Dbm| {
        for (c, &l) in sys.comps.iter().zip(locs) {
            z.apply(&c.inv[l]);
        }
    };
    let close = |locs: &[usize], z: &mut Dbm| {
        inv(locs, z);
        if z.is_empty() {
            return;
        }
        z.up();
        inv(locs, z);
        z.extrapolate(maxc);
    };
    let mut init = Dbm::zero(n);
    let l0 = sys.init_locs();
    close(&l0, &mut init);
    if init.is_empty() {
        return Ok(false);
    }
    let mut passed: HashMap<Vec<usize>, Vec<Dbm>> = HashMap::new();
    let mut waiting = vec![(l0, init)];
    let mut count = 0usize;
    while let Some((locs, z)) = waiting.pop() {
        if target(&locs) {
            return Ok(true);
        }
        let seen = passed.entry(locs.clone()).or_default();
        if seen.iter().any(|s| s.includes(&z)) {
            continue;
        }
        seen.retain(|s| !z.includes(s));
        seen.push(z.clone());
        count += 1;
        if count > budget {
            return Err(RegionError::StateBudgetExceeded(budget));
        }
        for (nl, mut nz) in successors(sys, &locs, &z) {
            close(&nl, &mut nz);
            if !nz.is_empty() {
                waiting.push((nl, nz));
            }
        }
    }
    Ok(false)
}

fn successors(sys: &System, locs: &[usize], z: &Dbm) -> Vec<(Vec<usize>, Dbm)> {
    let mut out = Vec::new();
    let fire = |edges: &[(usize, usize)]| -> Option<(Vec<usize>, Dbm)> {
        let mut nz = z.clone();
        let mut nl = locs.to_vec();
        for &(ci, eid) in edges {
            nz.apply(&sys.comps[ci].edges[eid].guard);
            if nz.is_empty() {
                return None;
            }
        }
        for &(ci, eid) in edges {
            for &r in &sys.comps[ci].edges[eid].resets {
                nz.reset(r);
            }
        }
        // copy sources are never copy targets in the constructions
        for &(ci, eid) in edges {
            let e = &sys.comps[ci].edges[eid];
            nl[ci] = e.dst;
            for &(t, s) in &e.copies {
                nz.copy(t, s);
            }
        }
        nz.canonicalize();
        Some((nl, nz))
    };
    for (ci, c) in sys.comps.iter().enumerate() {
        for &eid in &c.out[locs[ci]] {
            let solo = match &c.edges[eid].action {
                Action::Sync(l) => sys.sync_groups.get(l).is_none_or(|g| g.len() == 1),
                _ => true,
            };
            if solo {
                out.extend(fire(&[(ci, eid)]));
            }
        }
    }
    for (label, group) in &sys.sync_groups {
        if group.len() < 2 {
            continue;
        }
        let options: Vec<Vec<usize>> = group
            .iter()
            .map(|&ci| {
                let c = &sys.comps[ci];
                c.out[locs[ci]]
                    .iter()
                    .copied()
                    .filter(|&eid| matches!(&c.edges[eid].action, Action::Sync(l) if l == label))
                    .collect()
            })
            .collect();
        for combo in cartesian(&options) {
            let edges: Vec<(usize, usize)> = group.iter().zip(combo).map(|(&ci, e)| (ci, e)).collect();
            out.extend(fire(&edges));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delay_then_guard() {
        let mut z = Dbm::zero(2);
        z.up();
        z.constrain_rel(1, 0, Rel::Ge, 2);
        assert!(!z.is_empty());
        // clocks stay equal
        assert_eq!(z.get(1, 2), LE_ZERO);
        z.constrain_rel(2, 0, Rel::Lt, 2);
        assert!(z.is_empty());
    }

    #[test]
    fn reset_and_copy() {
        let mut z = Dbm::zero(2);
        z.up();
        z.constrain_rel(1, 0, Rel::Eq, 3);
        z.reset(0);
        z.canonicalize();
        assert_eq!(z.get(2, 0), bound(3, false));
        assert_eq!(z.get(1, 0), LE_ZERO);
        z.copy(0, 1);
        z.canonicalize();
        assert_eq!(z.get(1, 0), bound(3, false));
        assert_eq!(z.get(0, 1), bound(-3, false));
    }

    proptest! {
        #[test]
        fn extrapolation_only_grows(k in 0u32..4, d in 0i64..8) {
            let mut z = Dbm::zero(1);
            z.up();
            z.constrain_rel(1, 0, Rel::Ge, d);
            let before = z.clone();
            z.extrapolate(&[k]);
            prop_assert!(z.includes(&before));
        }
    }
}
