//! Constraint regions for strand index tuples.
//!
//! A region describes the admissible tuples n_1 < n_2 < ... < n_d through
//! per-index absolute lower bounds, minimal gaps between consecutive
//! indices, and per-index residue sets mod p. Regions are canonicalized so
//! that lower bounds absorb gap implications.

use std::fmt;

pub const FULL_MASK_LIMIT: u32 = 31;

/// Set of allowed residues mod p as a bitmask (p <= 31).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueSet {
    p: u32,
    mask: u32,
}

impl ResidueSet {
    pub fn full(p: u32) -> Self {
        assert!(p <= FULL_MASK_LIMIT);
        ResidueSet { p, mask: (1u32 << p) - 1 }
    }

    pub fn single(p: u32, r: i64) -> Self {
        let r = r.rem_euclid(p as i64) as u32;
        ResidueSet { p, mask: 1 << r }
    }

    pub fn empty(p: u32) -> Self {
        ResidueSet { p, mask: 0 }
    }

    pub fn from_iter(p: u32, rs: impl IntoIterator<Item = u32>) -> Self {
        let mut mask = 0u32;
        for r in rs {
            mask |= 1 << (r % p);
        }
        ResidueSet { p, mask }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn contains(&self, n: i64) -> bool {
        let r = n.rem_euclid(self.p as i64) as u32;
        self.mask & (1 << r) != 0
    }

    pub fn contains_res(&self, r: u32) -> bool {
        self.mask & (1 << (r % self.p)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_full(&self) -> bool {
        self.mask == (1u32 << self.p) - 1
    }

    pub fn intersect(&self, other: &Self) -> Self {
        ResidueSet { p: self.p, mask: self.mask & other.mask }
    }

    pub fn remove(&self, r: u32) -> Self {
        ResidueSet { p: self.p, mask: self.mask & !(1 << (r % self.p)) }
    }

    pub fn insert(&mut self, r: u32) {
        self.mask |= 1 << (r % self.p);
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.p).filter(move |r| self.mask & (1 << r) != 0)
    }

    /// Shift of the underlying variable by `delta`: residues r become r + delta.
    pub fn shift(&self, delta: i64) -> Self {
        let d = delta.rem_euclid(self.p as i64) as u32;
        let mut mask = 0u32;
        for r in 0..self.p {
            if self.mask & (1 << r) != 0 {
                mask |= 1 << ((r + d) % self.p);
            }
        }
        ResidueSet { p: self.p, mask }
    }
}

impl fmt::Debug for ResidueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for r in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
            first = false;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Region {
    /// absolute lower bound per index (canonical: lowers[i] >= lowers[i-1] + gaps[i-1])
    pub lowers: Vec<i64>,
    /// gaps[i] >= 1 constrains idx[i+1] >= idx[i] + gaps[i]
    pub gaps: Vec<i64>,
    pub residues: Vec<ResidueSet>,
}

impl Region {
    pub fn new(mut lowers: Vec<i64>, gaps: Vec<i64>, residues: Vec<ResidueSet>) -> Self {
        let d = lowers.len();
        assert_eq!(gaps.len(), d.saturating_sub(1));
        assert_eq!(residues.len(), d);
        for i in 1..d {
            let implied = lowers[i - 1] + gaps[i - 1];
            if lowers[i] < implied {
                lowers[i] = implied;
            }
        }
        Region { lowers, gaps, residues }
    }

    pub fn depth(&self) -> usize {
        self.lowers.len()
    }

    pub fn full(p: u32, d: usize, first_lower: i64) -> Self {
        Region::new(
            std::iter::once(first_lower)
                .chain(std::iter::repeat(i64::MIN / 4).take(d.saturating_sub(1)))
                .collect(),
            vec![1; d.saturating_sub(1)],
            vec![ResidueSet::full(p); d],
        )
    }

    pub fn is_empty(&self) -> bool {
        self.residues.iter().any(|r| r.is_empty())
    }

    pub fn contains(&self, tuple: &[i64]) -> bool {
        if tuple.len() != self.depth() {
            return false;
        }
        for (i, &n) in tuple.iter().enumerate() {
            if n < self.lowers[i] || !self.residues[i].contains(n) {
                return false;
            }
            if i > 0 && n < tuple[i - 1] + self.gaps[i - 1] {
                return false;
            }
        }
        true
    }

    /// Minimal admissible tuple with prescribed residues (combo), if any.
    pub fn min_tuple_for_combo(&self, combo: &[u32]) -> Option<Vec<i64>> {
        let p = self.residues.first().map(|r| r.p()).unwrap_or(2) as i64;
        let mut out = Vec::with_capacity(self.depth());
        for i in 0..self.depth() {
            if !self.residues[i].contains_res(combo[i]) {
                return None;
            }
            let low = if i == 0 {
                self.lowers[0]
            } else {
                self.lowers[i].max(out[i - 1] + self.gaps[i - 1])
            };
            // smallest n >= low with n ≡ combo[i] (mod p)
            let r = combo[i] as i64;
            let delta = (r - low).rem_euclid(p);
            out.push(low + delta);
        }
        Some(out)
    }

    /// Minimal admissible tuple over all residue combos allowed by `live`,
    /// where `live` enumerates combos with nonzero coefficient.
    pub fn min_tuple<'a>(&self, live: impl Iterator<Item = &'a Vec<u32>>) -> Option<Vec<i64>> {
        let mut best: Option<Vec<i64>> = None;
        for combo in live {
            if let Some(t) = self.min_tuple_for_combo(combo) {
                let better = match &best {
                    None => true,
                    Some(b) => t < *b,
                };
                if better {
                    best = Some(t);
                }
            }
        }
        best
    }

    /// Intersection (same depth).
    pub fn intersect(&self, other: &Region) -> Region {
        assert_eq!(self.depth(), other.depth());
        Region::new(
            self.lowers
                .iter()
                .zip(other.lowers.iter())
                .map(|(&a, &b)| a.max(b))
                .collect(),
            self.gaps
                .iter()
                .zip(other.gaps.iter())
                .map(|(&a, &b)| a.max(b))
                .collect(),
            self.residues
                .iter()
                .zip(other.residues.iter())
                .map(|(a, b)| a.intersect(b))
                .collect(),
        )
    }

    /// Is `other` a subset of `self`? Conservative (exact for canonical regions).
    pub fn contains_region(&self, other: &Region) -> bool {
        if self.depth() != other.depth() {
            return false;
        }
        for i in 0..self.depth() {
            if other.lowers[i] < self.lowers[i] {
                return false;
            }
            if i > 0 && other.gaps[i - 1] < self.gaps[i - 1] {
                return false;
            }
            for r in other.residues[i].iter() {
                if !self.residues[i].contains_res(r) {
                    return false;
                }
            }
        }
        true
    }

    /// Set difference `self \ other`, as a finite union of regions plus a
    /// list of fully pinned splits. Pinnings are returned as (index, value)
    /// specializations the caller must expand.
    pub fn subtract(&self, other: &Region) -> RegionDiff {
        assert_eq!(self.depth(), other.depth());
        let mut pieces = Vec::new();
        let mut pins = Vec::new();
        // tuples violating other's bound at index i while satisfying self:
        //  n_i in [self.lowers[i], other.lowers[i]) -> finitely many values
        for i in 0..self.depth() {
            if other.lowers[i] > self.lowers[i] {
                for v in self.lowers[i]..other.lowers[i] {
                    if self.residues[i].contains(v) {
                        pins.push((i, v, self.clone()));
                    }
                }
            }
        }
        // gap violations: self allows gap g in [self.gaps, other.gaps)
        for i in 0..self.depth().saturating_sub(1) {
            if other.gaps[i] > self.gaps[i] {
                for g in self.gaps[i]..other.gaps[i] {
                    pieces.push(RegionSlice::GapPinned { pair: i, offset: g, base: self.clone() });
                }
            }
        }
        // residue violations
        for i in 0..self.depth() {
            let bad: Vec<u32> = self.residues[i]
                .iter()
                .filter(|&r| !other.residues[i].contains_res(r))
                .collect();
            if !bad.is_empty() {
                let mut region = self.clone();
                region.residues[i] = ResidueSet::from_iter(self.residues[i].p(), bad);
                // and require satisfaction of other's bounds/gaps up to here
                // (these tuples are excluded from other by residue alone)
                for j in 0..self.depth() {
                    region.lowers[j] = region.lowers[j].max(other.lowers[j]);
                }
                for j in 0..self.depth().saturating_sub(1) {
                    region.gaps[j] = region.gaps[j].max(other.gaps[j]);
                }
                pieces.push(RegionSlice::Whole(Region::new(
                    region.lowers, region.gaps, region.residues,
                )));
            }
        }
        RegionDiff { pieces, pins }
    }

    /// All admissible tuples with every index <= cap (test support).
    pub fn enumerate(&self, cap: i64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let mut stack: Vec<Vec<i64>> = vec![vec![]];
        while let Some(t) = stack.pop() {
            let i = t.len();
            if i == self.depth() {
                out.push(t);
                continue;
            }
            let low = if i == 0 {
                self.lowers[0]
            } else {
                self.lowers[i].max(t[i - 1] + self.gaps[i - 1])
            };
            for n in low..=cap {
                if self.residues[i].contains(n) {
                    let mut nt = t.clone();
                    nt.push(n);
                    stack.push(nt);
                }
            }
        }
        out
    }

    pub fn shift_all(&self, delta: i64) -> Region {
        Region {
            lowers: self.lowers.iter().map(|&l| l + delta).collect(),
            gaps: self.gaps.clone(),
            residues: self.residues.iter().map(|r| r.shift(delta)).collect(),
        }
    }
}

pub enum RegionSlice {
    Whole(Region),
    /// tuples of `base` with idx[pair+1] == idx[pair] + offset
    GapPinned { pair: usize, offset: i64, base: Region },
}

pub struct RegionDiff {
    pub pieces: Vec<RegionSlice>,
    /// (index, pinned value, base region)
    pub pins: Vec<(usize, i64, Region)>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region(lowers={:?}, gaps={:?}, residues={:?})", self.lowers, self.gaps, self.residues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization_propagates_lowers() {
        let p = 3;
        let r = Region::new(vec![1, 0], vec![2], vec![ResidueSet::full(p); 2]);
        assert_eq!(r.lowers, vec![1, 3]);
    }

    #[test]
    fn min_tuple_respects_residues() {
        let p = 3;
        let r = Region::new(
            vec![1, 2],
            vec![1],
            vec![ResidueSet::single(p, 2), ResidueSet::full(p)],
        );
        let combo = vec![2u32, 0u32];
        let t = r.min_tuple_for_combo(&combo).unwrap();
        assert_eq!(t, vec![2, 3]);
    }

    #[test]
    fn enumerate_matches_contains() {
        let p = 2;
        let r = Region::new(vec![1, 1], vec![2], vec![ResidueSet::full(p); 2]);
        for t in r.enumerate(6) {
            assert!(r.contains(&t), "{t:?}");
        }
        assert!(r.contains(&[1, 3]));
        assert!(!r.contains(&[1, 2]));
    }
}
