//! Strands: the normal-form constituents of series in the computable class.
//!
//! A descending strand of depth d describes the support family
//! `q(n_1..n_d) = base + sum_i a_i p^(-n_i)` with integer coefficients
//! `a_i < 0`, `p ∤ a_i`, over a constraint region `n_1 < ... < n_d`, with a
//! coefficient function of the index residues mod p. An ascending strand has
//! a single index and `q(n) = base + a p^(+n)`, `a > 0`. Depth 0 is a plain
//! monomial.
//!
//! The normalizing constructor enforces a *separated* form: consecutive
//! index gaps exceed the base-p digit width of the deeper coefficient, so
//! the digit expansion of `q - base` is the disjoint concatenation of the
//! digit patterns of the `a_i`. That makes the exponent map injective and
//! lets the support engine decide coincidence questions exactly.

use crate::coeff::FieldElem;
use crate::error::{ClassError, Result};
use crate::exponent::Exponent;
use crate::region::{Region, ResidueSet};
use crate::residue::ResidueTable;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dir {
    Desc,
    Asc,
}

#[derive(Clone, PartialEq)]
pub struct Strand {
    p: u32,
    base: Exponent,
    dir: Dir,
    terms: Vec<i128>,
    region: Region,
    table: ResidueTable,
}

/// Number of base-p digits of |a|.
pub fn digit_width(p: u32, a: i128) -> i64 {
    let mut n = a.unsigned_abs();
    let mut w = 0i64;
    while n > 0 {
        n /= p as u128;
        w += 1;
    }
    w.max(1)
}

impl Strand {
    pub fn monomial(p: u32, coeff: &FieldElem, q: Exponent) -> Option<Strand> {
        if coeff.is_zero() {
            return None;
        }
        Some(Strand {
            p,
            base: q,
            dir: Dir::Desc,
            terms: vec![],
            region: Region::new(vec![], vec![], vec![]),
            table: ResidueTable::constant(p, 0, coeff.clone()),
        })
    }

    /// Normalizing constructor: p-reduces coefficients, restores index
    /// ordering, enforces separation by splitting, trims dead residues.
    pub fn make(
        p: u32,
        base: Exponent,
        dir: Dir,
        terms: Vec<i128>,
        region: Region,
        table: ResidueTable,
    ) -> Result<Vec<Strand>> {
        let raw = Strand { p, base, dir, terms, region, table };
        raw.normalize()
    }

    fn normalize(self) -> Result<Vec<Strand>> {
        let d = self.terms.len();
        assert_eq!(self.region.depth(), d);
        assert_eq!(self.table.arity(), d);
        if self.table.is_zero() {
            return Ok(vec![]);
        }
        if d == 0 {
            return Ok(vec![self]);
        }
        match self.dir {
            Dir::Asc => {
                if d != 1 {
                    return Err(ClassError::NotInClass(
                        "ascending strands must have a single index".into(),
                    ));
                }
                if self.terms[0] <= 0 {
                    return Err(ClassError::NotInClass(
                        "ascending strand with non-positive coefficient".into(),
                    ));
                }
                Ok(self.p_reduce().trimmed())
            }
            Dir::Desc => {
                if self.terms.iter().any(|&a| a >= 0) {
                    return Err(ClassError::NotInClass(
                        "descending strand with non-negative coefficient".into(),
                    ));
                }
                let s = self.p_reduce();
                s.separate()
            }
        }
    }

    /// Absorbs p-power parts of the coefficients into index shifts.
    fn p_reduce(mut self) -> Strand {
        let p = self.p as i128;
        let d = self.terms.len();
        let mut shifts = vec![0i64; d];
        for i in 0..d {
            let mut a = self.terms[i];
            let mut e = 0i64;
            while a % p == 0 {
                a /= p;
                e += 1;
            }
            self.terms[i] = a;
            shifts[i] = e;
        }
        if shifts.iter().all(|&e| e == 0) {
            return self;
        }
        // descending: a p^e p^(-n) = a p^(-(n-e)) -> n' = n - e
        // ascending:  a p^e p^(+n) = a p^(+(n+e)) -> n' = n + e
        let sign = match self.dir {
            Dir::Desc => -1i64,
            Dir::Asc => 1i64,
        };
        let mut lowers = self.region.lowers.clone();
        let mut gaps = self.region.gaps.clone();
        let mut residues = self.region.residues.clone();
        let mut table = self.table.clone();
        for i in 0..d {
            let e = sign * shifts[i];
            if e == 0 {
                continue;
            }
            lowers[i] += e;
            residues[i] = residues[i].shift(e);
            // new var n' = n + e; table entry at r' equals old at r' - e
            table = table.shift_var(i, -e);
        }
        for i in 0..d.saturating_sub(1) {
            let ei = sign * shifts[i];
            let ej = sign * shifts[i + 1];
            gaps[i] += ej - ei;
        }
        Strand {
            p: self.p,
            base: self.base,
            dir: self.dir,
            terms: self.terms,
            region: Region { lowers, gaps, residues },
            table,
        }
    }

    /// Splits into separated strands: every consecutive gap must be at least
    /// the digit width of the deeper coefficient. Close index pairs merge
    /// into a single term and re-normalize (depth drops, so this
    /// terminates).
    fn separate(self) -> Result<Vec<Strand>> {
        let d = self.terms.len();
        if d <= 1 {
            return Ok(self.trimmed());
        }
        for i in 0..d - 1 {
            let w = digit_width(self.p, self.terms[i + 1]);
            let g = self.region.gaps[i];
            if g < w {
                let mut out = Vec::new();
                for t in g..w {
                    if let Some(merged) = self.merge_pair(i, t)? {
                        out.extend(merged.normalize()?);
                    }
                }
                let mut rest = self.clone();
                rest.region.gaps[i] = w;
                rest.region = Region::new(
                    rest.region.lowers.clone(),
                    rest.region.gaps.clone(),
                    rest.region.residues.clone(),
                );
                out.extend(rest.separate()?);
                return Ok(out);
            }
        }
        Ok(self.trimmed())
    }

    /// Substitutes n_{i+1} = n_i + t, merging the two geometric terms into
    /// one. Returns None when the residue constraints rule the offset out.
    fn merge_pair(&self, i: usize, t: i64) -> Result<Option<Strand>> {
        assert_eq!(self.dir, Dir::Desc);
        let p = self.p;
        let d = self.terms.len();
        // c = a_i + a_{i+1} p^(-t) = A p^(-E) with A integer, p-free
        let c = Exponent::integer(p, self.terms[i])
            .checked_add(Exponent::integer(p, self.terms[i + 1]).mul_ppow(-t))?;
        debug_assert!(!c.is_zero(), "descending coefficients cannot cancel");
        let shift_e: i64; // merged var m = n_i + E
        let a_merged: i128;
        if c.den_pow() > 0 {
            shift_e = c.den_pow() as i64;
            a_merged = c.num();
        } else {
            // integer: absorb its p-power into the index too
            let mut a = c.num();
            let mut e = 0i64;
            while a % (p as i128) == 0 {
                a /= p as i128;
                e -= 1;
            }
            shift_e = e;
            a_merged = a;
        }
        // residue feasibility: m = n_i + E must satisfy both old conditions
        let r_i = &self.region.residues[i];
        let r_j = &self.region.residues[i + 1];
        let merged_res = r_i.shift(shift_e).intersect(&r_j.shift(shift_e - t));
        if merged_res.is_empty() {
            return Ok(None);
        }
        // surviving vars in order: 0..i-1, m (at slot i), i+2..d-1
        let mut terms = Vec::with_capacity(d - 1);
        let mut lowers = Vec::with_capacity(d - 1);
        let mut residues = Vec::with_capacity(d - 1);
        for k in 0..d {
            if k == i + 1 {
                continue;
            }
            if k == i {
                terms.push(a_merged);
                lowers.push(
                    (self.region.lowers[i] + shift_e)
                        .max(self.region.lowers[i + 1] + shift_e - t),
                );
                residues.push(merged_res);
            } else {
                terms.push(self.terms[k]);
                lowers.push(self.region.lowers[k]);
                residues.push(self.region.residues[k]);
            }
        }
        // new gap j sits between surviving slots j and j+1, where the
        // surviving vars are 0..i-1, m (slot i), then i+2..d-1
        let mut gaps = Vec::with_capacity(d.saturating_sub(2));
        for j in 0..d.saturating_sub(2) {
            let g = if j + 1 < i {
                self.region.gaps[j]
            } else if j + 1 == i {
                // between var i-1 and m = n_i + E
                self.region.gaps[j] + shift_e
            } else if j == i {
                // between m and var i+2: n_{i+2} >= n_{i+1} + g_{i+1}
                //                               = m - E + t + g_{i+1}
                self.region.gaps[i + 1] + t - shift_e
            } else {
                self.region.gaps[j + 1]
            };
            gaps.push(g);
        }
        debug_assert_eq!(gaps.len(), terms.len().saturating_sub(1));
        // table: old var i residue = m - E, old var i+1 residue = m - E + t
        let table = ResidueTable::tabulate(p, d - 1, |combo| {
            let m = combo[i] as i64;
            let ri = (m - shift_e).rem_euclid(p as i64) as u32;
            let rj = (m - shift_e + t).rem_euclid(p as i64) as u32;
            let mut full = Vec::with_capacity(d);
            full.extend_from_slice(&combo[..i]);
            full.push(ri);
            full.push(rj);
            full.extend_from_slice(&combo[i + 1..]);
            debug_assert_eq!(full.len(), d);
            self.table.eval(&full).clone()
        });
        Ok(Some(Strand {
            p,
            base: self.base,
            dir: self.dir,
            terms,
            region: Region::new(lowers, gaps, residues),
            table,
        }))
    }

    /// Zeroes table entries outside allowed residues, prunes residue sets to
    /// the live projection, and drops the strand if nothing is left.
    fn trimmed(self) -> Vec<Strand> {
        let p = self.p;
        let d = self.terms.len();
        if d == 0 {
            return if self.table.is_zero() { vec![] } else { vec![self] };
        }
        let residues = self.region.residues.clone();
        let table = ResidueTable::tabulate(p, d, |combo| {
            if combo.iter().zip(residues.iter()).all(|(&r, set)| set.contains_res(r)) {
                self.table.eval(combo).clone()
            } else {
                FieldElem::zero(p)
            }
        });
        if table.is_zero() {
            return vec![];
        }
        let mut pruned = Vec::with_capacity(d);
        for i in 0..d {
            let live = ResidueSet::from_iter(
                p,
                ResidueTable::combos(p, d)
                    .filter(|c| !table.eval(c).is_zero())
                    .map(|c| c[i]),
            );
            pruned.push(live);
        }
        let region = Region::new(self.region.lowers.clone(), self.region.gaps.clone(), pruned);
        vec![Strand { region, table, ..self }]
    }

    // ------------------------------------------------------------------
    // accessors
    // ------------------------------------------------------------------

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn base(&self) -> Exponent {
        self.base
    }
    pub fn dir(&self) -> Dir {
        self.dir
    }
    pub fn depth(&self) -> usize {
        self.terms.len()
    }
    pub fn is_monomial(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn terms(&self) -> &[i128] {
        &self.terms
    }
    pub fn region(&self) -> &Region {
        &self.region
    }
    pub fn table(&self) -> &ResidueTable {
        &self.table
    }

    pub fn live_combos(&self) -> Vec<Vec<u32>> {
        ResidueTable::combos(self.p, self.depth())
            .filter(|c| !self.table.eval(c).is_zero())
            .collect()
    }

    pub fn exponent_at(&self, tuple: &[i64]) -> Exponent {
        let mut q = self.base;
        for (i, &n) in tuple.iter().enumerate() {
            let sign = match self.dir {
                Dir::Desc => -n,
                Dir::Asc => n,
            };
            q = q.add(Exponent::integer(self.p, self.terms[i]).mul_ppow(sign));
        }
        q
    }

    pub fn coeff_at(&self, tuple: &[i64]) -> FieldElem {
        let combo: Vec<u32> = tuple
            .iter()
            .map(|&n| n.rem_euclid(self.p as i64) as u32)
            .collect();
        self.table.eval(&combo).clone()
    }

    /// Minimal exponent over the effective support, with a witness tuple.
    pub fn min_exponent(&self) -> Option<(Exponent, Vec<i64>)> {
        if self.is_monomial() {
            return Some((self.base, vec![]));
        }
        let mut best: Option<(Exponent, Vec<i64>)> = None;
        for combo in self.live_combos() {
            if let Some(t) = self.region.min_tuple_for_combo(&combo) {
                let q = self.exponent_at(&t);
                if best.as_ref().map_or(true, |(b, _)| q < *b) {
                    best = Some((q, t));
                }
            }
        }
        best
    }

    /// Supremum of the support: attained for monomials, the base (not
    /// attained) for descending strands, infinite for ascending ones.
    pub fn sup(&self) -> SupBound {
        if self.is_monomial() {
            SupBound::Attained(self.base)
        } else {
            match self.dir {
                Dir::Desc => SupBound::Limit(self.base),
                Dir::Asc => SupBound::Infinite,
            }
        }
    }

    /// Pins the first index to `v`. Returns the residual strand of depth
    /// d-1 (or a monomial), or None when `v` is outside the region or the
    /// specialized coefficient table vanishes.
    pub fn pin_first(&self, v: i64) -> Option<Strand> {
        let d = self.depth();
        assert!(d >= 1);
        if v < self.region.lowers[0] {
            return None;
        }
        let r = v.rem_euclid(self.p as i64) as u32;
        if !self.region.residues[0].contains_res(r) {
            return None;
        }
        let sign = match self.dir {
            Dir::Desc => -v,
            Dir::Asc => v,
        };
        let base = self
            .base
            .add(Exponent::integer(self.p, self.terms[0]).mul_ppow(sign));
        let table = self.table.specialize(0, r);
        if table.is_zero() {
            return None;
        }
        let mut lowers: Vec<i64> = self.region.lowers[1..].to_vec();
        if d >= 2 {
            lowers[0] = lowers[0].max(v + self.region.gaps[0]);
        }
        let region = Region::new(
            lowers,
            self.region.gaps.get(1..).unwrap_or(&[]).to_vec(),
            self.region.residues[1..].to_vec(),
        );
        Some(Strand {
            p: self.p,
            base,
            dir: self.dir,
            terms: self.terms[1..].to_vec(),
            region,
            table,
        })
    }

    /// Restricts the first index to start at `new_lower`.
    pub fn with_first_lower(&self, new_lower: i64) -> Strand {
        if self.is_monomial() || new_lower <= self.region.lowers[0] {
            return self.clone();
        }
        let mut region = self.region.clone();
        region.lowers[0] = new_lower;
        Strand {
            region: Region::new(region.lowers, region.gaps, region.residues),
            ..self.clone()
        }
    }

    /// Exponent scaling by p^k (the k-th Frobenius power): exponents
    /// multiply by p^k and coefficient values map through frobenius(k).
    pub fn frobenius(&self, k: i64) -> Strand {
        let base = self.base.mul_ppow(k);
        if self.is_monomial() {
            return Strand {
                base,
                table: self.table.map(|v| v.frobenius(k)),
                ..self.clone()
            };
        }
        // descending: a p^(-n) -> a p^(-(n-k)): n' = n - k
        // ascending:  a p^(+n) -> a p^(+(n+k)): n' = n + k
        let shift = match self.dir {
            Dir::Desc => -k,
            Dir::Asc => k,
        };
        let lowers: Vec<i64> = self.region.lowers.iter().map(|&l| l + shift).collect();
        let residues: Vec<ResidueSet> =
            self.region.residues.iter().map(|r| r.shift(shift)).collect();
        let mut table = self.table.clone();
        for i in 0..self.depth() {
            table = table.shift_var(i, -shift);
        }
        table = table.map(|v| v.frobenius(k));
        Strand {
            p: self.p,
            base,
            dir: self.dir,
            terms: self.terms.clone(),
            region: Region::new(lowers, self.region.gaps.clone(), residues),
            table,
        }
    }

    pub fn scale(&self, c: &FieldElem) -> Option<Strand> {
        if c.is_zero() {
            return None;
        }
        Some(Strand { table: self.table.scale(c), ..self.clone() })
    }

    pub fn negated(&self) -> Strand {
        Strand { table: self.table.neg(), ..self.clone() }
    }

    pub fn shift_base(&self, q: Exponent) -> Strand {
        Strand { base: self.base.add(q), ..self.clone() }
    }

    pub fn with_table(&self, table: ResidueTable) -> Strand {
        Strand { table, ..self.clone() }
    }

    /// Removes the deepest index and its term (support bookkeeping for the
    /// matching engine; not sum-preserving on its own).
    pub(crate) fn strip_last(&self) -> Strand {
        let d = self.depth();
        assert!(d >= 1);
        Strand {
            p: self.p,
            base: self.base,
            dir: self.dir,
            terms: self.terms[..d - 1].to_vec(),
            region: Region::new(
                self.region.lowers[..d - 1].to_vec(),
                self.region.gaps[..d.saturating_sub(2)].to_vec(),
                self.region.residues[..d - 1].to_vec(),
            ),
            table: self.table.drop_var(d - 1),
        }
    }

    /// Inverse of strip_last: appends a deepest index with the given term
    /// and constraints; the table becomes constant in the new variable.
    pub(crate) fn attach_last(
        &self,
        term: i128,
        lower: i64,
        gap: i64,
        residues: ResidueSet,
    ) -> Strand {
        let d = self.depth();
        let mut lowers = self.region.lowers.clone();
        lowers.push(lower);
        let mut gaps = self.region.gaps.clone();
        if d >= 1 {
            gaps.push(gap);
        }
        let mut res = self.region.residues.clone();
        res.push(residues);
        let mut terms = self.terms.clone();
        terms.push(term);
        Strand {
            p: self.p,
            base: self.base,
            dir: self.dir,
            terms,
            region: Region::new(lowers, gaps, res),
            table: self.table.insert_var(d),
        }
    }

    pub(crate) fn last_lower(&self) -> i64 {
        *self.region.lowers.last().unwrap()
    }
    pub(crate) fn last_gap(&self) -> i64 {
        if self.depth() >= 2 {
            self.region.gaps[self.depth() - 2]
        } else {
            1
        }
    }
    pub(crate) fn last_residues(&self) -> ResidueSet {
        *self.region.residues.last().unwrap()
    }

    /// Merge of the last index pair at fixed offset (public entry for the
    /// matching engine).
    pub(crate) fn merge_last_pair(&self, t: i64) -> Result<Option<Strand>> {
        assert!(self.depth() >= 2);
        self.merge_pair(self.depth() - 2, t)
    }

    /// Merge of an arbitrary adjacent index pair at fixed offset.
    pub(crate) fn merge_middle_pair(&self, i: usize, t: i64) -> Result<Option<Strand>> {
        self.merge_pair(i, t)
    }

    /// Raises the gap between indices i and i+1.
    pub(crate) fn with_gap_at_least(&self, i: usize, g: i64) -> Strand {
        let mut region = self.region.clone();
        if region.gaps[i] < g {
            region.gaps[i] = g;
        }
        Strand {
            region: Region::new(region.lowers, region.gaps, region.residues),
            ..self.clone()
        }
    }

    /// Replaces the region (same depth) after an external intersection.
    pub(crate) fn with_region(&self, region: Region) -> Strand {
        assert_eq!(region.depth(), self.depth());
        Strand { region, ..self.clone() }
    }

    /// Pins index i to value v, expanding all admissible prefixes (finite,
    /// since they are bounded above by v). Dead combinations are dropped.
    pub fn pin_var(&self, i: usize, v: i64) -> Vec<Strand> {
        if i == 0 {
            return self.pin_first(v).into_iter().collect();
        }
        let mut out = Vec::new();
        let low = self.region.lowers[0];
        for u in low..=(v - self.region.gaps[..i].iter().sum::<i64>()) {
            if let Some(s) = self.pin_first(u) {
                out.extend(s.pin_var(i - 1, v));
            }
        }
        out
    }

    /// Residue-level specialization: drops index i, keeping only tuples
    /// with that index in residue class r. The base exponent is left
    /// untouched, so the result is a residue-level column (its exponent
    /// map is only meaningful up to a monomial shift).
    pub(crate) fn pin_residue_class(&self, i: usize, r: u32) -> Option<Strand> {
        if !self.region.residues[i].contains_res(r) {
            return None;
        }
        let d = self.depth();
        let table = self.table.specialize(i, r);
        if table.is_zero() {
            return None;
        }
        let mut lowers = Vec::with_capacity(d - 1);
        let mut gaps = Vec::with_capacity(d.saturating_sub(2));
        let mut residues = Vec::with_capacity(d - 1);
        let mut terms = Vec::with_capacity(d - 1);
        for k in 0..d {
            if k == i {
                continue;
            }
            terms.push(self.terms[k]);
            lowers.push(self.region.lowers[k]);
            residues.push(self.region.residues[k]);
        }
        // gaps collapse to the minimum: residue columns are only evaluated
        // on residue combos, where chain gaps play no role
        for _ in 0..terms.len().saturating_sub(1) {
            gaps.push(1);
        }
        Some(Strand {
            p: self.p,
            base: self.base,
            dir: self.dir,
            terms,
            region: Region::new(lowers, gaps, residues),
            table,
        })
    }

    /// Base-p digits of |terms[i]|, least significant first.
    pub(crate) fn term_digits(&self, i: usize) -> Vec<u32> {
        let mut n = self.terms[i].unsigned_abs();
        let mut d = Vec::new();
        while n > 0 {
            d.push((n % self.p as u128) as u32);
            n /= self.p as u128;
        }
        d
    }

    /// Conservative positive bound C with |sum of tail terms| <= C * p^(-n_1).
    pub(crate) fn tail_bound(&self) -> i128 {
        self.terms.iter().map(|a| a.abs()).sum::<i128>().max(1)
    }

    /// All (exponent, coefficient) pairs with every index at most `cap`
    /// (brute-force view for tests and the window expander).
    pub fn enumerate(&self, cap: i64) -> Vec<(Exponent, FieldElem)> {
        if self.is_monomial() {
            return vec![(self.base, self.table.eval(&[]).clone())];
        }
        self.region
            .enumerate(cap)
            .into_iter()
            .filter_map(|t| {
                let c = self.coeff_at(&t);
                if c.is_zero() {
                    None
                } else {
                    Some((self.exponent_at(&t), c))
                }
            })
            .collect()
    }

    /// The prefix family of length `len`: the shape obtained by freezing the
    /// first `len` indices and letting the rest run off to infinity. Only
    /// live prefixes (extendable to a nonzero coefficient) are kept; the
    /// result carries a unit coefficient on live prefix residues.
    pub fn prefix_shape(&self, len: usize) -> Option<Strand> {
        assert!(len < self.depth());
        let p = self.p;
        let live: Vec<Vec<u32>> = self.live_combos();
        if live.is_empty() {
            return None;
        }
        let mut prefix_res = vec![ResidueSet::empty(p); len];
        for c in &live {
            for i in 0..len {
                prefix_res[i].insert(c[i]);
            }
        }
        let live_ref = &live;
        let table = ResidueTable::tabulate(p, len, |combo| {
            if live_ref.iter().any(|c| &c[..len] == combo) {
                FieldElem::one(p)
            } else {
                FieldElem::zero(p)
            }
        });
        let region = Region::new(
            self.region.lowers[..len].to_vec(),
            self.region.gaps[..len.saturating_sub(1)].to_vec(),
            prefix_res,
        );
        Some(Strand {
            p,
            base: self.base,
            dir: self.dir,
            terms: self.terms[..len].to_vec(),
            region,
            table,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SupBound {
    Attained(Exponent),
    Limit(Exponent),
    Infinite,
}

impl fmt::Debug for Strand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        <Self as fmt::Display>::fmt(self, f)
    }
}

impl fmt::Display for Strand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_monomial() {
            return write!(f, "{}*y^({})", self.table.eval(&[]), self.base);
        }
        for i in 0..self.depth() {
            if i == 0 {
                write!(f, "sum(n1>={}", self.region.lowers[0])?;
            } else {
                write!(f, "sum(n{}>=n{}+{}", i + 1, i, self.region.gaps[i - 1])?;
            }
            if !self.region.residues[i].is_full() {
                write!(f, "; n{} in {:?} mod p", i + 1, self.region.residues[i])?;
            }
            write!(f, ") ")?;
        }
        write!(f, "[{}]*y^({}", self.table.to_poly_string(), self.base)?;
        for (i, &a) in self.terms.iter().enumerate() {
            match self.dir {
                Dir::Desc => write!(f, " + {}/p^n{}", a, i + 1)?,
                Dir::Asc => write!(f, " + {}*p^n{}", a, i + 1)?,
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_region(p: u32, lowers: Vec<i64>, gaps: Vec<i64>) -> Region {
        let d = lowers.len();
        Region::new(lowers, gaps, vec![ResidueSet::full(p); d])
    }

    /// sum_{n>=1} y^(-1/p^n)
    fn alpha_strand(p: u32) -> Strand {
        Strand::make(
            p,
            Exponent::zero(p),
            Dir::Desc,
            vec![-1],
            full_region(p, vec![1], vec![]),
            ResidueTable::constant(p, 1, FieldElem::one(p)),
        )
        .unwrap()
        .pop()
        .unwrap()
    }

    #[test]
    fn p_reduction_shifts_indices() {
        // -2/2^n = -1/2^(n-1): for p=2 the term must reduce
        let s = Strand::make(
            2,
            Exponent::zero(2),
            Dir::Desc,
            vec![-2],
            full_region(2, vec![1], vec![]),
            ResidueTable::constant(2, 1, FieldElem::one(2)),
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].terms(), &[-1]);
        assert_eq!(s[0].region().lowers, vec![0]);
    }

    #[test]
    fn exponent_and_min() {
        let a = alpha_strand(3);
        assert_eq!(a.exponent_at(&[2]), Exponent::new(3, -1, 2), "q(2) = -1/9");
        let (min, t) = a.min_exponent().unwrap();
        assert_eq!(min, Exponent::new(3, -1, 1));
        assert_eq!(t, vec![1]);
    }

    #[test]
    fn separation_splits_close_pairs() {
        // p=2, terms -1,-3: width(3)=2 so gap 1 must split into a merged
        // strand plus a gap-2 remainder; compare against brute force.
        let strands = Strand::make(
            2,
            Exponent::zero(2),
            Dir::Desc,
            vec![-1, -3],
            full_region(2, vec![1, 2], vec![1]),
            ResidueTable::constant(2, 2, FieldElem::one(2)),
        )
        .unwrap();
        let mut raw: Vec<Exponent> = Vec::new();
        for n1 in 1..=6i64 {
            for n2 in (n1 + 1)..=6 {
                raw.push(
                    Exponent::integer(2, -1)
                        .mul_ppow(-n1)
                        .add(Exponent::integer(2, -3).mul_ppow(-n2)),
                );
            }
        }
        // every raw exponent appears exactly once across the split strands
        for q in &raw {
            let mut count = 0u32;
            for st in &strands {
                for (g, c) in st.enumerate(10) {
                    if g == *q {
                        assert_eq!(c, FieldElem::one(2));
                        count += 1;
                    }
                }
            }
            assert_eq!(count, 1, "exponent {q} covered wrongly");
        }
    }

    #[test]
    fn pin_first_gives_packets() {
        let a = alpha_strand(2);
        let m = a.pin_first(3).unwrap();
        assert!(m.is_monomial());
        assert_eq!(m.base(), Exponent::new(2, -1, 3));
        assert!(a.pin_first(0).is_none(), "below lower bound");
    }

    #[test]
    fn frobenius_scales_exponents() {
        let a = alpha_strand(3);
        let r = a.frobenius(-1); // p-th root
        assert_eq!(r.region().lowers, vec![2]);
        assert_eq!(r.exponent_at(&[2]), Exponent::new(3, -1, 2));
        let back = r.frobenius(1);
        assert_eq!(back.region().lowers, vec![1]);
    }

    #[test]
    fn residue_trim_drops_dead_entries() {
        let p = 3;
        // coefficient n mod 3, vanishing when n ≡ 0
        let t = ResidueTable::from_fn(p, 1, |c| FieldElem::from_int(p, c[0] as i64));
        let s = Strand::make(
            p,
            Exponent::zero(p),
            Dir::Desc,
            vec![-1],
            full_region(p, vec![1], vec![]),
            t,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert!(!s[0].region().residues[0].contains_res(0));
        assert_eq!(s[0].live_combos().len(), 2);
    }
}
