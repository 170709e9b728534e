//! Coefficient functions of strands: maps (Z/p)^d -> k, stored as dense
//! tables. These are exactly the reduced polynomials over k in the index
//! residues (partial degree < p), and the table form is canonical.

use crate::coeff::FieldElem;
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct ResidueTable {
    p: u32,
    arity: usize,
    vals: Vec<FieldElem>, // length p^arity; index = r1 + r2*p + ...
}

impl ResidueTable {
    pub fn constant(p: u32, arity: usize, v: FieldElem) -> Self {
        let n = (p as usize).pow(arity as u32);
        ResidueTable { p, arity, vals: vec![v; n] }
    }

    pub fn from_fn(p: u32, arity: usize, f: impl Fn(&[u32]) -> FieldElem) -> Self {
        let n = (p as usize).pow(arity as u32);
        let mut vals = Vec::with_capacity(n);
        let mut combo = vec![0u32; arity];
        for i in 0..n {
            vals.push(f(&combo));
            let _ = i;
            // increment
            for c in combo.iter_mut() {
                *c += 1;
                if *c < p {
                    break;
                }
                *c = 0;
            }
        }
        ResidueTable { p, arity, vals }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn index(&self, combo: &[u32]) -> usize {
        debug_assert_eq!(combo.len(), self.arity);
        let mut idx = 0usize;
        for &r in combo.iter().rev() {
            idx = idx * self.p as usize + r as usize;
        }
        idx
    }

    pub fn eval(&self, combo: &[u32]) -> &FieldElem {
        &self.vals[self.index(combo)]
    }

    pub fn set(&mut self, combo: &[u32], v: FieldElem) {
        let i = self.index(combo);
        self.vals[i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.vals.iter().all(|v| v.is_zero())
    }

    pub fn map(&self, f: impl Fn(&FieldElem) -> FieldElem) -> Self {
        ResidueTable {
            p: self.p,
            arity: self.arity,
            vals: self.vals.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElem) -> Self {
        self.map(|v| v.mul(c))
    }

    pub fn neg(&self) -> Self {
        self.map(|v| v.neg())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity);
        ResidueTable {
            p: self.p,
            arity: self.arity,
            vals: self
                .vals
                .iter()
                .zip(other.vals.iter())
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    /// Iterates all residue combos.
    pub fn combos(p: u32, arity: usize) -> impl Iterator<Item = Vec<u32>> {
        let n = (p as usize).pow(arity as u32);
        (0..n).map(move |mut i| {
            let mut combo = vec![0u32; arity];
            for c in combo.iter_mut() {
                *c = (i % p as usize) as u32;
                i /= p as usize;
            }
            combo
        })
    }

    /// New table of given arity where entry at `combo` is
    /// `f(combo)`; helper for re-indexing operations.
    pub fn tabulate(p: u32, arity: usize, f: impl Fn(&[u32]) -> FieldElem) -> Self {
        Self::from_fn(p, arity, f)
    }

    /// Shifts variable `var` by `delta`: new(r) = old(r with r[var] -> r[var]+delta).
    pub fn shift_var(&self, var: usize, delta: i64) -> Self {
        let p = self.p;
        let d = delta.rem_euclid(p as i64) as u32;
        Self::tabulate(p, self.arity, |combo| {
            let mut c = combo.to_vec();
            c[var] = (c[var] + d) % p;
            self.eval(&c).clone()
        })
    }

    /// Fixes variable `var` to residue `r`, dropping it.
    pub fn specialize(&self, var: usize, r: u32) -> Self {
        let p = self.p;
        Self::tabulate(p, self.arity - 1, |combo| {
            let mut full = Vec::with_capacity(self.arity);
            full.extend_from_slice(&combo[..var]);
            full.push(r % p);
            full.extend_from_slice(&combo[var..]);
            self.eval(&full).clone()
        })
    }

    /// Inserts a fresh variable at position `var` (the table is constant in it).
    pub fn insert_var(&self, var: usize) -> Self {
        let p = self.p;
        Self::tabulate(p, self.arity + 1, |combo| {
            let mut c = Vec::with_capacity(self.arity);
            c.extend_from_slice(&combo[..var]);
            c.extend_from_slice(&combo[var + 1..]);
            self.eval(&c).clone()
        })
    }

    /// Removes variable `var` from a table that is constant in it.
    pub fn drop_var(&self, var: usize) -> Self {
        let p = self.p;
        Self::tabulate(p, self.arity - 1, |combo| {
            let mut full = Vec::with_capacity(self.arity);
            full.extend_from_slice(&combo[..var]);
            full.push(0);
            full.extend_from_slice(&combo[var..]);
            self.eval(&full).clone()
        })
    }

    pub fn is_constant_in(&self, var: usize) -> bool {
        let p = self.p;
        Self::combos(p, self.arity).all(|combo| {
            let mut c = combo.clone();
            c[var] = 0;
            self.eval(&combo) == self.eval(&c)
        })
    }

    /// Pointwise product where `self` reads variables through `self_map` and
    /// `other` through `other_map` (maps from own var index to merged var
    /// index). Result has `arity` variables.
    pub fn merged_product(
        &self,
        other: &Self,
        self_map: &[usize],
        other_map: &[usize],
        arity: usize,
    ) -> Self {
        let p = self.p;
        Self::tabulate(p, arity, |combo| {
            let a: Vec<u32> = self_map.iter().map(|&i| combo[i]).collect();
            let b: Vec<u32> = other_map.iter().map(|&i| combo[i]).collect();
            self.eval(&a).mul(other.eval(&b))
        })
    }

    /// Renders the table as a reduced polynomial in r1..rd via Lagrange
    /// interpolation over each variable; used for display and JSON.
    pub fn to_poly_string(&self) -> String {
        let p = self.p;
        if self.arity == 0 {
            return format!("{}", self.vals[0]);
        }
        // Solve V * c = vals where V[(a),(e)] = prod a_i^{e_i}
        let n = self.vals.len();
        let combos: Vec<Vec<u32>> = Self::combos(p, self.arity).collect();
        let mut matrix: Vec<Vec<FieldElem>> = Vec::with_capacity(n);
        for a in &combos {
            let mut row = Vec::with_capacity(n);
            for e in &combos {
                let mut v = FieldElem::one(p);
                for (ai, ei) in a.iter().zip(e.iter()) {
                    let base = FieldElem::from_int(p, *ai as i64);
                    v = v.mul(&base.pow(*ei as u64));
                }
                row.push(v);
            }
            matrix.push(row);
        }
        let sol = solve_field(p, &matrix, &self.vals);
        let mut parts = Vec::new();
        for (e, c) in combos.iter().zip(sol.iter()) {
            if c.is_zero() {
                continue;
            }
            let mut term = String::new();
            let one = FieldElem::one(p);
            let is_const = e.iter().all(|&x| x == 0);
            if *c != one || is_const {
                term.push_str(&format!("{c}"));
            }
            for (i, &ei) in e.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                if !term.is_empty() {
                    term.push('*');
                }
                if ei == 1 {
                    term.push_str(&format!("r{}", i + 1));
                } else {
                    term.push_str(&format!("r{}^{}", i + 1, ei));
                }
            }
            parts.push(term);
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

/// Dense Gaussian elimination over k (small systems only).
pub fn solve_field(p: u32, matrix: &[Vec<FieldElem>], rhs: &[FieldElem]) -> Vec<FieldElem> {
    let n = rhs.len();
    let m = matrix[0].len();
    let mut aug: Vec<Vec<FieldElem>> = matrix
        .iter()
        .zip(rhs.iter())
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let mut row = 0usize;
    let mut pivots = Vec::new();
    for col in 0..m {
        let Some(piv) = (row..n).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(row, piv);
        let inv = aug[row][col].inv().unwrap();
        for c in col..=m {
            aug[row][c] = aug[row][c].mul(&inv);
        }
        for r in 0..n {
            if r != row && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for c in col..=m {
                    let t = aug[row][c].mul(&f);
                    aug[r][c] = aug[r][c].sub(&t);
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    let mut x = vec![FieldElem::zero(p); m];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][m].clone();
    }
    x
}

impl fmt::Debug for ResidueTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_roundtrip() {
        let p = 3;
        // f(r) = r^2 + 1
        let t = ResidueTable::from_fn(p, 1, |c| {
            FieldElem::from_int(p, (c[0] * c[0] + 1) as i64)
        });
        assert_eq!(*t.eval(&[2]), FieldElem::from_int(p, 5));
        let s = t.to_poly_string();
        assert!(s.contains("r1"), "{s}");
    }

    #[test]
    fn specialization_and_shift() {
        let p = 3;
        let t = ResidueTable::from_fn(p, 2, |c| FieldElem::from_int(p, (c[0] + 2 * c[1]) as i64));
        let s = t.specialize(0, 1);
        assert_eq!(*s.eval(&[2]), FieldElem::from_int(p, 5));
        let sh = t.shift_var(1, 1);
        assert_eq!(*sh.eval(&[1, 0]), FieldElem::from_int(p, 3));
    }
}
