//! Exact arithmetic in k = algebraic closure of F_p, realized lazily as a
//! compatible lattice of finite fields F_{p^m}.
//!
//! Each degree m gets a canonical defining polynomial: the first monic
//! polynomial (in coefficient-lexicographic order) that is primitive and
//! norm-compatible with the polynomials already fixed for all proper
//! divisors of m. Norm-compatible embeddings `g_m -> g_n^((p^n-1)/(p^m-1))`
//! then commute automatically, so the lattice is coherent and canonical:
//! the polynomial for (p, m) is a pure function of (p, m).
//!
//! Elements auto-reduce to their minimal subfield, so equality is
//! structural.

use crate::error::{ClassError, Result};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

/// An element of F_{p^deg}, stored as coordinates over F_p relative to the
/// canonical generator of its minimal field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElem {
    p: u32,
    deg: u32,
    coords: Vec<u64>,
}

// ---------------------------------------------------------------------------
// lattice internals
// ---------------------------------------------------------------------------

struct Level {
    m: u32,
    /// x^m = red[0] + red[1] x + ... + red[m-1] x^(m-1)
    red: Vec<u64>,
    /// images of the basis 1, g, ..., g^(m-1) under x -> x^p
    frob_basis: Vec<Vec<u64>>,
    /// per super-degree n: images in level n of 1, g_m, ..., g_m^(m-1)
    embeddings: RwLock<HashMap<u32, Arc<Vec<Vec<u64>>>>>,
}

struct Lattice {
    p: u32,
    levels: RwLock<HashMap<u32, Arc<Level>>>,
}

static REGISTRY: OnceLock<RwLock<HashMap<u32, Arc<Lattice>>>> = OnceLock::new();

fn lattice(p: u32) -> Arc<Lattice> {
    let reg = REGISTRY.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(l) = reg.read().unwrap().get(&p) {
        return l.clone();
    }
    let mut w = reg.write().unwrap();
    w.entry(p)
        .or_insert_with(|| Arc::new(Lattice { p, levels: RwLock::new(HashMap::new()) }))
        .clone()
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Asserts that p is prime; the whole engine is parametrized by it.
pub fn check_prime(p: u32) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(ClassError::Precondition(format!("{p} is not prime")))
    }
}

fn prime_factors(mut n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// dense polynomial arithmetic over F_p, coefficients little-endian
fn poly_mul_mod(p: u64, a: &[u64], b: &[u64], red: &[u64]) -> Vec<u64> {
    let m = red.len();
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ai * bj) % p;
        }
    }
    // reduce x^k for k >= m using x^m = red
    for k in (m..prod.len()).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for (j, &rj) in red.iter().enumerate() {
            prod[k - m + j] = (prod[k - m + j] + c * rj) % p;
        }
    }
    prod.truncate(m);
    prod.resize(m.max(1), 0);
    prod
}

fn poly_pow_mod(p: u64, a: &[u64], mut e: u128, red: &[u64]) -> Vec<u64> {
    let m = red.len();
    let mut base = a.to_vec();
    let mut acc = vec![0u64; m];
    acc[0] = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mul_mod(p, &acc, &base, red);
        }
        base = poly_mul_mod(p, &base, &base, red);
        e >>= 1;
    }
    acc
}

fn is_irreducible(p: u64, f_red: &[u64]) -> bool {
    // f is irreducible of degree m iff x^(p^m) = x mod f and
    // gcd-style check: x^(p^(m/q)) != x for prime divisors q of m.
    let m = f_red.len() as u32;
    let x = {
        let mut v = vec![0u64; f_red.len()];
        if v.len() > 1 {
            v[1] = 1;
        } else {
            // degree 1: x reduces to red[0]
            v[0] = f_red[0];
        }
        v
    };
    let mut xp = x.clone();
    let mut powers = Vec::with_capacity(m as usize);
    for _ in 0..m {
        xp = poly_pow_mod(p, &xp, p as u128, f_red);
        powers.push(xp.clone());
    }
    if powers[m as usize - 1] != x {
        return false;
    }
    for q in prime_factors(m as u128) {
        let idx = (m as u128 / q) as usize;
        if powers[idx - 1] == x {
            return false;
        }
    }
    true
}

fn is_primitive_root_x(p: u64, f_red: &[u64]) -> bool {
    let m = f_red.len() as u32;
    let order: u128 = (p as u128).pow(m) - 1;
    let x = {
        let mut v = vec![0u64; f_red.len().max(1)];
        if v.len() > 1 {
            v[1] = 1;
        } else {
            v[0] = f_red[0];
        }
        v
    };
    let one = {
        let mut v = vec![0u64; f_red.len().max(1)];
        v[0] = 1;
        v
    };
    // exact order p^m - 1; together with squarefreeness this forces
    // irreducibility, since a proper factorization caps the unit order below
    if poly_pow_mod(p, &x, order, f_red) != one {
        return false;
    }
    for q in prime_factors(order) {
        if poly_pow_mod(p, &x, order / q, f_red) == one {
            return false;
        }
    }
    true
}

impl Lattice {
    fn level(&self, m: u32) -> Arc<Level> {
        if let Some(l) = self.levels.read().unwrap().get(&m) {
            return l.clone();
        }
        // build all proper divisors first so the defining polynomial is a
        // pure function of (p, m)
        let divisors: Vec<u32> = (1..m).filter(|d| m % d == 0).collect();
        for &d in &divisors {
            self.level(d);
        }
        let lvl = Arc::new(self.build_level(m));
        let mut w = self.levels.write().unwrap();
        w.entry(m).or_insert(lvl).clone()
    }

    fn build_level(&self, m: u32) -> Level {
        let p = self.p as u64;
        if m == 1 {
            // canonical generator of F_p^* = smallest primitive root
            let gamma = (1..p)
                .find(|&g| {
                    prime_factors((p - 1) as u128)
                        .iter()
                        .all(|&q| pow_mod_u64(p, g, ((p - 1) as u128 / q) as u64) != 1)
                })
                .unwrap_or(1);
            let red = vec![gamma % p];
            let frob_basis = vec![vec![1u64]];
            return Level { m: 1, red, frob_basis, embeddings: RwLock::new(HashMap::new()) };
        }
        let maximal_subs: Vec<u32> = prime_factors(m as u128)
            .iter()
            .map(|&q| m / q as u32)
            .collect();
        let order: u128 = (p as u128).pow(m) - 1;
        // scan monic candidates x^m - (c_{m-1} x^{m-1} + ... + c_0) in
        // lexicographic order of (c_0, ..., c_{m-1})
        let mut red = vec![0u64; m as usize];
        'scan: loop {
            // red[0] == 0 means x divides the candidate
            if red[0] != 0 && is_irreducible(p, &red) && is_primitive_root_x(p, &red) {
                let mut ok = true;
                for &d in &maximal_subs {
                    let sub = self.levels.read().unwrap().get(&d).unwrap().clone();
                    let n_exp = order / ((p as u128).pow(d) - 1);
                    let x = {
                        let mut v = vec![0u64; m as usize];
                        v[1] = 1;
                        v
                    };
                    let g_img = poly_pow_mod(p, &x, n_exp, &red);
                    // evaluate the degree-d defining polynomial at g_img:
                    // g_img^d - sub.red(g_img) must vanish
                    let lhs = poly_pow_mod(p, &g_img, d as u128, &red);
                    let mut rhs = vec![0u64; m as usize];
                    let mut pow = {
                        let mut v = vec![0u64; m as usize];
                        v[0] = 1;
                        v
                    };
                    for &c in sub.red.iter() {
                        for (r, &pw) in rhs.iter_mut().zip(pow.iter()) {
                            *r = (*r + c * pw) % p;
                        }
                        pow = poly_mul_mod(p, &pow, &g_img, &red);
                    }
                    if lhs != rhs {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    break 'scan;
                }
            }
            // increment candidate
            let mut i = 0usize;
            loop {
                if i == m as usize {
                    panic!("no compatible defining polynomial of degree {m} over F_{p} found");
                }
                red[i] += 1;
                if red[i] < p {
                    break;
                }
                red[i] = 0;
                i += 1;
            }
        }
        let frob_basis = {
            let mut out = Vec::with_capacity(m as usize);
            let mut g_i = vec![0u64; m as usize];
            g_i[0] = 1;
            let x = {
                let mut v = vec![0u64; m as usize];
                v[1] = 1;
                v
            };
            for i in 0..m as usize {
                out.push(poly_pow_mod(p, &g_i, p as u128, &red));
                if i + 1 < m as usize {
                    g_i = poly_mul_mod(p, &g_i, &x, &red);
                }
            }
            out
        };
        Level { m, red, frob_basis, embeddings: RwLock::new(HashMap::new()) }
    }

    /// Basis images of level m inside level n (m | n).
    fn embedding(&self, m: u32, n: u32) -> Arc<Vec<Vec<u64>>> {
        assert!(n % m == 0);
        let src = self.level(m);
        if let Some(e) = src.embeddings.read().unwrap().get(&n) {
            return e.clone();
        }
        let p = self.p as u64;
        let dst = self.level(n);
        let imgs = if m == n {
            let mut out = Vec::with_capacity(m as usize);
            for i in 0..m as usize {
                let mut v = vec![0u64; m as usize];
                v[i] = 1;
                out.push(v);
            }
            out
        } else {
            let exp = ((p as u128).pow(n) - 1) / ((p as u128).pow(m) - 1);
            let x = {
                let mut v = vec![0u64; n as usize];
                v[1] = 1;
                v
            };
            let g_img = if m == 1 {
                // the generator of F_p is the primitive root gamma = red of level 1
                let gamma = self.level(1).red[0];
                let mut v = vec![0u64; n as usize];
                v[0] = gamma;
                v
            } else {
                poly_pow_mod(p, &x, exp, &dst.red)
            };
            let mut out = Vec::with_capacity(m as usize);
            let mut acc = vec![0u64; n as usize];
            acc[0] = 1;
            for i in 0..m as usize {
                out.push(acc.clone());
                if i + 1 < m as usize {
                    acc = poly_mul_mod(p, &acc, &g_img, &dst.red);
                }
            }
            out
        };
        let arc = Arc::new(imgs);
        src.embeddings.write().unwrap().insert(n, arc.clone());
        arc
    }
}

fn pow_mod_u64(p: u64, mut b: u64, mut e: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// element API
// ---------------------------------------------------------------------------

impl FieldElem {
    pub fn zero(p: u32) -> Self {
        FieldElem { p, deg: 1, coords: vec![0] }
    }

    pub fn one(p: u32) -> Self {
        FieldElem { p, deg: 1, coords: vec![1] }
    }

    pub fn from_int(p: u32, n: i64) -> Self {
        let r = n.rem_euclid(p as i64) as u64;
        FieldElem { p, deg: 1, coords: vec![r] }
    }

    /// The canonical generator of F_{p^m}.
    pub fn generator(p: u32, m: u32) -> Self {
        if m == 1 {
            let gamma = lattice(p).level(1).red[0];
            return FieldElem { p, deg: 1, coords: vec![gamma] };
        }
        let mut coords = vec![0u64; m as usize];
        coords[1] = 1;
        FieldElem { p, deg: m, coords }.reduced()
    }

    /// Builds an element from coordinates in F_{p^m}.
    pub fn from_coords(p: u32, m: u32, coords: Vec<u64>) -> Self {
        assert_eq!(coords.len(), m as usize);
        let coords = coords.into_iter().map(|c| c % p as u64).collect();
        FieldElem { p, deg: m, coords }.reduced()
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Degree of the minimal field containing the element.
    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Is this element in the prime field? If so return its residue.
    pub fn as_prime_int(&self) -> Option<u64> {
        if self.deg == 1 {
            Some(self.coords[0])
        } else {
            None
        }
    }

    fn lift_to(&self, n: u32) -> Vec<u64> {
        if self.deg == n {
            return self.coords.clone();
        }
        let lat = lattice(self.p);
        let emb = lat.embedding(self.deg, n);
        let p = self.p as u64;
        let mut out = vec![0u64; n as usize];
        for (i, &c) in self.coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (o, &e) in out.iter_mut().zip(emb[i].iter()) {
                *o = (*o + c * e) % p;
            }
        }
        out
    }

    /// Reduce to the minimal subfield.
    fn reduced(self) -> Self {
        let p = self.p;
        let n = self.deg;
        if self.is_zero() {
            return FieldElem::zero(p);
        }
        if n == 1 {
            return self;
        }
        let lat = lattice(p);
        let lvl = lat.level(n);
        // minimal d | n with x^(p^d) == x
        let mut min_d = n;
        for d in 1..n {
            if n % d != 0 {
                continue;
            }
            let mut f = self.coords.clone();
            for _ in 0..d {
                f = apply_frob(p as u64, &lvl.frob_basis, &f);
            }
            if f == self.coords {
                min_d = d;
                break;
            }
        }
        if min_d == n {
            return self;
        }
        // solve for coordinates over the subfield basis images
        let emb = lat.embedding(min_d, n);
        let sol = solve_coords(p as u64, &emb, &self.coords)
            .expect("element fixed by Frobenius^d must lie in the subfield");
        FieldElem { p, deg: min_d, coords: sol }
    }

    fn binop(&self, other: &Self, f: impl Fn(u64, u64, u64) -> u64) -> Self {
        assert_eq!(self.p, other.p, "mixed characteristics");
        let n = lcm(self.deg, other.deg);
        let a = self.lift_to(n);
        let b = other.lift_to(n);
        let p = self.p as u64;
        let coords = a.iter().zip(b.iter()).map(|(&x, &y)| f(p, x, y)).collect();
        FieldElem { p: self.p, deg: n, coords }.reduced()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.binop(other, |p, x, y| (x + y) % p)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.binop(other, |p, x, y| (x + p - y) % p)
    }

    pub fn neg(&self) -> Self {
        let p = self.p as u64;
        FieldElem {
            p: self.p,
            deg: self.deg,
            coords: self.coords.iter().map(|&c| (p - c) % p).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "mixed characteristics");
        let n = lcm(self.deg, other.deg);
        let a = self.lift_to(n);
        let b = other.lift_to(n);
        let lat = lattice(self.p);
        let lvl = lat.level(n);
        let coords = poly_mul_mod(self.p as u64, &a, &b, &lvl.red);
        FieldElem { p: self.p, deg: n, coords }.reduced()
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(ClassError::DivisionByZero);
        }
        let n = self.deg;
        let lat = lattice(self.p);
        let lvl = lat.level(n);
        let order = (self.p as u128).pow(n) - 1;
        let coords = poly_pow_mod(self.p as u64, &self.coords, order - 1, &lvl.red);
        Ok(FieldElem { p: self.p, deg: n, coords }.reduced())
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: u64) -> Self {
        let lat = lattice(self.p);
        let lvl = lat.level(self.deg);
        let coords = poly_pow_mod(self.p as u64, &self.coords, e as u128, &lvl.red);
        FieldElem { p: self.p, deg: self.deg, coords }.reduced()
    }

    /// `a^(p^k)`; k may be negative (inverse Frobenius, exact since the
    /// closure is perfect).
    pub fn frobenius(&self, k: i64) -> Self {
        let m = self.deg as i64;
        let k = k.rem_euclid(m) as u32;
        if k == 0 {
            return self.clone();
        }
        let lat = lattice(self.p);
        let lvl = lat.level(self.deg);
        let mut c = self.coords.clone();
        for _ in 0..k {
            c = apply_frob(self.p as u64, &lvl.frob_basis, &c);
        }
        FieldElem { p: self.p, deg: self.deg, coords: c }
    }

    /// Absolute trace down to F_p.
    pub fn trace_to_prime(&self) -> Self {
        let mut acc = FieldElem::zero(self.p);
        let mut cur = self.clone();
        for _ in 0..self.deg {
            acc = acc.add(&cur);
            cur = cur.frobenius(1);
        }
        acc
    }

    /// A root c of x^p - x = a; the full root set is c + F_p. Returns the
    /// root with lexicographically least coordinate vector (computed in the
    /// field where the roots live), for determinism.
    pub fn as_root_const(&self) -> Self {
        let p = self.p;
        let tr = self.trace_to_prime();
        let target_deg = if tr.is_zero() { self.deg } else { self.deg * p };
        let lat = lattice(p);
        let lvl = lat.level(target_deg);
        let a = self.lift_to(target_deg);
        // solve (F - I) x = a over F_p
        let n = target_deg as usize;
        let pp = p as u64;
        let mut mat: Vec<Vec<u64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = vec![0u64; n];
            e[i] = 1;
            let mut col = apply_frob(pp, &lvl.frob_basis, &e);
            col[i] = (col[i] + pp - 1) % pp;
            mat.push(col);
        }
        let x0 = solve_coords(pp, &mat, &a).expect("AS equation is solvable in the closure");
        // kernel of (F - I) is F_p * 1: pick least of x0 + c*1
        let mut best: Option<Vec<u64>> = None;
        for c in 0..pp {
            let mut cand = x0.clone();
            cand[0] = (cand[0] + c) % pp;
            if best.as_ref().map_or(true, |b| cand < *b) {
                best = Some(cand);
            }
        }
        FieldElem { p, deg: target_deg, coords: best.unwrap() }.reduced()
    }

    /// Embeds into F_{p^n} and returns raw coordinates (n must be a multiple
    /// of the degree). Used by serialization.
    pub fn coords_in(&self, n: u32) -> Vec<u64> {
        assert!(n % self.deg == 0);
        self.lift_to(n)
    }
}

fn apply_frob(p: u64, frob_basis: &[Vec<u64>], coords: &[u64]) -> Vec<u64> {
    let n = coords.len();
    let mut out = vec![0u64; n];
    for (i, &c) in coords.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for (o, &f) in out.iter_mut().zip(frob_basis[i].iter()) {
            *o = (*o + c * f) % p;
        }
    }
    out
}

/// Solve `cols * x = target` over F_p where `cols[i]` is the i-th column.
fn solve_coords(p: u64, cols: &[Vec<u64>], target: &[u64]) -> Option<Vec<u64>> {
    let rows = target.len();
    let ncols = cols.len();
    let mut aug: Vec<Vec<u64>> = (0..rows)
        .map(|r| {
            let mut row: Vec<u64> = (0..ncols).map(|c| cols[c][r]).collect();
            row.push(target[r]);
            row
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..ncols {
        let piv = (row..rows).find(|&r| aug[r][col] != 0);
        let Some(piv) = piv else { continue };
        aug.swap(row, piv);
        let inv = pow_mod_u64(p, aug[row][col], p - 2);
        for c in col..=ncols {
            aug[row][c] = aug[row][c] * inv % p;
        }
        for r in 0..rows {
            if r != row && aug[r][col] != 0 {
                let f = aug[r][col];
                for c in col..=ncols {
                    aug[r][c] = (aug[r][c] + (p - f) * aug[row][c]) % p;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    // consistency
    for r in row..rows {
        if aug[r][ncols] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; ncols];
    for (r, &c) in pivot_cols.iter().enumerate() {
        x[c] = aug[r][ncols];
    }
    Some(x)
}

fn lcm(a: u32, b: u32) -> u32 {
    let gcd = {
        let (mut x, mut y) = (a, b);
        while y != 0 {
            let t = x % y;
            x = y;
            y = t;
        }
        x
    };
    a / gcd * b
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        <Self as fmt::Display>::fmt(self, f)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deg == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        write!(f, "[")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]@F({}^{})", self.p, self.deg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_multiplication_table() {
        // brute-force check of F_4: g*g = g+1 for the canonical generator
        let g = FieldElem::generator(2, 2);
        let g2 = g.mul(&g);
        let expected = g.add(&FieldElem::one(2));
        assert_eq!(g2, expected);
    }

    #[test]
    fn characteristic_addition() {
        for p in [2u32, 3, 5] {
            let a = FieldElem::one(p);
            let b = FieldElem::from_int(p, p as i64 - 1);
            assert!(a.add(&b).is_zero());
        }
    }

    #[test]
    fn inverse_law() {
        let g = FieldElem::generator(3, 2);
        let x = g.add(&FieldElem::one(3));
        assert_eq!(x.mul(&x.inv().unwrap()), FieldElem::one(3));
        assert!(FieldElem::zero(3).inv().is_err());
    }

    #[test]
    fn frobenius_round_trips() {
        let g = FieldElem::generator(2, 2);
        assert_eq!(g.frobenius(2), g, "g^4 = g in F_4");
        assert_eq!(g.frobenius(1).frobenius(-1), g);
        let c = FieldElem::from_int(5, 3);
        assert_eq!(c.frobenius(1), c, "Fermat on the prime field");
        let h = FieldElem::generator(3, 4);
        assert_eq!(h.frobenius(0), h);
        assert_eq!(h.frobenius(3).frobenius(-3), h);
    }

    #[test]
    fn lattice_coherence() {
        // embed F_4 -> F_16 -> F_64... via element ops: composite embeddings
        // agree because arithmetic reduces to minimal fields. Check a
        // diamond: x in F_4, multiply by 1 of F_16 and of F_64 and compare.
        let g = FieldElem::generator(2, 2);
        let a = g.add(&FieldElem::generator(2, 4)); // lives in F_16
        let b = a.sub(&FieldElem::generator(2, 4)); // back to F_4
        assert_eq!(b, g);
        let c = g.add(&FieldElem::generator(2, 6)); // forces lcm(2,6)=6
        let d = c.sub(&FieldElem::generator(2, 6));
        assert_eq!(d, g);
    }

    #[test]
    fn as_root_const_props() {
        // p=2: root of x^2+x=1 lies in F_4
        let c = FieldElem::one(2).as_root_const();
        assert_eq!(c.degree(), 2);
        assert_eq!(c.frobenius(1).sub(&c), FieldElem::one(2));
        // zero: root set is F_p, least root is 0
        assert!(FieldElem::zero(3).as_root_const().is_zero());
        // random-ish elements across fields
        for p in [2u32, 3, 5] {
            for m in [1u32, 2] {
                let g = FieldElem::generator(p, m);
                let mut x = g.clone();
                for _ in 0..5 {
                    let c = x.as_root_const();
                    assert_eq!(c.frobenius(1).sub(&c), x, "AS(as_root_const(a)) = a");
                    x = x.mul(&g).add(&FieldElem::one(p));
                }
            }
        }
    }

    #[test]
    fn field_axioms_random_triples() {
        let g = FieldElem::generator(5, 2);
        let mut xs = vec![FieldElem::one(5)];
        for i in 1..6 {
            xs.push(xs[i - 1].mul(&g).add(&FieldElem::from_int(5, i as i64)));
        }
        for a in &xs {
            for b in &xs {
                for c in &xs {
                    assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
                    assert_eq!(a.mul(b).mul(c), a.mul(&b.mul(c)));
                }
            }
        }
    }

    #[test]
    fn minimal_field_reduction() {
        // (g + 1) - g must collapse from F_4 representation to F_2
        let g = FieldElem::generator(2, 2);
        let x = g.add(&FieldElem::one(2)).sub(&g);
        assert_eq!(x.degree(), 1);
        assert_eq!(x, FieldElem::one(2));
    }
}
