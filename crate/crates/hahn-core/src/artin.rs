//! The Artin-Schreier operator on the series class: explicit roots,
//! canonical reduction modulo AS of the base field, and the F_p-linear
//! independence test behind compositum constructions.

use crate::analysis::{in_base_field, truncate, truncate_cut, Cut};
use crate::coeff::FieldElem;
use crate::error::{ClassError, Result};
use crate::exponent::Exponent;
use crate::series::FractalSeries;

/// a = negative part + constant + positive part, with disjoint supports.
pub struct SignSplit {
    pub negative: FractalSeries,
    pub constant: FieldElem,
    pub positive: FractalSeries,
}

pub fn sign_split(a: &FractalSeries) -> Result<SignSplit> {
    let p = a.p();
    let zero = Exponent::zero(p);
    let negative = truncate(a, zero)?;
    let upto = truncate_cut(a, &Cut::AbovePlus(zero))?;
    let constant = upto.sub(&negative)?.coefficient_at(zero)?;
    let positive = a.sub(&upto)?;
    Ok(SignSplit { negative, constant, positive })
}

/// AS(s) = s^p - s.
pub fn as_apply(s: &FractalSeries) -> Result<FractalSeries> {
    s.frobenius(1).sub(s)
}

/// An explicit root of AS(x) = a inside the class:
/// descending root sums for the negative part, a constant root for the
/// constant part, and a power family for the positive part. The full root
/// set is the result plus F_p.
pub fn as_root(a: &FractalSeries) -> Result<FractalSeries> {
    let p = a.p();
    let split = sign_split(a)?;
    let desc = split.negative.sum_root_powers(1, None)?;
    let c = FractalSeries::constant(p, &split.constant.as_root_const());
    let asc = split.positive.sum_frob_powers(0, None)?;
    desc.add(&c)?.sub(&asc)
}

/// Canonical representative of the class of a base-field element modulo
/// AS(K): negative exponents moved into the fundamental domain [-1, -1/p)
/// by AS-equivalences, the nonnegative part dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct ASClassRep {
    /// sorted by exponent; coefficients nonzero
    pub terms: Vec<(FieldElem, Exponent)>,
}

impl ASClassRep {
    pub fn is_trivial(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self
            .terms
            .iter()
            .map(|(c, q)| serde_json::json!({"coeff": format!("{c}"), "exponent": format!("{q}")}))
            .collect::<Vec<_>>())
    }
}

/// The fundamental-domain shift: the unique m with q p^(-m) in [-1, -1/p).
fn domain_shift(q: Exponent) -> i64 {
    debug_assert!(q.is_negative());
    let p = q.p();
    let lo = Exponent::integer(p, -1);
    let hi = Exponent::new(p, -1, 1);
    let mut m = 0i64;
    let mut cur = q;
    loop {
        if cur >= lo && cur < hi {
            return m;
        }
        if cur < lo {
            m += 1;
            cur = q.mul_ppow(-m);
        } else {
            m -= 1;
            cur = q.mul_ppow(-m);
        }
        if m.abs() > 4096 {
            unreachable!("fundamental domain search diverged for {q}");
        }
    }
}

/// Reduction of a base-field element with finite negative support modulo
/// AS(K); the element lies in AS(K) iff the representative is empty.
pub fn as_reduce_mod_k(a: &FractalSeries) -> Result<ASClassRep> {
    if !in_base_field(a) {
        return Err(ClassError::Precondition(
            "as_reduce_mod_k needs a base-field element".into(),
        ));
    }
    let p = a.p();
    let neg = truncate(a, Exponent::zero(p))?;
    // the nonnegative tail splits (residue field algebraically closed,
    // Henselian); the negative part of a base-field element is finite
    let mut acc: Vec<(FieldElem, Exponent)> = Vec::new();
    for st in neg.strands() {
        debug_assert!(st.is_monomial(), "negative part of a base-field element");
        let q = st.base();
        let lam = st.table().eval(&[]).clone();
        let m = domain_shift(q);
        let q_red = q.mul_ppow(-m);
        let c = lam.frobenius(-m);
        match acc.iter_mut().find(|(_, e)| *e == q_red) {
            Some((v, _)) => *v = v.add(&c),
            None => acc.push((c, q_red)),
        }
    }
    acc.retain(|(c, _)| !c.is_zero());
    acc.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(ASClassRep { terms: acc })
}

/// Constructive preimage: some t in K with AS(t) = a, available exactly
/// when the canonical representative of a is trivial.
pub fn as_preimage_in_k(a: &FractalSeries) -> Result<Option<FractalSeries>> {
    let rep = as_reduce_mod_k(a)?;
    if !rep.is_trivial() {
        return Ok(None);
    }
    let p = a.p();
    let split = sign_split(a)?;
    // chains lambda y^q -> lambda^(1/p^j) y^(q/p^j) stop at the fundamental
    // domain; the leftover domain terms cancel because the reduction is
    // trivial
    let mut t = FractalSeries::zero(p);
    for st in split.negative.strands() {
        let q = st.base();
        let lam = st.table().eval(&[]).clone();
        let m = domain_shift(q);
        for j in 1..=m {
            t = t.add(&FractalSeries::monomial(
                p,
                &lam.frobenius(-j),
                q.mul_ppow(-j),
            ))?;
        }
    }
    let c = FractalSeries::constant(p, &split.constant.as_root_const());
    let asc = split.positive.sum_frob_powers(0, None)?;
    let out = t.add(&c)?.sub(&asc)?;
    debug_assert!(as_apply(&out)?.equals(a)?);
    Ok(Some(out))
}

/// Outcome of the F_p-independence test on classes modulo AS(K).
pub enum Independence {
    Independent,
    /// coefficients of a vanishing combination, plus a shift t in K with
    /// `sum_i l_i a_i = AS(t)`
    Dependent { coeffs: Vec<u64>, shift: FractalSeries },
}

/// Are the images of the given base-field elements F_p-linearly
/// independent in K/AS(K)?
pub fn fp_independence(elems: &[FractalSeries]) -> Result<Independence> {
    assert!(!elems.is_empty());
    let p = elems[0].p();
    let reps: Vec<ASClassRep> = elems
        .iter()
        .map(as_reduce_mod_k)
        .collect::<Result<Vec<_>>>()?;
    // coordinates: per distinct exponent, the coefficient in k, flattened
    // over F_p in a common field
    let mut exps: Vec<Exponent> = Vec::new();
    for r in &reps {
        for (_, q) in &r.terms {
            if !exps.contains(q) {
                exps.push(*q);
            }
        }
    }
    exps.sort();
    let mut deg = 1u32;
    for r in &reps {
        for (c, _) in &r.terms {
            deg = lcm(deg, c.degree());
        }
    }
    let rows = exps.len() * deg as usize;
    let cols = elems.len();
    let mut matrix = vec![vec![0u64; cols]; rows];
    for (j, r) in reps.iter().enumerate() {
        for (c, q) in &r.terms {
            let i = exps.iter().position(|e| e == q).unwrap();
            for (k, coord) in c.coords_in(deg).iter().enumerate() {
                matrix[i * deg as usize + k][j] = *coord;
            }
        }
    }
    // kernel over F_p
    match kernel_vector(p as u64, &matrix) {
        None => Ok(Independence::Independent),
        Some(l) => {
            let mut combo = FractalSeries::zero(p);
            for (li, e) in l.iter().zip(elems.iter()) {
                combo = combo.add(&e.mul_monomial(
                    &FieldElem::from_int(p, *li as i64),
                    Exponent::zero(p),
                ))?;
            }
            let shift = as_preimage_in_k(&combo)?.ok_or_else(|| {
                ClassError::Precondition("kernel combination must lie in AS(K)".into())
            })?;
            Ok(Independence::Dependent { coeffs: l, shift })
        }
    }
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

/// A nonzero kernel vector of the column space, if any.
fn kernel_vector(p: u64, matrix: &[Vec<u64>]) -> Option<Vec<u64>> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<u64>> = matrix.to_vec();
    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut row = 0usize;
    for col in 0..cols {
        let piv = (row..rows).find(|&r| m[r][col] != 0);
        let Some(piv) = piv else { continue };
        m.swap(row, piv);
        let inv = mod_inv(p, m[row][col]);
        for c in 0..cols {
            m[row][c] = m[row][c] * inv % p;
        }
        for r in 0..rows {
            if r != row && m[r][col] != 0 {
                let f = m[r][col];
                for c in 0..cols {
                    m[r][c] = (m[r][c] + (p - f) * m[row][c]) % p;
                }
            }
        }
        pivot_of_col[col] = row;
        row += 1;
        if row == rows {
            break;
        }
    }
    let free = (0..cols).find(|&c| pivot_of_col[c] == usize::MAX)?;
    let mut v = vec![0u64; cols];
    v[free] = 1;
    for c in 0..cols {
        let r = pivot_of_col[c];
        if r != usize::MAX {
            v[c] = (p - m[r][free] % p) % p;
        }
    }
    Some(v)
}

fn mod_inv(p: u64, a: u64) -> u64 {
    // Fermat
    let mut acc = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{alpha, y_pow};

    #[test]
    fn as_root_of_y_inverse_is_alpha() {
        for p in [2u32, 3, 5] {
            let a = y_pow(p, Exponent::integer(p, -1));
            let root = as_root(&a).unwrap();
            assert!(root.equals(&alpha(p)).unwrap());
            assert!(as_apply(&root).unwrap().equals(&a).unwrap());
        }
    }

    #[test]
    fn as_root_exactness_corpus() {
        for p in [2u32, 3] {
            let al = alpha(p);
            let corpus = vec![
                y_pow(p, Exponent::integer(p, -1)),
                y_pow(p, Exponent::integer(p, -3)),
                al.mul_monomial(&FieldElem::one(p), Exponent::integer(p, -1)),
                al.clone(),
                al.mul(&al).unwrap(),
                y_pow(p, Exponent::integer(p, -1))
                    .add(&y_pow(p, Exponent::new(p, -1, 2)))
                    .unwrap(),
            ];
            for a in corpus {
                let root = as_root(&a).unwrap();
                assert!(
                    as_apply(&root).unwrap().equals(&a).unwrap(),
                    "AS(as_root(a)) = a failed at p={p} for {a}"
                );
                // the shifted roots work too
                let shifted = root.add(&FractalSeries::one(p)).unwrap();
                assert!(as_apply(&shifted).unwrap().equals(&a).unwrap());
            }
        }
    }

    #[test]
    fn as_root_with_positive_and_constant_parts() {
        let p = 3;
        // a = y^(-1) + 2 + y^2
        let a = y_pow(p, Exponent::integer(p, -1))
            .add(&FractalSeries::from_int(p, 2))
            .unwrap()
            .add(&y_pow(p, Exponent::integer(p, 2)))
            .unwrap();
        let root = as_root(&a).unwrap();
        assert!(as_apply(&root).unwrap().equals(&a).unwrap());
    }

    #[test]
    fn reduction_basics() {
        let p = 2;
        // y is nonnegative: trivial class
        assert!(as_reduce_mod_k(&y_pow(p, Exponent::integer(p, 1)))
            .unwrap()
            .is_trivial());
        // y^(-p) and y^(-1) have the same representative
        let r1 = as_reduce_mod_k(&y_pow(p, Exponent::integer(p, -(p as i128))))
            .unwrap();
        let r2 = as_reduce_mod_k(&y_pow(p, Exponent::integer(p, -1))).unwrap();
        assert_eq!(r1, r2);
        assert!(!r1.is_trivial());
    }

    #[test]
    fn reduction_constant_on_classes() {
        let p = 3;
        let a = y_pow(p, Exponent::integer(p, -2));
        let base = as_reduce_mod_k(&a).unwrap();
        // shift by AS(t) for a few finite-support t in K
        let shifts = vec![
            y_pow(p, Exponent::new(p, -1, 1)),
            y_pow(p, Exponent::integer(p, -1)).add(&y_pow(p, Exponent::integer(p, 2))).unwrap(),
            FractalSeries::from_int(p, 2),
        ];
        for t in shifts {
            let moved = a.add(&as_apply(&t).unwrap()).unwrap();
            assert_eq!(as_reduce_mod_k(&moved).unwrap(), base);
        }
    }

    #[test]
    fn independence_examples() {
        let p = 2;
        let one = y_pow(p, Exponent::integer(p, -1));
        let three = y_pow(p, Exponent::integer(p, -3));
        match fp_independence(&[one.clone(), three]).unwrap() {
            Independence::Independent => {}
            Independence::Dependent { .. } => panic!("y^-1, y^-3 must be independent"),
        }
        let yp = y_pow(p, Exponent::integer(p, -(p as i128)));
        match fp_independence(&[one.clone(), yp]).unwrap() {
            Independence::Independent => panic!("y^-1, y^-p are dependent"),
            Independence::Dependent { coeffs, shift } => {
                assert!(coeffs.iter().any(|&c| c != 0));
                // verify the witness identity sum l_i a_i = AS(shift)
                let mut combo = FractalSeries::zero(p);
                for (c, e) in coeffs.iter().zip([
                    y_pow(p, Exponent::integer(p, -1)),
                    y_pow(p, Exponent::integer(p, -(p as i128))),
                ]) {
                    combo = combo
                        .add(&e.mul_monomial(&FieldElem::from_int(p, *c as i64), Exponent::zero(p)))
                        .unwrap();
                }
                assert!(as_apply(&shift).unwrap().equals(&combo).unwrap());
            }
        }
        // trivially dependent duplicate
        match fp_independence(&[one.clone(), one]).unwrap() {
            Independence::Dependent { .. } => {}
            _ => panic!("duplicates are dependent"),
        }
    }

    #[test]
    fn all_generators_property() {
        // AS(l*alpha + t) lands in l*y^(-1) + AS(K) for l in F_p^*, t in K
        let p = 3;
        let al = alpha(p);
        let base = y_pow(p, Exponent::integer(p, -1));
        for l in 1..p as i64 {
            for t in [
                y_pow(p, Exponent::new(p, -1, 1)),
                y_pow(p, Exponent::integer(p, 1)),
            ] {
                let gen = al
                    .mul_monomial(&FieldElem::from_int(p, l), Exponent::zero(p))
                    .add(&t)
                    .unwrap();
                let diff = as_apply(&gen)
                    .unwrap()
                    .sub(&base.mul_monomial(&FieldElem::from_int(p, l), Exponent::zero(p)))
                    .unwrap();
                assert!(as_reduce_mod_k(&diff).unwrap().is_trivial());
            }
        }
    }
}
