//! Support-coincidence decision engine.
//!
//! Decides, for two normalized strands A and B, whether their exponent
//! families intersect, and if so rewrites the pair into support-disjoint
//! strands with summed coefficients. Everything runs on exact base-p digit
//! alignment: in separated form the fractional digits of an exponent are
//! the concatenated digit patterns of the geometric coefficients, so
//! coincidences force a rigid zipper of block alignments, plus finitely
//! many pinned cases near the bases.

use crate::error::{ClassError, Result};
use crate::exponent::Exponent;
use crate::region::Region;
use crate::strand::{Dir, Strand, SupBound};

/// One operation on a strand along a match branch. Replaying the program
/// reproduces the matched sub-strand; complementing it yields the rest.
/// Merge positions are absolute pair indices: strips only remove trailing
/// indices, so lower indices are stable across the recursion.
#[derive(Clone, Debug)]
enum Op {
    /// current first index pinned to this value
    PinFirst(i64),
    /// index pair (i, i+1) merged at this offset
    MergeAt(usize, i64),
}

#[derive(Clone, Debug, Default)]
struct Branch {
    a_ops: Vec<Op>,
    b_ops: Vec<Op>,
}

/// A coincidence family: `core_a` and `core_b` have equal depth, equal
/// terms and equal exponent maps; the solution set is the diagonal over
/// the intersection of their regions.
pub struct MatchFamily {
    pub core_a: Strand,
    pub core_b: Strand,
    branch: Branch,
}

const MAX_PIN_RANGE: i64 = 512;

/// All coincidence families between the supports of A and B (region level;
/// callers intersect with effective supports).
pub fn match_strands(a: &Strand, b: &Strand) -> Result<Vec<MatchFamily>> {
    let mut out = Vec::new();
    solve(a, b, Branch::default(), &mut out, 0)?;
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Mono,
    Desc,
    Asc,
}

fn kind(s: &Strand) -> Kind {
    if s.is_monomial() {
        Kind::Mono
    } else if s.dir() == Dir::Desc {
        Kind::Desc
    } else {
        Kind::Asc
    }
}

fn swap_branch(b: Branch) -> Branch {
    Branch { a_ops: b.b_ops, b_ops: b.a_ops }
}

fn solve(
    a: &Strand,
    b: &Strand,
    branch: Branch,
    out: &mut Vec<MatchFamily>,
    guard: u32,
) -> Result<()> {
    if guard > 64 {
        return Err(ClassError::NotInClass(
            "support matching recursion exceeded budget".into(),
        ));
    }
    let delta = a.base().sub(b.base());
    match (kind(a), kind(b)) {
        (Kind::Mono, Kind::Mono) => {
            if delta.is_zero() {
                out.push(MatchFamily { core_a: a.clone(), core_b: b.clone(), branch });
            }
            Ok(())
        }
        (Kind::Asc, _) => solve_asc_left(a, b, branch, out, guard),
        (_, Kind::Asc) => {
            let mut swapped = Vec::new();
            solve_asc_left(b, a, swap_branch(branch), &mut swapped, guard)?;
            for fam in swapped {
                out.push(MatchFamily {
                    core_a: fam.core_b,
                    core_b: fam.core_a,
                    branch: swap_branch(fam.branch),
                });
            }
            Ok(())
        }
        (ka, kb) => {
            // descending / monomial combinations
            if delta.is_positive() {
                pin_desc_side(a, b, branch, out, guard, true, delta)
            } else if delta.is_negative() {
                pin_desc_side(a, b, branch, out, guard, false, delta.neg())
            } else {
                match (ka, kb) {
                    (Kind::Desc, Kind::Desc) => zipper(a, b, branch, out, guard),
                    // a positive tail cannot vanish
                    _ => Ok(()),
                }
            }
        }
    }
}

/// Left side ascending (depth 1): its term value is pinned by comparisons
/// against the other side's value range.
fn solve_asc_left(
    a: &Strand,
    b: &Strand,
    branch: Branch,
    out: &mut Vec<MatchFamily>,
    guard: u32,
) -> Result<()> {
    let p = a.p();
    let delta = a.base().sub(b.base());
    if kind(b) == Kind::Asc {
        if delta.is_zero() {
            if a.terms()[0] == b.terms()[0] {
                out.push(MatchFamily { core_a: a.clone(), core_b: b.clone(), branch });
            }
            return Ok(());
        }
        // a1 p^x - b1 p^y = -delta. If x < y the difference has p-adic
        // valuation x, so x = v_p(delta); mirror for x > y; for x = y the
        // valuation is x + v_p(a1 - b1). Duplicated point families are
        // harmless: the rewrite removes them from both sides.
        let v = delta.vp().unwrap();
        let mut xs = vec![v];
        if a.terms()[0] != b.terms()[0] {
            let e = Exponent::integer(a.p(), a.terms()[0] - b.terms()[0])
                .vp()
                .unwrap();
            xs.push(v - e);
        }
        for &x in &xs {
            if let Some(am) = a.pin_first(x) {
                let mut br = branch.clone();
                br.a_ops.push(Op::PinFirst(x));
                solve(&am, b, br, out, guard + 1)?;
            }
            if let Some(bm) = b.pin_first(x) {
                let mut br = branch.clone();
                br.b_ops.push(Op::PinFirst(x));
                solve(a, &bm, br, out, guard + 1)?;
            }
        }
        return Ok(());
    }
    // other side monomial or descending: its values are below sup(b)
    let lim = match b.sup() {
        SupBound::Attained(q) => q.add(Exponent::new(p, 1, 0)), // allow equality
        SupBound::Limit(q) => q,
        SupBound::Infinite => unreachable!("asc handled above"),
    };
    let bound = lim.sub(a.base());
    let mut x = a.region().lowers[0];
    let mut steps = 0;
    loop {
        let val = Exponent::integer(p, a.terms()[0]).mul_ppow(x);
        if val.cmp_exact(&bound) != std::cmp::Ordering::Less {
            break;
        }
        if let Some(am) = a.pin_first(x) {
            let mut br = branch.clone();
            br.a_ops.push(Op::PinFirst(x));
            solve(&am, b, br, out, guard + 1)?;
        }
        x += 1;
        steps += 1;
        if steps > MAX_PIN_RANGE {
            return Err(ClassError::NotInClass(
                "support matching pin range exceeded".into(),
            ));
        }
    }
    Ok(())
}

/// With delta = base_a - base_b > 0 the equation T_A - T_B = delta forces
/// the descending tail of A to exceed delta, which bounds its shallowest
/// index; `pin_a` selects the side playing the role of A.
fn pin_desc_side(
    a: &Strand,
    b: &Strand,
    branch: Branch,
    out: &mut Vec<MatchFamily>,
    guard: u32,
    pin_a: bool,
    delta_abs: Exponent,
) -> Result<()> {
    let side = if pin_a { a } else { b };
    if side.is_monomial() {
        return Ok(());
    }
    debug_assert_eq!(side.dir(), Dir::Desc);
    let p = side.p();
    let c = side.tail_bound();
    let mut x = side.region().lowers[0];
    let mut steps = 0;
    loop {
        // the tail satisfies T <= C p^(-x); solutions need T >= delta
        let cap = Exponent::integer(p, c).mul_ppow(-x);
        if cap.cmp_exact(&delta_abs) == std::cmp::Ordering::Less {
            break;
        }
        if let Some(s) = side.pin_first(x) {
            let mut br = branch.clone();
            if pin_a {
                br.a_ops.push(Op::PinFirst(x));
                solve(&s, b, br, out, guard + 1)?;
            } else {
                br.b_ops.push(Op::PinFirst(x));
                solve(a, &s, br, out, guard + 1)?;
            }
        }
        x += 1;
        steps += 1;
        if steps > MAX_PIN_RANGE {
            return Err(ClassError::NotInClass(
                "support matching pin range exceeded".into(),
            ));
        }
    }
    Ok(())
}

/// Both sides descending with equal bases: the deepest digit blocks must
/// align exactly, which either links the deepest indices or forces a
/// unique in-side merge when block widths differ.
fn zipper(
    a: &Strand,
    b: &Strand,
    branch: Branch,
    out: &mut Vec<MatchFamily>,
    guard: u32,
) -> Result<()> {
    let wa = a.term_digits(a.depth() - 1);
    let wb = b.term_digits(b.depth() - 1);
    use std::cmp::Ordering::*;
    match wa.len().cmp(&wb.len()) {
        Equal => {
            if wa != wb {
                return Ok(());
            }
            let a_inner = a.strip_last();
            let b_inner = b.strip_last();
            let mut inner = Vec::new();
            solve(&a_inner, &b_inner, branch, &mut inner, guard + 1)?;
            for fam in inner {
                let core_a = fam.core_a.attach_last(
                    *a.terms().last().unwrap(),
                    a.last_lower(),
                    a.last_gap(),
                    a.last_residues(),
                );
                let core_b = fam.core_b.attach_last(
                    *b.terms().last().unwrap(),
                    b.last_lower(),
                    b.last_gap(),
                    b.last_residues(),
                );
                out.push(MatchFamily { core_a, core_b, branch: fam.branch });
            }
            Ok(())
        }
        Less => {
            // A's deepest block is shorter: it must match the bottom of
            // B's, and A's next block is forced onto the first nonzero
            // leftover digit of B.
            if a.depth() < 2 || wa[..] != wb[..wa.len()] {
                return Ok(());
            }
            let Some(k0) = (wa.len()..wb.len()).find(|&k| wb[k] != 0) else {
                return Ok(());
            };
            if let Some(merged) = a.merge_last_pair(k0 as i64)? {
                let mut br = branch;
                br.a_ops.push(Op::MergeAt(a.depth() - 2, k0 as i64));
                solve(&merged, b, br, out, guard + 1)?;
            }
            Ok(())
        }
        Greater => {
            if b.depth() < 2 || wb[..] != wa[..wb.len()] {
                return Ok(());
            }
            let Some(k0) = (wb.len()..wa.len()).find(|&k| wa[k] != 0) else {
                return Ok(());
            };
            if let Some(merged) = b.merge_last_pair(k0 as i64)? {
                let mut br = branch;
                br.b_ops.push(Op::MergeAt(b.depth() - 2, k0 as i64));
                solve(a, &merged, br, out, guard + 1)?;
            }
            Ok(())
        }
    }
}

/// Replays a branch program on the original strand; pins and merges carry
/// exact coefficient tables, unlike the strip/attach geometry used during
/// matching.
fn replay(s: &Strand, ops: &[Op]) -> Result<Option<Strand>> {
    let mut cur = s.clone();
    for op in ops {
        match *op {
            Op::PinFirst(v) => match cur.pin_first(v) {
                Some(c) => cur = c,
                None => return Ok(None),
            },
            Op::MergeAt(i, t) => match cur.merge_middle_pair(i, t)? {
                Some(c) => cur = c,
                None => return Ok(None),
            },
        }
    }
    Ok(Some(cur))
}

// ---------------------------------------------------------------------------
// rewriting overlapping pairs
// ---------------------------------------------------------------------------

/// Result of resolving a strand pair: either certified disjoint on
/// effective supports or a sum-preserving rewrite into disjoint parts.
pub enum PairResolution {
    Disjoint,
    Rewritten(Vec<Strand>),
}

fn family_effective(fam: &MatchFamily, joint: &Region) -> bool {
    let p = fam.core_a.p();
    let d = fam.core_a.depth();
    crate::residue::ResidueTable::combos(p, d).any(|c| {
        joint
            .residues
            .iter()
            .zip(c.iter())
            .all(|(set, &r)| set.contains_res(r))
            && !fam.core_a.table().eval(&c).is_zero()
            && !fam.core_b.table().eval(&c).is_zero()
    })
}

/// Resolves one overlapping pair: rewrites the first effective coincidence
/// family (merged core plus complements). Iterating this across a strand
/// list yields a support-disjoint normal form.
pub fn resolve_pair(a: &Strand, b: &Strand) -> Result<PairResolution> {
    let fams = match_strands(a, b)?;
    for fam in &fams {
        let Some(core_a) = replay(a, &fam.branch.a_ops)? else { continue };
        let Some(core_b) = replay(b, &fam.branch.b_ops)? else { continue };
        debug_assert_eq!(core_a.terms(), core_b.terms());
        debug_assert_eq!(core_a.base(), core_b.base());
        let joint = core_a.region().intersect(core_b.region());
        let eff = MatchFamily { core_a: core_a.clone(), core_b: core_b.clone(), branch: fam.branch.clone() };
        if joint.is_empty() || !family_effective(&eff, &joint) {
            continue;
        }
        let mut pieces = Vec::new();
        let sum_table = core_a.table().add(core_b.table());
        pieces.extend(Strand::make(
            core_a.p(),
            core_a.base(),
            core_a.dir(),
            core_a.terms().to_vec(),
            joint.clone(),
            sum_table,
        )?);
        pieces.extend(carve_rest(a, &fam.branch.a_ops, core_b.region())?);
        pieces.extend(carve_rest(b, &fam.branch.b_ops, core_a.region())?);
        return Ok(PairResolution::Rewritten(pieces));
    }
    Ok(PairResolution::Disjoint)
}

/// Everything in `s` except the matched core: replays the branch program,
/// peeling the complement at each step, then removes the import-region
/// intersection at the end.
fn carve_rest(s: &Strand, ops: &[Op], import: &Region) -> Result<Vec<Strand>> {
    let mut rest: Vec<Strand> = Vec::new();
    let mut cur = s.clone();
    for op in ops {
        match *op {
            Op::PinFirst(v) => {
                let low = cur.region().lowers[0];
                for u in low..v {
                    if let Some(piece) = cur.pin_first(u) {
                        rest.push(piece);
                    }
                }
                rest.push(cur.with_first_lower(v + 1));
                cur = match cur.pin_first(v) {
                    Some(c) => c,
                    None => return Ok(rest),
                };
            }
            Op::MergeAt(i, t) => {
                let g = cur.region().gaps[i];
                for u in g..t {
                    if let Some(piece) = cur.merge_middle_pair(i, u)? {
                        rest.push(piece);
                    }
                }
                rest.push(cur.with_gap_at_least(i, t + 1));
                cur = match cur.merge_middle_pair(i, t)? {
                    Some(c) => c,
                    None => return Ok(rest),
                };
            }
        }
    }
    rest.extend(region_complement(&cur, import)?);
    Ok(rest)
}

/// Pieces of `s` whose tuples violate at least one constraint of `import`
/// (first-violation decomposition, exact).
fn region_complement(s: &Strand, import: &Region) -> Result<Vec<Strand>> {
    let d = s.depth();
    assert_eq!(import.depth(), d);
    let mut rest = Vec::new();
    let mut cur = s.clone();
    for i in 0..d {
        if import.lowers[i] > cur.region().lowers[i] {
            for v in cur.region().lowers[i]..import.lowers[i] {
                rest.extend(cur.pin_var(i, v));
            }
            let mut lowers = cur.region().lowers.clone();
            lowers[i] = import.lowers[i];
            cur = cur.with_region(Region::new(
                lowers,
                cur.region().gaps.clone(),
                cur.region().residues.clone(),
            ));
        }
    }
    for i in 0..d.saturating_sub(1) {
        if import.gaps[i] > cur.region().gaps[i] {
            for u in cur.region().gaps[i]..import.gaps[i] {
                rest.extend(cur.merge_middle_pair(i, u)?);
            }
            cur = cur.with_gap_at_least(i, import.gaps[i]);
        }
    }
    for i in 0..d {
        let mine = cur.region().residues[i];
        let bad: Vec<u32> = mine
            .iter()
            .filter(|&r| !import.residues[i].contains_res(r))
            .collect();
        if !bad.is_empty() {
            let mut res_bad = cur.region().residues.clone();
            res_bad[i] = crate::region::ResidueSet::from_iter(s.p(), bad.iter().copied());
            rest.push(cur.with_region(Region::new(
                cur.region().lowers.clone(),
                cur.region().gaps.clone(),
                res_bad,
            )));
            let mut res_good = cur.region().residues.clone();
            res_good[i] = mine.intersect(&import.residues[i]);
            cur = cur.with_region(Region::new(
                cur.region().lowers.clone(),
                cur.region().gaps.clone(),
                res_good,
            ));
        }
    }
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::FieldElem;
    use crate::region::ResidueSet;
    use crate::residue::ResidueTable;

    fn mono(p: u32, c: i64, num: i128, den: u32) -> Strand {
        Strand::monomial(p, &FieldElem::from_int(p, c), Exponent::new(p, num, den)).unwrap()
    }

    fn desc(p: u32, base: Exponent, terms: Vec<i128>, lowers: Vec<i64>, gaps: Vec<i64>) -> Strand {
        let d = terms.len();
        Strand::make(
            p,
            base,
            Dir::Desc,
            terms,
            Region::new(lowers, gaps, vec![ResidueSet::full(p); d]),
            ResidueTable::constant(p, d, FieldElem::one(p)),
        )
        .unwrap()
        .pop()
        .unwrap()
    }

    fn brute_overlap(a: &Strand, b: &Strand, cap: i64) -> Vec<Exponent> {
        let ea: Vec<Exponent> = a.enumerate(cap).into_iter().map(|(q, _)| q).collect();
        let eb: Vec<Exponent> = b.enumerate(cap).into_iter().map(|(q, _)| q).collect();
        ea.into_iter().filter(|q| eb.contains(q)).collect()
    }

    #[test]
    fn alpha_vs_shifted_alpha() {
        let p = 3;
        let a = desc(p, Exponent::zero(p), vec![-1], vec![1], vec![]);
        let b = desc(p, Exponent::zero(p), vec![-1], vec![2], vec![]);
        let fams = match_strands(&a, &b).unwrap();
        assert_eq!(fams.len(), 1);
        let joint = fams[0].core_a.region().intersect(fams[0].core_b.region());
        assert_eq!(joint.lowers, vec![2]);
    }

    #[test]
    fn disjoint_by_digits() {
        let p = 3;
        let a = desc(p, Exponent::zero(p), vec![-1], vec![1], vec![]);
        let b = desc(p, Exponent::zero(p), vec![-2], vec![1], vec![]);
        assert!(match_strands(&a, &b).unwrap().is_empty());
        assert!(brute_overlap(&a, &b, 8).is_empty());
    }

    #[test]
    fn base_offset_pins() {
        let p = 2;
        let a = desc(p, Exponent::integer(p, -1), vec![-1], vec![1], vec![]);
        let b = desc(p, Exponent::zero(p), vec![-1], vec![0], vec![]);
        let fams = match_strands(&a, &b).unwrap();
        let brute = brute_overlap(&a, &b, 12);
        for q in &brute {
            let covered = fams.iter().any(|f| {
                let joint = f.core_a.region().intersect(f.core_b.region());
                f.core_a
                    .with_region(joint)
                    .enumerate(14)
                    .iter()
                    .any(|(g, _)| g == q)
            });
            assert!(covered, "point {q} not covered");
        }
        for f in &fams {
            let joint = f.core_a.region().intersect(f.core_b.region());
            for (q, _) in f.core_a.with_region(joint).enumerate(10) {
                assert!(brute.contains(&q), "family invented {q}");
            }
        }
    }

    #[test]
    fn multidigit_block_merge() {
        let p = 2;
        // -3/2^x vs -1/2^m - 1/2^n: 3 = 11 base 2, matched by adjacent pairs
        let a = desc(p, Exponent::zero(p), vec![-3], vec![2], vec![]);
        let b = desc(p, Exponent::zero(p), vec![-1, -1], vec![1, 2], vec![1]);
        let fams = match_strands(&a, &b).unwrap();
        assert!(!fams.is_empty());
        let brute = brute_overlap(&a, &b, 12);
        assert!(!brute.is_empty());
        for q in &brute {
            let covered = fams.iter().any(|f| {
                let joint = f.core_a.region().intersect(f.core_b.region());
                f.core_a
                    .with_region(joint)
                    .enumerate(14)
                    .iter()
                    .any(|(g, _)| g == q)
            });
            assert!(covered, "point {q} not covered");
        }
    }

    #[test]
    fn resolve_merges_identical_families() {
        let p = 3;
        let a = desc(p, Exponent::zero(p), vec![-1], vec![1], vec![]);
        let b = desc(p, Exponent::zero(p), vec![-1], vec![2], vec![]);
        match resolve_pair(&a, &b).unwrap() {
            PairResolution::Disjoint => panic!("must overlap"),
            PairResolution::Rewritten(pieces) => {
                let mut expect: Vec<(Exponent, i64)> = Vec::new();
                for s in [&a, &b] {
                    for (q, _) in s.enumerate(8) {
                        match expect.iter_mut().find(|(e, _)| *e == q) {
                            Some((_, c)) => *c += 1,
                            None => expect.push((q, 1)),
                        }
                    }
                }
                for (q, c) in &expect {
                    let mut got = 0i64;
                    for piece in &pieces {
                        for (g, v) in piece.enumerate(8) {
                            if g == *q {
                                got += v.as_prime_int().unwrap() as i64;
                            }
                        }
                    }
                    assert_eq!(got % p as i64, c % p as i64, "at {q}");
                }
                for i in 0..pieces.len() {
                    for j in i + 1..pieces.len() {
                        let pa: Vec<Exponent> =
                            pieces[i].enumerate(8).into_iter().map(|(q, _)| q).collect();
                        for (q, _) in pieces[j].enumerate(8) {
                            assert!(!pa.contains(&q), "pieces overlap at {q}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn monomial_membership() {
        let p = 2;
        let a = mono(p, 1, -1, 3); // y^(-1/8)
        let b = desc(p, Exponent::zero(p), vec![-1], vec![1], vec![]);
        let fams = match_strands(&a, &b).unwrap();
        assert_eq!(fams.len(), 1);
        let m = mono(p, 1, -3, 3); // -3/8 is not of the form -1/2^n
        assert!(match_strands(&m, &b).unwrap().is_empty());
    }
}
