//! Weyr canonical forms and their commutant algebras.
//!
//! The Weyr matrix of A is the permuted Jordan form whose commutant is
//! block upper triangular; its shape is determined by the eigenvalues of A
//! (sorted by the fixed order on the field) and their Weyr characteristics
//! m_i = rank(A - lambda I)^{i-1} - rank(A - lambda I)^i.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::algebra::{ClassPairSystem, ReducedAlgebra};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::linalg::{Matrix, StepPartition};

/// The shape data of a Weyr matrix.
///
/// `eigenvalues` are strictly increasing in the field order; the
/// characteristic of each eigenvalue is a weakly decreasing list of positive
/// counts summing (over all eigenvalues) to the matrix dimension.
///
/// `strips` lists the standard-partition strips in order. The strip at
/// Weyr level alpha for the Jordan-size group of size p covers the cells
/// where the diagonal is lambda I; its class groups all levels of the same
/// size group, which is exactly the class relation of the commutant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeyrStructure {
    pub eigenvalues: Vec<FieldElement>,
    pub characteristics: Vec<Vec<usize>>,
    pub strips: Vec<WeyrStrip>,
}

/// One strip of the standard partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeyrStrip {
    /// Index into `eigenvalues`.
    pub eig: usize,
    /// Weyr level (1-based): which diagonal block of the eigenvalue's Weyr
    /// cell the strip belongs to.
    pub level: usize,
    /// Jordan-size group index within the eigenvalue (0-based, groups
    /// ordered by decreasing cell size).
    pub group: usize,
    /// Jordan cell size of the group.
    pub cell_size: usize,
    /// Strip size: the number of Jordan cells in the group.
    pub size: usize,
}

impl WeyrStructure {
    /// Builds the structure from eigenvalues and characteristics.
    pub fn new(eigenvalues: Vec<FieldElement>, characteristics: Vec<Vec<usize>>) -> WeyrStructure {
        let mut strips = Vec::new();
        for (e, ch) in characteristics.iter().enumerate() {
            // Jordan size groups: cells of size p occur m_p - m_{p+1} times.
            let k = ch.len();
            let mut groups = Vec::new(); // (cell_size, multiplicity), size decreasing
            for p in (1..=k).rev() {
                let next = if p < k { ch[p] } else { 0 };
                let mult = ch[p - 1] - next;
                if mult > 0 {
                    groups.push((p, mult));
                }
            }
            for level in 1..=k {
                for (g, &(p, mult)) in groups.iter().enumerate() {
                    if p >= level {
                        strips.push(WeyrStrip {
                            eig: e,
                            level,
                            group: g,
                            cell_size: p,
                            size: mult,
                        });
                    }
                }
            }
        }
        WeyrStructure { eigenvalues, characteristics, strips }
    }

    pub fn dimension(&self) -> usize {
        self.characteristics.iter().flatten().sum()
    }

    /// The standard partition as sizes plus the commutant class relation
    /// (strips of one Jordan-size group of one eigenvalue share a class).
    pub fn standard_partition(&self) -> StepPartition {
        let sizes = self.strips.iter().map(|s| s.size).collect();
        let mut class_keys: Vec<(usize, usize)> = Vec::new();
        let classes = self
            .strips
            .iter()
            .map(|s| {
                let key = (s.eig, s.group);
                match class_keys.iter().position(|&k| k == key) {
                    Some(i) => i,
                    None => {
                        class_keys.push(key);
                        class_keys.len() - 1
                    }
                }
            })
            .collect();
        StepPartition::new(sizes, classes).expect("group strips share sizes")
    }

    /// Builds the Weyr matrix itself.
    pub fn matrix(&self, field: FieldSpec) -> Matrix {
        let part = self.standard_partition();
        let off = part.offsets();
        let n = part.total();
        let mut w = Matrix::zero(field, n, n);
        for (i, strip) in self.strips.iter().enumerate() {
            let lambda = &self.eigenvalues[strip.eig];
            for d in 0..strip.size {
                w[(off[i] + d, off[i] + d)] = lambda.clone();
            }
            // The identity cell linking level alpha to alpha+1 of the same
            // size group.
            if strip.level < strip.cell_size {
                let j = self
                    .strips
                    .iter()
                    .position(|t| {
                        t.eig == strip.eig && t.group == strip.group && t.level == strip.level + 1
                    })
                    .expect("next level exists below the cell size");
                for d in 0..strip.size {
                    w[(off[i] + d, off[j] + d)] = field.one();
                }
            }
        }
        w
    }
}

/// Weyr characteristic of A at lambda; empty iff lambda is not an
/// eigenvalue.
pub fn weyr_characteristic(a: &Matrix, lambda: &FieldElement) -> Vec<usize> {
    assert!(a.is_square(), "weyr characteristic of a non-square matrix");
    let n = a.rows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] = shifted[(i, i)].sub(lambda);
    }
    let mut out = Vec::new();
    let mut power = Matrix::identity(a.field(), n);
    let mut prev_rank = n;
    loop {
        power = power.mul(&shifted);
        let r = power.rank();
        if r == prev_rank {
            break;
        }
        out.push(prev_rank - r);
        prev_rank = r;
    }
    out
}

/// Distinct roots (with multiplicities) of the characteristic polynomial,
/// or the non-splitting remainder.
pub fn char_poly_roots(a: &Matrix) -> Result<Vec<(FieldElement, usize)>> {
    let coeffs = a.char_poly();
    let field = a.field();
    let mut roots = match field {
        FieldSpec::Rationals => rational_roots(&coeffs),
        FieldSpec::PrimeField(p) => prime_field_roots(&coeffs, field, p),
    }?;
    roots.sort_by(|x, y| x.0.order(&y.0));
    Ok(roots)
}

fn poly_eval(coeffs: &[FieldElement], x: &FieldElement, field: FieldSpec) -> FieldElement {
    let mut acc = field.zero();
    for c in coeffs.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

/// Divides a polynomial by (x - r); the division must be exact.
fn poly_deflate(coeffs: &[FieldElement], r: &FieldElement, field: FieldSpec) -> Vec<FieldElement> {
    let n = coeffs.len() - 1;
    let mut out = vec![field.zero(); n];
    let mut carry = field.zero();
    for i in (0..n).rev() {
        carry = coeffs[i + 1].add(&carry.mul(r));
        out[i] = carry.clone();
    }
    debug_assert!(poly_eval(coeffs, r, field).is_zero());
    out
}

fn prime_field_roots(
    coeffs: &[FieldElement],
    field: FieldSpec,
    p: u64,
) -> Result<Vec<(FieldElement, usize)>> {
    let mut poly = coeffs.to_vec();
    let mut roots = Vec::new();
    for v in 0..p {
        let r = field.from_i64(v as i64);
        let mut mult = 0;
        while poly.len() > 1 && poly_eval(&poly, &r, field).is_zero() {
            poly = poly_deflate(&poly, &r, field);
            mult += 1;
        }
        if mult > 0 {
            roots.push((r, mult));
        }
        if poly.len() == 1 {
            break;
        }
    }
    if poly.len() > 1 {
        return Err(Error::FieldNotSplitting(render_poly(&poly)));
    }
    Ok(roots)
}

/// Rational roots by the rational-root theorem on the primitive integer
/// form of the polynomial, repeated through deflation to collect
/// multiplicities.
fn rational_roots(coeffs: &[FieldElement]) -> Result<Vec<(FieldElement, usize)>> {
    let field = FieldSpec::Rationals;
    let mut poly = coeffs.to_vec();
    let mut roots: Vec<(FieldElement, usize)> = Vec::new();
    'outer: while poly.len() > 1 {
        // Root zero first.
        if poly[0].is_zero() {
            bump(&mut roots, field.zero());
            poly.remove(0);
            continue;
        }
        let ints = clear_denominators(&poly);
        let lead = ints.last().unwrap().abs();
        let tail = ints[0].abs();
        for num in divisors(&tail) {
            for den in divisors(&lead) {
                if num.gcd(&den) != BigInt::one() {
                    continue;
                }
                for sign in [1i64, -1] {
                    let cand = FieldElement::Rational(BigRational::new(
                        &num * BigInt::from(sign),
                        den.clone(),
                    ));
                    if poly_eval(&poly, &cand, field).is_zero() {
                        bump(&mut roots, cand.clone());
                        poly = poly_deflate(&poly, &cand, field);
                        continue 'outer;
                    }
                }
            }
        }
        return Err(Error::FieldNotSplitting(render_poly(&poly)));
    }
    Ok(roots)
}

fn bump(roots: &mut Vec<(FieldElement, usize)>, r: FieldElement) {
    if let Some(e) = roots.iter_mut().find(|e| e.0 == r) {
        e.1 += 1;
    } else {
        roots.push((r, 1));
    }
}

fn clear_denominators(poly: &[FieldElement]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for c in poly {
        let r = c.as_rational().expect("rational coefficients");
        lcm = lcm.lcm(r.denom());
    }
    poly.iter()
        .map(|c| {
            let r = c.as_rational().unwrap();
            r.numer() * (&lcm / r.denom())
        })
        .collect()
}

/// All positive divisors. Factors by trial division; a leftover cofactor is
/// treated as prime, which is exact for every matrix whose entries stay at
/// desk scale.
fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut factors: Vec<(BigInt, u32)> = Vec::new();
    let mut d = BigInt::from(2);
    let bound = BigInt::from(1u64 << 20);
    while &d * &d <= n && d <= bound {
        let mut e = 0;
        while (&n % &d).is_zero() {
            n /= &d;
            e += 1;
        }
        if e > 0 {
            factors.push((d.clone(), e));
        }
        d += 1;
    }
    if n > BigInt::one() {
        factors.push((n, 1));
    }
    let mut divs = vec![BigInt::one()];
    for (p, e) in factors {
        let mut next = Vec::new();
        for d in &divs {
            let mut acc = d.clone();
            for _ in 0..=e {
                next.push(acc.clone());
                acc *= &p;
            }
        }
        divs = next;
    }
    divs.sort();
    divs.dedup();
    divs
}

fn render_poly(poly: &[FieldElement]) -> String {
    let terms: Vec<String> = poly
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| match i {
            0 => format!("{c}"),
            1 => format!("({c})x"),
            _ => format!("({c})x^{i}"),
        })
        .collect();
    terms.join(" + ")
}

/// Computes the Weyr canonical form.
///
/// Returns (W, P, structure) with P invertible and P^-1 A P = W; W is the
/// unique Weyr matrix similar to A. Fails with FieldNotSplitting when the
/// characteristic polynomial has an irreducible factor of degree > 1.
pub fn weyr_form(a: &Matrix) -> Result<(Matrix, Matrix, WeyrStructure)> {
    assert!(a.is_square(), "weyr form of a non-square matrix");
    let field = a.field();
    let n = a.rows();
    let roots = char_poly_roots(a)?;
    let mut eigenvalues = Vec::new();
    let mut characteristics = Vec::new();
    let mut basis_columns: Vec<Matrix> = Vec::new();
    for (lambda, alg_mult) in &roots {
        let chains = jordan_chains(a, lambda)?;
        let total: usize = chains.iter().map(Vec::len).sum();
        if total != *alg_mult {
            return Err(Error::InternalInconsistency(format!(
                "generalized eigenspace of {lambda} has dimension {total}, expected {alg_mult}"
            )));
        }
        let k = chains.first().map_or(0, Vec::len);
        let mut ch = Vec::new();
        for depth in 1..=k {
            ch.push(chains.iter().filter(|c| c.len() >= depth).count());
        }
        // Basis ordered depth-major: all depth-1 vectors chain by chain,
        // then depth-2, and so on.
        for depth in 0..k {
            for chain in &chains {
                if depth < chain.len() {
                    basis_columns.push(chain[depth].clone());
                }
            }
        }
        eigenvalues.push(lambda.clone());
        characteristics.push(ch);
    }
    let structure = WeyrStructure::new(eigenvalues, characteristics);
    let w = structure.matrix(field);
    let mut p = Matrix::zero(field, n, n);
    for (j, col) in basis_columns.iter().enumerate() {
        for i in 0..n {
            p[(i, j)] = col[(i, 0)].clone();
        }
    }
    let p_inv = p.inverse().map_err(|_| {
        Error::InternalInconsistency("generalized eigenvectors did not form a basis".into())
    })?;
    if p_inv.mul(a).mul(&p) != w {
        return Err(Error::InternalInconsistency(
            "conjugated matrix does not match the constructed Weyr form".into(),
        ));
    }
    Ok((w, p, structure))
}

/// Jordan chains for one eigenvalue, ordered by decreasing length; chain
/// vectors run from depth 1 (kernel) upward. Basis choices are pinned to
/// rref pivots so the output is reproducible.
fn jordan_chains(a: &Matrix, lambda: &FieldElement) -> Result<Vec<Vec<Matrix>>> {
    let field = a.field();
    let n = a.rows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] = shifted[(i, i)].sub(lambda);
    }
    // Kernel bases of successive powers.
    let mut kernels: Vec<Vec<Matrix>> = vec![Vec::new()];
    let mut power = Matrix::identity(field, n);
    loop {
        power = power.mul(&shifted);
        let ker = power.nullspace();
        if ker.len() == kernels.last().unwrap().len() {
            break;
        }
        kernels.push(ker);
    }
    let k = kernels.len() - 1;
    if k == 0 {
        return Ok(Vec::new());
    }
    // Chain tops from the deepest level down; chains introduced at deeper
    // levels come first, so lengths are decreasing.
    let mut tops: Vec<(Matrix, usize)> = Vec::new(); // (top vector, chain length)
    let mut level_vectors: Vec<Matrix> = Vec::new(); // depth-j vectors, chain order
    for j in (1..=k).rev() {
        // Carry existing chains down a level.
        let carried: Vec<Matrix> = level_vectors.iter().map(|v| shifted.mul(v)).collect();
        // Complete with new tops: vectors of ker^j independent modulo
        // ker^{j-1} + carried, scanned in rref-basis order.
        let mut span = Matrix::zero(field, n, kernels[j - 1].len() + carried.len());
        for (c, v) in kernels[j - 1].iter().chain(carried.iter()).enumerate() {
            span.write_submatrix(0, c, v);
        }
        let mut rank = span.rank();
        let mut new_tops = Vec::new();
        for cand in &kernels[j] {
            let mut ext = Matrix::zero(field, n, span.cols() + 1);
            ext.write_submatrix(0, 0, &span);
            ext.write_submatrix(0, span.cols(), cand);
            let r = ext.rank();
            if r > rank {
                rank = r;
                span = ext;
                new_tops.push(cand.clone());
            }
        }
        for top in &new_tops {
            tops.push((top.clone(), j));
        }
        level_vectors = carried.into_iter().chain(new_tops).collect();
    }
    // Rebuild each chain from its top: depth 1 (kernel vector) first.
    let mut out = Vec::new();
    for (top, depth) in tops {
        let mut chain = vec![top.clone()];
        let mut v = top;
        for _ in 1..depth {
            v = shifted.mul(&v);
            chain.push(v.clone());
        }
        chain.reverse();
        out.push(chain);
    }
    Ok(out)
}

/// Structural recognition: Some(structure) iff the matrix is exactly a
/// Weyr matrix, including the eigenvalue order and decreasing
/// characteristics.
pub fn is_weyr(m: &Matrix) -> Option<WeyrStructure> {
    assert!(m.is_square(), "is_weyr on a non-square matrix");
    let field = m.field();
    let n = m.rows();
    if n == 0 {
        return Some(WeyrStructure::new(Vec::new(), Vec::new()));
    }
    // Diagonal runs of equal values, strictly increasing across runs.
    let mut runs: Vec<(FieldElement, usize, usize)> = Vec::new(); // (value, start, end)
    let mut start = 0;
    for i in 1..=n {
        if i == n || m[(i, i)] != m[(start, start)] {
            runs.push((m[(start, start)].clone(), start, i));
            start = i;
        }
    }
    for w in runs.windows(2) {
        if w[0].0.order(&w[1].0) != std::cmp::Ordering::Less {
            return None;
        }
    }
    // Block diagonal across runs.
    for (ri, &(_, r0, r1)) in runs.iter().enumerate() {
        for (rj, &(_, c0, c1)) in runs.iter().enumerate() {
            if ri != rj && !m.submatrix(r0, r1, c0, c1).is_zero() {
                return None;
            }
        }
    }
    let mut eigenvalues = Vec::new();
    let mut characteristics = Vec::new();
    for (lambda, r0, r1) in runs {
        let g = m.submatrix(r0, r1, r0, r1);
        let ch = weyr_characteristic(&g, &lambda);
        if ch.iter().sum::<usize>() != r1 - r0 {
            return None;
        }
        eigenvalues.push(lambda);
        characteristics.push(ch);
    }
    let structure = WeyrStructure::new(eigenvalues, characteristics);
    if structure.matrix(field) == *m {
        Some(structure)
    } else {
        None
    }
}

/// The reduced algebra of all matrices commuting with a Weyr matrix, over
/// its standard partition.
///
/// The block pattern is the classical commutant of a nilpotent Jordan
/// matrix transported through the Weyr permutation: the block at strips
/// (alpha, g), (beta, h) of one eigenvalue is free for beta - alpha >=
/// max(0, p_h - p_g) and shared across all positions with equal
/// (g, h, beta - alpha); every other block is zero, as are all blocks
/// between distinct eigenvalues.
pub fn commutant_algebra(structure: &WeyrStructure, field: FieldSpec) -> ReducedAlgebra {
    let partition = structure.standard_partition();
    let strips = &structure.strips;
    let k = partition.class_count();
    let mut systems = Vec::new();
    for ci in 0..k {
        for cj in 0..k {
            let vars = ReducedAlgebra::pair_positions(&partition, ci, cj);
            if vars.is_empty() {
                continue;
            }
            let mut rows = Vec::new();
            // Key of each variable: None = forced zero, Some(s) = the free
            // parameter index along its Toeplitz diagonal.
            // All row strips of a class share (eig, group), and likewise the
            // column strips, so the diagonal offset alone keys the tie.
            let keys: Vec<Option<usize>> = vars
                .iter()
                .map(|&(u, v)| {
                    let su = &strips[u];
                    let sv = &strips[v];
                    if su.eig != sv.eig || sv.level < su.level {
                        return None;
                    }
                    let shift = sv.cell_size.saturating_sub(su.cell_size);
                    (sv.level - su.level).checked_sub(shift)
                })
                .collect();
            for (vi, key) in keys.iter().enumerate() {
                match key {
                    None => {
                        let mut row = vec![field.zero(); vars.len()];
                        row[vi] = field.one();
                        rows.push(row);
                    }
                    Some(s) => {
                        if let Some(f) = (0..vi).find(|&wj| keys[wj] == Some(*s)) {
                            let mut row = vec![field.zero(); vars.len()];
                            row[f] = field.one();
                            row[vi] = field.one().neg();
                            rows.push(row);
                        }
                    }
                }
            }
            systems.push(ClassPairSystem { class_pair: (ci, cj), vars, rows });
        }
    }
    ReducedAlgebra::new(field, partition, systems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::block_view;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const Q: FieldSpec = FieldSpec::Rationals;

    fn jordan(field: FieldSpec, lambda: i64, n: usize) -> Matrix {
        let mut m = Matrix::zero(field, n, n);
        for i in 0..n {
            m[(i, i)] = field.from_i64(lambda);
            if i + 1 < n {
                m[(i, i + 1)] = field.one();
            }
        }
        m
    }

    #[test]
    fn characteristic_examples() {
        let a = jordan(Q, 0, 4).direct_sum(&jordan(Q, 0, 2));
        assert_eq!(weyr_characteristic(&a, &Q.zero()), vec![2, 2, 1, 1]);
        let five = Matrix::identity(Q, 3).scale(&Q.from_i64(5));
        assert_eq!(weyr_characteristic(&five, &Q.from_i64(5)), vec![3]);
        assert_eq!(weyr_characteristic(&jordan(Q, 1, 2), &Q.zero()), Vec::<usize>::new());
    }

    #[test]
    fn weyr_form_j4_j2() {
        let a = jordan(Q, 0, 4).direct_sum(&jordan(Q, 0, 2));
        let (w, p, s) = weyr_form(&a).unwrap();
        let expected = Matrix::from_i64(
            Q,
            &[
                &[0, 0, 1, 0, 0, 0],
                &[0, 0, 0, 1, 0, 0],
                &[0, 0, 0, 0, 1, 0],
                &[0, 0, 0, 0, 0, 0],
                &[0, 0, 0, 0, 0, 1],
                &[0, 0, 0, 0, 0, 0],
            ],
        );
        assert_eq!(w, expected);
        assert_eq!(s.characteristics, vec![vec![2, 2, 1, 1]]);
        // Characteristic (2,2,1,1) has size groups 4 and 2 with one cell
        // each, so every standard strip has size one.
        assert_eq!(s.standard_partition().sizes(), &[1, 1, 1, 1, 1, 1]);
        assert!(p.is_invertible());
        assert_eq!(p.inverse().unwrap().mul(&a).mul(&p), w);
        // Jordan input: the transition is a permutation.
        assert!(is_permutation(&p));
    }

    #[test]
    fn weyr_form_reorders_diagonal() {
        let a = Matrix::from_i64(Q, &[&[2, 0], &[0, 1]]);
        let (w, _, _) = weyr_form(&a).unwrap();
        assert_eq!(w, Matrix::from_i64(Q, &[&[1, 0], &[0, 2]]));
    }

    #[test]
    fn weyr_form_fixed_point() {
        let a = jordan(Q, 1, 2);
        let (w, p, _) = weyr_form(&a).unwrap();
        assert_eq!(w, a);
        assert_eq!(p, Matrix::identity(Q, 2));
    }

    #[test]
    fn is_weyr_examples() {
        let z = Matrix::zero(Q, 3, 3);
        let s = is_weyr(&z).unwrap();
        assert_eq!(s.characteristics, vec![vec![3]]);

        // Jordan but not Weyr: J_2(0) + J_1(0) needs the [I;0] layout.
        let a = jordan(Q, 0, 2).direct_sum(&jordan(Q, 0, 1));
        assert!(is_weyr(&a).is_none());
        let (w, _, _) = weyr_form(&a).unwrap();
        assert!(is_weyr(&w).is_some());

        // Eigenvalues out of order.
        assert!(is_weyr(&Matrix::from_i64(Q, &[&[2, 0], &[0, 1]])).is_none());
    }

    #[test]
    fn field_not_splitting() {
        let rot = Matrix::from_i64(Q, &[&[0, 1], &[-1, 0]]);
        assert!(matches!(weyr_form(&rot), Err(Error::FieldNotSplitting(_))));
        let f2 = FieldSpec::prime(2).unwrap();
        let frob = Matrix::from_i64(f2, &[&[0, 1], &[1, 1]]);
        assert!(matches!(weyr_form(&frob), Err(Error::FieldNotSplitting(_))));
    }

    #[test]
    fn rational_spectrum_with_fractions() {
        // diag(1/2, 1/2, -3) conjugated: roots recovered exactly.
        let mut d = Matrix::zero(Q, 3, 3);
        d[(0, 0)] = Q.parse_element("1/2").unwrap();
        d[(1, 1)] = Q.parse_element("1/2").unwrap();
        d[(2, 2)] = Q.from_i64(-3);
        let s = Matrix::from_i64(Q, &[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]]);
        let a = s.mul(&d).mul(&s.inverse().unwrap());
        let roots = char_poly_roots(&a).unwrap();
        assert_eq!(
            roots,
            vec![
                (Q.from_i64(-3), 1),
                (Q.parse_element("1/2").unwrap(), 2)
            ]
        );
    }

    fn is_permutation(p: &Matrix) -> bool {
        let n = p.rows();
        for i in 0..n {
            let ones = (0..n).filter(|&j| p[(i, j)].is_one()).count();
            let zeros = (0..n).filter(|&j| p[(i, j)].is_zero()).count();
            if ones != 1 || zeros != n - 1 {
                return false;
            }
        }
        p.is_invertible()
    }

    #[test]
    fn uniqueness_under_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = jordan(Q, 2, 2).direct_sum(&jordan(Q, 2, 1)).direct_sum(&jordan(Q, -1, 2));
        let (w, _, _) = weyr_form(&a).unwrap();
        for _ in 0..10 {
            let s = crate::algebra::random_invertible_block(Q, 5, &mut rng);
            let b = s.inverse().unwrap().mul(&a).mul(&s);
            let (wb, pb, _) = weyr_form(&b).unwrap();
            assert_eq!(wb, w);
            assert_eq!(pb.inverse().unwrap().mul(&b).mul(&pb), wb);
        }
    }

    #[test]
    fn permutation_for_jordan_inputs() {
        // Jordan blocks in arbitrary order still yield a permutation P.
        let a = jordan(Q, 0, 2).direct_sum(&jordan(Q, 0, 4)).direct_sum(&jordan(Q, 3, 1));
        let (_, p, _) = weyr_form(&a).unwrap();
        assert!(is_permutation(&p));
    }

    #[test]
    fn characteristic_determines_jordan_multiset() {
        // m_i counts Jordan cells of size >= i; round-trip through cell
        // multiset (2,2,1) at one eigenvalue.
        let a = jordan(Q, 1, 2)
            .direct_sum(&jordan(Q, 1, 2))
            .direct_sum(&jordan(Q, 1, 1));
        let ch = weyr_characteristic(&a, &Q.one());
        assert_eq!(ch, vec![3, 2]);
        // cells of size s: ch[s-1] - ch[s]
        let cells: Vec<usize> = (1..=ch.len())
            .map(|s| ch[s - 1] - ch.get(s).copied().unwrap_or(0))
            .collect();
        assert_eq!(cells, vec![1, 2]); // one 1-cell, two 2-cells
    }

    #[test]
    fn commutant_of_scalar_is_full() {
        let lam = Matrix::identity(Q, 3).scale(&Q.from_i64(4));
        let (_, _, s) = weyr_form(&lam).unwrap();
        let alg = commutant_algebra(&s, Q);
        assert_eq!(alg.partition.sizes(), &[3]);
        assert_eq!(alg.dimension(), 9);
    }

    #[test]
    fn commutant_of_j2() {
        let (w, _, s) = weyr_form(&jordan(Q, 5, 2)).unwrap();
        let alg = commutant_algebra(&s, Q);
        assert_eq!(alg.partition.sizes(), &[1, 1]);
        assert_eq!(alg.partition.classes(), &[0, 0]);
        assert_eq!(alg.dimension(), 2);
        for x in alg.spanning_set() {
            assert_eq!(x.mul(&w), w.mul(&x));
        }
    }

    #[test]
    fn commutant_example_pattern() {
        // J_4(lambda I_p) + J_2(lambda I_q) at p = q = 1: classes {0,2,4,5}
        // and {1,3}; ties A2 = {(0,2),(2,4),(4,5)}, A3 = {(0,4),(2,5)},
        // B1 = {(0,1),(2,3)}, C1 = {(1,4),(3,5)}; zeros at (1,2), (3,4).
        let a = jordan(Q, 7, 4).direct_sum(&jordan(Q, 7, 2));
        let (w, _, s) = weyr_form(&a).unwrap();
        let alg = commutant_algebra(&s, Q);
        assert_eq!(alg.partition.classes(), &[0, 1, 0, 1, 0, 0]);
        // Spanning elements commute with W.
        for x in alg.spanning_set() {
            assert_eq!(x.mul(&w), w.mul(&x));
        }
        // Dimension cross-check against the entrywise commutation solve.
        assert_eq!(alg.dimension(), commutant_dimension(&w));
        // Forced zeros.
        let p = &alg.partition;
        for x in alg.spanning_set() {
            assert!(block_view(&x, p, (1, 2)).unwrap().is_zero());
            assert!(block_view(&x, p, (3, 4)).unwrap().is_zero());
        }
        // A member violating a tie is rejected: set (0,2) = 1 but (2,4) = 0.
        let mut bad = Matrix::identity(Q, 6);
        bad[(0, 2)] = Q.one();
        assert!(!alg.contains(&bad).unwrap());
        let mut good = Matrix::identity(Q, 6);
        good[(0, 2)] = Q.one();
        good[(2, 4)] = Q.one();
        good[(4, 5)] = Q.one();
        assert!(alg.contains(&good).unwrap());
        assert_eq!(good.mul(&w), w.mul(&good));
    }

    /// Dimension of {X : XW = WX} by entrywise elimination.
    fn commutant_dimension(w: &Matrix) -> usize {
        let n = w.rows();
        let mut sys = Matrix::zero(Q, n * n, n * n);
        // (XW - WX)_{ij} = sum_k X_{ik} W_{kj} - W_{ik} X_{kj}
        for i in 0..n {
            for j in 0..n {
                let row = i * n + j;
                for k in 0..n {
                    let cur = sys[(row, i * n + k)].add(&w[(k, j)]);
                    sys[(row, i * n + k)] = cur;
                    let cur = sys[(row, k * n + j)].sub(&w[(i, k)]);
                    sys[(row, k * n + j)] = cur;
                }
            }
        }
        n * n - sys.rank()
    }

    #[test]
    fn commutant_separates_eigenvalues() {
        let a = jordan(Q, 1, 2).direct_sum(&jordan(Q, 2, 1));
        let (w, _, s) = weyr_form(&a).unwrap();
        let alg = commutant_algebra(&s, Q);
        assert_eq!(alg.dimension(), commutant_dimension(&w));
        for x in alg.spanning_set() {
            assert_eq!(x.mul(&w), w.mul(&x));
        }
    }

    #[test]
    fn is_weyr_of_weyr_form_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            // Random small matrix with forced-rational spectrum.
            let n = 3;
            let mut d = Matrix::zero(Q, n, n);
            for i in 0..n {
                d[(i, i)] = Q.from_i64(rng.gen_range(-1..=1));
            }
            if rng.gen_bool(0.5) {
                d[(0, 1)] = Q.one();
            }
            let s = crate::algebra::random_invertible_block(Q, n, &mut rng);
            let a = s.mul(&d).mul(&s.inverse().unwrap());
            let (w, _, structure) = weyr_form(&a).unwrap();
            let parsed = is_weyr(&w).expect("weyr_form output is a Weyr matrix");
            assert_eq!(parsed, structure);
        }
    }

    use rand::Rng;
}
