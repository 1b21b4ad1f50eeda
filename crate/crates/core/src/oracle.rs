//! Brute-force ground truth over small prime fields: exhaustive orbit
//! search over the invertible elements of an algebra, and exhaustive
//! enumeration of canonical representatives.

use crate::algebra::ReducedAlgebra;
use crate::belitskii::{canonicalize_problem, StructuredCanonicalMatrix};
use crate::decompose::compare_blocks;
use crate::decompose::BlockMatrix;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::Matrix;
use crate::problems::ProblemSpec;

pub const DEFAULT_BUDGET: u128 = 2_000_000;

fn prime_of(field: FieldSpec) -> Result<u64> {
    match field {
        FieldSpec::PrimeField(p) => Ok(p),
        FieldSpec::Rationals => Err(Error::PrimeFieldRequired),
    }
}

fn check_budget(p: u64, dim: usize, budget: u128) -> Result<u128> {
    let mut total: u128 = 1;
    for _ in 0..dim {
        total = total
            .checked_mul(p as u128)
            .filter(|&t| t <= budget)
            .ok_or(Error::BudgetExceeded(u128::MAX, budget))?;
    }
    if total > budget {
        return Err(Error::BudgetExceeded(total, budget));
    }
    Ok(total)
}

/// Iterates all linear combinations of the basis matrices with
/// coefficients in F_p.
fn all_combinations(
    field: FieldSpec,
    basis: &[Matrix],
    n: usize,
    p: u64,
    mut f: impl FnMut(&Matrix),
) {
    let mut coeffs = vec![0u64; basis.len()];
    loop {
        let mut m = Matrix::zero(field, n, n);
        for (c, b) in coeffs.iter().zip(basis) {
            if *c != 0 {
                m = m.add(&b.scale(&field.from_i64(*c as i64)));
            }
        }
        f(&m);
        // Odometer.
        let mut k = 0;
        loop {
            if k == coeffs.len() {
                return;
            }
            coeffs[k] += 1;
            if coeffs[k] < p {
                break;
            }
            coeffs[k] = 0;
            k += 1;
        }
    }
}

/// All invertible members of an algebra over F_p, enumerated through its
/// spanning set.
pub fn enumerate_group(alg: &ReducedAlgebra, budget: u128) -> Result<Vec<Matrix>> {
    let p = prime_of(alg.field)?;
    let span = alg.spanning_set();
    check_budget(p, span.len(), budget)?;
    let n = alg.total_size();
    let mut out = Vec::new();
    all_combinations(alg.field, &span, n, p, |m| {
        if m.is_invertible() {
            out.push(m.clone());
        }
    });
    Ok(out)
}

/// Ground-truth equivalence: some member of the enumerated group
/// conjugates m onto n.
pub fn orbit_equivalent(alg: &ReducedAlgebra, m: &Matrix, n: &Matrix, budget: u128) -> Result<bool> {
    let group = enumerate_group(alg, budget)?;
    Ok(orbit_equivalent_in(&group, m, n))
}

/// Equivalence against a pre-enumerated group: S^-1 m S = n for some S,
/// tested as m S = S n.
pub fn orbit_equivalent_in(group: &[Matrix], m: &Matrix, n: &Matrix) -> bool {
    group.iter().any(|s| m.mul(s) == s.mul(n))
}

/// Canonicalizes every member of the matrix space and returns one
/// representative per orbit, sorted deterministically.
pub fn enumerate_canonical(
    ps: &ProblemSpec,
    sizes: &[usize],
    budget: u128,
) -> Result<Vec<StructuredCanonicalMatrix>> {
    let p = prime_of(ps.field)?;
    let basis = ps.matrix_space_basis(sizes)?;
    check_budget(p, basis.len(), budget)?;
    let n: usize = sizes.iter().sum();
    let mut members = Vec::new();
    all_combinations(ps.field, &basis, n, p, |m| members.push(m.clone()));
    let mut reps: Vec<StructuredCanonicalMatrix> = Vec::new();
    for m in &members {
        let scm = canonicalize_problem(ps, sizes, m)?;
        if !reps.iter().any(|r| r.matrix == scm.matrix) {
            reps.push(scm);
        }
    }
    reps.sort_by(|a, b| {
        compare_blocks(
            &BlockMatrix { sizes: sizes.to_vec(), matrix: a.matrix.clone() },
            &BlockMatrix { sizes: sizes.to_vec(), matrix: b.matrix.clone() },
        )
    });
    Ok(reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ClassPairSystem;
    use crate::linalg::StepPartition;
    use crate::problems::{kronecker_problem, simsim_problem};

    fn f(p: u64) -> FieldSpec {
        FieldSpec::prime(p).unwrap()
    }

    /// {S + S : S in k^{2x2}} over F_2: the duplicated general linear
    /// group has 6 elements.
    #[test]
    fn duplicated_gl2_f2() {
        let field = f(2);
        let partition = StepPartition::new(vec![2, 2], vec![0, 0]).unwrap();
        let sys = ClassPairSystem {
            class_pair: (0, 0),
            vars: vec![(0, 1)],
            rows: vec![vec![field.one()]],
        };
        let alg = ReducedAlgebra::new(field, partition, vec![sys]);
        let group = enumerate_group(&alg, DEFAULT_BUDGET).unwrap();
        assert_eq!(group.len(), 6);
    }

    /// {a I_2} over F_3: two invertible scalars.
    #[test]
    fn scalar_group_f3() {
        let field = f(3);
        let partition = StepPartition::new(vec![1, 1], vec![0, 0]).unwrap();
        let sys = ClassPairSystem {
            class_pair: (0, 0),
            vars: vec![(0, 1)],
            rows: vec![vec![field.one()]],
        };
        let alg = ReducedAlgebra::new(field, partition, vec![sys]);
        assert_eq!(enumerate_group(&alg, DEFAULT_BUDGET).unwrap().len(), 2);
    }

    #[test]
    fn upper_triangular_f2() {
        let field = f(2);
        let alg = ReducedAlgebra::unconstrained(field, StepPartition::discrete(vec![1, 1]));
        assert_eq!(enumerate_group(&alg, DEFAULT_BUDGET).unwrap().len(), 2);
    }

    #[test]
    fn budget_is_enforced() {
        let field = f(5);
        let alg = ReducedAlgebra::unconstrained(field, StepPartition::discrete(vec![2, 2]));
        assert!(matches!(
            enumerate_group(&alg, 100),
            Err(Error::BudgetExceeded(..))
        ));
        let rat = ReducedAlgebra::unconstrained(FieldSpec::Rationals, StepPartition::discrete(vec![1]));
        assert_eq!(enumerate_group(&rat, 10), Err(Error::PrimeFieldRequired));
    }

    #[test]
    fn orbit_examples() {
        let field = f(2);
        // Full-equivalence on 1x1 embedded as [[0, x], [0, 0]] under
        // diag(a, b): [1] and [0] are inequivalent.
        let alg = ReducedAlgebra::unconstrained(field, StepPartition::discrete(vec![1, 1]));
        let one = Matrix::from_i64(field, &[&[0, 1], &[0, 0]]);
        let zero = Matrix::zero(field, 2, 2);
        assert!(orbit_equivalent(&alg, &one, &one, DEFAULT_BUDGET).unwrap());
        assert!(!orbit_equivalent(&alg, &one, &zero, DEFAULT_BUDGET).unwrap());

        // Kronecker at dimension (1,1): (1,0) and (0,1) are inequivalent.
        let ps = kronecker_problem(field).unwrap();
        let sizes = ps.sizes_from_class_dims(&[1, 1]).unwrap();
        let kalg = ps.algebra(sizes).unwrap();
        let a = Matrix::from_i64(field, &[&[0, 0, 0], &[1, 0, 0], &[0, 0, 0]]);
        let b = Matrix::from_i64(field, &[&[0, 0, 0], &[0, 0, 0], &[1, 0, 0]]);
        assert!(!orbit_equivalent(&kalg, &a, &b, DEFAULT_BUDGET).unwrap());
        let c = Matrix::from_i64(field, &[&[0, 0, 0], &[1, 0, 0], &[1, 0, 0]]);
        assert!(orbit_equivalent(&kalg, &c, &c, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn kronecker_canonical_counts() {
        for (p, want) in [(2u64, 4usize), (3, 5)] {
            let ps = kronecker_problem(f(p)).unwrap();
            let sizes = ps.sizes_from_class_dims(&[1, 1]).unwrap();
            let reps = enumerate_canonical(&ps, &sizes, DEFAULT_BUDGET).unwrap();
            assert_eq!(reps.len(), want, "p = {p}");
        }
    }

    #[test]
    fn similarity_1x1_f3() {
        let field = f(3);
        let ps = crate::problems::quiver_problem(field, 1, &[(0, 0)]).unwrap();
        let reps = enumerate_canonical(&ps, &[1], DEFAULT_BUDGET).unwrap();
        assert_eq!(reps.len(), 3);
    }

    #[test]
    fn soundness_simsim_n1_f2() {
        let field = f(2);
        let ps = simsim_problem(field).unwrap();
        let sizes = vec![1usize, 1];
        let alg = ps.algebra(sizes.clone()).unwrap();
        let group = enumerate_group(&alg, DEFAULT_BUDGET).unwrap();
        let basis = ps.matrix_space_basis(&sizes).unwrap();
        let mut members = Vec::new();
        all_combinations(field, &basis, 2, 2, |m| members.push(m.clone()));
        assert_eq!(members.len(), 4);
        for m in &members {
            for n in &members {
                let fast =
                    crate::belitskii::are_equivalent_problem(&ps, &sizes, m, n).unwrap();
                let slow = orbit_equivalent_in(&group, m, n);
                assert_eq!(fast, slow, "m = {m:?}, n = {n:?}");
            }
        }
    }

    #[test]
    fn orbit_count_matches_union_find() {
        let field = f(3);
        let ps = kronecker_problem(field).unwrap();
        let sizes = ps.sizes_from_class_dims(&[1, 1]).unwrap();
        let alg = ps.algebra(sizes.clone()).unwrap();
        let group = enumerate_group(&alg, DEFAULT_BUDGET).unwrap();
        let basis = ps.matrix_space_basis(&sizes).unwrap();
        let n: usize = sizes.iter().sum();
        let mut members = Vec::new();
        all_combinations(field, &basis, n, 3, |m| members.push(m.clone()));
        // Union-find over pairwise orbit equivalence.
        let mut parent: Vec<usize> = (0..members.len()).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if orbit_equivalent_in(&group, &members[i], &members[j]) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut roots: Vec<usize> = (0..members.len()).map(|i| find(&mut parent, i)).collect();
        roots.sort_unstable();
        roots.dedup();
        let reps = enumerate_canonical(&ps, &sizes, DEFAULT_BUDGET).unwrap();
        assert_eq!(reps.len(), roots.len());
    }
}
