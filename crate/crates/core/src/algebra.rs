//! Reduced block upper-triangular matrix algebras.
//!
//! A reduced algebra over a step partition consists of all upper
//! block-triangular matrices whose diagonal blocks are equal within
//! equivalence classes of strips and whose off-diagonal blocks satisfy, for
//! each ordered pair of classes, a system of scalar-coefficient linear
//! equations applied blockwise.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::linalg::{block_view, block_write, Matrix, StepPartition};

/// The linear constraint system attached to one ordered pair of strip
/// classes. Variables are the above-diagonal block positions (i, j) with
/// i in the first class, j in the second, i < j; rows are kept in reduced
/// row echelon form so that implication tests are plain row-space
/// membership.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPairSystem {
    pub class_pair: (usize, usize),
    pub vars: Vec<(usize, usize)>,
    pub rows: Vec<Vec<FieldElement>>,
}

impl ClassPairSystem {
    pub fn var_index(&self, pos: (usize, usize)) -> Option<usize> {
        self.vars.iter().position(|&v| v == pos)
    }

    /// Rewrites the rows into reduced row echelon form, dropping zero rows.
    pub fn reduce(&mut self, field: FieldSpec) {
        if self.rows.is_empty() {
            return;
        }
        let m = Matrix::from_fn(field, self.rows.len(), self.vars.len(), |i, j| {
            self.rows[i][j].clone()
        });
        let r = m.rref();
        self.rows = (0..r.rank)
            .map(|i| (0..self.vars.len()).map(|j| r.reduced[(i, j)].clone()).collect())
            .collect();
    }

    /// True if the covector lies in the row space, i.e. the system implies
    /// the equation `sum coeffs[v] x_v = 0`. Requires reduced rows.
    pub fn implies(&self, coeffs: &[FieldElement]) -> bool {
        assert_eq!(coeffs.len(), self.vars.len());
        let mut residual = coeffs.to_vec();
        for row in &self.rows {
            let pivot = row.iter().position(|c| !c.is_zero()).expect("no zero rows");
            if !residual[pivot].is_zero() {
                let c = residual[pivot].clone();
                for (r, x) in residual.iter_mut().zip(row) {
                    let t = x.mul(&c);
                    *r = r.sub(&t);
                }
            }
        }
        residual.iter().all(FieldElement::is_zero)
    }

    /// Basis of the solution space of the system, as coefficient vectors
    /// over `vars`.
    pub fn solution_basis(&self, field: FieldSpec) -> Vec<Vec<FieldElement>> {
        let m = Matrix::from_fn(field, self.rows.len(), self.vars.len(), |i, j| {
            self.rows[i][j].clone()
        });
        m.nullspace()
            .into_iter()
            .map(|v| (0..self.vars.len()).map(|i| v[(i, 0)].clone()).collect())
            .collect()
    }
}

/// A reduced matrix algebra: step partition plus one constraint system per
/// ordered class pair. Pairs without an entry are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedAlgebra {
    pub field: FieldSpec,
    pub partition: StepPartition,
    pub systems: BTreeMap<(usize, usize), ClassPairSystem>,
}

impl ReducedAlgebra {
    /// An algebra with no off-diagonal constraints (full upper triangular
    /// pattern subject only to the class relation on diagonal blocks).
    pub fn unconstrained(field: FieldSpec, partition: StepPartition) -> ReducedAlgebra {
        let mut alg = ReducedAlgebra { field, partition, systems: BTreeMap::new() };
        alg.fill_missing_systems();
        alg
    }

    pub fn new(
        field: FieldSpec,
        partition: StepPartition,
        systems: Vec<ClassPairSystem>,
    ) -> ReducedAlgebra {
        let mut map = BTreeMap::new();
        for mut s in systems {
            s.reduce(field);
            map.insert(s.class_pair, s);
        }
        let mut alg = ReducedAlgebra { field, partition, systems: map };
        alg.fill_missing_systems();
        alg
    }

    /// The variable positions of an ordered class pair: above-diagonal
    /// block positions with row strip in `ci` and column strip in `cj`.
    pub fn pair_positions(partition: &StepPartition, ci: usize, cj: usize) -> Vec<(usize, usize)> {
        let t = partition.len();
        let mut out = Vec::new();
        for i in 0..t {
            for j in i + 1..t {
                if partition.class_of(i) == ci && partition.class_of(j) == cj {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Ensures every ordered class pair has a system entry (possibly with
    /// zero rows), with the canonical variable ordering.
    pub fn fill_missing_systems(&mut self) {
        let k = self.partition.class_count();
        for ci in 0..k {
            for cj in 0..k {
                let vars = Self::pair_positions(&self.partition, ci, cj);
                let entry = self
                    .systems
                    .entry((ci, cj))
                    .or_insert_with(|| ClassPairSystem { class_pair: (ci, cj), vars: vars.clone(), rows: Vec::new() });
                assert_eq!(entry.vars, vars, "system variable order out of sync");
            }
        }
    }

    pub fn total_size(&self) -> usize {
        self.partition.total()
    }

    /// Dimension of the algebra as a vector space.
    pub fn dimension(&self) -> usize {
        let p = &self.partition;
        let mut dim = 0;
        for c in 0..p.class_count() {
            let s = p.class_size(c);
            dim += s * s;
        }
        for sys in self.systems.values() {
            let (ci, cj) = sys.class_pair;
            let ni = p.class_size(ci);
            let nj = p.class_size(cj);
            dim += (sys.vars.len() - sys.rows.len()) * ni * nj;
        }
        dim
    }

    /// Membership test per the defining conditions: block upper triangular,
    /// equal diagonal blocks within classes, off-diagonal systems satisfied
    /// blockwise.
    pub fn contains(&self, s: &Matrix) -> Result<bool> {
        let n = self.total_size();
        if s.rows() != n || s.cols() != n {
            return Err(Error::SizeMismatch(format!(
                "matrix is {}x{}, algebra needs {n}x{n}",
                s.rows(),
                s.cols()
            )));
        }
        let p = &self.partition;
        let t = p.len();
        for i in 0..t {
            for j in 0..i {
                if !block_view(s, p, (i, j))?.is_zero() {
                    return Ok(false);
                }
            }
        }
        for c in 0..p.class_count() {
            let members = p.class_members(c);
            let first = block_view(s, p, (members[0], members[0]))?;
            for &m in &members[1..] {
                if block_view(s, p, (m, m))? != first {
                    return Ok(false);
                }
            }
        }
        for sys in self.systems.values() {
            let (ci, cj) = sys.class_pair;
            let ni = p.class_size(ci);
            let nj = p.class_size(cj);
            if ni == 0 || nj == 0 {
                continue;
            }
            for row in &sys.rows {
                let mut acc = Matrix::zero(self.field, ni, nj);
                for (c, &(i, j)) in row.iter().zip(&sys.vars) {
                    if c.is_zero() {
                        continue;
                    }
                    acc = acc.add(&block_view(s, p, (i, j))?.scale(c));
                }
                if !acc.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// A vector-space basis of the algebra.
    pub fn spanning_set(&self) -> Vec<Matrix> {
        let p = &self.partition;
        let n = p.total();
        let mut out = Vec::new();
        for c in 0..p.class_count() {
            let members = p.class_members(c);
            let s = p.class_size(c);
            for a in 0..s {
                for b in 0..s {
                    let mut m = Matrix::zero(self.field, n, n);
                    let mut unit = Matrix::zero(self.field, s, s);
                    unit[(a, b)] = self.field.one();
                    for &i in &members {
                        block_write(&mut m, p, (i, i), &unit).unwrap();
                    }
                    out.push(m);
                }
            }
        }
        for sys in self.systems.values() {
            let (ci, cj) = sys.class_pair;
            let ni = p.class_size(ci);
            let nj = p.class_size(cj);
            if ni == 0 || nj == 0 {
                continue;
            }
            for sol in sys.solution_basis(self.field) {
                for a in 0..ni {
                    for b in 0..nj {
                        let mut m = Matrix::zero(self.field, n, n);
                        for (c, &(i, j)) in sol.iter().zip(&sys.vars) {
                            if c.is_zero() {
                                continue;
                            }
                            let mut blk = Matrix::zero(self.field, ni, nj);
                            blk[(a, b)] = c.clone();
                            block_write(&mut m, p, (i, j), &blk).unwrap();
                        }
                        out.push(m);
                    }
                }
            }
        }
        out
    }

    /// Samples an invertible member as D(I - C): D block diagonal with
    /// random invertible diagonal blocks respecting the class relation, C a
    /// random member with zero diagonal blocks (hence nilpotent).
    pub fn random_invertible(&self, rng: &mut impl Rng) -> Matrix {
        let p = &self.partition;
        let n = p.total();
        let mut d = Matrix::zero(self.field, n, n);
        for c in 0..p.class_count() {
            let members = p.class_members(c);
            let s = p.class_size(c);
            let blk = random_invertible_block(self.field, s, rng);
            for &i in &members {
                block_write(&mut d, p, (i, i), &blk).unwrap();
            }
        }
        let mut ic = Matrix::identity(self.field, n);
        for sys in self.systems.values() {
            let (ci, cj) = sys.class_pair;
            let ni = p.class_size(ci);
            let nj = p.class_size(cj);
            if ni == 0 || nj == 0 {
                continue;
            }
            for sol in sys.solution_basis(self.field) {
                let coeff = random_element(self.field, rng);
                if coeff.is_zero() {
                    continue;
                }
                let blk = random_block(self.field, ni, nj, rng);
                for (c, &(i, j)) in sol.iter().zip(&sys.vars) {
                    if c.is_zero() {
                        continue;
                    }
                    let mut cur = block_view(&ic, p, (i, j)).unwrap();
                    cur = cur.sub(&blk.scale(&c.mul(&coeff)));
                    block_write(&mut ic, p, (i, j), &cur).unwrap();
                }
            }
        }
        d.mul(&ic)
    }

    /// Verifies that the identity belongs to the algebra and that products
    /// of spanning elements stay inside; returns the violating pair of
    /// spanning indices otherwise.
    pub fn verify_closure(&self) -> Result<()> {
        let id = Matrix::identity(self.field, self.total_size());
        if !self.contains(&id)? {
            return Err(Error::InternalInconsistency("identity outside algebra".into()));
        }
        let span = self.spanning_set();
        for (i, a) in span.iter().enumerate() {
            for (j, b) in span.iter().enumerate() {
                if !self.contains(&a.mul(b))? {
                    return Err(Error::NotClosed(i, j));
                }
            }
        }
        Ok(())
    }

    /// True when every strip has size one.
    pub fn is_basic(&self) -> bool {
        self.partition.sizes().iter().all(|&s| s == 1)
    }

    /// Inflates a basic t x t algebra to block form over a step-sequence
    /// with the same class relation: identical coefficient systems applied
    /// to blocks.
    pub fn inflate(&self, sizes: Vec<usize>) -> Result<ReducedAlgebra> {
        if let Some(i) = self.partition.sizes().iter().position(|&s| s != 1) {
            return Err(Error::NotBasic(i, self.partition.sizes()[i]));
        }
        if sizes.len() != self.partition.len() {
            return Err(Error::PartitionMismatch(format!(
                "expected {} strip sizes, got {}",
                self.partition.len(),
                sizes.len()
            )));
        }
        let partition = StepPartition::new(sizes, self.partition.classes().to_vec())?;
        Ok(ReducedAlgebra {
            field: self.field,
            partition,
            systems: self.systems.clone(),
        })
    }
}

pub fn random_element(field: FieldSpec, rng: &mut impl Rng) -> FieldElement {
    match field {
        FieldSpec::Rationals => field.from_i64(rng.gen_range(-3..=3)),
        FieldSpec::PrimeField(p) => field.from_i64(rng.gen_range(0..p) as i64),
    }
}

pub fn random_block(field: FieldSpec, rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(field, rows, cols, |_, _| random_element(field, rng))
}

/// Rejection-samples an invertible square matrix.
pub fn random_invertible_block(field: FieldSpec, n: usize, rng: &mut impl Rng) -> Matrix {
    if n == 0 {
        return Matrix::zero(field, 0, 0);
    }
    loop {
        let m = random_block(field, n, n, rng);
        if m.is_invertible() {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const Q: FieldSpec = FieldSpec::Rationals;

    fn upper_triangular(field: FieldSpec, t: usize) -> ReducedAlgebra {
        ReducedAlgebra::unconstrained(field, StepPartition::discrete(vec![1; t]))
    }

    /// The algebra {S + S} of Example-style duplicated blocks: two strips of
    /// size s in one class, off-diagonal block forced to zero.
    fn duplicated(field: FieldSpec, s: usize) -> ReducedAlgebra {
        let partition = StepPartition::new(vec![s, s], vec![0, 0]).unwrap();
        let sys = ClassPairSystem {
            class_pair: (0, 0),
            vars: vec![(0, 1)],
            rows: vec![vec![field.one()]],
        };
        ReducedAlgebra::new(field, partition, vec![sys])
    }

    #[test]
    fn contains_upper_triangular() {
        let alg = upper_triangular(Q, 3);
        let s = Matrix::from_i64(Q, &[&[1, 2, 3], &[0, 4, 5], &[0, 0, 6]]);
        assert!(alg.contains(&s).unwrap());
        let bad = Matrix::from_i64(Q, &[&[1, 0, 0], &[1, 1, 0], &[0, 0, 1]]);
        assert!(!alg.contains(&bad).unwrap());
    }

    #[test]
    fn contains_checks_diagonal_classes() {
        let partition = StepPartition::new(vec![1, 1], vec![0, 0]).unwrap();
        let alg = ReducedAlgebra::unconstrained(Q, partition);
        let diag = Matrix::from_i64(Q, &[&[1, 0], &[0, 2]]);
        assert!(!alg.contains(&diag).unwrap());
        let ok = Matrix::from_i64(Q, &[&[2, 5], &[0, 2]]);
        assert!(alg.contains(&ok).unwrap());
    }

    #[test]
    fn spanning_set_upper_triangular() {
        let alg = upper_triangular(Q, 2);
        let span = alg.spanning_set();
        assert_eq!(span.len(), 3);
        assert_eq!(alg.dimension(), 3);
        for m in &span {
            assert!(alg.contains(&m).unwrap());
        }
    }

    #[test]
    fn spanning_set_duplicated_identity_only() {
        let alg = duplicated(Q, 1);
        let span = alg.spanning_set();
        assert_eq!(span.len(), 1);
        assert!(span[0].is_scalar(&Q.one()));
    }

    #[test]
    fn random_invertible_is_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let partition = StepPartition::new(vec![2, 1, 2], vec![0, 1, 0]).unwrap();
        let alg = ReducedAlgebra::unconstrained(Q, partition);
        for _ in 0..100 {
            let s = alg.random_invertible(&mut rng);
            assert!(s.is_invertible());
            assert!(alg.contains(&s).unwrap());
            // The group property: the inverse is again a member.
            assert!(alg.contains(&s.inverse().unwrap()).unwrap());
        }
    }

    #[test]
    fn random_invertible_scalar_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alg = duplicated(Q, 1);
        for _ in 0..20 {
            let s = alg.random_invertible(&mut rng);
            assert!(s.is_invertible());
            assert_eq!(s[(0, 0)], s[(1, 1)]);
            assert!(s[(0, 1)].is_zero());
        }
    }

    #[test]
    fn closure_detects_bad_system() {
        // Classes {0}, {1,2}; tie x_{01} = x_{02} but leave x_{12} free:
        // products escape the constraint.
        let partition = StepPartition::new(vec![1, 1, 1], vec![0, 1, 1]).unwrap();
        let sys = ClassPairSystem {
            class_pair: (0, 1),
            vars: vec![(0, 1), (0, 2)],
            rows: vec![vec![Q.one(), Q.from_i64(-1)]],
        };
        let bad = ReducedAlgebra::new(Q, partition.clone(), vec![sys.clone()]);
        assert!(matches!(bad.verify_closure(), Err(Error::NotClosed(..))));

        // Adding x_{12} = 0 restores closure.
        let fix = ClassPairSystem {
            class_pair: (1, 1),
            vars: vec![(1, 2)],
            rows: vec![vec![Q.one()]],
        };
        let good = ReducedAlgebra::new(Q, partition, vec![sys, fix]);
        assert!(good.verify_closure().is_ok());
    }

    #[test]
    fn full_upper_triangular_is_closed() {
        assert!(upper_triangular(Q, 3).verify_closure().is_ok());
    }

    #[test]
    fn inflate_basic() {
        // {[[a,b],[0,a]]} inflated to (2,2) gives {[[S1,S2],[0,S1]]}.
        let basic = ReducedAlgebra::unconstrained(
            Q,
            StepPartition::new(vec![1, 1], vec![0, 0]).unwrap(),
        );
        let inflated = basic.inflate(vec![2, 2]).unwrap();
        assert_eq!(inflated.dimension(), 8);
        let member = Matrix::from_i64(
            Q,
            &[&[1, 2, 3, 4], &[0, 1, 5, 6], &[0, 0, 1, 2], &[0, 0, 0, 1]],
        );
        assert!(inflated.contains(&member).unwrap());
        let not_member = Matrix::from_i64(
            Q,
            &[&[1, 2, 3, 4], &[0, 1, 5, 6], &[0, 0, 2, 2], &[0, 0, 0, 2]],
        );
        assert!(!inflated.contains(&not_member).unwrap());

        // Identity inflation returns the same algebra.
        let same = basic.inflate(vec![1, 1]).unwrap();
        assert_eq!(same, basic);

        // Non-basic input rejected.
        assert!(matches!(inflated.inflate(vec![2, 2]), Err(Error::NotBasic(..))));
        // Non step-sequence rejected.
        assert!(matches!(basic.inflate(vec![1, 2]), Err(Error::NotStepSequence(..))));
    }

    #[test]
    fn dimension_cross_check_via_entrywise_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Commutant-shaped algebra: tie (0,1) and (2,3) blocks over classes.
        let partition = StepPartition::new(vec![1, 2, 1, 2], vec![0, 1, 0, 1]).unwrap();
        let sys = ClassPairSystem {
            class_pair: (0, 1),
            vars: vec![(0, 1), (0, 3), (2, 3)],
            rows: vec![vec![Q.one(), Q.zero(), Q.from_i64(-1)]],
        };
        let alg = ReducedAlgebra::new(Q, partition, vec![sys]);
        let span = alg.spanning_set();
        assert_eq!(span.len(), alg.dimension());
        // Entrywise: members are exactly the span of the spanning set.
        let n = alg.total_size();
        let mut stacked = Matrix::zero(Q, n * n, span.len());
        for (k, s) in span.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    stacked[(i * n + j, k)] = s[(i, j)].clone();
                }
            }
        }
        assert_eq!(stacked.rank(), alg.dimension());
        // Closure under products, exercised on random pairs.
        for _ in 0..20 {
            let a = &span[rng.gen_range(0..span.len())];
            let b = &span[rng.gen_range(0..span.len())];
            assert!(alg.contains(&a.mul(b)).unwrap());
        }
    }
}
