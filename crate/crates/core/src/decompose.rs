//! Block-direct sums and Krull-Schmidt decomposition of canonical
//! matrices by strip permutation.
//!
//! A canonical matrix decomposes, by a permutation inside its stabilizer's
//! strip classes, into a block-direct sum of indecomposable canonical
//! matrices, unique up to reordering.

use std::cmp::Ordering;

use crate::belitskii::StructuredCanonicalMatrix;
use crate::error::{Error, Result};
use crate::linalg::{block_view, Matrix, StepPartition};

/// A matrix together with its strip sizes over a fixed t-strip template.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub sizes: Vec<usize>,
    pub matrix: Matrix,
}

impl BlockMatrix {
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }
}

/// Blockwise direct sum of two matrices over the same template: strip
/// sizes add, each block becomes the diagonal sum of the operand blocks.
pub fn block_direct_sum(a: &BlockMatrix, b: &BlockMatrix) -> Result<BlockMatrix> {
    if a.sizes.len() != b.sizes.len() {
        return Err(Error::PartitionMismatch(format!(
            "templates have {} and {} strips",
            a.sizes.len(),
            b.sizes.len()
        )));
    }
    let t = a.sizes.len();
    let pa = StepPartition::discrete(a.sizes.clone());
    let pb = StepPartition::discrete(b.sizes.clone());
    let sizes: Vec<usize> = (0..t).map(|i| a.sizes[i] + b.sizes[i]).collect();
    let pc = StepPartition::discrete(sizes.clone());
    let offc = pc.offsets();
    let field = a.matrix.field();
    let mut out = Matrix::zero(field, pc.total(), pc.total());
    for i in 0..t {
        for j in 0..t {
            let blk_a = block_view(&a.matrix, &pa, (i, j))?;
            let blk_b = block_view(&b.matrix, &pb, (i, j))?;
            out.write_submatrix(offc[i], offc[j], &blk_a);
            out.write_submatrix(offc[i] + a.sizes[i], offc[j] + a.sizes[j], &blk_b);
        }
    }
    Ok(BlockMatrix { sizes, matrix: out })
}

/// One indecomposable summand with its multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Summand {
    pub block: BlockMatrix,
    pub multiplicity: usize,
}

/// A Krull-Schmidt decomposition: distinct indecomposable canonical
/// summands and the permutation realizing the block-direct sum.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub summands: Vec<Summand>,
    /// Permutation P with P^-1 M P equal to the block-direct sum of the
    /// summands in listed order, each repeated by its multiplicity.
    pub permutation: Matrix,
}

/// Deterministic order on block matrices: size vector first, then entries
/// in the field order.
pub fn compare_blocks(a: &BlockMatrix, b: &BlockMatrix) -> Ordering {
    match a.sizes.cmp(&b.sizes) {
        Ordering::Equal => {}
        o => return o,
    }
    for i in 0..a.matrix.rows() {
        for j in 0..a.matrix.cols() {
            match a.matrix[(i, j)].order(&b.matrix[(i, j)]) {
                Ordering::Equal => {}
                o => return o,
            }
        }
    }
    Ordering::Equal
}

/// Decomposes a canonical matrix by gathering, inside every strip, the
/// final substrips of each stabilizer class.
///
/// Every class contributes one summand whose multiplicity is the common
/// substrip size; equal summands are merged. The permutation is block
/// diagonal with equal blocks on equivalent strips, hence lies in the
/// transformation algebra.
pub fn krull_schmidt(scm: &StructuredCanonicalMatrix) -> Result<Decomposition> {
    let field = scm.matrix.field();
    let fin = &scm.final_partition;
    let init = &scm.initial_partition;
    let t = init.len();
    let r = fin.len();

    // The final blocks of a canonical matrix are scalar inside classes and
    // zero across them.
    let mut scalar = vec![vec![field.zero(); r]; r];
    for a in 0..r {
        for b in 0..r {
            let blk = block_view(&scm.matrix, fin, (a, b))?;
            if fin.same_class(a, b) {
                scalar[a][b] = blk.scalar_value().ok_or_else(|| {
                    Error::NotCanonicalInput(format!(
                        "final block ({a},{b}) is not a scalar block"
                    ))
                })?;
            } else if !blk.is_zero() {
                return Err(Error::NotCanonicalInput(format!(
                    "final block ({a},{b}) crosses classes but is nonzero"
                )));
            }
        }
    }

    // One candidate summand per stabilizer class.
    let mut entries: Vec<(BlockMatrix, usize, Vec<usize>)> = Vec::new(); // (block, multiplicity, strips)
    for k in 0..fin.class_count() {
        let members = fin.class_members(k);
        let mult = fin.class_size(k);
        let mut sizes = vec![0usize; t];
        for &a in &members {
            sizes[scm.origin[a]] += 1;
        }
        let dim = members.len();
        let mut mat = Matrix::zero(field, dim, dim);
        for (x, &a) in members.iter().enumerate() {
            for (y, &b) in members.iter().enumerate() {
                mat[(x, y)] = scalar[a][b].clone();
            }
        }
        entries.push((BlockMatrix { sizes, matrix: mat }, mult, members));
    }
    // Deterministic output order, which also gathers equal summands
    // adjacently for merging.
    entries.sort_by(|x, y| compare_blocks(&x.0, &y.0));

    // Permutation: inside each initial strip, first the entries of the
    // first class copy by copy, then the next class, preserving substrip
    // order.
    let offs_fin = fin.offsets();
    let offs_init = init.offsets();
    let n = scm.matrix.rows();
    let mut new_to_old = Vec::with_capacity(n);
    for i in 0..t {
        for (_, mult, members) in &entries {
            for copy in 0..*mult {
                for &a in members {
                    if scm.origin[a] == i {
                        new_to_old.push(offs_fin[a] + copy);
                    }
                }
            }
        }
        debug_assert!(new_to_old.len() <= n);
        let _ = offs_init;
    }
    if new_to_old.len() != n {
        return Err(Error::InternalInconsistency(
            "permutation does not cover every entry".into(),
        ));
    }
    let mut perm = Matrix::zero(field, n, n);
    for (new, &old) in new_to_old.iter().enumerate() {
        perm[(old, new)] = field.one();
    }

    // Merge equal summands.
    let mut summands: Vec<Summand> = Vec::new();
    for (block, mult, _) in entries {
        match summands.last_mut() {
            Some(last) if last.block == block => last.multiplicity += mult,
            _ => summands.push(Summand { block, multiplicity: mult }),
        }
    }

    // P^-1 M P must equal the assembled block-direct sum exactly.
    let conj = perm.inverse()?.mul(&scm.matrix).mul(&perm);
    let mut assembled = BlockMatrix {
        sizes: vec![0; t],
        matrix: Matrix::zero(field, 0, 0),
    };
    for s in &summands {
        for _ in 0..s.multiplicity {
            assembled = block_direct_sum(&assembled, &s.block)?;
        }
    }
    if assembled.matrix != conj {
        return Err(Error::InternalInconsistency(
            "permuted matrix does not match the block-direct sum".into(),
        ));
    }
    // The permutation respects the initial partition and its classes.
    for i in 0..t {
        for j in 0..t {
            let blk = perm.submatrix(offs_init[i], offs_init[i + 1], offs_init[j], offs_init[j + 1]);
            if i != j && !blk.is_zero() {
                return Err(Error::InternalInconsistency(
                    "permutation is not block diagonal".into(),
                ));
            }
        }
    }
    for i in 0..t {
        for j in i + 1..t {
            if init.same_class(i, j) {
                let bi = perm.submatrix(offs_init[i], offs_init[i + 1], offs_init[i], offs_init[i + 1]);
                let bj = perm.submatrix(offs_init[j], offs_init[j + 1], offs_init[j], offs_init[j + 1]);
                if bi != bj {
                    return Err(Error::InternalInconsistency(
                        "permutation differs across equivalent strips".into(),
                    ));
                }
            }
        }
    }
    Ok(Decomposition { summands, permutation: perm })
}

/// True iff the canonical matrix has exactly one summand with
/// multiplicity one and positive size.
pub fn is_indecomposable(scm: &StructuredCanonicalMatrix) -> Result<bool> {
    let d = krull_schmidt(scm)?;
    Ok(d.summands.len() == 1
        && d.summands[0].multiplicity == 1
        && d.summands[0].block.total() > 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ReducedAlgebra;
    use crate::belitskii::canonicalize;
    use crate::field::FieldSpec;
    use crate::problems::{simsim_pack, simsim_unpack};

    const Q: FieldSpec = FieldSpec::Rationals;

    fn similarity_algebra(n: usize) -> ReducedAlgebra {
        ReducedAlgebra::unconstrained(Q, StepPartition::discrete(vec![n]))
    }

    fn jordan(lambda: i64, n: usize) -> Matrix {
        let mut m = Matrix::zero(Q, n, n);
        for i in 0..n {
            m[(i, i)] = Q.from_i64(lambda);
            if i + 1 < n {
                m[(i, i + 1)] = Q.one();
            }
        }
        m
    }

    #[test]
    fn direct_sum_neutral_element() {
        let empty = BlockMatrix { sizes: vec![0], matrix: Matrix::zero(Q, 0, 0) };
        let m = BlockMatrix { sizes: vec![2], matrix: jordan(1, 2) };
        let out = block_direct_sum(&m, &empty).unwrap();
        assert_eq!(out, m);
        let out = block_direct_sum(&empty, &m).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn direct_sum_of_eigenvalues() {
        let a = BlockMatrix { sizes: vec![1], matrix: Matrix::from_i64(Q, &[&[3]]) };
        let b = BlockMatrix { sizes: vec![1], matrix: Matrix::from_i64(Q, &[&[5]]) };
        let out = block_direct_sum(&a, &b).unwrap();
        assert_eq!(out.matrix, Matrix::from_i64(Q, &[&[3, 0], &[0, 5]]));
    }

    #[test]
    fn direct_sum_of_packed_pairs() {
        let a = Matrix::from_i64(Q, &[&[1]]);
        let b = Matrix::from_i64(Q, &[&[2]]);
        let a2 = Matrix::from_i64(Q, &[&[3]]);
        let b2 = Matrix::from_i64(Q, &[&[4]]);
        let p1 = BlockMatrix { sizes: vec![1, 1], matrix: simsim_pack(&a, &b).unwrap() };
        let p2 = BlockMatrix { sizes: vec![1, 1], matrix: simsim_pack(&a2, &b2).unwrap() };
        let sum = block_direct_sum(&p1, &p2).unwrap();
        let (sa, sb) = simsim_unpack(&sum.matrix).unwrap();
        assert_eq!(sa, a.direct_sum(&a2));
        assert_eq!(sb, b.direct_sum(&b2));
    }

    #[test]
    fn zero_matrix_splits_into_copies() {
        let alg = similarity_algebra(2);
        let scm = canonicalize(&alg, &Matrix::zero(Q, 2, 2)).unwrap();
        let d = krull_schmidt(&scm).unwrap();
        assert_eq!(d.summands.len(), 1);
        assert_eq!(d.summands[0].multiplicity, 2);
        assert_eq!(d.summands[0].block.sizes, vec![1]);
        assert!(d.summands[0].block.matrix.is_zero());
        assert!(!is_indecomposable(&scm).unwrap());
    }

    #[test]
    fn weyr_of_mixed_jordan_splits() {
        // J_2(0) + J_1(0): summands J_2(0) (as its Weyr form, which at one
        // block is the Jordan block itself) and the 1x1 zero.
        let alg = similarity_algebra(3);
        let m = jordan(0, 2).direct_sum(&jordan(0, 1));
        let scm = canonicalize(&alg, &m).unwrap();
        let d = krull_schmidt(&scm).unwrap();
        assert_eq!(d.summands.len(), 2);
        let mats: Vec<&Matrix> = d.summands.iter().map(|s| &s.block.matrix).collect();
        assert!(mats.contains(&&jordan(0, 2)));
        assert!(mats.contains(&&Matrix::zero(Q, 1, 1)));
        assert!(d.summands.iter().all(|s| s.multiplicity == 1));
    }

    #[test]
    fn single_jordan_blocks_are_indecomposable() {
        for m in 1..=4 {
            let alg = similarity_algebra(m);
            let scm = canonicalize(&alg, &jordan(7, m)).unwrap();
            assert!(is_indecomposable(&scm).unwrap(), "J_{m}(7)");
        }
        let alg = similarity_algebra(2);
        let scm = canonicalize(&alg, &Matrix::from_i64(Q, &[&[1, 0], &[0, 2]])).unwrap();
        assert!(!is_indecomposable(&scm).unwrap());
    }

    #[test]
    fn golden_pair_is_indecomposable() {
        let w = Matrix::from_i64(
            Q,
            &[&[5, 0, 1, 0], &[0, 5, 0, 1], &[0, 0, 5, 0], &[0, 0, 0, 5]],
        );
        let c = Matrix::from_i64(
            Q,
            &[
                &[-1, 1, 2, 0],
                &[0, -1, 0, 1],
                &[3, 0, 0, 0],
                &[0, 3, 0, 0],
            ],
        );
        let ps = crate::problems::simsim_problem(Q).unwrap();
        let m = simsim_pack(&w, &c).unwrap();
        let scm = crate::belitskii::canonicalize_problem(&ps, &[4, 4], &m).unwrap();
        assert!(is_indecomposable(&scm).unwrap());
    }

    #[test]
    fn reconstruction_matches() {
        let alg = similarity_algebra(5);
        let m = jordan(0, 2).direct_sum(&jordan(0, 1)).direct_sum(&jordan(2, 2));
        let scm = canonicalize(&alg, &m).unwrap();
        let d = krull_schmidt(&scm).unwrap();
        // Rebuild from summands and compare through the permutation.
        let mut rebuilt = BlockMatrix { sizes: vec![0], matrix: Matrix::zero(Q, 0, 0) };
        for s in &d.summands {
            for _ in 0..s.multiplicity {
                rebuilt = block_direct_sum(&rebuilt, &s.block).unwrap();
            }
        }
        let p = &d.permutation;
        assert_eq!(p.inverse().unwrap().mul(&scm.matrix).mul(p), rebuilt.matrix);
        assert!(alg.contains(p).unwrap());
    }

    #[test]
    fn rejects_non_canonical_input() {
        // The zero matrix keeps one strip of size two; planting a
        // non-scalar block there breaks the stable-block structure.
        let alg = similarity_algebra(2);
        let mut scm = canonicalize(&alg, &Matrix::zero(Q, 2, 2)).unwrap();
        assert_eq!(scm.final_partition.sizes(), &[2]);
        scm.matrix = jordan(0, 2);
        assert!(matches!(krull_schmidt(&scm), Err(Error::NotCanonicalInput(_))));
    }
}
