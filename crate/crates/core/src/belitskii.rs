//! The block reduction to canonical form.
//!
//! Given a reduced algebra and a conformal matrix, blocks are processed
//! bottom row first, left to right, then upward. The first unprocessed
//! block is either zeroed by admissible additions (and marked), brought to
//! rank normal form by independent two-sided equivalence, or brought to
//! Weyr form by similarity; the algebra is then restricted to the
//! transformations preserving the reduced block, which refines the
//! partition, and the process repeats until every block is boxed. The
//! result is canonical: two matrices are equivalent under the algebra's
//! invertible elements iff their outputs coincide exactly.

use std::collections::BTreeMap;

use crate::algebra::{ClassPairSystem, ReducedAlgebra};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::linalg::{block_view, block_write, Matrix, StepPartition};
use crate::problems::{apply_dependent_rules, BlockClassification, ProblemSpec};
use crate::weyr::{commutant_algebra, is_weyr, weyr_form, WeyrStructure};

/// What one reduction step did to its box.
#[derive(Debug, Clone, PartialEq)]
pub enum BoxKind {
    /// Case I: zeroed by additions from other blocks.
    MarkedZero,
    /// Case II: rank normal form [[0, I], [0, 0]].
    ZeroIdentity { rank: usize },
    /// Case III: Weyr form.
    Weyr(WeyrStructure),
}

impl BoxKind {
    pub fn label(&self) -> &'static str {
        match self {
            BoxKind::MarkedZero => "empty",
            BoxKind::ZeroIdentity { .. } => "zero_identity",
            BoxKind::Weyr(_) => "weyr",
        }
    }
}

/// One box of the ledger: an entry region of the matrix together with the
/// form it was reduced to.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRecord {
    /// Row entry range, half open.
    pub rows: (usize, usize),
    /// Column entry range, half open.
    pub cols: (usize, usize),
    pub kind: BoxKind,
}

/// Per-step trace: the refined algebra after each box.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub box_index: usize,
    pub algebra_after: ReducedAlgebra,
}

/// The output of canonicalization: the canonical matrix, its box ledger,
/// the refined final partition, the stabilizer algebra, and a witness
/// conjugator.
#[derive(Debug, Clone)]
pub struct StructuredCanonicalMatrix {
    pub matrix: Matrix,
    pub initial_partition: StepPartition,
    pub final_partition: StepPartition,
    pub boxes: Vec<BoxRecord>,
    pub stabilizer: ReducedAlgebra,
    /// Original strip of each final strip.
    pub origin: Vec<usize>,
    /// S in the input algebra with S^-1 M S = matrix.
    pub witness: Matrix,
    pub trace: Vec<TraceStep>,
}

struct Reducer<'a> {
    field: FieldSpec,
    m: Matrix,
    algebra: ReducedAlgebra,
    origin: Vec<usize>,
    boxes: Vec<BoxRecord>,
    witness: Matrix,
    trace: Vec<TraceStep>,
    initial_partition: StepPartition,
    classification: Option<&'a BlockClassification>,
}

/// Canonicalizes a matrix under a reduced algebra with no matrix-space
/// restriction: every block is free.
pub fn canonicalize(algebra: &ReducedAlgebra, m: &Matrix) -> Result<StructuredCanonicalMatrix> {
    canonicalize_inner(algebra, m, None)
}

/// Canonicalizes a member of a problem's matrix space: dependent blocks
/// are never reduced, only recomputed from their rules.
pub fn canonicalize_with_space(
    algebra: &ReducedAlgebra,
    m: &Matrix,
    classification: &BlockClassification,
) -> Result<StructuredCanonicalMatrix> {
    canonicalize_inner(algebra, m, Some(classification))
}

/// Convenience entry point for problems: inflates the algebra, checks
/// membership, classifies blocks, and reduces.
pub fn canonicalize_problem(
    ps: &ProblemSpec,
    sizes: &[usize],
    m: &Matrix,
) -> Result<StructuredCanonicalMatrix> {
    let algebra = ps.algebra(sizes.to_vec())?;
    let partition = ps.partition(sizes.to_vec())?;
    if !ps.mspace_contains(&partition, m)? {
        return Err(Error::InternalInconsistency(
            "matrix is not in the problem's matrix space".into(),
        ));
    }
    let cls = ps.classify_blocks();
    canonicalize_inner(&algebra, m, Some(&cls))
}

fn canonicalize_inner(
    algebra: &ReducedAlgebra,
    m: &Matrix,
    classification: Option<&BlockClassification>,
) -> Result<StructuredCanonicalMatrix> {
    let n = algebra.total_size();
    if m.rows() != n || m.cols() != n {
        return Err(Error::SizeMismatch(format!(
            "matrix is {}x{}, algebra needs {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    let mut red = Reducer {
        field: algebra.field,
        m: m.clone(),
        algebra: algebra.clone(),
        origin: (0..algebra.partition.len()).collect(),
        boxes: Vec::new(),
        witness: Matrix::identity(algebra.field, n),
        trace: Vec::new(),
        initial_partition: algebra.partition.clone(),
        classification,
    };
    red.compact()?;
    let limit = n * n + red.algebra.partition.len() + 4;
    for _ in 0..=limit {
        red.assert_dependent_rules()?;
        match red.find_next_block() {
            None => {
                return Ok(StructuredCanonicalMatrix {
                    matrix: red.m,
                    initial_partition: red.initial_partition,
                    final_partition: red.algebra.partition.clone(),
                    boxes: red.boxes,
                    stabilizer: red.algebra,
                    origin: red.origin,
                    witness: red.witness,
                    trace: red.trace,
                });
            }
            Some((l, r)) => red.process(l, r)?,
        }
    }
    Err(Error::InternalInconsistency("reduction did not terminate".into()))
}

/// Equivalence test: canonical forms agree exactly.
pub fn are_equivalent(algebra: &ReducedAlgebra, m: &Matrix, n: &Matrix) -> Result<bool> {
    Ok(canonicalize(algebra, m)?.matrix == canonicalize(algebra, n)?.matrix)
}

/// Equivalence within a problem's matrix space.
pub fn are_equivalent_problem(
    ps: &ProblemSpec,
    sizes: &[usize],
    m: &Matrix,
    n: &Matrix,
) -> Result<bool> {
    Ok(canonicalize_problem(ps, sizes, m)?.matrix == canonicalize_problem(ps, sizes, n)?.matrix)
}

impl<'a> Reducer<'a> {
    fn partition(&self) -> &StepPartition {
        &self.algebra.partition
    }

    /// Drops zero-size strips; entry ranges are unaffected.
    fn compact(&mut self) -> Result<()> {
        let p = self.partition().clone();
        if p.sizes().iter().all(|&s| s > 0) {
            return Ok(());
        }
        let keep: Vec<usize> = (0..p.len()).filter(|&i| p.sizes()[i] > 0).collect();
        let mut new_index = vec![usize::MAX; p.len()];
        for (ni, &oi) in keep.iter().enumerate() {
            new_index[oi] = ni;
        }
        let sizes: Vec<usize> = keep.iter().map(|&i| p.sizes()[i]).collect();
        let classes: Vec<usize> = keep.iter().map(|&i| p.class_of(i)).collect();
        let partition = StepPartition::new(sizes, classes)?;
        let mut systems = Vec::new();
        for sys in self.algebra.systems.values() {
            let (ci, cj) = sys.class_pair;
            if sys.vars.is_empty() || p.class_size(ci) == 0 || p.class_size(cj) == 0 {
                continue;
            }
            let vars: Vec<(usize, usize)> =
                sys.vars.iter().map(|&(i, j)| (new_index[i], new_index[j])).collect();
            let pair = (
                partition.class_of(vars[0].0),
                partition.class_of(vars[0].1),
            );
            systems.push(ClassPairSystem { class_pair: pair, vars, rows: sys.rows.clone() });
        }
        self.origin = keep.iter().map(|&i| self.origin[i]).collect();
        self.algebra = ReducedAlgebra::new(self.field, partition, systems);
        Ok(())
    }

    /// First block, bottom row leftmost first, that is not zero sized, not
    /// inside an existing box, and not part of a dependent position.
    fn find_next_block(&self) -> Option<(usize, usize)> {
        let p = self.partition();
        let t = p.len();
        let off = p.offsets();
        for l in (0..t).rev() {
            for r in 0..t {
                if p.sizes()[l] == 0 || p.sizes()[r] == 0 {
                    continue;
                }
                let region = ((off[l], off[l + 1]), (off[r], off[r + 1]));
                if self.boxes.iter().any(|b| contains_region(b, region)) {
                    continue;
                }
                if let Some(cls) = self.classification {
                    if cls.dependent.contains_key(&(self.origin[l], self.origin[r])) {
                        continue;
                    }
                }
                return Some((l, r));
            }
        }
        None
    }

    fn block(&self, l: usize, r: usize) -> Matrix {
        block_view(&self.m, self.partition(), (l, r)).expect("conformal by construction")
    }

    /// Reads the stable scalar of an already reduced block: c for a
    /// same-class block equal to c I, 0 for a zero block across classes.
    fn stable_scalar(&self, u: usize, v: usize) -> Result<FieldElement> {
        let b = self.block(u, v);
        if self.partition().same_class(u, v) {
            b.scalar_value().ok_or_else(|| {
                Error::InternalInconsistency(format!(
                    "block ({u},{v}) should be a stable scalar block"
                ))
            })
        } else if b.is_zero() {
            Ok(self.field.zero())
        } else {
            Err(Error::InternalInconsistency(format!(
                "block ({u},{v}) should be stably zero"
            )))
        }
    }

    /// The admissible-addition covector for block (l, r) over the
    /// variables of its class-pair system: earlier stable blocks of row l
    /// weight the column variables, earlier stable blocks of column r
    /// weight the row variables.
    fn covector(&self, l: usize, r: usize) -> Result<Vec<FieldElement>> {
        let p = self.partition();
        let t = p.len();
        let (ci, cj) = (p.class_of(l), p.class_of(r));
        let sys = &self.algebra.systems[&(ci, cj)];
        let mut phi = vec![self.field.zero(); sys.vars.len()];
        for i in 0..t {
            if i < r && p.class_of(i) == ci {
                let a = self.stable_scalar(l, i)?;
                if !a.is_zero() {
                    let vi = sys.var_index((i, r)).ok_or_else(|| {
                        Error::InternalInconsistency(format!("missing variable ({i},{r})"))
                    })?;
                    phi[vi] = phi[vi].add(&a);
                }
            }
            if i > l && p.class_of(i) == cj {
                let a = self.stable_scalar(i, r)?;
                if !a.is_zero() {
                    let vi = sys.var_index((l, i)).ok_or_else(|| {
                        Error::InternalInconsistency(format!("missing variable ({l},{i})"))
                    })?;
                    phi[vi] = phi[vi].sub(&a);
                }
            }
        }
        Ok(phi)
    }

    fn conjugate(&mut self, s: &Matrix) -> Result<()> {
        debug_assert!(self.algebra.contains(s)?);
        let s_inv = s.inverse()?;
        self.m = s_inv.mul(&self.m).mul(s);
        self.witness = self.witness.mul(s);
        Ok(())
    }

    fn push_box(&mut self, l: usize, r: usize, kind: BoxKind) {
        let off = self.partition().offsets();
        self.boxes.push(BoxRecord {
            rows: (off[l], off[l + 1]),
            cols: (off[r], off[r + 1]),
            kind,
        });
        self.trace.push(TraceStep {
            box_index: self.boxes.len() - 1,
            algebra_after: self.algebra.clone(),
        });
    }

    fn process(&mut self, l: usize, r: usize) -> Result<()> {
        let p = self.partition().clone();
        let (ci, cj) = (p.class_of(l), p.class_of(r));
        let phi = self.covector(l, r)?;
        let implied = self.algebra.systems[&(ci, cj)].implies(&phi);
        if !implied {
            self.case_one(l, r, phi)
        } else if ci != cj {
            self.case_two(l, r)
        } else {
            self.case_three(l, r)
        }
    }

    /// Case I: a nonzero admissible addition exists, so the whole block
    /// can be zeroed. The reachable additions form either {0} or the full
    /// block space because the constraints are scalars acting uniformly on
    /// equally sized blocks; independence of the covector from the system
    /// rows picks the full space, and the explicit transformation below is
    /// verified to achieve zero exactly.
    fn case_one(&mut self, l: usize, r: usize, phi: Vec<FieldElement>) -> Result<()> {
        let p = self.partition().clone();
        let (ci, cj) = (p.class_of(l), p.class_of(r));
        let b = self.block(l, r);
        if !b.is_zero() {
            // Solve for a coefficient vector u with system rows * u = 0 and
            // phi * u = 1, then place -B scaled by u at the variables.
            let sys = &self.algebra.systems[&(ci, cj)];
            let nv = sys.vars.len();
            let mut a = Matrix::zero(self.field, sys.rows.len() + 1, nv);
            for (i, row) in sys.rows.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    a[(i, j)] = c.clone();
                }
            }
            for (j, c) in phi.iter().enumerate() {
                a[(sys.rows.len(), j)] = c.clone();
            }
            let mut rhs = Matrix::zero(self.field, sys.rows.len() + 1, 1);
            rhs[(sys.rows.len(), 0)] = self.field.one();
            let sol = a.solve(&rhs).ok_or_else(|| {
                Error::InternalInconsistency("independent covector must be reachable".into())
            })?;
            let vars = sys.vars.clone();
            let mut s = Matrix::identity(self.field, self.m.rows());
            for (k, &(i, j)) in vars.iter().enumerate() {
                let u = sol.particular[(k, 0)].clone();
                if !u.is_zero() {
                    let blk = b.scale(&u.neg());
                    block_write(&mut s, &p, (i, j), &blk)?;
                }
            }
            self.conjugate(&s)?;
        }
        if !self.block(l, r).is_zero() {
            return Err(Error::InternalInconsistency(
                "Case I transformation failed to zero the block".into(),
            ));
        }
        // Restrict the algebra: the addition covector becomes a relation.
        let sys = self.algebra.systems.get_mut(&(ci, cj)).expect("system exists");
        sys.rows.push(phi);
        sys.reduce(self.field);
        self.push_box(l, r, BoxKind::MarkedZero);
        Ok(())
    }

    /// Case II: no additions and independent row/column classes; the block
    /// is brought to [[0, I], [0, 0]] and preserving it ties the rank part
    /// of the row class to the rank part of the column class.
    fn case_two(&mut self, l: usize, r: usize) -> Result<()> {
        let p = self.partition().clone();
        let b = self.block(l, r);
        let (nl, nr) = (b.rows(), b.cols());
        let red = b.rref();
        let rho = red.rank;
        let p_ll = red.transform.inverse()?;
        let mut q_rr = Matrix::zero(self.field, nr, nr);
        for (c, v) in b.nullspace().iter().enumerate() {
            q_rr.write_submatrix(0, c, v);
        }
        for (s, &pc) in red.pivot_cols.iter().enumerate() {
            q_rr[(pc, nr - rho + s)] = self.field.one();
        }
        if !q_rr.is_invertible() {
            return Err(Error::InternalInconsistency(
                "rank-normal-form column transform is singular".into(),
            ));
        }
        let mut s = Matrix::identity(self.field, self.m.rows());
        for i in 0..p.len() {
            if p.class_of(i) == p.class_of(l) {
                block_write(&mut s, &p, (i, i), &p_ll)?;
            } else if p.class_of(i) == p.class_of(r) {
                block_write(&mut s, &p, (i, i), &q_rr)?;
            }
        }
        self.conjugate(&s)?;
        let mut want = Matrix::zero(self.field, nl, nr);
        for i in 0..rho {
            want[(i, nr - rho + i)] = self.field.one();
        }
        if self.block(l, r) != want {
            return Err(Error::InternalInconsistency(
                "Case II transformation missed the rank normal form".into(),
            ));
        }
        self.push_box(l, r, BoxKind::ZeroIdentity { rank: rho });
        let plan = self.plan_case_two(l, r, rho);
        self.apply_refinement(plan)
    }

    /// Case III: no additions within one class; the block is brought to
    /// Weyr form and preserving it restricts the class's diagonal blocks
    /// to the Weyr commutant, splitting the class along the standard
    /// partition.
    fn case_three(&mut self, l: usize, r: usize) -> Result<()> {
        let p = self.partition().clone();
        let b = self.block(l, r);
        let (w, pw, ws) = weyr_form(&b)?;
        let mut s = Matrix::identity(self.field, self.m.rows());
        for i in 0..p.len() {
            if p.class_of(i) == p.class_of(l) {
                block_write(&mut s, &p, (i, i), &pw)?;
            }
        }
        self.conjugate(&s)?;
        if self.block(l, r) != w {
            return Err(Error::InternalInconsistency(
                "Case III transformation missed the Weyr form".into(),
            ));
        }
        self.push_box(l, r, BoxKind::Weyr(ws.clone()));
        let plan = self.plan_case_three(l, ws);
        self.apply_refinement(plan)
    }

    fn plan_case_two(&self, l: usize, r: usize, rho: usize) -> RefinementPlan {
        let p = self.partition();
        let t = p.len();
        let (ci, cj) = (p.class_of(l), p.class_of(r));
        let (nl, nr) = (p.sizes()[l], p.sizes()[r]);
        let k = p.class_count();
        // Fresh class ids: k = merged rank parts, k+1 = row remainder,
        // k+2 = column remainder.
        let mut splits = Vec::with_capacity(t);
        let mut part_class = Vec::with_capacity(t);
        for i in 0..t {
            let c = p.class_of(i);
            if c == ci {
                splits.push(vec![rho, nl - rho]);
                part_class.push(vec![k, k + 1]);
            } else if c == cj {
                splits.push(vec![nr - rho, rho]);
                part_class.push(vec![k + 2, k]);
            } else {
                splits.push(vec![p.sizes()[i]]);
                part_class.push(vec![c]);
            }
        }
        let new_index = first_new_indices(&splits);
        // Diagonal blocks of each class stay equal: the off-diagonal
        // corners of the split diagonal blocks are tied across each class.
        let mut extra_rows = Vec::new();
        for (class, members) in [(ci, p.class_members(ci)), (cj, p.class_members(cj))] {
            let _ = class;
            let first = members[0];
            for &other in &members[1..] {
                extra_rows.push(vec![
                    ((new_index[first], new_index[first] + 1), self.field.one()),
                    ((new_index[other], new_index[other] + 1), self.field.one().neg()),
                ]);
            }
        }
        RefinementPlan { splits, part_class, extra_rows }
    }

    fn plan_case_three(&self, l: usize, ws: WeyrStructure) -> RefinementPlan {
        let p = self.partition();
        let t = p.len();
        let c = p.class_of(l);
        let k = p.class_count();
        let sub = ws.standard_partition();
        let sub_sizes = sub.sizes().to_vec();
        let sub_classes = sub.classes().to_vec();
        let mut splits = Vec::with_capacity(t);
        let mut part_class = Vec::with_capacity(t);
        for i in 0..t {
            if p.class_of(i) == c {
                splits.push(sub_sizes.clone());
                part_class.push(sub_classes.iter().map(|&sc| k + sc).collect());
            } else {
                splits.push(vec![p.sizes()[i]]);
                part_class.push(vec![p.class_of(i)]);
            }
        }
        let new_index = first_new_indices(&splits);
        let members = p.class_members(c);
        let mut extra_rows = Vec::new();
        // The shared diagonal block commutes with the Weyr form: instantiate
        // the commutant constraints inside every diagonal block of the
        // class.
        let commutant = commutant_algebra(&ws, self.field);
        for sys in commutant.systems.values() {
            for row in &sys.rows {
                for &i in &members {
                    let sparse: Vec<((usize, usize), FieldElement)> = row
                        .iter()
                        .zip(&sys.vars)
                        .filter(|(coef, _)| !coef.is_zero())
                        .map(|(coef, &(a, b))| {
                            ((new_index[i] + a, new_index[i] + b), coef.clone())
                        })
                        .collect();
                    if !sparse.is_empty() {
                        extra_rows.push(sparse);
                    }
                }
            }
        }
        // Diagonal blocks across the class stay equal cell by cell.
        let first = members[0];
        for &other in &members[1..] {
            for a in 0..sub_sizes.len() {
                for b in a + 1..sub_sizes.len() {
                    extra_rows.push(vec![
                        ((new_index[first] + a, new_index[first] + b), self.field.one()),
                        ((new_index[other] + a, new_index[other] + b), self.field.one().neg()),
                    ]);
                }
            }
        }
        RefinementPlan { splits, part_class, extra_rows }
    }

    /// Rewrites the partition and every constraint system for the split
    /// strips, then drops zero-size strips.
    fn apply_refinement(&mut self, plan: RefinementPlan) -> Result<()> {
        let p = self.partition().clone();
        let t = p.len();
        let new_index = first_new_indices(&plan.splits);
        let mut sizes = Vec::new();
        let mut classes_raw = Vec::new();
        let mut origin = Vec::new();
        for i in 0..t {
            for (part, &sz) in plan.splits[i].iter().enumerate() {
                sizes.push(sz);
                classes_raw.push(plan.part_class[i][part]);
                origin.push(self.origin[i]);
            }
        }
        let partition = StepPartition::new(sizes, classes_raw)?;

        // Sparse rows in new strip indices, grouped by new class pair.
        let mut sparse_rows: BTreeMap<(usize, usize), Vec<Vec<((usize, usize), FieldElement)>>> =
            BTreeMap::new();
        let mut add_row = |row: Vec<((usize, usize), FieldElement)>| -> Result<()> {
            let (u, v) = row[0].0;
            let pair = (partition.class_of(u), partition.class_of(v));
            for &((a, b), _) in &row {
                if a >= b {
                    return Err(Error::InternalInconsistency(
                        "refined constraint touches a non-variable position".into(),
                    ));
                }
                if (partition.class_of(a), partition.class_of(b)) != pair {
                    return Err(Error::InternalInconsistency(
                        "refined constraint straddles class pairs".into(),
                    ));
                }
            }
            sparse_rows.entry(pair).or_default().push(row);
            Ok(())
        };
        for sys in self.algebra.systems.values() {
            if sys.vars.is_empty() || sys.rows.is_empty() {
                continue;
            }
            let (i0, j0) = sys.vars[0];
            let parts_i = plan.splits[i0].len();
            let parts_j = plan.splits[j0].len();
            for row in &sys.rows {
                for a in 0..parts_i {
                    for b in 0..parts_j {
                        let sparse: Vec<((usize, usize), FieldElement)> = row
                            .iter()
                            .zip(&sys.vars)
                            .filter(|(c, _)| !c.is_zero())
                            .map(|(c, &(i, j))| {
                                ((new_index[i] + a, new_index[j] + b), c.clone())
                            })
                            .collect();
                        if !sparse.is_empty() {
                            add_row(sparse)?;
                        }
                    }
                }
            }
        }
        for row in plan.extra_rows {
            if !row.is_empty() {
                add_row(row)?;
            }
        }

        let mut systems = Vec::new();
        for (pair, rows) in sparse_rows {
            let vars = ReducedAlgebra::pair_positions(&partition, pair.0, pair.1);
            let index: BTreeMap<(usize, usize), usize> =
                vars.iter().enumerate().map(|(k, &v)| (v, k)).collect();
            let dense: Vec<Vec<FieldElement>> = rows
                .into_iter()
                .map(|row| {
                    let mut out = vec![self.field.zero(); vars.len()];
                    for (pos, c) in row {
                        out[index[&pos]] = out[index[&pos]].add(&c);
                    }
                    out
                })
                .collect();
            systems.push(ClassPairSystem { class_pair: pair, vars, rows: dense });
        }
        self.origin = origin;
        self.algebra = ReducedAlgebra::new(self.field, partition, systems);
        self.compact()
    }

    /// Dependent blocks must equal their rule values throughout; they are
    /// rewritten from the rules so later covector reads see exact values.
    fn assert_dependent_rules(&mut self) -> Result<()> {
        let Some(cls) = self.classification else {
            return Ok(());
        };
        let expected = {
            let mut copy = self.m.clone();
            apply_dependent_rules(cls, &self.initial_partition, &mut copy)?;
            copy
        };
        if expected != self.m {
            return Err(Error::InternalInconsistency(
                "a dependent block no longer matches its rule".into(),
            ));
        }
        Ok(())
    }
}

struct RefinementPlan {
    splits: Vec<Vec<usize>>,
    part_class: Vec<Vec<usize>>,
    extra_rows: Vec<Vec<((usize, usize), FieldElement)>>,
}

/// One strip of the q-strip subdivision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QStrip {
    /// Index of the initial strip it subdivides.
    pub origin: usize,
    /// Absolute entry range, half open.
    pub start: usize,
    pub end: usize,
}

/// The q-strips of a structured canonical matrix with their linking
/// classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QStrips {
    pub strips: Vec<QStrip>,
    /// Linking class of each strip (normalized ids).
    pub linked: Vec<usize>,
}

/// Internal cell of a box: entry regions plus whether the cell is an
/// identity, a scalar diagonal, or zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellKind {
    Identity,
    ScalarDiag,
}

fn box_cells(b: &BoxRecord) -> Vec<((usize, usize), (usize, usize), CellKind)> {
    let (r0, _r1) = b.rows;
    let (c0, c1) = b.cols;
    match &b.kind {
        BoxKind::MarkedZero => Vec::new(),
        BoxKind::ZeroIdentity { rank } => {
            if *rank == 0 {
                Vec::new()
            } else {
                vec![((r0, r0 + rank), (c1 - rank, c1), CellKind::Identity)]
            }
        }
        BoxKind::Weyr(ws) => {
            let part = ws.standard_partition();
            let off = part.offsets();
            let mut out = Vec::new();
            for (i, strip) in ws.strips.iter().enumerate() {
                out.push((
                    (r0 + off[i], r0 + off[i + 1]),
                    (c0 + off[i], c0 + off[i + 1]),
                    CellKind::ScalarDiag,
                ));
                if strip.level < strip.cell_size {
                    let j = ws
                        .strips
                        .iter()
                        .position(|t| {
                            t.eig == strip.eig
                                && t.group == strip.group
                                && t.level == strip.level + 1
                        })
                        .expect("next level exists");
                    out.push((
                        (r0 + off[i], r0 + off[i + 1]),
                        (c0 + off[j], c0 + off[j + 1]),
                        CellKind::Identity,
                    ));
                }
            }
            out
        }
    }
}

/// The q-strip subdivision and linking relation after the first q boxes:
/// cuts extend the cell boundaries of those boxes and propagate
/// perpendicularly through identity and scalar cells; strips are linked
/// when they sit at the same position of equivalent initial strips or
/// share an identity cell, transitively.
pub fn q_strips(scm: &StructuredCanonicalMatrix, q: usize) -> Result<QStrips> {
    if q > scm.boxes.len() {
        return Err(Error::SizeMismatch(format!(
            "q = {q} exceeds the number of boxes {}",
            scm.boxes.len()
        )));
    }
    let init = &scm.initial_partition;
    let n = init.total();
    let cells: Vec<_> = scm.boxes[..q].iter().flat_map(box_cells).collect();
    // Global cut positions; strip boundaries are implicit.
    let mut cuts: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
    for ((a0, a1), (b0, b1), _) in &cells {
        for x in [*a0, *a1] {
            if x > 0 && x < n {
                cuts.insert(x);
            }
        }
        for y in [*b0, *b1] {
            if y > 0 && y < n {
                cuts.insert(y);
            }
        }
    }
    // Propagate cuts through square cells until stable.
    loop {
        let mut added = false;
        for ((a0, a1), (b0, _b1), _) in &cells {
            let inner: Vec<usize> = cuts.range(a0 + 1..*a1).copied().collect();
            for x in inner {
                if cuts.insert(b0 + (x - a0)) {
                    added = true;
                }
            }
            let inner: Vec<usize> = cuts.range(b0 + 1..*a1 - *a0 + *b0).copied().collect();
            for y in inner {
                if cuts.insert(a0 + (y - b0)) {
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    // Assemble strips per initial strip.
    let off = init.offsets();
    let mut strips = Vec::new();
    let mut per_initial: Vec<Vec<usize>> = Vec::new(); // strip indices per initial strip
    for s in 0..init.len() {
        let (a, b) = (off[s], off[s + 1]);
        let mut bounds = vec![a];
        bounds.extend(cuts.range(a + 1..b).copied());
        bounds.push(b);
        let mut here = Vec::new();
        for w in bounds.windows(2) {
            here.push(strips.len());
            strips.push(QStrip { origin: s, start: w[0], end: w[1] });
        }
        per_initial.push(here);
    }
    // Linking: union-find.
    let mut parent: Vec<usize> = (0..strips.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    };
    // (i) same position within equivalent initial strips.
    for i in 0..init.len() {
        for j in i + 1..init.len() {
            if init.same_class(i, j) {
                let m = per_initial[i].len().min(per_initial[j].len());
                for a in 0..m {
                    union(&mut parent, per_initial[i][a], per_initial[j][a]);
                }
            }
        }
    }
    // (ii) identity cells link their row and column strips piecewise.
    let strip_at = |start: usize, end: usize, strips: &[QStrip]| -> Option<usize> {
        strips.iter().position(|s| s.start == start && s.end == end)
    };
    for ((a0, a1), (b0, _b1), kind) in &cells {
        if *kind != CellKind::Identity {
            continue;
        }
        let mut bounds = vec![*a0];
        bounds.extend(cuts.range(a0 + 1..*a1).copied());
        bounds.push(*a1);
        for w in bounds.windows(2) {
            let row = strip_at(w[0], w[1], &strips);
            let col = strip_at(b0 + (w[0] - a0), b0 + (w[1] - a0), &strips);
            match (row, col) {
                (Some(u), Some(v)) => union(&mut parent, u, v),
                _ => {
                    return Err(Error::InternalInconsistency(
                        "identity cell does not align with the strip subdivision".into(),
                    ))
                }
            }
        }
    }
    // Normalize class ids.
    let mut ids = BTreeMap::new();
    let mut linked = Vec::with_capacity(strips.len());
    for s in 0..strips.len() {
        let r = find(&mut parent, s);
        let next = ids.len();
        linked.push(*ids.entry(r).or_insert(next));
    }
    Ok(QStrips { strips, linked })
}

/// Checks that a structured canonical matrix satisfies the box conditions:
/// (a) each box is a block of the partition current at its turn, taken in
/// bottom-up order; (b) a box that admissible additions can change is a
/// marked zero; (c) otherwise it is a Weyr matrix when its strips are
/// linked and the rank normal form when they are not.
pub fn verify_canonical(
    algebra: &ReducedAlgebra,
    scm: &StructuredCanonicalMatrix,
    classification: Option<&BlockClassification>,
) -> Result<()> {
    let n = algebra.total_size();
    if scm.matrix.rows() != n || scm.matrix.cols() != n {
        return Err(Error::SizeMismatch(format!(
            "matrix is {}x{}, algebra needs {n}x{n}",
            scm.matrix.rows(),
            scm.matrix.cols()
        )));
    }
    let mut red = Reducer {
        field: algebra.field,
        m: scm.matrix.clone(),
        algebra: algebra.clone(),
        origin: (0..algebra.partition.len()).collect(),
        boxes: Vec::new(),
        witness: Matrix::identity(algebra.field, n),
        trace: Vec::new(),
        initial_partition: algebra.partition.clone(),
        classification,
    };
    red.compact()?;
    red.assert_dependent_rules()?;
    for (bi, record) in scm.boxes.iter().enumerate() {
        let err = |condition: char| Error::NotCanonical { box_index: bi, condition };
        let (l, r) = red.find_next_block().ok_or_else(|| err('a'))?;
        let off = red.partition().offsets();
        if record.rows != (off[l], off[l + 1]) || record.cols != (off[r], off[r + 1]) {
            return Err(err('a'));
        }
        let p = red.partition().clone();
        let (ci, cj) = (p.class_of(l), p.class_of(r));
        let phi = red.covector(l, r)?;
        let implied = red.algebra.systems[&(ci, cj)].implies(&phi);
        let content = red.block(l, r);
        if !implied {
            // A transformation fixing earlier boxes can change this one.
            if record.kind != BoxKind::MarkedZero || !content.is_zero() {
                return Err(err('b'));
            }
            let sys = red.algebra.systems.get_mut(&(ci, cj)).expect("system exists");
            sys.rows.push(phi);
            sys.reduce(red.field);
            red.push_box(l, r, BoxKind::MarkedZero);
            continue;
        }
        let linked = ci == cj;
        match (&record.kind, linked) {
            (BoxKind::Weyr(ws), true) => {
                if is_weyr(&content).as_ref() != Some(ws) {
                    return Err(err('c'));
                }
                red.push_box(l, r, record.kind.clone());
                let plan = red.plan_case_three(l, ws.clone());
                red.apply_refinement(plan)?;
            }
            (BoxKind::ZeroIdentity { rank }, false) => {
                let (nl, nr) = (content.rows(), content.cols());
                let mut want = Matrix::zero(red.field, nl, nr);
                if *rank > nl || *rank > nr {
                    return Err(err('c'));
                }
                for i in 0..*rank {
                    want[(i, nr - rank + i)] = red.field.one();
                }
                if content != want {
                    return Err(err('c'));
                }
                red.push_box(l, r, record.kind.clone());
                let plan = red.plan_case_two(l, r, *rank);
                red.apply_refinement(plan)?;
            }
            _ => return Err(err('c')),
        }
        red.assert_dependent_rules()?;
    }
    if let Some((_l, _r)) = red.find_next_block() {
        return Err(Error::NotCanonical { box_index: scm.boxes.len(), condition: 'a' });
    }
    if red.algebra.partition != scm.final_partition {
        return Err(Error::InternalInconsistency(
            "final partition disagrees with the replayed reduction".into(),
        ));
    }
    Ok(())
}

fn first_new_indices(splits: &[Vec<usize>]) -> Vec<usize> {
    let mut out = Vec::with_capacity(splits.len());
    let mut acc = 0;
    for s in splits {
        out.push(acc);
        acc += s.len();
    }
    out
}

fn contains_region(b: &BoxRecord, ((r0, r1), (c0, c1)): ((usize, usize), (usize, usize))) -> bool {
    b.rows.0 <= r0 && r1 <= b.rows.1 && b.cols.0 <= c0 && c1 <= b.cols.1
}
