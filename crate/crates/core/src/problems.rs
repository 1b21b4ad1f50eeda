//! Linear matrix problems: a basic algebra acting by similarity on a
//! bimodule of matrices, presented either as a pair of constraint systems
//! or as a triple of elementary-transformation generators.

use std::collections::BTreeMap;

use rand::Rng;

use crate::algebra::{random_element, ClassPairSystem, ReducedAlgebra};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::linalg::{block_view, block_write, Matrix, StepPartition};

/// How the problem was built; carried through serialization for
/// readability only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Triple,
    Pair,
    Quiver,
    Poset,
    SimSim,
    UpperTriangular,
    Separated,
    Module,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Triple => "triple",
            ProblemKind::Pair => "pair",
            ProblemKind::Quiver => "quiver",
            ProblemKind::Poset => "poset",
            ProblemKind::SimSim => "simsim",
            ProblemKind::UpperTriangular => "upper_triangular",
            ProblemKind::Separated => "separated",
            ProblemKind::Module => "module",
        }
    }
}

/// A linear matrix problem: basic t x t algebra Gamma plus, per ordered
/// class pair, the constraint system cutting the matrix space out of the
/// full entry grid. Matrix-space systems range over the whole class-pair
/// grid, not only above-diagonal positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub field: FieldSpec,
    pub kind: ProblemKind,
    pub gamma: ReducedAlgebra,
    pub mspace: BTreeMap<(usize, usize), ClassPairSystem>,
    pub quiver: Option<QuiverLayout>,
}

/// Per-position classification of the matrix space: a position is free
/// (an independent coordinate) or dependent on strictly earlier free
/// positions in the bottom-up block order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockClassification {
    pub t: usize,
    pub free: Vec<(usize, usize)>,
    pub dependent: BTreeMap<(usize, usize), Vec<((usize, usize), FieldElement)>>,
}

impl BlockClassification {
    pub fn is_free(&self, pos: (usize, usize)) -> bool {
        self.free.contains(&pos)
    }
}

/// Bottom-up block order: row t-1 left to right, then row t-2, and so on.
pub fn block_order_key(t: usize, (l, r): (usize, usize)) -> (usize, usize) {
    (t - 1 - l, r)
}

/// The full entry grid of an ordered class pair.
pub fn grid_positions(partition: &StepPartition, ci: usize, cj: usize) -> Vec<(usize, usize)> {
    let t = partition.len();
    let mut out = Vec::new();
    for i in 0..t {
        for j in 0..t {
            if partition.class_of(i) == ci && partition.class_of(j) == cj {
                out.push((i, j));
            }
        }
    }
    out
}

impl ProblemSpec {
    /// Assembles and validates a problem from its parts: Gamma must be
    /// basic and closed, and the matrix space must be invariant under
    /// left and right multiplication by Gamma.
    pub fn new(
        field: FieldSpec,
        kind: ProblemKind,
        gamma: ReducedAlgebra,
        mspace_systems: Vec<ClassPairSystem>,
        quiver: Option<QuiverLayout>,
    ) -> Result<ProblemSpec> {
        if let Some(i) = gamma.partition.sizes().iter().position(|&s| s != 1) {
            return Err(Error::NotBasic(i, gamma.partition.sizes()[i]));
        }
        gamma.verify_closure()?;
        let mut mspace = BTreeMap::new();
        for mut s in mspace_systems {
            s.reduce(field);
            mspace.insert(s.class_pair, s);
        }
        let k = gamma.partition.class_count();
        for ci in 0..k {
            for cj in 0..k {
                let vars = grid_positions(&gamma.partition, ci, cj);
                let entry = mspace.entry((ci, cj)).or_insert_with(|| ClassPairSystem {
                    class_pair: (ci, cj),
                    vars: vars.clone(),
                    rows: Vec::new(),
                });
                if entry.vars != vars {
                    return Err(Error::InternalInconsistency(format!(
                        "matrix-space system for classes ({ci},{cj}) lists wrong positions"
                    )));
                }
            }
        }
        let ps = ProblemSpec { field, kind, gamma, mspace, quiver };
        ps.check_invariance()?;
        Ok(ps)
    }

    pub fn t(&self) -> usize {
        self.gamma.partition.len()
    }

    /// Spanning matrices of the t x t matrix space.
    pub fn mspace_spanning(&self) -> Vec<Matrix> {
        let t = self.t();
        let mut out = Vec::new();
        for sys in self.mspace.values() {
            for sol in sys.solution_basis(self.field) {
                let mut m = Matrix::zero(self.field, t, t);
                for (c, &(i, j)) in sol.iter().zip(&sys.vars) {
                    m[(i, j)] = c.clone();
                }
                out.push(m);
            }
        }
        out
    }

    /// Membership of a t x t matrix in the matrix space.
    pub fn mspace_contains_flat(&self, m: &Matrix) -> bool {
        for sys in self.mspace.values() {
            for row in &sys.rows {
                let mut acc = self.field.zero();
                for (c, &(i, j)) in row.iter().zip(&sys.vars) {
                    if !c.is_zero() {
                        acc = acc.add(&c.mul(&m[(i, j)]));
                    }
                }
                if !acc.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    fn check_invariance(&self) -> Result<()> {
        let gs = self.gamma.spanning_set();
        let vs = self.mspace_spanning();
        for g in &gs {
            for v in &vs {
                if !self.mspace_contains_flat(&g.mul(v)) {
                    return Err(Error::NotInvariant(
                        "Gamma * M leaves the matrix space".into(),
                    ));
                }
                if !self.mspace_contains_flat(&v.mul(g)) {
                    return Err(Error::NotInvariant(
                        "M * Gamma leaves the matrix space".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Strip sizes from per-class dimensions.
    pub fn sizes_from_class_dims(&self, dims: &[usize]) -> Result<Vec<usize>> {
        let k = self.gamma.partition.class_count();
        if dims.len() != k {
            return Err(Error::PartitionMismatch(format!(
                "problem has {k} classes but {} dimensions were given",
                dims.len()
            )));
        }
        Ok(self
            .gamma
            .partition
            .classes()
            .iter()
            .map(|&c| dims[c])
            .collect())
    }

    /// The inflated block partition for given strip sizes.
    pub fn partition(&self, sizes: Vec<usize>) -> Result<StepPartition> {
        if sizes.len() != self.t() {
            return Err(Error::PartitionMismatch(format!(
                "problem has {} strips but {} sizes were given",
                self.t(),
                sizes.len()
            )));
        }
        StepPartition::new(sizes, self.gamma.partition.classes().to_vec())
    }

    /// The inflated transformation algebra.
    pub fn algebra(&self, sizes: Vec<usize>) -> Result<ReducedAlgebra> {
        self.gamma.inflate(sizes)
    }

    /// Basis of the inflated matrix space M at the given sizes.
    pub fn matrix_space_basis(&self, sizes: &[usize]) -> Result<Vec<Matrix>> {
        let partition = self.partition(sizes.to_vec())?;
        let n = partition.total();
        let mut out = Vec::new();
        for sys in self.mspace.values() {
            let (ci, cj) = sys.class_pair;
            let ni = partition.class_size(ci);
            let nj = partition.class_size(cj);
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
                            block_write(&mut m, &partition, (i, j), &blk).unwrap();
                        }
                        out.push(m);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Blockwise membership of an inflated matrix in M.
    pub fn mspace_contains(&self, partition: &StepPartition, m: &Matrix) -> Result<bool> {
        for sys in self.mspace.values() {
            let (ci, cj) = sys.class_pair;
            let ni = partition.class_size(ci);
            let nj = partition.class_size(cj);
            if ni == 0 || nj == 0 {
                continue;
            }
            for row in &sys.rows {
                let mut acc = Matrix::zero(self.field, ni, nj);
                for (c, &(i, j)) in row.iter().zip(&sys.vars) {
                    if c.is_zero() {
                        continue;
                    }
                    acc = acc.add(&block_view(m, partition, (i, j))?.scale(c));
                }
                if !acc.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Gauss-Jordan elimination of the matrix-space systems starting with
    /// the last unknown in the bottom-up order, splitting positions into
    /// free coordinates and dependent ones expressed through strictly
    /// earlier free positions of the same class pair.
    pub fn classify_blocks(&self) -> BlockClassification {
        let t = self.t();
        let mut free = Vec::new();
        let mut dependent = BTreeMap::new();
        for sys in self.mspace.values() {
            // Variables in bottom-up order, then eliminate pivoting on the
            // latest one first.
            let mut order: Vec<usize> = (0..sys.vars.len()).collect();
            order.sort_by_key(|&v| block_order_key(t, sys.vars[v]));
            let rev: Vec<usize> = order.iter().rev().copied().collect();
            let mat = Matrix::from_fn(self.field, sys.rows.len(), rev.len(), |i, j| {
                sys.rows[i][rev[j]].clone()
            });
            let red = mat.rref();
            let mut pivot_of = vec![None; rev.len()];
            for (r, &pc) in red.pivot_cols.iter().enumerate() {
                pivot_of[pc] = Some(r);
            }
            for (col, &v) in rev.iter().enumerate() {
                let pos = sys.vars[v];
                match pivot_of[col] {
                    None => free.push(pos),
                    Some(r) => {
                        // x_pos = -sum over later (hence earlier in the
                        // block order) non-pivot columns.
                        let mut rule = Vec::new();
                        for (c2, &v2) in rev.iter().enumerate() {
                            if c2 == col || pivot_of[c2].is_some() {
                                continue;
                            }
                            let coeff = red.reduced[(r, c2)].clone();
                            if !coeff.is_zero() {
                                rule.push((sys.vars[v2], coeff.neg()));
                            }
                        }
                        dependent.insert(pos, rule);
                    }
                }
            }
        }
        free.sort_by_key(|&p| block_order_key(t, p));
        BlockClassification { t, free, dependent }
    }

    /// Samples a member of the inflated matrix space: random free blocks,
    /// dependent blocks from their rules.
    pub fn random_member(
        &self,
        partition: &StepPartition,
        rng: &mut impl Rng,
    ) -> Result<Matrix> {
        let n = partition.total();
        let mut m = Matrix::zero(self.field, n, n);
        let cls = self.classify_blocks();
        for &(i, j) in &cls.free {
            let blk = Matrix::from_fn(
                self.field,
                partition.sizes()[i],
                partition.sizes()[j],
                |_, _| random_element(self.field, rng),
            );
            block_write(&mut m, partition, (i, j), &blk)?;
        }
        apply_dependent_rules(&cls, partition, &mut m)?;
        debug_assert!(self.mspace_contains(partition, &m)?);
        Ok(m)
    }
}

/// Recomputes every dependent block from its rule.
pub fn apply_dependent_rules(
    cls: &BlockClassification,
    partition: &StepPartition,
    m: &mut Matrix,
) -> Result<()> {
    for (&(l, r), rule) in &cls.dependent {
        let mut acc = Matrix::zero(m.field(), partition.sizes()[l], partition.sizes()[r]);
        for ((i, j), c) in rule {
            acc = acc.add(&block_view(m, partition, (*i, *j))?.scale(c));
        }
        block_write(m, partition, (l, r), &acc)?;
    }
    Ok(())
}

/// A linear matrix problem presented by elementary-transformation
/// generators: an equivalence relation on strips, nilpotent
/// upper-triangular addition generators, and matrix-space generators.
#[derive(Debug, Clone)]
pub struct ProblemTriple {
    pub field: FieldSpec,
    pub classes: Vec<usize>,
    pub p_gens: Vec<Matrix>,
    pub v_gens: Vec<Matrix>,
}

impl ProblemTriple {
    fn t(&self) -> usize {
        self.classes.len()
    }

    /// The class pair a linking matrix connects, or None for the zero
    /// matrix; errors when nonzero entries straddle class pairs.
    fn linking_pair(&self, m: &Matrix, index: usize) -> Result<Option<(usize, usize)>> {
        let mut pair = None;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)].is_zero() {
                    continue;
                }
                let p = (self.classes[i], self.classes[j]);
                if pair.is_none() {
                    pair = Some(p);
                } else if pair != Some(p) {
                    return Err(Error::NotLinking(index));
                }
            }
        }
        Ok(pair)
    }
}

/// Converts a triple to the pair presentation: Gamma is generated by the
/// class idempotents and the addition generators (closed under products,
/// finite by nilpotency), and the matrix space is the closure of the
/// matrix-space generators under multiplication by the addition
/// generators.
pub fn from_triple(tr: &ProblemTriple, kind: ProblemKind) -> Result<ProblemSpec> {
    let t = tr.t();
    let field = tr.field;
    for (idx, p) in tr.p_gens.iter().enumerate() {
        if p.rows() != t || p.cols() != t {
            return Err(Error::SizeMismatch(format!("generator {idx} is not {t}x{t}")));
        }
        for i in 0..t {
            for j in 0..=i {
                if !p[(i, j)].is_zero() {
                    return Err(Error::NotNilpotent(idx));
                }
            }
        }
        tr.linking_pair(p, idx)?;
    }
    for (idx, v) in tr.v_gens.iter().enumerate() {
        if v.rows() != t || v.cols() != t {
            return Err(Error::SizeMismatch(format!("generator {idx} is not {t}x{t}")));
        }
        tr.linking_pair(v, idx)?;
    }

    // Product closure of the addition generators; products of length t
    // vanish, so the loop terminates.
    let mut p_closure: Vec<Matrix> = Vec::new();
    let mut frontier: Vec<Matrix> = tr.p_gens.iter().filter(|m| !m.is_zero()).cloned().collect();
    dedup_push(&mut p_closure, &mut frontier);
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for f in &frontier {
            for g in &tr.p_gens {
                let prod = f.mul(g);
                if !prod.is_zero() {
                    next.push(prod);
                }
            }
        }
        frontier = next;
        dedup_push(&mut p_closure, &mut frontier);
    }

    // Matrix-space closure under multiplication by the addition closure.
    let mut v_closure: Vec<Matrix> = Vec::new();
    let mut with_id: Vec<Matrix> = vec![Matrix::identity(field, t)];
    with_id.extend(p_closure.iter().cloned());
    for v in &tr.v_gens {
        for a in &with_id {
            for b in &with_id {
                let prod = a.mul(v).mul(b);
                if !prod.is_zero() && !v_closure.contains(&prod) {
                    v_closure.push(prod);
                }
            }
        }
    }

    let partition = StepPartition::new(vec![1; t], tr.classes.clone())?;
    let k = partition.class_count();
    let mut gamma_systems = Vec::new();
    let mut mspace_systems = Vec::new();
    for ci in 0..k {
        for cj in 0..k {
            let vars = ReducedAlgebra::pair_positions(&partition, ci, cj);
            if !vars.is_empty() {
                let span: Vec<Vec<FieldElement>> = p_closure
                    .iter()
                    .filter_map(|p| restrict(p, &vars, &tr.classes, (ci, cj)))
                    .collect();
                gamma_systems.push(ClassPairSystem {
                    class_pair: (ci, cj),
                    vars: vars.clone(),
                    rows: annihilator(field, &span, vars.len()),
                });
            }
            let grid = grid_positions(&partition, ci, cj);
            if !grid.is_empty() {
                let span: Vec<Vec<FieldElement>> = v_closure
                    .iter()
                    .filter_map(|v| restrict(v, &grid, &tr.classes, (ci, cj)))
                    .collect();
                mspace_systems.push(ClassPairSystem {
                    class_pair: (ci, cj),
                    vars: grid.clone(),
                    rows: annihilator(field, &span, grid.len()),
                });
            }
        }
    }
    let gamma = ReducedAlgebra::new(field, partition, gamma_systems);
    ProblemSpec::new(field, kind, gamma, mspace_systems, None)
}

fn dedup_push(closure: &mut Vec<Matrix>, frontier: &mut Vec<Matrix>) {
    frontier.retain(|f| {
        if closure.contains(f) {
            false
        } else {
            closure.push(f.clone());
            true
        }
    });
}

/// Restriction of a linking matrix to the listed positions, or None if it
/// links a different class pair.
fn restrict(
    m: &Matrix,
    positions: &[(usize, usize)],
    classes: &[usize],
    pair: (usize, usize),
) -> Option<Vec<FieldElement>> {
    let mut links_here = false;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !m[(i, j)].is_zero() && (classes[i], classes[j]) == pair {
                links_here = true;
            }
        }
    }
    if !links_here {
        return None;
    }
    Some(positions.iter().map(|&(i, j)| m[(i, j)].clone()).collect())
}

/// Constraint rows whose solution space is exactly the span of the given
/// vectors: a basis of the annihilator.
fn annihilator(field: FieldSpec, span: &[Vec<FieldElement>], width: usize) -> Vec<Vec<FieldElement>> {
    if span.is_empty() {
        // Everything forced to zero.
        return (0..width)
            .map(|i| {
                let mut row = vec![field.zero(); width];
                row[i] = field.one();
                row
            })
            .collect();
    }
    let m = Matrix::from_fn(field, span.len(), width, |i, j| span[i][j].clone());
    m.nullspace()
        .into_iter()
        .map(|v| (0..width).map(|i| v[(i, 0)].clone()).collect())
        .collect()
}

/// Strip layout of a quiver problem: one strip per vertex copy, extra
/// copies absorbing parallel arrows, plus the cell where each arrow's
/// matrix lives.
#[derive(Debug, Clone, PartialEq)]
pub struct QuiverLayout {
    pub vertices: usize,
    pub arrows: Vec<(usize, usize)>,
    /// vertex of each strip
    pub strip_vertex: Vec<usize>,
    /// (row strip, column strip) of each arrow
    pub cells: Vec<(usize, usize)>,
}

impl QuiverLayout {
    /// Strip sizes from a dimension vector.
    pub fn sizes(&self, dims: &[usize]) -> Result<Vec<usize>> {
        if dims.len() != self.vertices {
            return Err(Error::PartitionMismatch(format!(
                "quiver has {} vertices but {} dimensions were given",
                self.vertices,
                dims.len()
            )));
        }
        Ok(self.strip_vertex.iter().map(|&v| dims[v]).collect())
    }

    /// Packs a representation (one matrix per arrow) into a problem
    /// matrix.
    pub fn embed(&self, field: FieldSpec, dims: &[usize], mats: &[Matrix]) -> Result<(Vec<usize>, Matrix)> {
        if mats.len() != self.arrows.len() {
            return Err(Error::SizeMismatch(format!(
                "quiver has {} arrows but {} matrices were given",
                self.arrows.len(),
                mats.len()
            )));
        }
        let sizes = self.sizes(dims)?;
        let partition = StepPartition::discrete(sizes.clone());
        let mut m = Matrix::zero(field, partition.total(), partition.total());
        for (a, mat) in mats.iter().enumerate() {
            let (from, to) = self.arrows[a];
            if mat.rows() != dims[to] || mat.cols() != dims[from] {
                return Err(Error::SizeMismatch(format!(
                    "arrow {a} needs a {}x{} matrix",
                    dims[to], dims[from]
                )));
            }
            block_write(&mut m, &partition, self.cells[a], mat)?;
        }
        Ok((sizes, m))
    }

    /// Reads a representation back out of a problem matrix.
    pub fn extract(&self, dims: &[usize], m: &Matrix) -> Result<Vec<Matrix>> {
        let sizes = self.sizes(dims)?;
        let partition = StepPartition::discrete(sizes);
        self.cells
            .iter()
            .map(|&cell| block_view(m, &partition, cell))
            .collect()
    }
}

/// The classification problem for representations of a finite quiver.
///
/// Vertices with parallel in-arrows from one source get duplicate strips
/// sharing a class; each arrow occupies one block cell of the matrix
/// space.
pub fn quiver_problem(
    field: FieldSpec,
    vertices: usize,
    arrows: &[(usize, usize)],
) -> Result<ProblemSpec> {
    for &(u, v) in arrows {
        if u >= vertices || v >= vertices {
            return Err(Error::SizeMismatch(format!("arrow ({u},{v}) out of range")));
        }
    }
    // Copies of a vertex: enough to give parallel arrows distinct cells.
    let mut copies = vec![1usize; vertices];
    let mut parallel: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(u, v) in arrows {
        let c = parallel.entry((u, v)).or_insert(0);
        *c += 1;
        copies[v] = copies[v].max(*c);
    }
    let mut strip_vertex = Vec::new();
    let mut first_strip = vec![0usize; vertices];
    for v in 0..vertices {
        first_strip[v] = strip_vertex.len();
        for _ in 0..copies[v] {
            strip_vertex.push(v);
        }
    }
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut cells = Vec::new();
    for &(u, v) in arrows {
        let c = seen.entry((u, v)).or_insert(0);
        cells.push((first_strip[v] + *c, first_strip[u]));
        *c += 1;
    }
    let t = strip_vertex.len();
    let v_gens = cells
        .iter()
        .map(|&(i, j)| {
            let mut e = Matrix::zero(field, t, t);
            e[(i, j)] = field.one();
            e
        })
        .collect();
    let tr = ProblemTriple { field, classes: strip_vertex.clone(), p_gens: Vec::new(), v_gens };
    let mut ps = from_triple(&tr, ProblemKind::Quiver)?;
    ps.quiver = Some(QuiverLayout { vertices, arrows: arrows.to_vec(), strip_vertex, cells });
    Ok(ps)
}

/// The Kronecker quiver: two vertices, two parallel arrows.
pub fn kronecker_problem(field: FieldSpec) -> Result<ProblemSpec> {
    quiver_problem(field, 2, &[(0, 1), (0, 1)])
}

/// Representations of a finite poset: arbitrary row transformations,
/// column transformations within strips, and column additions towards
/// larger elements.
///
/// `less[(i, j)]` means element i is strictly below element j; indexing
/// must satisfy i < j.
pub fn poset_problem(field: FieldSpec, n: usize, less: &[(usize, usize)]) -> Result<ProblemSpec> {
    let t = n + 1;
    for &(i, j) in less {
        if i >= j {
            return Err(Error::BadIndexing(i, j));
        }
        if j >= n {
            return Err(Error::SizeMismatch(format!("poset relation ({i},{j}) out of range")));
        }
    }
    let p_gens = less
        .iter()
        .map(|&(i, j)| {
            let mut e = Matrix::zero(field, t, t);
            e[(i, j)] = field.one();
            e
        })
        .collect();
    let v_gens = (0..n)
        .map(|j| {
            let mut e = Matrix::zero(field, t, t);
            e[(n, j)] = field.one();
            e
        })
        .collect();
    let tr = ProblemTriple { field, classes: (0..t).collect(), p_gens, v_gens };
    from_triple(&tr, ProblemKind::Poset)
}

/// The canonical-form problem for pairs of matrices under simultaneous
/// similarity, as the two-strip problem for [[A, B], [0, 0]] under
/// {S + S}-similarity.
pub fn simsim_problem(field: FieldSpec) -> Result<ProblemSpec> {
    let t = 2;
    let mut e11 = Matrix::zero(field, t, t);
    e11[(0, 0)] = field.one();
    let mut e12 = Matrix::zero(field, t, t);
    e12[(0, 1)] = field.one();
    let tr = ProblemTriple { field, classes: vec![0, 0], p_gens: Vec::new(), v_gens: vec![e11, e12] };
    from_triple(&tr, ProblemKind::SimSim)
}

/// Packs a pair into the two-strip matrix [[A, B], [0, 0]].
pub fn simsim_pack(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || b.cols() != n {
        return Err(Error::SizeMismatch("pair matrices must be square of equal size".into()));
    }
    let mut m = Matrix::zero(a.field(), 2 * n, 2 * n);
    m.write_submatrix(0, 0, a);
    m.write_submatrix(0, n, b);
    Ok(m)
}

/// Reads a pair back out of a packed two-strip matrix.
pub fn simsim_unpack(m: &Matrix) -> Result<(Matrix, Matrix)> {
    if m.rows() % 2 != 0 || !m.is_square() {
        return Err(Error::SizeMismatch("packed pair must be square of even size".into()));
    }
    let n = m.rows() / 2;
    Ok((m.submatrix(0, n, 0, n), m.submatrix(0, n, n, 2 * n)))
}

/// Upper triangular matrices under upper triangular similarity: Gamma and
/// the matrix space are both the full upper-triangular algebra.
pub fn upper_triangular_problem(field: FieldSpec, t: usize) -> Result<ProblemSpec> {
    assert!(t >= 1, "need at least one strip");
    let mut p_gens = Vec::new();
    let mut v_gens = Vec::new();
    for i in 0..t {
        for j in i..t {
            let mut e = Matrix::zero(field, t, t);
            e[(i, j)] = field.one();
            if i < j {
                p_gens.push(e.clone());
            }
            v_gens.push(e);
        }
    }
    let tr = ProblemTriple { field, classes: (0..t).collect(), p_gens, v_gens };
    from_triple(&tr, ProblemKind::UpperTriangular)
}

/// Independent row and column transformations: rows act through Gamma,
/// columns through Delta, on the embedded space [[0, N], [0, 0]].
pub fn separated_problem(
    gamma: &ReducedAlgebra,
    delta: &ReducedAlgebra,
    n_space: &[Matrix],
) -> Result<ProblemSpec> {
    build_two_sided(gamma, delta, n_space, ProblemKind::Separated)
}

/// The module-classification problem of a basic algebra: pair
/// (Gamma + Gamma, 0 \ rad Gamma), whose indecomposable canonical
/// matrices beyond the excluded zero summands correspond to
/// indecomposable modules.
pub fn module_problem(gamma: &ReducedAlgebra) -> Result<ProblemSpec> {
    // rad Gamma: the members with zero diagonal, spanned by the
    // off-diagonal solution spaces.
    let t = gamma.partition.len();
    let field = gamma.field;
    let mut rad = Vec::new();
    for sys in gamma.systems.values() {
        for sol in sys.solution_basis(field) {
            let mut m = Matrix::zero(field, t, t);
            for (c, &(i, j)) in sol.iter().zip(&sys.vars) {
                m[(i, j)] = c.clone();
            }
            rad.push(m);
        }
    }
    build_two_sided(gamma, gamma, &rad, ProblemKind::Module)
}

fn build_two_sided(
    gamma: &ReducedAlgebra,
    delta: &ReducedAlgebra,
    n_space: &[Matrix],
    kind: ProblemKind,
) -> Result<ProblemSpec> {
    let field = gamma.field;
    if delta.field != field {
        return Err(Error::FieldMismatch(field.to_string(), delta.field.to_string()));
    }
    for alg in [gamma, delta] {
        if let Some(i) = alg.partition.sizes().iter().position(|&s| s != 1) {
            return Err(Error::NotBasic(i, alg.partition.sizes()[i]));
        }
    }
    let tg = gamma.partition.len();
    let td = delta.partition.len();
    for (idx, nmat) in n_space.iter().enumerate() {
        if nmat.rows() != tg || nmat.cols() != td {
            return Err(Error::SizeMismatch(format!(
                "space generator {idx} is not {tg}x{td}"
            )));
        }
    }
    // Invariance of the embedded space.
    let n_rank = span_rank(field, n_space, tg * td);
    for g in gamma.spanning_set() {
        for nmat in n_space {
            let mut ext: Vec<Matrix> = n_space.to_vec();
            ext.push(g.mul(nmat));
            if span_rank(field, &ext, tg * td) != n_rank {
                return Err(Error::NotInvariant("Gamma * N leaves the space".into()));
            }
        }
    }
    for d in delta.spanning_set() {
        for nmat in n_space {
            let mut ext: Vec<Matrix> = n_space.to_vec();
            ext.push(nmat.mul(&d));
            if span_rank(field, &ext, tg * td) != n_rank {
                return Err(Error::NotInvariant("N * Delta leaves the space".into()));
            }
        }
    }

    let t = tg + td;
    let kg = gamma.partition.class_count();
    let kd = delta.partition.class_count();
    let mut classes = Vec::with_capacity(t);
    classes.extend(gamma.partition.classes().iter().copied());
    classes.extend(delta.partition.classes().iter().map(|&c| c + kg));
    let partition = StepPartition::new(vec![1; t], classes.clone())?;

    // Gamma + Delta: the original systems on each block, plus a forced-zero
    // corner between the copies.
    let mut systems = Vec::new();
    for ci in 0..kg + kd {
        for cj in 0..kg + kd {
            let vars = ReducedAlgebra::pair_positions(&partition, ci, cj);
            if vars.is_empty() {
                continue;
            }
            let rows = if ci < kg && cj < kg {
                remap_rows(&gamma.systems[&(ci, cj)], &vars, 0)
            } else if ci >= kg && cj >= kg {
                remap_rows(&delta.systems[&(ci - kg, cj - kg)], &vars, tg)
            } else {
                // Corner between the copies: identically zero.
                (0..vars.len())
                    .map(|i| {
                        let mut row = vec![field.zero(); vars.len()];
                        row[i] = field.one();
                        row
                    })
                    .collect()
            };
            systems.push(ClassPairSystem { class_pair: (ci, cj), vars, rows });
        }
    }
    let algebra = ReducedAlgebra::new(field, partition.clone(), systems);

    // Matrix space 0 \ N: the upper-right corner carries N, everything
    // else is zero.
    let mut mspace_systems = Vec::new();
    for ci in 0..kg + kd {
        for cj in 0..kg + kd {
            let grid = grid_positions(&partition, ci, cj);
            if grid.is_empty() {
                continue;
            }
            let rows = if ci < kg && cj >= kg {
                let span: Vec<Vec<FieldElement>> = n_space
                    .iter()
                    .map(|nmat| {
                        grid.iter().map(|&(i, j)| nmat[(i, j - tg)].clone()).collect()
                    })
                    .collect();
                annihilator(field, &span, grid.len())
            } else {
                (0..grid.len())
                    .map(|i| {
                        let mut row = vec![field.zero(); grid.len()];
                        row[i] = field.one();
                        row
                    })
                    .collect()
            };
            mspace_systems.push(ClassPairSystem { class_pair: (ci, cj), vars: grid, rows });
        }
    }
    ProblemSpec::new(field, kind, algebra, mspace_systems, None)
}

fn remap_rows(
    sys: &ClassPairSystem,
    vars: &[(usize, usize)],
    shift: usize,
) -> Vec<Vec<FieldElement>> {
    sys.rows
        .iter()
        .map(|row| {
            vars.iter()
                .map(|&(i, j)| {
                    match sys.var_index((i - shift, j - shift)) {
                        Some(k) => row[k].clone(),
                        None => unreachable!("variable sets agree up to the shift"),
                    }
                })
                .collect()
        })
        .collect()
}

fn span_rank(field: FieldSpec, mats: &[Matrix], width: usize) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let m = Matrix::from_fn(field, mats.len(), width, |i, j| {
        let (r, c) = (j / mats[i].cols(), j % mats[i].cols());
        mats[i][(r, c)].clone()
    });
    m.rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const Q: FieldSpec = FieldSpec::Rationals;

    fn unit(field: FieldSpec, t: usize, i: usize, j: usize) -> Matrix {
        let mut e = Matrix::zero(field, t, t);
        e[(i, j)] = field.one();
        e
    }

    #[test]
    fn quiver_triple_example() {
        // Quiver with a loop at 1, arrows 1->2, two arrows 1->3, 2->3, a
        // loop at 3: classes {0}, {1}, {2,3} with six matrix-space cells.
        let tr = ProblemTriple {
            field: Q,
            classes: vec![0, 1, 2, 2],
            p_gens: vec![],
            v_gens: vec![
                unit(Q, 4, 0, 0),
                unit(Q, 4, 1, 0),
                unit(Q, 4, 2, 0),
                unit(Q, 4, 3, 0),
                unit(Q, 4, 3, 1),
                unit(Q, 4, 3, 2),
            ],
        };
        let ps = from_triple(&tr, ProblemKind::Triple).unwrap();
        assert_eq!(ps.gamma.partition.classes(), &[0, 1, 2, 2]);
        // Gamma is block diagonal: every off-diagonal variable forced zero.
        assert_eq!(ps.gamma.dimension(), 3);
        let basis = ps.matrix_space_basis(&[1, 1, 1, 1]).unwrap();
        assert_eq!(basis.len(), 6);
    }

    #[test]
    fn wasow_triple_closures() {
        // ({T}, {J_3}, {I_3}): P-closure {J, J^2}, V-closure {I, J, J^2}.
        let t = 3;
        let mut j = Matrix::zero(Q, t, t);
        j[(0, 1)] = Q.one();
        j[(1, 2)] = Q.one();
        let tr = ProblemTriple {
            field: Q,
            classes: vec![0, 0, 0],
            p_gens: vec![j],
            v_gens: vec![Matrix::identity(Q, t)],
        };
        let ps = from_triple(&tr, ProblemKind::Triple).unwrap();
        // Gamma = span{I, J, J^2}: one class plus a 2-dimensional
        // off-diagonal solution space.
        assert_eq!(ps.gamma.dimension(), 3);
        // M = span{I, J, J^2} inside the full 3x3 grid.
        assert_eq!(ps.matrix_space_basis(&[1, 1, 1]).unwrap().len(), 3);
        let member = Matrix::from_i64(Q, &[&[2, 5, 7], &[0, 2, 5], &[0, 0, 2]]);
        assert!(ps.mspace_contains_flat(&member));
        let non_member = Matrix::from_i64(Q, &[&[2, 5, 7], &[0, 2, 6], &[0, 0, 2]]);
        assert!(!ps.mspace_contains_flat(&non_member));
    }

    #[test]
    fn empty_v_set_gives_zero_space() {
        let tr = ProblemTriple { field: Q, classes: vec![0, 1], p_gens: vec![], v_gens: vec![] };
        let ps = from_triple(&tr, ProblemKind::Triple).unwrap();
        assert!(ps.matrix_space_basis(&[2, 3]).unwrap().is_empty());
    }

    #[test]
    fn triple_rejects_bad_generators() {
        let lower = unit(Q, 2, 1, 0);
        let tr = ProblemTriple { field: Q, classes: vec![0, 1], p_gens: vec![lower], v_gens: vec![] };
        assert!(matches!(from_triple(&tr, ProblemKind::Triple), Err(Error::NotNilpotent(0))));

        let mut straddle = unit(Q, 3, 0, 1);
        straddle[(0, 2)] = Q.one();
        let tr = ProblemTriple {
            field: Q,
            classes: vec![0, 1, 2],
            p_gens: vec![straddle],
            v_gens: vec![],
        };
        assert!(matches!(from_triple(&tr, ProblemKind::Triple), Err(Error::NotLinking(0))));
    }

    #[test]
    fn one_loop_quiver_is_plain_similarity() {
        let ps = quiver_problem(Q, 1, &[(0, 0)]).unwrap();
        assert_eq!(ps.t(), 1);
        assert_eq!(ps.gamma.dimension(), 1);
        assert_eq!(ps.matrix_space_basis(&[3]).unwrap().len(), 9);
    }

    #[test]
    fn paper_quiver_layout() {
        // Loop at vertex 0, arrows 0->1, 0->2 twice, 1->2, loop at 2:
        // vertex 2 gets two strips sharing a class.
        let ps = quiver_problem(
            Q,
            3,
            &[(0, 0), (0, 1), (0, 2), (0, 2), (1, 2), (2, 2)],
        )
        .unwrap();
        assert_eq!(ps.gamma.partition.classes(), &[0, 1, 2, 2]);
        assert_eq!(ps.gamma.dimension(), 3);
        assert_eq!(ps.matrix_space_basis(&[1, 1, 1, 1]).unwrap().len(), 6);
    }

    #[test]
    fn kronecker_dimension() {
        let f2 = FieldSpec::prime(2).unwrap();
        let ps = kronecker_problem(f2).unwrap();
        let sizes = ps.sizes_from_class_dims(&[1, 1]).unwrap();
        assert_eq!(sizes, vec![1, 1, 1]);
        assert_eq!(ps.matrix_space_basis(&sizes).unwrap().len(), 2);
    }

    #[test]
    fn quiver_embed_extract_round_trip() {
        let ps = kronecker_problem(Q).unwrap();
        let layout = ps.quiver.as_ref().unwrap();
        let a = Matrix::from_i64(Q, &[&[1, 2], &[3, 4]]);
        let b = Matrix::from_i64(Q, &[&[0, 1], &[1, 0]]);
        let dims = [2, 2];
        let (sizes, m) = layout.embed(Q, &dims, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(sizes, vec![2, 2, 2]);
        let partition = ps.partition(sizes).unwrap();
        assert!(ps.mspace_contains(&partition, &m).unwrap());
        let back = layout.extract(&dims, &m).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn poset_examples() {
        // Antichain of two elements: no additions.
        let ps = poset_problem(Q, 2, &[]).unwrap();
        assert_eq!(ps.gamma.dimension(), 3);
        // Chain p0 < p1: the addition generator appears in Gamma.
        let ps = poset_problem(Q, 2, &[(0, 1)]).unwrap();
        assert_eq!(ps.gamma.dimension(), 4);
        let e01 = unit(Q, 3, 0, 1);
        let member = Matrix::identity(Q, 3).add(&e01);
        assert!(ps.gamma.contains(&member).unwrap());
        // Reversed indexing is rejected.
        assert!(matches!(poset_problem(Q, 2, &[(1, 0)]), Err(Error::BadIndexing(1, 0))));
        // Empty poset: matrix space is {0}.
        let ps = poset_problem(Q, 0, &[]).unwrap();
        assert!(ps.matrix_space_basis(&[2]).unwrap().is_empty());
    }

    #[test]
    fn simsim_shape() {
        let ps = simsim_problem(Q).unwrap();
        assert_eq!(ps.gamma.partition.classes(), &[0, 0]);
        assert_eq!(ps.gamma.dimension(), 1);
        // At (n, n) the space is all [[A, B], [0, 0]].
        let basis = ps.matrix_space_basis(&[2, 2]).unwrap();
        assert_eq!(basis.len(), 8);
        let a = Matrix::from_i64(Q, &[&[1, 2], &[3, 4]]);
        let b = Matrix::from_i64(Q, &[&[5, 6], &[7, 8]]);
        let m = simsim_pack(&a, &b).unwrap();
        let partition = ps.partition(vec![2, 2]).unwrap();
        assert!(ps.mspace_contains(&partition, &m).unwrap());
        let (a2, b2) = simsim_unpack(&m).unwrap();
        assert_eq!((a2, b2), (a, b));
    }

    #[test]
    fn classify_blocks_simsim() {
        let ps = simsim_problem(Q).unwrap();
        let cls = ps.classify_blocks();
        assert_eq!(cls.free, vec![(0, 0), (0, 1)]);
        assert_eq!(cls.dependent[&(1, 0)], vec![]);
        assert_eq!(cls.dependent[&(1, 1)], vec![]);
    }

    #[test]
    fn classify_blocks_wasow_t2() {
        // M = {aI + bJ}: the (0,0) entry depends on the earlier (1,1) with
        // coefficient 1; (1,0) is forced zero; (1,1) and (0,1) are free.
        let mut j = Matrix::zero(Q, 2, 2);
        j[(0, 1)] = Q.one();
        let tr = ProblemTriple {
            field: Q,
            classes: vec![0, 0],
            p_gens: vec![j],
            v_gens: vec![Matrix::identity(Q, 2)],
        };
        let ps = from_triple(&tr, ProblemKind::Triple).unwrap();
        let cls = ps.classify_blocks();
        assert_eq!(cls.free, vec![(1, 1), (0, 1)]);
        assert_eq!(cls.dependent[&(1, 0)], vec![]);
        assert_eq!(cls.dependent[&(0, 0)], vec![((1, 1), Q.one())]);
    }

    #[test]
    fn classify_blocks_full_space() {
        let ps = quiver_problem(Q, 1, &[(0, 0)]).unwrap();
        let cls = ps.classify_blocks();
        assert_eq!(cls.free, vec![(0, 0)]);
        assert!(cls.dependent.is_empty());
    }

    #[test]
    fn dependent_rules_reproduce_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut j = Matrix::zero(Q, 2, 2);
        j[(0, 1)] = Q.one();
        let tr = ProblemTriple {
            field: Q,
            classes: vec![0, 0],
            p_gens: vec![j],
            v_gens: vec![Matrix::identity(Q, 2)],
        };
        let ps = from_triple(&tr, ProblemKind::Triple).unwrap();
        let partition = ps.partition(vec![2, 2]).unwrap();
        for _ in 0..20 {
            let m = ps.random_member(&partition, &mut rng).unwrap();
            assert!(ps.mspace_contains(&partition, &m).unwrap());
        }
    }

    #[test]
    fn upper_triangular_shape() {
        let ps = upper_triangular_problem(Q, 3).unwrap();
        assert_eq!(ps.gamma.dimension(), 6);
        let cls = ps.classify_blocks();
        assert_eq!(cls.free.len(), 6);
        assert_eq!(cls.dependent.len(), 3);
        for rule in cls.dependent.values() {
            assert!(rule.is_empty());
        }
    }

    #[test]
    fn separated_embedding() {
        // Gamma = Delta = k, N = k: the two-strip embedding problem.
        let k1 = ReducedAlgebra::unconstrained(Q, StepPartition::discrete(vec![1]));
        let n = vec![Matrix::identity(Q, 1)];
        let ps = separated_problem(&k1, &k1, &n).unwrap();
        assert_eq!(ps.t(), 2);
        assert_eq!(ps.matrix_space_basis(&[1, 1]).unwrap().len(), 1);
        // N = {0}.
        let ps = separated_problem(&k1, &k1, &[]).unwrap();
        assert!(ps.matrix_space_basis(&[1, 1]).unwrap().is_empty());
    }

    #[test]
    fn separated_rejects_non_invariant() {
        // Gamma = upper triangular 2x2 acting on a non-invariant line.
        let g = ReducedAlgebra::unconstrained(Q, StepPartition::discrete(vec![1, 1]));
        let k1 = ReducedAlgebra::unconstrained(Q, StepPartition::discrete(vec![1]));
        let n = vec![Matrix::from_i64(Q, &[&[0], &[1]])];
        assert!(matches!(
            separated_problem(&g, &k1, &n),
            Err(Error::NotInvariant(_))
        ));
    }

    #[test]
    fn module_problem_radicals() {
        // Gamma = k: radical 0, matrix space {0}.
        let k1 = ReducedAlgebra::unconstrained(Q, StepPartition::discrete(vec![1]));
        let ps = module_problem(&k1).unwrap();
        assert!(ps.matrix_space_basis(&[1, 1]).unwrap().is_empty());

        // Gamma = {[[a,b],[0,a]]}: radical spans e01, one free block.
        let dual = ReducedAlgebra::unconstrained(
            Q,
            StepPartition::new(vec![1, 1], vec![0, 0]).unwrap(),
        );
        let ps = module_problem(&dual).unwrap();
        assert_eq!(ps.t(), 4);
        assert_eq!(ps.matrix_space_basis(&[1, 1, 1, 1]).unwrap().len(), 1);

        // Gamma = full upper triangular 2x2: radical spans e01 too.
        let ut = ReducedAlgebra::unconstrained(Q, StepPartition::discrete(vec![1, 1]));
        let ps = module_problem(&ut).unwrap();
        assert_eq!(ps.matrix_space_basis(&[1, 1, 1, 1]).unwrap().len(), 1);
    }

    #[test]
    fn transformation_factors_are_members() {
        // Factors (I + a E^{[l,r]}) and (I + b P^{[l,r]}) of the
        // elementary transformations lie in the inflated algebra.
        let mut j = Matrix::zero(Q, 2, 2);
        j[(0, 1)] = Q.one();
        let tr = ProblemTriple {
            field: Q,
            classes: vec![0, 0],
            p_gens: vec![j.clone()],
            v_gens: vec![Matrix::identity(Q, 2)],
        };
        let ps = from_triple(&tr, ProblemKind::Triple).unwrap();
        let sizes = vec![2, 2];
        let alg = ps.algebra(sizes.clone()).unwrap();
        let partition = ps.partition(sizes).unwrap();

        // E_I^{[l,r]}: unit position in every diagonal block of the class.
        for (l, r) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            let mut s = Matrix::identity(Q, 4);
            for strip in 0..2 {
                let mut blk = block_view(&s, &partition, (strip, strip)).unwrap();
                blk[(l, r)] = blk[(l, r)].add(&Q.from_i64(2));
                block_write(&mut s, &partition, (strip, strip), &blk).unwrap();
            }
            assert!(alg.contains(&s).unwrap(), "E factor at ({l},{r})");
        }
        // P^{[l,r]}: the generator inflated to a single entry per block.
        for (l, r) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            let mut s = Matrix::identity(Q, 4);
            let mut blk = Matrix::zero(Q, 2, 2);
            blk[(l, r)] = Q.from_i64(3);
            block_write(&mut s, &partition, (0, 1), &blk).unwrap();
            assert!(alg.contains(&s).unwrap(), "P factor at ({l},{r})");
        }
    }

    #[test]
    fn inflated_space_is_invariant_under_inflated_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ps = kronecker_problem(Q).unwrap();
        let sizes = ps.sizes_from_class_dims(&[2, 2]).unwrap();
        let alg = ps.algebra(sizes.clone()).unwrap();
        let partition = ps.partition(sizes.clone()).unwrap();
        let basis = ps.matrix_space_basis(&sizes).unwrap();
        for _ in 0..10 {
            let s = alg.random_invertible(&mut rng);
            let s_inv = s.inverse().unwrap();
            for m in &basis {
                let conj = s_inv.mul(m).mul(&s);
                assert!(ps.mspace_contains(&partition, &conj).unwrap());
            }
        }
    }
}
