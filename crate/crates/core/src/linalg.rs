//! Exact dense matrix arithmetic, row reduction, linear solving, and
//! block-partition bookkeeping.
//!
//! Zero-row and zero-column matrices are legal values everywhere; every
//! operation treats them with the obvious conventions (rank 0, unique empty
//! solution, etc).

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};

/// Row-major exact matrix over a single field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    field: FieldSpec,
    entries: Vec<FieldElement>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {} [", self.rows, self.cols, self.field)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = FieldElement;

    fn index(&self, (i, j): (usize, usize)) -> &FieldElement {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut FieldElement {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

impl Matrix {
    pub fn zero(field: FieldSpec, rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, field, entries: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Matrix {
        let mut m = Matrix::zero(field, n, n);
        for i in 0..n {
            m[(i, i)] = field.one();
        }
        m
    }

    pub fn from_fn(
        field: FieldSpec,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> FieldElement,
    ) -> Matrix {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                assert_eq!(e.spec(), field, "entry field mismatch");
                entries.push(e);
            }
        }
        Matrix { rows, cols, field, entries }
    }

    /// Builds a matrix from signed integer literals, mostly for tests and
    /// small constructions.
    pub fn from_i64(field: FieldSpec, data: &[&[i64]]) -> Matrix {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        Matrix::from_fn(field, rows, cols, |i, j| field.from_i64(data[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(FieldElement::is_zero)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.field, self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Matrix::from_fn(self.field, self.rows, self.cols, |i, j| {
            self[(i, j)].add(&other[(i, j)])
        })
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Matrix::from_fn(self.field, self.rows, self.cols, |i, j| {
            self[(i, j)].sub(&other[(i, j)])
        })
    }

    pub fn scale(&self, c: &FieldElement) -> Matrix {
        Matrix::from_fn(self.field, self.rows, self.cols, |i, j| self[(i, j)].mul(c))
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in multiplication");
        let mut out = Matrix::zero(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    if other[(k, j)].is_zero() {
                        continue;
                    }
                    let t = self[(i, k)].mul(&other[(k, j)]);
                    out[(i, j)] = out[(i, j)].add(&t);
                }
            }
        }
        out
    }

    /// True if the matrix is c*I for the given scalar.
    pub fn is_scalar(&self, c: &FieldElement) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                let want = if i == j { c.clone() } else { self.field.zero() };
                if self[(i, j)] != want {
                    return false;
                }
            }
        }
        true
    }

    /// If the matrix equals c*I for some scalar c, returns it. The 0x0
    /// matrix reports scalar 0.
    pub fn scalar_value(&self) -> Option<FieldElement> {
        if !self.is_square() {
            return None;
        }
        if self.rows == 0 {
            return Some(self.field.zero());
        }
        let c = self[(0, 0)].clone();
        if self.is_scalar(&c) {
            Some(c)
        } else {
            None
        }
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        Matrix::from_fn(self.field, r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn write_submatrix(&mut self, r0: usize, c0: usize, m: &Matrix) {
        assert!(r0 + m.rows <= self.rows && c0 + m.cols <= self.cols);
        for i in 0..m.rows {
            for j in 0..m.cols {
                self[(r0 + i, c0 + j)] = m[(i, j)].clone();
            }
        }
    }

    /// Direct sum: block diagonal [self, other].
    pub fn direct_sum(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zero(self.field, self.rows + other.rows, self.cols + other.cols);
        out.write_submatrix(0, 0, self);
        out.write_submatrix(self.rows, self.cols, other);
        out
    }

    /// Reduced row echelon form.
    ///
    /// Returns (R, rank, pivot columns, T) with T invertible and T*self = R.
    pub fn rref(&self) -> Rref {
        let mut r = self.clone();
        let mut t = Matrix::identity(self.field, self.rows);
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&i| !r[(i, col)].is_zero()) else {
                continue;
            };
            if p != row {
                r.swap_rows(p, row);
                t.swap_rows(p, row);
            }
            let inv = r[(row, col)].inv().expect("pivot is nonzero");
            r.scale_row(row, &inv);
            t.scale_row(row, &inv);
            for i in 0..self.rows {
                if i != row && !r[(i, col)].is_zero() {
                    let c = r[(i, col)].clone();
                    r.sub_scaled_row(i, row, &c);
                    t.sub_scaled_row(i, row, &c);
                }
            }
            pivots.push(col);
            row += 1;
        }
        Rref { reduced: r, rank: row, pivot_cols: pivots, transform: t }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, i: usize, c: &FieldElement) {
        for j in 0..self.cols {
            self[(i, j)] = self[(i, j)].mul(c);
        }
    }

    /// row_i -= c * row_src
    fn sub_scaled_row(&mut self, i: usize, src: usize, c: &FieldElement) {
        for j in 0..self.cols {
            let t = self[(src, j)].mul(c);
            self[(i, j)] = self[(i, j)].sub(&t);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Solves self * x = b for a column vector b.
    ///
    /// Returns None iff the system is inconsistent, otherwise a particular
    /// solution (free variables set to zero) and a basis of the kernel.
    pub fn solve(&self, b: &Matrix) -> Option<Solution> {
        assert_eq!(b.rows, self.rows, "right-hand side length mismatch");
        assert_eq!(b.cols, 1, "right-hand side must be a column");
        let mut aug = Matrix::zero(self.field, self.rows, self.cols + 1);
        aug.write_submatrix(0, 0, self);
        aug.write_submatrix(0, self.cols, b);
        let red = aug.rref();
        if red.pivot_cols.contains(&self.cols) {
            return None;
        }
        let mut particular = Matrix::zero(self.field, self.cols, 1);
        for (r, &pc) in red.pivot_cols.iter().enumerate() {
            particular[(pc, 0)] = red.reduced[(r, self.cols)].clone();
        }
        Some(Solution { particular, nullspace: self.nullspace_from_rref(&red) })
    }

    /// Kernel basis in the usual free-variable unit completion form,
    /// computed from an rref of an augmented or plain matrix whose first
    /// self.cols columns reduce self.
    fn nullspace_from_rref(&self, red: &Rref) -> Vec<Matrix> {
        let mut basis = Vec::new();
        let mut is_pivot = vec![false; self.cols];
        for &pc in &red.pivot_cols {
            if pc < self.cols {
                is_pivot[pc] = true;
            }
        }
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = Matrix::zero(self.field, self.cols, 1);
            v[(free, 0)] = self.field.one();
            for (r, &pc) in red.pivot_cols.iter().enumerate() {
                if pc < self.cols {
                    v[(pc, 0)] = red.reduced[(r, free)].neg();
                }
            }
            basis.push(v);
        }
        basis
    }

    pub fn nullspace(&self) -> Vec<Matrix> {
        let red = self.rref();
        self.nullspace_from_rref(&red)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let red = self.rref();
        if red.rank < self.rows {
            return Err(Error::Singular);
        }
        Ok(red.transform)
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// Monic characteristic polynomial coefficients c_0..c_n with
    /// p(x) = c_0 + c_1 x + ... + c_n x^n and c_n = 1.
    ///
    /// Over the rationals this is the Faddeev-LeVerrier recurrence; over F_p
    /// the division-free Berkowitz elimination of xI - A (the recurrence
    /// divides by 1..n, which collides with small p).
    pub fn char_poly(&self) -> Vec<FieldElement> {
        assert!(self.is_square(), "characteristic polynomial of a non-square matrix");
        match self.field {
            FieldSpec::Rationals => self.char_poly_faddeev(),
            FieldSpec::PrimeField(_) => self.char_poly_berkowitz(),
        }
    }

    fn char_poly_faddeev(&self) -> Vec<FieldElement> {
        let n = self.rows;
        let one = self.field.one();
        let mut coeffs = vec![self.field.zero(); n + 1];
        coeffs[n] = one.clone();
        let mut m = Matrix::identity(self.field, n);
        for k in 1..=n {
            m = self.mul(&m);
            let mut tr = self.field.zero();
            for i in 0..n {
                tr = tr.add(&m[(i, i)]);
            }
            let c = tr.neg().div(&self.field.from_i64(k as i64)).expect("k nonzero in Q");
            coeffs[n - k] = c.clone();
            for i in 0..n {
                m[(i, i)] = m[(i, i)].add(&c);
            }
        }
        coeffs
    }

    fn char_poly_berkowitz(&self) -> Vec<FieldElement> {
        let n = self.rows;
        let f = self.field;
        // Column vector of polynomial coefficients, degree grows per step.
        let mut poly = vec![f.one()];
        for k in 0..n {
            // Principal (k+1)x(k+1) leading submatrix data.
            let a = &self;
            let akk = a[(k, k)].clone();
            // row R = A[k, 0..k], column C = A[0..k, k], block B = A[0..k,0..k]
            // Toeplitz coefficients: t_0 = 1 (x), t_1 = -a_kk, t_{j+2} = -(R B^j C)
            let mut toep = Vec::with_capacity(k + 2);
            toep.push(f.one());
            toep.push(akk.neg());
            if k > 0 {
                let b = a.submatrix(0, k, 0, k);
                let c = a.submatrix(0, k, k, k + 1);
                let r = a.submatrix(k, k + 1, 0, k);
                let mut v = c;
                for _ in 0..k {
                    let dot = r.mul(&v);
                    toep.push(dot[(0, 0)].neg());
                    v = b.mul(&v);
                }
            }
            // poly <- Toeplitz(t) * poly, where the product implements
            // p(x) <- (x - a_kk - sum t_j x^{-j}) style convolution giving the
            // characteristic polynomial of the (k+1) leading block.
            let mut next = vec![f.zero(); poly.len() + 1];
            for (i, pc) in poly.iter().enumerate() {
                for (j, tc) in toep.iter().enumerate() {
                    if i + j < next.len() {
                        let t = pc.mul(tc);
                        next[i + j] = next[i + j].add(&t);
                    }
                }
            }
            poly = next;
        }
        // poly holds coefficients from leading to trailing; reverse into
        // ascending order c_0..c_n.
        poly.reverse();
        poly
    }

    /// Evaluates a polynomial (ascending coefficients) at this matrix.
    pub fn eval_poly(&self, coeffs: &[FieldElement]) -> Matrix {
        let n = self.rows;
        let mut acc = Matrix::zero(self.field, n, n);
        for c in coeffs.iter().rev() {
            acc = self.mul(&acc);
            for i in 0..n {
                acc[(i, i)] = acc[(i, i)].add(c);
            }
        }
        acc
    }

    pub fn entries_as_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].to_string()).collect())
            .collect()
    }
}

/// Result of reduced row echelon computation.
pub struct Rref {
    pub reduced: Matrix,
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
    pub transform: Matrix,
}

/// Result of linear system solving.
pub struct Solution {
    pub particular: Matrix,
    pub nullspace: Vec<Matrix>,
}

/// Strip index pair into a partition, 0-based.
pub type BlockIndex = (usize, usize);

/// A sequence of strip sizes together with an equivalence relation on the
/// strips; strips in the same class must have equal sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPartition {
    sizes: Vec<usize>,
    classes: Vec<usize>,
}

impl StepPartition {
    pub fn new(sizes: Vec<usize>, classes: Vec<usize>) -> Result<StepPartition> {
        if sizes.len() != classes.len() {
            return Err(Error::PartitionMismatch(format!(
                "{} sizes but {} class labels",
                sizes.len(),
                classes.len()
            )));
        }
        for i in 0..sizes.len() {
            for j in i + 1..sizes.len() {
                if classes[i] == classes[j] && sizes[i] != sizes[j] {
                    return Err(Error::NotStepSequence(i, j, sizes[i], sizes[j]));
                }
            }
        }
        let mut p = StepPartition { sizes, classes };
        p.normalize_classes();
        Ok(p)
    }

    /// All strips in distinct classes.
    pub fn discrete(sizes: Vec<usize>) -> StepPartition {
        let classes = (0..sizes.len()).collect();
        StepPartition { sizes, classes }
    }

    fn normalize_classes(&mut self) {
        let mut map = std::collections::BTreeMap::new();
        let mut next = 0;
        for c in &mut self.classes {
            let id = *map.entry(*c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            *c = id;
        }
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn class_of(&self, strip: usize) -> usize {
        self.classes[strip]
    }

    pub fn class_count(&self) -> usize {
        self.classes.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn class_members(&self, class: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == class).collect()
    }

    /// Common strip size of a class.
    pub fn class_size(&self, class: usize) -> usize {
        self.class_members(class).first().map_or(0, |&i| self.sizes[i])
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Entry offset of each strip, plus the total as a final sentinel.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut acc = 0;
        for &s in &self.sizes {
            out.push(acc);
            acc += s;
        }
        out.push(acc);
        out
    }

    pub fn same_class(&self, i: usize, j: usize) -> bool {
        self.classes[i] == self.classes[j]
    }
}

/// Extracts the (i,j) block of a matrix conforming to the partition on both
/// axes.
pub fn block_view(m: &Matrix, p: &StepPartition, (i, j): BlockIndex) -> Result<Matrix> {
    check_conformal(m, p)?;
    let off = p.offsets();
    Ok(m.submatrix(off[i], off[i + 1], off[j], off[j + 1]))
}

/// Overwrites the (i,j) block.
pub fn block_write(m: &mut Matrix, p: &StepPartition, (i, j): BlockIndex, b: &Matrix) -> Result<()> {
    check_conformal(m, p)?;
    let off = p.offsets();
    if b.rows() != p.sizes()[i] || b.cols() != p.sizes()[j] {
        return Err(Error::PartitionMismatch(format!(
            "block is {}x{} but strip sizes are {}x{}",
            b.rows(),
            b.cols(),
            p.sizes()[i],
            p.sizes()[j]
        )));
    }
    m.write_submatrix(off[i], off[j], b);
    Ok(())
}

fn check_conformal(m: &Matrix, p: &StepPartition) -> Result<()> {
    let n = p.total();
    if m.rows() != n || m.cols() != n {
        return Err(Error::PartitionMismatch(format!(
            "matrix is {}x{} but partition totals {}",
            m.rows(),
            m.cols(),
            n
        )));
    }
    Ok(())
}
