//! Dense matrices over ℤ with arbitrary-precision entries, plus the exact
//! normal forms (Smith, column Hermite) and lattice utilities (kernels,
//! solving, preimages, intersections) used by every other module.
//!
//! Lattices are always represented by matrices whose *columns* span them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Row-major dense integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl std::fmt::Debug for IntMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{} ", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = IntMat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(*v));
            }
        }
        m
    }

    /// Column vector from integer slice.
    pub fn col_from(v: &[i64]) -> Self {
        let mut m = IntMat::zeros(v.len(), 1);
        for (i, x) in v.iter().enumerate() {
            m.set(i, 0, BigInt::from(*x));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j { self.get(i, j).is_one() } else { self.get(i, j).is_zero() }
                })
            })
    }

    pub fn transpose(&self) -> IntMat {
        let mut t = IntMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IntMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let cur = out.get(i, j) + a * b;
                        out.set(i, j, cur);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &IntMat) -> IntMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for i in 0..self.data.len() {
            out.data[i] = &self.data[i] + &other.data[i];
        }
        out
    }

    pub fn sub(&self, other: &IntMat) -> IntMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for i in 0..self.data.len() {
            out.data[i] = &self.data[i] - &other.data[i];
        }
        out
    }

    pub fn neg(&self) -> IntMat {
        let mut out = self.clone();
        for x in &mut out.data {
            *x = -std::mem::take(x);
        }
        out
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        let mut out = IntMat::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c).clone());
            }
            for c in 0..other.cols {
                out.set(r, self.cols + c, other.get(r, c).clone());
            }
        }
        out
    }

    /// Vertical concatenation [self; other].
    pub fn vstack(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.cols, "col mismatch in vstack");
        let mut out = IntMat::zeros(self.rows + other.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c).clone());
            }
        }
        for r in 0..other.rows {
            for c in 0..self.cols {
                out.set(self.rows + r, c, other.get(r, c).clone());
            }
        }
        out
    }

    pub fn column(&self, c: usize) -> IntMat {
        let mut out = IntMat::zeros(self.rows, 1);
        for r in 0..self.rows {
            out.set(r, 0, self.get(r, c).clone());
        }
        out
    }

    pub fn columns(&self, idx: &[usize]) -> IntMat {
        let mut out = IntMat::zeros(self.rows, idx.len());
        for (j, &c) in idx.iter().enumerate() {
            for r in 0..self.rows {
                out.set(r, j, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn row_slice(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMat {
        let mut out = IntMat::zeros(idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            for c in 0..self.cols {
                out.set(i, c, self.get(r, c).clone());
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[a] += q * row[b]
    fn add_row_mul(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let v = self.get(a, c) + q * self.get(b, c);
            self.set(a, c, v);
        }
    }

    /// col[a] += q * col[b]
    fn add_col_mul(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let v = self.get(r, a) + q * self.get(r, b);
            self.set(r, a, v);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self.get(r, c).clone();
            self.set(r, c, v);
        }
    }

    fn negate_col(&mut self, c: usize) {
        for r in 0..self.rows {
            let v = -self.get(r, c).clone();
            self.set(r, c, v);
        }
    }

    /// Determinant by fraction-free (Bareiss) elimination. Square matrices only.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m.get(k, k).is_zero() {
                let swap = (k + 1..n).find(|&i| !m.get(i, k).is_zero());
                match swap {
                    Some(i) => {
                        m.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (m.get(i, j) * m.get(k, k) - m.get(i, k) * m.get(k, j)) / &prev;
                    m.set(i, j, v);
                }
                m.set(i, k, BigInt::zero());
            }
            prev = m.get(k, k).clone();
        }
        sign * m.get(n - 1, n - 1).clone()
    }
}

/// Result of a Smith normal form computation: `u * a * v = d` with `u`, `v`
/// unimodular and `d` diagonal, non-negative, with d₁ | d₂ | … .
pub struct Snf {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
}

impl Snf {
    /// Diagonal entries (length min(rows, cols)).
    pub fn diag(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n).map(|i| self.d.get(i, i).clone()).collect()
    }

    /// Number of nonzero diagonal entries (the rank).
    pub fn rank(&self) -> usize {
        self.diag().iter().filter(|x| !x.is_zero()).count()
    }
}

/// Smith normal form over ℤ.
pub fn smith_normal_form(a: &IntMat) -> Snf {
    let rows = a.rows();
    let cols = a.cols();
    let mut d = a.clone();
    let mut u = IntMat::identity(rows);
    let mut v = IntMat::identity(cols);
    let n = rows.min(cols);

    for t in 0..n {
        // Find a pivot of minimal absolute value in the trailing submatrix.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !d.get(i, j).is_zero() {
                    let better = match pivot {
                        None => true,
                        Some((pi, pj)) => d.get(i, j).abs() < d.get(pi, pj).abs(),
                    };
                    if better {
                        pivot = Some((i, j));
                    }
                }
            }
        }
        let (pi, pj) = match pivot {
            Some(p) => p,
            None => break,
        };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);

        'reduce: loop {
            // Clear column t below the pivot.
            for i in t + 1..rows {
                if d.get(i, t).is_zero() {
                    continue;
                }
                let q = rounded_div(d.get(i, t), d.get(t, t));
                d.add_row_mul(i, t, &-&q);
                u.add_row_mul(i, t, &-&q);
                if !d.get(i, t).is_zero() {
                    // Remainder is strictly smaller; promote it to pivot.
                    d.swap_rows(t, i);
                    u.swap_rows(t, i);
                    continue 'reduce;
                }
            }
            // Clear row t to the right of the pivot.
            for j in t + 1..cols {
                if d.get(t, j).is_zero() {
                    continue;
                }
                let q = rounded_div(d.get(t, j), d.get(t, t));
                d.add_col_mul(j, t, &-&q);
                v.add_col_mul(j, t, &-&q);
                if !d.get(t, j).is_zero() {
                    d.swap_cols(t, j);
                    v.swap_cols(t, j);
                    continue 'reduce;
                }
            }
            // Pivot must divide every remaining entry; if not, fold the
            // offending row in and restart the elimination.
            for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(d.get(i, j) % d.get(t, t)).is_zero() {
                        d.add_row_mul(t, i, &BigInt::one());
                        u.add_row_mul(t, i, &BigInt::one());
                        continue 'reduce;
                    }
                }
            }
            break;
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    Snf { u, d, v }
}

/// Rounded division: q minimizing |a - q*b| (ties toward the floor).
fn rounded_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    // |r| <= |b|-1; adjust so the remainder has minimal absolute value.
    let two_r = BigInt::from(2) * r.abs();
    if two_r > b.abs() {
        if (a * b).is_negative() {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

/// Basis of the integer kernel {x : a·x = 0}, as columns. Always saturated.
pub fn kernel_basis(a: &IntMat) -> IntMat {
    let snf = smith_normal_form(a);
    let n = a.rows().min(a.cols());
    let mut idx = Vec::new();
    for j in 0..a.cols() {
        if j >= n || snf.d.get(j, j).is_zero() {
            idx.push(j);
        }
    }
    snf.v.columns(&idx)
}

/// One integral solution of a·x = b (matrix right-hand side), if any.
pub fn solve(a: &IntMat, b: &IntMat) -> Option<IntMat> {
    LinearSolver::new(a.clone()).solve(b)
}

/// Repeated exact solving against a fixed coefficient matrix; the Smith form
/// is computed once at construction.
pub struct LinearSolver {
    rows: usize,
    cols: usize,
    snf: Snf,
}

impl LinearSolver {
    pub fn new(a: IntMat) -> Self {
        let rows = a.rows();
        let cols = a.cols();
        let snf = smith_normal_form(&a);
        LinearSolver { rows, cols, snf }
    }

    /// One integral solution of a·x = b, if any.
    pub fn solve(&self, b: &IntMat) -> Option<IntMat> {
        assert_eq!(self.rows, b.rows(), "rhs row mismatch");
        let c = self.snf.u.mul(b);
        let n = self.rows.min(self.cols);
        let mut y = IntMat::zeros(self.cols, b.cols());
        for i in 0..self.rows {
            let di = if i < n { self.snf.d.get(i, i).clone() } else { BigInt::zero() };
            for j in 0..b.cols() {
                let ci = c.get(i, j);
                if di.is_zero() {
                    if !ci.is_zero() {
                        return None;
                    }
                } else {
                    let (q, r) = ci.div_rem(&di);
                    if !r.is_zero() {
                        return None;
                    }
                    if i < y.rows() {
                        y.set(i, j, q);
                    }
                }
            }
        }
        Some(self.snf.v.mul(&y))
    }
}

/// Canonical column Hermite normal form of the column lattice of `a`.
///
/// Returns a matrix whose columns form the unique HNF basis: pivot rows
/// strictly increasing, pivots positive, entries left of a pivot in its row
/// reduced into [0, pivot), zero columns dropped. Two matrices span the same
/// column lattice iff their HNFs are equal.
pub fn hermite_col(a: &IntMat) -> IntMat {
    let rows = a.rows();
    let mut m = a.clone();
    let mut pivot_col = 0usize;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for r in 0..rows {
        if pivot_col >= m.cols() {
            break;
        }
        // gcd-fold columns pivot_col.. so row r has a single nonzero entry.
        loop {
            let mut best: Option<usize> = None;
            for j in pivot_col..m.cols() {
                if !m.get(r, j).is_zero() {
                    best = match best {
                        None => Some(j),
                        Some(b) => {
                            if m.get(r, j).abs() < m.get(r, b).abs() {
                                Some(j)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let b = match best {
                Some(b) => b,
                None => break,
            };
            m.swap_cols(pivot_col, b);
            let mut done = true;
            for j in pivot_col + 1..m.cols() {
                if m.get(r, j).is_zero() {
                    continue;
                }
                let q = m.get(r, j) / m.get(r, pivot_col);
                m.add_col_mul(j, pivot_col, &-&q);
                if !m.get(r, j).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if m.get(r, pivot_col).is_zero() {
            continue; // no pivot in this row
        }
        if m.get(r, pivot_col).is_negative() {
            m.negate_col(pivot_col);
        }
        // Reduce earlier columns at this row into [0, pivot).
        for j in 0..pivot_col {
            let p = m.get(r, pivot_col).clone();
            let e = m.get(r, j);
            let q = e.div_floor(&p);
            m.add_col_mul(j, pivot_col, &-&q);
        }
        pivots.push((r, pivot_col));
        pivot_col += 1;
    }
    let keep: Vec<usize> = (0..pivot_col).collect();
    m.columns(&keep)
}

/// Basis (columns) of the preimage lattice {v : a·v ∈ column span of l}.
/// `l` may have zero columns (then this is just the kernel of `a`).
pub fn preimage_lattice(a: &IntMat, l: &IntMat) -> IntMat {
    assert_eq!(a.rows(), l.rows(), "target space mismatch");
    let stacked = a.hstack(&l.neg());
    let ker = kernel_basis(&stacked);
    let top: Vec<usize> = (0..a.cols()).collect();
    let sub = ker_rows(&ker, &top);
    hermite_col(&sub)
}

fn ker_rows(m: &IntMat, idx: &[usize]) -> IntMat {
    m.select_rows(idx)
}

/// Basis of the intersection of the column lattices of b1 and b2.
pub fn lattice_intersection(b1: &IntMat, b2: &IntMat) -> IntMat {
    assert_eq!(b1.rows(), b2.rows());
    let stacked = b1.hstack(&b2.neg());
    let ker = kernel_basis(&stacked);
    let top: Vec<usize> = (0..b1.cols()).collect();
    let coeff = ker.select_rows(&top);
    hermite_col(&b1.mul(&coeff))
}

/// True iff v (a column vector) lies in the column lattice of b.
pub fn lattice_contains(b: &IntMat, v: &IntMat) -> bool {
    solve(b, v).is_some()
}

/// True iff the column lattices coincide.
pub fn lattice_eq(b1: &IntMat, b2: &IntMat) -> bool {
    hermite_col(b1) == hermite_col(b2)
}

/// Invariant factors of the quotient (column lattice of `big`) / (column
/// lattice of `small`); `small` must be contained in `big`. Returns the
/// nontrivial finite invariant factors (each ≥ 2, in divisibility order)
/// together with the free rank of the quotient.
pub fn lattice_quotient(big: &IntMat, small: &IntMat) -> (Vec<BigInt>, usize) {
    let coeff = solve(big, small).expect("small lattice not contained in big lattice");
    let snf = smith_normal_form(&coeff);
    let diag = snf.diag();
    let rank_small = diag.iter().filter(|d| !d.is_zero()).count();
    let torsion: Vec<BigInt> =
        diag.into_iter().filter(|d| !d.is_zero() && !d.is_one()).collect();
    let free = big.cols() - rank_small;
    (torsion, free)
}
