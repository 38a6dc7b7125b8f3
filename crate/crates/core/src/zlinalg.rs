//! Exact integer matrices: Smith normal form, kernels, symplectic checks and completion.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{NzError, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        IntMatrix { rows, cols, data }
    }

    /// Build from small-integer rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.as_ref().len());
        assert!(rows.iter().all(|x| x.as_ref().len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| BigInt::from(rows[i].as_ref()[j]))
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Result<Self> {
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NzError::Shape("ragged rows".into()));
        }
        let n = rows.len();
        Ok(IntMatrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn diag(entries: &[i64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { BigInt::from(entries[i]) } else { BigInt::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&BigInt> {
        (i < self.rows && j < self.cols).then(|| &self.data[i * self.cols + j])
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    /// Entries as i64 when they all fit.
    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        use num_traits::ToPrimitive;
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_i64()).collect()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn neg(&self) -> Self {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.shape(), o.shape());
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * k).collect() }
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(NzError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        out.data[i * o.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn hstack(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows);
        Self::from_fn(self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols { self[(i, j)].clone() } else { o[(i, j - self.cols)].clone() }
        })
    }

    pub fn vstack(&self, o: &Self) -> Self {
        assert!(self.cols == o.cols || self.rows == 0 || o.rows == 0);
        let cols = self.cols.max(o.cols);
        let mut data = self.data.clone();
        data.extend(o.data.iter().cloned());
        IntMatrix { rows: self.rows + o.rows, cols, data }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)].clone())
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += k·row[src]
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        for j in 0..self.cols {
            let t = &self.data[src * self.cols + j] * k;
            self.data[dst * self.cols + j] += t;
        }
    }

    /// col[dst] += k·col[src]
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        for i in 0..self.rows {
            let t = &self.data[i * self.cols + src] * k;
            self.data[i * self.cols + dst] += t;
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let x = &mut self.data[i * self.cols + j];
            *x = -&*x;
        }
    }

    pub fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let x = &mut self.data[i * self.cols + j];
            *x = -&*x;
        }
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt> {
        if !self.is_square() {
            return Err(NzError::Shape("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(p) => {
                        a.swap_rows(k, p);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                    a[(i, j)] = v;
                }
            }
            prev = a[(k, k)].clone();
        }
        Ok(sign * &a[(n - 1, n - 1)])
    }

    pub fn is_unimodular(&self) -> bool {
        self.determinant().map(|d| d.abs().is_one()).unwrap_or(false)
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut r = 0;
        for c in 0..a.cols {
            let Some(p) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else { continue };
            a.swap_rows(r, p);
            for i in r + 1..a.rows {
                if a[(i, c)].is_zero() {
                    continue;
                }
                let (f, g) = (a[(r, c)].clone(), a[(i, c)].clone());
                for j in c..a.cols {
                    let v = &a[(i, j)] * &f - &a[(r, j)] * &g;
                    a[(i, j)] = v;
                }
            }
            r += 1;
            if r == a.rows {
                break;
            }
        }
        r
    }

    /// Inverse of a unimodular matrix.
    pub fn unimodular_inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(NzError::Shape("inverse of non-square matrix".into()));
        }
        let s = smith_normal_form(self);
        if (0..self.rows).any(|i| !s.d[(i, i)].is_one()) {
            return Err(NzError::Invalid("matrix is not unimodular".into()));
        }
        // U M V = I  =>  M⁻¹ = V U
        Ok(&s.v * &s.u)
    }

    /// Text form: "rows cols" then one line per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let m = parse_from_lines(&mut lines)?;
        if let Some(extra) = lines.next() {
            return Err(NzError::Parse(format!("trailing content: {extra:?}")));
        }
        Ok(m)
    }
}

/// Reads one matrix ("rows cols" header then rows) from a line iterator.
pub fn parse_from_lines<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<IntMatrix> {
    let head = lines.next().ok_or_else(|| NzError::Parse("missing matrix header".into()))?;
    let dims: Vec<usize> = head
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| NzError::Parse(format!("bad matrix header {head:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(NzError::Parse(format!("matrix header needs 2 numbers: {head:?}")));
    };
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let line = lines.next().ok_or_else(|| NzError::Parse(format!("missing matrix row {r}")))?;
        let row: Vec<BigInt> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| NzError::Parse(format!("bad integer {t:?}"))))
            .collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(NzError::Parse(format!("row {r} has {} entries, expected {cols}", row.len())));
        }
        out.push(row);
    }
    IntMatrix::from_big_rows(out, cols)
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &IntMatrix {
    type Output = IntMatrix;
    fn mul(self, o: &IntMatrix) -> IntMatrix {
        self.try_mul(o).expect("matrix shapes")
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.data.iter().map(|x| x.to_string().len()).max().unwrap_or(1);
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|x| format!("{x:>w$}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

/// J_{2n} = (0 −I; I 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticForm {
    pub n: usize,
    pub matrix: IntMatrix,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        let mut m = IntMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, n + i)] = -BigInt::one();
            m[(n + i, i)] = BigInt::one();
        }
        SymplecticForm { n, matrix: m }
    }

    /// x·J·yᵗ for row vectors of length 2n.
    pub fn pair(&self, x: &[BigInt], y: &[BigInt]) -> BigInt {
        let n = self.n;
        (0..n).map(|i| &y[i] * &x[n + i] - &x[i] * &y[n + i]).sum()
    }

    /// M·J·Mᵗ.
    pub fn gram(&self, m: &IntMatrix) -> IntMatrix {
        &(m * &self.matrix) * &m.transpose()
    }

    pub fn is_symplectic(&self, s: &IntMatrix) -> bool {
        s.shape() == (2 * self.n, 2 * self.n)
            && self.gram(s) == self.matrix
            && &(&s.transpose() * &self.matrix) * s == self.matrix
    }
}

// ---------------------------------------------------------------------------

/// U·M·V = D with U, V unimodular and d_i | d_{i+1}, d_i ≥ 0.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    pub fn invariants(&self) -> Vec<BigInt> {
        (0..self.d.rows.min(self.d.cols)).map(|i| self.d[(i, i)].clone()).collect()
    }
    pub fn rank(&self) -> usize {
        self.invariants().iter().filter(|x| !x.is_zero()).count()
    }
}

fn min_pivot(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..a.rows {
        for j in t..a.cols {
            let x = &a[(i, j)];
            if x.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < a[(bi, bj)].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let (r, c) = m.shape();
    let mut a = m.clone();
    let mut u = IntMatrix::identity(r);
    let mut v = IntMatrix::identity(c);
    for t in 0..r.min(c) {
        let Some((pi, pj)) = min_pivot(&a, t) else { break };
        a.swap_rows(t, pi);
        u.swap_rows(t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..r {
                if a[(i, t)].is_zero() {
                    continue;
                }
                let q = -a[(i, t)].div_floor(&a[(t, t)]);
                a.add_row_multiple(i, t, &q);
                u.add_row_multiple(i, t, &q);
                if !a[(i, t)].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..c {
                if a[(t, j)].is_zero() {
                    continue;
                }
                let q = -a[(t, j)].div_floor(&a[(t, t)]);
                a.add_col_multiple(j, t, &q);
                v.add_col_multiple(j, t, &q);
                if !a[(t, j)].is_zero() {
                    dirty = true;
                }
            }
            if !dirty {
                // divisibility of the remaining block
                let p = a[(t, t)].clone();
                let bad = (t + 1..r).find(|&i| (t + 1..c).any(|j| !a[(i, j)].is_multiple_of(&p)));
                match bad {
                    Some(i) => {
                        let one = BigInt::one();
                        a.add_row_multiple(t, i, &one);
                        u.add_row_multiple(t, i, &one);
                    }
                    None => break,
                }
            }
            // move the smallest entry of row t / column t onto the diagonal
            let mut best = (t, t);
            for i in t + 1..r {
                if !a[(i, t)].is_zero() && a[(i, t)].abs() < a[best].abs() {
                    best = (i, t);
                }
            }
            for j in t + 1..c {
                if !a[(t, j)].is_zero() && a[(t, j)].abs() < a[best].abs() {
                    best = (t, j);
                }
            }
            if best.0 != t {
                a.swap_rows(t, best.0);
                u.swap_rows(t, best.0);
            } else if best.1 != t {
                a.swap_cols(t, best.1);
                v.swap_cols(t, best.1);
            }
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }
    Snf { u, d: a, v }
}

/// Rank over Q and a basis of the integer kernel lattice {x : M·x = 0}.
pub fn rank_and_kernel(m: &IntMatrix) -> (usize, Vec<Vec<BigInt>>) {
    let s = smith_normal_form(m);
    let rank = s.rank();
    let kernel = (rank..m.cols).map(|j| s.v.col(j)).collect();
    (rank, kernel)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfSymplecticVerdict {
    pub symmetric: bool,
    pub full_lattice: bool,
    /// (i, j) with (ABᵗ)_ij ≠ (ABᵗ)_ji, i < j.
    pub asymmetric_entries: Vec<(usize, usize)>,
    pub smith_invariants: Vec<BigInt>,
}

impl HalfSymplecticVerdict {
    pub fn passed(&self) -> bool {
        self.symmetric && self.full_lattice
    }

    pub fn reasons(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.symmetric {
            out.push(format!("A·Bᵗ is not symmetric at {:?}", self.asymmetric_entries));
        }
        if !self.full_lattice {
            let inv: Vec<String> = self.smith_invariants.iter().map(|x| x.to_string()).collect();
            out.push(format!("columns do not span Z^N (Smith invariants {})", inv.join(",")));
        }
        out
    }
}

/// Split an N×2N matrix into (A, B).
pub fn split_half(h: &IntMatrix) -> Result<(IntMatrix, IntMatrix)> {
    let n = h.rows();
    if h.cols() != 2 * n {
        return Err(NzError::Shape(format!("expected N x 2N, got {}x{}", h.rows(), h.cols())));
    }
    Ok((h.block(0, 0, n, n), h.block(0, n, n, n)))
}

pub fn is_half_symplectic(h: &IntMatrix) -> Result<HalfSymplecticVerdict> {
    let (a, b) = split_half(h)?;
    let abt = &a * &b.transpose();
    let n = h.rows();
    let asym: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| abt[(i, j)] != abt[(j, i)])
        .collect();
    let inv = smith_normal_form(h).invariants();
    let full = inv.iter().all(One::is_one);
    Ok(HalfSymplecticVerdict {
        symmetric: asym.is_empty(),
        full_lattice: full,
        asymmetric_entries: asym,
        smith_invariants: inv,
    })
}

/// A right inverse G (2N×N) with H·G = I.
fn right_inverse(h: &IntMatrix) -> Result<IntMatrix> {
    let n = h.rows();
    let a = h.block(0, 0, n, n);
    if a.is_unimodular() {
        let ai = a.unimodular_inverse()?;
        return Ok(ai.vstack(&IntMatrix::zeros(n, n)));
    }
    let s = smith_normal_form(h);
    // U·H·V = (I | 0)  =>  H·V·(U; 0) = I
    Ok(&s.v * &s.u.vstack(&IntMatrix::zeros(n, n)))
}

/// Lower half (C D) completing H to an integral symplectic matrix.
pub fn complete_to_symplectic(h: &IntMatrix) -> Result<IntMatrix> {
    let verdict = is_half_symplectic(h)?;
    if !verdict.passed() {
        return Err(NzError::NotHalfSymplectic(verdict.reasons().join("; ")));
    }
    let n = h.rows();
    let j = SymplecticForm::new(n);
    let g = right_inverse(h)?;
    // K0 = −GᵗJ gives H·J·K0ᵗ = −I; fix K·J·Kᵗ = 0 with K = K0 + X·H
    let k0 = (&g.transpose() * &j.matrix).neg();
    let p = j.gram(&k0);
    let x = IntMatrix::from_fn(n, n, |r, c| if c < r { p[(r, c)].clone() } else { BigInt::zero() });
    let k = k0.add(&(&x * h));
    debug_assert!(j.is_symplectic(&h.vstack(&k)));
    Ok(k)
}

/// The block inverse (Dᵗ −Bᵗ; −Cᵗ Aᵗ) of a symplectic (A B; C D).
pub fn symplectic_inverse(s: &IntMatrix) -> IntMatrix {
    let n = s.rows() / 2;
    let a = s.block(0, 0, n, n);
    let b = s.block(0, n, n, n);
    let c = s.block(n, 0, n, n);
    let d = s.block(n, n, n, n);
    let top = d.transpose().hstack(&b.transpose().neg());
    let bot = c.transpose().neg().hstack(&a.transpose());
    top.vstack(&bot)
}
