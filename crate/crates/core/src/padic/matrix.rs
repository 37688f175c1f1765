//! Dense matrices over p-adic scalars or truncated series.
//!
//! Characteristic series use the division-free Berkowitz recursion, so the
//! same code runs over K and over truncated Tate algebras. Elimination
//! (rank, kernels, solves) is specific to scalars and pivots on the entry of
//! least valuation.

use std::fmt;

use super::context::PadicContext;
use super::scalar::PadicScalar;
use super::series::TruncatedSeries;
use super::PadicError;

/// Commutative ring operations needed by generic matrix code.
pub trait RingElement: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add_r(&self, other: &Self) -> Self;
    fn sub_r(&self, other: &Self) -> Self;
    fn mul_r(&self, other: &Self) -> Self;
    fn neg_r(&self) -> Self;
    /// Exactly zero at full precision; such entries may be skipped.
    fn is_exact_zero(&self) -> bool;
}

impl RingElement for PadicScalar {
    fn zero_like(&self) -> Self {
        PadicScalar::zero(self.context())
    }
    fn one_like(&self) -> Self {
        PadicScalar::one(self.context())
    }
    fn add_r(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_r(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_r(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_r(&self) -> Self {
        -self
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero() && self.abs_precision_pi() >= self.context().cap()
    }
}

impl RingElement for TruncatedSeries {
    fn zero_like(&self) -> Self {
        TruncatedSeries::zero_like(self)
    }
    fn one_like(&self) -> Self {
        TruncatedSeries::one_like(self)
    }
    fn add_r(&self, other: &Self) -> Self {
        self.checked_add(other).expect("series ring mismatch")
    }
    fn sub_r(&self, other: &Self) -> Self {
        self.checked_add(&other.neg()).expect("series ring mismatch")
    }
    fn mul_r(&self, other: &Self) -> Self {
        self.checked_mul(other).expect("series ring mismatch")
    }
    fn neg_r(&self) -> Self {
        self.neg()
    }
    fn is_exact_zero(&self) -> bool {
        self.is_empty()
    }
}

/// Row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: RingElement> Matrix<R> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Result<Self, PadicError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(PadicError::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &R {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<R> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[R] {
        &self.data
    }

    pub fn map<S: RingElement>(&self, f: impl Fn(&R) -> S) -> Matrix<S> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Identity of size `n` in the ring of `template`.
    pub fn identity_like(n: usize, template: &R) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { template.one_like() } else { template.zero_like() })
    }

    pub fn zeros_like(rows: usize, cols: usize, template: &R) -> Self {
        Self::from_fn(rows, cols, |_, _| template.zero_like())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PadicError> {
        if self.cols != other.rows {
            return Err(PadicError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let Some(t) = self.data.first().or(other.data.first()) else {
            return Ok(Matrix { rows: self.rows, cols: other.cols, data: Vec::new() });
        };
        let mut out = Self::zeros_like(self.rows, other.cols, t);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_exact_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].add_r(&a.mul_r(b));
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PadicError> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.add_r(b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PadicError> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.sub_r(b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    fn same_shape(&self, other: &Self) -> Result<(), PadicError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(PadicError::DimensionMismatch("shape".into()));
        }
        Ok(())
    }

    pub fn scale(&self, c: &R) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul_r(c)).collect() }
    }

    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows)
            .map(|i| {
                let mut acc = v.first().map(|x| x.zero_like());
                for (a, x) in self.row(i).iter().zip(v) {
                    if a.is_exact_zero() || x.is_exact_zero() {
                        continue;
                    }
                    acc = acc.map(|s| s.add_r(&a.mul_r(x)));
                }
                acc.expect("nonempty vector")
            })
            .collect()
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self.get(i, j).is_exact_zero()))
    }

    /// Principal leading block of size `n`.
    pub fn leading_block(&self, n: usize) -> Self {
        Self::from_fn(n, n, |i, j| self.get(i, j).clone())
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, other: &Self, template: &R) -> Self {
        let (r, c) = (self.rows + other.rows, self.cols + other.cols);
        Self::from_fn(r, c, |i, j| {
            if i < self.rows && j < self.cols {
                self.get(i, j).clone()
            } else if i >= self.rows && j >= self.cols {
                other.get(i - self.rows, j - self.cols).clone()
            } else {
                template.zero_like()
            }
        })
    }

    /// Coefficients `c_0 = 1, c_1, …, c_n` of det(1 − T·A), truncated after
    /// `c_{max_n}`.
    pub fn fredholm_coefficients(&self, max_n: usize, template: &R) -> Vec<R> {
        assert!(self.is_square(), "square matrix required");
        let n = self.rows;
        let top = max_n.min(n);
        if self.is_upper_triangular() {
            // ∏ (1 − a_ii T)
            let mut c = vec![template.one_like()];
            for i in 0..n {
                let a = self.get(i, i);
                if a.is_exact_zero() {
                    continue;
                }
                let mut next = c.clone();
                if next.len() <= top {
                    next.push(template.zero_like());
                }
                for k in 1..next.len() {
                    next[k] = next[k].sub_r(&c[k - 1].mul_r(a));
                }
                c = next;
            }
            c.resize(top + 1, template.zero_like());
            return c;
        }
        berkowitz(self, template, top)
    }
}

/// Berkowitz: char poly coefficients of the leading r×r blocks built up by
/// Toeplitz products. Returns a_0..a_top of det(xI − A) = Σ a_k x^{n−k},
/// which coincide with the coefficients of det(1 − T A).
fn berkowitz<R: RingElement>(a: &Matrix<R>, template: &R, top: usize) -> Vec<R> {
    let n = a.rows();
    let mut c: Vec<R> = vec![template.one_like()];
    for r in 0..n {
        // A_{r+1} = [[A_r, S], [R, a_rr]]
        let arr = a.get(r, r).clone();
        let s: Vec<R> = (0..r).map(|i| a.get(i, r).clone()).collect();
        let row: Vec<R> = (0..r).map(|j| a.get(r, j).clone()).collect();
        let needed = (r + 1).min(top);
        // t_0 = 1, t_1 = −a_rr, t_k = −R A_r^{k−2} S
        let mut t: Vec<R> = Vec::with_capacity(needed + 1);
        t.push(template.one_like());
        if needed >= 1 {
            t.push(arr.neg_r());
        }
        let row_zero = row.iter().all(|x| x.is_exact_zero());
        let s_zero = s.iter().all(|x| x.is_exact_zero());
        let mut v = s.clone();
        for k in 2..=needed {
            if row_zero || s_zero {
                t.push(template.zero_like());
                continue;
            }
            let mut dot = template.zero_like();
            for (x, y) in row.iter().zip(&v) {
                if x.is_exact_zero() || y.is_exact_zero() {
                    continue;
                }
                dot = dot.add_r(&x.mul_r(y));
            }
            t.push(dot.neg_r());
            if k < needed {
                // v ← A_r v
                let mut nv = vec![template.zero_like(); r];
                for (i, slot) in nv.iter_mut().enumerate() {
                    for (j, y) in v.iter().enumerate() {
                        let x = a.get(i, j);
                        if x.is_exact_zero() || y.is_exact_zero() {
                            continue;
                        }
                        *slot = slot.add_r(&x.mul_r(y));
                    }
                }
                v = nv;
            }
        }
        // new c = T · c (lower-triangular Toeplitz), truncated at `top`
        let len = (c.len() + 1).min(top + 1);
        let mut nc = vec![template.zero_like(); len];
        for (i, slot) in nc.iter_mut().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                if j > i {
                    break;
                }
                let k = i - j;
                if k >= t.len() {
                    continue;
                }
                if t[k].is_exact_zero() || cj.is_exact_zero() {
                    continue;
                }
                *slot = slot.add_r(&t[k].mul_r(cj));
            }
        }
        c = nc;
    }
    c.resize(top + 1, template.zero_like());
    c
}

/// Result of Gauss–Jordan elimination.
struct Echelon {
    m: Matrix<PadicScalar>,
    pivots: Vec<(usize, usize)>,
}

impl Matrix<PadicScalar> {
    pub fn zeros(ctx: PadicContext, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| PadicScalar::zero(ctx))
    }

    pub fn identity(ctx: PadicContext, n: usize) -> Self {
        Self::identity_like(n, &PadicScalar::one(ctx))
    }

    pub fn from_i64(ctx: PadicContext, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| PadicScalar::from_i64(ctx, rows[i][j]))
    }

    pub fn diagonal(ctx: PadicContext, d: &[PadicScalar]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i].clone() } else { PadicScalar::zero(ctx) })
    }

    /// Smallest entry valuation (π-units); `None` for a matrix zero to
    /// precision.
    pub fn min_valuation_pi(&self) -> Option<i64> {
        self.data.iter().filter_map(|x| x.valuation_pi()).min()
    }

    /// Smallest valuation-or-precision over all entries: every entry is
    /// divisible by π to this power.
    pub fn valuation_floor_pi(&self) -> i64 {
        self.data.iter().map(|x| x.valuation_floor_pi()).min().unwrap_or(i64::MAX)
    }

    /// Per-column minimal valuation floors.
    pub fn column_valuations_pi(&self) -> Vec<i64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).valuation_floor_pi()).min().unwrap_or(i64::MAX))
            .collect()
    }

    /// Treat every entry with valuation ≥ `tol` (π-units) as zero.
    pub fn chop(&self, tol: i64) -> Self {
        self.map(|x| {
            if x.valuation_floor_pi() >= tol {
                PadicScalar::zero(x.context())
            } else {
                x.clone()
            }
        })
    }

    /// Move all entries to another context of the same field.
    pub fn to_context(&self, ctx: PadicContext, exact: bool) -> Self {
        self.map(|x| x.to_context(ctx, exact).expect("same field"))
    }

    /// Lift to a higher-precision context (see [`PadicScalar::lift`]).
    pub fn lift(&self, ctx: PadicContext) -> Self {
        self.map(|x| x.lift(ctx))
    }

    pub fn reduce(&self, ctx: PadicContext) -> Self {
        self.map(|x| x.reduce(ctx))
    }

    fn echelon(&self) -> Result<Echelon, PadicError> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut prow = 0;
        for col in 0..m.cols {
            if prow == m.rows {
                break;
            }
            // pivot: least valuation in this column among remaining rows
            let mut best: Option<(usize, i64)> = None;
            for i in prow..m.rows {
                if let Some(v) = m.get(i, col).valuation_pi() {
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((i, v));
                    }
                }
            }
            let Some((pi, _)) = best else { continue };
            if pi != prow {
                for j in 0..m.cols {
                    m.data.swap(pi * m.cols + j, prow * m.cols + j);
                }
            }
            let inv = m.get(prow, col).inverse()?;
            for j in col..m.cols {
                let x = m.get(prow, j) * &inv;
                m.set(prow, j, x);
            }
            for i in 0..m.rows {
                if i == prow {
                    continue;
                }
                let f = m.get(i, col).clone();
                if f.is_exact_zero() {
                    continue;
                }
                for j in col..m.cols {
                    let pj = m.get(prow, j);
                    if pj.is_exact_zero() {
                        continue;
                    }
                    let x = m.get(i, j) - &(&f * pj);
                    m.set(i, j, x);
                }
            }
            pivots.push((prow, col));
            prow += 1;
        }
        Ok(Echelon { m, pivots })
    }

    /// Rank at the working precision.
    pub fn rank(&self) -> usize {
        self.echelon().map(|e| e.pivots.len()).unwrap_or(0)
    }

    /// Basis of the right kernel, one vector per free column.
    pub fn kernel(&self) -> Result<Vec<Vec<PadicScalar>>, PadicError> {
        let ctx = self.ctx_or_panic();
        let ech = self.echelon()?;
        let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivot_cols.contains(c)) {
            let mut v = vec![PadicScalar::zero(ctx); self.cols];
            v[free] = PadicScalar::one(ctx);
            for &(r, c) in &ech.pivots {
                v[c] = -ech.m.get(r, free);
            }
            basis.push(v);
        }
        Ok(basis)
    }

    /// Solve `self · X = B` for square invertible `self`.
    pub fn solve(&self, b: &Self) -> Result<Self, PadicError> {
        if !self.is_square() || b.rows != self.rows {
            return Err(PadicError::DimensionMismatch("solve".into()));
        }
        let n = self.rows;
        let aug = Self::from_fn(n, n + b.cols, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else {
                b.get(i, j - n).clone()
            }
        });
        let ech = aug.echelon()?;
        if ech.pivots.len() < n || ech.pivots.iter().any(|&(r, c)| r != c) {
            return Err(PadicError::SingularMatrix);
        }
        Ok(Self::from_fn(n, b.cols, |i, j| ech.m.get(i, n + j).clone()))
    }

    pub fn inverse(&self) -> Result<Self, PadicError> {
        let ctx = self.ctx_or_panic();
        self.solve(&Self::identity(ctx, self.rows))
    }

    /// Indices of a maximal set of linearly independent columns.
    pub fn independent_columns(&self) -> Vec<usize> {
        self.echelon().map(|e| e.pivots.iter().map(|&(_, c)| c).collect()).unwrap_or_default()
    }

    fn ctx_or_panic(&self) -> PadicContext {
        self.data.first().expect("nonempty matrix").context()
    }

    /// Whether every entry is zero to precision.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }
}

impl<R: fmt::Debug> fmt::Debug for Matrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<_> = (0..self.cols).map(|j| &self.data[i * self.cols + j]).collect();
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PadicContext {
        PadicContext::new(5, 1, 12).unwrap()
    }

    fn brute_det(m: &[Vec<i64>]) -> i64 {
        let n = m.len();
        if n == 0 {
            return 1;
        }
        let mut acc = 0;
        for j in 0..n {
            let minor: Vec<Vec<i64>> =
                m[1..].iter().map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect()).collect();
            let s = if j % 2 == 0 { 1 } else { -1 };
            acc += s * m[0][j] * brute_det(&minor);
        }
        acc
    }

    #[test]
    fn berkowitz_matches_principal_minors() {
        let c = ctx();
        let a = vec![vec![2, 1, 0, 3], vec![1, -1, 4, 0], vec![0, 2, 5, 1], vec![7, 0, 1, 1]];
        let m = Matrix::from_i64(c, &a);
        let coeffs = m.fredholm_coefficients(4, &PadicScalar::one(c));
        // c_k = (−1)^k Σ principal k-minors
        for k in 0..=4usize {
            let mut sum = 0i64;
            for mask in 0u32..16 {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let idx: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
                let minor: Vec<Vec<i64>> = idx.iter().map(|&i| idx.iter().map(|&j| a[i][j]).collect()).collect();
                sum += brute_det(&minor);
            }
            let want = if k % 2 == 0 { sum } else { -sum };
            assert_eq!(coeffs[k], PadicScalar::from_i64(c, want), "k = {k}");
        }
    }

    #[test]
    fn nilpotent_has_trivial_series() {
        let c = ctx();
        let m = Matrix::from_i64(c, &[vec![0, 1], vec![0, 0]]);
        let f = m.fredholm_coefficients(2, &PadicScalar::one(c));
        assert_eq!(f[0], PadicScalar::one(c));
        assert!(f[1].is_zero() && f[2].is_zero());
        let m = Matrix::from_i64(c, &[vec![0, 0], vec![1, 0]]);
        let f = m.fredholm_coefficients(2, &PadicScalar::one(c));
        assert!(f[1].is_zero() && f[2].is_zero());
    }

    #[test]
    fn kernel_and_inverse() {
        let c = ctx();
        let m = Matrix::from_i64(c, &[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 5]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel().unwrap();
        assert_eq!(k.len(), 1);
        for x in m.mul_vec(&k[0]) {
            assert!(x.is_zero());
        }
        let inv_in = Matrix::from_i64(c, &[vec![2, 1], vec![5, 3]]);
        let inv = inv_in.inverse().unwrap();
        assert_eq!(inv.checked_mul(&inv_in).unwrap(), Matrix::identity(c, 2));
    }
}
