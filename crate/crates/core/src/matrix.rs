//! Dense real matrices, a one-sided Jacobi SVD, and the truncated
//! reconstruction / residual-energy identities built on it.
//!
//! For an `n x m` matrix with SVD `X = U diag(λ) Vᵀ`, the best rank-`k`
//! approximation in Frobenius norm is `U_k diag(λ_1..λ_k) V_kᵀ`, and its
//! squared residual equals `Σ_{i>k} λ_i²`. [`truncate`] builds the former and
//! [`tail_energy`] evaluates the latter; the test-suite checks that the two
//! agree.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximum number of Jacobi sweeps before [`svd`] gives up.
pub const MAX_SWEEPS: usize = 100;

/// Dense `rows x cols` matrix stored in row-major order. All entries are finite.
#[derive(Clone, PartialEq)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> RealMatrix<T> {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "matrix must have at least one row and column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {m}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, m, data)
    }

    /// Builds a matrix entry by entry. Panics if `f` yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Square diagonal matrix.
    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { T::zero() })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// The first `n` rows.
    pub fn head_rows(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.rows {
            return Err(Error::Shape(format!(
                "cannot take {n} leading rows of a {}-row matrix",
                self.rows
            )));
        }
        Self::new(n, self.cols, self.data[..n * self.cols].to_vec())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![T::zero(); self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        Self::new(self.rows, rhs.cols, out)
    }

    /// `XᵀX`. Entries saturate to infinity if the products overflow.
    pub fn gram(&self) -> Self {
        let m = self.cols;
        let mut out = vec![T::zero(); m * m];
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..m {
                let ra = r[a];
                for b in a..m {
                    out[a * m + b] += ra * r[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                out[a * m + b] = out[b * m + a];
            }
        }
        Self {
            rows: m,
            cols: m,
            data: out,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Self::new(self.rows, self.cols, data)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
    }

    pub fn frobenius_sq(&self) -> T {
        frobenius_sq(self)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == T::zero())
    }
}

impl<T: fmt::Debug> fmt::Debug for RealMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RealMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols.max(1)) {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Sum of squared entries.
pub fn frobenius_sq<T: Scalar>(x: &RealMatrix<T>) -> T {
    x.data.iter().map(|&v| v * v).sum()
}

/// Thin singular value decomposition `X = U diag(λ) Vᵀ`.
///
/// With `p = min(n, m)`, `u` is `n x p`, `v` is `m x p`, and the `p` singular
/// values are sorted nonincreasing. For the usual tall case `p = m`.
#[derive(Clone, Debug)]
pub struct SvdResult<T> {
    u: RealMatrix<T>,
    singular_values: Vec<T>,
    v: RealMatrix<T>,
}

impl<T: Scalar> SvdResult<T> {
    /// Assembles a decomposition from its factors, checking shapes and the
    /// ordering of the singular values. Orthogonality is not checked.
    pub fn from_parts(u: RealMatrix<T>, singular_values: Vec<T>, v: RealMatrix<T>) -> Result<Self> {
        let p = singular_values.len();
        if u.cols() != p || v.cols() != p {
            return Err(Error::Shape(format!(
                "{p} singular values but U has {} and V has {} columns",
                u.cols(),
                v.cols()
            )));
        }
        if singular_values
            .iter()
            .any(|s| !s.is_finite() || *s < T::zero())
        {
            return Err(Error::domain(
                "singular values must be finite and nonnegative",
            ));
        }
        if singular_values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::domain("singular values must be nonincreasing"));
        }
        Ok(Self {
            u,
            singular_values,
            v,
        })
    }

    pub fn u(&self) -> &RealMatrix<T> {
        &self.u
    }

    pub fn v(&self) -> &RealMatrix<T> {
        &self.v
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    /// Number of singular values, `min(n, m)`.
    pub fn rank_capacity(&self) -> usize {
        self.singular_values.len()
    }

    /// The leading `k` columns of `V`, as an `m x k` matrix.
    pub fn loadings(&self, k: usize) -> Result<RealMatrix<T>> {
        check_k(k, self.rank_capacity())?;
        if k == 0 {
            return Err(Error::domain("loadings need at least one column"));
        }
        Ok(RealMatrix::from_fn(self.v.rows(), k, |i, j| {
            self.v.get(i, j)
        }))
    }
}

fn check_k(k: usize, p: usize) -> Result<()> {
    if k > p {
        Err(Error::domain(format!("k = {k} outside 0..={p}")))
    } else {
        Ok(())
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
///
/// Wide inputs are decomposed through their transpose. Singular vectors that
/// belong to exactly-zero singular values are completed to an orthonormal set.
pub fn svd<T: Scalar>(x: &RealMatrix<T>) -> Result<SvdResult<T>> {
    if x.rows() < x.cols() {
        let t = svd_tall(&x.transpose())?;
        return Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    svd_tall(x)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn svd_tall<T: Scalar>(x: &RealMatrix<T>) -> Result<SvdResult<T>> {
    let (n, m) = (x.rows(), x.cols());
    if !x.frobenius_sq().is_finite() {
        return Err(Error::Domain(
            "squared entries overflow the scalar type".into(),
        ));
    }
    // column-major working copies
    let mut a: Vec<Vec<T>> = (0..m).map(|j| x.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..m)
        .map(|j| {
            (0..m)
                .map(|i| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();

    let tol = T::epsilon() * T::from_count(n).sqrt();
    let mut converged = m < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..m - 1 {
            for q in p + 1..m {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Convergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<T> = a.iter().map(|col| dot(col, col).sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    // stable: ties keep the computed column order
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let largest = norms[order[0]];
    let cutoff = largest * T::epsilon() * T::epsilon();
    let mut u_cols: Vec<Option<Vec<T>>> = order
        .iter()
        .map(|&j| {
            let s = norms[j];
            if s > T::zero() && s > cutoff {
                Some(a[j].iter().map(|&e| e / s).collect())
            } else {
                None
            }
        })
        .collect();
    complete_orthonormal(&mut u_cols, n);

    let singular_values: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let u_cols: Vec<Vec<T>> = u_cols.into_iter().map(|c| c.expect("completed")).collect();
    let u = RealMatrix::from_fn(n, m, |i, j| u_cols[j][i]);
    let v = RealMatrix::from_fn(m, m, |i, j| v[order[j]][i]);
    Ok(SvdResult {
        u,
        singular_values,
        v,
    })
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills the `None` slots with unit vectors orthogonal to every other column,
/// drawing candidates from the standard basis.
fn complete_orthonormal<T: Scalar>(cols: &mut [Option<Vec<T>>], n: usize) {
    let mut next_basis = 0;
    for slot in 0..cols.len() {
        if cols[slot].is_some() {
            continue;
        }
        while next_basis < n {
            let mut cand: Vec<T> = (0..n)
                .map(|i| if i == next_basis { T::one() } else { T::zero() })
                .collect();
            next_basis += 1;
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let proj = dot(&cand, other);
                    for (c, &o) in cand.iter_mut().zip(other) {
                        *c -= proj * o;
                    }
                }
            }
            let norm = dot(&cand, &cand).sqrt();
            if norm > T::lit(0.5) {
                cols[slot] = Some(cand.into_iter().map(|c| c / norm).collect());
                break;
            }
        }
    }
}

/// Rank-`k` reconstruction `U_k diag(λ_1..λ_k) V_kᵀ`.
///
/// When `λ_k = λ_{k+1}` the result depends on the computed column order; the
/// residual energy does not.
pub fn truncate<T: Scalar>(s: &SvdResult<T>, k: usize) -> Result<RealMatrix<T>> {
    check_k(k, s.rank_capacity())?;
    let (n, m) = (s.u.rows(), s.v.rows());
    Ok(RealMatrix::from_fn(n, m, |i, j| {
        (0..k)
            .map(|l| s.u.get(i, l) * s.singular_values[l] * s.v.get(j, l))
            .sum()
    }))
}

/// Residual energy of the rank-`k` reconstruction, `Σ_{i>k} λ_i²`.
pub fn tail_energy<T: Scalar>(s: &SvdResult<T>, k: usize) -> Result<T> {
    check_k(k, s.rank_capacity())?;
    Ok(s.singular_values[k..].iter().map(|&l| l * l).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orth_err(q: &RealMatrix<f64>) -> f64 {
        let g = q.gram();
        g.sub(&RealMatrix::identity(g.rows())).unwrap().max_abs()
    }

    #[test]
    fn diagonal_singular_values() {
        let s = svd(&RealMatrix::<f64>::from_diag(&[3.0, 2.0])).unwrap();
        assert!((s.singular_values()[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values()[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn permutation_has_unit_singular_values() {
        let x = RealMatrix::<f64>::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = svd(&x).unwrap();
        for &l in s.singular_values() {
            assert!((l - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unsorted_diagonal_is_sorted() {
        let s = svd(&RealMatrix::<f64>::from_diag(&[1.0, 5.0, 3.0])).unwrap();
        assert_eq!(s.singular_values(), &[5.0, 3.0, 1.0]);
    }

    #[test]
    fn rank_deficient_still_orthonormal() {
        let x = RealMatrix::from_rows(&[
            [1.0, 2.0, 3.0],
            [2.0, 4.0, 6.0],
            [0.0, 0.0, 0.0],
            [1.0, 2.0, 3.0],
        ])
        .unwrap();
        let s = svd(&x).unwrap();
        assert!(orth_err(s.u()) <= 1e-10);
        assert!(orth_err(s.v()) <= 1e-10);
        let back = truncate(&s, 3).unwrap();
        assert!(back.sub(&x).unwrap().frobenius_sq().sqrt() <= 1e-12);
        assert!(s.singular_values()[1] <= 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let s = svd(&RealMatrix::<f64>::zeros(4, 2)).unwrap();
        assert_eq!(s.singular_values(), &[0.0, 0.0]);
        assert!(orth_err(s.u()) <= 1e-12);
    }

    #[test]
    fn wide_input_goes_through_transpose() {
        let x = RealMatrix::<f64>::from_rows(&[[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]]).unwrap();
        let s = svd(&x).unwrap();
        assert_eq!(s.u().rows(), 2);
        assert_eq!(s.v().rows(), 3);
        assert_eq!(s.rank_capacity(), 2);
        assert!((s.singular_values()[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values()[1] - 5f64.sqrt()).abs() < 1e-14);
        let back = truncate(&s, 2).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn truncate_endpoints() {
        let d = RealMatrix::<f64>::from_diag(&[3.0, 2.0, 1.0]);
        let s = svd(&d).unwrap();
        assert!(truncate(&s, 3).unwrap().sub(&d).unwrap().max_abs() < 1e-14);
        assert!(truncate(&s, 0).unwrap().is_zero());
        assert!(matches!(truncate(&s, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn tail_energy_values() {
        let s = svd(&RealMatrix::<f64>::from_diag(&[3.0, 2.0, 1.0])).unwrap();
        assert!((tail_energy(&s, 2).unwrap() - 1.0).abs() < 1e-13);
        assert!((tail_energy(&s, 0).unwrap() - 14.0).abs() < 1e-13);
        assert_eq!(tail_energy(&s, 3).unwrap(), 0.0);
        assert!(tail_energy(&s, 4).is_err());
    }

    #[test]
    fn frobenius_values() {
        assert_eq!(frobenius_sq(&RealMatrix::<f64>::zeros(3, 3)), 0.0);
        assert_eq!(frobenius_sq(&RealMatrix::<f64>::identity(3)), 3.0);
        let x = RealMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_sq(&x), 30.0);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            RealMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            RealMatrix::new(2, 2, vec![1.0f64]),
            Err(Error::Shape(_))
        ));
        assert!(RealMatrix::<f64>::new(0, 2, vec![]).is_err());
        assert!(RealMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn f32_svd_reconstructs() {
        let x = RealMatrix::from_rows(&[[2.0f32, 1.0], [1.0, 3.0], [0.5, -1.0]]).unwrap();
        let s = svd(&x).unwrap();
        let back = truncate(&s, 2).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() < 1e-5);
    }

    #[test]
    fn from_parts_validates() {
        let u = RealMatrix::<f64>::identity(2);
        assert!(SvdResult::from_parts(u.clone(), vec![1.0, 2.0], u.clone()).is_err());
        assert!(SvdResult::from_parts(u.clone(), vec![1.0], u.clone()).is_err());
        assert!(SvdResult::from_parts(u.clone(), vec![2.0, -1.0], u.clone()).is_err());
        assert!(SvdResult::from_parts(u.clone(), vec![2.0, 1.0], u).is_ok());
    }
}
