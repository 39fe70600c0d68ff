//! Compressed-row sparse matrices and the direct solver.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{LuRef, LuSymbolicParams, NumericLu, SymbolicLu, factorize_symbolic_lu};
use faer::sparse::linalg::{LuError, SupernodalThreshold};
use faer::sparse::{SparseColMat, Triplet};
use faer::traits::ComplexField;
use faer::{Conj, Mat, Par, fx128};

use crate::{Error, Result};

/// Compressed-row storage with sorted, duplicate-free column indices.
///
/// Each entry is kept as an unevaluated sum `value + tail` of two doubles,
/// so that summing element contributions of very different magnitude
/// loses nothing. `value` alone is the entry rounded to double.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    tails: Vec<f64>,
}

/// Error-free `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

impl SparseMatrix {
    /// Sums duplicate entries. The summation order for a given (row, col)
    /// follows the order of `triplets`, so equal input gives equal bits.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let split: Vec<_> = triplets.iter().map(|&(r, c, v)| (r, c, v, 0.0)).collect();
        Self::from_split_triplets(nrows, ncols, &split)
    }

    /// Like [`from_triplets`](Self::from_triplets) for entries given as
    /// `value + tail`; duplicates are summed in double-double arithmetic.
    pub fn from_split_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut slot = vec![0usize; triplets.len()];
        for (k, &(r, _, _, _)) in triplets.iter().enumerate() {
            slot[cursor[r]] = k;
            cursor[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut tails = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        let mut flush = |acc: Option<(usize, f64, f64)>, col_idx: &mut Vec<usize>| {
            if let Some((c, s, e)) = acc {
                let (h, l) = two_sum(s, e);
                col_idx.push(c);
                values.push(h);
                tails.push(l);
            }
        };
        for r in 0..nrows {
            order.clear();
            order.extend_from_slice(&slot[counts[r]..counts[r + 1]]);
            // stable: duplicates keep input order
            order.sort_by_key(|&k| triplets[k].1);
            let mut acc: Option<(usize, f64, f64)> = None;
            for &k in &order {
                let (_, c, v, t) = triplets[k];
                acc = match acc {
                    Some((ac, s, e)) if ac == c => {
                        let (s, err) = two_sum(s, v);
                        Some((c, s, e + err + t))
                    }
                    other => {
                        flush(other, &mut col_idx);
                        Some((c, v, t))
                    }
                };
            }
            flush(acc, &mut col_idx);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            tails,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), ncols, &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// Row entries as `(column, value, tail)`.
    pub fn row_split(&self, r: usize) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (lo..hi).map(|k| (self.col_idx[k], self.values[k], self.tails[k]))
    }

    /// The submatrix on `rows`, with column `c` moved to `cols[c]` or
    /// dropped when `None`. Tails are kept.
    pub fn select(&self, rows: &[usize], cols: &[Option<usize>], ncols: usize) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for (i, &r) in rows.iter().enumerate() {
            for (c, v, e) in self.row_split(r) {
                if let Some(j) = cols[c] {
                    t.push((i, j, v, e));
                }
            }
        }
        Self::from_split_triplets(rows.len(), ncols, &t)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row_split(r).map(|(c, v, e)| (v + e) * x[c]).sum()).collect()
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v, e) in self.row_split(r) {
                t.push((c, r, v, e));
            }
        }
        Self::from_split_triplets(self.ncols, self.nrows, &t)
    }

    /// `max |A - Aᵀ|` entrywise.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let mut m = 0.0f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m = m.max((v - self.get(c, r)).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Converts to faer storage with entries `d[r] · a[r][c] · d[c]`.
    fn to_faer_scaled<T: Scalar>(&self, d: &[f64]) -> Result<SparseColMat<usize, T>> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v, e) in self.row_split(r) {
                let s = d[r] * d[c];
                t.push(Triplet::new(r, c, T::from_pair(s * v, s * e)));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::Dimension(format!("sparse matrix construction failed: {e:?}")))
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `1/√max_c |a_rc|` per row, rounded to a power of two so that scaling
/// is exact; `None` for a row without nonzeros.
pub fn equilibration(a: &SparseMatrix) -> Vec<Option<f64>> {
    (0..a.nrows())
        .map(|r| {
            let big = a.row(r).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            (big > 0.0).then(|| (-(big.log2() / 2.0).round()).exp2())
        })
        .collect()
}

/// Residual in the equilibrated scaling, `‖D(Ax − b)‖∞ / ‖Db‖∞`
/// (absolute when `b = 0`), with `D` from [`equilibration`]. Insensitive
/// to the `1/|K|` spread of H(div) rows on strongly graded meshes.
pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = equilibration(a).into_iter().map(|v| v.unwrap_or(1.0)).collect();
    scaled_residual(a, &d, x, b)
}

/// `b − Ax` with compensated products and sums, accurate to about twice
/// working precision.
fn compensated_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|r| {
            let (mut s, mut c) = (b[r], 0.0);
            for (j, v, e) in a.row_split(r) {
                let p = -v * x[j];
                let pe = (-v).mul_add(x[j], -p);
                let (t, err) = two_sum(s, p);
                c += err + pe - e * x[j];
                s = t;
            }
            s + c
        })
        .collect()
}

fn scaled_residual(a: &SparseMatrix, d: &[f64], x: &[f64], b: &[f64]) -> f64 {
    let r = compensated_residual(a, x, b).iter().zip(d).fold(0.0f64, |m, (p, s)| m.max((s * p).abs()));
    let nb = b.iter().zip(d).fold(0.0f64, |m, (q, s)| m.max((s * q).abs()));
    if nb > 0.0 { r / nb } else { r }
}

/// Normwise backward error in the equilibrated scaling,
/// `‖D(b − Ax)‖∞ / ‖D(|A||x| + |b|)‖∞`. Unlike [`relative_residual`] it
/// is not bounded below by the rounding of `x` itself.
pub fn backward_error(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = equilibration(a).into_iter().map(|v| v.unwrap_or(1.0)).collect();
    scaled_backward_error(a, &d, x, b)
}

fn scaled_backward_error(a: &SparseMatrix, d: &[f64], x: &[f64], b: &[f64]) -> f64 {
    let r = compensated_residual(a, x, b).iter().zip(d).fold(0.0f64, |m, (p, s)| m.max((s * p).abs()));
    let scale = (0..a.nrows())
        .map(|i| d[i] * (a.row(i).map(|(c, v)| (v * x[c]).abs()).sum::<f64>() + b[i].abs()))
        .fold(0.0f64, f64::max);
    if scale > 0.0 { r / scale } else { r }
}

/// Largest backward error [`solve`] accepts.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

const MAX_REFINEMENT: usize = 10;

const SLOW_CONTRACTION: f64 = 0.5;

/// Refinement counts as converged once the last correction is below this
/// fraction of the solution, in the equilibrated variables.
const CONVERGED_CORRECTION: f64 = 1e-13;

trait Scalar: ComplexField + Copy {
    fn from_f64(v: f64) -> Self;
    /// `hi + lo` with `|lo| <= ulp(hi) / 2`.
    fn from_pair(hi: f64, lo: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_pair(hi: f64, _: f64) -> Self {
        hi
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for fx128 {
    fn from_f64(v: f64) -> Self {
        fx128::from(v)
    }
    fn from_pair(hi: f64, lo: f64) -> Self {
        fx128 { 0: hi, 1: lo }
    }
    fn to_f64(self) -> f64 {
        self.0 + self.1
    }
}

/// Sparse LU of the equilibrated matrix `DAD` in arithmetic `T`.
struct Factor<'d, T: Scalar> {
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, T>,
    d: &'d [f64],
}

impl<'d, T: Scalar> Factor<'d, T> {
    /// faer's supernodal kernels only support native floats, so extended
    /// precision goes through the simplicial factorization.
    fn new(a: &SparseMatrix, d: &'d [f64], threshold: SupernodalThreshold) -> Result<Self> {
        let m = a.to_faer_scaled::<T>(d)?;
        let params = LuSymbolicParams {
            supernodal_flop_ratio_threshold: threshold,
            ..Default::default()
        };
        let symbolic = factorize_symbolic_lu(m.symbolic(), params)
            .map_err(|e| Error::Dimension(format!("sparse LU analysis failed: {e:?}")))?;
        let mut numeric = NumericLu::new();
        let mut buf = MemBuffer::new(symbolic.factorize_numeric_lu_scratch::<T>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_lu(&mut numeric, m.as_ref(), Par::Seq, MemStack::new(&mut buf), Default::default())
            .map_err(|e| match e {
                LuError::SymbolicSingular { index } => Error::SingularPivot { pivot: index },
                other => Error::Dimension(format!("sparse LU failed: {other:?}")),
            })?;
        Ok(Self { symbolic, numeric, d })
    }

    /// `x = A⁻¹ rhs`, returned in the unscaled variables.
    fn apply(&self, rhs: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut m = Mat::<T>::from_fn(rhs.len(), 1, |i, _| T::from_f64(d[i] * rhs[i]));
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<T>(1, Par::Seq));
        LuRef::new_unchecked(&self.symbolic, &self.numeric).solve_in_place_with_conj(
            Conj::No,
            m.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        (0..rhs.len()).map(|i| d[i] * m[(i, 0)].to_f64()).collect()
    }

    /// Solves and refines with compensated residuals; reports whether the
    /// corrections died out.
    fn refine(&self, a: &SparseMatrix, b: &[f64]) -> (Vec<f64>, bool) {
        let d = self.d;
        let scaled_max = |v: &[f64]| v.iter().zip(d).fold(0.0f64, |m, (x, s)| m.max((x / s).abs()));
        let mut x = self.apply(b);
        let mut last = f64::INFINITY;
        for _ in 0..MAX_REFINEMENT {
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
            let dx = self.apply(&compensated_residual(a, &x, b));
            let size = scaled_max(&dx) / scaled_max(&x).max(f64::MIN_POSITIVE);
            // slow contraction means the factorization is too inaccurate
            if !(size < SLOW_CONTRACTION * last) {
                break;
            }
            for (p, q) in x.iter_mut().zip(&dx) {
                *p += q;
            }
            last = size;
            if size <= CONVERGED_CORRECTION {
                return (x, true);
            }
        }
        (x, false)
    }
}

/// Sparse LU with partial pivoting on the symmetrically equilibrated
/// matrix, followed by iterative refinement with compensated residuals.
/// When refinement stalls (strongly graded meshes) the factorization is
/// repeated in double-double arithmetic. Fails when the final residual
/// backward error misses [`SOLVE_TOLERANCE`].
pub fn solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "solve needs a square system, got {}x{} with rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut col_seen = vec![false; n];
    for r in 0..n {
        for (c, v) in a.row(r) {
            if v != 0.0 {
                col_seen[c] = true;
            }
        }
    }
    let mut d = Vec::with_capacity(n);
    for (r, s) in equilibration(a).into_iter().enumerate() {
        d.push(s.ok_or(Error::SingularPivot { pivot: r })?);
    }
    if let Some(c) = col_seen.iter().position(|s| !s) {
        return Err(Error::SingularPivot { pivot: c });
    }

    // sequential kernels keep the factorization bitwise reproducible
    faer::set_global_parallelism(Par::Seq);
    let fast = match Factor::<f64>::new(a, &d, SupernodalThreshold::AUTO) {
        Ok(f) => Some(f.refine(a, b)),
        Err(Error::SingularPivot { .. }) => None,
        Err(e) => return Err(e),
    };
    let x = match fast {
        Some((x, true)) => x,
        // the double factorization is singular or too inaccurate to drive
        // refinement; repeat in double-double arithmetic
        _ => Factor::<fx128>::new(a, &d, SupernodalThreshold::FORCE_SIMPLICIAL)?.refine(a, b).0,
    };
    let res = scaled_backward_error(a, &d, &x, b);
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularPivot { pivot: i });
    }
    if res > SOLVE_TOLERANCE {
        return Err(Error::InaccurateSolve { backward_error: res });
    }
    Ok(x)
}

/// Dense Gaussian elimination with partial pivoting, for small local systems.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("dense_solve needs a square system".into()));
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        if a[p][k].abs() <= 1e-14 * scale {
            return Err(Error::SingularPivot { pivot: k });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gauss–Jordan with full pivoting; independent of `dense_solve`.
    fn gauss_jordan(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &v)| r.iter().copied().chain([v]).collect()).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pi, mut pj) = (k, k);
            for i in k..n {
                for j in k..n {
                    if m[i][j].abs() > m[pi][pj].abs() {
                        (pi, pj) = (i, j);
                    }
                }
            }
            m.swap(k, pi);
            for row in m.iter_mut() {
                row.swap(k, pj);
            }
            perm.swap(k, pj);
            let piv = m[k][k];
            for v in m[k].iter_mut() {
                *v /= piv;
            }
            for i in 0..n {
                if i != k {
                    let f = m[i][k];
                    for j in 0..=n {
                        m[i][j] -= f * m[k][j];
                    }
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[perm[k]] = m[k][n];
        }
        x
    }

    #[test]
    fn triplets_are_summed_and_sorted() {
        let a = SparseMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 4.0)]);
        assert_eq!(a.row_ptr(), &[0, 1, 3]);
        assert_eq!(a.col_idx(), &[1, 0, 2]);
        assert_eq!(a.values(), &[2.0, 3.0, 5.0]);
        assert_eq!(a.get(1, 2), 5.0);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn transpose_and_asymmetry() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.transpose(), SparseMatrix::from_dense(&[vec![1.0, 3.0], vec![2.0, 4.0]]));
        assert_eq!(a.max_asymmetry(), 1.0);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 7.0]);
    }

    #[test]
    fn identity_solve() {
        let b = vec![1.5, -2.0, 3.25, 0.0];
        assert_eq!(solve(&SparseMatrix::identity(4), &b).unwrap(), b);
    }

    #[test]
    fn random_system_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5;
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            row[i] += 4.0;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let want = gauss_jordan(&a, &b);
        let got = solve(&SparseMatrix::from_dense(&a), &b).unwrap();
        let dense = dense_solve(a.clone(), b.clone()).unwrap();
        for i in 0..n {
            assert!((got[i] - want[i]).abs() <= 1e-12);
            assert!((dense[i] - want[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (2, 2, 1.0), (0, 1, 1.0)]);
        match solve(&a, &[1.0, 1.0, 1.0]) {
            Err(Error::SingularPivot { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected singular pivot, got {other:?}"),
        }
    }

    #[test]
    fn rank_deficient_is_an_error() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve(&a, &[1.0, 1.0]).is_err());
        assert!(matches!(
            dense_solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]),
            Err(Error::SingularPivot { .. })
        ));
    }

    #[test]
    fn backward_error_ignores_cancellation_floor() {
        // |A||x| is 1e8 times |b|, so a one-ulp error in x shows up as a
        // 1e-8 relative residual but a tiny backward error
        let a = SparseMatrix::from_dense(&[vec![1.0, -1.0], vec![1.0, -1.0 + 1e-8]]);
        let b = a.matvec(&[1.0, 1.0]);
        let x = [1.0 + f64::EPSILON, 1.0];
        assert!(relative_residual(&a, &x, &b) > 1e-9);
        assert!(backward_error(&a, &x, &b) < 1e-15);
        assert_eq!(backward_error(&a, &[1.0, 1.0], &b), 0.0);
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.01));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.3));
            }
            t.push((i, (i * 7) % n, 0.1));
        }
        let a = SparseMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x1 = solve(&a, &b).unwrap();
        let x2 = solve(&a, &b).unwrap();
        assert_eq!(x1, x2);
        assert!(relative_residual(&a, &x1, &b) <= 1e-12);
    }

    #[test]
    fn duplicate_sums_keep_small_contributions() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1e17), (0, 0, 1.0), (0, 0, -1e17)]);
        assert_eq!(a.get(0, 0), 1.0);
        let b = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1e17), (0, 0, 1.0)]);
        let (_, v, e) = b.row_split(0).next().unwrap();
        assert_eq!((v, e), (1e17, 1.0));
        assert_eq!(b.matvec(&[1.0]), vec![1e17 + 1.0]);
    }

    #[test]
    fn select_keeps_tails() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1e17), (0, 0, 1.0), (1, 1, 2.0), (0, 1, 3.0)]);
        let s = a.select(&[0], &[Some(0), None], 1);
        assert_eq!(s.row_split(0).collect::<Vec<_>>(), vec![(0, 1e17, 1.0)]);
    }

    #[test]
    fn extended_precision_resolves_hidden_mass() {
        // 1e17·[[1,1],[1,1]] + I: the rounded matrix is singular, the exact
        // one maps (1, −1) to itself
        let big = 1e17;
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, big), (0, 0, 1.0), (0, 1, big), (1, 0, big), (1, 1, big), (1, 1, 1.0)],
        );
        let x = solve(&a, &[1.0, -1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12, "{x:?}");
    }
}
