//! Dense row-major kernels: cyclic Jacobi symmetric eigensolver, pivoted
//! Gaussian elimination and compensated summation.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("non-finite entry at ({row}, {col}): {value}")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("matrix is not symmetric (max deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    NonSymmetric { deviation: f64, tolerance: f64 },
    #[error("matrix is singular (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
}

/// Dense real matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting NaN and infinities.
    pub fn from_row_major(
        n_rows: usize,
        n_cols: usize,
        entries: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        if entries.len() != n_rows * n_cols {
            return Err(LinalgError::ShapeMismatch {
                expected: format!("{} entries", n_rows * n_cols),
                actual: format!("{} entries", entries.len()),
            });
        }
        if let Some((idx, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: idx / n_cols.max(1),
                col: idx % n_cols.max(1),
                value,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(LinalgError::ShapeMismatch {
                expected: format!("rows of length {n_cols}"),
                actual: format!("row of length {}", bad.len()),
            });
        }
        Self::from_row_major(n_rows, n_cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.n_cols != rhs.n_rows {
            return Err(LinalgError::ShapeMismatch {
                expected: format!("{} rows on the right", self.n_cols),
                actual: format!("{} rows", rhs.n_rows),
            });
        }
        let mut out = DenseMatrix::zeros(self.n_rows, rhs.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.n_cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::ShapeMismatch {
                expected: format!("vector of length {}", self.n_cols),
                actual: format!("length {}", x.len()),
            });
        }
        Ok((0..self.n_rows)
            .map(|i| kahan_sum(self.row(i).iter().zip(x).map(|(a, b)| a * b)))
            .collect())
    }

    /// Largest |S(i,j) − S(j,i)|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n_rows {
            for j in (i + 1)..self.n_cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.n_cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.n_rows, self.n_cols)?;
        for i in 0..self.n_rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: DenseMatrix,
}

impl SymmetricEigen {
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.eigenvectors.n_rows())
            .map(|i| self.eigenvectors[(i, k)])
            .collect()
    }

    /// Q·diag(λ)·Qᵀ.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = kahan_sum((0..n).map(|k| {
                    self.eigenvectors[(i, k)] * self.eigenvalues[k] * self.eigenvectors[(j, k)]
                }));
            }
        }
        out
    }
}

const SYMMETRY_RTOL: f64 = 1e-12;
const JACOBI_RTOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps visit pairs (p, q), p < q, in row-major order and stop once the
/// off-diagonal Frobenius norm drops to `1e-13·‖S‖_F`.
pub fn symmetric_eigen(s: &DenseMatrix) -> Result<SymmetricEigen, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::ShapeMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", s.n_rows(), s.n_cols()),
        });
    }
    for i in 0..s.n_rows() {
        for j in 0..s.n_cols() {
            let value = s[(i, j)];
            if !value.is_finite() {
                return Err(LinalgError::NonFinite { row: i, col: j, value });
            }
        }
    }
    let scale = s.max_abs().max(f64::MIN_POSITIVE);
    let tolerance = SYMMETRY_RTOL * scale.max(1.0);
    let deviation = s.asymmetry();
    if deviation > tolerance {
        return Err(LinalgError::NonSymmetric { deviation, tolerance });
    }

    let n = s.n_rows();
    let mut a = s.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let target = JACOBI_RTOL * a.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn, t);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&k| a[(k, k)]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, col)] = v[(row, k)];
        }
    }
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.n_rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = a.n_rows();
    let apq = a[(p, q)];
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp;
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

const SINGULAR_RTOL: f64 = 1e-13;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// Ties between equal pivot magnitudes go to the lowest row index. A pivot
/// below `1e-13` times its row's original max-abs entry is reported as
/// singular.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.n_rows();
    if !a.is_square() || b.len() != n {
        return Err(LinalgError::ShapeMismatch {
            expected: format!("square matrix and rhs of length {}", a.n_rows()),
            actual: format!("{}x{} with rhs {}", a.n_rows(), a.n_cols(), b.len()),
        });
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let mut row_scale: Vec<f64> = (0..n)
        .map(|i| m.row(i).iter().fold(0.0_f64, |s, v| s.max(v.abs())))
        .collect();

    for col in 0..n {
        let mut pivot_row = col;
        let mut best = m[(col, col)].abs();
        for r in (col + 1)..n {
            let cand = m[(r, col)].abs();
            if cand > best {
                best = cand;
                pivot_row = r;
            }
        }
        let scale = row_scale[pivot_row];
        if best == 0.0 || best <= SINGULAR_RTOL * scale {
            return Err(LinalgError::Singular { col, pivot: best });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot_row, j)];
                m[(pivot_row, j)] = tmp;
            }
            rhs.swap(col, pivot_row);
            row_scale.swap(col, pivot_row);
        }
        let pivot = m[(col, col)];
        for r in (col + 1)..n {
            let factor = m[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[(r, col)] = 0.0;
            for j in (col + 1)..n {
                m[(r, j)] -= factor * m[(col, j)];
            }
            rhs[r] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail = kahan_sum(((i + 1)..n).map(|j| m[(i, j)] * x[j]));
        x[i] = (rhs[i] - tail) / m[(i, i)];
    }
    Ok(x)
}

/// Neumaier-compensated summation.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    #[test]
    fn identity_spectrum() {
        let e = symmetric_eigen(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn swap_matrix_spectrum() {
        let s = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = symmetric_eigen(&s).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    /// Roots of det(S − λI) located by brute-force grid scan for local
    /// minima of |det|, which also catches even-multiplicity roots.
    fn char_poly_roots_3x3(s: &DenseMatrix) -> Vec<f64> {
        let det = |lam: f64| {
            let m = |i: usize, j: usize| s[(i, j)] - if i == j { lam } else { 0.0 };
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        };
        let (lo, steps) = (-4.0, 80_000);
        let h = 1e-4;
        let vals: Vec<f64> = (0..=steps).map(|k| det(lo + k as f64 * h).abs()).collect();
        (1..steps)
            .filter(|&k| vals[k] <= vals[k - 1] && vals[k] < vals[k + 1] && vals[k] < 1e-6)
            .map(|k| lo + k as f64 * h)
            .collect()
    }

    #[test]
    fn circulant_spectrum_matches_characteristic_polynomial() {
        let s = DenseMatrix::from_rows(&[
            vec![1.0, -0.5, -0.5],
            vec![-0.5, 1.0, -0.5],
            vec![-0.5, -0.5, 1.0],
        ])
        .unwrap();
        let roots = char_poly_roots_3x3(&s);
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!(roots[0].abs() < 1e-3 && (roots[1] - 1.5).abs() < 1e-3);
        let e = symmetric_eigen(&s).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[2], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let s = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.1, 0.0]]).unwrap();
        assert!(matches!(
            symmetric_eigen(&s),
            Err(LinalgError::NonSymmetric { .. })
        ));
        assert!(matches!(
            DenseMatrix::from_row_major(1, 2, vec![0.0, f64::NAN]),
            Err(LinalgError::NonFinite { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn reconstruction_and_orthonormality_up_to_200() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 2, 3, 5, 8, 17, 40, 200] {
            let s = random_symmetric(n, &mut rng);
            let e = symmetric_eigen(&s).unwrap();
            let scale = s.max_abs().max(1.0);
            let rec = e.reconstruct();
            let mut worst = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((rec[(i, j)] - s[(i, j)]).abs());
                }
            }
            assert!(worst <= 1e-10 * scale, "n={n}: reconstruction {worst:e}");
            let qtq = e.eigenvectors.transpose().matmul(&e.eigenvectors).unwrap();
            let mut ortho = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    ortho = ortho.max((qtq[(i, j)] - target).abs());
                }
            }
            assert!(ortho <= 1e-10, "n={n}: orthonormality {ortho:e}");
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn solve_examples() {
        let x = solve_linear(&DenseMatrix::identity(2), &[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![3.0, 4.0]);
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(solve_linear(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let x = solve_linear(&a, &[2.0, 0.0]).unwrap();
        // substitution: x0 = x1 from row two, then 2·x0 = 2
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn solve_detects_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_linear(&a, &[1.0, 1.0]),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn solve_residual_on_well_conditioned_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let n = 1 + trial % 12;
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = rng.gen_range(-1.0..1.0);
                }
                // diagonal dominance keeps the condition number modest
                a[(i, i)] += n as f64 * rng.gen_range(1.0..2.0);
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let x = solve_linear(&a, &b).unwrap();
            let ax = a.mul_vec(&x).unwrap();
            let b_inf = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let res = ax
                .iter()
                .zip(&b)
                .fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
            assert!(res <= 1e-9 * (1.0 + b_inf));
        }
    }

    #[test]
    fn kahan_examples() {
        assert_eq!(kahan_sum(std::iter::empty()), 0.0);
        assert_eq!(kahan_sum([1.0, 1e-16, -1.0]), 1e-16);
        // 10^6 · 0.1 in exact rational arithmetic is 10^5; the f64 nearest
        // to 0.1 exceeds 1/10 by ~5.55e-18, contributing ~5.55e-12 in total.
        let s = kahan_sum(std::iter::repeat(0.1).take(1_000_000));
        assert!((s - 1e5).abs() <= 1e-9, "{s}");
    }
}
