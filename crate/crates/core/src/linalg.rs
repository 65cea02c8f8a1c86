//! Small dense factorizations for `ln det(I − A)`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {len} entries for dimension {dim}")]
    Shape { len: usize, dim: usize },
    #[error("non-contractive: det(I - A) = {det_sign}·exp({log_abs}) at pivot {pivot}")]
    NonContractive {
        pivot: usize,
        det_sign: f64,
        log_abs: f64,
    },
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != dim * dim {
            return Err(LinalgError::Shape {
                len: data.len(),
                dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Symmetric permutation `P A Pᵀ` with `out[i][j] = A[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = perm.len();
        let mut out = Self::zeros(n);
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                out.data[i * n + j] = self.get(pi, pj);
            }
        }
        out
    }
}

/// `ln |det M|` and the sign of `det M` by LU with partial pivoting.
pub fn lu_log_det(m: &DenseMatrix) -> (f64, f64) {
    let n = m.dim;
    let mut a = m.data.clone();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            sign = -sign;
        }
        let d = a[k * n + k];
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            if f == 0.0 {
                continue;
            }
            a[i * n + k] = f;
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    (log_abs, sign)
}

/// Cholesky factorization of the symmetric matrix `I − A`, returning
/// `ln det` of every leading principal block: entry `k` is `ln det` of the
/// top-left `(k+1)×(k+1)` block.
///
/// Fails with [`LinalgError::NonContractive`] when `I − A` is not positive
/// definite, i.e. when `A` has an eigenvalue `≥ 1`.
pub fn cholesky_prefix_log_dets(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = a.dim;
    let mut l = vec![0.0; n * n];
    let mut prefix = Vec::with_capacity(n);
    let mut acc = 0.0;
    for j in 0..n {
        let mut d = 1.0 - a.get(j, j);
        let lj = &l[j * n..j * n + j];
        d -= lj.iter().map(|v| v * v).sum::<f64>();
        if !(d > 0.0) {
            return Err(LinalgError::NonContractive {
                pivot: j,
                det_sign: if d == 0.0 { 0.0 } else { -1.0 },
                log_abs: f64::NAN,
            });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        acc += d.ln();
        prefix.push(acc);
        for i in j + 1..n {
            let (head, tail) = l.split_at_mut(i * n);
            let lj = &head[j * n..j * n + j];
            let li = &tail[..j];
            let dot: f64 = li.iter().zip(lj).map(|(x, y)| x * y).sum();
            tail[j] = (-a.get(i, j) - dot) / djj;
        }
    }
    Ok(prefix)
}

/// `ln det(I − A)`.
///
/// Symmetric input goes through Cholesky, which certifies contractivity
/// exactly. General input goes through LU with partial pivoting and is
/// rejected when the determinant is not positive.
pub fn log_det_one_minus(a: &DenseMatrix) -> Result<f64, LinalgError> {
    if a.dim == 0 {
        return Ok(0.0);
    }
    if a.is_symmetric() {
        let p = cholesky_prefix_log_dets(a)?;
        return Ok(*p.last().unwrap());
    }
    let mut m = a.clone();
    for v in m.data.iter_mut() {
        *v = -*v;
    }
    for i in 0..m.dim {
        m.data[i * m.dim + i] += 1.0;
    }
    let (log_abs, sign) = lu_log_det(&m);
    if sign <= 0.0 {
        return Err(LinalgError::NonContractive {
            pivot: m.dim,
            det_sign: sign,
            log_abs,
        });
    }
    Ok(log_abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_and_diagonal() {
        assert_eq!(log_det_one_minus(&DenseMatrix::zeros(4)).unwrap(), 0.0);
        let m = DenseMatrix::from_row_major(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_relative_eq!(
            log_det_one_minus(&m).unwrap(),
            2.0 * 0.5f64.ln(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            log_det_one_minus(&m).unwrap(),
            -1.386_294_361_119_890_6,
            max_relative = 1e-15
        );
    }

    #[test]
    fn lu_and_cholesky_agree() {
        let m =
            DenseMatrix::from_row_major(3, vec![0.3, 0.1, 0.05, 0.1, 0.2, 0.02, 0.05, 0.02, 0.4])
                .unwrap();
        let chol = log_det_one_minus(&m).unwrap();
        let mut im = DenseMatrix::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                im.set(i, j, im.get(i, j) - m.get(i, j));
            }
        }
        let (lu, sign) = lu_log_det(&im);
        assert_eq!(sign, 1.0);
        assert_relative_eq!(chol, lu, max_relative = 1e-14);
    }

    #[test]
    fn non_contractive_detected() {
        let m = DenseMatrix::from_row_major(2, vec![1.2, 0.0, 0.0, 0.3]).unwrap();
        assert!(matches!(
            log_det_one_minus(&m),
            Err(LinalgError::NonContractive { .. })
        ));
        let m = DenseMatrix::from_row_major(2, vec![1.5, 0.1, 0.0, 0.3]).unwrap();
        assert!(matches!(
            log_det_one_minus(&m),
            Err(LinalgError::NonContractive { .. })
        ));
        assert!(DenseMatrix::from_row_major(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn prefixes_are_leading_blocks() {
        let m =
            DenseMatrix::from_row_major(3, vec![0.3, 0.1, 0.05, 0.1, 0.2, 0.02, 0.05, 0.02, 0.4])
                .unwrap();
        let p = cholesky_prefix_log_dets(&m).unwrap();
        assert_relative_eq!(p[0], 0.7f64.ln(), max_relative = 1e-15);
        let two = 0.7 * 0.8 - 0.01;
        assert_relative_eq!(p[1], f64::ln(two), max_relative = 1e-14);
    }
}
