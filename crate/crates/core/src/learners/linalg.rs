//! Dense row-major matrices and the few factorizations the learners need.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::num;

/// Row-major feature matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    names: Vec<String>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Panics if the length does not
    /// match `rows * names.len()`.
    pub fn new(rows: usize, names: Vec<String>, data: Vec<f64>) -> Self {
        let cols = names.len();
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix {
            rows,
            cols,
            data,
            names,
        }
    }

    /// Builds a matrix from columns.
    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Self {
        assert_eq!(names.len(), columns.len());
        let rows = columns.first().map_or(0, Vec::len);
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (i, &v) in col.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Matrix {
            rows,
            cols,
            data,
            names,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Copies the selected rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
            names: self.names.clone(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Rows of a design collapsed to distinct feature vectors.
#[derive(Debug, Clone)]
pub struct Collapsed {
    pub x: Matrix,
    /// Weighted mean of the target within each distinct row.
    pub y: Vec<f64>,
    /// Weighted mean of the squared target within each distinct row.
    pub ysq: Vec<f64>,
    /// Summed weight of each distinct row.
    pub w: Vec<f64>,
}

impl Collapsed {
    /// `Σ wᵢ (pᵢ − yᵢ)²` over the original rows, given one prediction per
    /// distinct row.
    pub fn squared_error(&self, pred: &[f64]) -> f64 {
        pred.iter()
            .zip(&self.y)
            .zip(&self.ysq)
            .zip(&self.w)
            .map(|(((p, y), y2), w)| w * (p * p - 2.0 * p * y + y2))
            .sum()
    }
}

/// Collapses `rows` of `x` to distinct feature vectors, dropping groups with
/// zero total weight. Weighted squared-error and Bernoulli losses differ
/// from their uncollapsed values only by a constant, so fits are unchanged.
/// Groups come out in lexicographic order of their features.
pub fn collapse(x: &Matrix, y: &[f64], w: &[f64], rows: &[usize]) -> Collapsed {
    // Keys order like `f64::total_cmp`, column by column.
    let bits = |v: f64| {
        let b = v.to_bits() as i64;
        b ^ ((((b >> 63) as u64) >> 1) as i64)
    };
    let mut groups: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    // (representative row, Σw, Σwy, Σwy²)
    let mut acc: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut key = Vec::with_capacity(x.cols);
    for &i in rows {
        key.clear();
        key.extend(x.row(i).iter().map(|v| bits(*v)));
        let g = match groups.get(key.as_slice()) {
            Some(&g) => g,
            None => {
                groups.insert(key.clone(), acc.len());
                acc.push((i, 0.0, 0.0, 0.0));
                acc.len() - 1
            }
        };
        let (wi, yi) = (w[i], y[i]);
        let a = &mut acc[g];
        a.1 += wi;
        a.2 += wi * yi;
        a.3 += wi * yi * yi;
    }
    let mut data = Vec::with_capacity(groups.len() * x.cols);
    let (mut cy, mut cy2, mut cw) = (Vec::new(), Vec::new(), Vec::new());
    for &g in groups.values() {
        let (i, sw, swy, swy2) = acc[g];
        if sw > 0.0 {
            data.extend_from_slice(x.row(i));
            cy.push(swy / sw);
            cy2.push(swy2 / sw);
            cw.push(sw);
        }
    }
    Collapsed {
        x: Matrix {
            rows: cy.len(),
            cols: x.cols,
            data,
            names: x.names.clone(),
        },
        y: cy,
        ysq: cy2,
        w: cw,
    }
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, `p × p`)
/// via Cholesky. Returns `None` when a pivot falls below `1e-10` times the
/// largest diagonal entry, i.e. the system is numerically singular.
pub fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), p * p);
    let max_diag = (0..p).map(|i| a[i * p + i]).fold(0.0f64, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return None;
    }
    let tol = 1e-10 * max_diag;
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= tol {
                    return None;
                }
                l[i * p + i] = num::sqrt(s);
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[k * p + i] * x[k];
        }
        x[i] = s / l[i * p + i];
    }
    Some(x)
}

/// Accumulates the weighted normal equations `[1 X]ᵀ W [1 X]` and
/// `[1 X]ᵀ W y` with an intercept column prepended.
pub fn normal_equations(x: &Matrix, y: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = x.cols() + 1;
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    let mut z = vec![0.0; p];
    for i in 0..x.rows() {
        z[0] = 1.0;
        z[1..].copy_from_slice(x.row(i));
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for r in 0..p {
            let wr = wi * z[r];
            xty[r] += wr * y[i];
            for c in 0..=r {
                xtx[r * p + c] += wr * z[c];
            }
        }
    }
    for r in 0..p {
        for c in r + 1..p {
            xtx[r * p + c] = xtx[c * p + r];
        }
    }
    (xtx, xty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn cholesky_solves_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0], 2).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_flags_singular() {
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(cholesky_solve(&a, &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn select_rows_keeps_order() {
        let m = Matrix::from_columns(
            vec!["a".to_string(), "b".to_string()],
            &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
        );
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[3.0, 6.0]);
        assert_eq!(s.row(1), &[1.0, 4.0]);
    }
}
