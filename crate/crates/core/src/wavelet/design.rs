use crate::error::{Error, Result};
use crate::model::MixtureParams;
use crate::scalar::Scalar;

use super::{dwt, idwt, CoeffVector, WaveletSpec};

/// `n x (N + 1)` regression design: an intercept column of ones followed by
/// the wavelet coefficients of each curve. Stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Builds a design from coefficient rows (without the intercept).
    pub fn from_coefficient_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidShape("design needs at least one row".into()));
        }
        let width = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::InvalidShape(format!(
                "row {i} has {} coefficients, expected {width}",
                r.len()
            )));
        }
        let cols = width + 1;
        let mut data = vec![T::zero(); n * cols];
        data[..n].iter_mut().for_each(|v| *v = T::one());
        for (i, r) in rows.iter().enumerate() {
            for (q, &v) in r.iter().enumerate() {
                data[(q + 1) * n + i] = v;
            }
        }
        Ok(Self {
            rows: n,
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of non-intercept columns (`N`).
    pub fn n_coefficients(&self) -> usize {
        self.cols - 1
    }

    #[inline]
    pub fn get(&self, i: usize, q: usize) -> T {
        self.data[q * self.rows + i]
    }

    #[inline]
    pub fn column(&self, q: usize) -> &[T] {
        &self.data[q * self.rows..(q + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|q| self.get(i, q)).collect()
    }

    /// `Z_i . phi` for the given row.
    pub fn row_dot(&self, i: usize, phi: &[T]) -> T {
        phi.iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(q, &p)| self.get(i, q) * p)
            .sum()
    }

    /// `Z phi`, skipping zero coefficients.
    pub fn mul_vec(&self, phi: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        for (q, &p) in phi.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (o, &z) in out.iter_mut().zip(self.column(q)) {
                *o = *o + z * p;
            }
        }
        out
    }

    /// Sub-design holding the given rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let n = idx.len();
        let mut data = Vec::with_capacity(n * self.cols);
        for q in 0..self.cols {
            let col = self.column(q);
            data.extend(idx.iter().map(|&i| col[i]));
        }
        Self {
            rows: n,
            cols: self.cols,
            data,
        }
    }
}

/// Transforms each curve and stacks `[1, dwt(X_i)]` as rows.
pub fn build_design<T: Scalar>(curves: &[Vec<T>], spec: &WaveletSpec) -> Result<DesignMatrix<T>> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidShape("no curves".into()))?;
    let len = first.len();
    if let Some((i, c)) = curves.iter().enumerate().find(|(_, c)| c.len() != len) {
        return Err(Error::InvalidShape(format!(
            "curve {i} has length {}, expected {len}",
            c.len()
        )));
    }
    let coeffs = curves
        .iter()
        .map(|c| dwt(c, spec).map(|cv| cv.values))
        .collect::<Result<Vec<_>>>()?;
    DesignMatrix::from_coefficient_rows(&coeffs)
}

/// Coefficient functions `omega_r = idwt(phi_r / rho_r)` on the sampling grid,
/// intercept dropped.
pub fn reconstruct_omegas<T: Scalar>(
    params: &MixtureParams<T>,
    spec: &WaveletSpec,
) -> Result<Vec<Vec<T>>> {
    params
        .phi
        .iter()
        .zip(&params.rho)
        .enumerate()
        .map(|(r, (phi, &rho))| {
            if !(rho > T::zero()) {
                return Err(Error::InvalidParams(format!(
                    "rho[{r}] = {rho} is not positive"
                )));
            }
            let beta = phi[1..].iter().map(|&p| p / rho).collect();
            idwt(&CoeffVector::new(spec.j0, beta)?, spec)
        })
        .collect()
}
