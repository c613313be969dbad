//! Periodic orthonormal discrete wavelet transform and the mapping between
//! sampled curves and regression design rows.
//!
//! Coefficients are stored coarse to fine: the `2^j0` scaling coefficients
//! first, then the wavelet coefficients of level `j0`, `j0 + 1`, ..., `J - 1`
//! where `N = 2^J`, with translation index ascending inside each level.

mod design;
mod filters;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use design::{build_design, reconstruct_omegas, DesignMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletFamily {
    Haar,
    DaubechiesLeastAsymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
}

/// Wavelet basis and decomposition floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    pub vanishing_moments: usize,
    pub boundary: Boundary,
    pub j0: usize,
}

impl WaveletSpec {
    pub fn haar(j0: usize) -> Self {
        Self {
            family: WaveletFamily::Haar,
            vanishing_moments: 1,
            boundary: Boundary::Periodic,
            j0,
        }
    }

    /// Least-asymmetric Daubechies wavelet with 8 vanishing moments.
    pub fn symmlet8(j0: usize) -> Self {
        Self {
            family: WaveletFamily::DaubechiesLeastAsymmetric,
            vanishing_moments: 8,
            boundary: Boundary::Periodic,
            j0,
        }
    }

    pub fn with_j0(self, j0: usize) -> Self {
        Self { j0, ..self }
    }

    /// Parses the short names used on the command line (`haar`, `sym8`, `la8`).
    pub fn from_name(name: &str, j0: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Self::haar(j0)),
            "sym8" | "la8" | "la16" | "symmlet8" => Ok(Self::symmlet8(j0)),
            other => Err(Error::InvalidConfig(format!("unknown wavelet '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            WaveletFamily::Haar => "haar",
            WaveletFamily::DaubechiesLeastAsymmetric => "sym8",
        }
    }

    fn lowpass(&self) -> Result<&'static [f64]> {
        match (self.family, self.vanishing_moments) {
            (WaveletFamily::Haar, 1) => Ok(&filters::HAAR),
            (WaveletFamily::DaubechiesLeastAsymmetric, 8) => Ok(&filters::LEAST_ASYMMETRIC_8),
            (family, vm) => Err(Error::InvalidConfig(format!(
                "{family:?} with {vm} vanishing moments is not available"
            ))),
        }
    }

    fn filter_pair<T: Scalar>(&self) -> Result<(Vec<T>, Vec<T>)> {
        let h = self.lowpass()?;
        let g = filters::quadrature_mirror(h);
        Ok((
            h.iter().map(|&v| T::lit(v)).collect(),
            g.into_iter().map(T::lit).collect(),
        ))
    }
}

/// Returns `J` with `len = 2^J`, or `InvalidLength`.
pub fn dyadic_levels(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidLength { len });
    }
    Ok(len.trailing_zeros() as usize)
}

fn check_depth(j0: usize, len: usize) -> Result<usize> {
    let levels = dyadic_levels(len)?;
    if j0 >= levels {
        return Err(Error::InvalidDepth { j0, len });
    }
    Ok(levels)
}

/// Wavelet coefficients of one curve in coarse-to-fine order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffVector<T> {
    pub j0: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> CoeffVector<T> {
    pub fn new(j0: usize, values: Vec<T>) -> Result<Self> {
        check_depth(j0, values.len())?;
        Ok(Self { j0, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The `2^j0` scaling coefficients.
    pub fn scaling(&self) -> &[T] {
        &self.values[..1 << self.j0]
    }

    /// Wavelet coefficients of level `j` (`j0 <= j < J`).
    pub fn level(&self, j: usize) -> &[T] {
        let (start, end) = level_range(j);
        &self.values[start..end]
    }

    /// Index range of each detail level, coarse to fine.
    pub fn level_ranges(&self) -> Vec<(usize, std::ops::Range<usize>)> {
        let levels = self.len().trailing_zeros() as usize;
        (self.j0..levels)
            .map(|j| {
                let (s, e) = level_range(j);
                (j, s..e)
            })
            .collect()
    }
}

// Level j details live at [2^j, 2^(j+1)) regardless of j0.
fn level_range(j: usize) -> (usize, usize) {
    (1 << j, 1 << (j + 1))
}

/// Forward periodic DWT down to level `spec.j0`.
pub fn dwt<T: Scalar>(signal: &[T], spec: &WaveletSpec) -> Result<CoeffVector<T>> {
    let len = signal.len();
    let levels = check_depth(spec.j0, len)?;
    let (h, g) = spec.filter_pair::<T>()?;

    let mut out = vec![T::zero(); len];
    let mut approx = signal.to_vec();
    let mut next = vec![T::zero(); len / 2];
    for j in (spec.j0..levels).rev() {
        let cur = 1usize << (j + 1);
        let half = cur / 2;
        for k in 0..half {
            let mut a = T::zero();
            let mut d = T::zero();
            for (m, (&hm, &gm)) in h.iter().zip(g.iter()).enumerate() {
                let x = approx[(2 * k + m) % cur];
                a = a + hm * x;
                d = d + gm * x;
            }
            next[k] = a;
            out[half + k] = d;
        }
        approx[..half].copy_from_slice(&next[..half]);
    }
    let n_scaling = 1usize << spec.j0;
    out[..n_scaling].copy_from_slice(&approx[..n_scaling]);
    Ok(CoeffVector {
        j0: spec.j0,
        values: out,
    })
}

/// Inverse of [`dwt`]; `coeffs.j0` must equal `spec.j0`.
pub fn idwt<T: Scalar>(coeffs: &CoeffVector<T>, spec: &WaveletSpec) -> Result<Vec<T>> {
    let len = coeffs.len();
    if coeffs.j0 != spec.j0 {
        return Err(Error::InvalidDepth { j0: coeffs.j0, len });
    }
    let levels = check_depth(spec.j0, len)?;
    let (h, g) = spec.filter_pair::<T>()?;

    let mut approx = vec![T::zero(); len];
    let n_scaling = 1usize << spec.j0;
    approx[..n_scaling].copy_from_slice(&coeffs.values[..n_scaling]);
    let mut next = vec![T::zero(); len];
    for j in spec.j0..levels {
        let half = 1usize << j;
        let cur = half * 2;
        next[..cur].iter_mut().for_each(|v| *v = T::zero());
        let details = &coeffs.values[half..cur];
        for k in 0..half {
            let a = approx[k];
            let d = details[k];
            for (m, (&hm, &gm)) in h.iter().zip(g.iter()).enumerate() {
                let idx = (2 * k + m) % cur;
                next[idx] = next[idx] + hm * a + gm * d;
            }
        }
        approx[..cur].copy_from_slice(&next[..cur]);
    }
    Ok(approx)
}
