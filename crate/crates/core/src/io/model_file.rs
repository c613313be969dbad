//! Versioned JSON model files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::model::{MixtureParams, NaturalParams, PiExponent};
use crate::tune::modified_bic;
use crate::wavelet::{reconstruct_omegas, WaveletSpec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub lambda: f64,
    pub components: usize,
    pub j0: usize,
    pub seed: u64,
    pub adaptive: bool,
    pub gamma: PiExponent,
    pub n_obs: usize,
    pub log_likelihood: f64,
    pub q0: usize,
    pub effective_params: isize,
    pub n_iters: usize,
    pub converged: bool,
    /// Named selection criteria, e.g. `bic` or `cv5`.
    pub criteria: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub wavelet: WaveletSpec,
    /// Length of the predictor curves.
    pub n_points: usize,
    /// Sampling grid of the training curves.
    pub grid: Vec<f64>,
    pub params: MixtureParams<f64>,
    pub natural: NaturalParams<f64>,
    /// `idwt(phi_r[1..] / rho_r)` for each component, on the sampling grid.
    pub omegas: Vec<Vec<f64>>,
    pub metadata: FitMetadata,
}

impl ModelFile {
    /// Packages a fit. The modified BIC is always recorded under `bic`.
    pub fn from_fit(fit: &FitResult<f64>, wavelet: WaveletSpec, grid: Vec<f64>, seed: u64, adaptive: bool, gamma: PiExponent) -> Result<Self> {
        let n_points = fit.n_coefficients();
        if grid.len() != n_points {
            return Err(Error::InvalidShape(format!(
                "grid has {} points but the model has {n_points} coefficients",
                grid.len()
            )));
        }
        let mut criteria = BTreeMap::new();
        criteria.insert("bic".to_string(), modified_bic(fit, fit.n_obs));
        Ok(Self {
            format_version: FORMAT_VERSION,
            wavelet,
            n_points,
            grid,
            natural: fit.params.to_natural()?,
            omegas: reconstruct_omegas(&fit.params, &wavelet)?,
            params: fit.params.clone(),
            metadata: FitMetadata {
                lambda: fit.lambda,
                components: fit.n_components(),
                j0: wavelet.j0,
                seed,
                adaptive,
                gamma,
                n_obs: fit.n_obs,
                log_likelihood: fit.log_likelihood,
                q0: fit.q0,
                effective_params: fit.effective_params(),
                n_iters: fit.n_iters,
                converged: fit.converged,
                criteria,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        self.params.validate()?;
        if self.params.width() != self.n_points + 1 || self.grid.len() != self.n_points {
            return Err(Error::InvalidShape("model dimensions are inconsistent".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::ParseError {
            row: e.line(),
            col: e.column(),
            msg: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
