//! Mixture parameters, the reparameterized Gaussian mixture likelihood,
//! penalized objectives and E-step responsibilities.
//!
//! Component `r` has density `pi_r * rho_r / sqrt(2 pi) * exp(-(rho_r y - z phi_r)^2 / 2)`
//! with `rho_r = 1 / sigma_r` and `phi_r = beta_r / sigma_r`. Entry 0 of every
//! `phi_r` is the scaled intercept and is never penalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::wavelet::DesignMatrix;

const SIMPLEX_TOL: f64 = 1e-12;

/// Reparameterized mixture parameters `(phi_r, rho_r, pi_r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams<T> {
    pub phi: Vec<Vec<T>>,
    pub rho: Vec<T>,
    pub pi: Vec<T>,
}

/// Natural parameters `(beta_r, sigma_r, pi_r)`; `beta_r[0]` is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalParams<T> {
    pub beta: Vec<Vec<T>>,
    pub sigma: Vec<T>,
    pub pi: Vec<T>,
}

impl<T: Scalar> MixtureParams<T> {
    pub fn new(phi: Vec<Vec<T>>, rho: Vec<T>, pi: Vec<T>) -> Result<Self> {
        let p = Self { phi, rho, pi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.phi.len();
        if c == 0 {
            return Err(Error::InvalidParams("at least one component required".into()));
        }
        if self.rho.len() != c || self.pi.len() != c {
            return Err(Error::InvalidParams(format!(
                "{c} coefficient vectors but {} scales and {} proportions",
                self.rho.len(),
                self.pi.len()
            )));
        }
        let width = self.phi[0].len();
        if width == 0 || self.phi.iter().any(|p| p.len() != width) {
            return Err(Error::InvalidParams(
                "coefficient vectors must share a nonzero length".into(),
            ));
        }
        if let Some(r) = self.rho.iter().position(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParams(format!("rho[{r}] must be positive")));
        }
        if let Some(r) = self.pi.iter().position(|&v| !(v > T::zero())) {
            return Err(Error::InvalidParams(format!("pi[{r}] must be positive")));
        }
        let total: T = self.pi.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(SIMPLEX_TOL).max(T::epsilon() * T::lit(8.0)) {
            return Err(Error::InvalidParams(format!(
                "mixing proportions sum to {total}"
            )));
        }
        Ok(())
    }

    pub fn n_components(&self) -> usize {
        self.phi.len()
    }

    /// Length of each coefficient vector (`N + 1`).
    pub fn width(&self) -> usize {
        self.phi[0].len()
    }

    pub fn to_natural(&self) -> Result<NaturalParams<T>> {
        self.validate()?;
        Ok(NaturalParams {
            beta: self
                .phi
                .iter()
                .zip(&self.rho)
                .map(|(phi, &rho)| phi.iter().map(|&v| v / rho).collect())
                .collect(),
            sigma: self.rho.iter().map(|&r| r.recip()).collect(),
            pi: self.pi.clone(),
        })
    }

    pub fn from_natural(natural: &NaturalParams<T>) -> Result<Self> {
        if let Some(r) = natural.sigma.iter().position(|&s| !(s > T::zero())) {
            return Err(Error::InvalidParams(format!("sigma[{r}] must be positive")));
        }
        if natural.beta.len() != natural.sigma.len() {
            return Err(Error::InvalidParams("beta/sigma length mismatch".into()));
        }
        Self::new(
            natural
                .beta
                .iter()
                .zip(&natural.sigma)
                .map(|(b, &s)| b.iter().map(|&v| v / s).collect())
                .collect(),
            natural.sigma.iter().map(|&s| s.recip()).collect(),
            natural.pi.clone(),
        )
    }

    /// Components reordered so that new component `k` is old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            phi: perm.iter().map(|&r| self.phi[r].clone()).collect(),
            rho: perm.iter().map(|&r| self.rho[r]).collect(),
            pi: perm.iter().map(|&r| self.pi[r]).collect(),
        }
    }

    /// Zero non-intercept coefficients, summed over all components.
    pub fn zero_count(&self) -> usize {
        self.phi
            .iter()
            .map(|p| p[1..].iter().filter(|v| v.is_zero()).count())
            .sum()
    }

    /// Nonzero non-intercept coefficients per component.
    pub fn active_counts(&self) -> Vec<usize> {
        self.phi
            .iter()
            .map(|p| p[1..].iter().filter(|v| !v.is_zero()).count())
            .collect()
    }

    /// Mean function `Z_i beta_r` of component `r` at each design row.
    pub fn component_means(&self, z: &DesignMatrix<T>, r: usize) -> Vec<T> {
        let rho = self.rho[r];
        z.mul_vec(&self.phi[r]).into_iter().map(|v| v / rho).collect()
    }

    fn check_dims(&self, y: &[T], z: &DesignMatrix<T>) -> Result<()> {
        self.validate()?;
        if y.len() != z.rows() {
            return Err(Error::InvalidShape(format!(
                "{} responses for {} design rows",
                y.len(),
                z.rows()
            )));
        }
        if self.width() != z.cols() {
            return Err(Error::InvalidShape(format!(
                "coefficient length {} does not match {} design columns",
                self.width(),
                z.cols()
            )));
        }
        Ok(())
    }
}

/// Posterior component membership probabilities, `n x C`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Responsibilities<T> {
    n: usize,
    c: usize,
    data: Vec<T>,
}

impl<T: Scalar> Responsibilities<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if n == 0 || c == 0 || rows.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidShape("responsibility rows must be non-empty and equal length".into()));
        }
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
        for (i, r) in rows.iter().enumerate() {
            let s: T = r.iter().copied().sum();
            if r.iter().any(|&v| v < T::zero() || !v.is_finite()) || (s - T::one()).abs() > tol {
                return Err(Error::InvalidParams(format!("responsibility row {i} invalid")));
            }
        }
        Ok(Self {
            n,
            c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub(crate) fn from_raw(n: usize, c: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), n * c);
        Self { n, c, data }
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn n_components(&self) -> usize {
        self.c
    }

    #[inline]
    pub fn get(&self, i: usize, r: usize) -> T {
        self.data[i * self.c + r]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.c..(i + 1) * self.c]
    }

    pub fn column(&self, r: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, r)).collect()
    }

    /// `sum_i Delta_{i,r}`.
    pub fn mass(&self, r: usize) -> T {
        (0..self.n).map(|i| self.get(i, r)).sum()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let data = idx.iter().flat_map(|&i| self.row(i).to_vec()).collect();
        Self {
            n: idx.len(),
            c: self.c,
            data,
        }
    }
}

/// Per-coefficient penalty weights, one vector of length `N` per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights<T> {
    pub weights: Vec<Vec<T>>,
}

impl<T: Scalar> PenaltyWeights<T> {
    pub fn uniform(components: usize, n_coefficients: usize) -> Self {
        Self {
            weights: vec![vec![T::one(); n_coefficients]; components],
        }
    }

    pub fn new(weights: Vec<Vec<T>>) -> Result<Self> {
        if weights
            .iter()
            .flatten()
            .any(|&w| !w.is_finite() || w < T::zero())
        {
            return Err(Error::InvalidParams(
                "penalty weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { weights })
    }

    #[inline]
    pub fn get(&self, r: usize, q: usize) -> T {
        self.weights[r][q]
    }

    fn check(&self, params: &MixtureParams<T>) -> Result<()> {
        let n_coef = params.width() - 1;
        if self.weights.len() != params.n_components()
            || self.weights.iter().any(|w| w.len() != n_coef)
        {
            return Err(Error::InvalidShape(format!(
                "penalty weights must be {} x {n_coef}",
                params.n_components()
            )));
        }
        Ok(())
    }
}

/// Exponent on `pi_r` multiplying component `r`'s penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiExponent {
    Zero,
    Half,
    #[default]
    One,
}

impl PiExponent {
    #[inline]
    pub fn apply<T: Scalar>(self, pi: T) -> T {
        match self {
            PiExponent::Zero => T::one(),
            PiExponent::Half => pi.sqrt(),
            PiExponent::One => pi,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            PiExponent::Zero => 0.0,
            PiExponent::Half => 0.5,
            PiExponent::One => 1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        match v {
            x if x == 0.0 => Ok(PiExponent::Zero),
            x if x == 0.5 => Ok(PiExponent::Half),
            x if x == 1.0 => Ok(PiExponent::One),
            _ => Err(Error::InvalidConfig(format!("gamma must be 0, 0.5 or 1, got {v}"))),
        }
    }
}

/// Weighted ℓ1 penalty `lambda * sum_r pi_r^gamma * sum_q w_{r,q} |phi_{r,q}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty<T> {
    pub lambda: T,
    pub gamma: PiExponent,
    pub weights: PenaltyWeights<T>,
}

impl<T: Scalar> Penalty<T> {
    /// Unit-weight penalty with `gamma = 1`.
    pub fn lasso(lambda: T, components: usize, n_coefficients: usize) -> Self {
        Self {
            lambda,
            gamma: PiExponent::One,
            weights: PenaltyWeights::uniform(components, n_coefficients),
        }
    }

    pub fn check_lambda(&self) -> Result<()> {
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidPenalty(self.lambda.as_f64()));
        }
        Ok(())
    }

    /// `sum_q w_{r,q} |phi_{r,q}|` over the non-intercept entries.
    pub fn component_norm(&self, r: usize, phi: &[T]) -> T {
        phi[1..]
            .iter()
            .zip(&self.weights.weights[r])
            .filter(|(p, _)| !p.is_zero())
            .map(|(&p, &w)| w * p.abs())
            .sum()
    }

    pub fn value(&self, params: &MixtureParams<T>) -> T {
        let total: T = params
            .phi
            .iter()
            .zip(&params.pi)
            .enumerate()
            .map(|(r, (phi, &pi))| {
                let norm = self.component_norm(r, phi);
                if norm.is_zero() {
                    T::zero()
                } else {
                    self.gamma.apply(pi) * norm
                }
            })
            .sum();
        if total.is_zero() {
            T::zero()
        } else {
            self.lambda * total
        }
    }
}

/// `log pi_r + log rho_r - log(2 pi)/2 - (rho_r y_i - Z_i phi_r)^2 / 2`, row-major `n x C`.
fn joint_log_densities<T: Scalar>(params: &MixtureParams<T>, y: &[T], z: &DesignMatrix<T>) -> Vec<T> {
    let n = y.len();
    let c = params.n_components();
    let half_log_2pi = T::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); n * c];
    for r in 0..c {
        let fitted = z.mul_vec(&params.phi[r]);
        let rho = params.rho[r];
        let base = params.pi[r].ln() + rho.ln() - half_log_2pi;
        for i in 0..n {
            let e = rho * y[i] - fitted[i];
            out[i * c + r] = base - half * e * e;
        }
    }
    out
}

/// E-step: responsibilities at `params` and the log-likelihood `ell(params; y)`.
pub fn e_step<T: Scalar>(
    params: &MixtureParams<T>,
    y: &[T],
    z: &DesignMatrix<T>,
) -> Result<(Responsibilities<T>, T)> {
    params.check_dims(y, z)?;
    let c = params.n_components();
    let mut logs = joint_log_densities(params, y, z);
    let floor = T::responsibility_floor();
    let mut loglik = T::zero();
    for row in logs.chunks_mut(c) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        loglik = loglik + max + sum.ln();
        let mut clamped = T::zero();
        for v in row.iter_mut() {
            *v = (*v / sum).max(floor).min(T::one());
            clamped = clamped + *v;
        }
        for v in row.iter_mut() {
            *v = *v / clamped;
        }
    }
    Ok((Responsibilities::from_raw(y.len(), c, logs), loglik))
}

/// `ell(theta; y) = sum_i log sum_r pi_r rho_r / sqrt(2 pi) exp(-(rho_r y_i - Z_i phi_r)^2 / 2)`.
pub fn log_likelihood<T: Scalar>(params: &MixtureParams<T>, y: &[T], z: &DesignMatrix<T>) -> Result<T> {
    params.check_dims(y, z)?;
    let c = params.n_components();
    let logs = joint_log_densities(params, y, z);
    Ok(logs
        .chunks(c)
        .map(|row| {
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
        })
        .sum())
}

pub fn responsibilities<T: Scalar>(
    params: &MixtureParams<T>,
    y: &[T],
    z: &DesignMatrix<T>,
) -> Result<Responsibilities<T>> {
    e_step(params, y, z).map(|(r, _)| r)
}

/// `-ell / n + penalty`.
pub fn penalized_objective<T: Scalar>(
    params: &MixtureParams<T>,
    y: &[T],
    z: &DesignMatrix<T>,
    penalty: &Penalty<T>,
) -> Result<T> {
    penalty.check_lambda()?;
    penalty.weights.check(params)?;
    let ll = log_likelihood(params, y, z)?;
    Ok(-ll / T::from_count(y.len()) + penalty.value(params))
}

/// Held-out predictive loss `-2 ell(theta; y_new)`.
pub fn predictive_loss<T: Scalar>(
    params: &MixtureParams<T>,
    y_new: &[T],
    z_new: &DesignMatrix<T>,
) -> Result<T> {
    Ok(T::lit(-2.0) * log_likelihood(params, y_new, z_new)?)
}
