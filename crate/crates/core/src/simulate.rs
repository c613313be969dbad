//! Synthetic functional mixture data: Brownian-bridge predictors, smooth or
//! bumpy coefficient functions, and responses calibrated to a target R².

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width parameter of the bumpy coefficient functions.
pub const BUMP_WIDTH: f64 = 20000.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientFamily {
    Smooth,
    Bumpy,
}

impl std::str::FromStr for CoefficientFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smooth" => Ok(Self::Smooth),
            "bumpy" => Ok(Self::Bumpy),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSetting {
    pub family: CoefficientFamily,
    /// Number of sampling points per curve.
    pub n_points: usize,
    /// Number of observations.
    pub n: usize,
    pub r2: f64,
    /// Mixing proportions; one or two components.
    pub mixing: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub seed: u64,
}

impl SimSetting {
    /// Two equally weighted components with zero intercepts.
    pub fn new(family: CoefficientFamily, n_points: usize, n: usize, r2: f64, seed: u64) -> Self {
        Self {
            family,
            n_points,
            n,
            r2,
            mixing: vec![0.5, 0.5],
            intercepts: vec![0.0, 0.0],
            seed,
        }
    }

    /// Single functional linear model using the first coefficient function.
    pub fn single_component(family: CoefficientFamily, n_points: usize, n: usize, r2: f64, seed: u64) -> Self {
        Self {
            mixing: vec![1.0],
            intercepts: vec![0.0],
            ..Self::new(family, n_points, n, r2, seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return Err(Error::InvalidTarget(self.r2));
        }
        if self.n_points < 2 || self.n == 0 {
            return Err(Error::InvalidConfig("need n >= 1 and at least 2 sampling points".into()));
        }
        check_mixing(&self.mixing)?;
        if self.intercepts.len() != self.mixing.len() {
            return Err(Error::InvalidConfig("one intercept per component required".into()));
        }
        Ok(())
    }
}

fn check_mixing(mixing: &[f64]) -> Result<()> {
    if mixing.is_empty() || mixing.len() > 2 {
        return Err(Error::InvalidConfig("one or two mixture components supported".into()));
    }
    if mixing.iter().any(|&p| !(p > 0.0)) || (mixing.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig("mixing proportions must be positive and sum to 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDataset {
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
    /// True component (0-based) of each observation.
    pub labels: Vec<usize>,
    /// Noise-free means `alpha_r + N^-1 sum_j X_i(t_j) omega_r(t_j)`.
    pub signal: Vec<f64>,
    /// True coefficient functions on `grid`.
    pub omegas: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl SimDataset {
    /// `var(signal) / (var(signal) + var(noise))`.
    pub fn empirical_r2(&self) -> f64 {
        let noise: Vec<f64> = self
            .responses
            .iter()
            .zip(&self.signal)
            .map(|(y, s)| y - s)
            .collect();
        let vs = variance(&self.signal);
        vs / (vs + variance(&noise))
    }
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Interior equally spaced grid `t_j = j / (N + 1)`, `j = 1..=N`.
pub fn sampling_grid(n_points: usize) -> Vec<f64> {
    let denom = (n_points + 1) as f64;
    (1..=n_points).map(|j| j as f64 / denom).collect()
}

/// `cov(X(s), X(t)) = min(s, t) (1 - max(s, t))`.
pub fn bridge_covariance(s: f64, t: f64) -> f64 {
    s.min(t) * (1.0 - s.max(t))
}

/// Exact Brownian-bridge sampler on a fixed grid via the Cholesky factor of
/// the covariance matrix.
#[derive(Debug, Clone)]
pub struct BrownianBridge {
    factor: DMatrix<f64>,
}

impl BrownianBridge {
    pub fn new(grid: &[f64]) -> Result<Self> {
        if grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::InvalidGrid("bridge grid must lie in (0, 1)".into()));
        }
        let n = grid.len();
        let cov = DMatrix::from_fn(n, n, |i, j| bridge_covariance(grid[i], grid[j]));
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::InvalidGrid("covariance is not positive definite".into()))?;
        Ok(Self { factor: chol.l() })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.factor.nrows();
        let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.factor * xi).iter().copied().collect()
    }
}

/// One Brownian-bridge path on the interior grid of `n_points` points.
pub fn brownian_bridge(n_points: usize, seed: u64) -> Result<Vec<f64>> {
    let bridge = BrownianBridge::new(&sampling_grid(n_points))?;
    Ok(bridge.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn bump(t: f64, center: f64) -> f64 {
    (-BUMP_WIDTH * (t - center).powi(2)).exp()
}

/// The two component coefficient functions sampled on `grid`.
pub fn coefficient_functions(family: CoefficientFamily, grid: &[f64]) -> [Vec<f64>; 2] {
    use std::f64::consts::PI;
    match family {
        CoefficientFamily::Smooth => [
            grid.iter().map(|&t| -(2.0 * PI * t).sin()).collect(),
            grid.iter().map(|&t| (PI * t).sin()).collect(),
        ],
        CoefficientFamily::Bumpy => [
            grid.iter()
                .map(|&t| {
                    -3.257 * bump(t, 0.15) + 4.886 * bump(t, 0.25) - 3.257 * bump(t, 0.5)
                        + 2.606 * bump(t, 0.9)
                })
                .collect(),
            grid.iter()
                .map(|&t| 3.257 * bump(t, 0.1) - 4.886 * bump(t, 0.35) + 3.257 * bump(t, 0.7))
                .collect(),
        ],
    }
}

/// `Var(N^-1 sum_j X(t_j) omega(t_j)) = N^-2 sum_j sum_k cov(t_j, t_k) omega_j omega_k`.
pub fn signal_variance(omega: &[f64], grid: &[f64]) -> f64 {
    let n = grid.len() as f64;
    let mut total = 0.0;
    for (j, (&s, &wj)) in grid.iter().zip(omega).enumerate() {
        total += bridge_covariance(s, s) * wj * wj;
        for (&t, &wk) in grid[j + 1..].iter().zip(&omega[j + 1..]) {
            total += 2.0 * bridge_covariance(s, t) * wj * wk;
        }
    }
    total / (n * n)
}

/// Common noise SD giving the target mixture R².
pub fn calibrate_sigma(family: CoefficientFamily, grid: &[f64], r2: f64, mixing: &[f64]) -> Result<f64> {
    if !(r2 > 0.0 && r2 < 1.0) {
        return Err(Error::InvalidTarget(r2));
    }
    check_mixing(mixing)?;
    let omegas = coefficient_functions(family, grid);
    let mean_var: f64 = mixing
        .iter()
        .zip(&omegas)
        .map(|(p, w)| p * signal_variance(w, grid))
        .sum();
    Ok((mean_var * (1.0 - r2) / r2).sqrt())
}

/// Draws a dataset; fully determined by `setting.seed`.
pub fn generate_dataset(setting: &SimSetting) -> Result<SimDataset> {
    setting.validate()?;
    let grid = sampling_grid(setting.n_points);
    let bridge = BrownianBridge::new(&grid)?;
    let sigma = calibrate_sigma(setting.family, &grid, setting.r2, &setting.mixing)?;
    let omegas: Vec<Vec<f64>> = coefficient_functions(setting.family, &grid)
        .into_iter()
        .take(setting.mixing.len())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(setting.seed);
    let n_pts = setting.n_points as f64;
    let mut data = SimDataset {
        grid,
        curves: Vec::with_capacity(setting.n),
        responses: Vec::with_capacity(setting.n),
        labels: Vec::with_capacity(setting.n),
        signal: Vec::with_capacity(setting.n),
        omegas,
        sigma,
    };
    for _ in 0..setting.n {
        let u: f64 = rng.random();
        let mut label = setting.mixing.len() - 1;
        let mut acc = 0.0;
        for (r, p) in setting.mixing.iter().enumerate() {
            acc += p;
            if u < acc {
                label = r;
                break;
            }
        }
        let curve = bridge.sample(&mut rng);
        let integral: f64 = curve
            .iter()
            .zip(&data.omegas[label])
            .map(|(x, w)| x * w)
            .sum::<f64>()
            / n_pts;
        let mean = setting.intercepts[label] + integral;
        let noise = sigma * rng.sample::<f64, _>(StandardNormal);
        data.curves.push(curve);
        data.signal.push(mean);
        data.responses.push(mean + noise);
        data.labels.push(label);
    }
    Ok(data)
}

/// Independent seed for replicate `index` (SplitMix64 of the pair).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut x = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_function_values() {
        let [w1, w2] = coefficient_functions(CoefficientFamily::Smooth, &[0.25, 0.5]);
        assert!((w1[0] + 1.0).abs() < 1e-15);
        assert!((w2[1] - 1.0).abs() < 1e-15);
        assert!(w1[1].abs() < 1e-15);
    }

    #[test]
    fn bumpy_function_at_centre() {
        let [w1, _] = coefficient_functions(CoefficientFamily::Bumpy, &[0.15]);
        let direct = -3.257
            + 4.886 * (-BUMP_WIDTH * 0.01f64).exp()
            - 3.257 * (-BUMP_WIDTH * 0.35f64.powi(2)).exp()
            + 2.606 * (-BUMP_WIDTH * 0.75f64.powi(2)).exp();
        assert!((w1[0] - direct).abs() < 1e-15);
        assert!((w1[0] + 3.257).abs() < 1e-8);
        assert!((w1[0] + 3.257).abs() > 1e-10);
    }

    #[test]
    fn sigma_algebra() {
        let grid = sampling_grid(64);
        let [w1, w2] = coefficient_functions(CoefficientFamily::Smooth, &grid);
        let vbar = 0.5 * signal_variance(&w1, &grid) + 0.5 * signal_variance(&w2, &grid);
        let s5 = calibrate_sigma(CoefficientFamily::Smooth, &grid, 0.5, &[0.5, 0.5]).unwrap();
        let s9 = calibrate_sigma(CoefficientFamily::Smooth, &grid, 0.9, &[0.5, 0.5]).unwrap();
        assert!((s5 * s5 - vbar).abs() < 1e-15);
        assert!((s9 * s9 - vbar / 9.0).abs() < 1e-15);
        for bad in [0.0, 1.0, -0.2, 1.5] {
            assert_eq!(
                calibrate_sigma(CoefficientFamily::Smooth, &grid, bad, &[0.5, 0.5]),
                Err(Error::InvalidTarget(bad))
            );
        }
    }

    #[test]
    fn sigma_converges_with_grid() {
        for family in [CoefficientFamily::Smooth, CoefficientFamily::Bumpy] {
            let a = calibrate_sigma(family, &sampling_grid(256), 0.7, &[0.5, 0.5]).unwrap();
            let b = calibrate_sigma(family, &sampling_grid(512), 0.7, &[0.5, 0.5]).unwrap();
            assert!((a - b).abs() / b < 0.01, "{family:?}: {a} vs {b}");
        }
    }

    #[test]
    fn datasets_are_seed_determined() {
        let s = SimSetting::new(CoefficientFamily::Smooth, 32, 20, 0.9, 5);
        assert_eq!(generate_dataset(&s).unwrap(), generate_dataset(&s).unwrap());
        assert_ne!(
            generate_dataset(&s).unwrap().responses,
            generate_dataset(&s.with_seed(6)).unwrap().responses
        );
    }

    #[test]
    fn near_noiseless_r2() {
        let s = SimSetting::new(CoefficientFamily::Smooth, 32, 500, 0.999_999, 1);
        assert!(generate_dataset(&s).unwrap().empirical_r2() > 0.999);
    }

    #[test]
    fn invalid_settings() {
        let mut s = SimSetting::new(CoefficientFamily::Smooth, 32, 20, 1.2, 5);
        assert_eq!(generate_dataset(&s), Err(Error::InvalidTarget(1.2)));
        s.r2 = 0.5;
        s.mixing = vec![0.3, 0.3];
        assert!(generate_dataset(&s).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
