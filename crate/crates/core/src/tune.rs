//! Tuning-parameter selection over the number of components `C`, the
//! coarsest wavelet level `j0` and the penalty `lambda`.
//!
//! Every `(C, j0, lambda)` cell is fitted independently and scored by k-fold
//! cross-validated predictive loss, the modified BIC, or predictive loss on a
//! validation set. Cells that fail are kept in the record list with their
//! error and ignored by the argmin.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, FitConfig, FitResult};
use crate::model::predictive_loss;
use crate::scalar::Scalar;
use crate::wavelet::{build_design, dyadic_levels, DesignMatrix, WaveletSpec};

/// Smallest grid value relative to `lambda_max` for automatic grids.
pub const LAMBDA_MIN_RATIO: f64 = 0.001;
/// Default number of automatic grid points.
pub const DEFAULT_GRID_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `C` and `j0` fixed; select `lambda`.
    FixCJ0,
    /// `j0` fixed; select `C` in {1, 2, 3} and `lambda`.
    SelectC,
    /// `C` fixed; select `j0` over every admissible level and `lambda`.
    SelectJ0,
}

impl Scenario {
    /// Scenarios are numbered 1 to 3 on the command line.
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Self::FixCJ0),
            2 => Ok(Self::SelectC),
            3 => Ok(Self::SelectJ0),
            _ => Err(Error::InvalidConfig(format!("unknown scenario {n}; expected 1, 2 or 3"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    CrossValidation { folds: usize },
    Bic,
    ValidationLoss,
}

impl SelectionRule {
    pub const CV5: Self = Self::CrossValidation { folds: 5 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid<T> {
    /// Log-spaced from the data-driven `lambda_max` of each `(C, j0)` cell
    /// down to `LAMBDA_MIN_RATIO * lambda_max`.
    Auto { n_points: usize },
    /// Strictly descending, non-negative values shared by every cell.
    Fixed(Vec<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid<T> {
    pub components: Vec<usize>,
    pub j0_values: Vec<usize>,
    pub lambdas: LambdaGrid<T>,
    pub scenario: Scenario,
}

impl<T: Scalar> TuneGrid<T> {
    /// Grid for one of the three scenarios. `c` and `j0` are the fixed values
    /// where the scenario fixes them; `n_points` is the signal length.
    pub fn for_scenario(scenario: Scenario, c: usize, j0: usize, n_points: usize, n_lambdas: usize) -> Result<Self> {
        let (components, j0_values) = match scenario {
            Scenario::FixCJ0 => (vec![c], vec![j0]),
            Scenario::SelectC => (vec![1, 2, 3], vec![j0]),
            Scenario::SelectJ0 => (vec![c], (0..dyadic_levels(n_points)?).collect()),
        };
        let grid = Self {
            components,
            j0_values,
            lambdas: LambdaGrid::Auto { n_points: n_lambdas },
            scenario,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() || self.j0_values.is_empty() {
            return Err(Error::InvalidConfig("tuning grid must not be empty".into()));
        }
        if self.components.contains(&0) {
            return Err(Error::InvalidConfig("C must be at least 1".into()));
        }
        match &self.lambdas {
            LambdaGrid::Auto { n_points } if *n_points < 2 => {
                Err(Error::InvalidConfig("an automatic lambda grid needs at least 2 points".into()))
            }
            LambdaGrid::Fixed(v) => check_lambdas(v),
            _ => Ok(()),
        }
    }
}

fn check_lambdas<T: Scalar>(v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidConfig("lambda grid must not be empty".into()));
    }
    if let Some(bad) = v.iter().find(|l| !(**l >= T::zero()) || !l.is_finite()) {
        return Err(Error::InvalidPenalty(bad.as_f64()));
    }
    if v.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidConfig("lambda grid must be strictly descending".into()));
    }
    Ok(())
}

/// Compact description of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary<T> {
    pub log_likelihood: T,
    pub q0: usize,
    pub effective_params: isize,
    pub active_counts: Vec<usize>,
    pub n_iters: usize,
    pub converged: bool,
}

impl<T: Scalar> FitSummary<T> {
    pub fn of(fit: &FitResult<T>) -> Self {
        Self {
            log_likelihood: fit.log_likelihood,
            q0: fit.q0,
            effective_params: fit.effective_params(),
            active_counts: fit.active_counts.clone(),
            n_iters: fit.n_iters,
            converged: fit.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRecord<T> {
    pub components: usize,
    pub j0: usize,
    pub lambda: T,
    /// `None` when the cell failed.
    pub criterion: Option<T>,
    /// Fit on the full selection data, when the rule produces one.
    pub summary: Option<FitSummary<T>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult<T> {
    /// Sorted by `C`, then `j0`, then descending `lambda`.
    pub records: Vec<TuneRecord<T>>,
    pub best: TuneRecord<T>,
    pub rule: SelectionRule,
    /// Predictive loss of the selected model on a test set, if one was given.
    pub test_loss: Option<T>,
}

/// Responses together with one design matrix per candidate `j0`.
#[derive(Debug, Clone)]
pub struct TuneData<T> {
    pub y: Vec<T>,
    pub designs: BTreeMap<usize, DesignMatrix<T>>,
}

impl<T: Scalar> TuneData<T> {
    /// Transforms `curves` once for every `j0` in `j0_values`.
    pub fn from_curves(curves: &[Vec<T>], y: Vec<T>, spec: &WaveletSpec, j0_values: &[usize]) -> Result<Self> {
        if curves.len() != y.len() {
            return Err(Error::InvalidShape(format!(
                "{} curves but {} responses",
                curves.len(),
                y.len()
            )));
        }
        let designs = j0_values
            .iter()
            .map(|&j0| build_design(curves, &spec.with_j0(j0)).map(|z| (j0, z)))
            .collect::<Result<_>>()?;
        Ok(Self { y, designs })
    }

    /// Data with a single, already transformed design at level `j0`.
    pub fn from_design(y: Vec<T>, z: DesignMatrix<T>, j0: usize) -> Result<Self> {
        if z.rows() != y.len() {
            return Err(Error::InvalidShape(format!("{} design rows but {} responses", z.rows(), y.len())));
        }
        Ok(Self {
            y,
            designs: BTreeMap::from([(j0, z)]),
        })
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    fn design(&self, j0: usize) -> Result<&DesignMatrix<T>> {
        self.designs
            .get(&j0)
            .ok_or_else(|| Error::InvalidConfig(format!("no design prepared for j0 = {j0}")))
    }

    fn check_grid(&self, grid: &TuneGrid<T>) -> Result<()> {
        grid.validate()?;
        for &j0 in &grid.j0_values {
            self.design(j0)?;
        }
        Ok(())
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            y: idx.iter().map(|&i| self.y[i]).collect(),
            designs: self
                .designs
                .iter()
                .map(|(&j0, z)| (j0, z.select_rows(idx)))
                .collect(),
        }
    }
}

/// `n_points` log-spaced values from `lambda_max` down to
/// `LAMBDA_MIN_RATIO * lambda_max`, strictly descending.
pub fn lambda_grid<T: Scalar>(y: &[T], z: &DesignMatrix<T>, config: &FitConfig<T>, n_points: usize) -> Result<Vec<T>> {
    if n_points < 2 {
        return Err(Error::InvalidConfig("lambda grid needs at least 2 points".into()));
    }
    let top = fit::lambda_max(y, z, config)?;
    Ok(log_spaced(top, n_points))
}

fn log_spaced<T: Scalar>(top: T, n_points: usize) -> Vec<T> {
    let ratio = T::lit(LAMBDA_MIN_RATIO).ln();
    let steps = T::from_count(n_points - 1);
    (0..n_points)
        .map(|i| {
            if i == 0 {
                top
            } else {
                top * (ratio * T::from_count(i) / steps).exp()
            }
        })
        .collect()
}

/// `-2 ell + log(n) d_e` with `d_e = (N + 3) C - 1 - q0`.
pub fn modified_bic<T: Scalar>(fit: &FitResult<T>, n: usize) -> T {
    T::lit(-2.0) * fit.log_likelihood + T::from_count(n).ln() * T::lit(fit.effective_params() as f64)
}

/// Seeded fold labels in `0..k`: a shuffled, balanced assignment.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || n < k {
        return Err(Error::InvalidConfig(format!("need n >= k >= 2 (n = {n}, k = {k})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

/// Lowest criterion; ties go to the larger `lambda`, then the smaller `C`,
/// then the smaller `j0`. Failed cells are skipped.
pub fn select_best<T: Scalar>(records: &[TuneRecord<T>]) -> Option<&TuneRecord<T>> {
    records
        .iter()
        .filter(|r| r.criterion.is_some_and(|c| c.is_finite()))
        .min_by(|a, b| rank(a, b))
}

fn rank<T: Scalar>(a: &TuneRecord<T>, b: &TuneRecord<T>) -> Ordering {
    let (ca, cb) = (a.criterion.unwrap(), b.criterion.unwrap());
    ca.partial_cmp(&cb)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.lambda.partial_cmp(&a.lambda).unwrap_or(Ordering::Equal))
        .then_with(|| a.components.cmp(&b.components))
        .then_with(|| a.j0.cmp(&b.j0))
}

fn record_order<T: Scalar>(a: &TuneRecord<T>, b: &TuneRecord<T>) -> Ordering {
    a.components
        .cmp(&b.components)
        .then_with(|| a.j0.cmp(&b.j0))
        .then_with(|| b.lambda.partial_cmp(&a.lambda).unwrap_or(Ordering::Equal))
}

struct Cell<T> {
    components: usize,
    j0: usize,
    lambda: T,
}

/// Expands the grid into cells. Automatic lambda grids are computed on
/// `data`; a `(C, j0)` pair whose grid cannot be built yields one failed
/// record instead of cells.
fn expand<T: Scalar>(
    data: &TuneData<T>,
    config: &FitConfig<T>,
    grid: &TuneGrid<T>,
) -> Result<(Vec<Cell<T>>, Vec<TuneRecord<T>>)> {
    data.check_grid(grid)?;
    let mut cells = Vec::new();
    let mut failed = Vec::new();
    for &c in &grid.components {
        for &j0 in &grid.j0_values {
            let z = data.design(j0)?;
            let lambdas = match &grid.lambdas {
                LambdaGrid::Fixed(v) => Ok(v.clone()),
                LambdaGrid::Auto { n_points } => {
                    lambda_grid(&data.y, z, &config.clone().with_components(c), *n_points)
                }
            };
            match lambdas {
                Ok(ls) => cells.extend(ls.into_iter().map(|lambda| Cell { components: c, j0, lambda })),
                Err(e) => failed.push(TuneRecord {
                    components: c,
                    j0,
                    lambda: T::nan(),
                    criterion: None,
                    summary: None,
                    failure: Some(e.to_string()),
                }),
            }
        }
    }
    Ok((cells, failed))
}

fn cell_config<T: Scalar>(config: &FitConfig<T>, cell: &Cell<T>) -> FitConfig<T> {
    config.clone().with_components(cell.components).with_lambda(cell.lambda)
}

fn finite<T: Scalar>(v: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalFailure {
            iteration: 0,
            reason: "non-finite selection criterion".into(),
            trace: Vec::new(),
        })
    }
}

fn finish<T: Scalar>(
    cells: Vec<Cell<T>>,
    mut records: Vec<TuneRecord<T>>,
    scored: Vec<(Result<T>, Option<FitSummary<T>>)>,
    rule: SelectionRule,
) -> Result<TuneResult<T>> {
    for (cell, (criterion, summary)) in cells.into_iter().zip(scored) {
        let (criterion, failure) = match criterion.and_then(finite) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        records.push(TuneRecord {
            components: cell.components,
            j0: cell.j0,
            lambda: cell.lambda,
            criterion,
            summary,
            failure,
        });
    }
    records.sort_by(record_order);
    let best = select_best(&records)
        .cloned()
        .ok_or_else(|| Error::NumericalFailure {
            iteration: 0,
            reason: "every tuning cell failed".into(),
            trace: Vec::new(),
        })?;
    Ok(TuneResult {
        records,
        best,
        rule,
        test_loss: None,
    })
}

/// k-fold cross-validated predictive loss, summed over folds.
pub fn kfold_cv<T: Scalar>(
    data: &TuneData<T>,
    config: &FitConfig<T>,
    grid: &TuneGrid<T>,
    k: usize,
    seed: u64,
) -> Result<TuneResult<T>> {
    let folds = fold_assignment(data.n_obs(), k, seed)?;
    let splits: Vec<(TuneData<T>, TuneData<T>)> = (0..k)
        .map(|f| {
            let (held, kept): (Vec<usize>, Vec<usize>) = (0..data.n_obs()).partition(|&i| folds[i] == f);
            (data.subset(&kept), data.subset(&held))
        })
        .collect();
    let (cells, failed) = expand(data, config, grid)?;
    let scored = cells
        .par_iter()
        .map(|cell| {
            let cfg = cell_config(config, cell);
            let total = splits.iter().try_fold(T::zero(), |acc, (train, test)| {
                let fit = fit::fit(&train.y, train.design(cell.j0)?, &cfg)?;
                Ok::<_, Error>(acc + predictive_loss(&fit.params, &test.y, test.design(cell.j0)?)?)
            });
            (total, None)
        })
        .collect();
    finish(cells, failed, scored, SelectionRule::CrossValidation { folds: k })
}

/// Modified BIC of full-data fits.
pub fn bic_select<T: Scalar>(data: &TuneData<T>, config: &FitConfig<T>, grid: &TuneGrid<T>) -> Result<TuneResult<T>> {
    let (cells, failed) = expand(data, config, grid)?;
    let n = data.n_obs();
    let scored = cells
        .par_iter()
        .map(|cell| match fit::fit(&data.y, data.design(cell.j0).expect("checked"), &cell_config(config, cell)) {
            Ok(f) => (Ok(modified_bic(&f, n)), Some(FitSummary::of(&f))),
            Err(e) => (Err(e), None),
        })
        .collect();
    finish(cells, failed, scored, SelectionRule::Bic)
}

/// Fits every cell on `train`, selects by predictive loss on `valid` and
/// reports the selected model's predictive loss on `test`. Automatic lambda
/// grids are computed on `train`.
pub fn train_validate_test<T: Scalar>(
    train: &TuneData<T>,
    valid: &TuneData<T>,
    test: &TuneData<T>,
    config: &FitConfig<T>,
    grid: &TuneGrid<T>,
) -> Result<TuneResult<T>> {
    valid.check_grid(grid)?;
    test.check_grid(grid)?;
    let (cells, failed) = expand(train, config, grid)?;
    let fits: Vec<Result<FitResult<T>>> = cells
        .par_iter()
        .map(|cell| fit::fit(&train.y, train.design(cell.j0)?, &cell_config(config, cell)))
        .collect();
    let scored = cells
        .iter()
        .zip(&fits)
        .map(|(cell, f)| match f {
            Ok(f) => (
                valid.design(cell.j0).and_then(|z| predictive_loss(&f.params, &valid.y, z)),
                Some(FitSummary::of(f)),
            ),
            Err(e) => (Err(e.clone()), None),
        })
        .collect();
    let keyed: Vec<(usize, usize, T)> = cells.iter().map(|c| (c.components, c.j0, c.lambda)).collect();
    let mut result = finish(cells, failed, scored, SelectionRule::ValidationLoss)?;
    let best = &result.best;
    let pos = keyed
        .iter()
        .position(|&(c, j0, l)| c == best.components && j0 == best.j0 && l == best.lambda)
        .expect("best record comes from a fitted cell");
    let chosen = fits[pos].as_ref().expect("best cell has a fit");
    result.test_loss = Some(predictive_loss(&chosen.params, &test.y, test.design(best.j0)?)?);
    Ok(result)
}

/// Runs the selection named by `rule`. `seed` drives the fold assignment.
pub fn tune<T: Scalar>(
    data: &TuneData<T>,
    config: &FitConfig<T>,
    grid: &TuneGrid<T>,
    rule: SelectionRule,
    seed: u64,
) -> Result<TuneResult<T>> {
    match rule {
        SelectionRule::CrossValidation { folds } => kfold_cv(data, config, grid, folds, seed),
        SelectionRule::Bic => bic_select(data, config, grid),
        SelectionRule::ValidationLoss => Err(Error::InvalidConfig(
            "validation-loss selection needs separate train, validation and test sets".into(),
        )),
    }
}

/// Selection over `C` (and `lambda`) at a single `j0`; returns the result and
/// the chosen number of components.
pub fn select_components<T: Scalar>(
    data: &TuneData<T>,
    config: &FitConfig<T>,
    grid: &TuneGrid<T>,
    rule: SelectionRule,
    seed: u64,
) -> Result<(TuneResult<T>, usize)> {
    if grid.j0_values.len() != 1 {
        return Err(Error::InvalidConfig("component selection uses a single j0".into()));
    }
    let result = tune(data, config, grid, rule, seed)?;
    let c = result.best.components;
    Ok((result, c))
}

/// Refits the selected cell on all of `data`.
pub fn refit_best<T: Scalar>(data: &TuneData<T>, config: &FitConfig<T>, best: &TuneRecord<T>) -> Result<FitResult<T>> {
    let cfg = config.clone().with_components(best.components).with_lambda(best.lambda);
    fit::fit(&data.y, data.design(best.j0)?, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn record(c: usize, j0: usize, lambda: f64, crit: Option<f64>) -> TuneRecord<f64> {
        TuneRecord {
            components: c,
            j0,
            lambda,
            criterion: crit,
            summary: None,
            failure: None,
        }
    }

    fn toy(n: usize, len: usize, seed: u64) -> TuneData<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let curves: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y = curves
            .iter()
            .map(|c| 2.0 * c[1] - c[3] + 0.3 * rng.random_range(-1.0..1.0))
            .collect();
        TuneData::from_curves(&curves, y, &WaveletSpec::haar(0), &[0, 1]).unwrap()
    }

    #[test]
    fn bic_effective_parameters() {
        let d = |n_coef: usize, c: usize, q0: usize| ((n_coef + 3) * c) as isize - 1 - q0 as isize;
        assert_eq!(d(128, 2, 200), 61);
        assert_eq!(d(64, 1, 0), 66);
    }

    #[test]
    fn bic_matches_recomputation() {
        let data = toy(40, 8, 1);
        let z = &data.designs[&0];
        let f = fit::em_fit(&data.y, z, &FitConfig::new(1, 0.01)).unwrap();
        let ll = crate::model::log_likelihood(&f.params, &data.y, z).unwrap();
        let expect = -2.0 * ll + (40f64).ln() * f.effective_params() as f64;
        assert!((modified_bic(&f, 40) - expect).abs() < 1e-9);
        let loss = predictive_loss(&f.params, &data.y, z).unwrap();
        assert!((loss + (40f64).ln() * f.effective_params() as f64 - expect).abs() < 1e-9);
    }

    #[test]
    fn grid_is_log_spaced_and_descending() {
        let data = toy(40, 8, 2);
        let g = lambda_grid(&data.y, &data.designs[&0], &FitConfig::new(2, 0.0), 7).unwrap();
        assert_eq!(g.len(), 7);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
        assert!((g[6] / g[0] - LAMBDA_MIN_RATIO).abs() < 1e-12);
        let ratios: Vec<f64> = g.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-12));
        assert!(lambda_grid(&data.y, &data.designs[&0], &FitConfig::new(2, 0.0), 1).is_err());
    }

    #[test]
    fn all_zero_design_rejected() {
        let z = DesignMatrix::from_coefficient_rows(&vec![vec![0.0; 4]; 10]).unwrap();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            lambda_grid(&y, &z, &FitConfig::new(1, 0.0), 5),
            Err(Error::InvalidDesign(_))
        ));
    }

    #[test]
    fn tie_break_order() {
        let recs = vec![
            record(2, 0, 0.5, Some(1.0)),
            record(1, 1, 1.0, Some(1.0)),
            record(1, 0, 1.0, Some(1.0)),
            record(3, 0, 2.0, None),
            record(3, 0, 0.1, Some(0.5 + 0.5)),
        ];
        let best = select_best(&recs).unwrap();
        assert_eq!((best.components, best.j0, best.lambda), (1, 0, 1.0));
        let recs = vec![record(2, 0, 0.5, Some(1.0)), record(3, 0, 0.5, Some(1.0))];
        assert_eq!(select_best(&recs).unwrap().components, 2);
        assert!(select_best(&[record(1, 0, 1.0, None)]).is_none());
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = fold_assignment(23, 5, 9).unwrap();
        assert_eq!(a, fold_assignment(23, 5, 9).unwrap());
        assert_ne!(a, fold_assignment(23, 5, 10).unwrap());
        for f in 0..5 {
            let size = a.iter().filter(|&&x| x == f).count();
            assert!(size == 4 || size == 5);
        }
        assert!(fold_assignment(3, 5, 0).is_err());
        assert!(fold_assignment(10, 1, 0).is_err());
    }

    #[test]
    fn scenario_grids() {
        let g = TuneGrid::<f64>::for_scenario(Scenario::SelectJ0, 2, 0, 64, 10).unwrap();
        assert_eq!(g.j0_values, (0..6).collect::<Vec<_>>());
        assert_eq!(g.components, vec![2]);
        let g = TuneGrid::<f64>::for_scenario(Scenario::SelectC, 2, 5, 64, 10).unwrap();
        assert_eq!((g.components.clone(), g.j0_values.clone()), (vec![1, 2, 3], vec![5]));
        assert!(Scenario::from_number(4).is_err());
        let bad = TuneGrid {
            lambdas: LambdaGrid::Fixed(vec![0.1, 0.2]),
            ..g
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_cell_rules_agree() {
        let data = toy(30, 8, 3);
        let grid = TuneGrid {
            components: vec![1],
            j0_values: vec![0],
            lambdas: LambdaGrid::Fixed(vec![0.05]),
            scenario: Scenario::FixCJ0,
        };
        let cfg = FitConfig::new(1, 0.0);
        let cv = kfold_cv(&data, &cfg, &grid, 3, 1).unwrap();
        let bic = bic_select(&data, &cfg, &grid).unwrap();
        assert_eq!((cv.best.components, cv.best.j0, cv.best.lambda), (1, 0, 0.05));
        assert_eq!((bic.best.components, bic.best.j0, bic.best.lambda), (1, 0, 0.05));
    }

    #[test]
    fn missing_design_is_an_error() {
        let data = toy(30, 8, 4);
        let grid = TuneGrid {
            components: vec![1],
            j0_values: vec![2],
            lambdas: LambdaGrid::Fixed(vec![0.05]),
            scenario: Scenario::FixCJ0,
        };
        assert!(bic_select(&data, &FitConfig::new(1, 0.0), &grid).is_err());
    }
}
