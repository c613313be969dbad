use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wfmr::fit::{em_fit, lambda_max};
use wfmr::model::predictive_loss;
use wfmr::simulate::{derive_seed, generate_dataset, CoefficientFamily, SimSetting};
use wfmr::tune::*;
use wfmr::{build_design, FitConfig, WaveletSpec};

fn linear_data(n: usize, len: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y = curves
        .iter()
        .map(|c| 0.5 + 1.5 * c[0] - c[len / 2] + 0.4 * rng.random_range(-1.0..1.0))
        .collect();
    (curves, y)
}

fn fixed_grid(c: usize, lambdas: Vec<f64>) -> TuneGrid<f64> {
    TuneGrid {
        components: vec![c],
        j0_values: vec![0],
        lambdas: LambdaGrid::Fixed(lambdas),
        scenario: Scenario::FixCJ0,
    }
}

fn sim_data(setting: &SimSetting, j0: usize) -> TuneData<f64> {
    let ds = generate_dataset(setting).unwrap();
    TuneData::from_curves(&ds.curves, ds.responses, &WaveletSpec::symmlet8(j0), &[j0]).unwrap()
}

#[test]
fn leave_one_out_matches_closed_form() {
    let (curves, y) = linear_data(24, 8, 1);
    let data = TuneData::from_curves(&curves, y.clone(), &WaveletSpec::haar(0), &[0]).unwrap();
    let config = FitConfig::new(1, 0.0).with_tol(1e-24).with_max_iters(200_000);
    let result = kfold_cv(&data, &config, &fixed_grid(1, vec![0.0]), 24, 7).unwrap();

    let z = build_design(&curves, &WaveletSpec::haar(0)).unwrap();
    let n = y.len();
    let mut oracle = 0.0;
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
        let zm = DMatrix::from_fn(n - 1, z.cols(), |r, q| z.get(keep[r], q));
        let yv = DVector::from_iterator(n - 1, keep.iter().map(|&k| y[k]));
        let beta = (zm.transpose() * &zm).cholesky().unwrap().solve(&(zm.transpose() * &yv));
        let sigma2 = (&yv - &zm * &beta).norm_squared() / (n - 1) as f64;
        let pred: f64 = (0..z.cols()).map(|q| z.get(i, q) * beta[q]).sum();
        oracle += (2.0 * std::f64::consts::PI * sigma2).ln() + (y[i] - pred).powi(2) / sigma2;
    }
    let got = result.best.criterion.unwrap();
    assert!((got - oracle).abs() < 1e-6 * oracle.abs().max(1.0), "{got} vs {oracle}");
}

#[test]
fn cross_validation_is_deterministic() {
    let (curves, y) = linear_data(40, 16, 2);
    let data = TuneData::from_curves(&curves, y, &WaveletSpec::haar(1), &[1, 2]).unwrap();
    let grid = TuneGrid {
        components: vec![1, 2],
        j0_values: vec![1, 2],
        lambdas: LambdaGrid::Auto { n_points: 4 },
        scenario: Scenario::FixCJ0,
    };
    let config = FitConfig::new(1, 0.0).with_seed(3);
    let a = kfold_cv(&data, &config, &grid, 5, 11).unwrap();
    let b = kfold_cv(&data, &config, &grid, 5, 11).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 16);
    assert_eq!(select_best(&a.records), Some(&a.best));
}

#[test]
fn single_point_validation_reports_its_test_loss() {
    let (curves, y) = linear_data(90, 16, 4);
    let split = |r: std::ops::Range<usize>| {
        TuneData::from_curves(&curves[r.clone()], y[r].to_vec(), &WaveletSpec::haar(0), &[0]).unwrap()
    };
    let (train, valid, test) = (split(0..30), split(30..60), split(60..90));
    let config = FitConfig::new(2, 0.0).with_seed(5);
    let result = train_validate_test(&train, &valid, &test, &config, &fixed_grid(2, vec![0.02])).unwrap();
    assert_eq!(result.best.lambda, 0.02);
    let fit = em_fit(&train.y, &train.designs[&0], &config.clone().with_lambda(0.02)).unwrap();
    let expect = predictive_loss(&fit.params, &test.y, &test.designs[&0]).unwrap();
    assert_eq!(result.test_loss, Some(expect));
    let valid_loss = predictive_loss(&fit.params, &valid.y, &valid.designs[&0]).unwrap();
    assert_eq!(result.best.criterion, Some(valid_loss));
}

proptest! {
    #[test]
    fn selection_ignores_record_order(
        crits in prop::collection::vec(prop_oneof![Just(None), (0u8..4).prop_map(|v| Some(v as f64))], 1..12),
        seed in any::<u64>(),
    ) {
        let records: Vec<TuneRecord<f64>> = crits
            .iter()
            .enumerate()
            .map(|(k, &criterion)| TuneRecord {
                components: 1 + k % 3,
                j0: k % 2,
                lambda: 1.0 / (1 + k / 3) as f64,
                criterion,
                summary: None,
                failure: None,
            })
            .collect();
        let best = select_best(&records).cloned();
        let mut shuffled = records.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(select_best(&shuffled).cloned(), best);
    }
}

#[test]
fn active_set_shrinks_from_zero_penalty_to_lambda_max() {
    let (curves, y) = linear_data(50, 16, 6);
    let z = build_design(&curves, &WaveletSpec::haar(0)).unwrap();
    let config = FitConfig::new(1, 0.0).with_seed(1);
    let top = lambda_max(&y, &z, &config).unwrap();
    let dense = em_fit(&y, &z, &config).unwrap();
    let sparse = em_fit(&y, &z, &config.clone().with_lambda(top)).unwrap();
    assert!(dense.active_counts[0] >= sparse.active_counts[0]);
    assert_eq!(sparse.active_counts[0], 0);
}

#[test]
fn validation_selects_interior_lambda() {
    let mut interior = 0;
    for rep in 0..20 {
        let seed = derive_seed(500, rep);
        let setting = |k: u64| SimSetting::new(CoefficientFamily::Smooth, 128, 100, 0.9, derive_seed(seed, k));
        let (train, valid, test) = (sim_data(&setting(0), 0), sim_data(&setting(1), 0), sim_data(&setting(2), 0));
        let grid = TuneGrid {
            components: vec![2],
            j0_values: vec![0],
            lambdas: LambdaGrid::Auto { n_points: 20 },
            scenario: Scenario::FixCJ0,
        };
        let config = FitConfig::new(2, 0.0).with_seed(seed);
        let result = train_validate_test(&train, &valid, &test, &config, &grid).unwrap();
        let lambdas: Vec<f64> = result.records.iter().map(|r| r.lambda).collect();
        let pos = lambdas.iter().position(|&l| l == result.best.lambda).unwrap();
        if pos != 0 && pos != lambdas.len() - 1 {
            interior += 1;
        }
        assert!(result.test_loss.unwrap().is_finite());
    }
    assert!(interior >= 16, "interior selections: {interior}/20");
}

#[test]
fn bic_prefers_one_component_for_single_model_data() {
    let mut ones = 0;
    for rep in 0..20 {
        let seed = derive_seed(900, rep);
        let data = sim_data(
            &SimSetting::single_component(CoefficientFamily::Smooth, 128, 100, 0.9, seed),
            0,
        );
        let grid = TuneGrid::for_scenario(Scenario::SelectC, 2, 0, 128, 15).unwrap();
        let (_, c) = select_components(&data, &FitConfig::new(2, 0.0).with_seed(seed), &grid, SelectionRule::Bic, seed).unwrap();
        ones += usize::from(c == 1);
    }
    assert!(ones > 10, "C = 1 chosen in {ones}/20 runs");
}
