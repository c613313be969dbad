use std::collections::hash_map::RandomState;
use std::fs::File;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use wfmr::fit::{self, lambda_max};
use wfmr::io::{self, AssignmentRule, CurveTable, ModelFile};
use wfmr::model::responsibilities;
use wfmr::simulate::{generate_dataset, CoefficientFamily, SimSetting};
use wfmr::tune::{self, Scenario, SelectionRule, TuneData, TuneGrid};
use wfmr::{build_design, Error, FitConfig, PiExponent, Result, WaveletSpec};

use crate::{
    CvrpeArgs, ExportPlotArgs, FitArgs, FitOptions, PredictArgs, SimulateArgs, TransformArgs, TuneArgs,
    WaveletArgs,
};

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let seed = RandomState::new().build_hasher().finish();
        eprintln!("{}", json!({ "notice": "generated seed", "seed": seed }));
        seed
    })
}

fn spec_of(args: &WaveletArgs) -> Result<WaveletSpec> {
    WaveletSpec::from_name(&args.wavelet, args.j0)
}

fn load_table(path: &Path, resample: Option<usize>) -> Result<CurveTable> {
    let table = CurveTable::read(path)?;
    for row in &table.rejected {
        eprintln!(
            "{}",
            json!({ "warning": "row rejected", "line": row.line, "id": row.id, "reason": row.reason })
        );
    }
    if table.is_empty() {
        return Err(Error::InvalidShape(format!("{} contains no usable rows", path.display())));
    }
    match resample {
        Some(n) => io::ingest_table(&table, n),
        None => Ok(table),
    }
}

fn fit_config(components: usize, lambda: f64, options: &FitOptions, seed: u64) -> Result<FitConfig<f64>> {
    let mut cfg = FitConfig::new(components, lambda)
        .with_seed(seed)
        .with_tol(options.tol)
        .with_max_iters(options.max_iters);
    cfg.adaptive = options.adaptive;
    cfg.gamma = PiExponent::from_value(options.gamma)?;
    cfg.validate()?;
    Ok(cfg)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn group_sizes(labels: &[usize], c: usize) -> Vec<usize> {
    let mut sizes = vec![0; c];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

pub fn transform(a: TransformArgs) -> Result<()> {
    let table = load_table(&a.input, a.wavelet.resample)?;
    let spec = spec_of(&a.wavelet)?;
    let z = build_design(&table.curves, &spec)?;
    let mut w = csv_writer(&a.out)?;
    let mut header = vec!["id".to_string(), "response".to_string()];
    header.extend((0..z.cols()).map(|q| format!("z_{q}")));
    w.write_record(&header).map_err(csv_io)?;
    for i in 0..z.rows() {
        let mut row = vec![
            table.ids[i].clone(),
            table.responses[i].map_or_else(String::new, |v| v.to_string()),
        ];
        row.extend(z.row(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".truth.json");
    PathBuf::from(name)
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let family: CoefficientFamily = a.family.parse()?;
    let seed = resolve_seed(a.seed);
    let setting = match a.components {
        1 => SimSetting::single_component(family, a.n_points, a.n, a.r2, seed),
        2 => SimSetting::new(family, a.n_points, a.n, a.r2, seed),
        c => return Err(Error::InvalidConfig(format!("simulation supports C = 1 or 2, got {c}"))),
    };
    let ds = generate_dataset(&setting)?;
    let table = CurveTable::new(
        (1..=ds.curves.len()).map(|i| i.to_string()).collect(),
        ds.responses.iter().map(|&y| Some(y)).collect(),
        ds.grid.clone(),
        ds.curves.clone(),
    )?;
    table.write(&a.out)?;
    let labels: Vec<usize> = ds.labels.iter().map(|l| l + 1).collect();
    write_json(
        &sidecar(&a.out),
        &json!({
            "seed": seed,
            "setting": setting,
            "sigma": ds.sigma,
            "labels": labels,
            "grid": ds.grid,
            "omegas": ds.omegas,
        }),
    )?;
    println!("{}", json!({ "seed": seed, "n": ds.curves.len(), "empirical_r2": ds.empirical_r2() }));
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let table = load_table(&a.input, a.wavelet.resample)?;
    let y = table.require_responses()?;
    let spec = spec_of(&a.wavelet)?;
    let z = build_design(&table.curves, &spec)?;
    let seed = resolve_seed(a.options.seed);
    let mut cfg = fit_config(a.components, 0.0, &a.options, seed)?;
    cfg.lambda = match a.lambda.as_str() {
        "max" => lambda_max(&y, &z, &cfg)?,
        text => text
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("--lambda expects a number or 'max', got '{text}'")))?,
    };
    cfg.validate()?;
    let result = fit::fit(&y, &z, &cfg)?;
    for &r in &result.degenerate {
        eprintln!("{}", json!({ "warning": "degenerate component", "component": r + 1 }));
    }
    let model = ModelFile::from_fit(&result, spec, table.grid.clone(), seed, cfg.adaptive, cfg.gamma)?;
    model.write(&a.out)?;
    let labels = io::assign_groups(&result.responsibilities);
    println!(
        "{}",
        json!({
            "seed": seed,
            "lambda": cfg.lambda,
            "log_likelihood": result.log_likelihood,
            "bic": model.metadata.criteria["bic"],
            "q0": result.q0,
            "effective_params": result.effective_params(),
            "converged": result.converged,
            "n_iters": result.n_iters,
            "group_sizes": group_sizes(&labels, result.n_components()),
        })
    );
    Ok(())
}

fn parse_rule(text: &str) -> Result<SelectionRule> {
    match text {
        "bic" => Ok(SelectionRule::Bic),
        _ => text
            .strip_prefix("cv")
            .and_then(|k| k.parse::<usize>().ok())
            .map(|folds| SelectionRule::CrossValidation { folds })
            .ok_or_else(|| Error::InvalidConfig(format!("--rule expects bic or cvK, got '{text}'"))),
    }
}

pub fn tune(a: TuneArgs) -> Result<()> {
    let table = load_table(&a.input, a.wavelet.resample)?;
    let y = table.require_responses()?;
    let spec = spec_of(&a.wavelet)?;
    let rule = parse_rule(&a.rule)?;
    let scenario = Scenario::from_number(a.scenario)?;
    let grid = TuneGrid::for_scenario(scenario, a.components, a.wavelet.j0, table.n_points(), a.n_lambda)?;
    let seed = resolve_seed(a.options.seed);
    let cfg = fit_config(a.components, 0.0, &a.options, seed)?;
    let data = TuneData::from_curves(&table.curves, y, &spec, &grid.j0_values)?;
    let result = tune::tune(&data, &cfg, &grid, rule, seed)?;
    write_json(
        &a.out,
        &json!({
            "seed": seed,
            "scenario": scenario,
            "wavelet": spec.name(),
            "result": result,
        }),
    )?;
    if let Some(path) = &a.model {
        let best = tune::refit_best(&data, &cfg, &result.best)?;
        ModelFile::from_fit(&best, spec.with_j0(result.best.j0), table.grid.clone(), seed, cfg.adaptive, cfg.gamma)?
            .write(path)?;
    }
    println!(
        "{}",
        json!({
            "seed": seed,
            "C": result.best.components,
            "j0": result.best.j0,
            "lambda": result.best.lambda,
            "criterion": result.best.criterion,
        })
    );
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let model = ModelFile::read(&a.model)?;
    let mut table = CurveTable::read(&a.input)?;
    if table.n_points() != model.n_points {
        table = io::ingest_table(&table, model.n_points)?;
    }
    let rule = AssignmentRule::parse(&a.rule)?;
    let z = build_design(&table.curves, &model.wavelet)?;
    let params = &model.params;
    let c = params.n_components();
    let observed: Vec<usize> = (0..table.len()).filter(|&i| table.responses[i].is_some()).collect();
    let y_obs: Vec<f64> = observed.iter().map(|&i| table.responses[i].unwrap()).collect();
    let z_obs = z.select_rows(&observed);
    let resp = responsibilities(params, &y_obs, &z_obs)?;
    let obs_labels = io::assign(params, &y_obs, &z_obs, rule)?;
    let prior = (1..c).fold(0, |best, r| if params.pi[r] > params.pi[best] { r } else { best });
    let mut labels = vec![prior; table.len()];
    let mut resp_rows = vec![None; table.len()];
    for (k, &i) in observed.iter().enumerate() {
        labels[i] = obs_labels[k];
        resp_rows[i] = Some(resp.row(k).to_vec());
    }
    if matches!(rule, AssignmentRule::Threshold { .. }) && observed.len() != table.len() {
        return Err(Error::InvalidShape("the threshold rule needs a response for every row".into()));
    }
    let predictions = io::predict_assigned(params, &z, &labels)?;
    let marginal = io::mixture_mean(params, &z);

    let mut w = csv_writer(&a.out)?;
    let mut header: Vec<String> = ["id", "response", "label", "prediction", "mixture_mean"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=c).map(|r| format!("resp_{r}")));
    w.write_record(&header).map_err(csv_io)?;
    for i in 0..table.len() {
        let mut row = vec![
            table.ids[i].clone(),
            table.responses[i].map_or_else(String::new, |v| v.to_string()),
            (labels[i] + 1).to_string(),
            predictions[i].to_string(),
            marginal[i].to_string(),
        ];
        match &resp_rows[i] {
            Some(r) => row.extend(r.iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), c)),
        }
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    println!("{}", json!({ "n": table.len(), "group_sizes": group_sizes(&labels, c) }));
    Ok(())
}

pub fn cvrpe(a: CvrpeArgs) -> Result<()> {
    let table = load_table(&a.input, a.wavelet.resample)?;
    let y = table.require_responses()?;
    let spec = spec_of(&a.wavelet)?;
    let z = build_design(&table.curves, &spec)?;
    let seed = resolve_seed(a.options.seed);
    let cfg = fit_config(a.components, a.lambda, &a.options, seed)?;
    let rule = AssignmentRule::parse(&a.rule)?;
    let report = io::cvrpe(&y, &z, &cfg, rule)?;
    let labels: Vec<usize> = report.labels.iter().map(|l| l + 1).collect();
    let body = json!({
        "seed": seed,
        "cvrpe": report.value,
        "predictions": report.predictions,
        "labels": labels,
    });
    if let Some(out) = &a.out {
        write_json(out, &body)?;
    }
    println!("{}", json!({ "seed": seed, "cvrpe": report.value }));
    Ok(())
}

pub fn export_plot(a: ExportPlotArgs) -> Result<()> {
    let model = ModelFile::read(&a.model)?;
    let scale = if a.riemann { model.n_points as f64 } else { 1.0 };
    let mut w = csv_writer(&a.out)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=model.omegas.len()).map(|r| format!("omega_{r}")));
    w.write_record(&header).map_err(csv_io)?;
    for (j, t) in model.grid.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(model.omegas.iter().map(|o| (o[j] * scale).to_string()));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
