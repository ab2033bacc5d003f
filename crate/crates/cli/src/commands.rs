use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::{Array2, ArrayView2};
use survstack::data::{load_covariates, load_csv, CsvSchema, SurvivalDataset, TruncationMode};
use survstack::estimator::{
    fit_global, fit_local, fit_retrospective, load_model, save_model, FitOptions, GridChoice, GridConfig,
    Mapping, ModelDocument, SurvivalCurveMatrix,
};
use survstack::eval::{crossval_brier, mise_grid};
use survstack::simulate::{run_benchmark, write_benchmark_csv, BenchMethod, BenchSetting, BenchmarkConfig};
use survstack::simulate::{gen_scenario, ScenarioSpec};
use survstack::stacking::{stack_f, stack_g, stack_local, write_stack_csv, TimeEncoder};

use crate::{
    BenchmarkArgs, Command, DataArgs, DumpStackArgs, EstimatorArgs, EvaluateArgs, FitArgs, PredictArgs,
    SimulateArgs,
};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Simulate(a) => simulate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::DumpStack(a) => dump_stack(a),
    }
}

fn create(path: &Path) -> survstack::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| survstack::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// File when a path is given, stdout otherwise.
fn output(path: Option<&Path>) -> survstack::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn flushed(mut w: impl Write, path: Option<&Path>) -> survstack::Result<()> {
    w.flush().map_err(|source| survstack::Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    })
}

fn load_data(a: &DataArgs) -> Result<SurvivalDataset> {
    let truncation = a
        .truncation
        .as_deref()
        .map(str::parse::<TruncationMode>)
        .transpose()?;
    let schema = CsvSchema {
        time: a.time_col.clone(),
        event: a.event_col.clone(),
        entry: a.entry_col.clone(),
        ignore: a.ignore_cols.clone(),
        truncation,
    };
    let (d, report) = load_csv(&a.data, &schema).with_context(|| format!("loading {}", a.data.display()))?;
    if report.rows_dropped > 0 {
        eprintln!(
            "note: dropped {} of {} rows with missing values",
            report.rows_dropped, report.rows_read
        );
    }
    Ok(d)
}

fn grid_config(e: &EstimatorArgs) -> GridConfig {
    GridConfig {
        approx: GridChoice::Policy(e.approx_grid),
        event: GridChoice::Policy(e.event_grid),
        censor: GridChoice::Policy(e.cens_grid),
    }
}

fn fit_options(e: &EstimatorArgs, seed: u64) -> FitOptions {
    FitOptions {
        mapping: e.mapping,
        isotonize: e.isotonize,
        isotonize_g: e.isotonize_g,
        denom_floor: e.denom_floor,
        basis: e.basis,
        seed,
    }
}

fn fit(a: FitArgs) -> Result<()> {
    let d = load_data(&a.data)?;
    if a.tau.is_some() && d.truncation() != TruncationMode::Right {
        bail!(survstack::Error::InvalidArgument("--tau only applies to right-truncated data".into()));
    }
    let doc = match a.method.as_str() {
        "global" if d.truncation() == TruncationMode::Right => ModelDocument::Retrospective(fit_retrospective(
            &d,
            &a.est.learner,
            &grid_config(&a.est),
            &fit_options(&a.est, a.seed),
            a.tau,
        )?),
        "global" => ModelDocument::Global(fit_global(
            &d,
            &a.est.learner,
            &grid_config(&a.est),
            &fit_options(&a.est, a.seed),
        )?),
        "local" => {
            let grid = a.est.event_grid.build(&d.times_with_event(true), d.max_follow_up())?;
            ModelDocument::Local(fit_local(&d, &a.est.learner, &grid, a.est.basis, a.events_only, a.seed)?)
        }
        other => bail!(survstack::Error::InvalidArgument(format!(
            "unknown method `{other}` (expected global or local)"
        ))),
    };
    save_model(&doc, &a.out)?;
    Ok(())
}

fn covariate_names(doc: &ModelDocument) -> &[String] {
    match doc {
        ModelDocument::Global(f) => &f.covariates,
        ModelDocument::Retrospective(f) => &f.reversed.covariates,
        ModelDocument::Local(f) => &f.covariates,
    }
}

fn predict(a: PredictArgs) -> Result<()> {
    let doc = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let x = load_covariates(&a.newdata, covariate_names(&doc))
        .with_context(|| format!("loading {}", a.newdata.display()))?;
    let times = a.times.as_deref();
    let (curves, censoring): (SurvivalCurveMatrix, Option<SurvivalCurveMatrix>) = match &doc {
        ModelDocument::Global(f) => (
            f.predict_curve(x.view(), times)?,
            Some(f.predict_censoring_curve(x.view(), times)?),
        ),
        ModelDocument::Retrospective(f) => (f.predict_curve(x.view(), times)?, None),
        ModelDocument::Local(f) => (f.predict_curve(x.view(), times)?, None),
    };
    let out_path = a.out.as_deref();
    let mut w = csv::Writer::from_writer(output(out_path)?);
    let mut header = vec!["subject_id", "time", "survival"];
    if censoring.is_some() {
        header.push("censoring_survival");
    }
    w.write_record(&header)?;
    for i in 0..curves.n_subjects() {
        for (j, t) in curves.times.iter().enumerate() {
            let mut rec = vec![(i + 1).to_string(), t.to_string(), curves.values[[i, j]].to_string()];
            if let Some(c) = &censoring {
                rec.push(c.values[[i, j]].to_string());
            }
            w.write_record(&rec)?;
        }
    }
    let diag = &curves.diagnostics;
    if diag.out_of_range > 0 {
        eprintln!(
            "note: {} of {} curve values fell outside [0, 1] and were clipped",
            diag.out_of_range, diag.evaluated
        );
    }
    flushed(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?, out_path)?;
    Ok(())
}

fn parse_landmark(s: &str) -> survstack::Result<usize> {
    s.trim()
        .trim_start_matches('q')
        .parse::<usize>()
        .ok()
        .filter(|p| (1..=100).contains(p))
        .ok_or_else(|| survstack::Error::InvalidArgument(format!("landmark `{s}` is not qP with P in 1..=100")))
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let d = load_data(&a.data)?;
    let percents = a
        .landmarks
        .iter()
        .map(|s| parse_landmark(s))
        .collect::<survstack::Result<Vec<usize>>>()?;
    let grids = grid_config(&a.est);
    let options = fit_options(&a.est, a.seed);
    let method = |train: &SurvivalDataset, x: ArrayView2<'_, f64>, marks: &[f64]| -> survstack::Result<Array2<f64>> {
        Ok(fit_global(train, &a.est.learner, &grids, &options)?
            .predict_curve_extended(x, marks)?
            .values)
    };
    let report = crossval_brier(&d, a.folds, &percents, a.seed, method)?;
    if report.reshuffles > 0 {
        eprintln!("note: fold assignment redrawn {} time(s) to give every training split an event", report.reshuffles);
    }
    let dataset = a
        .data
        .data
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let label = a.est.learner.to_string();
    let out_path = a.out.as_deref();
    let mut w = csv::Writer::from_writer(output(out_path)?);
    w.write_record([
        "dataset", "landmark", "time", "method", "brier", "brier_km", "relative", "excluded",
    ])?;
    for k in 0..report.landmarks.len() {
        w.write_record([
            dataset.clone(),
            format!("q{}", report.percents[k]),
            report.landmarks[k].to_string(),
            label.clone(),
            report.method[k].to_string(),
            report.km[k].to_string(),
            report.relative[k].to_string(),
            report.excluded[k].to_string(),
        ])?;
    }
    flushed(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?, out_path)?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut spec = ScenarioSpec::new(a.scenario, a.skew, a.n, a.seed);
    if a.intervals.is_some() {
        spec.discrete_intervals = a.intervals;
    }
    spec.censoring_target = a.censoring;
    let sim = gen_scenario(&spec)?;
    let mut w = create(&a.out)?;
    survstack::data::write_csv(&sim.data, &mut w)?;
    flushed(w, Some(&a.out))?;

    let truth_path = a.truth.unwrap_or_else(|| a.out.with_extension("truth.csv"));
    let grid = mise_grid();
    let mut w = csv::Writer::from_writer(create(&truth_path)?);
    w.write_record(["subject_id", "time", "survival"])?;
    for i in 0..sim.data.len() {
        let x = sim.data.covariate(i);
        for &t in &grid {
            w.write_record([
                (i + 1).to_string(),
                t.to_string(),
                sim.truth.survival_row(x, t).to_string(),
            ])?;
        }
    }
    flushed(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?, Some(&truth_path))?;
    eprintln!(
        "truncation rate {:.4}, censoring rate {:.4}",
        sim.truncation_rate, sim.censoring_rate
    );
    Ok(())
}

fn bench_method(name: &str, a: &BenchmarkArgs) -> survstack::Result<BenchMethod> {
    let global = |mapping: Mapping| BenchMethod::Global {
        label: format!("global-{mapping}"),
        learner: a.learner.clone(),
        approx: a.approx_grid,
        regression: a.regression_grid,
        mapping,
    };
    Ok(match name.trim() {
        "global" => global(a.mapping),
        "global-exp" => global(Mapping::Exponential),
        "global-prod" => global(Mapping::Product),
        "local" => BenchMethod::Local {
            label: "local".into(),
            learner: a.learner.clone(),
            grid: a.regression_grid,
        },
        "km" => BenchMethod::KaplanMeier,
        "oracle" => BenchMethod::Oracle,
        other => {
            return Err(survstack::Error::InvalidArgument(format!(
                "unknown benchmark method `{other}`"
            )))
        }
    })
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let methods = a
        .methods
        .iter()
        .map(|m| bench_method(m, &a))
        .collect::<survstack::Result<Vec<_>>>()?;
    let mut settings = Vec::new();
    for &scenario in &a.scenarios {
        for &skew in &a.skews {
            settings.push(BenchSetting {
                scenario,
                skew,
                discrete_intervals: if scenario == 5 { Some(a.intervals.unwrap_or(20)) } else { None },
            });
        }
    }
    let cfg = BenchmarkConfig {
        settings,
        sizes: a.sizes.clone(),
        replicates: a.replicates,
        seed: a.seed,
        methods,
        n_test: a.n_test,
    };
    let result = run_benchmark(&cfg)?;
    for e in &result.errors {
        eprintln!("warning: {e}");
    }
    let out_path = a.out.as_deref();
    let mut w = output(out_path)?;
    write_benchmark_csv(&result.rows, &mut w)?;
    flushed(w, out_path)?;
    Ok(())
}

fn dump_stack(a: DumpStackArgs) -> Result<()> {
    let d = load_data(&a.data)?;
    let t_max = d.max_follow_up();
    let (delta, kind) = match a.stack.as_str() {
        "f1" => (true, 'f'),
        "f0" => (false, 'f'),
        "g1" => (true, 'g'),
        "g0" => (false, 'g'),
        "local" => (true, 'l'),
        other => bail!(survstack::Error::InvalidArgument(format!(
            "unknown stack `{other}` (expected f1, f0, g1, g0 or local)"
        ))),
    };
    if kind == 'g' && d.truncation() != TruncationMode::Left {
        bail!(survstack::Error::InvalidArgument(
            "entry-distribution stacks need left-truncated data".into()
        ));
    }
    let grid = a.grid.build(&d.times_with_event(delta), t_max)?;
    let encoder = TimeEncoder::new(a.basis, t_max, &grid);
    let stack = match kind {
        'f' => stack_f(&d, delta, &grid, &encoder)?,
        'g' => stack_g(&d, delta, &grid, &encoder)?,
        _ => stack_local(&d, &grid, &encoder, true)?,
    };
    let out_path = a.out.as_deref();
    let mut w = output(out_path)?;
    write_stack_csv(&stack, d.covariate_names(), &mut w)?;
    flushed(w, out_path)?;
    Ok(())
}
