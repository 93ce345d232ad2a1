use std::path::{Path, PathBuf};
use std::str::FromStr;

use lakeopt_core::dataset::{self, format_value, to_csv_string, CsvSchema, SynthConfig};
use lakeopt_core::pipeline::{
    self, agreement, analyze_model, plan_csv, plan_json, LEVEL_INPUTS, RUNOFF_INPUTS,
};
use lakeopt_core::sensitivity::{
    self, classify_factors, elementary_effects, morris_trajectories, ClassThresholds,
};
use lakeopt_core::surrogate::model_to_json_with;
use lakeopt_core::{
    compute_stats, load_csv, load_model, run_pipeline, run_stage2, seasonal_multipliers,
    sobol_converge, FeatureStats, Method, MlpModel, TimeSeriesDataset, Variable,
};
use serde_json::{json, Value};

use crate::config::CliConfig;
use crate::{Failure, SensitivityMethod};

pub struct Context {
    command: &'static str,
    cfg: CliConfig,
    out: PathBuf,
}

impl Context {
    pub fn new(command: &'static str, cfg: CliConfig) -> Result<Self, Failure> {
        let out = cfg.out();
        Ok(Self { command, cfg, out })
    }

    /// Run record embedded in every output: tool, command and the effective
    /// configuration. No wall-clock values, so reruns are byte-identical.
    fn generated_by(&self) -> Value {
        json!({
            "tool": "lakeopt",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.cfg.seed(),
            "config": self.cfg,
        })
    }

    fn csv_comment(&self) -> String {
        format!("generated_by: {}", self.generated_by())
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Failure::Input(format!("cannot create {}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json(&self, name: &str, mut value: Value) -> Result<PathBuf, Failure> {
        if let Value::Object(map) = &mut value {
            map.insert("generated_by".into(), self.generated_by());
        }
        self.write(
            name,
            &(serde_json::to_string_pretty(&value).expect("JSON value serializes") + "\n"),
        )
    }

    fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf, Failure> {
        self.write(name, &format!("# {}\n{body}", self.csv_comment()))
    }

    fn dataset(&self) -> Result<TimeSeriesDataset, Failure> {
        Ok(load_csv(self.cfg.input()?, &CsvSchema::default())?)
    }
}

fn model(path: &Path) -> Result<MlpModel, Failure> {
    Ok(load_model(path)?)
}

pub fn stats(ctx: &Context) -> Result<(), Failure> {
    let ds = ctx.dataset()?;
    let stats = compute_stats(&ds)?;
    let mut table = String::from("variable,unit,count,min,max,mean,std\n");
    for (var, s) in &stats.variables {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            var,
            var.unit(),
            stats.count,
            format_value(s.min),
            format_value(s.max),
            format_value(s.mean),
            format_value(s.std)
        ));
    }
    print!("{table}");
    ctx.write_csv("stats.csv", &table)?;
    ctx.write_json(
        "stats.json",
        serde_json::to_value(&stats).expect("stats serialize"),
    )?;
    Ok(())
}

pub fn synth(mut ctx: Context, years: Option<usize>) -> Result<(), Failure> {
    if let Some(y) = years {
        ctx.cfg.synth_years = y;
    }
    let ds = dataset::synthesize_with(
        &FeatureStats::reference(),
        ctx.cfg.synth_years,
        ctx.cfg.seed(),
        &SynthConfig::default(),
    )?;
    let path = ctx.write(
        "synthetic.csv",
        &to_csv_string(&ds, Some(&ctx.csv_comment())),
    )?;
    println!("{}", path.display());
    Ok(())
}

pub fn train(
    mut ctx: Context,
    target: &str,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
) -> Result<(), Failure> {
    let target = Variable::from_str(target)?;
    let (inputs, train_cfg) = match target {
        Variable::H => (&LEVEL_INPUTS, &mut ctx.cfg.pipeline.model_i),
        Variable::R => (&RUNOFF_INPUTS, &mut ctx.cfg.pipeline.model_ii),
        other => {
            return Err(Failure::Input(format!(
                "unsupported target {other}: use H (Model I) or R (Model II)"
            )))
        }
    };
    if let Some(e) = epochs {
        train_cfg.epochs = e;
    }
    if let Some(lr) = learning_rate {
        train_cfg.learning_rate = lr;
    }
    let train_cfg = train_cfg.clone();
    let ds = ctx.dataset()?;
    let scaler = pipeline::fit_pipeline_scaler(&ds)?;
    let (model, report) = pipeline::train_surrogate(
        &ds,
        &scaler,
        inputs,
        target,
        &ctx.cfg.pipeline.hidden_sizes,
        &train_cfg,
    )?;

    ctx.write(
        "model.json",
        &(model_to_json_with(&model, ctx.generated_by()) + "\n"),
    )?;
    ctx.write_json(
        "train_report.json",
        json!({
            "target": target.name(),
            "inputs": inputs.iter().map(|v| v.name()).collect::<Vec<_>>(),
            "train_mse": report.train_mse,
            "validation_mse": report.validation_mse,
            "validation_r2": report.validation_r2,
            "epochs_run": report.epochs_run,
            "best_epoch": report.best_epoch,
        }),
    )?;
    let mut loss = String::from("epoch,train_loss,validation_loss\n");
    for (k, (t, v)) in report
        .train_loss
        .iter()
        .zip(&report.validation_loss)
        .enumerate()
    {
        loss.push_str(&format!("{k},{t:e},{v:e}\n"));
    }
    ctx.write_csv("loss.csv", &loss)?;
    match report.validation_r2 {
        Some(r2) => println!("validation R2 {r2:.4} after {} epochs", report.epochs_run),
        None => println!("validation R2 undefined (constant held-out targets)"),
    }
    Ok(())
}

pub fn sensitivity(
    ctx: &Context,
    model_path: &Path,
    method: SensitivityMethod,
) -> Result<(), Failure> {
    let m = model(model_path)?;
    let cfg = &ctx.cfg.pipeline;
    match method {
        SensitivityMethod::Both => {
            let out = analyze_model(&m, cfg)?;
            ctx.write_json("sobol.json", sensitivity::sobol_json(&out.sobol))?;
            ctx.write_json(
                "morris.json",
                sensitivity::morris_json(&out.morris, &out.classification),
            )?;
            ctx.write_json(
                "ranking.json",
                serde_json::to_value(&out.ranking).expect("ranking serializes"),
            )?;
            println!("ranking {:?}", out.ranking.order);
        }
        SensitivityMethod::Sobol => {
            let f = |x: &[f64]| m.forward_unchecked(x);
            let r = sobol_converge(&f, m.n_inputs(), &cfg.sobol, cfg.sobol_seed)
                .map_err(lakeopt_core::Error::from)?
                .with_names(m.input_names());
            ctx.write_json("sobol.json", sensitivity::sobol_json(&r))?;
        }
        SensitivityMethod::Morris => {
            let f = |x: &[f64]| m.forward_unchecked(x);
            let d = morris_trajectories(
                m.n_inputs(),
                cfg.morris.levels,
                cfg.morris.trajectories,
                cfg.morris.seed,
            )?;
            let r = elementary_effects(&f, &d, false)?.with_names(m.input_names());
            let classes = classify_factors(&r, ClassThresholds::defaults(&r))?;
            ctx.write_json("morris.json", sensitivity::morris_json(&r, &classes))?;
        }
    }
    Ok(())
}

fn parse_methods(tag: &str) -> Result<Vec<Method>, Failure> {
    if tag.eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    tag.split(',')
        .map(|t| Method::from_str(t).map_err(Failure::from))
        .collect()
}

pub fn optimize(mut ctx: Context, model_path: &Path, method: &str) -> Result<(), Failure> {
    ctx.cfg.pipeline.optimizers = parse_methods(method)?;
    let m = model(model_path)?;
    let ds = ctx.dataset()?;
    let scaler = pipeline::fit_pipeline_scaler(&ds)?;
    let plan = run_stage2(&m, &ds, &scaler, &ctx.cfg.pipeline)?;
    let seasonal = seasonal_multipliers(&plan)?;
    let agreement = if ctx.cfg.pipeline.optimizers.len() >= 2 {
        Some(agreement(&plan)?)
    } else {
        None
    };
    ctx.write_json(
        "plan.json",
        json!({
            "monthly": plan_json(&plan),
            "seasonal": seasonal,
            "agreement": agreement,
        }),
    )?;
    ctx.write_csv("plan.csv", &plan_csv(&plan))?;
    println!(
        "filling x{:.3}, draining x{:.3}",
        seasonal.filling, seasonal.draining
    );
    Ok(())
}

pub fn pipeline(ctx: &Context) -> Result<(), Failure> {
    let ds = ctx.dataset()?;
    let report = run_pipeline(&ds, &ctx.cfg.pipeline)?;
    ctx.write_json("plan.json", report.to_json())?;
    ctx.write_csv("plan.csv", &plan_csv(&report.plan))?;
    ctx.write(
        "model_i.json",
        &(model_to_json_with(&report.stage1.model, ctx.generated_by()) + "\n"),
    )?;
    ctx.write(
        "model_ii.json",
        &(model_to_json_with(&report.model_ii, ctx.generated_by()) + "\n"),
    )?;
    println!(
        "ranking {:?}; filling x{:.3}, draining x{:.3}",
        report.stage1.sensitivity.ranking.order, report.seasonal.filling, report.seasonal.draining
    );
    Ok(())
}

pub fn surface(
    mut ctx: Context,
    model_path: &Path,
    var_i: &str,
    var_j: &str,
    resolution: Option<usize>,
    fixed: Option<f64>,
) -> Result<(), Failure> {
    if let Some(r) = resolution {
        ctx.cfg.surface_resolution = r;
    }
    if let Some(f) = fixed {
        ctx.cfg.surface_fixed_value = f;
    }
    let m = model(model_path)?;
    let n = ctx.cfg.surface_resolution;
    let grid = m.response_surface_grid(var_i, var_j, ctx.cfg.surface_fixed_value, n)?;
    let mut body = format!("{var_i},{var_j},{}\n", m.output_name());
    for (a, row) in grid.iter().enumerate() {
        for (b, y) in row.iter().enumerate() {
            let (xi, xj) = (a as f64 / (n - 1) as f64, b as f64 / (n - 1) as f64);
            body.push_str(&format!("{xi:e},{xj:e},{y:e}\n"));
        }
    }
    ctx.write_csv("surface.csv", &body)?;
    Ok(())
}
