use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nepdf_core::eval::{
    accuracy, baseline_scores, headline_metric, run_benchmark, score, train_models, Aggregate, EvalMode, EvalReport,
    FoldReport, Models, ReportConfig, ScoredPair,
};
use nepdf_core::nepdf::{augment_with_transposes, build_dataset_with, Label, LabeledNepdf, NepdfOptions, PairSample};
use nepdf_core::net::{gradcheck, load_model, save_model, EpochStats, GradcheckOptions, GradcheckReport, Network, Task};
use nepdf_core::simgen::{gen_synthetic_pairs_with, simulate_systems};
use nepdf_core::Exec;
use serde::Serialize;

use crate::cli::{
    BenchmarkArgs, Cli, Command, ConvertArgs, EvalArgs, GradcheckArgs, SimulateArgs, SynthArgs, TrainArgs, TrainOverrides,
};
use crate::config::{RunConfig, SimulateConfig};
use crate::dataset::{convert_tuebingen, dataset_digest, read_dataset, write_dataset};
use crate::{OutputLock, UsageError};

const THREADS_VAR: &str = "NEPDF_THREADS";

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| UsageError(format!("{THREADS_VAR} must be a nonnegative integer, got {v:?}")))?;
    #[cfg(feature = "parallel")]
    if n > 0 {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Synth(a) => synth(&a),
        Command::Convert(a) => convert(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a).map(|_| ()),
        Command::Benchmark(a) => benchmark(&a).map(|_| ()),
        Command::Gradcheck(a) => gradcheck_cmd(&a).map(|_| ()),
    }
}

fn label_counts(pairs: &[PairSample]) -> String {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for p in pairs {
        *counts.entry(p.label.as_i64()).or_default() += 1;
    }
    counts.iter().rev().map(|(l, c)| format!("label {l}: {c}")).collect::<Vec<_>>().join(", ")
}

fn write_pairs(out: &Path, pairs: &[PairSample], digest: &str) -> Result<()> {
    let _lock = OutputLock::for_file(out)?;
    write_dataset(out, pairs, digest)?;
    println!("wrote {} pairs to {} ({})", pairs.len(), out.display(), label_counts(pairs));
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(a.config.as_deref())?;
    let base = match (cfg.simulate, a.structure) {
        (Some(s), _) => s,
        (None, Some(structure)) => SimulateConfig {
            structure,
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            steps: 1000,
            burn_in: 0,
            systems: 2000,
            lag: 0,
        },
        (None, None) => return Err(UsageError("--structure is required without a simulate config section".into()).into()),
    };
    let sim = SimulateConfig {
        structure: a.structure.unwrap_or(base.structure),
        alpha: a.alpha.unwrap_or(base.alpha),
        beta: a.beta.unwrap_or(base.beta),
        gamma: a.gamma.unwrap_or(base.gamma),
        steps: a.steps.unwrap_or(base.steps),
        burn_in: a.burn_in.unwrap_or(base.burn_in),
        systems: a.systems.unwrap_or(base.systems),
        lag: a.lag.unwrap_or(base.lag),
    };
    cfg.simulate = Some(sim);
    cfg.data = None;
    cfg.synth = None;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let pairs = simulate_systems(&sim.params(cfg.seed), sim.systems, sim.lag, Exec::default())?;
    write_pairs(&a.out, &pairs, &cfg.digest())
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(a.config.as_deref())?;
    let mut s = cfg.synth.unwrap_or_default();
    if let Some(n) = a.n {
        s.n_samples = n;
    }
    if let Some(seed) = a.seed {
        s.seed = seed;
        cfg.seed = seed;
    }
    cfg.synth = Some(s);
    cfg.data = None;
    cfg.simulate = None;
    cfg.validate()?;
    let pairs = gen_synthetic_pairs_with(&s, Exec::default())?;
    write_pairs(&a.out, &pairs, &cfg.digest())
}

pub fn convert(a: &ConvertArgs) -> Result<()> {
    let dir = match &a.dir {
        Some(d) => d.clone(),
        None => a.meta.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    let (pairs, skipped) = convert_tuebingen(&a.meta, &dir)?;
    if pairs.is_empty() {
        bail!("{}: no two-column pairs found", a.meta.display());
    }
    if !skipped.is_empty() {
        println!("skipped {} multivariate entries: {}", skipped.len(), skipped.join(" "));
    }
    let digest = dataset_digest(&pairs)?;
    write_pairs(&a.out, &pairs, &digest)
}

fn apply_overrides(cfg: &mut RunConfig, o: &TrainOverrides) {
    if let Some(d) = &o.data {
        cfg.data = Some(d.clone());
        cfg.simulate = None;
        cfg.synth = None;
    }
    if let Some(m) = o.mode {
        cfg.eval.mode = m.into();
    }
    if let Some(e) = o.epochs {
        cfg.net.train.epochs = e;
    }
    if let Some(lr) = o.learning_rate {
        cfg.net.train.learning_rate = lr;
    }
    if let Some(b) = o.batch_size {
        cfg.net.train.batch_size = b;
    }
    if let Some(k) = o.k {
        cfg.nepdf.k = k;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(aug) = o.augment {
        cfg.eval.augment = aug;
    }
}

fn effective_config(o: &TrainOverrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load_or_default(o.config.as_deref())?;
    apply_overrides(&mut cfg, o);
    cfg.validate()?;
    Ok(cfg)
}

/// Pairs from the configured source and the digest of their file form.
pub fn load_pairs(cfg: &RunConfig) -> Result<(Vec<PairSample>, String)> {
    let pairs = if let Some(path) = &cfg.data {
        read_dataset(path)?.pairs
    } else if let Some(sim) = &cfg.simulate {
        simulate_systems(&sim.params(cfg.seed), sim.systems, sim.lag, Exec::default())?
    } else if let Some(s) = &cfg.synth {
        gen_synthetic_pairs_with(s, Exec::default())?
    } else {
        return Err(UsageError("no data source: pass --data or add data, simulate or synth to the config".into()).into());
    };
    let digest = dataset_digest(&pairs)?;
    Ok((pairs, digest))
}

fn entries(pairs: &[PairSample], opts: &NepdfOptions, augment: bool) -> Result<Vec<LabeledNepdf>> {
    let base = build_dataset_with(pairs, opts, Exec::default())?;
    Ok(if augment { augment_with_transposes(&base) } else { base })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn model_paths(model: &Path) -> (PathBuf, PathBuf) {
    (with_suffix(model, ".causal"), with_suffix(model, ".ind"))
}

fn write_history(path: &Path, histories: &[(&str, &[EpochStats])], digest: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["network", "epoch", "train_loss", "val_loss", "val_accuracy"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (name, hist) in histories {
        for e in *hist {
            w.write_record([
                name.to_string(),
                e.epoch.to_string(),
                e.train_loss.to_string(),
                opt(e.val_loss),
                opt(e.val_accuracy),
            ])?;
        }
    }
    let mut bytes = format!("# config_digest: {digest}\n").into_bytes();
    bytes.extend(w.into_inner()?);
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let cfg = effective_config(&a.common)?;
    let (pairs, data_digest) = load_pairs(&cfg)?;
    let setup = cfg.setup(data_digest);
    let data = entries(&pairs, &cfg.nepdf, cfg.eval.augment)?;
    let (models, histories) = train_models(&data, &setup, Exec::default())?;

    let _lock = OutputLock::for_file(&a.model)?;
    let history_path = with_suffix(&a.model, ".history.csv");
    match &models {
        Models::Single(net) => {
            save_model(net, &a.model)?;
            write_history(&history_path, &[("main", &histories[0])], &setup.config_digest)?;
            println!("wrote {} ({} parameters, {} epochs)", a.model.display(), net.n_params(), histories[0].len());
        }
        Models::Dual { causal, ind } => {
            let (pc, pi) = model_paths(&a.model);
            save_model(causal, &pc)?;
            save_model(ind, &pi)?;
            write_history(&history_path, &[("causal", &histories[0]), ("ind", &histories[1])], &setup.config_digest)?;
            println!("wrote {} and {}", pc.display(), pi.display());
        }
    }
    Ok(())
}

pub fn load_models(model: &Path) -> Result<Models> {
    if model.exists() {
        let net: Network<f32> = load_model(model).with_context(|| format!("loading {}", model.display()))?;
        return Ok(Models::Single(net));
    }
    let (pc, pi) = model_paths(model);
    if pc.exists() && pi.exists() {
        let causal = load_model(&pc).with_context(|| format!("loading {}", pc.display()))?;
        let ind = load_model(&pi).with_context(|| format!("loading {}", pi.display()))?;
        return Ok(Models::Dual { causal, ind });
    }
    bail!("model file {} not found (nor {} and {})", model.display(), pc.display(), pi.display())
}

fn mode_of(models: &Models) -> Result<EvalMode> {
    match models {
        Models::Dual { .. } => Ok(EvalMode::Chalearn),
        Models::Single(net) => match net.task() {
            Task::ThreeClass => Ok(EvalMode::ThreeClass),
            Task::Direction => Ok(EvalMode::Binary),
            Task::Dependence => Err(UsageError("a lone dependence model cannot be evaluated".into()).into()),
        },
    }
}

fn primary(models: &Models) -> &Network<f32> {
    match models {
        Models::Single(n) => n,
        Models::Dual { causal, .. } => causal,
    }
}

pub fn write_scores(path: &Path, scores: &[ScoredPair], digest: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "true_label", "score_causal", "y_ind", "y_pred"])?;
    for s in scores {
        w.write_record([
            s.id.clone(),
            s.true_label.to_string(),
            s.score_causal.to_string(),
            s.y_ind.to_string(),
            s.y_pred.to_string(),
        ])?;
    }
    let mut bytes = format!("# config_digest: {digest}\n").into_bytes();
    bytes.extend(w.into_inner()?);
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn eval(a: &EvalArgs) -> Result<EvalReport> {
    let models = load_models(&a.model)?;
    let mode = mode_of(&models)?;
    let net = primary(&models);
    if let Models::Dual { ind, .. } = &models {
        if ind.meta.nepdf != net.meta.nepdf {
            bail!("causal and dependence models were built with different matrix options");
        }
    }
    let opts = net.meta.nepdf;
    let file = read_dataset(&a.data)?;
    let pairs = file.pairs;
    if pairs.is_empty() {
        return Err(nepdf_core::Error::EmptyDataset.into());
    }
    let data = entries(&pairs, &opts, a.augment)?;
    let scores = score(&models, &data, Exec::default())?;

    let predicted: Vec<Label> = scores.iter().map(|s| s.predicted).collect();
    let truth: Vec<Label> = scores.iter().map(|s| s.true_label).collect();
    let weights: Vec<f64> = scores.iter().map(|s| s.weight).collect();
    let metric = headline_metric(mode, &scores).with_context(|| format!("computing {}", mode.metric_name()))?;
    let acc = accuracy(&predicted, &truth)?;
    let wacc = nepdf_core::eval::weighted_accuracy(&predicted, &truth, &weights)?;
    let refs: Vec<&PairSample> = pairs.iter().collect();
    let baselines = baseline_scores(&refs, &opts, nepdf_core::eval::DEFAULT_FIT_DEGREE, a.augment, Exec::default());

    let report = EvalReport {
        config: ReportConfig {
            mode,
            metric: mode.metric_name().to_string(),
            folds: 1,
            augment: a.augment,
            seed: net.seed(),
            nepdf: opts,
            arch: net.specs().iter().map(ToString::to_string).collect(),
            train: None,
            n_pairs: pairs.len(),
            config_digest: net.meta.provenance.clone(),
            dataset_digest: dataset_digest(&pairs)?,
        },
        folds: vec![FoldReport {
            fold: 0,
            auroc: metric,
            accuracy: acc,
            weighted_accuracy: wacc,
            n_train: 0,
            n_test: scores.len(),
            epochs_run: 0,
            baselines,
        }],
        aggregate: Aggregate {
            mean_auroc: metric,
            std_auroc: 0.0,
            mean_accuracy: acc,
            std_accuracy: 0.0,
            mean_weighted_accuracy: wacc,
            std_weighted_accuracy: 0.0,
            baselines,
        },
    };

    let _lock = OutputLock::for_file(&a.out)?;
    let scores_path = a.scores.clone().unwrap_or_else(|| a.out.with_extension("scores.csv"));
    write_json(&a.out, &report)?;
    write_scores(&scores_path, &scores, &report.config.config_digest)?;
    println!(
        "{}: {} {metric:.4}, accuracy {acc:.4}, weighted accuracy {wacc:.4}",
        a.data.display(),
        mode.metric_name()
    );
    Ok(report)
}

/// One `(alpha, beta, gamma)` benchmark cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
}

impl GridCell {
    pub fn name(&self) -> String {
        match self.gamma {
            Some(g) => format!("a{}_b{}_g{}", self.alpha, self.beta, g),
            None => format!("a{}_b{}", self.alpha, self.beta),
        }
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<GridCell>, UsageError> {
    let cells: Result<Vec<GridCell>, UsageError> = text
        .split(';')
        .filter(|c| !c.trim().is_empty())
        .map(|cell| {
            let vals: Result<Vec<f64>, _> = cell.split(',').map(|v| v.trim().parse::<f64>()).collect();
            match vals.as_deref() {
                Ok([a, b]) => Ok(GridCell { alpha: *a, beta: *b, gamma: None }),
                Ok([a, b, g]) => Ok(GridCell { alpha: *a, beta: *b, gamma: Some(*g) }),
                _ => Err(UsageError(format!("bad grid cell {cell:?}; expected alpha,beta[,gamma]"))),
            }
        })
        .collect();
    let cells = cells?;
    if cells.is_empty() {
        return Err(UsageError("grid has no cells".into()));
    }
    Ok(cells)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}

/// Runs every cell and returns `(cell name, report)` pairs. The cell name is
/// empty without a grid.
pub fn benchmark(a: &BenchmarkArgs) -> Result<Vec<(String, EvalReport)>> {
    let mut cfg = effective_config(&a.common)?;
    if let Some(f) = a.folds {
        cfg.eval.folds = f;
    }
    if let Some(d) = &a.out_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;

    let cells: Vec<Option<GridCell>> = match &a.grid {
        None => vec![None],
        Some(g) => {
            if cfg.simulate.is_none() {
                return Err(UsageError("--grid needs a simulate section in the config".into()).into());
            }
            parse_grid(g)?.into_iter().map(Some).collect()
        }
    };

    let _lock = OutputLock::acquire(&cfg.output_dir)?;
    let mut out = Vec::new();
    for cell in cells {
        let mut c = cfg.clone();
        let name = match cell {
            Some(cell) => {
                let sim = c.simulate.as_mut().expect("checked above");
                sim.alpha = cell.alpha;
                sim.beta = cell.beta;
                if let Some(g) = cell.gamma {
                    sim.gamma = g;
                }
                c.validate()?;
                cell.name()
            }
            None => String::new(),
        };
        let (pairs, data_digest) = load_pairs(&c)?;
        let result = run_benchmark(&pairs, &c.setup(data_digest), Exec::default())?;
        let suffix = if name.is_empty() { String::new() } else { format!("_{name}") };
        write_json(&c.output_dir.join(format!("report{suffix}.json")), &result.report)?;
        write_scores(&c.output_dir.join(format!("scores{suffix}.csv")), &result.scores, &result.report.config.config_digest)?;
        let agg = &result.report.aggregate;
        println!(
            "{}{}: {} {:.4} ± {:.4}, accuracy {:.4}; baselines pearson {} mi {} fit {}",
            if name.is_empty() { "benchmark" } else { "cell " },
            name,
            result.report.config.metric,
            agg.mean_auroc,
            agg.std_auroc,
            agg.mean_accuracy,
            fmt_opt(agg.baselines.pearson_auroc),
            fmt_opt(agg.baselines.mi_auroc),
            fmt_opt(agg.baselines.bivariate_fit_auroc),
        );
        out.push((name, result.report));
    }
    Ok(out)
}

pub fn gradcheck_cmd(a: &GradcheckArgs) -> Result<GradcheckReport> {
    let opts = GradcheckOptions { seed: a.seed, corrupt: a.corrupt.clone(), ..Default::default() };
    let report = gradcheck(&opts)?;
    for arr in &report.arrays {
        println!(
            "{:<24} {:>6} params  max rel error {:.3e}  {}",
            arr.name,
            arr.len,
            arr.max_rel_error,
            if arr.passed { "ok" } else { "FAIL" }
        );
    }
    if !report.passed {
        let names: Vec<&str> = report.failing().map(|a| a.name.as_str()).collect();
        bail!("gradient check failed for {}", names.join(", "));
    }
    println!("gradient check passed");
    Ok(report)
}
