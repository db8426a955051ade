use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::baselines::{bivariate_fit_score, mutual_information, pearson, DEFAULT_FIT_DEGREE};
use super::metrics::{accuracy, auroc, bidirectional_auroc, combine, mean_ovr_auroc, weighted_accuracy};
use super::split::kfold_split;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nepdf::{augment_with_transposes, build_dataset_with, build_epdf, Label, LabeledNepdf, NepdfOptions, PairSample};
use crate::net::{train, EpochStats, LayerSpec, Network, Sample, Task, TrainConfig};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// One network over {1, -1, 0}; scored by mean one-vs-rest AUROC.
    #[default]
    ThreeClass,
    /// One direction network over {1, -1}; scored by AUROC of P(label 1).
    Binary,
    /// A direction network and a dependence network combined into a signed
    /// score; scored by bidirectional AUROC.
    Chalearn,
}

impl EvalMode {
    pub fn metric_name(self) -> &'static str {
        match self {
            EvalMode::ThreeClass => "mean_ovr_auroc",
            EvalMode::Binary => "direction_auroc",
            EvalMode::Chalearn => "bidirectional_auroc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub folds: usize,
    pub mode: EvalMode,
    /// Add the transposed twin of every pair (label negated) on both sides of
    /// each split.
    pub augment: bool,
    /// Polynomial degree of the regression-fit baseline.
    pub fit_degree: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { folds: 5, mode: EvalMode::ThreeClass, augment: true, fit_degree: DEFAULT_FIT_DEGREE }
    }
}

/// Everything needed to train and score models.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSetup {
    pub nepdf: NepdfOptions,
    pub arch: Vec<LayerSpec>,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub seed: u64,
    /// Recorded in the report and in trained models.
    pub config_digest: String,
    pub dataset_digest: String,
}

/// Trained model(s) for one evaluation mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Models {
    Single(Network<f32>),
    Dual { causal: Network<f32>, ind: Network<f32> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPair {
    pub id: String,
    pub true_label: Label,
    /// Probability-like direction score; higher means `X -> Y`.
    pub score_causal: f64,
    /// Probability that the pair is dependent.
    pub y_ind: f64,
    pub y_pred: f64,
    pub predicted: Label,
    pub weight: f64,
    #[serde(skip)]
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineScores {
    pub pearson_auroc: Option<f64>,
    pub mi_auroc: Option<f64>,
    pub bivariate_fit_auroc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub auroc: f64,
    pub accuracy: f64,
    pub weighted_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs_run: usize,
    pub baselines: BaselineScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_auroc: f64,
    pub std_auroc: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_weighted_accuracy: f64,
    pub std_weighted_accuracy: f64,
    pub baselines: BaselineScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub mode: EvalMode,
    pub metric: String,
    pub folds: usize,
    pub augment: bool,
    pub seed: u64,
    pub nepdf: NepdfOptions,
    pub arch: Vec<String>,
    /// Absent when scoring previously trained models.
    pub train: Option<TrainConfig>,
    pub n_pairs: usize,
    pub config_digest: String,
    pub dataset_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub report: EvalReport,
    /// Test-side scores of every fold, in fold order.
    pub scores: Vec<ScoredPair>,
}

fn derived_seed(seed: u64, stream: u64) -> u64 {
    rng::stream(seed, stream).next_u64()
}

fn train_one(
    entries: &[&LabeledNepdf],
    task: Task,
    setup: &BenchmarkSetup,
    seed: u64,
    exec: Exec,
) -> Result<(Network<f32>, Vec<EpochStats>)> {
    let targets = entries.iter().map(|e| task.target(e.label)).collect::<Result<Vec<usize>>>()?;
    let samples: Vec<Sample> = entries
        .iter()
        .zip(&targets)
        .map(|(e, &target)| Sample { input: &e.matrix.values, target, group: &e.group })
        .collect();
    let mut net = Network::<f32>::new(setup.nepdf.k, task, Some(&setup.arch), seed)?;
    net.meta.nepdf = setup.nepdf;
    net.meta.provenance = setup.config_digest.clone();
    let cfg = TrainConfig { seed: derived_seed(seed, 1), ..setup.train };
    let history = train(&mut net, &samples, &cfg, exec)?;
    Ok((net, history))
}

/// Trains the model(s) for `setup.eval.mode` on already-prepared entries.
/// Returns one history per trained network.
pub fn train_models(entries: &[LabeledNepdf], setup: &BenchmarkSetup, exec: Exec) -> Result<(Models, Vec<Vec<EpochStats>>)> {
    let all: Vec<&LabeledNepdf> = entries.iter().collect();
    match setup.eval.mode {
        EvalMode::ThreeClass => {
            let (net, h) = train_one(&all, Task::ThreeClass, setup, setup.seed, exec)?;
            Ok((Models::Single(net), vec![h]))
        }
        EvalMode::Binary => {
            let (net, h) = train_one(&all, Task::Direction, setup, setup.seed, exec)?;
            Ok((Models::Single(net), vec![h]))
        }
        EvalMode::Chalearn => {
            let directed: Vec<&LabeledNepdf> = entries.iter().filter(|e| e.label.is_dependent()).collect();
            let (causal, hc) = train_one(&directed, Task::Direction, setup, setup.seed, exec)?;
            let (ind, hi) = train_one(&all, Task::Dependence, setup, derived_seed(setup.seed, 2), exec)?;
            Ok((Models::Dual { causal, ind }, vec![hc, hi]))
        }
    }
}

fn forward(net: &Network<f32>, entries: &[LabeledNepdf], exec: Exec) -> Result<Vec<Vec<f64>>> {
    let inputs: Vec<&[f64]> = entries.iter().map(|e| e.matrix.values.as_slice()).collect();
    net.forward_batch(&inputs, exec)
}

/// Scores prepared entries with trained models.
pub fn score(models: &Models, entries: &[LabeledNepdf], exec: Exec) -> Result<Vec<ScoredPair>> {
    let scored = |e: &LabeledNepdf, c: f64, y_ind: f64, predicted: Label, probs: Vec<f64>| -> Result<ScoredPair> {
        Ok(ScoredPair {
            id: e.id.clone(),
            true_label: e.label,
            score_causal: c,
            y_ind,
            y_pred: combine(c.clamp(0.0, 1.0), y_ind.clamp(0.0, 1.0))?,
            predicted,
            weight: e.weight,
            probs,
        })
    };
    match models {
        Models::Single(net) => {
            let probs = forward(net, entries, exec)?;
            entries
                .iter()
                .zip(probs)
                .map(|(e, p)| match net.task() {
                    Task::ThreeClass => {
                        let dep = p[0] + p[1];
                        let c = if dep > 0.0 { p[0] / dep } else { 0.5 };
                        let class = crate::net::argmax(&p);
                        scored(e, c, dep, Label::from_class_index(class).unwrap_or(Label::Independent), p)
                    }
                    Task::Direction => {
                        let predicted = if p[0] >= p[1] { Label::Causal } else { Label::Reverse };
                        scored(e, p[0], 1.0, predicted, p)
                    }
                    Task::Dependence => {
                        let predicted = if p[0] >= p[1] { Label::Causal } else { Label::Independent };
                        scored(e, 0.5, p[0], predicted, p)
                    }
                })
                .collect()
        }
        Models::Dual { causal, ind } => {
            let pc = forward(causal, entries, exec)?;
            let pi = forward(ind, entries, exec)?;
            entries
                .iter()
                .zip(pc.into_iter().zip(pi))
                .map(|(e, (c, i))| {
                    let (c, y_ind) = (c[0], i[0]);
                    let predicted = match (y_ind >= 0.5, c >= 0.5) {
                        (false, _) => Label::Independent,
                        (true, true) => Label::Causal,
                        (true, false) => Label::Reverse,
                    };
                    let probs = vec![y_ind * c, y_ind * (1.0 - c), 1.0 - y_ind];
                    scored(e, c, y_ind, predicted, probs)
                })
                .collect()
        }
    }
}

/// The mode's headline metric over scored pairs.
pub fn headline_metric(mode: EvalMode, scores: &[ScoredPair]) -> Result<f64> {
    let labels: Vec<Label> = scores.iter().map(|s| s.true_label).collect();
    match mode {
        EvalMode::ThreeClass => {
            let probs: Vec<Vec<f64>> = scores.iter().map(|s| s.probs.clone()).collect();
            mean_ovr_auroc(&probs, &labels)
        }
        EvalMode::Binary => {
            let directed: Vec<&ScoredPair> = scores.iter().filter(|s| s.true_label.is_dependent()).collect();
            let s: Vec<f64> = directed.iter().map(|s| s.score_causal).collect();
            let l: Vec<bool> = directed.iter().map(|s| s.true_label == Label::Causal).collect();
            auroc(&s, &l)
        }
        EvalMode::Chalearn => {
            let s: Vec<f64> = scores.iter().map(|s| s.y_pred).collect();
            bidirectional_auroc(&s, &labels)
        }
    }
}

fn baseline_auroc(scores: &[(f64, bool)]) -> Option<f64> {
    let s: Vec<f64> = scores.iter().map(|p| p.0).collect();
    let l: Vec<bool> = scores.iter().map(|p| p.1).collect();
    auroc(&s, &l).ok()
}

/// AUROCs of the classical baselines on a set of test pairs: |Pearson r| and
/// histogram mutual information as dependence scores (dependent vs
/// independent), and the regression-fit score as a direction score (label 1
/// vs label -1). `None` when the pairs lack one of the two sides. With
/// `augment`, each pair's axis-swapped twin is included.
pub fn baseline_scores(pairs: &[&PairSample], nepdf: &NepdfOptions, degree: usize, augment: bool, exec: Exec) -> BaselineScores {
    let per_pair = exec.map(pairs, |p| {
        let r = pearson(&p.x, &p.y).map(f64::abs).unwrap_or(0.0);
        let mi = build_epdf(p, nepdf.k, nepdf.log_space).and_then(|m| mutual_information(&m)).unwrap_or(0.0);
        let fit = bivariate_fit_score(p, degree).unwrap_or(0.0);
        (r, mi, fit)
    });
    let mut dep = Vec::new();
    let mut mi = Vec::new();
    let mut dir = Vec::new();
    for (p, &(r, m, f)) in pairs.iter().zip(&per_pair) {
        let copies: &[(f64, Label)] = if augment { &[(f, p.label), (-f, p.label.negate())] } else { &[(f, p.label)] };
        for &(fit, label) in copies {
            dep.push((r, label.is_dependent()));
            mi.push((m, label.is_dependent()));
            if label.is_dependent() {
                dir.push((fit, label == Label::Causal));
            }
        }
    }
    BaselineScores {
        pearson_auroc: baseline_auroc(&dep),
        mi_auroc: baseline_auroc(&mi),
        bivariate_fit_auroc: baseline_auroc(&dir),
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn mean_opt(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let all: Option<Vec<f64>> = v.collect();
    all.filter(|a| !a.is_empty()).map(|a| a.iter().sum::<f64>() / a.len() as f64)
}

fn side(dataset: &[LabeledNepdf], idx: &[usize], augment: bool) -> Vec<LabeledNepdf> {
    let picked: Vec<LabeledNepdf> = idx.iter().map(|&i| dataset[i].clone()).collect();
    if augment {
        augment_with_transposes(&picked)
    } else {
        picked
    }
}

/// Grouped k-fold cross-validation: build matrices, then per fold train on
/// the training side, score the test side and compute the mode's metric,
/// accuracy, weighted accuracy and the classical baselines.
pub fn run_benchmark(pairs: &[PairSample], setup: &BenchmarkSetup, exec: Exec) -> Result<BenchmarkOutput> {
    setup.train.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ev = setup.eval;
    let dataset = build_dataset_with(pairs, &setup.nepdf, exec)?;
    let groups: Vec<&str> = dataset.iter().map(|e| e.group.as_str()).collect();
    let folds = kfold_split(&groups, ev.folds, setup.seed)?;

    let mut reports = Vec::with_capacity(folds.len());
    let mut all_scores = Vec::new();
    for (f, fold) in folds.iter().enumerate() {
        let train_set = side(&dataset, &fold.train, ev.augment);
        let test_set = side(&dataset, &fold.test, ev.augment);
        let fold_setup = BenchmarkSetup { seed: derived_seed(setup.seed, 100 + f as u64), ..setup.clone() };
        let (models, histories) = train_models(&train_set, &fold_setup, exec)?;
        let scores = score(&models, &test_set, exec)?;

        let predicted: Vec<Label> = scores.iter().map(|s| s.predicted).collect();
        let truth: Vec<Label> = scores.iter().map(|s| s.true_label).collect();
        let weights: Vec<f64> = scores.iter().map(|s| s.weight).collect();
        let test_pairs: Vec<&PairSample> = fold.test.iter().map(|&i| &pairs[i]).collect();
        reports.push(FoldReport {
            fold: f,
            auroc: headline_metric(ev.mode, &scores)?,
            accuracy: accuracy(&predicted, &truth)?,
            weighted_accuracy: weighted_accuracy(&predicted, &truth, &weights)?,
            n_train: train_set.len(),
            n_test: test_set.len(),
            epochs_run: histories.iter().map(Vec::len).max().unwrap_or(0),
            baselines: baseline_scores(&test_pairs, &setup.nepdf, ev.fit_degree, ev.augment, exec),
        });
        all_scores.extend(scores);
    }

    let col = |g: fn(&FoldReport) -> f64| mean_std(&reports.iter().map(g).collect::<Vec<_>>());
    let (mean_auroc, std_auroc) = col(|r| r.auroc);
    let (mean_accuracy, std_accuracy) = col(|r| r.accuracy);
    let (mean_weighted_accuracy, std_weighted_accuracy) = col(|r| r.weighted_accuracy);
    let aggregate = Aggregate {
        mean_auroc,
        std_auroc,
        mean_accuracy,
        std_accuracy,
        mean_weighted_accuracy,
        std_weighted_accuracy,
        baselines: BaselineScores {
            pearson_auroc: mean_opt(reports.iter().map(|r| r.baselines.pearson_auroc)),
            mi_auroc: mean_opt(reports.iter().map(|r| r.baselines.mi_auroc)),
            bivariate_fit_auroc: mean_opt(reports.iter().map(|r| r.baselines.bivariate_fit_auroc)),
        },
    };
    let config = ReportConfig {
        mode: ev.mode,
        metric: ev.mode.metric_name().to_string(),
        folds: ev.folds,
        augment: ev.augment,
        seed: setup.seed,
        nepdf: setup.nepdf,
        arch: setup.arch.iter().map(LayerSpec::to_string).collect(),
        train: Some(setup.train),
        n_pairs: pairs.len(),
        config_digest: setup.config_digest.clone(),
        dataset_digest: setup.dataset_digest.clone(),
    };
    Ok(BenchmarkOutput { report: EvalReport { config, folds: reports, aggregate }, scores: all_scores })
}
