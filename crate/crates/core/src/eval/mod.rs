//! Monolingual and cross-lingual evaluation of sentence embeddings.
//!
//! Embeddings are probed with logistic regression under random subsample
//! validation. In transfer mode the classifier (and the optional z-norm) is
//! fitted on source-language training data only and then scored on the
//! target-language test set.

mod report;
mod task;

use std::sync::Arc;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

pub use report::{EvalReport, ReportCell, ReportFormat, ReportRow, Summary, REPORT_VERSION};
pub use task::{load_task, read_task, Item, TaskDataset, TransferPair};

use crate::classifier::{fit_subsample_runs, metric, EvalScore, RunFit, TrainProtocol};
use crate::error::{Error, Result};
use crate::par::Parallelism;
use crate::pmean::PValue;
use crate::pooling::{Embedder, PooledConfig};
use crate::store::EmbeddingSpace;

fn check_languages(embedder: &Embedder, ds: &TaskDataset) -> Result<()> {
    let Some(lang) = ds.language.as_deref() else {
        return Ok(());
    };
    for part in embedder.config.parts() {
        if let Some(space_lang) = part.space.language() {
            if space_lang != lang {
                return Err(Error::InvalidArgument(format!(
                    "space `{}` is `{space_lang}` but task `{}` is `{lang}`",
                    part.space.name(),
                    ds.name
                )));
            }
        }
    }
    Ok(())
}

fn embed_task(embedder: &Embedder, ds: &TaskDataset) -> Result<(Array2<f64>, Vec<usize>)> {
    check_languages(embedder, ds)?;
    let (x, stats) = embedder.embed_corpus(&ds.texts())?;
    if stats.undefined > 0 {
        log::debug!(
            "task `{}` with {}: {} undefined power-mean entries set to 0",
            ds.name,
            embedder.config,
            stats.undefined
        );
    }
    Ok((x, ds.labels()))
}

/// In-language score of `embedder` on `ds`.
pub fn evaluate_monolingual(
    embedder: &Embedder,
    ds: &TaskDataset,
    protocol: &TrainProtocol,
    znorm: bool,
) -> Result<EvalScore> {
    let ds = ds.canonical();
    let (x, y) = embed_task(embedder, &ds)?;
    crate::classifier::subsample_validate(x.view(), &y, &ds.classes, ds.metric, protocol, znorm)
}

/// Classifiers fitted on the source side of a transfer pair, one per run.
#[derive(Debug, Clone)]
pub struct SourceFit {
    pub runs: Vec<RunFit>,
    /// Canonical training task the runs index into.
    pub train: TaskDataset,
    pub train_x: Array2<f64>,
}

/// Fits the per-run classifiers on source-language data only.
pub fn fit_source(
    source: &Embedder,
    train: &TaskDataset,
    protocol: &TrainProtocol,
    znorm: bool,
) -> Result<SourceFit> {
    let train = train.canonical();
    let (train_x, y) = embed_task(source, &train)?;
    let runs = fit_subsample_runs(
        train_x.view(),
        &y,
        &train.classes,
        train.metric,
        protocol,
        znorm,
    )?;
    Ok(SourceFit {
        runs,
        train,
        train_x,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferScore {
    /// Target-language test score of the source-trained classifiers.
    pub cross: EvalScore,
    /// Held-out source-language score of the same classifiers.
    pub in_language: EvalScore,
    /// `in_language.mean - cross.mean`.
    pub drop: f64,
}

/// Trains on `pair.train` embedded with `source` and tests on `pair.test`
/// embedded with `target`.
///
/// Both embedders must share the same layout. The in-language score equals
/// [`evaluate_monolingual`] on `pair.train` with the same protocol.
pub fn evaluate_transfer(
    source: &Embedder,
    target: &Embedder,
    pair: &TransferPair,
    protocol: &TrainProtocol,
    znorm: bool,
) -> Result<TransferScore> {
    source.config.check_same_layout(&target.config)?;
    let fitted = fit_source(source, &pair.train, protocol, znorm)?;
    // canonical class order of the source side, which the models predict in
    let test = pair.test.align_classes(&pair.train.classes)?.canonical();
    debug_assert_eq!(test.classes, fitted.train.classes);
    let (test_x, test_y) = embed_task(target, &test)?;
    score_transfer(&fitted, &test_x, &test_y)
}

/// Scores fitted source runs on their held-out rows and on a target test set.
pub fn score_transfer(
    fitted: &SourceFit,
    test_x: &Array2<f64>,
    test_y: &[usize],
) -> Result<TransferScore> {
    let classes = fitted.train.classes.len();
    let kind = fitted.train.metric;
    let train_y = fitted.train.labels();
    let mut in_language = Vec::with_capacity(fitted.runs.len());
    let mut cross = Vec::with_capacity(fitted.runs.len());
    for run in &fitted.runs {
        let held_x = fitted.train_x.select(Axis(0), &run.test_indices);
        let held_y: Vec<usize> = run.test_indices.iter().map(|&i| train_y[i]).collect();
        in_language.push(metric(&held_y, &run.predict(held_x.view())?, classes, kind));
        cross.push(metric(test_y, &run.predict(test_x.view())?, classes, kind));
    }
    let in_language = EvalScore::from_runs(kind, in_language);
    let cross = EvalScore::from_runs(kind, cross);
    Ok(TransferScore {
        drop: in_language.mean - cross.mean,
        cross,
        in_language,
    })
}

/// A task of a report: monolingual, or transfer from one language to another.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalTask {
    Monolingual(TaskDataset),
    Transfer(TransferPair),
}

impl EvalTask {
    pub fn name(&self) -> &str {
        match self {
            Self::Monolingual(ds) => &ds.name,
            Self::Transfer(pair) => &pair.train.name,
        }
    }
}

/// A model row: embeds source-language text, and target-language text for
/// transfer tasks (defaults to the source embedder).
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub description: String,
    pub source: Embedder,
    pub target: Option<Embedder>,
}

impl ModelSpec {
    pub fn new(source: Embedder) -> Self {
        Self {
            description: source.config.describe(),
            source,
            target: None,
        }
    }

    pub fn with_target(mut self, target: Embedder) -> Self {
        self.target = Some(target);
        self
    }
}

fn evaluate_cell(
    model: &ModelSpec,
    task: &EvalTask,
    protocol: &TrainProtocol,
    znorm: bool,
) -> Result<ReportCell> {
    Ok(match task {
        EvalTask::Monolingual(ds) => {
            let score = evaluate_monolingual(&model.source, ds, protocol, znorm)?;
            ReportCell {
                task: ds.name.clone(),
                metric: ds.metric,
                in_language: score.mean,
                in_language_std: score.std,
                cross: None,
                cross_std: None,
                drop: None,
            }
        }
        EvalTask::Transfer(pair) => {
            let target = model.target.as_ref().unwrap_or(&model.source);
            let score = evaluate_transfer(&model.source, target, pair, protocol, znorm)?;
            ReportCell {
                task: pair.train.name.clone(),
                metric: pair.train.metric,
                in_language: score.in_language.mean,
                in_language_std: score.in_language.std,
                cross: Some(score.cross.mean),
                cross_std: Some(score.cross.std),
                drop: Some(score.drop),
            }
        }
    })
}

/// Evaluates every model on every task; cells are computed independently
/// and assembled in model and task order.
pub fn evaluate_models(
    models: &[ModelSpec],
    tasks: &[EvalTask],
    protocol: &TrainProtocol,
    znorm: bool,
    parallelism: Parallelism,
) -> Result<EvalReport> {
    if tasks.is_empty() {
        return Err(Error::InvalidArgument("no tasks to evaluate".into()));
    }
    let n_tasks = tasks.len();
    let cells = parallelism.map(models.len() * n_tasks, |k| {
        evaluate_cell(&models[k / n_tasks], &tasks[k % n_tasks], protocol, znorm)
    });
    let mut cells = cells.into_iter();
    let mut rows = Vec::with_capacity(models.len());
    for model in models {
        let row_cells = cells.by_ref().take(n_tasks).collect::<Result<Vec<_>>>()?;
        rows.push(ReportRow::new(
            &model.description,
            model.source.output_dim(),
            row_cells,
        ));
    }
    Ok(EvalReport::new(
        tasks.iter().map(|t| t.name().to_owned()).collect(),
        rows,
    ))
}

/// Evaluates one row per p-value set, each applied uniformly to the same
/// spaces. `target_spaces` embed the target side of transfer tasks and
/// default to `source_spaces` (shared bilingual spaces).
#[allow(clippy::too_many_arguments)]
pub fn sweep_pmeans(
    template: &Embedder,
    source_spaces: &[Arc<EmbeddingSpace>],
    target_spaces: Option<&[Arc<EmbeddingSpace>]>,
    p_sets: &[Vec<PValue>],
    tasks: &[EvalTask],
    protocol: &TrainProtocol,
    znorm: bool,
    parallelism: Parallelism,
) -> Result<EvalReport> {
    if tasks.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one task".into(),
        ));
    }
    let with_config = |config: PooledConfig| Embedder {
        config,
        ..template.clone()
    };
    let models = p_sets
        .iter()
        .map(|ps| {
            let source = with_config(PooledConfig::uniform(source_spaces, ps)?);
            let mut model = ModelSpec::new(source);
            model.description = format!("p={}", crate::pmean::format_p_list(ps));
            if let Some(targets) = target_spaces {
                model = model.with_target(with_config(PooledConfig::uniform(targets, ps)?));
            }
            Ok(model)
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_models(&models, tasks, protocol, znorm, parallelism)
}
