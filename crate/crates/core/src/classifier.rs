//! Multiclass logistic regression used as the probe for sentence embeddings.
//!
//! Models are trained with minibatched Adam; the learning rate is chosen on a
//! held-out validation split, and scores are averaged over repeated random
//! stratified train/test subsamples.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::par::Parallelism;
use crate::znorm::ZNorm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    MacroF1,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Accuracy => "accuracy",
            Self::MacroF1 => "macro_f1",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Self::Accuracy),
            "macro_f1" => Ok(Self::MacroF1),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

/// Scores predictions against gold class indices.
///
/// Macro-F1 averages over all `n_classes`, including classes that never
/// occur; a class with no true and no predicted instance contributes 0.
pub fn metric(y_true: &[usize], y_pred: &[usize], n_classes: usize, kind: MetricKind) -> f64 {
    assert_eq!(y_true.len(), y_pred.len(), "metric inputs differ in length");
    assert!(!y_true.is_empty(), "metric of an empty sample");
    match kind {
        MetricKind::Accuracy => {
            let correct = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
            correct as f64 / y_true.len() as f64
        }
        MetricKind::MacroF1 => {
            let mut tp = vec![0usize; n_classes];
            let mut fp = vec![0usize; n_classes];
            let mut fn_ = vec![0usize; n_classes];
            for (&t, &p) in y_true.iter().zip(y_pred) {
                if t == p {
                    tp[t] += 1;
                } else {
                    fp[p] += 1;
                    fn_[t] += 1;
                }
            }
            let f1_sum: f64 = (0..n_classes)
                .map(|c| {
                    let denom = 2 * tp[c] + fp[c] + fn_[c];
                    if denom == 0 {
                        0.0
                    } else {
                        (2 * tp[c]) as f64 / denom as f64
                    }
                })
                .sum();
            f1_sum / n_classes as f64
        }
    }
}

/// Softmax regression parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    /// `C × D`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl SoftmaxModel {
    pub fn zeros(classes: Vec<String>, dim: usize) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a classifier needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        Ok(Self {
            weights: Array2::zeros((classes.len(), dim)),
            bias: Array1::zeros(classes.len()),
            classes,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.bias
    }

    /// Index of the highest logit per row; ties go to the lower index.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        self.check_dim(x.ncols())?;
        Ok(self
            .logits(x)
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                        if v > best.1 {
                            (i, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect())
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found == self.dim() {
            Ok(())
        } else {
            Err(Error::dimension("classifier input", self.dim(), found))
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ClassifierDoc {
            kind: CLASSIFIER_KIND.into(),
            version: CLASSIFIER_VERSION,
            classes: self.classes.clone(),
            dim: self.dim(),
            weights: self.weights.iter().copied().collect(),
            bias: self.bias.to_vec(),
        };
        serde_json::to_string_pretty(&doc).expect("classifier document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != CLASSIFIER_VERSION {
            return Err(Error::UnsupportedVersion {
                kind: CLASSIFIER_KIND,
                found: version,
                expected: CLASSIFIER_VERSION,
            });
        }
        let doc: ClassifierDoc = serde_json::from_value(probe)?;
        let c = doc.classes.len();
        let weights = Array2::from_shape_vec((c, doc.dim), doc.weights)
            .map_err(|_| Error::dimension("classifier weights", c * doc.dim, 0))?;
        if doc.bias.len() != c {
            return Err(Error::dimension("classifier bias", c, doc.bias.len()));
        }
        let mut model = Self::zeros(doc.classes, doc.dim)?;
        model.weights = weights;
        model.bias = Array1::from(doc.bias);
        Ok(model)
    }
}

const CLASSIFIER_KIND: &str = "pmean-classifier";
const CLASSIFIER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ClassifierDoc {
    kind: String,
    version: u32,
    classes: Vec<String>,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Mean cross-entropy of `model` on `(x, y)` and its exact gradient.
pub fn softmax_xent(
    model: &SoftmaxModel,
    x: ArrayView2<'_, f64>,
    y: &[usize],
) -> Result<(f64, SoftmaxGrads)> {
    softmax_xent_l2(model, x, y, 0.0)
}

/// [`softmax_xent`] plus `l2 / 2 * |W|^2`.
pub fn softmax_xent_l2(
    model: &SoftmaxModel,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    l2: f64,
) -> Result<(f64, SoftmaxGrads)> {
    model.check_dim(x.ncols())?;
    if x.nrows() != y.len() {
        return Err(Error::dimension("classifier labels", x.nrows(), y.len()));
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "cross-entropy of an empty batch".into(),
        ));
    }
    let c = model.n_classes();
    if let Some(&bad) = y.iter().find(|&&label| label >= c) {
        return Err(Error::InvalidArgument(format!(
            "label index {bad} outside the {c} known classes"
        )));
    }
    let n = x.nrows() as f64;
    // probabilities, overwritten with (p - onehot) / n
    let mut delta = model.logits(x);
    let mut loss = 0.0;
    for (mut row, &label) in delta.axis_iter_mut(Axis(0)).zip(y) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let shifted = row[label] - max;
        row.mapv_inplace(|v| (v - max).exp());
        let z = row.sum();
        loss += z.ln() - shifted;
        row.mapv_inplace(|v| v / z / n);
        row[label] -= 1.0 / n;
    }
    loss /= n;
    let mut weights = delta.t().dot(&x);
    if l2 > 0.0 {
        loss += 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
        weights.scaled_add(l2, &model.weights);
    }
    let bias = delta.sum_axis(Axis(0));
    Ok((loss, SoftmaxGrads { weights, bias }))
}

/// Hyperparameters of the evaluation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainProtocol {
    /// Candidate Adam step sizes.
    pub lr_grid: Vec<f64>,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Random subsample runs.
    pub runs: usize,
    /// Fraction of each training subsample held out to choose the step size.
    pub val_fraction: f64,
    /// Fraction of the data held out for testing in each run.
    pub test_fraction: f64,
    pub l2: f64,
    pub seed: u64,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for TrainProtocol {
    fn default() -> Self {
        Self {
            lr_grid: vec![1e-1, 1e-2, 1e-3, 1e-4],
            batch_size: 32,
            max_epochs: 30,
            runs: 50,
            val_fraction: 0.1,
            test_fraction: 0.2,
            l2: 0.0,
            seed: 0,
            parallelism: Parallelism::default(),
        }
    }
}

impl TrainProtocol {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.lr_grid.is_empty() {
            return bad("learning-rate grid is empty".into());
        }
        if let Some(lr) = self
            .lr_grid
            .iter()
            .find(|lr| !(**lr > 0.0 && lr.is_finite()))
        {
            return bad(format!("learning rate {lr} is not positive"));
        }
        if self.batch_size == 0 || self.runs == 0 {
            return bad("batch size and run count must be positive".into());
        }
        for (name, f) in [
            ("validation", self.val_fraction),
            ("test", self.test_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name} fraction must be in (0, 1), got {f}"));
            }
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be non-negative, got {}", self.l2));
        }
        Ok(())
    }
}

/// Trains a softmax model with a fixed step size; returns it together with
/// the full-data training loss after every epoch.
pub fn train_softmax<R: Rng>(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    classes: &[String],
    step_size: f64,
    protocol: &TrainProtocol,
    rng: &mut R,
) -> Result<(SoftmaxModel, Vec<f64>)> {
    let mut model = SoftmaxModel::zeros(classes.to_vec(), x.ncols())?;
    model
        .weights
        .mapv_inplace(|_| rng.random_range(-0.01..0.01));
    let adam = AdamConfig::default().with_step_size(step_size);
    let mut w_state = AdamState::new(model.weights.len());
    let mut b_state = AdamState::new(model.bias.len());
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut history = Vec::with_capacity(protocol.max_epochs);
    let mut step = 0;
    for _ in 0..protocol.max_epochs {
        order.shuffle(rng);
        for batch in order.chunks(protocol.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (_, grads) = softmax_xent_l2(&model, xb.view(), &yb, protocol.l2)?;
            step += 1;
            adam_step(
                model.weights.as_slice_mut().expect("contiguous"),
                grads.weights.as_slice().expect("contiguous"),
                &mut w_state,
                &adam,
                step,
            );
            adam_step(
                model.bias.as_slice_mut().expect("contiguous"),
                grads.bias.as_slice().expect("contiguous"),
                &mut b_state,
                &adam,
                step,
            );
        }
        history.push(softmax_xent_l2(&model, x, y, protocol.l2)?.0);
    }
    Ok((model, history))
}

/// Splits indices per class so that each present class keeps at least one
/// item on both sides; returns `(kept, held_out)`, both sorted.
///
/// With `require_both` a class that cannot be split is an error naming it;
/// otherwise its items all stay on the kept side.
fn stratified_split<R: Rng>(
    y: &[usize],
    idx: &[usize],
    classes: &[String],
    fraction: f64,
    require_both: bool,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_class = vec![Vec::new(); classes.len()];
    for &i in idx {
        by_class[y[i]].push(i);
    }
    let (mut kept, mut held) = (Vec::new(), Vec::new());
    for (c, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            if require_both {
                return Err(Error::InvalidArgument(format!(
                    "class `{}` has {} item(s); stratified subsampling needs at least 2",
                    classes[c],
                    members.len()
                )));
            }
            kept.extend(members);
            continue;
        }
        members.shuffle(rng);
        let n = members.len();
        let mut n_held = (n as f64 * fraction).round() as usize;
        n_held = n_held.min(n - 1);
        if require_both {
            n_held = n_held.max(1);
        }
        held.extend_from_slice(&members[..n_held]);
        kept.extend_from_slice(&members[n_held..]);
    }
    kept.sort_unstable();
    held.sort_unstable();
    Ok((kept, held))
}

fn present_classes(y: &[usize], n_classes: usize) -> usize {
    let mut seen = vec![false; n_classes];
    for &label in y {
        seen[label] = true;
    }
    seen.into_iter().filter(|&s| s).count()
}

fn check_labels(y: &[usize], rows: usize, classes: &[String]) -> Result<()> {
    if y.len() != rows {
        return Err(Error::dimension("labels", rows, y.len()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= classes.len()) {
        return Err(Error::InvalidArgument(format!(
            "label index {bad} outside the {} known classes",
            classes.len()
        )));
    }
    if present_classes(y, classes.len()) < 2 {
        return Err(Error::InvalidArgument(
            "training data contains fewer than 2 classes".into(),
        ));
    }
    Ok(())
}

/// Trains one model per grid step size and keeps the one with the best
/// validation score; ties go to the smaller step size.
pub fn fit<R: Rng>(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    classes: &[String],
    metric_kind: MetricKind,
    protocol: &TrainProtocol,
    rng: &mut R,
) -> Result<SoftmaxModel> {
    protocol.validate()?;
    check_labels(y, x.nrows(), classes)?;
    let all: Vec<usize> = (0..x.nrows()).collect();
    let (train_idx, val_idx) =
        stratified_split(y, &all, classes, protocol.val_fraction, false, rng)?;
    let (train_idx, val_idx) = if val_idx.is_empty() {
        (train_idx.clone(), train_idx)
    } else {
        (train_idx, val_idx)
    };
    let xt = x.select(Axis(0), &train_idx);
    let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
    let xv = x.select(Axis(0), &val_idx);
    let yv: Vec<usize> = val_idx.iter().map(|&i| y[i]).collect();

    let cell_seed: u64 = rng.random();
    let cells = protocol.parallelism.map(protocol.lr_grid.len(), |k| {
        let mut cell_rng = ChaCha8Rng::seed_from_u64(cell_seed);
        cell_rng.set_stream(k as u64);
        let (model, _) = train_softmax(
            xt.view(),
            &yt,
            classes,
            protocol.lr_grid[k],
            protocol,
            &mut cell_rng,
        )?;
        let pred = model.predict(xv.view())?;
        Ok::<_, Error>((metric(&yv, &pred, classes.len(), metric_kind), model))
    });

    let mut best: Option<(f64, f64, SoftmaxModel)> = None;
    for (cell, &lr) in cells.into_iter().zip(&protocol.lr_grid) {
        let (score, model) = cell?;
        let better = match &best {
            None => true,
            Some((best_score, best_lr, _)) => {
                score > *best_score || (score == *best_score && lr < *best_lr)
            }
        };
        if better {
            best = Some((score, lr, model));
        }
    }
    Ok(best.expect("grid is non-empty").2)
}

/// Scores of one metric over the subsample runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    pub metric: MetricKind,
    pub mean: f64,
    /// Population standard deviation over runs.
    pub std: f64,
    pub per_run: Vec<f64>,
}

impl EvalScore {
    pub fn from_runs(metric: MetricKind, per_run: Vec<f64>) -> Self {
        let n = per_run.len().max(1) as f64;
        let mean = per_run.iter().sum::<f64>() / n;
        let std = (per_run.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self {
            metric,
            mean,
            std,
            per_run,
        }
    }
}

/// A classifier fitted on one run's training subsample.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFit {
    /// Statistics of the run's training rows, when standardization is on.
    pub znorm: Option<ZNorm>,
    pub model: SoftmaxModel,
    pub test_indices: Vec<usize>,
}

impl RunFit {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        match &self.znorm {
            Some(z) => self.model.predict(z.apply(x)?.view()),
            None => self.model.predict(x),
        }
    }
}

/// Generator of run `run` for a protocol seed.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Fits one classifier per subsample run.
///
/// Run `r` draws a stratified train/test split from its own generator, fits
/// the optional z-norm on the training rows only, and selects a model with
/// [`fit`].
pub fn fit_subsample_runs(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    classes: &[String],
    metric_kind: MetricKind,
    protocol: &TrainProtocol,
    znorm: bool,
) -> Result<Vec<RunFit>> {
    protocol.validate()?;
    check_labels(y, x.nrows(), classes)?;
    let all: Vec<usize> = (0..x.nrows()).collect();
    // fail early, outside the parallel loop
    stratified_split(
        y,
        &all,
        classes,
        protocol.test_fraction,
        true,
        &mut run_rng(protocol.seed, 0),
    )?;

    let inner = TrainProtocol {
        parallelism: Parallelism::Sequential,
        ..protocol.clone()
    };
    let runs = protocol.parallelism.map(protocol.runs, |r| {
        let mut rng = run_rng(protocol.seed, r);
        let (train_idx, test_idx) =
            stratified_split(y, &all, classes, protocol.test_fraction, true, &mut rng)?;
        let mut xt = x.select(Axis(0), &train_idx);
        let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
        let z = if znorm {
            let z = ZNorm::fit(xt.view())?;
            xt = z.apply(xt.view())?;
            Some(z)
        } else {
            None
        };
        let model = fit(xt.view(), &yt, classes, metric_kind, &inner, &mut rng)?;
        Ok(RunFit {
            znorm: z,
            model,
            test_indices: test_idx,
        })
    });
    runs.into_iter().collect()
}

/// Random subsample validation: mean and spread of held-out scores over
/// `protocol.runs` stratified splits.
pub fn subsample_validate(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    classes: &[String],
    metric_kind: MetricKind,
    protocol: &TrainProtocol,
    znorm: bool,
) -> Result<EvalScore> {
    let runs = fit_subsample_runs(x, y, classes, metric_kind, protocol, znorm)?;
    let scores = runs
        .iter()
        .map(|run| {
            let xt = x.select(Axis(0), &run.test_indices);
            let yt: Vec<usize> = run.test_indices.iter().map(|&i| y[i]).collect();
            Ok(metric(
                &yt,
                &run.predict(xt.view())?,
                classes.len(),
                metric_kind,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalScore::from_runs(metric_kind, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn metric_examples() {
        let t = [0, 0, 1, 1];
        assert_eq!(metric(&t, &t, 2, MetricKind::Accuracy), 1.0);
        assert_eq!(metric(&t, &t, 2, MetricKind::MacroF1), 1.0);
        let p = [0, 1, 1, 1];
        assert_eq!(metric(&t, &p, 2, MetricKind::Accuracy), 0.75);
        assert_abs_diff_eq!(
            metric(&t, &p, 2, MetricKind::MacroF1),
            (2.0 / 3.0 + 0.8) / 2.0,
            epsilon = 1e-15
        );
        let p = [1, 1, 1, 1];
        assert_eq!(metric(&t, &p, 2, MetricKind::Accuracy), 0.5);
        assert_abs_diff_eq!(
            metric(&t, &p, 2, MetricKind::MacroF1),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        // a third class that never occurs still counts in the mean
        assert_abs_diff_eq!(
            metric(&t, &t, 3, MetricKind::MacroF1),
            2.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn uniform_logits_loss_is_ln_c() {
        for c in 2..6 {
            let model = SoftmaxModel::zeros(labels(c), 3).unwrap();
            let x = array![[1.0, -2.0, 0.5], [0.0, 0.0, 3.0]];
            let (loss, _) = softmax_xent(&model, x.view(), &[0, c - 1]).unwrap();
            assert_abs_diff_eq!(loss, (c as f64).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn confident_fit_has_tiny_loss() {
        let mut model = SoftmaxModel::zeros(labels(2), 2).unwrap();
        model.weights = array![[20.0, 0.0], [0.0, 20.0]];
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let (loss, _) = softmax_xent(&model, x.view(), &[0, 1]).unwrap();
        assert!(loss < 1e-3);
    }

    #[test]
    fn unknown_label_is_an_error() {
        let model = SoftmaxModel::zeros(labels(2), 1).unwrap();
        assert!(softmax_xent(&model, array![[1.0]].view(), &[2]).is_err());
        assert!(SoftmaxModel::zeros(labels(1), 1).is_err());
    }

    #[test]
    fn large_logits_stay_finite() {
        let mut model = SoftmaxModel::zeros(labels(2), 1).unwrap();
        model.weights = array![[1e4], [-1e4]];
        let (loss, grads) = softmax_xent(&model, array![[1.0]].view(), &[1]).unwrap();
        assert_abs_diff_eq!(loss, 2e4, epsilon = 1e-6);
        assert!(grads.weights.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn single_class_fit_fails() {
        let x = array![[1.0], [2.0], [3.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(fit(
            x.view(),
            &[0, 0, 0],
            &labels(2),
            MetricKind::Accuracy,
            &TrainProtocol::default(),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn degenerate_stratification_names_class() {
        let x = array![[1.0], [2.0], [3.0]];
        let err = subsample_validate(
            x.view(),
            &[0, 0, 1],
            &labels(2),
            MetricKind::Accuracy,
            &TrainProtocol::default(),
            false,
        )
        .unwrap_err();
        assert!(err.to_string().contains("`c1`"), "{err}");
    }

    #[test]
    fn stratified_split_keeps_both_sides() {
        let y = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let idx: Vec<usize> = (0..y.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (kept, held) = stratified_split(&y, &idx, &labels(2), 0.2, true, &mut rng).unwrap();
        assert_eq!(kept.len() + held.len(), y.len());
        assert_eq!(held.iter().filter(|&&i| y[i] == 0).count(), 1);
        assert_eq!(held.iter().filter(|&&i| y[i] == 1).count(), 2);
    }

    #[test]
    fn eval_score_statistics() {
        let s = EvalScore::from_runs(MetricKind::Accuracy, vec![0.5, 1.0]);
        assert_eq!(s.mean, 0.75);
        assert_eq!(s.std, 0.25);
        let s = EvalScore::from_runs(MetricKind::Accuracy, vec![0.7]);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn protocol_validation() {
        let mut p = TrainProtocol::default();
        assert!(p.validate().is_ok());
        p.lr_grid.clear();
        assert!(p.validate().is_err());
        let p = TrainProtocol {
            val_fraction: 1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = TrainProtocol {
            lr_grid: vec![-1.0],
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let mut model = SoftmaxModel::zeros(labels(3), 2).unwrap();
        model.weights[[1, 0]] = 0.25;
        model.bias[2] = -1.5;
        assert_eq!(SoftmaxModel::from_json(&model.to_json()).unwrap(), model);
        let bumped = model.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(SoftmaxModel::from_json(&bumped).is_err());
    }
}
