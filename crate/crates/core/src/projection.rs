//! Bilingual tanh projection trained with a cosine max-margin loss.
//!
//! Two affine maps followed by `tanh` place source vectors (dimension `e`) and
//! target vectors (dimension `f`) in a shared `d`-dimensional space. Training
//! uses sentence-average vectors of a parallel corpus: for each pair `(s, t)`
//! an unrelated target sentence `u` is drawn, and the loss
//! `max(0, m - cos(r_s, r_t) + cos(r_s, r_u))` is minimized with Adam. The
//! learned maps are then applied to individual word vectors.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::store::EmbeddingSpace;

/// Norms below this make [`cosine`] return 0.
pub const COSINE_NORM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionModel {
    /// `d × e`
    pub source_weights: Array2<f64>,
    pub source_bias: Array1<f64>,
    /// `d × f`
    pub target_weights: Array2<f64>,
    pub target_bias: Array1<f64>,
    pub margin: f64,
}

impl ProjectionModel {
    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(
        source_dim: usize,
        target_dim: usize,
        shared_dim: usize,
        margin: f64,
        seed: u64,
    ) -> Result<Self> {
        if source_dim == 0 || target_dim == 0 || shared_dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "projection dimensions must be positive, got e={source_dim} f={target_dim} d={shared_dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize| {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-a..=a))
        };
        let source_weights = uniform(shared_dim, source_dim);
        let target_weights = uniform(shared_dim, target_dim);
        Ok(Self {
            source_weights,
            source_bias: Array1::zeros(shared_dim),
            target_weights,
            target_bias: Array1::zeros(shared_dim),
            margin,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.source_weights.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.target_weights.ncols()
    }

    pub fn shared_dim(&self) -> usize {
        self.source_weights.nrows()
    }

    pub fn input_dim(&self, side: Side) -> usize {
        match side {
            Side::Source => self.source_dim(),
            Side::Target => self.target_dim(),
        }
    }

    fn layer(&self, side: Side) -> (&Array2<f64>, &Array1<f64>) {
        match side {
            Side::Source => (&self.source_weights, &self.source_bias),
            Side::Target => (&self.target_weights, &self.target_bias),
        }
    }

    /// `tanh(W x + b)` for the given side.
    pub fn project(&self, side: Side, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let expected = self.input_dim(side);
        if x.len() != expected {
            return Err(Error::dimension(
                format!("{side:?} projection input"),
                expected,
                x.len(),
            ));
        }
        Ok(self.forward(side, x))
    }

    fn forward(&self, side: Side, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let (w, b) = self.layer(side);
        (w.dot(&x) + b).mapv_into(f64::tanh)
    }

    /// Maps every word vector of `space` into the shared space.
    pub fn project_space(&self, side: Side, space: &EmbeddingSpace) -> Result<EmbeddingSpace> {
        let expected = self.input_dim(side);
        if space.dim() != expected {
            return Err(Error::dimension(
                format!("space `{}` for {side:?} projection", space.name()),
                expected,
                space.dim(),
            ));
        }
        let (w, b) = self.layer(side);
        let projected = (space.matrix().dot(&w.t()) + b).mapv_into(f64::tanh);
        let out = EmbeddingSpace::new(space.name(), space.words().to_vec(), projected)?;
        Ok(match space.language() {
            Some(lang) => out.with_language(lang),
            None => out,
        })
    }

    /// Hinge loss of one (sentence, translation, unrelated) triple.
    pub fn hinge_loss(
        &self,
        source: ArrayView1<'_, f64>,
        target: ArrayView1<'_, f64>,
        unrelated: ArrayView1<'_, f64>,
    ) -> f64 {
        let rs = self.forward(Side::Source, source);
        let rt = self.forward(Side::Target, target);
        let ru = self.forward(Side::Target, unrelated);
        (self.margin - cosine(rs.view(), rt.view()) + cosine(rs.view(), ru.view())).max(0.0)
    }

    /// Hinge loss and its gradient with respect to all parameters.
    pub fn hinge_loss_grad(
        &self,
        source: ArrayView1<'_, f64>,
        target: ArrayView1<'_, f64>,
        unrelated: ArrayView1<'_, f64>,
    ) -> (f64, ProjectionGrads) {
        let mut grads = ProjectionGrads::zeros_like(self);
        let loss = self.accumulate_grad(source, target, unrelated, 1.0, &mut grads);
        (loss, grads)
    }

    /// Adds `scale * dL/dθ` to `grads` and returns the loss.
    fn accumulate_grad(
        &self,
        xs: ArrayView1<'_, f64>,
        xt: ArrayView1<'_, f64>,
        xu: ArrayView1<'_, f64>,
        scale: f64,
        grads: &mut ProjectionGrads,
    ) -> f64 {
        let rs = self.forward(Side::Source, xs);
        let rt = self.forward(Side::Target, xt);
        let ru = self.forward(Side::Target, xu);
        let (cos_st, d_st_s, d_st_t) = cosine_grad(rs.view(), rt.view());
        let (cos_su, d_su_s, d_su_u) = cosine_grad(rs.view(), ru.view());
        let loss = self.margin - cos_st + cos_su;
        if loss <= 0.0 {
            return 0.0;
        }
        // back through tanh: dL/da = dL/dr * (1 - r^2)
        let tanh_back = |dr: Array1<f64>, r: &Array1<f64>| dr * &r.mapv(|v| 1.0 - v * v) * scale;
        let da_s = tanh_back(d_su_s - d_st_s, &rs);
        let da_t = tanh_back(-d_st_t, &rt);
        let da_u = tanh_back(d_su_u, &ru);

        outer_add(&mut grads.source_weights, &da_s, xs);
        grads.source_bias += &da_s;
        outer_add(&mut grads.target_weights, &da_t, xt);
        outer_add(&mut grads.target_weights, &da_u, xu);
        grads.target_bias += &da_t;
        grads.target_bias += &da_u;
        loss
    }

    pub fn is_finite(&self) -> bool {
        [&self.source_weights, &self.target_weights]
            .iter()
            .all(|w| w.iter().all(|v| v.is_finite()))
            && [&self.source_bias, &self.target_bias]
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()))
            && self.margin.is_finite()
    }
}

fn outer_add(acc: &mut Array2<f64>, left: &Array1<f64>, right: ArrayView1<'_, f64>) {
    for (mut row, &l) in acc.axis_iter_mut(Axis(0)).zip(left) {
        if l != 0.0 {
            row.scaled_add(l, &right);
        }
    }
}

/// Gradient of the hinge loss, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGrads {
    pub source_weights: Array2<f64>,
    pub source_bias: Array1<f64>,
    pub target_weights: Array2<f64>,
    pub target_bias: Array1<f64>,
}

impl ProjectionGrads {
    fn zeros_like(model: &ProjectionModel) -> Self {
        Self {
            source_weights: Array2::zeros(model.source_weights.raw_dim()),
            source_bias: Array1::zeros(model.source_bias.len()),
            target_weights: Array2::zeros(model.target_weights.raw_dim()),
            target_bias: Array1::zeros(model.target_bias.len()),
        }
    }
}

/// Cosine similarity; 0 when either norm is below [`COSINE_NORM_GUARD`].
pub fn cosine(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu < COSINE_NORM_GUARD || nv < COSINE_NORM_GUARD {
        return 0.0;
    }
    (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Cosine and its partial derivatives with respect to `u` and `v`.
fn cosine_grad(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> (f64, Array1<f64>, Array1<f64>) {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu < COSINE_NORM_GUARD || nv < COSINE_NORM_GUARD {
        return (0.0, Array1::zeros(u.len()), Array1::zeros(v.len()));
    }
    let c = u.dot(&v) / (nu * nv);
    let du = &v / (nu * nv) - &u * (c / (nu * nu));
    let dv = &u / (nu * nv) - &v * (c / (nv * nv));
    (c, du, dv)
}

/// Sentence-average vectors of aligned sentence pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCorpus {
    /// One source vector per row.
    pub source: Array2<f64>,
    /// One target vector per row, aligned with `source`.
    pub target: Array2<f64>,
}

impl ParallelCorpus {
    pub fn new(source: Array2<f64>, target: Array2<f64>) -> Result<Self> {
        if source.nrows() != target.nrows() {
            return Err(Error::dimension(
                "parallel corpus pairs",
                source.nrows(),
                target.nrows(),
            ));
        }
        if source.nrows() == 0 {
            return Err(Error::InvalidArgument("parallel corpus is empty".into()));
        }
        if source.ncols() == 0 || target.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "parallel corpus has zero-length vectors".into(),
            ));
        }
        if source.iter().chain(target.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "parallel corpus has non-finite values".into(),
            ));
        }
        Ok(Self { source, target })
    }

    pub fn len(&self) -> usize {
        self.source.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionTrainConfig {
    pub shared_dim: usize,
    pub margin: f64,
    /// Fraction of input entries zeroed during training.
    pub dropout: f64,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for ProjectionTrainConfig {
    fn default() -> Self {
        Self {
            shared_dim: 300,
            margin: 0.5,
            dropout: 0.5,
            adam: AdamConfig::default(),
            batch_size: 32,
            max_epochs: 100,
            seed: 0,
        }
    }
}

/// Mean losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean minibatch loss seen during the epoch, with dropout.
    pub train: f64,
    /// Mean loss of the end-of-epoch model over the whole corpus, without
    /// dropout, against a fixed set of unrelated sentences.
    pub eval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedProjection {
    pub model: ProjectionModel,
    /// `eval` loss of the initial model.
    pub initial_loss: f64,
    pub history: Vec<EpochLoss>,
}

impl TrainedProjection {
    /// Per-epoch mean evaluation loss.
    pub fn loss_history(&self) -> Vec<f64> {
        self.history.iter().map(|e| e.eval).collect()
    }
}

/// Trains a projection on `corpus`. Deterministic for a given config and seed.
pub fn train_projection(
    corpus: &ParallelCorpus,
    cfg: &ProjectionTrainConfig,
) -> Result<TrainedProjection> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "projection training needs at least 2 sentence pairs, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&cfg.dropout) {
        return Err(Error::InvalidArgument(format!(
            "dropout must be in [0, 1), got {}",
            cfg.dropout
        )));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut model = ProjectionModel::init(
        corpus.source.ncols(),
        corpus.target.ncols(),
        cfg.shared_dim,
        cfg.margin,
        cfg.seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut eval_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    eval_rng.set_stream(2);
    let eval_negatives = derangement(n, &mut eval_rng);
    let initial_loss = corpus_loss(&model, corpus, &eval_negatives);

    let mut states = [
        AdamState::new(model.source_weights.len()),
        AdamState::new(model.source_bias.len()),
        AdamState::new(model.target_weights.len()),
        AdamState::new(model.target_bias.len()),
    ];
    let keep = 1.0 - cfg.dropout;
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0u64;
    let mut history = Vec::with_capacity(cfg.max_epochs);
    let mut xs = Array1::zeros(corpus.source.ncols());
    let mut xt = Array1::zeros(corpus.target.ncols());
    let mut xu = Array1::zeros(corpus.target.ncols());

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let negatives = derangement(n, &mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = ProjectionGrads::zeros_like(&model);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                xs.assign(&corpus.source.row(i));
                xt.assign(&corpus.target.row(i));
                xu.assign(&corpus.target.row(negatives[i]));
                if cfg.dropout > 0.0 {
                    for x in [&mut xs, &mut xt, &mut xu] {
                        for v in x.iter_mut() {
                            *v = if rng.random::<f64>() < keep {
                                *v / keep
                            } else {
                                0.0
                            };
                        }
                    }
                }
                epoch_loss +=
                    model.accumulate_grad(xs.view(), xt.view(), xu.view(), scale, &mut grads);
            }
            step += 1;
            let params = [
                model.source_weights.as_slice_mut(),
                model.source_bias.as_slice_mut(),
                model.target_weights.as_slice_mut(),
                model.target_bias.as_slice_mut(),
            ];
            let grad_slices = [
                grads.source_weights.as_slice(),
                grads.source_bias.as_slice(),
                grads.target_weights.as_slice(),
                grads.target_bias.as_slice(),
            ];
            for ((p, g), state) in params.into_iter().zip(grad_slices).zip(states.iter_mut()) {
                let p = p.expect("owned parameters are contiguous");
                let g = g.expect("owned gradients are contiguous");
                adam_step(p, g, state, &cfg.adam, step);
            }
        }
        let eval = corpus_loss(&model, corpus, &eval_negatives);
        log::debug!(
            "projection epoch {epoch}: train {:.5} eval {eval:.5}",
            epoch_loss / n as f64
        );
        history.push(EpochLoss {
            epoch: epoch + 1,
            train: epoch_loss / n as f64,
            eval,
        });
    }
    Ok(TrainedProjection {
        model,
        initial_loss,
        history,
    })
}

fn corpus_loss(model: &ProjectionModel, corpus: &ParallelCorpus, negatives: &[usize]) -> f64 {
    let total: f64 = (0..corpus.len())
        .map(|i| {
            model.hinge_loss(
                corpus.source.row(i),
                corpus.target.row(i),
                corpus.target.row(negatives[i]),
            )
        })
        .sum();
    total / corpus.len() as f64
}

/// Uniformly shuffled permutation of `0..n` with every fixed point swapped
/// away, so no element maps to itself. Requires `n >= 2`.
fn derangement<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for i in 0..n {
        if perm[i] == i {
            perm.swap(i, (i + 1) % n);
        }
    }
    perm
}

const MODEL_KIND: &str = "pmean-projection";
const MODEL_VERSION: u32 = 1;

/// On-disk JSON form of a [`ProjectionModel`]; matrices are row-major.
#[derive(Debug, Serialize, Deserialize)]
struct ProjectionDoc {
    kind: String,
    version: u32,
    source_dim: usize,
    target_dim: usize,
    shared_dim: usize,
    margin: f64,
    source_weights: Vec<f64>,
    source_bias: Vec<f64>,
    target_weights: Vec<f64>,
    target_bias: Vec<f64>,
}

impl ProjectionModel {
    pub fn to_json(&self) -> String {
        let doc = ProjectionDoc {
            kind: MODEL_KIND.into(),
            version: MODEL_VERSION,
            source_dim: self.source_dim(),
            target_dim: self.target_dim(),
            shared_dim: self.shared_dim(),
            margin: self.margin,
            source_weights: self.source_weights.iter().copied().collect(),
            source_bias: self.source_bias.to_vec(),
            target_weights: self.target_weights.iter().copied().collect(),
            target_bias: self.target_bias.to_vec(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion {
                kind: MODEL_KIND,
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let doc: ProjectionDoc = serde_json::from_value(probe)?;
        if doc.kind != MODEL_KIND {
            return Err(Error::InvalidArgument(format!(
                "not a projection model: kind `{}`",
                doc.kind
            )));
        }
        let shape_err = |what: &str, expected: usize, found: usize| {
            Error::dimension(format!("projection {what}"), expected, found)
        };
        let (d, e, f) = (doc.shared_dim, doc.source_dim, doc.target_dim);
        let source_weights = Array2::from_shape_vec((d, e), doc.source_weights)
            .map_err(|_| shape_err("source weights", d * e, 0))?;
        let target_weights = Array2::from_shape_vec((d, f), doc.target_weights)
            .map_err(|_| shape_err("target weights", d * f, 0))?;
        if doc.source_bias.len() != d {
            return Err(shape_err("source bias", d, doc.source_bias.len()));
        }
        if doc.target_bias.len() != d {
            return Err(shape_err("target bias", d, doc.target_bias.len()));
        }
        let model = Self {
            source_weights,
            source_bias: Array1::from(doc.source_bias),
            target_weights,
            target_bias: Array1::from(doc.target_bias),
            margin: doc.margin,
        };
        if !model.is_finite() {
            return Err(Error::InvalidArgument(
                "projection model has non-finite parameters".into(),
            ));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
