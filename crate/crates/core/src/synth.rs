//! Seeded synthetic embedding spaces, tasks and parallel corpora.
//!
//! These fixtures have known structure (which pooling operator exposes the
//! label, how two languages relate), so evaluation behaviour can be checked
//! without pretrained embeddings or licensed corpora.

use ndarray::{Array1, Array2};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::classifier::MetricKind;
use crate::eval::TaskDataset;
use crate::projection::ParallelCorpus;
use crate::store::EmbeddingSpace;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    })
}

/// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> Array2<f64> {
    let mut q = gaussian_matrix(n, n, 1.0, rng);
    for i in 0..n {
        for j in 0..i {
            let proj = q.row(i).dot(&q.row(j));
            let qj = q.row(j).to_owned();
            q.row_mut(i).scaled_add(-proj, &qj);
        }
        let norm = q.row(i).dot(&q.row(i)).sqrt();
        q.row_mut(i).mapv_inplace(|v| v / norm);
    }
    q
}

/// Two classes in the plane separated by a gap of `margin` along the first
/// axis; labels alternate 0, 1, 0, ...
pub fn blobs(n: usize, margin: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = rng(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let offset = rng.random_range(0.0..2.5);
        x[[i, 0]] = if label == 0 {
            -margin / 2.0 - offset
        } else {
            margin / 2.0 + offset
        };
        x[[i, 1]] = rng.random_range(-2.0..2.0);
        y.push(label);
    }
    (x, y)
}

/// `n` pairs with `e`-dimensional Gaussian sources and targets
/// `Q · source + noise` for a random orthogonal `Q`.
pub fn rotated_parallel_corpus(n: usize, dim: usize, noise: f64, seed: u64) -> ParallelCorpus {
    let mut rng = rng(seed);
    let q = random_orthogonal(dim, &mut rng);
    let source = gaussian_matrix(n, dim, 1.0, &mut rng);
    let target = source.dot(&q.t()) + gaussian_matrix(n, dim, noise, &mut rng);
    ParallelCorpus::new(source, target).expect("finite, aligned corpus")
}

fn words(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Two spaces over one vocabulary whose labels are visible to different
/// pooling operators, and a binary task mixing both label sources.
#[derive(Debug, Clone)]
pub struct Complementarity {
    /// Label of "mean" sentences lives in the mean of dimension 0.
    pub mean_space: EmbeddingSpace,
    /// Label of "max" sentences lives in the max of dimension 3; its mean
    /// carries no label information.
    pub max_space: EmbeddingSpace,
    pub task: TaskDataset,
}

/// Builds a [`Complementarity`] fixture.
///
/// Of `n_sentences`, a fraction `mean_fraction` are "mean" sentences made of
/// three polar words (dimension 0 of the mean space at ±2) and one filler.
/// The rest are "max" sentences: positives hold one peak word (dimension 3
/// of the max space at 1.5) and three troughs (-0.5), so their mean is 0;
/// negatives hold four flat words near 0. All other coordinates are
/// independent noise. The max space is multiplied by `max_scale`.
pub fn complementarity(
    n_sentences: usize,
    mean_fraction: f64,
    max_scale: f64,
    seed: u64,
) -> Complementarity {
    const DIM: usize = 16;
    const GROUP: usize = 500;
    let mut rng = rng(seed);
    let groups = ["apos", "aneg", "peak", "trough", "flat"];
    let vocab: Vec<String> = groups.iter().flat_map(|g| words(g, GROUP)).collect();
    let mut a = gaussian_matrix(vocab.len(), DIM, 0.5, &mut rng);
    let mut b = gaussian_matrix(vocab.len(), DIM, 0.5, &mut rng);
    for (row, word) in vocab.iter().enumerate() {
        a[[row, 0]] = if word.starts_with("apos") {
            2.0
        } else if word.starts_with("aneg") {
            -2.0
        } else {
            0.1 * rng.sample::<f64, _>(StandardNormal)
        };
        b[[row, 3]] = if word.starts_with("peak") {
            1.5
        } else if word.starts_with("trough") {
            -0.5
        } else {
            rng.random_range(-0.1..0.1)
        };
    }
    b.mapv_inplace(|v| v * max_scale);

    let group =
        |name: &str| -> Vec<&String> { vocab.iter().filter(|w| w.starts_with(name)).collect() };
    let (apos, aneg, peak, trough, flat) = (
        group("apos"),
        group("aneg"),
        group("peak"),
        group("trough"),
        group("flat"),
    );
    let n_mean = (n_sentences as f64 * mean_fraction).round() as usize;
    let mut pairs = Vec::with_capacity(n_sentences);
    for i in 0..n_sentences {
        let positive = i % 2 == 0;
        let mut sentence: Vec<&String> = if i < n_mean {
            let polar = if positive { &apos } else { &aneg };
            let mut s: Vec<&String> = (0..3).map(|_| *polar.choose(&mut rng).unwrap()).collect();
            s.push(flat.choose(&mut rng).unwrap());
            s
        } else if positive {
            let mut s = vec![*peak.choose(&mut rng).unwrap()];
            s.extend((0..3).map(|_| *trough.choose(&mut rng).unwrap()));
            s
        } else {
            (0..4).map(|_| *flat.choose(&mut rng).unwrap()).collect()
        };
        sentence.shuffle(&mut rng);
        let text = sentence
            .iter()
            .map(|w| w.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        pairs.push((if positive { "pos" } else { "neg" }, text));
    }
    Complementarity {
        mean_space: EmbeddingSpace::new("mean-space", vocab.clone(), a).expect("valid space"),
        max_space: EmbeddingSpace::new("max-space", vocab, b).expect("valid space"),
        task: TaskDataset::from_pairs("complementarity", MetricKind::Accuracy, pairs)
            .expect("two classes"),
    }
}

/// A space whose entries straddle zero and a task readable from the mean.
///
/// Word vectors are uniform in `[-1, 1]` except dimension 0 of polar words,
/// shifted by ±0.6. Harmonic means of such columns hit poles (the mean of
/// reciprocals passes near zero), giving heavy-tailed features.
pub fn zero_crossing(n_sentences: usize, seed: u64) -> (EmbeddingSpace, TaskDataset) {
    const DIM: usize = 8;
    const GROUP: usize = 80;
    let mut rng = rng(seed);
    let vocab: Vec<String> = ["pos", "neg", "neu"]
        .iter()
        .flat_map(|g| words(g, GROUP))
        .collect();
    let mut m = Array2::from_shape_simple_fn((vocab.len(), DIM), || rng.random_range(-1.0..1.0));
    for (row, word) in vocab.iter().enumerate() {
        if word.starts_with("pos") {
            m[[row, 0]] += 0.6;
        } else if word.starts_with("neg") {
            m[[row, 0]] -= 0.6;
        }
    }
    let polar =
        |name: &str| -> Vec<&String> { vocab.iter().filter(|w| w.starts_with(name)).collect() };
    let (pos, neg, neu) = (polar("pos"), polar("neg"), polar("neu"));
    let mut pairs = Vec::with_capacity(n_sentences);
    for i in 0..n_sentences {
        let positive = i % 2 == 0;
        let source = if positive { &pos } else { &neg };
        let mut s: Vec<&String> = (0..3).map(|_| *source.choose(&mut rng).unwrap()).collect();
        s.extend((0..3).map(|_| *neu.choose(&mut rng).unwrap()));
        s.shuffle(&mut rng);
        let text = s.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
        pairs.push((if positive { "pos" } else { "neg" }, text));
    }
    (
        EmbeddingSpace::new("crossing", vocab, m).expect("valid space"),
        TaskDataset::from_pairs("zero-crossing", MetricKind::Accuracy, pairs).expect("two classes"),
    )
}

/// A polarity task in two languages.
#[derive(Debug, Clone)]
pub struct Bilingual {
    /// Source-language vectors, words `w{i}`.
    pub source_space: EmbeddingSpace,
    /// Target-language vectors, words `w{i}_de`.
    pub target_space: EmbeddingSpace,
    /// Both vocabularies in one space.
    pub shared_space: EmbeddingSpace,
    pub train: TaskDataset,
    /// `train` with every token replaced by its translation, plus fresh
    /// sentences when `test_sentences` exceeds the training size.
    pub test: TaskDataset,
}

/// Builds a [`Bilingual`] fixture.
///
/// Source word vectors are Gaussian in `dim` dimensions with polar words
/// shifted by ±1.5 along dimension 0. With `rotate` the translations get
/// `Q · v` for a random orthogonal `Q` (separately trained monolingual
/// spaces); without it they share the source vectors exactly.
pub fn bilingual(
    train_sentences: usize,
    test_sentences: usize,
    dim: usize,
    rotate: bool,
    seed: u64,
) -> Bilingual {
    const GROUP: usize = 80;
    let mut rng = rng(seed);
    let vocab: Vec<String> = words("w", 3 * GROUP);
    let mut m = gaussian_matrix(vocab.len(), dim, 1.0, &mut rng);
    for i in 0..GROUP {
        m[[i, 0]] += 1.5;
        m[[GROUP + i, 0]] -= 1.5;
    }
    let translated: Vec<String> = vocab.iter().map(|w| format!("{w}_de")).collect();
    let target_m = if rotate {
        let q = random_orthogonal(dim, &mut rng);
        m.dot(&q.t())
    } else {
        m.clone()
    };

    let sentence = |positive: bool, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let base = if positive { 0 } else { GROUP };
        let mut s: Vec<usize> = (0..2).map(|_| base + rng.random_range(0..GROUP)).collect();
        s.extend((0..3).map(|_| 2 * GROUP + rng.random_range(0..GROUP)));
        s.shuffle(rng);
        s
    };
    let total = train_sentences.max(test_sentences);
    let sentences: Vec<(bool, Vec<usize>)> = (0..total)
        .map(|i| {
            let positive = i % 2 == 0;
            (positive, sentence(positive, &mut rng))
        })
        .collect();
    let render = |ids: &[usize], names: &[String]| {
        ids.iter()
            .map(|&i| names[i].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let label = |p: bool| if p { "pos" } else { "neg" };
    let train = TaskDataset::from_pairs(
        "polarity",
        MetricKind::Accuracy,
        sentences[..train_sentences]
            .iter()
            .map(|(p, s)| (label(*p), render(s, &vocab))),
    )
    .expect("two classes")
    .with_language("en");
    let test = TaskDataset::from_pairs(
        "polarity",
        MetricKind::Accuracy,
        sentences[..test_sentences]
            .iter()
            .map(|(p, s)| (label(*p), render(s, &translated))),
    )
    .expect("two classes")
    .with_language("de");

    let mut shared_words = vocab.clone();
    shared_words.extend(translated.iter().cloned());
    let shared =
        ndarray::concatenate(ndarray::Axis(0), &[m.view(), target_m.view()]).expect("same width");
    Bilingual {
        source_space: EmbeddingSpace::new("src", vocab, m)
            .expect("valid")
            .with_language("en"),
        target_space: EmbeddingSpace::new("tgt", translated, target_m)
            .expect("valid")
            .with_language("de"),
        shared_space: EmbeddingSpace::new("shared", shared_words, shared).expect("valid"),
        train,
        test,
    }
}

/// Labels drawn independently of the sentences of `task`.
pub fn shuffled_labels(task: &TaskDataset, seed: u64) -> TaskDataset {
    let mut rng = rng(seed);
    let mut labels = task.labels();
    labels.shuffle(&mut rng);
    let mut out = task.clone();
    for (item, label) in out.items.iter_mut().zip(labels) {
        item.label = label;
    }
    out
}

/// Vector of `n` independent normal draws.
pub fn normal_vector<R: Rng>(n: usize, std: f64, rng: &mut R) -> Array1<f64> {
    let dist = Normal::new(0.0, std).expect("valid std");
    Array1::from_shape_simple_fn(n, || dist.sample(rng))
}
