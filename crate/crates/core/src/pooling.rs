//! Concatenated power-mean sentence embeddings.
//!
//! A sentence is looked up in every configured space, each space contributes
//! the concatenation of its power means in the configured order, and the
//! per-space blocks are concatenated in part order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Parallelism;
use crate::pmean::{format_p_list, parse_p_list, power_mean, PValue, PoolStats, SingularityPolicy};
use crate::store::{lookup_sequence, EmbeddingSpace, OovPolicy, TokenizerConfig};

/// Options that control lookup and pooling but not the output layout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolingPolicies {
    pub oov: OovPolicy,
    pub singularity: SingularityPolicy,
}

/// One space and the power means taken over it.
#[derive(Debug, Clone)]
pub struct PoolPart {
    pub space: Arc<EmbeddingSpace>,
    pub p_values: Vec<PValue>,
}

impl PoolPart {
    pub fn output_dim(&self) -> usize {
        self.p_values.len() * self.space.dim()
    }
}

/// Ordered list of (space, p-values) parts defining one sentence representation.
#[derive(Debug, Clone)]
pub struct PooledConfig {
    parts: Vec<PoolPart>,
}

impl PooledConfig {
    pub fn new(parts: Vec<PoolPart>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument(
                "pooled config needs at least one part".into(),
            ));
        }
        if let Some(part) = parts.iter().find(|p| p.p_values.is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "part over space `{}` has no p-values",
                part.space.name()
            )));
        }
        Ok(Self { parts })
    }

    /// The same p-values over every space.
    pub fn uniform(spaces: &[Arc<EmbeddingSpace>], p_values: &[PValue]) -> Result<Self> {
        Self::new(
            spaces
                .iter()
                .map(|space| PoolPart {
                    space: Arc::clone(space),
                    p_values: p_values.to_vec(),
                })
                .collect(),
        )
    }

    pub fn parts(&self) -> &[PoolPart] {
        &self.parts
    }

    /// Sum over parts of `|p_values| * dim`.
    pub fn output_dim(&self) -> usize {
        self.parts.iter().map(PoolPart::output_dim).sum()
    }

    /// Checks that `other` has the same layout: part count, dims and p-values.
    pub fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.output_dim() != other.output_dim() {
            return Err(Error::dimension(
                "paired pooled configs",
                self.output_dim(),
                other.output_dim(),
            ));
        }
        if self.parts.len() != other.parts.len() {
            return Err(Error::dimension(
                "paired pooled config parts",
                self.parts.len(),
                other.parts.len(),
            ));
        }
        for (a, b) in self.parts.iter().zip(&other.parts) {
            if a.space.dim() != b.space.dim() {
                return Err(Error::dimension(
                    format!("spaces `{}` and `{}`", a.space.name(), b.space.name()),
                    a.space.dim(),
                    b.space.dim(),
                ));
            }
            if a.p_values != b.p_values {
                return Err(Error::InvalidArgument(format!(
                    "paired parts use different p-values: {} vs {}",
                    format_p_list(&a.p_values),
                    format_p_list(&b.p_values)
                )));
            }
        }
        Ok(())
    }

    /// Short human-readable description, e.g. `glove[-inf,1,inf] ⊕ ar[1]`.
    pub fn describe(&self) -> String {
        self.to_string()
    }

    pub fn spec(&self) -> ConfigSpec {
        ConfigSpec {
            entries: self
                .parts
                .iter()
                .map(|part| ConfigEntry {
                    space: part.space.name().to_owned(),
                    p_values: part.p_values.clone(),
                    path: None,
                })
                .collect(),
        }
    }
}

impl fmt::Display for PooledConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, part) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊕ ")?;
            }
            write!(
                f,
                "{}[{}]",
                part.space.name(),
                format_p_list(&part.p_values)
            )?;
        }
        Ok(())
    }
}

/// Power means of one space over a token sequence, concatenated in `p_values` order.
pub fn pool_sentence<S: AsRef<str>>(
    space: &EmbeddingSpace,
    p_values: &[PValue],
    tokens: &[S],
    policies: &PoolingPolicies,
    stats: &mut PoolStats,
) -> Result<Array1<f64>> {
    if p_values.is_empty() {
        return Err(Error::InvalidArgument("no p-values to pool with".into()));
    }
    let lookup = lookup_sequence(space, tokens, policies.oov);
    stats.oov += lookup.oov;
    stats.fallbacks += usize::from(lookup.fallback);
    let dim = space.dim();
    let mut out = Array1::zeros(p_values.len() * dim);
    for (k, &p) in p_values.iter().enumerate() {
        let block = power_mean(lookup.matrix.view(), p, &policies.singularity, stats)?;
        out.slice_mut(s![k * dim..(k + 1) * dim]).assign(&block);
    }
    Ok(out)
}

/// Concatenation of [`pool_sentence`] over the parts of `cfg`.
pub fn concat_embedding<S: AsRef<str>>(
    cfg: &PooledConfig,
    tokens: &[S],
    policies: &PoolingPolicies,
    stats: &mut PoolStats,
) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(cfg.output_dim());
    let mut offset = 0;
    for part in &cfg.parts {
        let block = pool_sentence(&part.space, &part.p_values, tokens, policies, stats)?;
        out.slice_mut(s![offset..offset + block.len()])
            .assign(&block);
        offset += block.len();
    }
    debug_assert_eq!(offset, out.len());
    Ok(out)
}

/// Turns raw sentences into concatenated power-mean embeddings.
#[derive(Debug, Clone)]
pub struct Embedder {
    pub config: PooledConfig,
    pub tokenizer: TokenizerConfig,
    pub policies: PoolingPolicies,
    pub parallelism: Parallelism,
}

impl Embedder {
    pub fn new(config: PooledConfig) -> Self {
        Self {
            config,
            tokenizer: TokenizerConfig::default(),
            policies: PoolingPolicies::default(),
            parallelism: Parallelism::default(),
        }
    }

    pub fn with_policies(mut self, policies: PoolingPolicies) -> Self {
        self.policies = policies;
        self
    }

    pub fn with_tokenizer(mut self, tokenizer: TokenizerConfig) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim()
    }

    pub fn embed_sentence(&self, sentence: &str, stats: &mut PoolStats) -> Result<Array1<f64>> {
        let tokens = self.tokenizer.tokenize(sentence);
        concat_embedding(&self.config, &tokens, &self.policies, stats)
    }

    /// Embeds every sentence; row `i` belongs to `sentences[i]`.
    ///
    /// Under the strict policy the error of the first failing sentence is
    /// returned.
    pub fn embed_corpus<S: AsRef<str> + Sync>(
        &self,
        sentences: &[S],
    ) -> Result<(Array2<f64>, PoolStats)> {
        let rows = self.parallelism.map(sentences.len(), |i| {
            let mut stats = PoolStats::default();
            self.embed_sentence(sentences[i].as_ref(), &mut stats)
                .map(|row| (row, stats))
        });
        let mut matrix = Array2::zeros((sentences.len(), self.output_dim()));
        let mut total = PoolStats::default();
        for (i, row) in rows.into_iter().enumerate() {
            let (row, stats) = row?;
            matrix.row_mut(i).assign(&row);
            total += stats;
        }
        Ok((matrix, total))
    }
}

/// One line of a pooled-config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEntry {
    pub space: String,
    pub p_values: Vec<PValue>,
    /// Embedding file, relative to the config file unless absolute.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Parsed form of a pooled-config file, before spaces are loaded.
///
/// Grammar, one entry per line:
///
/// ```text
/// space=<name> p=<v>[,<v>...] [path=<file>]
/// ```
///
/// where `<v>` is a decimal number, `inf` or `-inf`. Fields are separated by
/// whitespace and may appear in any order; `#` starts a comment line and blank
/// lines are ignored. Without `path` the space is read from `<name>.txt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub entries: Vec<ConfigEntry>,
}

impl ConfigSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (mut space, mut p_values, mut path) = (None, None, None);
            for field in line.split_whitespace() {
                let (key, value) = field.split_once('=').ok_or_else(|| {
                    Error::format(
                        origin,
                        lineno,
                        format!("expected key=value, found `{field}`"),
                    )
                })?;
                match key {
                    "space" if !value.is_empty() => space = Some(value.to_owned()),
                    "p" => {
                        p_values = Some(
                            parse_p_list(value)
                                .map_err(|e| Error::format(origin, lineno, e.to_string()))?,
                        )
                    }
                    "path" if !value.is_empty() => path = Some(PathBuf::from(value)),
                    _ => {
                        return Err(Error::format(
                            origin,
                            lineno,
                            format!("unknown or empty field `{field}`"),
                        ))
                    }
                }
            }
            let space = space.ok_or_else(|| Error::format(origin, lineno, "missing space="))?;
            let p_values = p_values.ok_or_else(|| Error::format(origin, lineno, "missing p="))?;
            entries.push(ConfigEntry {
                space,
                p_values,
                path,
            });
        }
        if entries.is_empty() {
            return Err(Error::format(origin, 1, "config has no entries"));
        }
        Ok(Self { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Renders the config in the grammar accepted by [`ConfigSpec::parse`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&format!(
                "space={} p={}",
                entry.space,
                format_p_list(&entry.p_values)
            ));
            if let Some(path) = &entry.path {
                out.push_str(&format!(" path={}", path.display()));
            }
            out.push('\n');
        }
        out
    }

    /// Embedding file of each entry, resolved against `base_dir`.
    pub fn resolved_paths(&self, base_dir: &Path) -> Vec<PathBuf> {
        self.entries
            .iter()
            .map(|e| {
                let p = e
                    .path
                    .clone()
                    .unwrap_or_else(|| PathBuf::from(format!("{}.txt", e.space)));
                if p.is_absolute() {
                    p
                } else {
                    base_dir.join(p)
                }
            })
            .collect()
    }

    /// Builds a config by looking every entry's space up by name.
    pub fn bind<F>(&self, mut lookup: F) -> Result<PooledConfig>
    where
        F: FnMut(&ConfigEntry) -> Result<Arc<EmbeddingSpace>>,
    {
        let parts = self
            .entries
            .iter()
            .map(|e| {
                Ok(PoolPart {
                    space: lookup(e)?,
                    p_values: e.p_values.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PooledConfig::new(parts)
    }
}
