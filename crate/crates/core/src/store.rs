//! Word-embedding spaces, text-format loading, tokenization and lookup.
//!
//! The accepted text format is the one shared by GloVe and the textual
//! word2vec dump: one `token v1 ... vd` entry per line, values separated by
//! single spaces, with an optional leading `count dim` header line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// A vocabulary-indexed matrix of word vectors of one embedding type.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    name: String,
    language: Option<String>,
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Array2<f64>,
}

impl EmbeddingSpace {
    /// Builds a space from words and their row vectors.
    ///
    /// Fails when the word and row counts differ, a word is empty or repeated,
    /// the matrix has no columns, or an entry is not finite.
    pub fn new(name: impl Into<String>, words: Vec<String>, matrix: Array2<f64>) -> Result<Self> {
        let name = name.into();
        if words.len() != matrix.nrows() {
            return Err(Error::dimension(
                format!("space `{name}` rows"),
                words.len(),
                matrix.nrows(),
            ));
        }
        if matrix.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "space `{name}` has zero-dimensional vectors"
            )));
        }
        if let Some(((row, col), value)) = matrix.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "space `{name}` has non-finite value {value} at row {row}, column {col}"
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, word) in words.iter().enumerate() {
            if word.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "space `{name}` has an empty token at row {i}"
                )));
            }
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "space `{name}` repeats token `{word}`"
                )));
            }
        }
        Ok(Self {
            name,
            language: None,
            words,
            index,
            matrix,
        })
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = Some(language.into());
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    /// Vector length.
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Number of words.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in row order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn row_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.row_of(word).map(|i| self.matrix.row(i))
    }

    /// Writes the space in the text format accepted by [`read_text_embeddings`],
    /// with a `count dim` header line.
    pub fn write_text<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dim())?;
        for (word, row) in self.words.iter().zip(self.matrix.rows()) {
            write!(writer, "{word}")?;
            for v in row {
                write!(writer, " {v}")?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Counters gathered while reading an embedding file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Entries dropped because their token was already present.
    pub duplicates: usize,
    pub header: bool,
}

/// Loads a text embedding file; the space is named after the file stem.
pub fn load_text_embeddings(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingSpace, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".to_owned());
    read_text_embeddings(BufReader::new(file), &name, expected_dim)
        .map_err(|e| with_origin(e, path))
}

fn with_origin(err: Error, path: &Path) -> Error {
    match err {
        Error::Format { line, message, .. } => Error::Format {
            origin: path.display().to_string(),
            line,
            message,
        },
        other => other,
    }
}

/// Reads embeddings in text format from any buffered reader.
///
/// An optional first line consisting of exactly two integers is taken as a
/// `count dim` header. Lines may end in LF or CRLF; blank lines are ignored.
/// Repeated tokens keep their first vector and are counted in the report.
pub fn read_text_embeddings<R: BufRead>(
    reader: R,
    name: &str,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingSpace, LoadReport)> {
    let mut report = LoadReport::default();
    let mut header_dim = None;
    let mut words = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut values: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format(name, lineno, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 1 {
            if let Some(d) = parse_header(line) {
                report.header = true;
                header_dim = Some(d);
                continue;
            }
        }

        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let token = fields.next().expect("non-blank line has a field");
        let start = values.len();
        for field in fields {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(name, lineno, format!("cannot parse `{field}` as a number"))
            })?;
            if !v.is_finite() {
                values.truncate(start);
                return Err(Error::format(
                    name,
                    lineno,
                    format!("non-finite value `{field}`"),
                ));
            }
            values.push(v);
        }
        let len = values.len() - start;
        match dim {
            None if len == 0 => {
                return Err(Error::format(name, lineno, "entry has no vector values"));
            }
            None => dim = Some(len),
            Some(d) if d != len => {
                return Err(Error::format(
                    name,
                    lineno,
                    format!("ragged entry: expected {d} values, found {len}"),
                ));
            }
            Some(_) => {}
        }
        if index.contains_key(token) {
            values.truncate(start);
            report.duplicates += 1;
            continue;
        }
        index.insert(token.to_owned(), words.len());
        words.push(token.to_owned());
    }

    let dim = dim
        .or(header_dim)
        .ok_or_else(|| Error::format(name, 1, "file contains no embeddings"))?;
    if let Some(h) = header_dim {
        if h != dim {
            return Err(Error::dimension(format!("`{name}` header"), h, dim));
        }
    }
    if let Some(expected) = expected_dim {
        if expected != dim {
            return Err(Error::dimension(format!("`{name}` vectors"), expected, dim));
        }
    }
    if report.duplicates > 0 {
        log::warn!(
            "`{name}`: {} duplicate tokens ignored (first occurrence kept)",
            report.duplicates
        );
    }
    let matrix = Array2::from_shape_vec((words.len(), dim), values)
        .expect("row count times dim equals value count");
    Ok((EmbeddingSpace::new(name, words, matrix)?, report))
}

fn parse_header(line: &str) -> Option<usize> {
    let mut parts = line.split_whitespace();
    let count = parts.next()?.parse::<u64>().ok();
    let dim = parts.next()?.parse::<usize>().ok();
    match (count, dim, parts.next()) {
        (Some(_), Some(d), None) => Some(d),
        _ => None,
    }
}

/// Whitespace tokenizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self { lowercase: true }
    }
}

impl TokenizerConfig {
    pub fn tokenize(&self, sentence: &str) -> Vec<String> {
        sentence
            .split_whitespace()
            .map(|t| {
                if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_owned()
                }
            })
            .collect()
    }
}

/// Treatment of tokens missing from a space's vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    /// Drop the token.
    #[default]
    Skip,
    /// Substitute the zero vector.
    ZeroVector,
}

/// Word vectors of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    /// One row per kept token, or a single zero row when nothing was kept.
    pub matrix: Array2<f64>,
    /// Tokens missing from the vocabulary.
    pub oov: usize,
    /// Set when no row survived and the zero fallback row was returned.
    pub fallback: bool,
}

/// Resolves tokens to their word vectors under `policy`.
pub fn lookup_sequence<S: AsRef<str>>(
    space: &EmbeddingSpace,
    tokens: &[S],
    policy: OovPolicy,
) -> Lookup {
    let dim = space.dim();
    let mut rows: Vec<Option<usize>> = Vec::with_capacity(tokens.len());
    let mut oov = 0;
    for token in tokens {
        match space.row_of(token.as_ref()) {
            Some(r) => rows.push(Some(r)),
            None => {
                oov += 1;
                if policy == OovPolicy::ZeroVector {
                    rows.push(None);
                }
            }
        }
    }
    if rows.is_empty() {
        return Lookup {
            matrix: Array2::zeros((1, dim)),
            oov,
            fallback: true,
        };
    }
    let mut matrix = Array2::zeros((rows.len(), dim));
    for (mut out, row) in matrix.axis_iter_mut(Axis(0)).zip(&rows) {
        if let Some(r) = row {
            out.assign(&space.matrix.row(*r));
        }
    }
    Lookup {
        matrix,
        oov,
        fallback: false,
    }
}
