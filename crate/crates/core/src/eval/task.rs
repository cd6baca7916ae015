use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::classifier::MetricKind;
use crate::error::{Error, Result};

/// One labeled sentence; `label` indexes [`TaskDataset::classes`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Item {
    pub label: usize,
    pub text: String,
}

/// A labeled sentence-classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub name: String,
    pub language: Option<String>,
    /// Labels in order of first appearance.
    pub classes: Vec<String>,
    pub items: Vec<Item>,
    pub metric: MetricKind,
}

impl TaskDataset {
    /// Builds a dataset from `(label, text)` pairs, inferring classes in order
    /// of first appearance.
    pub fn from_pairs<L, T>(
        name: impl Into<String>,
        metric: MetricKind,
        pairs: impl IntoIterator<Item = (L, T)>,
    ) -> Result<Self>
    where
        L: AsRef<str>,
        T: Into<String>,
    {
        let mut classes: Vec<String> = Vec::new();
        let mut items = Vec::new();
        for (label, text) in pairs {
            let label = label.as_ref();
            let idx = match classes.iter().position(|c| c == label) {
                Some(i) => i,
                None => {
                    classes.push(label.to_owned());
                    classes.len() - 1
                }
            };
            items.push(Item {
                label: idx,
                text: text.into(),
            });
        }
        let ds = Self {
            name: name.into(),
            language: None,
            classes,
            items,
            metric,
        };
        ds.check()?;
        Ok(ds)
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = Some(language.into());
        self
    }

    fn check(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "task `{}` has no items",
                self.name
            )));
        }
        if self.classes.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "task `{}` has {} class(es); at least 2 are required",
                self.name,
                self.classes.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.text.as_str()).collect()
    }

    /// Item count per class, in class order.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0; self.classes.len()];
        for item in &self.items {
            counts[item.label] += 1;
        }
        self.classes.iter().cloned().zip(counts).collect()
    }

    /// The same task with classes sorted by name and items sorted by
    /// (text, label). Seeded evaluation runs on this form so that the order
    /// of lines in a task file cannot change results.
    pub fn canonical(&self) -> Self {
        let mut classes = self.classes.clone();
        classes.sort();
        let remap: Vec<usize> = self
            .classes
            .iter()
            .map(|c| classes.binary_search(c).expect("class present"))
            .collect();
        let mut items: Vec<Item> = self
            .items
            .iter()
            .map(|i| Item {
                label: remap[i.label],
                text: i.text.clone(),
            })
            .collect();
        items.sort_by(|a, b| a.text.cmp(&b.text).then(a.label.cmp(&b.label)));
        Self {
            name: self.name.clone(),
            language: self.language.clone(),
            classes,
            items,
            metric: self.metric,
        }
    }

    /// Reorders `classes` to `order`, which must contain the same labels.
    pub fn align_classes(&self, order: &[String]) -> Result<Self> {
        let mut sorted_self = self.classes.clone();
        let mut sorted_other = order.to_vec();
        sorted_self.sort();
        sorted_other.sort();
        if sorted_self != sorted_other {
            return Err(Error::InvalidArgument(format!(
                "task `{}` classes {:?} differ from {:?}",
                self.name, self.classes, order
            )));
        }
        let remap: Vec<usize> = self
            .classes
            .iter()
            .map(|c| order.iter().position(|o| o == c).expect("same class set"))
            .collect();
        Ok(Self {
            classes: order.to_vec(),
            items: self
                .items
                .iter()
                .map(|i| Item {
                    label: remap[i.label],
                    text: i.text.clone(),
                })
                .collect(),
            ..self.clone()
        })
    }
}

/// Reads a task file.
///
/// ```text
/// #name=mr
/// #metric=accuracy
/// #lang=en
/// pos<TAB>a gripping , funny film
/// neg<TAB>dull
/// ```
///
/// Header lines start with `#` and must precede the data. `#metric` is
/// `accuracy` (default) or `macro_f1`; `#name` defaults to the file stem.
/// Any other `#key=value` is rejected; `#` lines without `=` are comments.
/// Each data line is `label TAB sentence`; the sentence may contain further
/// tabs and may be empty. Blank lines are skipped, CRLF is accepted.
pub fn load_task(path: impl AsRef<Path>) -> Result<TaskDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "task".into());
    let ds = read_task(BufReader::new(file), &stem, &path.display().to_string())?;
    for (class, count) in ds.class_counts() {
        log::info!("task `{}`: class `{class}` has {count} items", ds.name);
    }
    Ok(ds)
}

pub fn read_task<R: BufRead>(reader: R, default_name: &str, origin: &str) -> Result<TaskDataset> {
    let mut name = default_name.to_owned();
    let mut metric = MetricKind::Accuracy;
    let mut language = None;
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut last_line = 0;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = line.map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if pairs.is_empty() && line.starts_with('#') {
            let Some((key, value)) = line[1..].split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "name" => name = value.to_owned(),
                "metric" => {
                    metric = value
                        .parse()
                        .map_err(|e: Error| Error::format(origin, lineno, e.to_string()))?
                }
                "lang" => language = Some(value.to_owned()),
                other => {
                    return Err(Error::format(
                        origin,
                        lineno,
                        format!("unknown header `{other}`"),
                    ))
                }
            }
            continue;
        }
        let (label, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(origin, lineno, "expected `label<TAB>sentence`"))?;
        if label.trim().is_empty() {
            return Err(Error::format(origin, lineno, "empty label"));
        }
        pairs.push((label.trim().to_owned(), text.to_owned()));
    }
    if pairs.is_empty() {
        return Err(Error::format(
            origin,
            last_line.max(1),
            "task has no data lines",
        ));
    }
    let ds = TaskDataset::from_pairs(name, metric, pairs)
        .map_err(|e| Error::format(origin, last_line, e.to_string()))?;
    Ok(match language {
        Some(lang) => ds.with_language(lang),
        None => ds,
    })
}

/// Training data in one language and test data in another, over one label set.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferPair {
    pub train: TaskDataset,
    /// Classes aligned to `train.classes`.
    pub test: TaskDataset,
}

impl TransferPair {
    pub fn new(train: TaskDataset, test: TaskDataset) -> Result<Self> {
        let test = test.align_classes(&train.classes)?;
        Ok(Self { train, test })
    }
}
