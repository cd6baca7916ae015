use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pmean::eval::{evaluate_models, load_task, sweep_pmeans, EvalTask, ModelSpec};
use pmean::pmean::parse_p_list;
use pmean::projection::train_projection;
use pmean::{
    load_text_embeddings, lookup_sequence, ConfigSpec, Embedder, EmbeddingSpace, EvalReport,
    OovPolicy, ParallelCorpus, PooledConfig, ProjectionModel, ProjectionTrainConfig, ReportFormat,
    Side, TokenizerConfig, TransferPair, ZNorm,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    EmbedArgs, EvalArgs, EvalTransferArgs, PoolingArgs, ProjectArgs, SideArg, SweepArgs,
    TrainProjectionArgs,
};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::output::Outputs;

type Manifest = RunManifest<serde_json::Value>;

/// Loads embedding files once per path.
#[derive(Default)]
struct SpaceCache {
    loaded: HashMap<(PathBuf, String), Arc<EmbeddingSpace>>,
}

impl SpaceCache {
    fn load(
        &mut self,
        path: &Path,
        name: &str,
        manifest: &mut Manifest,
    ) -> CliResult<Arc<EmbeddingSpace>> {
        let key = (path.to_owned(), name.to_owned());
        if let Some(space) = self.loaded.get(&key) {
            return Ok(Arc::clone(space));
        }
        manifest.digest(path)?;
        let (space, report) = load_text_embeddings(path, None)?;
        if report.duplicates > 0 {
            log::warn!(
                "{}: {} duplicate tokens ignored",
                path.display(),
                report.duplicates
            );
        }
        let space = Arc::new(space.with_name(name));
        self.loaded.insert(key, Arc::clone(&space));
        Ok(space)
    }
}

/// A config file with its entries' paths resolved.
#[derive(Serialize)]
struct ResolvedConfig {
    file: PathBuf,
    entries: Vec<ResolvedEntry>,
}

#[derive(Serialize)]
struct ResolvedEntry {
    space: String,
    p: String,
    path: PathBuf,
}

fn load_config(
    path: &Path,
    cache: &mut SpaceCache,
    manifest: &mut Manifest,
) -> CliResult<(PooledConfig, ResolvedConfig)> {
    manifest.digest(path)?;
    let spec = ConfigSpec::read(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let paths = spec.resolved_paths(base);
    let entries = spec
        .entries
        .iter()
        .zip(&paths)
        .map(|(e, p)| ResolvedEntry {
            space: e.space.clone(),
            p: pmean::pmean::format_p_list(&e.p_values),
            path: p.clone(),
        })
        .collect();
    let mut k = 0;
    let config = spec.bind(|entry| {
        let space = cache
            .load(&paths[k], &entry.space, manifest)
            .map_err(|e| match e {
                CliError::Core(core) => core,
                other => pmean::Error::InvalidArgument(other.to_string()),
            });
        k += 1;
        space
    })?;
    Ok((
        config,
        ResolvedConfig {
            file: path.to_owned(),
            entries,
        },
    ))
}

fn embedder(config: PooledConfig, pooling: &PoolingArgs) -> Embedder {
    Embedder::new(config)
        .with_policies(pooling.policies())
        .with_tokenizer(pooling.tokenizer())
}

fn read_lines(path: &Path, manifest: &mut Manifest) -> CliResult<Vec<String>> {
    manifest.digest(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| pmean::Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r').to_owned())
        .collect())
}

fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

pub fn embed(args: &EmbedArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("embed", json!(null), seed);
    let mut cache = SpaceCache::default();
    let (config, resolved) = load_config(&args.config, &mut cache, &mut manifest)?;
    let sentences = read_lines(&args.input, &mut manifest)?;
    let embedder = embedder(config, &args.pooling);
    let (mut x, stats) = embedder.embed_corpus(&sentences)?;
    if stats.undefined > 0 {
        log::warn!(
            "{} undefined power-mean entries were set to 0",
            stats.undefined
        );
    }
    let znorm = if args.znorm && x.nrows() > 0 {
        let z = ZNorm::fit(x.view())?;
        x = z.apply(x.view())?;
        Some(z)
    } else {
        None
    };
    let mut out = String::new();
    for row in x.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push('\t');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    manifest.config = json!({
        "args": args,
        "pooled_config": resolved,
        "description": embedder.config.describe(),
        "output_dim": embedder.output_dim(),
        "sentences": x.nrows(),
        "pool_stats": { "undefined": stats.undefined, "oov": stats.oov, "fallbacks": stats.fallbacks },
        "znorm": znorm,
    });
    let mut outputs = Outputs::default();
    outputs.add(&args.output, out);
    outputs.add(manifest_path(&args.output), manifest.to_json());
    outputs.commit()
}

/// Sentence-average vectors of the pairs in a `source TAB target` file.
/// Pairs with no known token on either side are dropped.
fn parallel_corpus(
    lines: &[String],
    origin: &Path,
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
    tokenizer: TokenizerConfig,
) -> CliResult<(ParallelCorpus, usize)> {
    let mut src_rows = Vec::new();
    let mut tgt_rows = Vec::new();
    let mut dropped = 0;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (s, t) = line.split_once('\t').ok_or_else(|| pmean::Error::Format {
            origin: origin.display().to_string(),
            line: i + 1,
            message: "expected `source<TAB>target`".into(),
        })?;
        let ls = lookup_sequence(source, &tokenizer.tokenize(s), OovPolicy::Skip);
        let lt = lookup_sequence(target, &tokenizer.tokenize(t), OovPolicy::Skip);
        if ls.fallback || lt.fallback {
            dropped += 1;
            continue;
        }
        src_rows.push(ls.matrix.mean_axis(ndarray::Axis(0)).expect("non-empty"));
        tgt_rows.push(lt.matrix.mean_axis(ndarray::Axis(0)).expect("non-empty"));
    }
    let stack = |rows: &[ndarray::Array1<f64>], dim: usize| {
        let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
        if views.is_empty() {
            ndarray::Array2::zeros((0, dim))
        } else {
            ndarray::stack(ndarray::Axis(0), &views).expect("equal lengths")
        }
    };
    let corpus = ParallelCorpus::new(
        stack(&src_rows, source.dim()),
        stack(&tgt_rows, target.dim()),
    )?;
    Ok((corpus, dropped))
}

pub fn train_projection_cmd(args: &TrainProjectionArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("train-projection", json!(null), seed);
    let mut cache = SpaceCache::default();
    let source = cache.load(&args.source_embeddings, "source", &mut manifest)?;
    let target = cache.load(&args.target_embeddings, "target", &mut manifest)?;
    let lines = read_lines(&args.corpus, &mut manifest)?;
    let tokenizer = TokenizerConfig {
        lowercase: !args.no_lowercase,
    };
    let (corpus, dropped) = parallel_corpus(&lines, &args.corpus, &source, &target, tokenizer)?;
    if dropped > 0 {
        log::warn!("{dropped} sentence pairs without known tokens were skipped");
    }
    let cfg = ProjectionTrainConfig {
        shared_dim: args.shared_dim,
        margin: args.margin,
        dropout: args.dropout,
        adam: pmean::optim::AdamConfig::default().with_step_size(args.lr),
        batch_size: args.batch_size,
        max_epochs: args.epochs,
        seed,
    };
    let trained = train_projection(&corpus, &cfg)?;
    let mut csv = String::from("epoch,train_loss,eval_loss\n");
    for e in &trained.history {
        let _ = writeln!(csv, "{},{},{}", e.epoch, e.train, e.eval);
    }
    let loss_csv = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| args.output.with_extension("loss.csv"));
    manifest.config = json!({
        "args": args,
        "train": cfg,
        "pairs": corpus.len(),
        "dropped_pairs": dropped,
        "initial_loss": trained.initial_loss,
        "loss_csv": loss_csv,
    });
    let mut outputs = Outputs::default();
    outputs.add(&args.output, trained.model.to_json());
    outputs.add(loss_csv, csv);
    outputs.add(manifest_path(&args.output), manifest.to_json());
    outputs.commit()
}

pub fn project(args: &ProjectArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("project", json!(args), seed);
    manifest.digest(&args.model)?;
    let model = ProjectionModel::load(&args.model)?;
    let mut cache = SpaceCache::default();
    let name = args
        .embeddings
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".into());
    let space = cache.load(&args.embeddings, &name, &mut manifest)?;
    let side = match args.side {
        SideArg::Source => Side::Source,
        SideArg::Target => Side::Target,
    };
    let projected = model.project_space(side, &space)?;
    let mut text = Vec::new();
    projected.write_text(&mut text).expect("writing to memory");
    let mut outputs = Outputs::default();
    outputs.add(&args.output, text);
    outputs.add(manifest_path(&args.output), manifest.to_json());
    outputs.commit()
}

fn write_report(out_dir: &Path, report: &EvalReport, manifest: &Manifest) -> CliResult<()> {
    let mut outputs = Outputs::default();
    outputs.add(out_dir.join("report.json"), report.emit(ReportFormat::Json));
    outputs.add(
        out_dir.join("report.md"),
        report.emit(ReportFormat::Markdown),
    );
    outputs.add(out_dir.join("manifest.json"), manifest.to_json());
    outputs.commit()?;
    print!("{}", report.emit(ReportFormat::Markdown));
    Ok(())
}

fn load_tasks(paths: &[PathBuf], manifest: &mut Manifest) -> CliResult<Vec<EvalTask>> {
    paths
        .iter()
        .map(|p| {
            manifest.digest(p)?;
            Ok(EvalTask::Monolingual(load_task(p)?))
        })
        .collect()
}

fn load_pairs(
    train: &[PathBuf],
    test: &[PathBuf],
    manifest: &mut Manifest,
) -> CliResult<Vec<EvalTask>> {
    if train.len() != test.len() {
        return Err(CliError::Usage(format!(
            "{} --train files but {} --test files",
            train.len(),
            test.len()
        )));
    }
    train
        .iter()
        .zip(test)
        .map(|(a, b)| {
            manifest.digest(a)?;
            manifest.digest(b)?;
            Ok(EvalTask::Transfer(TransferPair::new(
                load_task(a)?,
                load_task(b)?,
            )?))
        })
        .collect()
}

pub fn eval(args: &EvalArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("eval", json!(null), seed);
    let mut cache = SpaceCache::default();
    let mut models = Vec::new();
    let mut resolved = Vec::new();
    for path in &args.config {
        let (config, r) = load_config(path, &mut cache, &mut manifest)?;
        models.push(ModelSpec::new(embedder(config, &args.pooling)));
        resolved.push(r);
    }
    let tasks = load_tasks(&args.task, &mut manifest)?;
    let protocol = args.protocol.protocol(seed);
    let report = evaluate_models(
        &models,
        &tasks,
        &protocol,
        args.protocol.znorm,
        protocol.parallelism,
    )?;
    manifest.config = json!({ "args": args, "configs": resolved, "protocol": protocol });
    write_report(&args.out_dir, &report, &manifest)
}

pub fn eval_transfer(args: &EvalTransferArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("eval-transfer", json!(null), seed);
    if !args.target_config.is_empty() && args.target_config.len() != args.source_config.len() {
        return Err(CliError::Usage(format!(
            "{} --source-config files but {} --target-config files",
            args.source_config.len(),
            args.target_config.len()
        )));
    }
    let mut cache = SpaceCache::default();
    let mut models = Vec::new();
    let mut resolved = Vec::new();
    for (k, path) in args.source_config.iter().enumerate() {
        let (source, rs) = load_config(path, &mut cache, &mut manifest)?;
        let mut model = ModelSpec::new(embedder(source, &args.pooling));
        resolved.push(rs);
        if let Some(target_path) = args.target_config.get(k) {
            let (target, rt) = load_config(target_path, &mut cache, &mut manifest)?;
            model.source.config.check_same_layout(&target)?;
            model.description = format!("{} → {}", model.description, target.describe());
            model = model.with_target(embedder(target, &args.pooling));
            resolved.push(rt);
        }
        models.push(model);
    }
    let tasks = load_pairs(&args.train, &args.test, &mut manifest)?;
    let protocol = args.protocol.protocol(seed);
    let report = evaluate_models(
        &models,
        &tasks,
        &protocol,
        args.protocol.znorm,
        protocol.parallelism,
    )?;
    manifest.config = json!({ "args": args, "configs": resolved, "protocol": protocol });
    write_report(&args.out_dir, &report, &manifest)
}

pub fn sweep(args: &SweepArgs, seed: u64) -> CliResult<()> {
    let mut manifest = Manifest::new("sweep", json!(null), seed);
    let p_sets = args
        .p_sets
        .iter()
        .map(|s| parse_p_list(s).map_err(|e| CliError::Usage(format!("--p-set `{s}`: {e}"))))
        .collect::<CliResult<Vec<_>>>()?;
    let mut cache = SpaceCache::default();
    let (source, rs) = load_config(&args.config, &mut cache, &mut manifest)?;
    let source_spaces: Vec<_> = source
        .parts()
        .iter()
        .map(|p| Arc::clone(&p.space))
        .collect();
    let mut resolved = vec![rs];
    let target_spaces = match &args.target_config {
        Some(path) => {
            let (target, rt) = load_config(path, &mut cache, &mut manifest)?;
            resolved.push(rt);
            Some(
                target
                    .parts()
                    .iter()
                    .map(|p| Arc::clone(&p.space))
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };
    let mut tasks = load_tasks(&args.task, &mut manifest)?;
    tasks.extend(load_pairs(&args.train, &args.test, &mut manifest)?);
    if tasks.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one --task or --train/--test pair".into(),
        ));
    }
    let protocol = args.protocol.protocol(seed);
    let template = embedder(source, &args.pooling);
    let report = sweep_pmeans(
        &template,
        &source_spaces,
        target_spaces.as_deref(),
        &p_sets,
        &tasks,
        &protocol,
        args.protocol.znorm,
        protocol.parallelism,
    )?;
    manifest.config = json!({ "args": args, "configs": resolved, "protocol": protocol });
    write_report(&args.out_dir, &report, &manifest)
}
