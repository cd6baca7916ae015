#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pmean::{EmbeddingSpace, TaskDataset};

pub fn pmean() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pmean"));
    cmd.env_remove("PMEAN_SEED").env_remove("RUST_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    pmean().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn write_space(dir: &Path, file: &str, space: &EmbeddingSpace) -> PathBuf {
    let path = dir.join(file);
    let mut buf = Vec::new();
    space.write_text(&mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    path
}

pub fn write_task(dir: &Path, file: &str, ds: &TaskDataset) -> PathBuf {
    let mut text = format!("#name={}\n#metric={}\n", ds.name, ds.metric);
    if let Some(lang) = &ds.language {
        text.push_str(&format!("#lang={lang}\n"));
    }
    for item in &ds.items {
        text.push_str(&format!("{}\t{}\n", ds.classes[item.label], item.text));
    }
    let path = dir.join(file);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn write(dir: &Path, file: &str, text: &str) -> PathBuf {
    let path = dir.join(file);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
