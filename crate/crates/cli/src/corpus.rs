//! Bundled example scripts with stored expected output.
//!
//! An entry `<id>` is a script `<id>.idx` and its expected text report
//! `<id>.out`. Setting `IDEXP_CORPUS` to a directory replaces the bundled
//! entries with the pairs found there.

use std::fs;
use std::io;
use std::path::Path;

use crate::run::{render, run_all, RunOptions};
use crate::script::parse;

pub const CORPUS_ENV: &str = "IDEXP_CORPUS";

macro_rules! entry {
    ($id:literal) => {
        ($id, include_str!(concat!("../corpus/", $id, ".idx")), include_str!(concat!("../corpus/", $id, ".out")))
    };
}

const BUNDLED: &[(&str, &str, &str)] = &[
    entry!("ex-transform-1"),
    entry!("ex-maxcontact-char0"),
    entry!("ex-ridge-p2"),
    entry!("ex-ridge-p3"),
    entry!("ex-lambda-p2"),
    entry!("ex-classifier"),
    entry!("det-minors"),
    entry!("det-2-2-2"),
];

#[derive(Clone, Debug)]
pub struct Entry {
    pub id: String,
    pub script: String,
    pub expected: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: String,
    pub matched: bool,
    /// First differing line, or the error that stopped the run.
    pub detail: Option<String>,
    pub output: String,
}

pub fn bundled() -> Vec<Entry> {
    BUNDLED
        .iter()
        .map(|(id, s, e)| Entry { id: id.to_string(), script: s.to_string(), expected: e.to_string() })
        .collect()
}

/// Entries from `dir`, sorted by id. Scripts without an `.out` file get an
/// empty expectation.
pub fn load_dir(dir: &Path) -> io::Result<Vec<Entry>> {
    let mut out = Vec::new();
    for f in fs::read_dir(dir)? {
        let path = f?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("idx") {
            continue;
        }
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let script = fs::read_to_string(&path)?;
        let expected = fs::read_to_string(path.with_extension("out")).unwrap_or_default();
        out.push(Entry { id, script, expected });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// Directory from the environment if set, otherwise the bundled entries.
pub fn load() -> io::Result<Vec<Entry>> {
    match std::env::var_os(CORPUS_ENV) {
        Some(dir) => load_dir(Path::new(&dir)),
        None => Ok(bundled()),
    }
}

pub fn run_entry(e: &Entry) -> Outcome {
    let fail = |detail: String| Outcome { id: e.id.clone(), matched: false, detail: Some(detail), output: String::new() };
    let script = match parse(&e.script) {
        Ok(s) => s,
        Err(err) => return fail(format!("parse error: {}", err)),
    };
    let reports = match run_all(&script, RunOptions::default()) {
        Ok(r) => r,
        Err(err) => return fail(format!("run error: {}", err)),
    };
    let output = render(&reports);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.ok).map(|r| r.command.as_str()).collect();
    let detail = if !failed.is_empty() {
        Some(format!("verification failed in: {}", failed.join("; ")))
    } else {
        first_difference(&e.expected, &output)
    };
    Outcome { id: e.id.clone(), matched: detail.is_none(), detail, output }
}

fn first_difference(expected: &str, got: &str) -> Option<String> {
    if expected == got {
        return None;
    }
    let mut a = expected.lines();
    let mut b = got.lines();
    let mut line = 1;
    loop {
        match (a.next(), b.next()) {
            (Some(x), Some(y)) if x == y => line += 1,
            (x, y) => {
                return Some(format!(
                    "line {}: expected `{}`, got `{}`",
                    line,
                    x.unwrap_or("<end>"),
                    y.unwrap_or("<end>")
                ))
            }
        }
    }
}
