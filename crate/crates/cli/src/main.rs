use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idexp::field::Field;
use idexp::sample;
use idexp_cli::corpus;
use idexp_cli::run::{execute, render, render_json, run_all, Report, RunOptions};
use idexp_cli::script::{parse, Command, RingDecl, Script, Statement};
use serde_json::json;

#[derive(Parser)]
#[command(name = "idexp", version, about = "Exact computations with idealistic exponents")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Emit::Text, global = true)]
    emit: Emit,
    /// Seed for sampled checks.
    #[arg(long, default_value_t = 20240229, global = true)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Json,
}

#[derive(Args)]
struct Target {
    /// Script declaring the ring and pairs.
    file: PathBuf,
    /// Pair to work on; defaults to the first one declared.
    #[arg(long)]
    pair: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Order of a pair at the origin or along a coordinate subspace.
    Order {
        #[command(flatten)]
        target: Target,
        /// Coordinates cutting out the subspace, comma separated.
        #[arg(long)]
        at: Option<String>,
    },
    /// Singular locus via Hasse derivatives.
    Sing(Target),
    /// Tangent cone at the origin.
    Tangent(Target),
    /// Directrix of the tangent cone.
    Directrix(Target),
    /// Ridge in triangular form.
    Ridge(Target),
    /// Classify the reduction step, or follow the chain of maximal contact.
    Reduce {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        chain: bool,
    },
    /// Ridge decomposition with its move certificate.
    Decompose(Target),
    /// Blow up along a coordinate center and pass to one chart.
    Blowup {
        #[command(flatten)]
        target: Target,
        /// Center variables, comma separated.
        #[arg(long)]
        center: String,
        /// Chart variable, one of the center variables.
        #[arg(long)]
        chart: String,
        /// Named boundary from the script.
        #[arg(long)]
        boundary: Option<String>,
    },
    /// Truncated resolution invariant at the origin.
    Invariant {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long)]
        boundary: Option<String>,
    },
    /// Reduced Gröbner basis of each component.
    Gb(Target),
    /// Resolve the generic determinantal variety of r x r minors of an m x n matrix.
    ResolveDet {
        m: usize,
        n: usize,
        r: usize,
        /// `q` or `p=<prime>`.
        #[arg(long, default_value = "q")]
        field: String,
        /// Lift the cap m*n <= 16, r <= 4.
        #[arg(long)]
        allow_large: bool,
    },
    /// Run the commands listed in a script.
    Run { file: PathBuf },
    /// Run the bundled examples against their stored output.
    Corpus {
        /// Entry ids; all entries when empty.
        ids: Vec<String>,
        /// Read entries from this directory instead.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Also check this many seeded random certificates.
        #[arg(long, default_value_t = 0)]
        sample: usize,
        /// Print each entry's output.
        #[arg(long)]
        show: bool,
    },
}

/// Exit 2: usage, parse or rejected input.
fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {}", msg);
    ExitCode::from(2)
}

fn read(path: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {}", path.display(), e)))
}

/// Parse the script with `cmd` appended so names are checked in place.
fn script_with(target: &Target, cmd: impl FnOnce(&str) -> String) -> Result<(Script, Command), ExitCode> {
    let text = read(&target.file)?;
    let base = parse(&text).map_err(|e| usage(format!("{}: {}", target.file.display(), e)))?;
    let pair = match &target.pair {
        Some(p) => p.clone(),
        None => match base.pair_names().first() {
            Some(p) => p.to_string(),
            None => return Err(usage(format!("{}: no pair declared", target.file.display()))),
        },
    };
    let line = cmd(&pair);
    let full = format!("{}\n{};\n", text, line);
    let mut script = parse(&full).map_err(|e| usage(format!("`{}`: {}", line, e.message)))?;
    let Some(Statement::Command(c)) = script.statements.pop() else {
        return Err(usage("internal: command not parsed"));
    };
    Ok((script, c))
}

fn emit(reports: &[Report], mode: Emit) -> ExitCode {
    match mode {
        Emit::Text => print!("{}", render(reports)),
        Emit::Json => println!("{}", serde_json::to_string_pretty(&render_json(reports)).expect("json")),
    }
    if reports.iter().all(|r| r.ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn single(script: &Script, c: &Command, mode: Emit, opts: RunOptions) -> ExitCode {
    match execute(script, c, opts) {
        Ok(r) => emit(&[r], mode),
        Err(e) => usage(e),
    }
}

fn parse_field(s: &str) -> Result<Field, String> {
    if s == "q" || s == "Q" {
        return Ok(Field::Rational);
    }
    let p = s.strip_prefix("p=").ok_or_else(|| format!("unknown field `{}`; use q or p=<prime>", s))?;
    let p: u64 = p.parse().map_err(|_| format!("bad prime `{}`", p))?;
    Field::prime(p).map_err(|e| e.to_string())
}

fn corpus_cmd(ids: &[String], dir: Option<&Path>, samples: usize, show: bool, seed: u64, mode: Emit) -> ExitCode {
    let entries = match dir {
        Some(d) => corpus::load_dir(d),
        None => corpus::load(),
    };
    let entries = match entries {
        Ok(e) => e,
        Err(e) => return usage(format!("corpus: {}", e)),
    };
    let unknown: Vec<&String> = ids.iter().filter(|id| !entries.iter().any(|e| &e.id == *id)).collect();
    if !unknown.is_empty() {
        return usage(format!("unknown corpus ids: {:?}", unknown));
    }
    let chosen: Vec<&corpus::Entry> = entries.iter().filter(|e| ids.is_empty() || ids.contains(&e.id)).collect();
    let outcomes: Vec<corpus::Outcome> = chosen.iter().map(|e| corpus::run_entry(e)).collect();

    let mut bad_samples = Vec::new();
    let mut rng = sample::rng(seed);
    for i in 0..samples {
        let k = sample::small_field(&mut rng);
        let ring = sample::small_ring(&mut rng, k, 3);
        let e = sample::pair(&mut rng, &ring, 4);
        let c = sample::certificate(&mut rng, &e, 4);
        if c.verify().is_err() || !sample::order_mismatches(&c).is_empty() {
            bad_samples.push(i);
        }
    }
    let all_ok = outcomes.iter().all(|o| o.matched) && bad_samples.is_empty();
    match mode {
        Emit::Text => {
            for o in &outcomes {
                match &o.detail {
                    None => println!("{}: ok", o.id),
                    Some(d) => println!("{}: MISMATCH ({})", o.id, d),
                }
                if show {
                    print!("{}", o.output);
                }
            }
            if samples > 0 {
                println!("sampled certificates: {} (seed {}), failures: {:?}", samples, seed, bad_samples);
            }
        }
        Emit::Json => {
            let v = json!({
                "entries": outcomes.iter().map(|o| json!({ "id": o.id, "matched": o.matched, "detail": o.detail })).collect::<Vec<_>>(),
                "samples": samples,
                "seed": seed,
                "sample_failures": bad_samples,
                "ok": all_ok,
            });
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        }
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mode = cli.emit;
    let opts = RunOptions::default();
    let go = |target: &Target, f: &dyn Fn(&str) -> String| match script_with(target, f) {
        Ok((s, c)) => single(&s, &c, mode, opts),
        Err(code) => code,
    };
    match &cli.cmd {
        Cmd::Order { target, at } => go(target, &|p| match at {
            Some(at) => format!("order {} at {}", p, at),
            None => format!("order {}", p),
        }),
        Cmd::Sing(t) => go(t, &|p| format!("sing {}", p)),
        Cmd::Tangent(t) => go(t, &|p| format!("tangent {}", p)),
        Cmd::Directrix(t) => go(t, &|p| format!("directrix {}", p)),
        Cmd::Ridge(t) => go(t, &|p| format!("ridge {}", p)),
        Cmd::Decompose(t) => go(t, &|p| format!("decompose {}", p)),
        Cmd::Gb(t) => go(t, &|p| format!("gb {}", p)),
        Cmd::Reduce { target, chain } => go(target, &|p| format!("reduce {}{}", p, if *chain { " chain" } else { "" })),
        Cmd::Blowup { target, center, chart, boundary } => go(target, &|p| {
            let b = boundary.as_ref().map_or(String::new(), |b| format!(" boundary {}", b));
            format!("blowup {} center {} chart {}{}", p, center, chart, b)
        }),
        Cmd::Invariant { target, depth, boundary } => go(target, &|p| {
            let b = boundary.as_ref().map_or(String::new(), |b| format!(" boundary {}", b));
            format!("invariant {} depth {}{}", p, depth, b)
        }),
        Cmd::ResolveDet { m, n, r, field, allow_large } => {
            let field = match parse_field(field) {
                Ok(f) => f,
                Err(e) => return usage(e),
            };
            if !(*r >= 1 && r <= m && m <= n) {
                return usage(format!("need 1 <= r <= m <= n, got ({},{},{})", m, n, r));
            }
            let c = Command::ResolveDet { m: *m, n: *n, r: *r };
            let script = Script {
                ring: Some(RingDecl { field, u: Vec::new(), y: Vec::new() }),
                statements: vec![Statement::Command(c.clone())],
            };
            single(&script, &c, mode, RunOptions { allow_large: *allow_large })
        }
        Cmd::Run { file } => {
            let text = match read(file) {
                Ok(t) => t,
                Err(c) => return c,
            };
            match parse(&text) {
                Err(e) => usage(format!("{}: {}", file.display(), e)),
                Ok(s) => match run_all(&s, opts) {
                    Ok(r) => emit(&r, mode),
                    Err(e) => usage(e),
                },
            }
        }
        Cmd::Corpus { ids, dir, sample, show } => corpus_cmd(ids, dir.as_deref(), *sample, *show, cli.seed, mode),
    }
}
