use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use droidsec::genfuzz::{gen_action, gen_valid_state_with, rng_from_seed, DEFAULT_BIAS};
use droidsec::io::{
    emit_report, emit_state, emit_trace, parse_action, read_state_file, read_trace_file,
    state_digest, write_file, IoError, TraceFile,
};
use droidsec::propsuite::{differential_soundness, run_props, validity_preserved};
use droidsec::traces::run_unchecked;
use droidsec::{check_validity, step, Platform};

/// Reference monitor for the Android 6 permission model.
#[derive(Parser)]
#[command(name = "droidsec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace file and print the per-step report.
    Replay {
        trace: PathBuf,
        /// Initial state file, overriding the trace's own.
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Stop after the first error response.
        #[arg(long)]
        stop_on_error: bool,
        /// Write each successive state to this directory.
        #[arg(long)]
        emit_states: Option<PathBuf>,
    },
    /// Check a state file against the validity clauses.
    CheckState {
        state: PathBuf,
        /// Trace file whose platform section defines the built-in permissions.
        #[arg(long)]
        platform: Option<PathBuf>,
    },
    /// Run the property checks.
    Props {
        #[arg(long)]
        only: Option<String>,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for counterexample traces.
        #[arg(long, default_value = ".")]
        dump_dir: PathBuf,
    },
    /// Fuzz the step function against the declarative relation and the
    /// validity invariant.
    Fuzz {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_BIAS)]
        bias: f64,
        /// Directory for counterexample traces.
        #[arg(long, default_value = ".")]
        dump_dir: PathBuf,
    },
    /// Execute one action on a state and print the result.
    Step {
        state: PathBuf,
        /// The action as a JSON literal, e.g. '{"uninstall": {"app": "a"}}'.
        action: String,
        #[arg(long)]
        platform: Option<PathBuf>,
    },
}

/// Exit code for a property violation or replay mismatch.
const FAILED: u8 = 1;
/// Exit code for malformed input.
const MALFORMED: u8 = 2;

fn malformed(e: IoError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(MALFORMED)
}

fn platform_from(path: Option<&Path>) -> Result<Platform, IoError> {
    match path {
        None => Ok(Platform::sample()),
        Some(p) => Ok(read_trace_file(p)?.platform),
    }
}

fn replay(trace: &Path, initial: Option<&Path>, stop_on_error: bool, emit_states: Option<&Path>) -> Result<ExitCode, IoError> {
    let t = read_trace_file(trace)?;
    let base = trace.parent().unwrap_or(Path::new("."));
    let s0 = match initial {
        Some(p) => read_state_file(p)?,
        None => t.initial_state(base)?,
    };
    let validity = check_validity(&s0, &t.platform);
    if !validity.is_valid() {
        eprintln!("initial state is invalid:\n{validity}");
        return Ok(ExitCode::from(MALFORMED));
    }
    let report = run_unchecked(&s0, &t.actions, &t.platform, stop_on_error);
    if let Some(dir) = emit_states {
        std::fs::create_dir_all(dir).map_err(|source| IoError::File {
            path: dir.to_path_buf(),
            source,
        })?;
        for (i, s) in report.states.iter().enumerate() {
            write_file(&dir.join(format!("state_{i:04}.json")), &emit_state(s))?;
        }
    }
    let records = report.records();
    print!("{}", emit_report(&records));
    if let Some(expected) = &t.expected {
        if expected != &records {
            let at = expected
                .iter()
                .zip(&records)
                .position(|(e, r)| e != r)
                .unwrap_or(expected.len().min(records.len()));
            eprintln!("replay differs from the recorded outcome at step {at}");
            return Ok(ExitCode::from(FAILED));
        }
        eprintln!("replay matches the recorded outcome ({} steps)", records.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn check_state(state: &Path, platform: Option<&Path>) -> Result<ExitCode, IoError> {
    let s = read_state_file(state)?;
    let report = check_validity(&s, &platform_from(platform)?);
    if report.is_valid() {
        println!("valid ({})", state_digest(&s));
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{report}");
        Ok(ExitCode::from(FAILED))
    }
}

fn dump(dir: &Path, name: &str, text: &str) -> Result<PathBuf, IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    write_file(&path, text)?;
    Ok(path)
}

fn props(only: Option<&str>, cases: usize, seed: u64, dump_dir: &Path) -> Result<ExitCode, IoError> {
    let outcomes = match run_props(only, cases, seed, &Platform::sample()) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Ok(ExitCode::from(MALFORMED));
        }
    };
    let mut all_passed = true;
    for o in &outcomes {
        let verdict = if o.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} {:<16} {} cases, {} failures", o.name, o.cases, o.failures);
        if let Some(note) = &o.note {
            println!("     {note}");
        }
        if let Some(cx) = &o.counterexample {
            let path = dump(dump_dir, &format!("counterexample_{}.trace.json", o.name), cx)?;
            println!("     counterexample written to {}", path.display());
        }
        all_passed &= o.passed();
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(FAILED) })
}

fn fuzz(seed: u64, steps: usize, bias: f64, dump_dir: &Path) -> Result<ExitCode, IoError> {
    let platform = Platform::sample();
    let mut rng = rng_from_seed(seed);
    let mut failures = 0usize;
    let mut s = gen_valid_state_with(&mut rng, 3, &platform);
    for i in 0..steps {
        if i % 20 == 0 {
            s = gen_valid_state_with(&mut rng, i / 20 % 5 + 1, &platform);
        }
        let a = gen_action(&mut rng, &s, &platform, bias);
        let result = differential_soundness(&s, &a, &platform).and_then(|()| validity_preserved(&s, &a, &platform));
        if let Err(msg) = result {
            failures += 1;
            let file = TraceFile::new(Some(s.clone()), platform.clone(), vec![a.clone()]);
            let path = dump(dump_dir, &format!("fuzz_{seed}_{i}.trace.json"), &emit_trace(&file))?;
            println!("step {i}: {msg}\n     counterexample written to {}", path.display());
        }
        s = step(&s, &a, &platform).st;
    }
    println!("{steps} steps, {failures} failures");
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(FAILED) })
}

fn one_step(state: &Path, action: &str, platform: Option<&Path>) -> Result<ExitCode, IoError> {
    let s = read_state_file(state)?;
    let a = parse_action(action)?;
    let r = step(&s, &a, &platform_from(platform)?);
    println!("{}", r.resp);
    print!("{}", emit_state(&r.st));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Replay {
            trace,
            initial,
            stop_on_error,
            emit_states,
        } => replay(trace, initial.as_deref(), *stop_on_error, emit_states.as_deref()),
        Command::CheckState { state, platform } => check_state(state, platform.as_deref()),
        Command::Props {
            only,
            cases,
            seed,
            dump_dir,
        } => props(only.as_deref(), *cases, *seed, dump_dir),
        Command::Fuzz {
            seed,
            steps,
            bias,
            dump_dir,
        } => fuzz(*seed, *steps, *bias, dump_dir),
        Command::Step {
            state,
            action,
            platform,
        } => one_step(state, action, platform.as_deref()),
    };
    result.unwrap_or_else(malformed)
}

