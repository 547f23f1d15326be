//! `vplat` command-line interface.
//!
//! Exit status is uniform across subcommands: 0 = pass, 1 = assertion
//! failure, 2 = simulation-level error, 3 = usage or file problem.

mod step;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vplat_core::harness::{
    load_scenario, run_batch, run_scenario, summarize, Outcome, RunOptions, Verdict,
};

#[derive(Parser)]
#[command(name = "vplat", version, about = "Virtual test platform for bare-metal binaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and report its verdict.
    Run {
        /// Scenario file (.vt)
        scenario: PathBuf,
        /// Override scenario and campaign seeds
        #[arg(long)]
        seed: Option<u64>,
        /// Write the instruction trace artifact
        #[arg(long)]
        trace: bool,
        /// Artifact output directory
        #[arg(long, default_value = "vplat-out")]
        out: PathBuf,
    },
    /// Run every scenario in a list file and aggregate the results.
    Campaign {
        /// List file: one scenario path per line, `#` comments
        list: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value = "vplat-out")]
        out: PathBuf,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Load a platform and binary, then step interactively.
    Step {
        /// Platform file (.vp)
        platform: PathBuf,
        /// Binary (executable format or raw image)
        binary: PathBuf,
        /// Load address for raw images (decimal or 0x hex)
        #[arg(long, value_parser = parse_address)]
        load_address: Option<u64>,
    },
    /// Parse and validate platform, scenario, or campaign files.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Summarize a verdict report (verdicts.jsonl).
    Report { report: PathBuf },
}

fn parse_address(text: &str) -> Result<u64, String> {
    let cleaned = text.replace('_', "");
    let parsed = if let Some(hex) = cleaned.strip_prefix("0x").or_else(|| cleaned.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        cleaned.parse()
    };
    parsed.map_err(|_| format!("`{text}` is not an unsigned integer"))
}

fn main() -> ExitCode {
    // Die quietly on closed pipes (`vplat ... | head`) like other unix
    // tools instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's help/version on stdout with status 0; everything
            // else is a usage error.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(3) };
        }
    };
    let status = match cli.command {
        Command::Run { scenario, seed, trace, out } => cmd_run(&scenario, seed, trace, &out),
        Command::Campaign { list, seed, trace, out, jobs } => {
            cmd_campaign(&list, seed, trace, &out, jobs)
        }
        Command::Step { platform, binary, load_address } => {
            step::cmd_step(&platform, &binary, load_address)
        }
        Command::Validate { files } => cmd_validate(&files),
        Command::Report { report } => cmd_report(&report),
    };
    ExitCode::from(status)
}

fn outcome_status(outcomes: impl Iterator<Item = Outcome>) -> u8 {
    let mut status = 0u8;
    for o in outcomes {
        status = status.max(match o {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Error => 2,
        });
    }
    status
}

fn cmd_run(path: &Path, seed: Option<u64>, trace: bool, out: &Path) -> u8 {
    let opts = RunOptions { seed_override: seed, trace };
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("vplat: {e}");
            return 3;
        }
    };
    let run = match run_scenario(&scenario, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("vplat: {e}");
            return 3;
        }
    };
    if let Err(e) = run.write_to(out) {
        eprintln!("vplat: writing artifacts to {}: {e}", out.display());
        return 3;
    }
    print!("{}", summarize(std::slice::from_ref(&run.verdict)));
    outcome_status(std::iter::once(run.verdict.outcome))
}

fn read_scenario_list(path: &Path) -> Result<Vec<PathBuf>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let paths: Vec<PathBuf> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        })
        .collect();
    if paths.is_empty() {
        return Err(format!("{}: no scenarios listed", path.display()));
    }
    Ok(paths)
}

fn cmd_campaign(list: &Path, seed: Option<u64>, trace: bool, out: &Path, jobs: usize) -> u8 {
    let paths = match read_scenario_list(list) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("vplat: {e}");
            return 3;
        }
    };
    let opts = RunOptions { seed_override: seed, trace };
    let batch = run_batch(&paths, &opts, jobs);

    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("vplat: creating {}: {e}", out.display());
        return 3;
    }
    for run in &batch.runs {
        if let Err(e) = run.write_to(out) {
            eprintln!("vplat: writing artifacts: {e}");
            return 3;
        }
    }
    if let Err(e) = fs::write(out.join("verdicts.jsonl"), batch.report_jsonl()) {
        eprintln!("vplat: writing report: {e}");
        return 3;
    }
    for (i, merged) in batch.merged_coverage.iter().enumerate() {
        let name = if i == 0 {
            "coverage.merged.cov".to_string()
        } else {
            format!("coverage.merged.{}.cov", i + 1)
        };
        if let Err(e) = fs::write(out.join(name), merged.render()) {
            eprintln!("vplat: writing merged coverage: {e}");
            return 3;
        }
    }
    let verdicts: Vec<Verdict> = batch.runs.iter().map(|r| r.verdict.clone()).collect();
    print!("{}", summarize(&verdicts));
    outcome_status(verdicts.iter().map(|v| v.outcome))
}

fn cmd_validate(files: &[PathBuf]) -> u8 {
    let mut status = 0u8;
    for path in files {
        match validate_one(path) {
            Ok(kind) => println!("{}: ok ({kind})", path.display()),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                status = 3;
            }
        }
    }
    status
}

fn validate_one(path: &Path) -> Result<&'static str, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let doc = vplat_core::kv::parse_document(&text).map_err(|e| e.to_string())?;
    let first = doc
        .sections
        .first()
        .ok_or_else(|| "empty document".to_string())?;
    if first.name == "platform" {
        vplat_core::parse_platform(&text).map_err(|e| e.to_string())?;
        return Ok("platform");
    }
    if first.name == "scenario" {
        let scenario = load_scenario(path).map_err(|e| e.to_string())?;
        // Referenced files must exist and parse.
        let platform_text =
            fs::read_to_string(&scenario.platform_path).map_err(|e| {
                format!("referenced platform {}: {e}", scenario.platform_path.display())
            })?;
        vplat_core::parse_platform(&platform_text).map_err(|e| e.to_string())?;
        if !scenario.binary_path.exists() {
            return Err(format!(
                "referenced binary {} does not exist",
                scenario.binary_path.display()
            ));
        }
        if let Some(c) = &scenario.campaign_path {
            let campaign_text = fs::read_to_string(c)
                .map_err(|e| format!("referenced campaign {}: {e}", c.display()))?;
            vplat_core::parse_campaign(&campaign_text).map_err(|e| e.to_string())?;
        }
        return Ok("scenario");
    }
    if first.name == "campaign" || first.name.starts_with("fault.") {
        vplat_core::parse_campaign(&text).map_err(|e| e.to_string())?;
        return Ok("campaign");
    }
    Err(format!("unrecognized document (first section [{}])", first.name))
}

fn cmd_report(path: &Path) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("vplat: {}: {e}", path.display());
            return 3;
        }
    };
    let mut verdicts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json_from_line(line) {
            Ok(v) => verdicts.push(v),
            Err(e) => {
                eprintln!("vplat: {}:{}: {e}", path.display(), i + 1);
                return 3;
            }
        }
    }
    print!("{}", summarize(&verdicts));
    outcome_status(verdicts.iter().map(|v| v.outcome))
}

fn serde_json_from_line(line: &str) -> Result<Verdict, String> {
    vplat_core::harness::verdict_from_json(line)
}
