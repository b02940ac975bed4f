//! `itpq`: reproducible runs of the contextuality and infinite-tensor-product
//! studies. Each run writes its artifacts plus a `manifest.json` recording
//! the parameters, seed, tolerances and tool version.
//!
//! Exit status: 0 when a result was computed (including negative results such
//! as "not colorable"), 1 when output files could not be written, 2 on
//! invalid input.

mod args;
mod commands;
mod input;
mod manifest;

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use itpq_core::{tolerances, Tolerances};

use args::{Cli, Command};
use commands::Outcome;
use manifest::RunManifest;

/// Environment variable naming a JSON file of tolerance overrides.
const TOLERANCE_ENV: &str = "ITPQ_TOLERANCES";

enum Failure {
    Input(anyhow::Error),
    Output(anyhow::Error),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Output(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let (command, recorded) = match &cli.command {
        Command::Replay(r) => {
            let m = RunManifest::load(&r.manifest).map_err(Failure::Input)?;
            (m.command().map_err(Failure::Input)?, Some(m.tolerances))
        }
        other => (other.clone(), None),
    };
    install_tolerances(recorded).map_err(Failure::Input)?;
    let outcome = commands::run(&command).map_err(Failure::Input)?;
    write_outputs(&cli.out_dir, &command, &outcome).map_err(Failure::Output)?;
    // a closed pipe on stdout is not a failure; the files are already written
    let _ = writeln!(
        io::stdout(),
        "{}",
        serde_json::to_string_pretty(&outcome.summary).expect("summary serializes")
    );
    Ok(())
}

/// Tolerances recorded in a replayed manifest win over the environment.
fn install_tolerances(recorded: Option<Tolerances>) -> Result<()> {
    let chosen = match (recorded, std::env::var_os(TOLERANCE_ENV)) {
        (Some(t), _) => t,
        (None, Some(path)) => {
            let path = Path::new(&path);
            let text = fs::read_to_string(path)
                .with_context(|| format!("{TOLERANCE_ENV}: cannot read {}", path.display()))?;
            Tolerances::from_json(&text)
                .with_context(|| format!("{TOLERANCE_ENV}: {}", path.display()))?
        }
        (None, None) => return Ok(()),
    };
    chosen.install()?;
    Ok(())
}

fn write_outputs(dir: &Path, command: &Command, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let names = outcome.files.iter().map(|(n, _)| n.clone()).collect();
    let manifest = RunManifest::new(command, outcome.seed, *tolerances(), names);
    let mut manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_text.push('\n');
    let all = outcome.files.iter().map(|(n, c)| (n.as_str(), c.as_str()));
    for (name, contents) in all.chain([(manifest::FILE_NAME, manifest_text.as_str())]) {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}
