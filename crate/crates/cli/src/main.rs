use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use crnash_cli::{run, Cli, CliError};

fn emit(target: &Path, text: &str) -> Result<(), CliError> {
    if target.as_os_str() == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("stdout: {e}")))
    } else {
        std::fs::write(target, text).map_err(|e| CliError::Input(format!("{}: {e}", target.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        let to_stdout = |p: &Option<std::path::PathBuf>| p.as_ref().is_some_and(|p| p.as_os_str() == "-");
        if let Some(path) = &cli.global.json {
            emit(path, &out.report)?;
        }
        if let (Some(path), Some(csv)) = (&cli.global.csv, &out.csv) {
            emit(path, csv)?;
        }
        if !to_stdout(&cli.global.json) && !to_stdout(&cli.global.csv) {
            print!("{}", out.summary);
        }
        Ok(out.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
