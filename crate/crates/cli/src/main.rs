mod config;
mod output;
mod run;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use config::{Cli, RunConfig};

fn emit(text: &str, out: Option<&std::path::Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = RunConfig::resolve(cli).and_then(|cfg| {
        let (text, ok) = run::run(&cfg)?;
        emit(&text, cfg.out.as_deref())?;
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            log::error!("{err:#}");
            let text = run::error_document(&err);
            if emit(&text, out.as_deref()).is_err() {
                print!("{text}");
            }
            ExitCode::FAILURE
        }
    }
}
