mod args;
mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Exit;
use settings::Settings;

fn run(cli: Cli) -> Result<Exit, String> {
    let (common, f): (_, fn(&args::Common, &Settings) -> Result<Exit, String>) = match &cli.command {
        Command::Sample(c) => (c, commands::sample),
        Command::Simulate(c) => (c, commands::simulate_cmd),
        Command::Verify(c) => (c, commands::verify),
        Command::Bench(c) => (c, commands::bench),
    };
    let settings = Settings::resolve(common)?;
    let threads = settings.threads.unwrap_or(1);
    if threads == 0 {
        return Err("--threads must be >= 1".into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| f(common, &settings))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(exit) => exit,
        Err(msg) => {
            eprintln!("error: {msg}");
            Exit::Usage
        }
    };
    ExitCode::from(code as u8)
}
