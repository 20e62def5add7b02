mod args;
mod commands;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use settings::{Failure, FileConfig};

fn run(cli: &Cli) -> Result<(), Failure> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let reference_mode = cli.reference_mode || file.reference_mode.unwrap_or(false);
    seqveritas::numerics::set_parallel(!reference_mode);
    match &cli.command {
        Command::Prepare(a) => commands::prepare(a, &file, reference_mode),
        Command::Train(a) => commands::train(a, &file, reference_mode),
        Command::Eval(a) => commands::eval(a, &file, reference_mode),
        Command::Predict(a) => commands::predict(a, reference_mode),
        Command::Gradcheck(a) => commands::gradcheck(a, &file, reference_mode),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
