use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use sinhgordon_cli::{common, configure_threads, run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &common(&cli.command).out {
        Some(path) => File::create(path).map_err(CliError::from).and_then(|f| {
            let mut w = BufWriter::new(f);
            run(&cli.command, &mut w)?;
            w.flush()?;
            Ok(())
        }),
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let r = run(&cli.command, &mut w);
            // keep whatever was produced (e.g. a trajectory up to blow-up)
            w.flush().map_err(CliError::from).and(r)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
