use std::process::ExitCode;

use clap::Parser;
use levyfield::cli::{run, Cli, ErrorRecord};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = ErrorRecord::from(&e);
            eprintln!("{}", serde_json::to_string(&record).expect("record serializes"));
            ExitCode::from(record.exit_code as u8)
        }
    }
}
