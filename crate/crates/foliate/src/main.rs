use std::process::ExitCode;

use clap::Parser;
use foliate::{report, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = run(&cli);
    let text = report.render(cli.global.format);
    if let Some(e) = &report.error {
        eprintln!("foliate {}: {}", report.command, e.message);
    }
    let code = match &cli.global.out {
        Some(path) => match report::write_atomic(path, &text) {
            Ok(()) => report.exit_code,
            Err(e) => {
                eprintln!("foliate: cannot write {}: {e}", path.display());
                5
            }
        },
        None => {
            print!("{text}");
            report.exit_code
        }
    };
    ExitCode::from(code as u8)
}
