use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use hodgeloc_cli::args::Cli;
use hodgeloc_cli::error::exit;
use hodgeloc_cli::{commands, document};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            emit(&out.text);
            ExitCode::from(if out.passed { exit::PASS } else { exit::CHECK_FAILED })
        }
        Err(e) => {
            let code = e.exit_code();
            let doc = serde_json::json!({
                "schema_version": document::SCHEMA_VERSION,
                "command": cli.echo(),
                "error": { "kind": e.kind(), "exit_code": code, "message": e.to_string() },
                "passed": false,
            });
            emit(&serde_json::to_string_pretty(&doc).expect("error document"));
            eprintln!("hodgeloc: {e}");
            ExitCode::from(code)
        }
    }
}

/// Write to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
