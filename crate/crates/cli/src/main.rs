use clap::Parser;
use prediff_cli::args::{Cli, Command};
use prediff_cli::{commands, error::EXIT_VALIDATION};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    let name = match &cli.command {
        Command::FitModel(_) => "fit-model",
        Command::Explain(_) => "explain",
        Command::Deepvis(_) => "deepvis",
        Command::Sensitivity(_) => "sensitivity",
        Command::Run(_) => "run",
    };
    let result = match cli.command {
        Command::FitModel(a) => commands::fit_model(&a),
        Command::Explain(a) => commands::explain_cmd(&a),
        Command::Deepvis(a) => commands::deepvis(&a),
        Command::Sensitivity(a) => commands::sensitivity(&a),
        Command::Run(a) => commands::run(&a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("prediff {name}: error: {e}");
            println!(
                "{}",
                serde_json::json!({"command": name, "status": "error", "kind": e.kind(), "message": e.message})
            );
            ExitCode::from(e.code as u8)
        }
    }
}
