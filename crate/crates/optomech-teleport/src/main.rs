use std::process::ExitCode;

use optomech_teleport::cli;
use optomech_teleport::config;

fn main() -> ExitCode {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        println!("{}", config::USAGE);
        return ExitCode::SUCCESS;
    }
    let (command, cfg) = match config::load(&args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("omt: {e}");
            return ExitCode::from(2);
        }
    };
    match cli::run(command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
