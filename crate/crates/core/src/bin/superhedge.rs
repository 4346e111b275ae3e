use clap::Parser;

use superhedge::cli::{exit_code, run, Cli, Command};

fn main() {
    let cli = Cli::parse();
    let verbose = match &cli.command {
        Command::Price(c) | Command::Check(c) => c.verbose,
        Command::Hedge { common, .. } | Command::Converge { common, .. } => common.verbose,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if verbose { "info" } else { "warn" }))
        .init();
    match run(&cli) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.document).unwrap());
            std::process::exit(out.code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
