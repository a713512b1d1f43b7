use clap::Parser;

use meltline::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MELTLINE_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        eprintln!("{}", failure.json);
        std::process::exit(failure.exit_code);
    }
}
