mod cli;

use clap::Parser;

fn main() {
    let parsed = cli::Cli::parse();
    if let Err(err) = cli::run(parsed) {
        eprintln!("mtaudit: {err}");
        std::process::exit(err.exit_code());
    }
}
