use clap::Parser;

use ffesn::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(&cli, std::env::vars().collect()) {
        eprintln!("error: {e}");
        std::process::exit(e.category().exit_code());
    }
}
