use clap::Parser;
use depauw_cli::commands::{run, Cli};

fn main() {
    let status = run(Cli::parse());
    std::process::exit(status.code());
}
