use clap::Parser;
use idsq_cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}
