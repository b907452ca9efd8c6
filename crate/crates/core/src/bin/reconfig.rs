use clap::Parser;
use reconfig::cli::{execute, init_logging, Cli};

fn main() {
    init_logging();
    std::process::exit(execute(Cli::parse()));
}
