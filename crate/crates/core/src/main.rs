use clap::Parser;

use spin2cv::cli::{run, Cli, RunConfig};

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&RunConfig::from(cli.command)));
}
