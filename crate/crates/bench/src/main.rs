use clap::Parser;
use ksvd_bench::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("ksvd-bench: {e}");
        std::process::exit(e.exit_code());
    }
}
