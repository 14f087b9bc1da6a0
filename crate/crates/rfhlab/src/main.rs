use clap::Parser;

use rfhlab::cli::{init_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
    let out = run(&cli);
    print!("{}", out.stdout);
    if let Some(e) = out.error {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
