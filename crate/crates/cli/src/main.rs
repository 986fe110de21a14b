use clap::Parser;

fn main() {
    let cli = bpo_cli::Cli::parse();
    if let Err(err) = bpo_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(bpo_cli::exit_code(&err));
    }
}
