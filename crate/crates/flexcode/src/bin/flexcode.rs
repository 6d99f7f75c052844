use clap::Parser;

fn main() {
    let cli = flexcode::cli::Cli::parse();
    if let Err(e) = flexcode::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(flexcode::cli::exit_code(&e));
    }
}
