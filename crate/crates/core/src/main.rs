use clap::Parser;

fn main() {
    let cli = flapsim::cli::Cli::parse();
    if let Err(e) = flapsim::cli::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
