use clap::Parser;

fn main() {
    let cli = folim_cli::Cli::parse();
    if let Err(e) = folim_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
