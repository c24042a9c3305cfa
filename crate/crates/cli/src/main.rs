use clap::Parser;

fn main() {
    let cli = fwe_cli::args::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = fwe_cli::run(cli, &mut stdout) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
