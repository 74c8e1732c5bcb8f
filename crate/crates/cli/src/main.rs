use clap::Parser;

fn main() {
    let cli = swsynth_cli::Cli::parse();
    if let Err(e) = swsynth_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}
