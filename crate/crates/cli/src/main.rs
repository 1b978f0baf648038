use clap::Parser;

fn main() {
    let cli = amp_sentinel::Cli::parse();
    if let Err(failure) = amp_sentinel::run(cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.exit_code());
    }
}
