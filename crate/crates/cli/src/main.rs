use clap::Parser;

fn main() {
    let cli = uavsense_cli::Cli::parse();
    std::process::exit(uavsense_cli::run(cli));
}
