use clap::Parser;

fn main() {
    let cli = bdqm::cli::Cli::parse();
    std::process::exit(bdqm::cli::run(&cli));
}
