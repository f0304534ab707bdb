use clap::Parser;

fn main() {
    if let Err(e) = irsdm_cli::run(irsdm_cli::Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
