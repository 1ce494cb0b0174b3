use clap::Parser;

fn main() {
    let args = linmed_cli::Args::parse();
    std::process::exit(linmed_cli::main_with_args(args));
}
