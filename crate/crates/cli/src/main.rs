use clap::Parser;

fn main() {
    let cli = capswitch_cli::Cli::parse();
    std::process::exit(capswitch_cli::execute(cli));
}
