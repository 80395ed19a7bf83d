use clap::Parser;

fn main() {
    // clap exits with status 2 on usage errors
    let cli = cpm_cli::Cli::parse();
    if let Err(e) = cpm_cli::run(&cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
