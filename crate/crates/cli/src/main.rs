use clap::Parser;

fn main() {
    let cli = bookrating_cli::Cli::parse();
    match bookrating_cli::run(cli) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
