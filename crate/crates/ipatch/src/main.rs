use clap::Parser;

fn main() {
    let cli = ipatch::cli::Cli::parse();
    match ipatch::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.code());
        }
    }
}
