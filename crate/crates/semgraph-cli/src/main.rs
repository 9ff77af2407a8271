use clap::Parser;

fn main() {
    let cli = semgraph_cli::Cli::parse();
    match semgraph_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
