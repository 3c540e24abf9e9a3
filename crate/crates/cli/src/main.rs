use clap::Parser;
use horocycle_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli, &mut std::io::stdout(), &mut std::io::stderr()) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("horo: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
