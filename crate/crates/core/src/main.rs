use clap::Parser;
use thermoshift::cli::{emit, exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = run(&cli);
    let mut code = exit_code(&result);
    match &result {
        Ok(out) => {
            if let Err(e) = emit(&cli, out) {
                eprintln!("error: {e}");
                code = 2;
            }
            if code != 0 {
                eprintln!("error: {}: the reported checks did not pass", cli.command.name());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(code);
}
