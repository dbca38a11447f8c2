use std::process::exit;

use clap::Parser;

use mbvar::cli::{self, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MBVAR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help and version print to stdout and exit cleanly; real
            // usage errors exit 1
            let code = i32::from(err.use_stderr());
            let _ = err.print();
            exit(code);
        }
    };
    if let Err(err) = cli::run(cli) {
        eprintln!("error: {err}");
        exit(cli::exit_code(&err));
    }
}
