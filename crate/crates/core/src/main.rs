use std::process::ExitCode;

use mixaug::cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match cli::threads_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("error: {e}");
                return ExitCode::from(cli::EXIT_FAILURE as u8);
            }
        }
        Ok(None) => {}
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(cli::EXIT_USAGE as u8);
        }
    }
    ExitCode::from(cli::run(std::env::args_os()) as u8)
}
