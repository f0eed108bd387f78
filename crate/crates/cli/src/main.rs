use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use recog_cli::{run, Cli, CliError};

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RECOG_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("RECOG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::config(e.to_string()))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::config(first).to_line());
            std::process::exit(2);
        }
    };
    if let Err(e) = configure_threads().and_then(|_| run(cli)) {
        eprintln!("{}", e.to_line());
        std::process::exit(e.code());
    }
}
