use clap::Parser;

fn main() {
    let args: Vec<_> = std::env::args_os().collect();
    let level = match fwmr_cli::Cli::try_parse_from(&args).map(|c| c.verbose) {
        Ok(0) | Err(_) => "warn",
        Ok(1) => "info",
        Ok(_) => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = fwmr_cli::run_cli(args, &mut std::io::stdout().lock());
    std::process::exit(code);
}
