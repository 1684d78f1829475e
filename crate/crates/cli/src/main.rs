use clap::error::ErrorKind;
use clap::Parser;
use keyshot::error::CliError;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match keyshot::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            // clap's message up to the usage block, on one line
            let text = e.to_string();
            let msg: Vec<&str> = text.lines().map(str::trim).take_while(|l| !l.is_empty()).collect();
            let err = CliError::usage(msg.join(" ").trim_start_matches("error: "));
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    };
    if let Err(e) = keyshot::run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
