use clap::Parser;
use rbfihmm_cli::{execute, resolve, Cli, CliError};

fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve(&cli.common)?;
    if cfg.run.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    execute(cli.command, &cfg)
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            if !summary.is_empty() {
                println!("{summary}");
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
