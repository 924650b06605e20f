use clap::Parser;

use seed_cli::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = seed_cli::run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
