use clap::Parser;

fn main() {
    isp_cli::init_logging();
    let cli = isp_cli::Cli::parse();
    if let Err(e) = isp_cli::run(cli) {
        let mut msg = format!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            msg += &format!("\n  caused by: {s}");
            source = s.source();
        }
        eprintln!("{msg}");
        std::process::exit(e.exit_code());
    }
}
