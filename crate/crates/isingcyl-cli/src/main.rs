use clap::Parser;
use isingcyl_cli::{configure_threads, run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(f) = configure_threads().and_then(|_| run(&cli)) {
        eprintln!("error: {f}");
        std::process::exit(f.exit_code());
    }
}
