use std::process::ExitCode;

use kirchhoff_obstacle::cli::{parse_config, run};

fn main() -> ExitCode {
    let result = parse_config(std::env::args_os()).and_then(|cfg| {
        let out = cfg.out.clone();
        run(&cfg).map(|r| (r, out))
    });
    match result {
        Ok((run, out)) => {
            let last = run.history.last().expect("at least one level");
            println!(
                "{} levels, final ndof {}, eta {:.6e}; history written to {}",
                run.history.len(),
                last.ndof,
                last.eta,
                out.join("history.csv").display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
