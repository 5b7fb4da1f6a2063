use clap::Parser;
use fascd_cli::{run_experiment, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match cli.into_spec() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("fascd: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&spec) {
        Ok(report) => {
            println!("level       m_J  cycles    residual      rate   time(s)");
            for r in &report.rows {
                let cycles = if r.converged { r.cycles.to_string() } else { "NC".into() };
                println!(
                    "{:5} {:9} {:>7} {:11.3e} {:9.3e} {:9.3}",
                    r.levels, r.m, cycles, r.residual, r.rate, r.seconds
                );
            }
            if report.all_converged() {
                ExitCode::SUCCESS
            } else {
                eprintln!("fascd: some levels did not converge; see {}", spec.out_dir.join("iterations.csv").display());
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("fascd: {e}");
            ExitCode::FAILURE
        }
    }
}
