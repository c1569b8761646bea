mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Pose(a) => commands::pose(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Traj(a) => commands::traj(a),
        Command::Serve(a) => commands::serve(a),
        Command::Send(a) => commands::send(a),
        Command::Replay(a) => commands::replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quadkin: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
