use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let inv = secknow_cli::run_command(std::env::args().skip(1));
    // Usage errors have no report and belong on stderr.
    let _ = if inv.report.is_none() && inv.code != 0 {
        std::io::stderr().lock().write_all(inv.output.as_bytes())
    } else {
        std::io::stdout().lock().write_all(inv.output.as_bytes())
    };
    ExitCode::from(inv.code as u8)
}
