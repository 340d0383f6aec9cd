use std::io::{self, IsTerminal};
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let outcome = neron_core::cli::execute(&argv);
    let mut stderr = outcome.stderr;
    if io::stderr().is_terminal() && std::env::var_os("NO_COLOR").is_none() {
        if let Some(rest) = stderr.strip_prefix("error:") {
            stderr = format!("\x1b[1;31merror:\x1b[0m{rest}");
        }
    }
    print!("{}", outcome.stdout);
    eprint!("{stderr}");
    ExitCode::from(u8::try_from(outcome.code).unwrap_or(1))
}
