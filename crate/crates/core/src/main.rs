use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let code = multiskew::cli::run(args, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code)
}
