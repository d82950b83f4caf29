use std::io;

fn main() {
    let code = bipspec_cli::run_from(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
