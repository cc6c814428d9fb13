use std::io;

fn main() {
    let code = cavity_rabi::cli::main_with_args(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
