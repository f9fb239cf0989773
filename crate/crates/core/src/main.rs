use std::io::Write;

fn main() {
    let out = prodgeom::cli::main_with_args(std::env::args_os());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(out.status);
}
