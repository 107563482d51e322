use std::io;

fn main() {
    let code = gtx::cli::run(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
        gtx::cli::color_from_env(),
    );
    std::process::exit(code);
}
