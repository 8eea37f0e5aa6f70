fn main() {
    let code = qkd_ratelab_cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
