fn main() {
    let (code, out) = feyncat::cli::run(std::env::args_os());
    print!("{out}");
    std::process::exit(code);
}
