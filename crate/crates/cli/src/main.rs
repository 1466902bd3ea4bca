fn main() {
    std::process::exit(hitopic::run(std::env::args_os()));
}
