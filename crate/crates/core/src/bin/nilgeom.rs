fn main() {
    std::process::exit(nilgeom::cli::run(std::env::args_os()));
}
