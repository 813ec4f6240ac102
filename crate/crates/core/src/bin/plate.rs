fn main() {
    std::process::exit(plate_fem::cli::run(std::env::args_os()));
}
