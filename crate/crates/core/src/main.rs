fn main() {
    std::process::exit(defect_spectro::cli::run(std::env::args_os()));
}
