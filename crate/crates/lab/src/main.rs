fn main() {
    std::process::exit(shift_lab::cli::run());
}
