fn main() {
    std::process::exit(fcm::cli::run(std::env::args_os()));
}
