fn main() {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .init();
    std::process::exit(infoflow::cli::main_with(std::env::args_os()));
}
