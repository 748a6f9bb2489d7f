fn main() { std::process::exit(sil_cli::run(std::env::args_os().collect())); }
