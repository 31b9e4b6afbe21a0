use std::process::exit;

fn main() {
    exit(entnet_cli::run(std::env::args_os()));
}
