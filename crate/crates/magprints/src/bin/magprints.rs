//! The `magprints` executable: see `magprints --help`.

fn main() {
    std::process::exit(magprints::cli::run(std::env::args_os()));
}
