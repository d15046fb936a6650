//! Thin binary wrapper around the library's command-line front end.

fn main() {
    std::process::exit(eigenba::harness::cli::run());
}
