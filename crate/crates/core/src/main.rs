fn main() {
    std::process::exit(wkglab_core::cli::dispatch(std::env::args_os()));
}
