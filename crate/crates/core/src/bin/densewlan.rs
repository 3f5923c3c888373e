fn main() {
    std::process::exit(densewlan::cli::main_with_args())
}
