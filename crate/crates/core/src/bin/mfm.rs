fn main() { std::process::exit(mfm::cli::main()) }
