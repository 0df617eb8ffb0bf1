fn main() -> std::process::ExitCode {
    nft_core::cli::main()
}
