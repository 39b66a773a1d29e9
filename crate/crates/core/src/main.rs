fn main() -> std::process::ExitCode {
    poisson_chaos::cli::run()
}
