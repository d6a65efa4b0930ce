use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(latent_bias::cli::run(std::env::args_os()))
}
