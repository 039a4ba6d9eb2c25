use schurpress::cli::{run_cli, CliEnv};

fn main() {
    let env = match CliEnv::from_env() {
        Ok(env) => env,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    std::process::exit(run_cli(std::env::args_os(), &env));
}
