use clap::Parser;

use nakagami_sum::cli::{run, Cli};

fn main() {
    let spec = match Cli::parse().into_run_spec() {
        Ok(spec) => spec,
        Err(e) => fail(&e),
    };
    match run(&spec) {
        Ok(text) => {
            if spec.out.is_none() {
                print!("{text}");
            }
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &nakagami_sum::Error) -> ! {
    // Machine-readable error record on stderr.
    eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
    std::process::exit(1);
}
