//! Prints a built-in scenario as a config file: `cargo run --example dump_config -- noisy`.

use resilient_cacc::sim::ScenarioConfig;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "noise-free".to_string());
    match ScenarioConfig::named(&name) {
        Ok(c) => print!("{}", c.to_toml()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(3);
        }
    }
}
