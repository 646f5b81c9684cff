//! Load a TOML run configuration and run the verification suite on it.
//!
//! `cargo run --release --example verify_config -- configs/demo.toml`

use fracdelay::config::RunConfig;
use fracdelay::verify::run_verification;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/demo.toml").into());
    let cfg = RunConfig::load(path.as_ref())?;

    // the parsed file round-trips through TOML
    assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string())?, cfg);

    let report = run_verification(&cfg)?;
    print!("{}", report.render());
    std::process::exit(if report.passed(false) { 0 } else { 1 });
}
