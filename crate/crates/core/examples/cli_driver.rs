//! Runs command-line operations through the library entry point.
//!
//! Usage: `cargo run --example cli_driver [-- SYSTEM.json]` (default: the bundled Cantor system)

use gifs::cli::run;

fn main() {
    let sys = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/systems/cantor.json").to_string());
    for cmd in [vec!["validate"], vec!["dimension"], vec!["lattice", "--q", "0"], vec!["beta", "--q", "0:2:1"]] {
        let mut args = vec!["gifs", cmd[0], sys.as_str()];
        args.extend(&cmd[1..]);
        println!("$ {}", args.join(" "));
        let code = run(args);
        println!("(exit {code})");
    }
}
