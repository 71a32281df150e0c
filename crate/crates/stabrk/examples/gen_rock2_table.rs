//! Regenerates the vendored ROCK2 coefficient asset.
//!
//! Usage: `cargo run --release -p stabrk --example gen_rock2_table [path]`
//! (default path: `crates/stabrk/assets/rock2_coeffs.txt` relative to the
//! crate root).

use stabrk::rock2::generate::{generate_tableau, ladder_degrees, write_table};

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| format!("{}/assets/rock2_coeffs.txt", env!("CARGO_MANIFEST_DIR")));
    let mut tabs = Vec::new();
    for s in ladder_degrees() {
        let t = generate_tableau(s).unwrap_or_else(|e| panic!("degree {s}: {e}"));
        eprintln!(
            "s = {:3}  ell = {:12.4}  ell/s^2 = {:.4}  sigma1 = {:.6}  sigma2 = {:.6}",
            t.s,
            t.ell,
            t.ell / (t.s * t.s) as f64,
            t.sigma1,
            t.sigma2
        );
        tabs.push(t);
    }
    std::fs::write(&path, write_table(&tabs)).expect("write asset");
    eprintln!("wrote {path}");
}
