//! Dump the analysis constants and the layered-induction plan for a given
//! (g, n), the same payload the `nba constants` subcommand prints.
//!
//!     cargo run --release --example constants_ledger

use nba::constants::{constants, layer_plan_from_product, ell_lower_bound};

fn main() {
    let (g, n) = (4u64, 100_000u64);
    let ledger = constants(g, n).expect("ledger");
    println!("constants for g={g}, n={n}:");
    for entry in ledger.entries() {
        match entry.value {
            Some(v) => println!("  {:<14} = {v:<24e}  ({})", entry.name, entry.formula),
            None => println!("  {:<14} = (symbolic)             ({})", entry.name, entry.formula),
        }
    }

    // the layered regime 1 < g < alpha1 ln n only opens at astronomical n,
    // so exercise it through the product form
    let product = 1.0e6;
    let plan = layer_plan_from_product(g as f64, product, &ledger).expect("plan");
    println!("\nlayer plan at alpha1 * ln n = {product:e}, g = {g}:");
    println!("  k = {}", plan.k);
    println!("  offset_base = {:e}, offset_step = {:e}", plan.offset_base, plan.offset_step);
    println!("  phi ladder: {:?}", plan.phi);

    let ell = ell_lower_bound(12, n).expect("ell");
    println!(
        "\nslow-rise phase count ell(g=12, n={n}) = {} (in valid range: {})",
        ell.ell, ell.in_valid_range
    );
}
