//! Operator pushing tables for several gallery states.
//!
//! A fusion measurement deposits a defect unitary on a virtual bond. The
//! defect is removed by pushing it through the site tensor: a pair of
//! virtual operators is replicated by a physical unitary whenever the
//! virtual operator commutes with the Gram matrix of the flattened tensor.
//! This example builds the full defect-to-correction table for a few states
//! and prints, for each defect, the partner defect that re-emerges on the
//! left and the residual of the realized pushing relation.
//!
//! Run with `cargo run --example operator_pushing`.

use mps_fusion::gallery::gallery_tensor;
use mps_fusion::groups::named_defect_basis;
use mps_fusion::pushing::build_pushing_table;
use mps_fusion::tensor::block_tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let states: [(&str, Vec<(&str, f64)>); 4] = [
        ("ghz", vec![("d", 2.0)]),
        ("z2_family", vec![("g", -0.5)]),
        ("aklt", vec![]),
        ("cluster", vec![]),
    ];
    for (name, params) in &states {
        let (tensor, entry) = gallery_tensor(name, params)?;
        let a = tensor.normal()?;
        let basis = named_defect_basis(&entry.basis)?;
        let blocked = block_tensor(&a, entry.q)?;
        let table = build_pushing_table(&blocked, &basis)?;
        println!(
            "{name} (q = {}, {} defects, complete = {}):",
            entry.q,
            table.entries.len(),
            table.complete
        );
        println!("  {:>6} {:>8} {:>12}", "defect", "partner", "residual");
        for (g, entry) in table.entries.iter().enumerate() {
            match entry {
                Some(e) => println!("  {:>6} {:>8} {:>12.3e}", g, e.partner, e.residual),
                None => println!("  {:>6} {:>8} {:>12}", g, "-", "none"),
            }
        }
        println!();
    }
    Ok(())
}
