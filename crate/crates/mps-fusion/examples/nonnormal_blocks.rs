//! Preparing a non-normal (GHZ-like) state with the block protocol.
//!
//! The Majumdar-Ghosh ground-state tensor decomposes into two irreducible
//! blocks, so the state is a superposition of two normal matrix product
//! states. The block protocol entangles a block-index register with every
//! growth step, resolves each fusion outcome per block, and finally removes
//! the register with a Walsh measurement plus a phase correction on the edge
//! block wire. Every combination of fusion and Walsh outcomes lands exactly
//! on the target superposition.
//!
//! Run with `cargo run --example nonnormal_blocks`.

use mps_fusion::gallery::gallery_tensor;
use mps_fusion::groups::named_defect_basis;
use mps_fusion::protocols::{protocol2, ProtocolConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["majumdar_ghosh", "z4xz2"] {
        let (tensor, entry) = gallery_tensor(name, &[])?;
        let bs = tensor.blocked()?;
        let basis = named_defect_basis(&entry.basis)?;
        let cfg = ProtocolConfig::new(entry.q, 3);
        let run = protocol2(&bs, &[basis], &cfg)?;

        println!("{name}: {}", entry.description);
        println!(
            "  blocks = {}, segments = {}, branches = {}",
            bs.blocks.len(),
            cfg.n,
            run.branch_count
        );
        println!(
            "  {:<10} {:<10} {:>12} {:>14}",
            "fusion", "walsh", "probability", "fidelity"
        );
        for branch in run.branches.iter().take(8) {
            let outs: Vec<String> =
                branch.fusion_outcomes.iter().map(|k| k.to_string()).collect();
            let blk: Vec<String> =
                branch.block_outcomes.iter().map(|k| k.to_string()).collect();
            println!(
                "  {:<10} {:<10} {:>12.6} {:>14.10}",
                outs.join(","),
                blk.join(","),
                branch.probability,
                branch.fidelity
            );
        }
        if run.branch_count > 8 {
            println!("  ... {} more branches", run.branch_count - 8);
        }
        println!("  worst fidelity over all branches: {:.12}", run.min_fidelity);
        println!();
    }
    Ok(())
}
