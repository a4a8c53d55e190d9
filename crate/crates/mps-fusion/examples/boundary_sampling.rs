//! Boundary measurement statistics of a prepared chain.
//!
//! After all fusions succeed, the chain still carries two dangling bond
//! qudits. Closing the boundary is a projective measurement: for a periodic
//! target the pair is measured in the maximally entangled defect basis, and
//! each of the D^2 outcomes picks a different (correctable) closure. For a
//! long chain the outcome distribution flattens to 1/D^2, so the
//! postselection succeeds with constant probability. The open-boundary
//! shortcut grows the last segment from a fixed right edge vector, leaving a
//! single bond qudit whose outcomes approach 1/D.
//!
//! Run with `cargo run --example boundary_sampling`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use mps_fusion::gallery::gallery_tensor;
use mps_fusion::groups::{named_defect_basis, BasisSpec};
use mps_fusion::linalg::{cr, CVec};
use mps_fusion::protocols::{sequential_prepare, SegmentSeed};
use mps_fusion::sim::fusion_basis_unitary;
use mps_fusion::tensor::{dense_state, BoundarySpec};
use mps_fusion::DEFAULT_BUDGET;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (tensor, _) = gallery_tensor("aklt", &[])?;
    let aklt = tensor.normal()?;
    let n = 8;

    let rep = named_defect_basis(&BasisSpec::QuditPauli(2))?;
    let (vfuse, _) = fusion_basis_unitary(&rep)?;
    let mut chain = dense_state(&aklt, &BoundarySpec::Entangled, n, DEFAULT_BUDGET)?;
    chain.apply_unitary(&vfuse, &[n, n + 1])?;
    let probs = chain.outcome_distribution(&[n, n + 1])?;

    println!("periodic closure, AKLT chain of {n} sites:");
    println!("  exact Bell-outcome probabilities: {:?}", probs);

    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let shots = 10_000;
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..shots {
        let mut draw = rng.gen::<f64>();
        let mut k = probs.len() - 1;
        for (cand, &p) in probs.iter().enumerate() {
            if draw < p {
                k = cand;
                break;
            }
            draw -= p;
        }
        counts[k] += 1;
    }
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    let tv: f64 =
        0.5 * freqs.iter().zip(probs.iter()).map(|(f, p)| (f - p).abs()).sum::<f64>();
    println!("  frequencies over {shots} seeded shots: {:?}", freqs);
    println!("  total variation distance: {tv:.4}");
    println!();

    let mut right: CVec = CVec::zeros(2);
    right[0] = cr(1.0);
    let open = sequential_prepare(&aklt, n, &SegmentSeed::FixedRight(right), DEFAULT_BUDGET)?;
    let edge = open.outcome_distribution(&[n])?;
    println!("open-boundary shortcut (fixed right edge):");
    println!("  left edge outcome probabilities: {:?}", edge);
    Ok(())
}
