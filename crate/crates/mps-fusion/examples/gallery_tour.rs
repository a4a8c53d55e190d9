//! A tour of the built-in state gallery.
//!
//! Lists every gallery entry with its route (normal-tensor protocol or
//! block protocol), defect basis, blocking parameter, and correlation
//! length, then runs a quick all-branch verification of each normal entry
//! at two segments to show the whole gallery is preparable.
//!
//! Run with `cargo run --example gallery_tour`.

use mps_fusion::gallery::{gallery_list, gallery_tensor, GalleryTensor, Route};
use mps_fusion::groups::named_defect_basis;
use mps_fusion::protocols::{protocol1, protocol2, ProtocolConfig};
use mps_fusion::tensor::CorrelationLength;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:<22} {:<10} {:>3} {:>10} {:<10}",
        "name", "route", "q", "xi", "normal"
    );
    for entry in gallery_list() {
        let route = match entry.route {
            Route::Protocol1 => "protocol1",
            Route::Protocol2 => "protocol2",
        };
        let xi = match entry.xi {
            Some(CorrelationLength::Finite(x)) => format!("{x:.4}"),
            Some(CorrelationLength::Infinite) => "inf".into(),
            None => "-".into(),
        };
        println!(
            "{:<22} {:<10} {:>3} {:>10} {:<10}",
            entry.name, route, entry.q, xi, entry.normal
        );
    }
    println!();

    println!("two-segment all-branch verification:");
    for entry in gallery_list() {
        let (tensor, meta) = gallery_tensor(&entry.name, &[])?;
        let basis = named_defect_basis(&meta.basis)?;
        let cfg = ProtocolConfig::new(meta.q, 2);
        let run = match (&tensor, meta.route) {
            (GalleryTensor::Normal(a), Route::Protocol1) => protocol1(a, &basis, &cfg)?,
            (GalleryTensor::Blocked(bs), _) => protocol2(bs, &[basis], &cfg)?,
            (GalleryTensor::Normal(_), Route::Protocol2) => continue,
        };
        println!(
            "  {:<22} branches = {:>3}, worst fidelity = {:.12}",
            entry.name, run.branch_count, run.min_fidelity
        );
    }
    Ok(())
}
