//! Transfer spectra and correlation lengths across tunable families.
//!
//! The correlation length of a normal matrix product state is set by the
//! ratio of the two largest transfer-matrix eigenvalues. Both tunable
//! gallery families admit closed forms, which this example reproduces
//! numerically across a parameter sweep, including the divergence of the
//! Z2 family at its critical point g = 0.
//!
//! Run with `cargo run --example correlation_lengths`.

use mps_fusion::gallery::gallery_tensor;
use mps_fusion::tensor::{correlation_length, CorrelationLength};

fn show(xi: &CorrelationLength) -> String {
    match xi {
        CorrelationLength::Finite(x) => format!("{x:.9}"),
        CorrelationLength::Infinite => "infinite".into(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("Z2 family, xi = 1/|ln((1+g)/(1-g))|:");
    println!("  {:>6} {:>14} {:>14}", "g", "measured", "closed form");
    for i in 0..9 {
        let g = -0.8 + 0.2 * i as f64;
        let (tensor, _) = gallery_tensor("z2_family", &[("g", g)])?;
        let xi = correlation_length(&tensor.normal()?)?;
        let closed = if g == 0.0 {
            "infinite".to_string()
        } else {
            format!("{:.9}", 1.0 / ((1.0 + g) / (1.0 - g)).ln().abs())
        };
        println!("  {:>6.2} {:>14} {:>14}", g, show(&xi), closed);
    }
    println!();

    println!("A4 family, xi = -1/ln((1/2) sqrt(1 + 3 cos^2 theta)):");
    println!("  {:>6} {:>14} {:>14}", "theta", "measured", "closed form");
    for i in 0..7 {
        let theta = 0.4 + 0.4 * i as f64;
        let (tensor, _) = gallery_tensor("a4_family", &[("theta", theta), ("phi", 0.3)])?;
        let xi = correlation_length(&tensor.normal()?)?;
        let closed = -1.0 / (0.5 * (1.0 + 3.0 * theta.cos().powi(2)).sqrt()).ln();
        println!("  {:>6.2} {:>14} {:>14.9}", theta, show(&xi), closed);
    }
    Ok(())
}
