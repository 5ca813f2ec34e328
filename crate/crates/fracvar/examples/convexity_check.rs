//! Sampled joint-convexity certificates.
//!
//! Joint convexity of the integrand in (y, v) upgrades stationary points
//! to global minimizers. The certificate samples the subgradient
//! inequality over a box; convex integrands report zero violations,
//! bilinear and concave ones are caught.
//!
//! ```bash
//! cargo run --example convexity_check
//! ```

use fracvar::expr::parse_lagrangian;
use fracvar::variational::convexity_certificate;

fn main() -> fracvar::Result<()> {
    let cases = [
        ("v1^2", "convex quadratic"),
        ("0.5*(v1 - exp(x))^2", "convex tracking term"),
        ("v1^2 + y1^2", "separable convex"),
        ("y1*v1", "bilinear"),
        ("-v1^2", "concave"),
        ("y1^2 - 0.1*v1^2", "indefinite"),
        ("exp(y1) + v1^2", "convex, non-quadratic"),
    ];
    let bounds = [(-2.0, 2.0), (-2.0, 2.0)];
    println!(
        "{:<24}  {:>10}  {:>12}  note",
        "integrand", "violations", "worst gap"
    );
    for (src, note) in cases {
        let expr = parse_lagrangian(src, 1, 0)?;
        let report = convexity_certificate(&expr, (0.0, 1.0), &bounds, &[], 5000)?;
        println!(
            "{src:<24}  {:>10}  {:>12.3e}  {note}",
            report.violations, report.worst_gap
        );
    }
    println!("\n5000 sample pairs per integrand over (y, v) in [-2, 2]^2");
    Ok(())
}
