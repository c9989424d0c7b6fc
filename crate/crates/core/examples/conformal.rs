//! Conformal rescaling and the sum g + g̃.

use nilgeom::connection::{conformal_purity_scan, derivative_purity, metric_plus_tilde, tilde_connection_residual};
use nilgeom::manifest::Manifest;
use nilgeom::parse;

fn main() -> nilgeom::Result<()> {
    let m = Manifest::builtin("curved-B").expect("builtin");
    let (g, f, s) = (&m.chart.metric, &m.chart.f, &m.sampling);
    let names = &m.chart.coords;

    println!("∂g pure: {}", derivative_purity(g, f, s)?.passed);
    for h in ["7.5", "exp(z1)", "1 + z2^2"] {
        let r = conformal_purity_scan(g, &parse(h, names)?, f, s)?;
        let res = r.residual("scaled_derivative_purity");
        println!("h = {h:<9} ∂(hg) residual {res:.3e}  passed {}", r.passed);
    }

    let sum = metric_plus_tilde(g, f, s)?;
    println!("g + g̃:");
    for i in 0..2 {
        let row: Vec<String> = (0..2).map(|j| sum.get(&[i, j]).display_with(names).to_string()).collect();
        println!("  [{}]", row.join(", "));
    }
    let r = tilde_connection_residual(g, f, s)?;
    println!("same Christoffel symbols: {} ({:.1e})", r.passed, r.max_residual);
    Ok(())
}
