//! Christoffel symbols, Riemann tensor and curvature purity on a built-in chart.

use nilgeom::connection::nabla_f_check;
use nilgeom::curvature::{classify_purity, ricci_identity_residual};
use nilgeom::manifest::Manifest;
use nilgeom::manifold::MetricType;
use nilgeom::{Connection, Curvature};

fn main() -> nilgeom::Result<()> {
    let m = Manifest::builtin("lifted-curved").expect("builtin");
    let (g, f, s) = (&m.chart.metric, &m.chart.f, &m.sampling);
    let names = &m.chart.coords;

    let gamma = Connection::christoffel(g)?;
    let d = gamma.dim;
    for u in 0..d {
        for a in 0..d {
            for b in a..d {
                let e = gamma.get(u, a, b);
                if !e.is_zero() {
                    println!("Γ^{}_{{{}{}}} = {}", u + 1, a + 1, b + 1, e.display_with(names));
                }
            }
        }
    }
    println!("torsion {:.1e}", gamma.torsion_residual(s)?);
    println!("connection purity: {}", gamma.purity(f, s)?.passed);
    println!("∇f: {:.1e}", nabla_f_check(&gamma, f, s)?.residual("nabla_f"));

    let r = Curvature::riemann(&gamma);
    println!("flat: {}", r.is_flat());
    let ids = r.identities(Some(g), s)?;
    println!("identities passed: {} (max {:.1e})", ids.passed, ids.max_residual);

    let ricci = ricci_identity_residual(&gamma, f, s)?;
    for d in &ricci.details {
        println!("  {:<24} {:?}", d.label, d.residual);
    }
    let lowered = r.lowered(g)?;
    let pairs = classify_purity(&lowered, f, MetricType::BType, s)?;
    for d in &pairs.details {
        println!("  {:<24} {:?} {}", d.label, d.residual, d.note.as_deref().unwrap_or(""));
    }
    Ok(())
}
