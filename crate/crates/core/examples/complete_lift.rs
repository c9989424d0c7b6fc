//! Complete lifts of a base connection and metric, and lifted coordinate changes.

use nilgeom::connection::pure_family_residual;
use nilgeom::expr::default_coord_names;
use nilgeom::manifold::{complete_lift_metric, TransitionMap};
use nilgeom::{adapted_f, parse, Connection, Sampling, Signature, TensorField};

fn main() -> nilgeom::Result<()> {
    let s = Sampling::default();
    let base_names = default_coord_names(2);
    let base = TensorField::new(
        2,
        Signature::parse("ll"),
        ["1", "0", "0", "1 + z1^2"].iter().map(|t| parse(t, &base_names)).collect::<nilgeom::Result<_>>()?,
    )?;
    let names = default_coord_names(4);

    let gamma = Connection::christoffel(&base)?;
    let lifted = gamma.complete_lift()?;
    println!("lifted connection, nonzero coefficients:");
    for u in 0..4 {
        for a in 0..4 {
            for b in a..4 {
                let e = lifted.get(u, a, b);
                if !e.is_zero() {
                    println!("  Γ^{}_{{{}{}}} = {}", u + 1, a + 1, b + 1, e.display_with(&names));
                }
            }
        }
    }
    let f = adapted_f(2, 0);
    println!("pure: {}", lifted.purity(&f, &s)?.passed);
    println!("block identities: {}", pure_family_residual(&lifted, 2, 0, &s)?.passed);

    // Same connection from the lifted metric.
    let g_c = complete_lift_metric(&base)?;
    let direct = Connection::christoffel(&g_c)?;
    let p = [0.3, -0.2, 0.5, 0.1];
    println!("|Γ(g^C) - (Γ)^C| at {p:?}: {:e}", direct.evaluate(&p)?.max_abs_diff(&lifted.evaluate(&p)?));

    // Coordinate changes of the lifted form commute with f.
    let t =
        TransitionMap::new(2, 0, vec![parse("z1 + 0.2*z2^2", &names)?, parse("2*z2 + sin(z1)/4", &names)?], vec![])?;
    let lt = t.lift(&s)?;
    for (i, e) in lt.map.iter().enumerate() {
        println!("  z{}' = {}", i + 1, e.display_with(&names));
    }
    println!("Jf = fJ: {}", lt.report.passed);
    Ok(())
}
