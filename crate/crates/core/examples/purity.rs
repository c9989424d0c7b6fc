//! Pure and hybrid metrics with respect to the adapted structure.

use nilgeom::manifold::{kernel_basis, metric_constraint_basis, MetricType};
use nilgeom::tensor::{is_hybrid, is_pure};
use nilgeom::{adapted_f, parse, Sampling, Signature, TensorField};

fn metric(rows: &[&str]) -> nilgeom::Result<TensorField> {
    let names = nilgeom::expr::default_coord_names(4);
    let comps = rows.iter().map(|t| parse(t, &names)).collect::<nilgeom::Result<_>>()?;
    TensorField::new(4, Signature::parse("ll"), comps)
}

fn main() -> nilgeom::Result<()> {
    let s = Sampling::default();
    let f = adapted_f(2, 0);
    let fv = f.evaluate(&[0.0; 4])?;
    println!("ker f = {:?}", kernel_basis(&fv));

    for kind in [MetricType::BType, MetricType::KaehlerType] {
        let basis = metric_constraint_basis(&fv, kind);
        println!("{kind:?}: {} free entries {:?}", basis.len(), basis.iter().map(|(ij, _)| *ij).collect::<Vec<_>>());
    }

    // Pure: off-diagonal identity blocks plus a base block.
    let pure = metric(&["1 + z1^2", "0.5", "1", "0", "0.5", "2", "0", "1", "1", "0", "0", "0", "0", "1", "0", "0"])?;
    // Hybrid: zero fiber block, antisymmetric mixed block.
    let hybrid = metric(&[
        "1",
        "0.5",
        "0",
        "1 + z3^2",
        "0.5",
        "2",
        "-1 - z3^2",
        "0",
        "0",
        "-1 - z3^2",
        "0",
        "0",
        "1 + z3^2",
        "0",
        "0",
        "0",
    ])?;
    for (name, g) in [("pure", &pure), ("hybrid", &hybrid)] {
        let p = is_pure(g, 0, 1, &f, &s)?;
        let h = is_hybrid(g, 0, 1, &f, &s)?;
        println!(
            "{name:>6}: pure {} (res {:.1e}), hybrid {} (res {:.1e})",
            p.passed, p.max_residual, h.passed, h.max_residual
        );
    }
    Ok(())
}
