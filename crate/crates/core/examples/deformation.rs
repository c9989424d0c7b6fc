//! Affine deformation by a one-form and its effect on PH-curves.

use nilgeom::connection::{deformation_tensor, nabla_f_check, OneForm};
use nilgeom::curves::{integrate_ph_curve, theorem7_ph_transform, PHCoefficients};
use nilgeom::manifest::Manifest;
use nilgeom::{parse, Connection};

fn main() -> nilgeom::Result<()> {
    let m = Manifest::builtin("curved-B").expect("builtin");
    let (g, f, s) = (&m.chart.metric, &m.chart.f, &m.sampling);
    let names = &m.chart.coords;
    let q = OneForm(vec![parse("0.5 + z2", names)?, parse("z1^2 - 0.25", names)?]);

    let t = deformation_tensor(&q, f)?;
    for idx in nilgeom::tensor::multi_indices(2, 3) {
        let e = t.get(&idx);
        if !e.is_zero() {
            println!("T^{}_{{{}{}}} = {}", idx[0] + 1, idx[1] + 1, idx[2] + 1, e.display_with(names));
        }
    }

    let gamma = Connection::christoffel(g)?;
    let deformed = gamma.deform(&t)?;
    println!("Γ + T pure: {}", deformed.purity(f, s)?.passed);
    println!("∇f after deformation: {:.1e}", nabla_f_check(&deformed, f, s)?.residual("nabla_f"));

    let coeffs = PHCoefficients::parse("0.3", "1 - t")?;
    let curve = integrate_ph_curve(&gamma, f, &[0.2, -0.1], &[0.7, 0.4], &coeffs, 1.0, 0.001)?;
    let r = theorem7_ph_transform(&gamma, &q, f, &curve, 1e-4)?;
    for d in &r.details {
        println!("  {:<10} {:?} {}", d.label, d.residual, d.note.as_deref().unwrap_or(""));
    }
    Ok(())
}
