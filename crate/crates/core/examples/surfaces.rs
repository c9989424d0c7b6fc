//! Holomorphic surfaces over a base curve, reparametrizations and u-lines.

use nilgeom::curves::{build_surface, integrate_geodesic, reparametrize_surface, surface_u_line, theorem6_check};
use nilgeom::manifest::Manifest;
use nilgeom::{parse, Connection, Sampling};

fn main() -> nilgeom::Result<()> {
    let uv = ["u".to_string(), "v".to_string()];
    let s = Sampling::default().with_box(0.1, 1.0);

    let surface = build_surface(vec![parse("sin(u)", &uv)?, parse("u^3", &uv)?])?;
    for (i, e) in surface.fiber.iter().enumerate() {
        println!("z{} = {}", i + 3, e.display_with(&uv));
    }
    println!("point(0.5, 2) = {:?}", surface.point(0.5, 2.0)?);
    println!("pair conditions: {}", surface.check(&s)?.passed);

    for (h, t) in [("u^2", "2*u*v"), ("2*u", "v")] {
        let (_, r) = reparametrize_surface(&surface, &parse(h, &uv)?, &parse(t, &uv)?, &s)?;
        println!("u -> {h}, v -> {t}: {} ({:.1e})", r.passed, r.max_residual);
    }

    // u-lines over a base geodesic of the lifted-curved base metric.
    let m = Manifest::builtin("lifted-curved").expect("builtin");
    let base = m.base_metric.as_ref().expect("base metric");
    let gamma = Connection::christoffel(base)?;
    let geo = integrate_geodesic(&gamma, &[0.1, 0.2], &[0.8, -0.3], 1.0, 0.01)?;
    let line = surface_u_line(&geo, 0.5)?;
    println!("u-line at v = 0.5 ends at {:?}", line.last().unwrap().z);
    let r = theorem6_check(&gamma, &geo, &[-1.0, 0.5, 2.0], 1e-5)?;
    for d in &r.details {
        println!("  {:<34} {:.2e}", d.label, d.residual.unwrap_or(f64::NAN));
    }
    Ok(())
}
