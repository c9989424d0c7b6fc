//! Geodesics, PH-curves, classification and parallel transport.

use nilgeom::curves::{
    classify_curve, energy, integrate_geodesic, integrate_ph_curve, parallel_transport, richardson_estimate, write_csv,
    PHCoefficients,
};
use nilgeom::manifest::Manifest;
use nilgeom::Connection;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = Manifest::builtin("curved-B").expect("builtin");
    let (g, f) = (&m.chart.metric, &m.chart.f);
    let gamma = Connection::christoffel(g)?;
    let (z0, v0) = ([0.2, -0.1], [0.7, 0.4]);

    let geo = integrate_geodesic(&gamma, &z0, &v0, 1.0, 0.001)?;
    let e = energy(g, &geo)?;
    let drift = e.iter().fold(0.0f64, |a, x| a.max((x - e[0]).abs()));
    println!("geodesic end {:?}, energy drift {drift:.1e}", geo.last().unwrap().z);
    let zero = PHCoefficients::zero();
    println!("richardson error estimate {:.1e}", richardson_estimate(&gamma, f, &z0, &v0, &zero, 1.0, 0.01)?);
    let c = classify_curve(&gamma, f, &geo)?;
    println!("geodesic: {}, PH: {}", c.is_geodesic(), c.is_ph());

    let coeffs = PHCoefficients::parse("0.3", "1 - t")?;
    let ph = integrate_ph_curve(&gamma, f, &z0, &v0, &coeffs, 1.0, 0.001)?;
    let c = classify_curve(&gamma, f, &ph)?;
    println!("forced curve: geodesic {}, PH {}", c.is_geodesic(), c.is_ph());
    for fit in c.fits.iter().step_by(250) {
        println!("  t = {:.2}  a = {:.6}  b = {:.6}", fit.t, fit.a, fit.b.unwrap_or(f64::NAN));
    }

    let w = parallel_transport(&gamma, &geo, &[0.3, -0.5])?;
    println!("transported w0 -> {:?}", w.last().unwrap());

    let mut csv = Vec::new();
    write_csv(&ph[..3], &mut csv)?;
    print!("{}", String::from_utf8(csv)?);
    Ok(())
}
