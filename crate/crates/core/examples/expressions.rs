//! Parse, differentiate and evaluate component expressions.

use nilgeom::expr::default_coord_names;
use nilgeom::parse;

fn main() -> nilgeom::Result<()> {
    let names = default_coord_names(2);
    let e = parse("z1^2 * sin(z2) + exp(-z1) / 2", &names)?;
    println!("e        = {}", e.display_with(&names));
    for k in 0..2 {
        let d = e.diff(k);
        println!("de/d{}   = {}", names[k], d.display_with(&names));
        println!("  at (0.5, 1.0): {}", d.eval(&[0.5, 1.0])?);
    }
    println!("e(0.5, 1.0) = {}", e.eval(&[0.5, 1.0])?);

    // Errors carry positions.
    for bad in ["z1 +* 2", "z1^1.5", "cosh(z1)", "w + 1"] {
        println!("{bad:>10}: {}", parse(bad, &names).unwrap_err());
    }
    // Domain failures surface at evaluation.
    let l = parse("log(z1)", &names)?;
    println!("log(-1): {}", l.eval(&[-1.0, 0.0]).unwrap_err());
    Ok(())
}
