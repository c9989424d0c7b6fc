//! Runs every check on the built-in manifests and on a manifest given inline.

use nilgeom::manifest::{Manifest, BUILTIN_NAMES};
use nilgeom::verify::{Outcome, Overrides, Target, Verifier};

const CUSTOM: &str = r#"
name = "custom"

[manifold]
n = 1
coords = ["x", "y"]

[metric]
components = [["cos(x) + 2", "1"], ["1", "0"]]

[form]
q = ["x", "0.5"]

[curve]
z0 = [0.0, 0.0]
v0 = [0.5, 0.5]
t_end = 1.0
step = 0.002
a = "0"
b = "t"
"#;

fn summarize(m: &Manifest) -> nilgeom::Result<()> {
    let mut v = Verifier::new(m, m.sampling, Overrides::default());
    println!("{} (kind {:?}, digest {}...)", m.name, m.kind, &m.digest[..12]);
    for t in Target::ALL {
        match v.run(t)? {
            Outcome::Report(r) => println!("  {:<12} {:<5} max residual {:.1e}", t.name(), r.passed, r.max_residual),
            Outcome::Skipped(why) => println!("  {:<12} skip  {why}", t.name()),
        }
    }
    Ok(())
}

fn main() -> nilgeom::Result<()> {
    for name in BUILTIN_NAMES {
        summarize(&Manifest::builtin(name).expect("builtin"))?;
    }
    summarize(&Manifest::from_toml(CUSTOM)?)
}
