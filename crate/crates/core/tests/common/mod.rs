//! Helpers shared by the integration tests.
#![allow(dead_code)]

use nilgeom::expr::default_coord_names;
use nilgeom::{parse, Connection, Expression, Signature, TensorField, TensorValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random polynomial text of total degree <= `degree` in `vars`, coefficients in [-1, 1].
pub fn poly_text(rng: &mut ChaCha8Rng, vars: &[String], degree: u32) -> String {
    let mut terms = vec![format!("{:.4}", rng.random_range(-1.0..1.0))];
    let mut monomials: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..degree {
        let mut next = Vec::new();
        for m in &monomials {
            let start = m.last().copied().unwrap_or(0) as usize;
            for v in start..vars.len() {
                let mut m2 = m.clone();
                m2.push(v as u32);
                next.push(m2);
            }
        }
        for m in &next {
            let c: f64 = rng.random_range(-1.0..1.0);
            let factors: Vec<&str> = m.iter().map(|&v| vars[v as usize].as_str()).collect();
            terms.push(format!("({c:.4})*{}", factors.join("*")));
        }
        monomials = next;
    }
    terms.join(" + ")
}

pub fn poly(rng: &mut ChaCha8Rng, vars: &[String], degree: u32) -> Expression {
    parse(&poly_text(rng, vars, degree), vars).expect("generated polynomial parses")
}

/// Torsion-free connection on `n` variables with random polynomial coefficients.
pub fn random_symmetric_connection(rng: &mut ChaCha8Rng, n: usize, degree: u32) -> Connection {
    let vars = default_coord_names(n);
    let mut table = vec![Expression::zero(); n * n * n];
    for u in 0..n {
        for a in 0..n {
            for b in a..n {
                let e = poly(rng, &vars, degree);
                table[(u * n + a) * n + b] = e.clone();
                table[(u * n + b) * n + a] = e;
            }
        }
    }
    Connection::new(n, table).expect("consistent table")
}

pub fn metric(rows: &[&str]) -> TensorField {
    let dim = (rows.len() as f64).sqrt().round() as usize;
    let names = default_coord_names(dim);
    let comps = rows.iter().map(|t| parse(t, &names).expect("metric entry parses")).collect();
    TensorField::new(dim, Signature::parse("ll"), comps).expect("square metric")
}

/// Max over sample points of the three pairwise purity differences of a
/// connection, written out index by index.
pub fn connection_purity_by_hand(gamma: &Connection, f: &TensorValue, points: &[Vec<f64>]) -> f64 {
    let d = gamma.dim;
    let mut worst = 0.0f64;
    for p in points {
        let g = gamma.evaluate(p).unwrap();
        for s in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let (mut up, mut l1, mut l2) = (0.0, 0.0, 0.0);
                    for l in 0..d {
                        up += f.get(&[s, l]) * g.get(&[l, a, b]);
                        l1 += g.get(&[s, l, b]) * f.get(&[l, a]);
                        l2 += g.get(&[s, a, l]) * f.get(&[l, b]);
                    }
                    worst = worst.max((up - l1).abs()).max((up - l2).abs()).max((l1 - l2).abs());
                }
            }
        }
    }
    worst
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
