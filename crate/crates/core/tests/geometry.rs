//! Connections, curvature and curves checked against numeric oracles built
//! only from metric evaluations.

mod common;

use nilgeom::connection::{deformation_tensor, nabla_f_check, OneForm};
use nilgeom::curves::{classify_curve, integrate_geodesic, integrate_ph_curve, parallel_transport, PHCoefficients};
use nilgeom::expr::default_coord_names;
use nilgeom::manifest::Manifest;
use nilgeom::manifold::complete_lift_metric;
use nilgeom::{adapted_f, Connection, Curvature, Sampling, TensorField};

use common::*;

fn metric_at(g: &TensorField, p: &[f64]) -> Vec<f64> {
    g.evaluate(p).unwrap().data
}

/// Γ^σ_{αβ} from central differences of the metric and a nalgebra inverse.
fn fd_christoffel(g: &TensorField, p: &[f64]) -> Vec<f64> {
    let d = g.dim;
    let h = 1e-5;
    let mut dg = vec![vec![0.0; d * d]; d];
    for (k, slot) in dg.iter_mut().enumerate() {
        let (mut a, mut b) = (p.to_vec(), p.to_vec());
        a[k] += h;
        b[k] -= h;
        let (ga, gb) = (metric_at(g, &a), metric_at(g, &b));
        for i in 0..d * d {
            slot[i] = (ga[i] - gb[i]) / (2.0 * h);
        }
    }
    let inv = nalgebra::DMatrix::from_row_slice(d, d, &metric_at(g, p)).try_inverse().unwrap();
    let mut out = vec![0.0; d * d * d];
    for s in 0..d {
        for a in 0..d {
            for b in 0..d {
                out[(s * d + a) * d + b] = 0.5
                    * (0..d)
                        .map(|l| inv[(s, l)] * (dg[a][l * d + b] + dg[b][l * d + a] - dg[l][a * d + b]))
                        .sum::<f64>();
            }
        }
    }
    out
}

#[test]
fn christoffel_matches_finite_differences_on_builtins() {
    for name in ["curved-B", "lifted-curved", "kahler-4"] {
        let m = Manifest::builtin(name).unwrap();
        let gamma = Connection::christoffel(&m.chart.metric).unwrap();
        for p in Sampling::default().sample_points(m.dim()).iter().take(5) {
            let exact = gamma.evaluate(p).unwrap().data;
            let fd = fd_christoffel(&m.chart.metric, p);
            assert!(max_abs_diff(&exact, &fd) < 1e-6, "{name} at {p:?}");
        }
    }
}

#[test]
fn christoffel_matches_finite_differences_on_random_b_metrics() {
    let mut rng = rng(21);
    let vars = vec!["z1".to_string()];
    for _ in 0..8 {
        let p = poly_text(&mut rng, &vars, 3);
        let g = metric(&[&p, "1", "1", "0"]);
        let gamma = Connection::christoffel(&g).unwrap();
        for pt in Sampling::default().sample_points(2).iter().take(4) {
            assert!(max_abs_diff(&gamma.evaluate(pt).unwrap().data, &fd_christoffel(&g, pt)) < 1e-6);
        }
    }
}

#[test]
fn lift_of_levi_civita_is_levi_civita_of_lifted_metric() {
    let names = default_coord_names(2);
    let mut rng = rng(22);
    for _ in 0..4 {
        let a = poly_text(&mut rng, &names[..2], 2);
        let base = metric(&[&format!("3 + 0.2*({a})"), "0.3", "0.3", "2 + z1^2"]);
        let lifted_metric = complete_lift_metric(&base).unwrap();
        let from_base = Connection::christoffel(&base).unwrap().complete_lift().unwrap();
        let direct = Connection::christoffel(&lifted_metric).unwrap();
        for p in Sampling::default().sample_points(4) {
            let diff = from_base.evaluate(&p).unwrap().max_abs_diff(&direct.evaluate(&p).unwrap());
            assert!(diff < 1e-10, "{diff}");
        }
    }
}

#[test]
fn riemann_of_round_sphere_chart() {
    // g = diag(1, sin² θ) has R^θ_{φθφ} = sin² θ.
    let g = metric(&["1", "0", "0", "sin(z1)^2"]);
    let r = Curvature::riemann(&Connection::christoffel(&g).unwrap());
    for th in [0.4, 0.9, 1.3] {
        let v = r.evaluate(&[th, 0.2]).unwrap();
        assert!((v.get(&[0, 1, 0, 1]) - th.sin().powi(2)).abs() < 1e-12);
        assert!((v.get(&[1, 0, 0, 1]) + 1.0).abs() < 1e-12);
    }
    assert!(Curvature::riemann(&Connection::christoffel(&metric(&["0", "1", "1", "0"])).unwrap()).is_flat());
}

#[test]
fn deformed_lifts_stay_pure_and_parallel() {
    let s = Sampling::default();
    let mut rng = rng(23);
    for n in [1usize, 2] {
        let names = default_coord_names(2 * n);
        let f = adapted_f(n, 0);
        for _ in 0..3 {
            let gamma = random_symmetric_connection(&mut rng, n, 2).complete_lift().unwrap();
            let q = OneForm((0..2 * n).map(|_| poly(&mut rng, &names, 2)).collect());
            let deformed = gamma.deform(&deformation_tensor(&q, &f).unwrap()).unwrap();
            assert!(deformed.purity(&f, &s).unwrap().passed);
            assert!(deformed.torsion_residual(&s).unwrap() <= 1e-12);
            let r = nabla_f_check(&deformed, &f, &s).unwrap();
            assert!(r.residual("nabla_f") <= 1e-10);
            let by_hand =
                connection_purity_by_hand(&deformed, &f.evaluate(&vec![0.0; 2 * n]).unwrap(), &s.sample_points(2 * n));
            assert!(by_hand <= 1e-12);
        }
    }
}

/// Plain RK4 on `z̈ = -Γ(ż, ż)` using the finite-difference Christoffel oracle.
fn oracle_geodesic(g: &TensorField, z0: &[f64], v0: &[f64], t_end: f64, steps: usize) -> Vec<f64> {
    let d = z0.len();
    let rhs = |y: &[f64]| -> Vec<f64> {
        let (z, v) = y.split_at(d);
        let gam = fd_christoffel(g, z);
        let mut out = v.to_vec();
        for s in 0..d {
            let acc: f64 = (0..d)
                .flat_map(|a| (0..d).map(move |b| (a, b)))
                .map(|(a, b)| gam[(s * d + a) * d + b] * v[a] * v[b])
                .sum();
            out.push(-acc);
        }
        out
    };
    let h = t_end / steps as f64;
    let mut y: Vec<f64> = z0.iter().chain(v0).copied().collect();
    let axpy = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for _ in 0..steps {
        let k1 = rhs(&y);
        let k2 = rhs(&axpy(&y, &k1, h / 2.0));
        let k3 = rhs(&axpy(&y, &k2, h / 2.0));
        let k4 = rhs(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn geodesics_match_independent_integrator() {
    for name in ["curved-B", "kahler-4"] {
        let m = Manifest::builtin(name).unwrap();
        let c = m.curve.clone().unwrap();
        let gamma = Connection::christoffel(&m.chart.metric).unwrap();
        let states = integrate_geodesic(&gamma, &c.z0, &c.v0, c.t_end, 0.01).unwrap();
        let last = states.last().unwrap();
        let oracle = oracle_geodesic(&m.chart.metric, &c.z0, &c.v0, c.t_end, 100);
        let ours: Vec<f64> = last.z.iter().chain(&last.zdot).copied().collect();
        assert!(max_abs_diff(&ours, &oracle) < 1e-7, "{name}: {ours:?} vs {oracle:?}");
    }
}

#[test]
fn zero_forcing_reproduces_geodesic_bitwise() {
    let m = Manifest::builtin("lifted-curved").unwrap();
    let c = m.curve.clone().unwrap();
    let gamma = Connection::christoffel(&m.chart.metric).unwrap();
    let a = integrate_geodesic(&gamma, &c.z0, &c.v0, 0.5, 0.01).unwrap();
    let b = integrate_ph_curve(&gamma, &m.chart.f, &c.z0, &c.v0, &PHCoefficients::zero(), 0.5, 0.01).unwrap();
    assert_eq!(a, b);
}

#[test]
fn transport_preserves_metric_and_commutes_with_f() {
    let m = Manifest::builtin("lifted-curved").unwrap();
    let c = m.curve.clone().unwrap();
    let gamma = Connection::christoffel(&m.chart.metric).unwrap();
    let states = integrate_geodesic(&gamma, &c.z0, &c.v0, c.t_end, 0.005).unwrap();
    let (w, u) = ([0.3, -0.2, 0.5, 0.1], [0.1, 0.4, -0.3, 0.2]);
    let wt = parallel_transport(&gamma, &states, &w).unwrap();
    let ut = parallel_transport(&gamma, &states, &u).unwrap();
    let f0 = m.chart.f.evaluate(&c.z0).unwrap();
    let fwt = parallel_transport(&gamma, &states, &f0.apply_to_vector(&w)).unwrap();
    let g0 = m.chart.metric.evaluate(&c.z0).unwrap().bilinear(&w, &u);
    for ((s, a), (b, fa)) in states.iter().zip(&wt).zip(ut.iter().zip(&fwt)) {
        let gv = m.chart.metric.evaluate(&s.z).unwrap();
        assert!((gv.bilinear(a, b) - g0).abs() < 1e-9);
        let f = m.chart.f.evaluate(&s.z).unwrap();
        assert!(max_abs_diff(&f.apply_to_vector(a), fa) < 1e-9);
    }
}

#[test]
fn classification_recovers_forcing_coefficients() {
    let m = Manifest::builtin("curved-B").unwrap();
    let gamma = Connection::christoffel(&m.chart.metric).unwrap();
    let coeffs = PHCoefficients::parse("0.3", "1 - t").unwrap();
    let states = integrate_ph_curve(&gamma, &m.chart.f, &[0.2, -0.1], &[0.7, 0.4], &coeffs, 1.0, 0.001).unwrap();
    let cls = classify_curve(&gamma, &m.chart.f, &states).unwrap();
    assert!(cls.is_ph());
    assert!(!cls.is_geodesic());
    for fit in &cls.fits {
        assert!((fit.a - 0.3).abs() < 1e-6, "{fit:?}");
        assert!((fit.b.unwrap() - (1.0 - fit.t)).abs() < 1e-6, "{fit:?}");
    }
}

#[test]
fn random_acceleration_is_not_planar() {
    // A curve forced along a fixed direction outside span{ż, fż}.
    let flat = Connection::zero(4);
    let f = adapted_f(2, 0);
    let states: Vec<_> = (0..=200)
        .map(|i| {
            let t = i as f64 / 200.0;
            nilgeom::curves::CurveState { t, z: vec![t, 0.5 * t * t, 0.0, 0.0], zdot: vec![1.0, t, 0.0, 0.0] }
        })
        .collect();
    let cls = classify_curve(&flat, &f, &states).unwrap();
    assert!(!cls.is_ph());
}
