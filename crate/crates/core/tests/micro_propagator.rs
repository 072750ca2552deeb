use rdme_core::micro::{erfcx, MicroConfig, PropagatorTable};
use rdme_core::rates::{AssocRate, Dim, PhysicalParams};

const SIGMA: f64 = 2e-9;
const D: f64 = 2e-12;

fn config(k_r: AssocRate<f64>) -> MicroConfig {
    let p = PhysicalParams::new(k_r, 0.0, D, SIGMA, Dim::Three).unwrap();
    MicroConfig::new(&p, 1e-7).unwrap()
}

/// Closed-form survival of a pair started at `r0` against a partially
/// absorbing sphere in free space over time `t`.
fn analytic_survival(k_r: f64, r0: f64, t: f64) -> f64 {
    let kd = 4.0 * std::f64::consts::PI * SIGMA * D;
    let x = (r0 - SIGMA) / (4.0 * D * t).sqrt();
    let first = statrs::function::erf::erfc(x);
    if k_r.is_infinite() {
        return 1.0 - SIGMA / r0 * first;
    }
    let alpha = (1.0 + k_r / kd) * D.sqrt() / SIGMA;
    let second = (-x * x).exp() * erfcx(x + alpha * t.sqrt());
    1.0 - SIGMA / r0 * k_r / (k_r + kd) * (first - second)
}

#[test]
fn one_step_survival_matches_closed_form() {
    for k_r in [1e-20, 1e-18, 1e-16, f64::INFINITY] {
        let rate = if k_r.is_infinite() { AssocRate::Infinite } else { AssocRate::Finite(k_r) };
        let c = config(rate);
        let table = PropagatorTable::build(&c);
        for r0 in [1.05, 1.25, 1.5, 2.0, 3.0, 5.0].map(|x| x * SIGMA) {
            let exact = analytic_survival(k_r, r0, c.dt);
            let got = table.survival(r0);
            let tol = 2e-3 * (1.0 - exact).max(0.05);
            assert!(
                (got - exact).abs() < tol,
                "k_r = {k_r:e}, r0 = {:.2} sigma: table {got} vs closed form {exact}",
                r0 / SIGMA
            );
        }
    }
}

#[test]
fn survival_decreases_with_step_length() {
    let c = config(AssocRate::Finite(1e-18));
    let short = PropagatorTable::build(&c.with_dt(c.dt / 2.0));
    let long = PropagatorTable::build(&c);
    for r0 in [1.0, 1.5, 3.0].map(|x| x * SIGMA) {
        assert!(long.survival(r0) <= short.survival(r0));
        assert!((0.0..=1.0).contains(&long.survival(r0)));
    }
}

#[test]
fn conditional_cdfs_are_monotone() {
    let table = PropagatorTable::build(&config(AssocRate::Finite(1e-18)));
    for i in 0..table.rows {
        let cdf = table.node_cdf(i);
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*cdf.last().unwrap(), 1.0);
    }
}

#[test]
fn cache_round_trip_and_version_check() {
    let c = config(AssocRate::Finite(1e-18));
    let dir = tempfile::tempdir().unwrap();
    let built = PropagatorTable::load_or_build(&c, dir.path()).unwrap();
    let path = dir.path().join(PropagatorTable::cache_key(&c));
    assert!(path.exists());
    let loaded = PropagatorTable::load_or_build(&c, dir.path()).unwrap();
    assert_eq!(built, loaded);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[8] ^= 0xff;
    assert!(PropagatorTable::from_bytes(&bytes).is_err());
    // A corrupted file is rebuilt rather than trusted.
    std::fs::write(&path, &bytes).unwrap();
    assert_eq!(PropagatorTable::load_or_build(&c, dir.path()).unwrap(), built);
    assert_ne!(
        PropagatorTable::cache_key(&c),
        PropagatorTable::cache_key(&c.with_dt(c.dt / 2.0))
    );
}
