use dashu::rational::RBig;

use super::*;
use crate::exact::hp_to_decimal;

fn p(m: u32, l: u32) -> Params {
    Params::with_l(2, m, RBig::from(l), false).unwrap()
}

#[test]
fn geometric_mean_reference_digits() {
    // 60-digit values from an independent arbitrary-precision evaluation
    let g = geometric_mean(&p(8, 8));
    let mu = hp_to_decimal(&g.mu, 45);
    assert!(
        mu.starts_with("0.98323115116599416364436760293830349311385"),
        "{mu}"
    );
    let ln = hp_to_decimal(&g.ln_mu, 45);
    assert!(
        ln.starts_with("-0.016911037784302615000186799460448788704"),
        "{ln}"
    );
    let g = geometric_mean(&p(16, 4096));
    let mu = hp_to_decimal(&g.mu, 45);
    assert!(
        mu.starts_with("0.015642900133173707010876410886359313510770"),
        "{mu}"
    );
}

#[test]
fn lln_single_step_and_variance() {
    let q = p(8, 8);
    let stats = simulate_lln(&q, 200_000, 1, 7).unwrap();
    assert!(stats.deviation <= stats.bound, "{stats:?}");
    let var = log_multiplier_variance(&q);
    let direct = {
        let (s, l) = (5f64.ln(), 8f64.ln());
        let mean = 20.0 / 64.0 * s - 16.0 / 64.0 * l;
        20.0 / 64.0 * s * s + 16.0 / 64.0 * l * l - mean * mean
    };
    assert!((var - direct).abs() < 1e-12);
    assert!((stats.std * stats.std / var - 1.0).abs() < 0.02);
}

#[test]
fn lln_error_halves_when_samples_quadruple() {
    let q = p(8, 8);
    let a = simulate_lln(&q, 4_000, 50, 3).unwrap();
    let b = simulate_lln(&q, 16_000, 50, 3).unwrap();
    let ratio = a.bound / b.bound;
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    assert!(simulate_lln(&q, 0, 5, 1).is_err());
}

#[test]
fn lln_is_independent_of_thread_count() {
    let q = p(8, 8);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| simulate_lln(&q, 5_000, 20, 11).unwrap());
    let b = four.install(|| simulate_lln(&q, 5_000, 20, 11).unwrap());
    assert_eq!(a, b);
}

#[test]
fn km_selection() {
    let q = Params::with_beta(2, 16, RBig::from(3u8), false).unwrap();
    let s = select_km(&q, 1, 20_000, 1, 1 << 12).unwrap();
    assert_eq!(s.status, "found");
    assert!(s.k >= 1 && s.ci_low >= 0.5);
    let s = select_km(&q, 2, 5_000, 1, 1 << 12).unwrap();
    assert!(s.k >= 2);
    // small k is dominated by lattice effects of the three-point law; past
    // that the fraction grows with k up to sampling noise
    for w in s.ladder.windows(2) {
        assert!(w[1].k == 2 * w[0].k);
        if w[0].k >= 8 {
            assert!(w[1].ci_high >= w[0].ci_low);
        }
    }
}

#[test]
fn wilson_bounds() {
    let (lo, hi) = wilson_interval(50, 100, Z95);
    assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    assert_eq!(wilson_interval(0, 10, Z95).0, 0.0);
}

#[test]
fn walk_closed_forms() {
    let w = walk_analysis(&p(16, 16), 20_000, 2_000, 5).unwrap();
    assert_eq!(w.q, "9/16");
    assert_eq!(w.r.as_deref(), Some("7/9"));
    assert_eq!(w.never_frozen.as_deref(), Some("2/9"));
    assert!(w.fixed_point_identity);
    assert_eq!(w.pass, Some(true));
    assert!((w.drift_mean - w.drift_expected).abs() < 0.01);
    let w = walk_analysis(&p(8, 8), 1_000, 100, 5).unwrap();
    assert_eq!(w.regime, "recurrent/critical: r = 1");
    assert!(w.r.is_none() && w.pass.is_none());
}
