//! The flow of two atoms reduces to the scalar ODE `d' = -w'(d)` for their
//! separation, whose solution is recovered here by quadrature.

use simplexflow::numeric::dist;
use simplexflow::{flow, DiscreteMeasure, FlowConfig, Integrator, PowerLawParams, Termination};

/// Time needed to travel from `d0` to `d`: `int_{d0}^{d} ds / (-w'(s))`.
fn travel_time(alpha: f64, beta: f64, d0: f64, d: f64) -> f64 {
    let rate = |s: f64| 1.0 / (s.powf(beta - 1.0) - s.powf(alpha - 1.0));
    let steps = 20_000;
    let h = (d - d0) / steps as f64;
    let mut acc = rate(d0) + rate(d);
    for k in 1..steps {
        acc += rate(d0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn separation_at(alpha: f64, beta: f64, d0: f64, t: f64) -> f64 {
    let (mut lo, mut hi) = (d0, 1.0 - 1e-12);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if travel_time(alpha, beta, d0, mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn two_body_separation_matches_quadrature() {
    for (alpha, beta, masses) in [(4.0, 2.0, [0.5, 0.5]), (6.0, 3.0, [0.3, 0.7])] {
        let d0 = 0.5;
        let t_end = 1.0;
        let mu = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![d0, 0.0]], masses.to_vec()).unwrap();
        let params = PowerLawParams::new(alpha, beta).unwrap();
        let cfg = FlowConfig {
            dt_init: 1e-3,
            t_max: t_end,
            adapt: false,
            grad_tol: 0.0,
            ..FlowConfig::default()
        };
        let trace = flow(&mu, &params, &cfg, 0).unwrap();
        assert_eq!(trace.terminated_by, Termination::TMax);
        let end = trace.final_measure();
        let got = dist(end.point(0), end.point(1));
        let expected = separation_at(alpha, beta, d0, t_end);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        // the barycenter does not move
        let bary = end.barycenter();
        assert!((bary[0] - masses[1] * d0).abs() < 1e-12);
    }
}

#[test]
fn euler_converges_at_first_order() {
    let params = PowerLawParams::new(4.0, 2.0).unwrap();
    let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![0.5]]).unwrap();
    let expected = separation_at(4.0, 2.0, 0.5, 0.5);
    let error = |dt: f64| {
        let cfg = FlowConfig {
            dt_init: dt,
            t_max: 0.5,
            adapt: false,
            grad_tol: 0.0,
            integrator: Integrator::Euler,
            ..FlowConfig::default()
        };
        let end = flow(&mu, &params, &cfg, 0).unwrap().final_measure().clone();
        (dist(end.point(0), end.point(1)) - expected).abs()
    };
    let ratio = error(1e-2) / error(5e-3);
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}
