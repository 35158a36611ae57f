use std::sync::Arc;

use gelfand_core::continuation::{detect_fold, extremal_profile, trace_branch, ContinuationSettings};
use gelfand_core::oracles::{critical_exponents, singular_profile, ProfileKind};
use gelfand_core::{Grading, GridFunction, Nonlinearity, RadialGrid};

fn grid(m: usize, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(m, Grading::Power(2.0), n, 1.0).unwrap())
}

fn max_relative_gap(u: &GridFunction, exact: &GridFunction, lo: f64, hi: f64) -> f64 {
    let nodes = u.grid().nodes();
    (0..nodes.len())
        .filter(|&i| nodes[i] >= lo && nodes[i] <= hi)
        .map(|i| ((u.values()[i] - exact.values()[i]) / exact.values()[i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn exponential_extremal_in_dimension_ten_approaches_log_profile() {
    let g = grid(2048, 10);
    let b = trace_branch(g.clone(), Nonlinearity::Exponential, &ContinuationSettings::default()).unwrap();
    let fold = b.fold.expect("fold");
    assert!((fold.lambda_star - 16.0).abs() < 0.02 * 16.0, "{fold:?}");
    let u = extremal_profile(&b, 1e-6).unwrap();
    let exact = singular_profile(ProfileKind::LogExponential, g).unwrap().u;
    let gap = max_relative_gap(&u, &exact, 0.1, 0.9);
    assert!(gap < 0.05, "{gap}");
}

#[test]
fn power_extremal_in_dimension_eleven_approaches_closed_form() {
    let ce = critical_exponents(11).unwrap();
    let g = grid(2048, 11);
    let f = Nonlinearity::power(ce.q_n.unwrap()).unwrap();
    let b = trace_branch(g.clone(), f, &ContinuationSettings::default()).unwrap();
    let fold = b.fold.expect("fold");
    let star = ce.lambda_star_power.unwrap();
    assert!((fold.lambda_star - star).abs() < 0.02 * star, "{fold:?}");
    let u = extremal_profile(&b, 1e-6).unwrap();
    let exact = singular_profile(ProfileKind::Power, g).unwrap().u;
    let gap = max_relative_gap(&u, &exact, 0.1, 0.9);
    assert!(gap < 0.05, "{gap}");
}

#[test]
fn three_dimensional_fold_is_mesh_independent() {
    let settings = ContinuationSettings {
        points_after_fold: Some(3),
        ..Default::default()
    };
    let mut stars = Vec::new();
    let mut sups = Vec::new();
    for m in [1024, 2048, 4096] {
        let b = trace_branch(grid(m, 3), Nonlinearity::Exponential, &settings).unwrap();
        stars.push(detect_fold(&b).unwrap().lambda_star);
        sups.push(extremal_profile(&b, 1e-6).unwrap().sup_norm());
    }
    // four significant digits
    for s in &stars {
        assert!((s - stars[2]).abs() < 5e-4 * stars[2], "{stars:?}");
    }
    assert!((sups[2] - sups[1]).abs() < 0.02 * sups[1], "{sups:?}");
}

#[test]
fn minimal_branch_is_ordered_and_stable() {
    let settings = ContinuationSettings {
        points_after_fold: Some(4),
        ..Default::default()
    };
    let mut b = trace_branch(grid(512, 4), Nonlinearity::Exponential, &settings).unwrap();
    b.fill_stability().unwrap();
    let fold = b.fold.expect("fold");
    let minimal = b.minimal_segment();
    for w in minimal.windows(2) {
        assert!(w[1].lambda > w[0].lambda);
        assert!(w[0].u.values().iter().zip(w[1].u.values()).all(|(a, b)| a <= b));
    }
    for p in &b.points[..fold.index] {
        assert!(p.mu1.unwrap() > 0.0);
    }
    let mins: Vec<f64> = b.points[..fold.index].iter().map(|p| p.mu1.unwrap()).collect();
    let last = *mins.last().unwrap();
    assert!(mins.iter().all(|&m| m >= last));
    for p in &b.points[fold.index + 2..] {
        assert!(p.mu1.unwrap() < 0.0, "{}", p.mu1.unwrap());
    }
    assert!(b.points.windows(2).all(|w| w[1].arclength > w[0].arclength));
}
