//! Cross-module checks: constructor trees, exact engines, series and fits working together.

use condlab_core::conditionality::*;
use condlab_core::fit::{dyadic, fit_power};
use condlab_core::spaces::SpaceSpec;
use condlab_core::systems::SystemSpec;
use condlab_core::weight::Arrangement;

#[test]
fn spec_round_trip_preserves_measurements() {
    let spec = SystemSpec::AlmostGreedy { inner: Box::new(SystemSpec::aa_diamond(0.5, 0.5, 4)), space: SpaceSpec::lorentz(2.0, 1.0), blocks: 5 };
    let again = SystemSpec::from_json(&spec.to_json()).unwrap();
    assert_eq!(again, spec);
    let (a, b) = (spec.build().unwrap(), again.build().unwrap());
    let f: Vec<f64> = (0..a.dim()).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
    assert_eq!(a.norm(&f).unwrap(), b.norm(&f).unwrap());
}

#[test]
fn exact_series_bounds_heuristics_and_ccdom() {
    let cfg = SearchConfig::default();
    let d = SystemSpec::aa_diamond(0.25, 0.75, 6).build().unwrap();
    let exact = ktilde_exact_series(&d, d.dim(), &cfg).unwrap();
    for m in 1..=d.dim() {
        let h = ktilde_measure(&d, m, Mode::Heuristic { seed: m as u64 }, &cfg).unwrap();
        assert_eq!(h.kind, Kind::LowerWitness);
        assert!(h.value <= exact[m - 1] * (1.0 + 1e-12));
    }
    let l = SystemSpec::Trig { lambda: -0.25, dim: 6, arrangement: Arrangement::RealNatural }.build().unwrap();
    let r = SystemSpec::Trig { lambda: 0.75, dim: 6, arrangement: Arrangement::RealNatural }.build().unwrap();
    for e in ccdom_series(&l, &r, &[1, 2, 3, 4, 5, 6]).unwrap().entries {
        assert!(exact[e.m - 1] >= e.value * (1.0 - 1e-12));
    }
}

#[test]
fn orthonormal_systems_are_unconditional() {
    let cfg = SearchConfig::default();
    let e = SystemSpec::Orthonormal { dim: 10 }.build().unwrap();
    assert!(k_exact_series(&e, 10, &cfg).unwrap().iter().all(|&k| (k - 1.0).abs() < 1e-12));
    let mut series = GrowthSeries::new("phi", e.label());
    for m in dyadic(0, 3) {
        let p = phi_fundamental(&e, m, SignMode::AllSignsExact, 0, &cfg).unwrap();
        series.push(m, p.value, p.kind).unwrap();
    }
    let fit = fit_power(&series.fit_points().into_iter().chain([(16.0, 4.0)]).collect::<Vec<_>>()).unwrap();
    assert!((fit.gamma - 0.5).abs() < 1e-12);
    let csv = series.to_csv();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with(GrowthSeries::csv_header()));
}
