use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use mcflab::analysis::{ball_average, detect_oscillation, sandwich_bounds, Extension};
use mcflab::grid::{PeriodicGrid, ScalarField};
use mcflab::initial::build_spiked_u0;
use mcflab::shrinker::{angenent_torus, scale_torus};
use mcflab::solver::{run, FlowKind, FlowParams};

fn spiked() -> &'static ScalarField {
    static U0: OnceLock<ScalarField> = OnceLock::new();
    U0.get_or_init(|| {
        let base = angenent_torus(2, 1e-10, 1e-3).unwrap();
        let torus = scale_torus(&base, 0.45, 0.1).unwrap();
        let grid = PeriodicGrid::unit_square(128).unwrap();
        build_spiked_u0(&grid, &torus).unwrap().0
    })
}

/// Low-mode trigonometric field with the given coefficients.
fn trig_field(grid: &PeriodicGrid, c: &[f64]) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| {
        let (a, b) = (2.0 * PI * x, 2.0 * PI * y);
        c[0] * a.sin() + c[1] * b.cos() + c[2] * (a + b).sin() + c[3] * (2.0 * a - b).cos()
    })
}

fn flow(u: ScalarField, kind: FlowKind, t_end: f64) -> (ScalarField, Vec<(f64, f64)>) {
    let mut p = FlowParams::new(kind, t_end);
    p.record_every = t_end / 10.0;
    let (out, series) = run(u, &p, &mut []).unwrap();
    let bounds = series.records.iter().map(|r| (r.sup, r.inf)).collect();
    (out, bounds)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ordered_pairs_stay_ordered(
        c in prop::collection::vec(-0.5f64..0.5, 4),
        d in prop::collection::vec(-0.3f64..0.3, 4),
        gap in 0.0f64..0.2,
        heat in any::<bool>(),
    ) {
        let grid = PeriodicGrid::unit_square(32).unwrap();
        let u = trig_field(&grid, &c);
        let bump = trig_field(&grid, &d);
        // v = u + gap + |bump| >= u everywhere
        let mut v = u.clone();
        for (x, b) in v.values.iter_mut().zip(&bump.values) {
            *x += gap + b.abs();
        }
        let kind = if heat { FlowKind::Heat } else { FlowKind::Mcf };
        let (u1, _) = flow(u, kind, 0.02);
        let (v1, _) = flow(v, kind, 0.02);
        let worst = u1.values.iter().zip(&v1.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(worst <= 1e-12, "u - v reached {worst}");
    }

    #[test]
    fn sup_and_inf_are_monotone(
        c in prop::collection::vec(-2.0f64..2.0, 4),
        heat in any::<bool>(),
    ) {
        let grid = PeriodicGrid::unit_square(32).unwrap();
        let kind = if heat { FlowKind::Heat } else { FlowKind::Mcf };
        let (_, bounds) = flow(trig_field(&grid, &c), kind, 0.02);
        for w in bounds.windows(2) {
            prop_assert!(w[1].0 <= w[0].0 + 1e-12);
            prop_assert!(w[1].1 >= w[0].1 - 1e-12);
        }
    }

    #[test]
    fn extrema_alternate(values in prop::collection::vec(-1.0f64..1.0, 3..60), band in 0.0f64..0.3) {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        let rep = detect_oscillation(&times, &values, band);
        prop_assert!(rep.is_alternating());
        for e in &rep.extrema {
            prop_assert!(e.index > 0 && e.index + 1 < values.len());
            prop_assert_eq!(e.value, values[e.index]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn spiked_ball_averages_within_sandwich(
        cx in -3.0f64..3.0,
        cy in -3.0f64..3.0,
        k in 0usize..3,
    ) {
        let r = [5.0, 10.0, 20.0][k];
        let u0 = spiked();
        let avg = ball_average(u0, &[cx, cy], r, &[Extension::Periodic, Extension::Periodic]).unwrap();
        let (lo, hi) = sandwich_bounds(r, 2);
        prop_assert!(avg >= lo && avg <= hi, "average {avg} outside [{lo}, {hi}] at r = {r}");
    }
}
