use std::f64::consts::PI;

use proptest::prelude::*;
use sphere_partition::discretization::{weighted_crit_integral, weighted_h1_normsq};
use sphere_partition::partition::{IntervalPartition, PartitionSolver};
use sphere_partition::scalar::nehari_scale;
use sphere_partition::system::{project_to_system_nehari, system_energy, CouplingMatrix, SystemState};
use sphere_partition::{Error, OrbitGrid, ReducedFunction, SolverOptions, SymmetryConfig};

fn config() -> impl Strategy<Value = SymmetryConfig> {
    (2usize..6, 2usize..6).prop_map(|(m, n)| SymmetryConfig::new(m, n).unwrap())
}

proptest! {
    #[test]
    fn weight_is_reflected_by_swapping_factors(cfg in config(), t in 0.0..PI) {
        let a = cfg.weight(t);
        let b = cfg.swapped().weight(PI - t);
        prop_assert!(a >= 0.0);
        // Forming pi - t costs an ulp of pi, amplified near the ends by the powers of sin and cos.
        let cond = (cfg.m() + cfg.n()) as f64 * PI / t.min(PI - t).max(1e-300);
        prop_assert!((a - b).abs() <= 1e-14 * (1.0 + cond) * a);
    }

    #[test]
    fn nehari_scale_lands_on_the_constraint(
        cfg in config(),
        coef in prop::collection::vec(-1.0f64..1.0, 4),
        lift in 1.1f64..3.0,
    ) {
        let g = OrbitGrid::build(cfg, 64, 1.0).unwrap();
        let w = ReducedFunction::from_fn(g, |t| {
            lift + coef.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * t).cos()).sum::<f64>()
        });
        let s = nehari_scale(&w).unwrap();
        let v = w.scaled(s);
        let (n, c) = (weighted_h1_normsq(&v), weighted_crit_integral(&v, cfg.p_crit()).unwrap());
        prop_assert!((n - c).abs() <= 1e-11 * n);
    }

    #[test]
    fn partition_intervals_tile_the_orbit_interval(mut cuts in prop::collection::vec(0.01f64..3.13, 1..6)) {
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let p = IntervalPartition::new(SymmetryConfig::new(2, 3).unwrap(), cuts.clone()).unwrap();
        let iv = p.intervals();
        prop_assert_eq!(iv.len(), cuts.len() + 1);
        prop_assert_eq!(iv[0].0, 0.0);
        prop_assert_eq!(iv.last().unwrap().1, PI);
        prop_assert!(iv.windows(2).all(|w| w[0].1 == w[1].0));
        for (r, a) in p.boundary_radii().iter().zip(&cuts) {
            prop_assert!((r[0] * r[0] + r[1] * r[1] - 1.0).abs() < 1e-14);
            prop_assert!((2.0 * r[1].atan2(r[0]) - a).abs() < 1e-12);
        }
    }

    #[test]
    fn system_projection_is_idempotent(
        c1 in 0.5f64..1.5,
        c2 in 1.6f64..2.6,
        lambda in -5.0f64..-0.01,
    ) {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 64, 1.0).unwrap();
        let bump = |c: f64| ReducedFunction::from_fn(g.clone(), move |t| (-(2.0 * (t - c)).powi(2)).exp());
        let coupling = CouplingMatrix::uniform(2, lambda, 6.0).unwrap();
        let state = SystemState::new(vec![bump(c1), bump(c2)], coupling).unwrap();
        // Strongly overlapping pairs under strong repulsion have no point on the
        // Nehari set along the scaling rays.
        let once = match project_to_system_nehari(&state) {
            Ok(s) => s,
            Err(e) => {
                prop_assert!(matches!(e, Error::Projection(_)), "{e}");
                return Ok(());
            }
        };
        let twice = project_to_system_nehari(&once).unwrap();
        prop_assert!(system_energy(&once).nehari_defects.iter().all(|d| *d <= 1e-10));
        for (a, b) in once.components().iter().zip(twice.components()) {
            let scale = a.sup_norm();
            prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= 1e-9 * scale));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Shrinking an interval raises its least energy.
    #[test]
    fn energy_grows_as_the_interval_shrinks(a in 0.0f64..1.2, len in 1.0f64..1.9, shave in 0.05f64..0.4) {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 128, 1.0).unwrap();
        let solver = PartitionSolver::new(g, SolverOptions::default());
        let b = (a + len).min(PI);
        let outer = solver.interval_energy(a, b).unwrap();
        let inner = solver.interval_energy(a + shave, b).unwrap();
        prop_assert!(inner > outer, "({a}, {b}): {outer} vs shaved {inner}");
    }
}
