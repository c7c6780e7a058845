use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ricci_core::curvature::{
    cone_contains, ell, ell_bisection, ConeKind, ConeSpec, CurvatureOperator,
};
use ricci_core::cutoff::{build_cutoff, CutoffParams};
use ricci_core::expansion::{
    conformal_completion, j_sum_closed, j_sum_direct, plan_schedule, ScheduleConstants,
};
use ricci_core::flows::{
    step_conformal_surface_flow, step_homogeneous_flow, ConformalSurface, MilnorState,
    SurfaceScheme,
};
use ricci_core::grid::{distances_from, flat_laplacian, integrate, DiscreteManifold, Stencil};
use ricci_core::heat::{forward_kernel, solve_conjugate_kernel, ExpansionFlow, Frame, Stage};

fn operator(n: usize, seed: u64) -> CurvatureOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CurvatureOperator::random(n, &mut rng).unwrap()
}

fn disk_mask(m: usize, cx: f64, cy: f64, r: f64) -> Vec<bool> {
    let h = 1.0 / m as f64;
    (0..m * m)
        .map(|c| {
            let x = ((c % m) as f64 + 0.5) * h - cx;
            let y = ((c / m) as f64 + 0.5) * h - cy;
            x * x + y * y < r * r
        })
        .collect()
}

fn ricci_min(rm: &CurvatureOperator) -> f64 {
    rm.min_ricci_eigenvalue()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_ell_matches_bisection(seed in any::<u64>(), n in 3usize..6) {
        let rm = operator(n, seed);
        for kind in [ConeKind::NonnegOperator, ConeKind::TwoNonneg] {
            let cone = ConeSpec::new(kind).with_tol(1e-11);
            let a = ell(&rm, &cone).unwrap().value;
            let b = ell_bisection(&rm, &cone).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-8, "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn eigen_membership_is_monotone_in_shift(seed in any::<u64>(), n in 3usize..6) {
        let rm = operator(n, seed);
        for kind in [ConeKind::NonnegOperator, ConeKind::TwoNonneg] {
            let cone = ConeSpec::new(kind);
            let mut seen = false;
            for k in 0..40 {
                let inside = cone_contains(&rm.shifted(0.25 * k as f64), &cone).unwrap().inside;
                prop_assert!(!(seen && !inside));
                seen |= inside;
            }
        }
    }

    #[test]
    fn ell_scales_linearly(seed in any::<u64>(), n in 3usize..6, c in 0.05f64..20.0) {
        let rm = operator(n, seed);
        for kind in [ConeKind::NonnegOperator, ConeKind::TwoNonneg] {
            let cone = ConeSpec::new(kind);
            let a = ell(&rm.scaled(c), &cone).unwrap().value;
            let b = c * ell(&rm, &cone).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b));
        }
    }

    #[test]
    fn two_nonneg_is_nonneg_ricci_in_dimension_three(seed in any::<u64>(), shift in 0.0f64..3.0) {
        let rm = operator(3, seed).shifted(shift);
        let inside = cone_contains(&rm, &ConeSpec::new(ConeKind::TwoNonneg)).unwrap().inside;
        let ric = ricci_min(&rm);
        if ric.abs() > 1e-8 {
            prop_assert_eq!(inside, ric >= 0.0);
        }
    }

    #[test]
    fn unit_ell_bounds_ricci_below(seed in any::<u64>(), n in 3usize..6, scale in 0.01f64..2.0) {
        let rm = operator(n, seed).scaled(scale);
        for kind in [ConeKind::NonnegOperator, ConeKind::TwoNonneg] {
            let l = ell(&rm, &ConeSpec::new(kind)).unwrap().value;
            if l <= 1.0 {
                prop_assert!(ricci_min(&rm) >= -((n - 1) as f64) - 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes(m in 4usize..24, v in -1e3f64..1e3, r in 0.1f64..0.6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi: Vec<f64> = (0..m * m).map(|_| 0.5 + rand::Rng::random::<f64>(&mut rng)).collect();
        let man = DiscreteManifold::with_factor(m, phi).unwrap();
        let man = man.with_mask(disk_mask(m, 0.5, 0.5, r.max(1.5 / m as f64))).unwrap();
        let lap = flat_laplacian(&vec![v; m * m], &man).unwrap();
        prop_assert!(lap.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn integrate_is_additive_over_disjoint_regions(m in 4usize..6, split in 0usize..1024, vals in proptest::collection::vec(-8i32..=8, 1024)) {
        let m = 1usize << m;
        let man = DiscreteManifold::flat(m).unwrap();
        let f: Vec<f64> = (0..m * m).map(|c| vals[c % vals.len()] as f64).collect();
        let cut = split % (m * m);
        let all: Vec<usize> = (0..m * m).collect();
        let total = integrate(&f, &man, &all).unwrap();
        let a = integrate(&f, &man, &all[..cut]).unwrap();
        let b = integrate(&f, &man, &all[cut..]).unwrap();
        prop_assert_eq!(total, a + b);
    }

    #[test]
    fn milnor_step_commutes_with_permutation(a in 0.3f64..3.0, b in 0.3f64..3.0, c in 0.3f64..3.0, p in 0usize..6) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let p = perms[p];
        let s = MilnorState::su2(a, b, c).unwrap();
        let dt = 1e-3;
        let stepped = step_homogeneous_flow(&s, dt).unwrap().permuted(p);
        let permuted = step_homogeneous_flow(&s.permuted(p), dt).unwrap();
        prop_assert_eq!(stepped.g.map(f64::to_bits), permuted.g.map(f64::to_bits));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ell_one_bounds_ricci_for_frame_cones(seed in any::<u64>(), scale in 0.05f64..1.0) {
        let rm = operator(4, seed).scaled(scale);
        for kind in [ConeKind::WPIC2, ConeKind::WPIC1] {
            let l = ell(&rm, &ConeSpec::new(kind)).unwrap().value;
            if l <= 1.0 {
                prop_assert!(ricci_min(&rm) >= -3.0 - 1e-6);
            }
        }
    }

    #[test]
    fn cones_are_nested(seed in any::<u64>(), shift in 0.0f64..4.0) {
        let rm = operator(4, seed).shifted(shift);
        let inside = |k| cone_contains(&rm, &ConeSpec::new(k)).unwrap().inside;
        if inside(ConeKind::NonnegOperator) {
            prop_assert!(inside(ConeKind::TwoNonneg));
            prop_assert!(inside(ConeKind::WPIC2));
        }
        if inside(ConeKind::WPIC2) {
            prop_assert!(inside(ConeKind::WPIC1));
        }
    }

    #[test]
    fn removing_cells_never_shortens_paths(seed in any::<u64>(), holes in proptest::collection::vec((0usize..256, 0usize..4), 1..12)) {
        let m = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi: Vec<f64> = (0..m * m).map(|_| 0.5 + rand::Rng::random::<f64>(&mut rng)).collect();
        let full = DiscreteManifold::with_factor(m, phi).unwrap();
        let mut mask = vec![true; m * m];
        for (c, r) in holes {
            let (i, j) = full.coords(c);
            for di in 0..=r {
                for dj in 0..=r {
                    let k = full.index((i + di) as i64, (j + dj) as i64);
                    mask[k] = false;
                }
            }
        }
        let x = 0;
        mask[x] = true;
        let shrunk = full.clone().with_mask(mask.clone()).unwrap();
        for stencil in [Stencil::Eight, Stencil::Sixteen] {
            let d_full = distances_from(&full, x, stencil).unwrap();
            let d_shrunk = distances_from(&shrunk, x, stencil).unwrap();
            for c in 0..m * m {
                if mask[c] {
                    prop_assert!(d_shrunk[c] >= d_full[c]);
                }
            }
        }
    }

    #[test]
    fn surface_step_keeps_area_to_second_order(seed in any::<u64>(), amp in 0.0f64..0.5, frac in 0.0f64..=1.0) {
        let m = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b): (f64, f64) = (rand::Rng::random(&mut rng), rand::Rng::random(&mut rng));
        let tau = std::f64::consts::TAU;
        let s = ConformalSurface::from_fn(m, |x, y| amp * ((tau * (x + a)).sin() + (tau * (2.0 * y + b)).cos())).unwrap();
        let dt = frac * s.dt_bound();
        let next = step_conformal_surface_flow(&s, dt, SurfaceScheme::Euler).unwrap();
        let v = s.velocity();
        let h2 = s.h() * s.h();
        let bound: f64 = s
            .u()
            .iter()
            .zip(&v)
            .map(|(u, v)| {
                let x = dt * v;
                0.5 * u.exp() * x * x * x.abs().exp() * h2
            })
            .sum();
        prop_assert!((next.area() - s.area()).abs() <= bound + 1e-13 * s.area());
    }

    #[test]
    fn nonnegative_scalar_curvature_dominates_plain_heat(seed in any::<u64>(), level in 0.0f64..20.0) {
        let m = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi: Vec<f64> = (0..m * m).map(|_| 0.5 + rand::Rng::random::<f64>(&mut rng)).collect();
        let scal: Vec<f64> = (0..m * m).map(|_| level * rand::Rng::random::<f64>(&mut rng)).collect();
        let mask = vec![true; m * m];
        let steps = 8;
        let curved = vec![Frame { phi: phi.clone(), scal }; steps + 1];
        let plain = vec![Frame { phi, scal: vec![0.0; m * m] }; steps + 1];
        let t = 0.02;
        let a = Stage::from_frames(m, mask.clone(), 0.0, t, curved).unwrap();
        let b = Stage::from_frames(m, mask, 0.0, t, plain).unwrap();
        let y = (seed % (m * m) as u64) as usize;
        let ka = solve_conjugate_kernel(&a, y, 0.0, t).unwrap();
        let kb = solve_conjugate_kernel(&b, y, 0.0, t).unwrap();
        for (u, v) in ka.values.iter().zip(&kb.values) {
            prop_assert!(*u >= v - 1e-10);
        }
    }

    #[test]
    fn shrinking_junction_mask_never_adds_mass(r_full in 0.3f64..0.45, cut in 0.05f64..0.25) {
        let m = 20;
        let man = DiscreteManifold::flat(m).unwrap();
        let outer = disk_mask(m, 0.5, 0.5, r_full);
        let inner = disk_mask(m, 0.5, 0.5, r_full - cut);
        let m0 = man.clone().with_mask(outer.clone()).unwrap();
        let m1 = man.with_mask(inner).unwrap();
        let first = Stage::static_stage(&m0, None, 0.0, 0.01, 4).unwrap();
        let same = Stage::static_stage(&m0, None, 0.01, 0.02, 4).unwrap();
        let shrunk = Stage::static_stage(&m1, None, 0.01, 0.02, 4).unwrap();
        let y = m0.cell_at(0.5, 0.5);
        let full = forward_kernel(&ExpansionFlow::new(vec![first.clone(), same]).unwrap(), y, 0.0, 0.02).unwrap();
        let cut = forward_kernel(&ExpansionFlow::new(vec![first, shrunk]).unwrap(), y, 0.0, 0.02).unwrap();
        prop_assert!(cut.mass <= full.mass + 1e-12);
        prop_assert!((full.mass - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cutoff_takes_values_in_unit_interval(radius in 0.12f64..0.3, frac in 0.1f64..0.5, k in 0.0f64..1.0) {
        let m = 32;
        let man = DiscreteManifold::flat(m).unwrap();
        let snaps = vec![(0.0, man.clone()), (1e-3, man.clone())];
        let params = CutoffParams { radius, width: frac * radius, k, c0: 1.0, beta: 0.0 };
        let field = build_cutoff(&snaps, man.cell_at(0.5, 0.5), params).unwrap();
        for phi in &field.phi {
            prop_assert!(phi.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn completion_is_identity_away_from_the_boundary(radius in 0.2f64..0.45, rho in 0.02f64..0.1, c in 1.0f64..32.0) {
        let m = 48;
        let man = DiscreteManifold::with_factor(m, vec![c.sqrt(); m * m]).unwrap();
        let region = disk_mask(m, 0.5, 0.5, radius);
        let comp = conformal_completion(&man, &region, rho).unwrap();
        for cell in 0..m * m {
            if comp.dist[cell] >= 2.0 * rho {
                prop_assert_eq!(comp.w[cell], 1.0);
                prop_assert_eq!(comp.manifold.factor()[cell], man.factor()[cell]);
            } else if region[cell] {
                prop_assert!(comp.w[cell] > 1.0);
            }
        }
    }

    #[test]
    fn schedule_times_are_geometric(c1 in 1.0f64..8.0, gamma in 1.0f64..10.0, t1 in 1e-8f64..1e-6) {
        let consts = ScheduleConstants {
            c1,
            gamma_conf: gamma,
            c4: 2.0,
            tau: 0.25,
            alpha0: 0.05,
            v0: 0.5,
            k: 0.05,
            beta: 0.0,
        };
        let sched = plan_schedule(consts, t1, 0.45).unwrap();
        for (j, t) in sched.t_seq.iter().enumerate() {
            let exact = t1 * sched.nu.powi(j as i32);
            prop_assert!((t - exact).abs() <= 1e-10 * exact);
        }
        let direct = j_sum_direct(&sched.t_seq);
        let closed = j_sum_closed(sched.nu, *sched.t_seq.last().unwrap(), sched.len());
        prop_assert!((direct - closed).abs() <= 1e-10 * direct.max(1e-300));
    }
}
