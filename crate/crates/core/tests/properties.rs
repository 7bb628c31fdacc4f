use condensation::clustering::{agglomerate_detailed, Linkage};
use condensation::engine::rebuild_trace;
use condensation::geometry::hausdorff;
use condensation::kernels::operator_for;
use condensation::schedules::{next_epsilon, ScheduleState};
use condensation::spectral::{constant_part, nonconstant_part, spectral_report};
use condensation::topology::{
    bottleneck, condensation_homology, topological_activity, vr_persistence, PersistenceDiagram,
    PersistencePoint,
};
use condensation::{
    condense, replay_check, CondensationConfig, KernelSpec, PointCloud, ScheduleSpec,
};
use proptest::prelude::*;

fn cloud(min: usize, max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(prop::array::uniform2(-1.0f64..1.0), min..=max)
        .prop_map(|rows| PointCloud::from_rows(&rows).unwrap())
}

fn diagram() -> impl Strategy<Value = PersistenceDiagram> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..6).prop_map(|pts| {
        PersistenceDiagram::new(
            pts.into_iter()
                .map(|(b, l)| PersistencePoint::finite(b, b + l, 1))
                .collect(),
        )
    })
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    (0usize..3, 0.2f64..1.5).prop_map(|(k, eps)| match k {
        0 => KernelSpec::gaussian(eps),
        1 => KernelSpec::laplace(eps),
        _ => KernelSpec::alpha_decay(eps, 3.0),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bottleneck_is_a_metric(a in diagram(), b in diagram(), c in diagram()) {
        let ab = bottleneck(&a, &b, 1, false).unwrap();
        let ba = bottleneck(&b, &a, 1, false).unwrap();
        let bc = bottleneck(&b, &c, 1, false).unwrap();
        let ac = bottleneck(&a, &c, 1, false).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(bottleneck(&a, &a, 1, false).unwrap(), 0.0);
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn rips_dim0_moves_at_most_twice_the_perturbation(
        x in cloud(2, 12),
        noise in prop::collection::vec(prop::array::uniform2(-0.05f64..0.05), 12),
    ) {
        let rows: Vec<[f64; 2]> =
            x.rows().zip(&noise).map(|(r, n)| [r[0] + n[0], r[1] + n[1]]).collect();
        let y = PointCloud::from_rows(&rows).unwrap();
        let h = hausdorff(&x, &y).unwrap();
        let dx = vr_persistence(&x, 0, f64::INFINITY).unwrap();
        let dy = vr_persistence(&y, 0, f64::INFINITY).unwrap();
        prop_assert!(bottleneck(&dx, &dy, 0, false).unwrap() <= 2.0 * h + 1e-12);
    }

    #[test]
    fn constant_part_is_fixed_by_the_operator(x in cloud(3, 16), k in kernel(), f in prop::collection::vec(-1.0f64..1.0, 16)) {
        let op = operator_for(&x, &k, false).unwrap();
        let f = &f[..x.len()];
        let before = constant_part(f, &op);
        let after = constant_part(&op.apply_function(f), &op);
        prop_assert!((before[0] - after[0]).abs() <= 1e-12);
        let h = nonconstant_part(f, &op);
        let inner: f64 = h.iter().zip(op.degrees()).map(|(a, d)| a * d).sum();
        let scale: f64 = op.degrees().iter().sum();
        prop_assert!(inner.abs() <= 1e-12 * scale);
    }

    #[test]
    fn lambda2_respects_the_kernel_bound(x in cloud(2, 16), k in kernel()) {
        let report = spectral_report(&operator_for(&x, &k, false).unwrap());
        if let Some(bound) = report.lambda2_upper_bound {
            prop_assert!(report.lambda2 <= bound + 1e-10);
        }
        prop_assert!((report.eigenvalues[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn activity_is_monotone(x in cloud(2, 16), k in kernel(), zeta in 0.0f64..0.1) {
        let config = CondensationConfig::new(k, ScheduleSpec::fixed()).with_zeta(zeta).with_max_steps(60);
        let trace = condense(&x, &config).unwrap();
        let h = condensation_homology(&trace, zeta.max(1e-6));
        let activity = topological_activity(&h.diagram);
        prop_assert!(activity.windows(2).all(|w| w[0].1 <= w[1].1));
        prop_assert_eq!(h.pairing.pairs.len() + h.diagram.essential_points(0).count(), x.len());
    }

    #[test]
    fn agglomeration_makes_n_minus_one_merges(x in cloud(2, 16)) {
        // Random continuous coordinates are in general position almost surely.
        let a = agglomerate_detailed(&x, Linkage::Upgmc, true).unwrap();
        prop_assert_eq!(a.dendrogram.merges.len(), x.len() - 1);
        for state in &a.states {
            for (members, centroid) in state.clusters.iter().zip(&state.centroids) {
                for (k, &c) in centroid.iter().enumerate() {
                    let mean = members.iter().map(|&i| x.row(i)[k]).sum::<f64>() / members.len() as f64;
                    prop_assert!((mean - c).abs() <= 1e-12);
                }
            }
        }
        let sizes: usize = a.dendrogram.merges.last().map(|m| m.size).unwrap();
        prop_assert_eq!(sizes, x.len());
    }

    #[test]
    fn rebuilt_traces_match_and_replay(x in cloud(2, 12), k in kernel(), zeta in 0.0f64..0.05) {
        let config = CondensationConfig::new(k, ScheduleSpec::fixed()).with_zeta(zeta).with_max_steps(40);
        let trace = condense(&x, &config).unwrap();
        prop_assert!(replay_check(&trace, &config));
        let rebuilt = rebuild_trace(
            trace.snapshots.clone(),
            trace.epsilons.clone(),
            trace.zetas.clone(),
            trace.merges.clone(),
            trace.termination,
            &config,
        )
        .unwrap();
        prop_assert_eq!(rebuilt, trace);
    }

    #[test]
    fn geometric_guarantee_keeps_kernel_entries_above_delta(x in cloud(2, 16), k in kernel(), delta in 0.01f64..0.5) {
        let spec = ScheduleSpec::geometric(delta);
        let diameter = condensation::geometry::diameter(&x);
        prop_assume!(diameter > 1e-6);
        let state = ScheduleState {
            epsilon: k.epsilon,
            cloud: &x,
            diameter,
            max_movement: 0.0,
            kernel: &k,
            d_max: None,
            n_bound: x.len() as f64,
        };
        let eps = next_epsilon(&spec, &state).unwrap();
        let op = operator_for(&x, &k.with_epsilon(eps), false).unwrap();
        prop_assert!(op.min_kernel_entry() >= delta * (1.0 - 1e-12));
    }
}
