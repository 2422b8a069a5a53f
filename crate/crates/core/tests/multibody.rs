use proptest::prelude::*;
use rfsl::diffraction::QuadratureConfig;
use rfsl::geometry::{build_perimeter_network, sample_targets, Area, LinkRule, MembershipConfig, NetworkGraph, NodePlacement, SubjectProfile};
use rfsl::multibody::{simulate_rss, snapshot, AttenuationSnapshot, ModelKind, NoiseConfig, SceneLosses};

fn graph(nodes: usize) -> NetworkGraph {
    build_perimeter_network(Area::square(4.0).unwrap(), NodePlacement::Count(nodes), 1.0, LinkRule::AllPairs).unwrap()
}

fn check_layout(g: &NetworkGraph, snap: &AttenuationSnapshot, links: &[f64]) -> Result<(), TestCaseError> {
    prop_assert_eq!(snap.shape(), (g.num_nodes(), g.max_degree()));
    for u in 0..g.num_nodes() {
        let nbrs = g.neighbors(u);
        prop_assert!(nbrs.windows(2).all(|w| w[0] < w[1]));
        for (k, &v) in nbrs.iter().enumerate() {
            let l = g.link_index(u, v).unwrap();
            prop_assert_eq!(snap.node_features[u][k], links[l]);
        }
        for k in nbrs.len()..g.max_degree() {
            prop_assert_eq!(snap.node_features[u][k], 0.0);
        }
    }
    prop_assert!(snap.node_features.iter().flatten().all(|a| a.is_finite() && *a >= 0.0));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scene_invariants(seed in any::<u64>(), n in 0usize..5, nodes in 5usize..9) {
        let g = graph(nodes);
        let lambda = rfsl::wavelength(2.4e9);
        let q = QuadratureConfig::default();
        let m = MembershipConfig::default();
        let targets = sample_targets(n, g.area(), &SubjectProfile::subject_a(), seed);
        let losses = SceneLosses::compute(&g, &targets, lambda, &q, &m, true).unwrap();
        let (mam, cmam) = (losses.mam_links().unwrap(), losses.cmam_links());
        for l in 0..g.num_links() {
            prop_assert!(cmam[l] <= mam[l] + 1e-12);
            prop_assert!(cmam[l] >= 0.0);
            // reciprocal links carry bit-identical values
            let (u, v) = g.links()[l];
            let back = g.link_index(v, u).unwrap();
            prop_assert_eq!(mam[l].to_bits(), mam[back].to_bits());
            prop_assert_eq!(cmam[l].to_bits(), cmam[back].to_bits());
        }
        for kind in [ModelKind::Mam, ModelKind::Cmam] {
            let snap = snapshot(&g, &targets, kind, lambda, &q, &m).unwrap();
            prop_assert_eq!(snap.model_kind, kind);
            let links = losses.links(kind).unwrap();
            check_layout(&g, &snap, &links)?;
            prop_assert_eq!(snap.link_values(&g).unwrap(), links);
        }
        // C-MAM alone skips out-of-region bodies but agrees on the result
        let cmam_only = SceneLosses::compute(&g, &targets, lambda, &q, &m, false).unwrap();
        prop_assert_eq!(cmam_only.cmam_links(), cmam);
        // MAM terms are only reported when no body was skipped
        if let Ok(full) = cmam_only.mam_links() {
            prop_assert_eq!(full, mam);
        }
    }

    #[test]
    fn noise_free_rss_is_exact(values in prop::collection::vec(0.0f64..40.0, 42), p0 in -80.0f64..-20.0) {
        let g = graph(7);
        let snap = AttenuationSnapshot::from_link_values(&g, &values, 3, ModelKind::Mam).unwrap();
        let free = vec![p0; g.num_links()];
        let rss = simulate_rss(&g, &snap, &free, &NoiseConfig::off(), 1).unwrap();
        for l in 0..g.num_links() {
            prop_assert_eq!(rss.link_power[l], p0 - values[l]);
            prop_assert_eq!(rss.free_space_power[l], p0);
        }
    }

    #[test]
    fn rss_noise_is_seeded(seed in any::<u64>()) {
        let g = graph(6);
        let snap = AttenuationSnapshot::from_link_values(&g, &vec![1.0; g.num_links()], 0, ModelKind::Cmam).unwrap();
        let free = vec![-50.0; g.num_links()];
        let a = simulate_rss(&g, &snap, &free, &NoiseConfig::gaussian(2.0), seed).unwrap();
        let b = simulate_rss(&g, &snap, &free, &NoiseConfig::gaussian(2.0), seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn wrong_lengths_are_rejected() {
    let g = graph(6);
    assert!(AttenuationSnapshot::from_link_values(&g, &[1.0; 3], 0, ModelKind::Mam).is_err());
    let snap = AttenuationSnapshot::from_link_values(&g, &vec![0.0; g.num_links()], 0, ModelKind::Mam).unwrap();
    let err = simulate_rss(&g, &snap, &[-50.0; 2], &NoiseConfig::off(), 0).unwrap_err();
    assert_eq!(err.category(), "shape-mismatch");
    assert!(snap.check_shape(&graph(7)).is_err());
}

#[test]
fn model_kind_names_round_trip() {
    for k in [ModelKind::Mam, ModelKind::Cmam, ModelKind::Measured] {
        assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.as_str()));
    }
    assert!("both".parse::<ModelKind>().is_err());
}
