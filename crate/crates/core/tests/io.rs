use proptest::prelude::*;
use rfsl::geometry::{build_perimeter_network, Area, LinkRule, NetworkGraph, NodePlacement};
use rfsl::io::dataset::{DatasetFile, DatasetRecord};
use rfsl::io::rss::{estimate_attenuation, ingest_records, read_rss_csv, write_rss_csv, RssRecord};
use rfsl::io::{read_checkpoint, write_checkpoint, ExperimentConfig};
use rfsl::multibody::{AttenuationSnapshot, ModelKind};
use rfsl::net::{Architecture, ModelParams};

fn graph() -> NetworkGraph {
    build_perimeter_network(Area::square(3.0).unwrap(), NodePlacement::Count(5), 1.0, LinkRule::AllPairs).unwrap()
}

fn record() -> impl Strategy<Value = RssRecord> {
    (0u64..1_000, 0usize..5, 1usize..5, -100.0f64..-10.0, 11u32..27).prop_map(|(t, u, k, p, ch)| RssRecord {
        timestamp_ms: t,
        tx_id: u.to_string(),
        rx_id: ((u + k) % 5).to_string(),
        rssi_dbm: p,
        channel: ch,
    })
}

proptest! {
    #[test]
    fn rss_csv_round_trip(records in prop::collection::vec(record(), 0..40)) {
        let mut buf = Vec::new();
        write_rss_csv(&mut buf, &records).unwrap();
        prop_assert_eq!(read_rss_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn windows_partition_the_stream(records in prop::collection::vec(record(), 1..60), window in 1u64..200) {
        let g = graph();
        let snaps = ingest_records(records.clone(), &g, window).unwrap();
        let t0 = records.iter().map(|r| r.timestamp_ms).min().unwrap();
        let t1 = records.iter().map(|r| r.timestamp_ms).max().unwrap();
        prop_assert_eq!(snaps.len() as u64, (t1 - t0) / window + 1);
        for (i, s) in snaps.iter().enumerate() {
            prop_assert_eq!(s.window, i as u64);
            prop_assert_eq!(s.start_ms, t0 + i as u64 * window);
        }
        // every observed link shows up in the window of its latest record
        for r in &records {
            let w = ((r.timestamp_ms - t0) / window) as usize;
            let l = g.link_index(r.tx_id.parse().unwrap(), r.rx_id.parse().unwrap()).unwrap();
            prop_assert!(snaps[w].link_power[l].is_some());
        }
        let free = vec![Some(-30.0); g.num_links()];
        let est = estimate_attenuation(&snaps, &g, &free, 3).unwrap();
        prop_assert_eq!(est.len(), snaps.len());
        for e in &est {
            prop_assert!(e.snapshot.node_features.iter().flatten().all(|a| *a >= 0.0));
            prop_assert_eq!(e.snapshot.model_kind, ModelKind::Measured);
        }
    }

    #[test]
    fn config_overrides_survive_toml_round_trip(seed in any::<u64>(), nodes in 3usize..80, tau in 0.0f64..0.99, f in 1e9f64..6e9) {
        let cfg = ExperimentConfig::from_toml_str("", &[
            format!("seed={seed}"),
            format!("scene.nodes={nodes}"),
            format!("bounds.tau={tau:?}"),
            format!("scene.frequency_hz={f:?}"),
        ]).unwrap();
        prop_assert_eq!(cfg.seed, seed);
        prop_assert_eq!(cfg.scene.nodes, nodes);
        prop_assert_eq!(cfg.bounds.tau, tau);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap(), &[]).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn rss_errors_carry_context() {
    let err = read_rss_csv("timestamp_ms,tx_id,rx_id,rssi_dbm,channel\n0,1,2,oops,11\n".as_bytes()).unwrap_err();
    assert_eq!(err.category(), "parse-error");
    assert!(err.to_string().contains("line 2"), "{err}");
    let g = graph();
    let stray = RssRecord {
        timestamp_ms: 0,
        tx_id: "0".into(),
        rx_id: "9".into(),
        rssi_dbm: -40.0,
        channel: 11,
    };
    assert_eq!(ingest_records(vec![stray], &g, 60).unwrap_err().category(), "unknown-node-id");
    assert_eq!(ingest_records(vec![], &g, 60).unwrap_err().category(), "empty-stream");
}

#[test]
fn dataset_round_trip_and_rejections() {
    let g = graph();
    let values: Vec<f64> = (0..g.num_links()).map(|l| 0.25 * l as f64).collect();
    let snap = AttenuationSnapshot::from_link_values(&g, &values, 4, ModelKind::Cmam).unwrap();
    let file = DatasetFile::new(
        g.clone(),
        serde_json::json!({"note": "test"}),
        vec![
            DatasetRecord {
                label: Some(2),
                snapshot: snap.clone(),
            },
            DatasetRecord {
                label: None,
                snapshot: snap,
            },
        ],
    )
    .unwrap();
    let mut buf = Vec::new();
    file.write(&mut buf).unwrap();
    let back = DatasetFile::read(buf.as_slice()).unwrap();
    assert_eq!(back.records, file.records);
    assert_eq!(back.config, file.config);
    assert_eq!(back.graph.links(), g.links());
    // unlabeled records cannot become training samples
    assert!(back.samples().is_err());

    let text = String::from_utf8(buf).unwrap();
    let wrong_schema = text.replacen("rfsl-dataset/1", "rfsl-dataset/0", 1);
    assert_eq!(DatasetFile::read(wrong_schema.as_bytes()).unwrap_err().category(), "schema-mismatch");
    let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect::<String>() + "{not json\n";
    let err = DatasetFile::read(truncated.as_bytes()).unwrap_err();
    assert_eq!(err.category(), "parse-error");
    assert!(err.to_string().contains("line 3"), "{err}");
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let params = ModelParams::init(&Architecture::new(7, 6, 3), 42).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &params).unwrap();
    let back = read_checkpoint(buf.as_slice()).unwrap();
    for (a, b) in params.tensors().iter().zip(back.tensors()) {
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(back.arch, params.arch);
}

#[test]
fn config_file_errors_are_categorised() {
    let err = ExperimentConfig::from_toml_str("[scene]\nnodes = \"many\"\n", &[]).unwrap_err();
    assert_eq!(err.category(), "config-error");
    let err = ExperimentConfig::from_toml_str("", &["bounds.tau=1.5".into()]).unwrap_err();
    assert_eq!(err.category(), "config-error");
    let err = ExperimentConfig::from_toml_str("", &["scene.nodes".into()]).unwrap_err();
    assert_eq!(err.category(), "config-error");
}
