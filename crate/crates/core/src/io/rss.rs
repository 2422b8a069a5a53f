//! Measured RSS streams: CSV records, windowing and attenuation estimates.
//!
//! CSV columns are `timestamp_ms,tx_id,rx_id,rssi_dbm,channel`. Lines starting
//! with `#` are comments.

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::NetworkGraph;
use crate::multibody::{AttenuationSnapshot, ModelKind, RssSnapshot};

pub const DEFAULT_WINDOW_MS: u64 = 60;
pub const DEFAULT_AVERAGING_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssRecord {
    pub timestamp_ms: u64,
    pub tx_id: String,
    pub rx_id: String,
    pub rssi_dbm: f64,
    pub channel: u32,
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_error(context: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match line {
        Some(l) => Error::parse(format!("{context} line {l}"), e),
        None => Error::parse(context, e),
    }
}

pub fn read_rss_csv<R: Read>(reader: R) -> Result<Vec<RssRecord>> {
    let mut out = Vec::new();
    for rec in csv_reader(reader).deserialize() {
        let rec: RssRecord = rec.map_err(|e| csv_error("rss csv", e))?;
        if rec.tx_id == rec.rx_id {
            return Err(Error::parse("rss csv", format!("tx_id equals rx_id ({})", rec.tx_id)));
        }
        if !rec.rssi_dbm.is_finite() {
            return Err(Error::parse("rss csv", format!("non-finite rssi at t={}", rec.timestamp_ms)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_rss_csv<W: Write>(writer: W, records: &[RssRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| csv_error("rss csv", e))?;
    }
    w.flush()?;
    Ok(())
}

/// One record per link of `rss`, all stamped `timestamp_ms`.
pub fn records_from_rss(graph: &NetworkGraph, rss: &RssSnapshot, timestamp_ms: u64, channel: u32) -> Vec<RssRecord> {
    graph
        .links()
        .iter()
        .zip(&rss.link_power)
        .map(|(&(u, v), &p)| RssRecord {
            timestamp_ms,
            tx_id: graph.labels()[u].clone(),
            rx_id: graph.labels()[v].clone(),
            rssi_dbm: p,
            channel,
        })
        .collect()
}

/// Per-link received powers of one time window; `None` when not observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSnapshot {
    pub window: u64,
    pub start_ms: u64,
    pub link_power: Vec<Option<f64>>,
}

/// Group records into `window_ms` windows counted from the first timestamp.
/// Within a window the latest record of a link wins.
pub fn ingest_records(mut records: Vec<RssRecord>, graph: &NetworkGraph, window_ms: u64) -> Result<Vec<PowerSnapshot>> {
    if window_ms == 0 {
        return Err(Error::InvalidArgument("window_ms must be > 0".into()));
    }
    if records.is_empty() {
        return Err(Error::EmptyStream);
    }
    records.sort_by_key(|r| r.timestamp_ms);
    let t0 = records[0].timestamp_ms;
    let last = (records[records.len() - 1].timestamp_ms - t0) / window_ms;
    let mut out: Vec<PowerSnapshot> = (0..=last)
        .map(|w| PowerSnapshot {
            window: w,
            start_ms: t0 + w * window_ms,
            link_power: vec![None; graph.num_links()],
        })
        .collect();
    for r in &records {
        let node = |id: &str| graph.node_by_label(id).ok_or_else(|| Error::UnknownNodeId(id.to_string()));
        let (u, v) = (node(&r.tx_id)?, node(&r.rx_id)?);
        let link = graph
            .link_index(u, v)
            .ok_or_else(|| Error::UnknownNodeId(format!("no link {} -> {}", r.tx_id, r.rx_id)))?;
        let w = ((r.timestamp_ms - t0) / window_ms) as usize;
        out[w].link_power[link] = Some(r.rssi_dbm);
    }
    Ok(out)
}

pub fn ingest_rss<R: Read>(reader: R, graph: &NetworkGraph, window_ms: u64) -> Result<Vec<PowerSnapshot>> {
    ingest_records(read_rss_csv(reader)?, graph, window_ms)
}

/// Attenuation estimate of one window with the unfloored values alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedAttenuation {
    pub snapshot: AttenuationSnapshot,
    /// `P(∅) − mean(P)` per link, `None` without observations.
    pub raw: Vec<Option<f64>>,
}

/// `Â = P(∅) − mean(P)` over the trailing `averaging_window` windows,
/// floored at 0 dB. Unobserved links get 0 in the features.
pub fn estimate_attenuation(
    snapshots: &[PowerSnapshot],
    graph: &NetworkGraph,
    free_space_power: &[Option<f64>],
    averaging_window: usize,
) -> Result<Vec<EstimatedAttenuation>> {
    if averaging_window == 0 {
        return Err(Error::InvalidArgument("averaging_window must be >= 1".into()));
    }
    let links = graph.num_links();
    if free_space_power.len() != links {
        return Err(Error::ShapeMismatch(format!(
            "{} free-space entries for {links} links",
            free_space_power.len()
        )));
    }
    for s in snapshots {
        if s.link_power.len() != links {
            return Err(Error::ShapeMismatch(format!(
                "power snapshot has {} links, graph has {links}",
                s.link_power.len()
            )));
        }
        if let Some(l) = (0..links).find(|&l| s.link_power[l].is_some() && free_space_power[l].is_none()) {
            return Err(Error::MissingFreeSpaceReference(l));
        }
    }

    let mut window: VecDeque<&PowerSnapshot> = VecDeque::with_capacity(averaging_window);
    let mut out = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        if window.len() == averaging_window {
            window.pop_front();
        }
        window.push_back(s);
        let raw: Vec<Option<f64>> = (0..links)
            .map(|l| {
                let (sum, n) = window
                    .iter()
                    .filter_map(|w| w.link_power[l])
                    .fold((0.0, 0usize), |a, p| (a.0 + p, a.1 + 1));
                (n > 0).then(|| free_space_power[l].expect("checked above") - sum / n as f64)
            })
            .collect();
        let floored: Vec<f64> = raw.iter().map(|r| r.map_or(0.0, |a| a.max(0.0))).collect();
        out.push(EstimatedAttenuation {
            snapshot: AttenuationSnapshot::from_link_values(graph, &floored, s.window, ModelKind::Measured)?,
            raw,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FreeSpaceRow {
    tx_id: String,
    rx_id: String,
    power_dbm: f64,
}

/// Free-space reference table from CSV columns `tx_id,rx_id,power_dbm`.
pub fn read_free_space_csv<R: Read>(reader: R, graph: &NetworkGraph) -> Result<Vec<Option<f64>>> {
    let mut table = vec![None; graph.num_links()];
    for row in csv_reader(reader).deserialize() {
        let row: FreeSpaceRow = row.map_err(|e| csv_error("free-space csv", e))?;
        let node = |id: &str| graph.node_by_label(id).ok_or_else(|| Error::UnknownNodeId(id.to_string()));
        let (u, v) = (node(&row.tx_id)?, node(&row.rx_id)?);
        let l = graph
            .link_index(u, v)
            .ok_or_else(|| Error::UnknownNodeId(format!("no link {} -> {}", row.tx_id, row.rx_id)))?;
        table[l] = Some(row.power_dbm);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_perimeter_network, Area, LinkRule, NodePlacement};

    fn graph() -> NetworkGraph {
        build_perimeter_network(Area::square(4.0).unwrap(), NodePlacement::Count(4), 1.0, LinkRule::AllPairs).unwrap()
    }

    fn rec(t: u64, tx: &str, rx: &str, p: f64) -> RssRecord {
        RssRecord {
            timestamp_ms: t,
            tx_id: tx.into(),
            rx_id: rx.into(),
            rssi_dbm: p,
            channel: 11,
        }
    }

    #[test]
    fn csv_parse_with_comments() {
        let text = "# captured\ntimestamp_ms,tx_id,rx_id,rssi_dbm,channel\n0, 0, 1, -51.5, 11\n# gap\n70,1,0,-52,12\n";
        let r = read_rss_csv(text.as_bytes()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].rssi_dbm, -51.5);
        assert_eq!(r[1].channel, 12);
        let bad = "timestamp_ms,tx_id,rx_id,rssi_dbm,channel\n0,0,1,abc,11\n";
        let err = read_rss_csv(bad.as_bytes()).unwrap_err();
        assert_eq!(err.category(), "parse-error");
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn last_record_in_window_wins() {
        let g = graph();
        let recs = vec![rec(10, "0", "1", -60.0), rec(5, "0", "1", -50.0), rec(130, "0", "1", -40.0)];
        let s = ingest_records(recs, &g, 60).unwrap();
        assert_eq!(s.len(), 3);
        let l = g.link_index(0, 1).unwrap();
        assert_eq!(s[0].link_power[l], Some(-60.0));
        assert_eq!(s[0].start_ms, 5);
        assert_eq!(s[1].link_power[l], None);
        assert_eq!(s[2].link_power[l], Some(-40.0));
        assert_eq!(s[0].link_power[g.link_index(1, 0).unwrap()], None);
    }

    #[test]
    fn ingest_errors() {
        let g = graph();
        assert!(matches!(ingest_records(vec![], &g, 60), Err(Error::EmptyStream)));
        let e = ingest_records(vec![rec(0, "0", "9", -50.0)], &g, 60).unwrap_err();
        assert_eq!(e.category(), "unknown-node-id");
        assert!(ingest_records(vec![rec(0, "0", "1", -50.0)], &g, 0).is_err());
    }

    #[test]
    fn estimate_arithmetic() {
        let g = graph();
        let l = g.link_index(0, 1).unwrap();
        let mut p = vec![None; g.num_links()];
        p[l] = Some(-55.0);
        let snaps = vec![PowerSnapshot {
            window: 0,
            start_ms: 0,
            link_power: p,
        }];
        let free = vec![Some(-50.0); g.num_links()];
        let est = estimate_attenuation(&snaps, &g, &free, 10).unwrap();
        assert_eq!(est[0].raw[l], Some(5.0));
        assert_eq!(est[0].snapshot.node_features[0][0], 5.0);
        assert_eq!(est[0].raw[g.link_index(1, 0).unwrap()], None);

        let mut missing = free.clone();
        missing[l] = None;
        let e = estimate_attenuation(&snaps, &g, &missing, 10).unwrap_err();
        assert!(matches!(e, Error::MissingFreeSpaceReference(x) if x == l));
    }

    #[test]
    fn negative_estimates_are_floored_with_raw_kept() {
        let g = graph();
        let snaps = vec![PowerSnapshot {
            window: 0,
            start_ms: 0,
            link_power: vec![Some(-48.0); g.num_links()],
        }];
        let est = estimate_attenuation(&snaps, &g, &vec![Some(-50.0); g.num_links()], 1).unwrap();
        assert_eq!(est[0].raw[0], Some(-2.0));
        assert!(est[0].snapshot.node_features.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn free_space_table() {
        let g = graph();
        let text = "tx_id,rx_id,power_dbm\n0,1,-47.5\n";
        let t = read_free_space_csv(text.as_bytes(), &g).unwrap();
        assert_eq!(t[g.link_index(0, 1).unwrap()], Some(-47.5));
        assert_eq!(t.iter().filter(|x| x.is_some()).count(), 1);
    }
}
