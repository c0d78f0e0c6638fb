//! Per-message and per-epoch measurements.
//!
//! `disseminations.csv` columns: `msg_id, epoch, model, routers_total, m, k,
//! top_hops, sends, comparisons, exact_k, overdelivery, duplicates, complete,
//! delivered_digest`. `epochs.csv` columns: `epoch, clients,
//! subscribe_messages, handoffs, handoff_messages, updates, rebuilds,
//! load_min, load_max, load_mean, load_histogram, announced_prefixes,
//! announced_min_len, announced_max_len, failed_routers, failover_clients,
//! failover_messages`. The load histogram lists clients per router in id
//! order, separated by spaces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sim::{Model, SimError};
use crate::ClientId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisseminationRow {
    pub msg_id: u64,
    pub epoch: u64,
    pub model: Model,
    /// Routers in the model's pool when the message was sent.
    pub routers_total: usize,
    pub m: usize,
    pub k: usize,
    pub top_hops: usize,
    pub sends: u64,
    pub comparisons: u64,
    /// Vehicles whose true location is in the relevance area.
    pub exact_k: usize,
    pub overdelivery: f64,
    pub duplicates: u64,
    /// Delivered set equals the vehicles whose reported region meets the area.
    pub complete: bool,
    pub delivered_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: u64,
    pub clients: usize,
    pub subscribe_messages: u64,
    /// Vehicles whose router set changed.
    pub handoffs: u64,
    pub handoff_messages: u64,
    pub updates: u64,
    pub rebuilds: usize,
    pub load_min: usize,
    pub load_max: usize,
    pub load_mean: f64,
    pub load_histogram: String,
    pub announced_prefixes: usize,
    pub announced_min_len: u8,
    pub announced_max_len: u8,
    /// Routers failed at this boundary, space separated.
    pub failed_routers: String,
    pub failover_clients: usize,
    pub failover_messages: u64,
}

/// Hex SHA-256 over the delivered ids, ascending, as little-endian u32.
pub fn delivered_digest(ids: &BTreeSet<ClientId>) -> String {
    let mut h = Sha256::new();
    for c in ids {
        h.update(c.0.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Append-only run measurements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLedger {
    disseminations: Vec<DisseminationRow>,
    epochs: Vec<EpochRow>,
}

impl MetricsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_dissemination(&mut self, row: DisseminationRow) {
        self.disseminations.push(row);
    }

    pub fn push_epoch(&mut self, row: EpochRow) {
        self.epochs.push(row);
    }

    pub fn disseminations(&self) -> &[DisseminationRow] {
        &self.disseminations
    }

    pub fn epochs(&self) -> &[EpochRow] {
        &self.epochs
    }

    pub fn rows_for(&self, model: Model) -> impl Iterator<Item = &DisseminationRow> {
        self.disseminations.iter().filter(move |r| r.model == model)
    }

    pub fn write_disseminations<W: Write>(&self, w: W) -> Result<(), SimError> {
        write_csv(w, &self.disseminations)
    }

    pub fn write_epochs<W: Write>(&self, w: W) -> Result<(), SimError> {
        write_csv(w, &self.epochs)
    }

    pub fn read_disseminations<R: Read>(r: R) -> Result<Vec<DisseminationRow>, SimError> {
        csv::Reader::from_reader(r)
            .deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| SimError::Csv(e.to_string()))
    }

    /// Invariant violations, empty when the run is consistent.
    ///
    /// Checks the send identity of each model, completeness, exactly-once
    /// delivery, equal delivered sets across models and failover message
    /// counts.
    pub fn audit(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.disseminations {
            let (want_m, want_sends) = match r.model {
                Model::Distributed => (r.m, (r.m + r.k) as u64),
                Model::SingleServer => (0, r.k as u64),
                Model::RandomAssignment => (r.routers_total, (r.routers_total + r.k) as u64),
            };
            if r.m != want_m || r.sends != want_sends {
                out.push(format!("msg {} ({}): m={} sends={}, expected m={want_m} sends={want_sends}", r.msg_id, r.model, r.m, r.sends));
            }
            if !r.complete {
                out.push(format!("msg {} ({}): delivered set differs from the oracle", r.msg_id, r.model));
            }
            if r.duplicates != 0 {
                out.push(format!("msg {} ({}): {} duplicate sends", r.msg_id, r.model, r.duplicates));
            }
        }
        let mut digests: BTreeMap<u64, BTreeSet<&str>> = BTreeMap::new();
        for r in &self.disseminations {
            digests.entry(r.msg_id).or_default().insert(&r.delivered_digest);
        }
        for (msg, d) in digests {
            if d.len() > 1 {
                out.push(format!("msg {msg}: models delivered different sets"));
            }
        }
        for e in &self.epochs {
            if !e.failed_routers.is_empty() && e.failover_messages != e.failover_clients as u64 {
                out.push(format!(
                    "epoch {}: failover sent {} messages for {} clients",
                    e.epoch, e.failover_messages, e.failover_clients
                ));
            }
        }
        out
    }
}

fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), SimError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r).map_err(|e| SimError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| SimError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model: Model,
    pub messages: usize,
    pub mean_m: f64,
    pub mean_k: f64,
    pub mean_sends: f64,
    pub mean_comparisons: f64,
    pub mean_overdelivery: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub models: Vec<ModelSummary>,
    /// Largest router pool seen by the distributed model.
    pub routers_total: usize,
    /// Distributed model: messages per value of `m`.
    pub m_distribution: BTreeMap<usize, usize>,
    /// Messages whose delivered sets differ between models.
    pub delivered_mismatches: usize,
}

impl ComparisonSummary {
    pub fn model(&self, model: Model) -> Option<&ModelSummary> {
        self.models.iter().find(|s| s.model == model)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Aggregates rows of at least two models run on the same messages.
pub fn compare_models(rows: &[DisseminationRow]) -> Result<ComparisonSummary, SimError> {
    let mut by_model: BTreeMap<Model, Vec<&DisseminationRow>> = BTreeMap::new();
    for r in rows {
        by_model.entry(r.model).or_default().push(r);
    }
    if by_model.len() < 2 {
        return Err(SimError::Compare(format!("need at least two models, found {}", by_model.len())));
    }
    let mut trace: Option<(Model, BTreeSet<u64>)> = None;
    for (model, rs) in &by_model {
        let ids: BTreeSet<u64> = rs.iter().map(|r| r.msg_id).collect();
        if ids.len() != rs.len() {
            return Err(SimError::Compare(format!("{model} has repeated message ids")));
        }
        match &trace {
            None => trace = Some((*model, ids)),
            Some((first, t)) if *t != ids => {
                return Err(SimError::Compare(format!("{model} and {first} ran different message traces")));
            }
            Some(_) => {}
        }
    }
    let mut digests: BTreeMap<u64, BTreeSet<&str>> = BTreeMap::new();
    for r in rows {
        digests.entry(r.msg_id).or_default().insert(&r.delivered_digest);
    }
    let models = by_model
        .iter()
        .map(|(model, rs)| ModelSummary {
            model: *model,
            messages: rs.len(),
            mean_m: mean(rs.iter().map(|r| r.m as f64)),
            mean_k: mean(rs.iter().map(|r| r.k as f64)),
            mean_sends: mean(rs.iter().map(|r| r.sends as f64)),
            mean_comparisons: mean(rs.iter().map(|r| r.comparisons as f64)),
            mean_overdelivery: mean(rs.iter().map(|r| r.overdelivery)),
        })
        .collect();
    let distributed = by_model.get(&Model::Distributed).map(Vec::as_slice).unwrap_or_default();
    let mut m_distribution = BTreeMap::new();
    for r in distributed {
        *m_distribution.entry(r.m).or_insert(0) += 1;
    }
    Ok(ComparisonSummary {
        models,
        routers_total: distributed.iter().map(|r| r.routers_total).max().unwrap_or(0),
        m_distribution,
        delivered_mismatches: digests.values().filter(|d| d.len() > 1).count(),
    })
}

impl fmt::Display for ComparisonSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:>8} {:>9} {:>9} {:>11} {:>13} {:>12}",
            "model", "messages", "mean_m", "mean_k", "mean_sends", "mean_compares", "overdelivery"
        )?;
        for s in &self.models {
            writeln!(
                f,
                "{:<18} {:>8} {:>9.2} {:>9.2} {:>11.2} {:>13.1} {:>12.3}",
                s.model.to_string(),
                s.messages,
                s.mean_m,
                s.mean_k,
                s.mean_sends,
                s.mean_comparisons,
                s.mean_overdelivery
            )?;
        }
        if let Some(d) = self.model(Model::Distributed) {
            for s in self.models.iter().filter(|s| s.model != Model::Distributed) {
                writeln!(
                    f,
                    "{} / distributed: sends x{:.2}, comparisons x{:.2}",
                    s.model,
                    s.mean_sends / d.mean_sends.max(f64::MIN_POSITIVE),
                    s.mean_comparisons / d.mean_comparisons.max(f64::MIN_POSITIVE)
                )?;
            }
            writeln!(f, "distributed m out of M = {}:", self.routers_total)?;
            for (m, n) in &self.m_distribution {
                writeln!(f, "  m = {m:>3}: {n}")?;
            }
        }
        write!(f, "delivered-set mismatches: {}", self.delivered_mismatches)
    }
}
