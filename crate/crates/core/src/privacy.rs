//! Location privacy through prefix truncation.
//!
//! Routers build a binary trie over client codes and announce, per branch,
//! the deepest prefixes still shared by at least `k` clients. Clients report
//! no more than their announced prefix, and a trip policy may coarsen further
//! near the start and end of a trip.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::routing::DeliveryReport;
use crate::zorder::{ZCode, ZOrderError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrivacyError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("expected a full-precision code, got {0}")]
    NotFullPrecision(ZCode),
    #[error("code {0} has the wrong resolution for this trie or announcement")]
    ResolutionMismatch(ZCode),
    #[error("no announced prefix covers {0}; the announcement is stale")]
    StaleAnnouncement(ZCode),
    #[error("policy lengths must satisfy origin <= highway and destination <= highway (got {origin}, {highway}, {destination})")]
    InvalidPolicy { origin: u8, highway: u8, destination: u8 },
    #[error("announced prefixes must form an antichain; {0} and {1} overlap")]
    OverlappingPrefixes(ZCode, ZCode),
    #[error("malformed announcement: {0}")]
    Json(String),
    #[error(transparent)]
    ZOrder(#[from] ZOrderError),
}

pub type Result<T> = std::result::Result<T, PrivacyError>;

#[derive(Debug, Clone, Copy, Default)]
struct Node {
    count: usize,
    children: [Option<u32>; 2],
}

/// Binary trie over full-precision client codes with subtree counts.
#[derive(Debug, Clone)]
pub struct PrefixTrie {
    bits_per_axis: u8,
    nodes: Vec<Node>,
}

pub fn build_trie(clients: &[ZCode], bits_per_axis: u8) -> Result<PrefixTrie> {
    let root = ZCode::root(bits_per_axis)?;
    let mut nodes = vec![Node::default()];
    for z in clients {
        if z.resolution() != root.resolution() {
            return Err(PrivacyError::ResolutionMismatch(*z));
        }
        if !z.is_full() {
            return Err(PrivacyError::NotFullPrecision(*z));
        }
        let mut at = 0usize;
        nodes[0].count += 1;
        for i in 0..z.len() {
            let b = usize::from(z.bit(i).expect("within length"));
            let next = match nodes[at].children[b] {
                Some(n) => n as usize,
                None => {
                    nodes.push(Node::default());
                    let n = nodes.len() - 1;
                    nodes[at].children[b] = Some(n as u32);
                    n
                }
            };
            nodes[next].count += 1;
            at = next;
        }
    }
    Ok(PrefixTrie { bits_per_axis, nodes })
}

impl PrefixTrie {
    pub fn bits_per_axis(&self) -> u8 {
        self.bits_per_axis
    }

    pub fn total(&self) -> usize {
        self.nodes[0].count
    }

    /// Clients whose code extends `prefix`.
    pub fn count(&self, prefix: &ZCode) -> usize {
        let mut at = 0usize;
        for i in 0..prefix.len() {
            let b = usize::from(prefix.bit(i).expect("within length"));
            match self.nodes[at].children[b] {
                Some(n) => at = n as usize,
                None => return 0,
            }
        }
        self.nodes[at].count
    }

    /// Every occupied prefix with its count, in pre-order.
    pub fn nodes(&self) -> Vec<(ZCode, usize)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, ZCode::root(self.bits_per_axis).expect("valid resolution"))];
        while let Some((i, p)) = stack.pop() {
            out.push((p, self.nodes[i].count));
            for b in [true, false] {
                if let Some(c) = self.nodes[i].children[usize::from(b)] {
                    stack.push((c as usize, p.child(b).expect("trie depth bounded by resolution")));
                }
            }
        }
        out
    }
}

/// Per-branch maximal prefixes a router allows clients to report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefixAnnouncement {
    pub k: usize,
    /// Sorted in ring order; no entry is a prefix of another.
    pub allowed: Vec<(ZCode, usize)>,
}

/// The deepest prefixes that keep every bucket at `k` or more clients.
///
/// Walks down from the root and stops at the first node where some occupied
/// child holds fewer than `k` clients. Every client thus has exactly one
/// allowed ancestor. With fewer than `k` clients overall the root is allowed.
pub fn announce(trie: &PrefixTrie, k: usize) -> Result<PrefixAnnouncement> {
    if k == 0 {
        return Err(PrivacyError::ZeroK);
    }
    let mut allowed = Vec::new();
    let mut stack = vec![(0usize, ZCode::root(trie.bits_per_axis)?)];
    while let Some((i, p)) = stack.pop() {
        let node = &trie.nodes[i];
        let occupied: Vec<(bool, u32)> = [false, true]
            .into_iter()
            .filter_map(|b| node.children[usize::from(b)].map(|c| (b, c)))
            .collect();
        let split = !occupied.is_empty() && occupied.iter().all(|&(_, c)| trie.nodes[c as usize].count >= k);
        if node.count < k || !split {
            allowed.push((p, node.count));
            continue;
        }
        for &(b, c) in occupied.iter().rev() {
            stack.push((c as usize, p.child(b).expect("trie depth bounded by resolution")));
        }
    }
    Ok(PrefixAnnouncement { k, allowed })
}

/// The allowed prefix covering the full-precision code `z`.
pub fn conform(z: &ZCode, ann: &PrefixAnnouncement) -> Result<ZCode> {
    if !z.is_full() {
        return Err(PrivacyError::NotFullPrecision(*z));
    }
    ann.ancestor_of(z).ok_or(PrivacyError::StaleAnnouncement(*z))
}

impl PrefixAnnouncement {
    fn ancestor_of(&self, z: &ZCode) -> Option<ZCode> {
        let v = z.lower();
        let i = self.allowed.partition_point(|(p, _)| p.lower() <= v);
        let (p, _) = self.allowed.get(i.checked_sub(1)?)?;
        (p.resolution() == z.resolution() && p.is_prefix_of(z)).then_some(*p)
    }

    /// Longest allowed prefix length, for epoch statistics.
    pub fn max_len(&self) -> u8 {
        self.allowed.iter().map(|(p, _)| p.len()).max().unwrap_or(0)
    }

    pub fn min_len(&self) -> u8 {
        self.allowed.iter().map(|(p, _)| p.len()).min().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("announcement serializes")
    }

    pub fn from_json(s: &str, bits_per_axis: u8) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            k: usize,
            allowed: Vec<(String, usize)>,
        }
        let raw: Raw = serde_json::from_str(s).map_err(|e| PrivacyError::Json(e.to_string()))?;
        if raw.k == 0 {
            return Err(PrivacyError::ZeroK);
        }
        let mut allowed = raw
            .allowed
            .into_iter()
            .map(|(bits, n)| Ok((ZCode::parse(&bits, bits_per_axis)?, n)))
            .collect::<Result<Vec<_>>>()?;
        allowed.sort();
        for w in allowed.windows(2) {
            if w[0].0.is_prefix_of(&w[1].0) {
                return Err(PrivacyError::OverlappingPrefixes(w[0].0, w[1].0));
            }
        }
        Ok(Self { k: raw.k, allowed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripPhase {
    Origin,
    Highway,
    Destination,
}

/// Target prefix length per trip phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GranularityPolicy {
    origin: u8,
    highway: u8,
    destination: u8,
}

impl GranularityPolicy {
    pub fn new(origin: u8, highway: u8, destination: u8) -> Result<Self> {
        if origin > highway || destination > highway {
            return Err(PrivacyError::InvalidPolicy { origin, highway, destination });
        }
        Ok(Self { origin, highway, destination })
    }

    pub fn length(&self, phase: TripPhase) -> u8 {
        match phase {
            TripPhase::Origin => self.origin,
            TripPhase::Highway => self.highway,
            TripPhase::Destination => self.destination,
        }
    }
}

/// What a client reports in `phase`: its announced prefix, cut to the
/// policy length.
pub fn apply_policy(policy: &GranularityPolicy, phase: TripPhase, z: &ZCode, ann: &PrefixAnnouncement) -> Result<ZCode> {
    let allowed = conform(z, ann)?;
    Ok(allowed.truncate(allowed.len().min(policy.length(phase)))?)
}

/// Delivered clients per true recipient.
pub fn overdelivery_ratio(report: &DeliveryReport, exact_k: usize) -> f64 {
    report.clients_delivered as f64 / exact_k.max(1) as f64
}
