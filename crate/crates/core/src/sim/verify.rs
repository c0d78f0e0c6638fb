//! Oracle cross-checks at reduced scale, used by `geocast verify`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::privacy::{announce, build_trie, conform};
use crate::routing::relevant_routers;
use crate::sim::{build_distributed_ring, random_point, run, ScenarioConfig, SimError, Simulation};
use crate::spatial_index::RangeTree;
use crate::zorder::{decode, encode, Rect, ZCode};
use crate::ClientId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, failures: Vec<String>, ok_detail: String) -> Self {
        let passed = failures.is_empty();
        let detail = if passed { ok_detail } else { failures.into_iter().take(5).collect::<Vec<_>>().join("; ") };
        Self { name, passed, detail }
    }
}

/// `config` shrunk so exhaustive oracles stay cheap: at most 8 bits per
/// axis, 2,000 vehicles, 5 epochs and 200 messages.
pub fn reduced(config: &ScenarioConfig) -> ScenarioConfig {
    let mut c = config.clone();
    c.n_clients = c.n_clients.min(2_000);
    c.epochs = c.epochs.min(5);
    c.messages = c.messages.min(200);
    if c.bits_per_axis > 8 {
        c.bits_per_axis = 8;
        c.relevance.max_side = c.relevance.max_side.map(|s| s.min(c.grid_side()));
        c.relevance.min_side = c.relevance.min_side.min(c.max_side());
        c.coarse_layer_length = c.coarse_layer_length.map(|l| l.min(2 * c.bits_per_axis - 1));
    }
    c.failures.retain(|f| f.epoch < c.epochs);
    c
}

fn random_rect(rng: &mut ChaCha8Rng, bits: u8) -> Rect {
    let side = 1u32 << bits;
    let (a, b) = (rng.random_range(0..side), rng.random_range(0..side));
    let (c, d) = (rng.random_range(0..side), rng.random_range(0..side));
    Rect::new(a.min(b), a.max(b), c.min(d), c.max(d), bits).expect("inside the grid")
}

/// Runs every check on the reduced scenario.
pub fn verify(config: &ScenarioConfig) -> Result<Vec<Check>, SimError> {
    let c = reduced(config);
    c.validate()?;
    let bits = c.bits_per_axis;
    let mut rng = ChaCha8Rng::seed_from_u64(c.rng_seed);
    let mut checks = Vec::new();

    let mut bad = Vec::new();
    for v in 0..1u64 << (2 * bits) {
        let z = ZCode::full(v, bits)?;
        if encode(decode(&z)?) != z {
            bad.push(format!("code {v} does not round-trip"));
        }
    }
    checks.push(Check::new("zorder round trip", bad, format!("{} codes", 1u64 << (2 * bits))));

    let points: Vec<_> = (0..c.n_clients as u32).map(|i| (ClientId(i), random_point(&mut rng, bits, false))).collect();
    let tree = RangeTree::build(points.clone()).map_err(crate::routing::RoutingError::from)?;
    let mut bad = Vec::new();
    for _ in 0..200 {
        let r = random_rect(&mut rng, bits);
        let mut n = 0;
        let got: BTreeSet<_> = tree.query_rect(&r, &mut n).into_iter().collect();
        let want: BTreeSet<_> = points.iter().filter(|(_, p)| r.contains_point(p)).map(|(c, _)| *c).collect();
        if got != want {
            bad.push(format!("range query {r} differs from a linear scan"));
        }
    }
    checks.push(Check::new("range tree vs linear scan", bad, "200 rectangles".into()));

    let sim = Simulation::new(&c)?;
    let initial: Vec<ZCode> = sim.vehicles().iter().map(|v| v.pos.encode()).collect();
    let ring = build_distributed_ring(&c, &initial)?;
    let locations = ring.location_tree();
    let mut bad = Vec::new();
    for _ in 0..50 {
        let r = random_rect(&mut rng, bits);
        let mut n = 0;
        let got: BTreeSet<_> = relevant_routers(&ring, &locations, &r, &mut n)?.into_iter().collect();
        let mut want = BTreeSet::new();
        for (x, y) in r.cells() {
            want.insert(ring.assign(&crate::zorder::encode_xy(x, y, bits)?)?);
        }
        if got != want {
            bad.push(format!("relevant routers for {r} differ from the cell owners"));
        }
    }
    checks.push(Check::new("relevant routers vs cell owners", bad, "50 rectangles".into()));

    let trie = build_trie(&initial, bits)?;
    let ann = announce(&trie, c.k_anonymity)?;
    let mut bad = Vec::new();
    for z in &initial {
        let p = conform(z, &ann)?;
        if trie.total() >= c.k_anonymity && trie.count(&p) < c.k_anonymity {
            bad.push(format!("prefix {p} holds fewer than {} vehicles", c.k_anonymity));
        }
    }
    checks.push(Check::new("k-anonymous announcement", bad, format!("{} prefixes", ann.allowed.len())));

    let (log_a, ledger) = run(&c)?;
    let violations = ledger.audit();
    let rows = ledger.disseminations().len();
    checks.push(Check::new("ledger audit", violations, format!("{rows} rows")));

    let (log_b, _) = run(&c)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    log_a.write_jsonl(&mut a).map_err(|e| SimError::Io(e.to_string()))?;
    log_b.write_jsonl(&mut b).map_err(|e| SimError::Io(e.to_string()))?;
    let bad = if a == b { Vec::new() } else { vec!["event logs differ between identical runs".to_string()] };
    checks.push(Check::new("determinism", bad, format!("{} events", log_a.len())));

    Ok(checks)
}
