//! Seeded fixtures shared by the benchmarks.

use geocast_core::assignment::{random_virtual_locations, Ring};
use geocast_core::routing::{EventLog, Network};
use geocast_core::zorder::{encode, GridPoint, Rect};
use geocast_core::ClientId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn points(n: usize, bits: u8, seed: u64) -> Vec<(u32, GridPoint)> {
    let mut rng = rng(seed);
    let side = 1u32 << bits;
    (0..n as u32)
        .map(|i| (i, GridPoint::new(rng.random_range(0..side), rng.random_range(0..side), bits).unwrap()))
        .collect()
}

/// Squares of side `side` at random positions.
pub fn squares(n: usize, side: u32, bits: u8, seed: u64) -> Vec<Rect> {
    let mut rng = rng(seed);
    let max = (1u32 << bits) - side;
    (0..n)
        .map(|_| {
            let (x, y) = (rng.random_range(0..=max), rng.random_range(0..=max));
            Rect::new(x, x + side - 1, y, y + side - 1, bits).unwrap()
        })
        .collect()
}

pub fn ring(m: usize, v: usize, bits: u8, seed: u64) -> Ring {
    Ring::new(random_virtual_locations(m, v, bits, seed).unwrap(), bits).unwrap()
}

/// A network with `n` full-precision clients, indexes built.
pub fn network(n: usize, m: usize, bits: u8, seed: u64) -> Network {
    let mut net = Network::new(ring(m, 6, bits, seed)).unwrap();
    let mut log = EventLog::disabled();
    for (i, p) in points(n, bits, seed) {
        net.subscribe_client(ClientId(i), encode(p), &mut log).unwrap();
    }
    net.rebuild_all();
    net
}
