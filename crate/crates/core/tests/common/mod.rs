//! Seeded config generators shared by the integration tests.

#![allow(dead_code)]

use rackregen::rational::{int, ratio};
use rackregen::{Rational, SystemConfig};
use rand::Rng;

pub fn oracle_taus() -> Vec<Rational> {
    vec![int(1), ratio(3, 2), int(2), int(3)]
}

/// Random valid config with `racks` racks of 1..=max_nodes nodes each,
/// k <= max_k, tau drawn from `taus`. Retries until validation passes.
pub fn random_config<R: Rng>(rng: &mut R, racks: usize, max_nodes: usize, max_k: usize, taus: &[Rational]) -> SystemConfig {
    loop {
        let spec: Vec<(usize, usize)> = (0..racks)
            .map(|_| {
                let n = rng.gen_range(1..=max_nodes);
                (n, rng.gen_range(0..n))
            })
            .collect();
        let total: usize = spec.iter().map(|r| r.0).sum();
        if total < 2 {
            continue;
        }
        let d = rng.gen_range(1..total);
        let k = rng.gen_range(1..=d.min(max_k));
        let tau = taus[rng.gen_range(0..taus.len())].clone();
        if let Ok(cfg) = SystemConfig::simple(k, d, tau, &spec) {
            return cfg;
        }
    }
}

/// Two-rack config with at most `max_total` nodes in all.
pub fn random_two_rack<R: Rng>(rng: &mut R, max_total: usize, max_k: usize, taus: &[Rational]) -> SystemConfig {
    loop {
        let cfg = random_config(rng, 2, max_total - 1, max_k, taus);
        if cfg.total_nodes() <= max_total {
            return cfg;
        }
    }
}
