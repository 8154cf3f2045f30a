//! Greedy Varshamov–Gilbert packing of weight-d binary vectors.

use rand::seq::{index::sample, SliceRandom};
use serde::{Deserialize, Serialize};

use super::rip::{advance, binomial};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VgPacking {
    pub d: usize,
    pub p: usize,
    /// Supports of the kept vectors, each sorted.
    pub omega: Vec<Vec<usize>>,
    pub log_card: f64,
}

impl VgPacking {
    /// (d/2) log(p/(5d)).
    pub fn log_bound(&self) -> f64 {
        vg_log_bound(self.p, self.d)
    }

    pub fn to_binary(&self) -> Vec<Vec<u8>> {
        self.omega
            .iter()
            .map(|s| {
                let mut w = vec![0u8; self.p];
                s.iter().for_each(|&j| w[j] = 1);
                w
            })
            .collect()
    }

    /// Checks weight, pairwise distance and cardinality.
    pub fn verify(&self) -> bool {
        let weights = self.omega.iter().all(|s| s.len() == self.d);
        let pairs = self.omega.iter().enumerate().all(|(i, a)| {
            self.omega[i + 1..].iter().all(|b| 2 * (self.d - overlap(a, b)) > self.d)
        });
        weights && pairs && (self.omega.len() as f64).ln() >= self.log_bound()
    }
}

pub fn vg_log_bound(p: usize, d: usize) -> f64 {
    0.5 * d as f64 * (p as f64 / (5.0 * d as f64)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgOptions {
    pub seed: u64,
    /// Keep scanning after the cardinality bound is met.
    pub exhaust: bool,
    /// Largest C(p, d) that is enumerated and shuffled.
    pub enumerate_limit: u128,
    /// Random candidates drawn when C(p, d) exceeds the limit.
    pub attempts: usize,
}

impl Default for VgOptions {
    fn default() -> Self {
        VgOptions {
            seed: 0,
            exhaust: false,
            enumerate_limit: 1_000_000,
            attempts: 1_000_000,
        }
    }
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

pub fn vg_packing(p: usize, d: usize) -> Result<VgPacking> {
    vg_packing_with(p, d, &VgOptions::default())
}

pub fn vg_packing_with(p: usize, d: usize, opts: &VgOptions) -> Result<VgPacking> {
    if d == 0 || 5 * d >= p {
        return Err(Error::arg(format!("packing needs 1 <= d < p/5, got p = {p}, d = {d}")));
    }
    let target = vg_log_bound(p, d).exp().ceil().max(1.0) as usize;
    let mut r = rng::rng_from_seed(rng::replication_seed(opts.seed, 0x5647));
    let total = binomial(p, d);
    let mut kept: Vec<Vec<usize>> = Vec::new();
    let offer = |cand: Vec<usize>, kept: &mut Vec<Vec<usize>>| -> bool {
        // ‖w − w′‖² = 2(d − overlap) > d
        if kept.iter().all(|k| 2 * overlap(k, &cand) < d) {
            kept.push(cand);
        }
        !opts.exhaust && kept.len() >= target
    };
    if total <= opts.enumerate_limit {
        let mut all = Vec::with_capacity(total as usize);
        let mut comb: Vec<usize> = (0..d).collect();
        loop {
            all.push(comb.clone());
            if !advance(&mut comb, p) {
                break;
            }
        }
        all.shuffle(&mut r);
        for cand in all {
            if offer(cand, &mut kept) {
                break;
            }
        }
    } else {
        for _ in 0..opts.attempts {
            let mut cand = sample(&mut r, p, d).into_vec();
            cand.sort_unstable();
            if offer(cand, &mut kept) {
                break;
            }
        }
    }
    if kept.len() < target {
        return Err(Error::Internal(format!(
            "packing stalled at {} vectors below the guaranteed {target} (p = {p}, d = {d})",
            kept.len()
        )));
    }
    Ok(VgPacking {
        d,
        p,
        log_card: (kept.len() as f64).ln(),
        omega: kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vectors_when_exhausted() {
        let pk = vg_packing_with(10, 1, &VgOptions { exhaust: true, ..Default::default() }).unwrap();
        assert_eq!(pk.omega.len(), 10);
        assert!((pk.log_card - 10f64.ln()).abs() < 1e-15);
        assert!(pk.verify());
    }

    #[test]
    fn stops_at_bound() {
        let pk = vg_packing(10, 1).unwrap();
        assert_eq!(pk.omega.len(), 2);
        assert!(pk.verify());
    }

    #[test]
    fn p25_d2() {
        let pk = vg_packing(25, 2).unwrap();
        assert!(pk.omega.len() >= 3);
        assert!(pk.verify());
    }

    #[test]
    fn large_random_mode() {
        let pk = vg_packing_with(
            200,
            8,
            &VgOptions {
                enumerate_limit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(pk.verify());
    }

    #[test]
    fn precondition() {
        assert!(matches!(vg_packing(10, 2), Err(Error::Argument(_))));
        assert!(vg_packing(10, 0).is_err());
    }
}
