//! Greedy ε-net over the prefix vectors `f^(1), ..., f^(m)` of an
//! insertion-only stream.
//!
//! Scanning prefixes in time order, `f^(t)` joins the net when no member lies
//! within ℓ₂ distance `eps`. Because every coordinate only grows, the most
//! recent member is always the closest one, so the common path maintains a
//! single incremental distance and only falls back to a full scan over the
//! net when that distance exceeds `eps`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::streams::Stream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetMember {
    pub t: u64,
    /// Sparse `f^(t)`.
    pub snapshot: BTreeMap<u64, u64>,
}

#[derive(Debug, Clone)]
pub struct EpsNet {
    /// Absolute ℓ₂ radius.
    pub eps: f64,
    pub members: Vec<NetMember>,
    /// `||f^(m)||_2`.
    pub final_norm: f64,
}

impl EpsNet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// `1 + eps^-2 · ||f^(m)||_2`.
    pub fn stated_bound(&self) -> f64 {
        1.0 + self.final_norm / (self.eps * self.eps)
    }

    /// `1 + eps^-2 · ||f^(m)||_2^2`. Consecutive greedy members differ by more
    /// than `eps`, and for nonnegative increments `||f^(t')||² - ||f^(t)||² >=
    /// ||f^(t') - f^(t)||²`, so the squared norm grows by more than `eps²` per
    /// member after the first.
    pub fn norm_sq_bound(&self) -> f64 {
        1.0 + self.final_norm * self.final_norm / (self.eps * self.eps)
    }
}

fn dist_sq(f: &HashMap<u64, u64>, y: &BTreeMap<u64, u64>) -> u128 {
    let mut d: u128 = 0;
    for (item, &fi) in f {
        let yi = y.get(item).copied().unwrap_or(0);
        d += (fi.abs_diff(yi) as u128).pow(2);
    }
    for (item, &yi) in y {
        if !f.contains_key(item) {
            d += (yi as u128).pow(2);
        }
    }
    d
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps {eps} must be positive")));
    }
    Ok(())
}

/// Builds the greedy net with absolute radius `eps`.
pub fn greedy_net(stream: &Stream, eps: f64) -> Result<EpsNet> {
    check_eps(eps)?;
    if stream.is_empty() {
        return Err(invalid("cannot build a net over an empty stream"));
    }
    let eps_sq = eps * eps;
    let mut f: HashMap<u64, u64> = HashMap::new();
    let mut members: Vec<NetMember> = Vec::new();
    // ||f^(t) - last member||²
    let mut d_last: u128 = 0;
    let mut norm_sq: u128 = 0;

    for (idx, item) in stream.items().enumerate() {
        let t = idx as u64 + 1;
        let fi = f.entry(item).or_insert(0);
        let yi = members
            .last()
            .and_then(|m| m.snapshot.get(&item).copied())
            .unwrap_or(0);
        d_last += 2 * (*fi - yi) as u128 + 1;
        norm_sq += 2 * *fi as u128 + 1;
        *fi += 1;

        let join = match members.last() {
            None => true,
            Some(_) if d_last as f64 <= eps_sq => false,
            Some(_) => members
                .iter()
                .all(|m| dist_sq(&f, &m.snapshot) as f64 > eps_sq),
        };
        if join {
            members.push(NetMember {
                t,
                snapshot: f.iter().map(|(&k, &v)| (k, v)).collect(),
            });
            d_last = 0;
        }
    }
    Ok(EpsNet {
        eps,
        members,
        final_norm: (norm_sq as f64).sqrt(),
    })
}

/// `greedy_net` with radius `eps_rel · ||f^(m)||_2`.
pub fn greedy_net_relative(stream: &Stream, eps_rel: f64) -> Result<EpsNet> {
    check_eps(eps_rel)?;
    let mut norm_sq: u128 = 0;
    let mut f: HashMap<u64, u64> = HashMap::new();
    for run in stream.runs() {
        *f.entry(run.item).or_insert(0) += run.count;
    }
    for &c in f.values() {
        norm_sq += (c as u128).pow(2);
    }
    greedy_net(stream, eps_rel * (norm_sq as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetCheck {
    pub covered: bool,
    pub max_min_distance: f64,
    /// Every member snapshot equals the recomputed prefix at its time.
    pub members_are_prefixes: bool,
    pub times_increasing: bool,
}

/// Recomputes every prefix and measures its distance to the nearest member.
pub fn verify_net(stream: &Stream, net: &EpsNet) -> NetCheck {
    let mut f: HashMap<u64, u64> = HashMap::new();
    // signed running ||f^(t) - y_j||² for every member j
    let mut d: Vec<i128> = net
        .members
        .iter()
        .map(|m| m.snapshot.values().map(|&v| (v as i128).pow(2)).sum())
        .collect();
    let mut worst: i128 = 0;
    let mut prefixes_ok = true;
    let mut next_member = 0usize;

    for (idx, item) in stream.items().enumerate() {
        let t = idx as u64 + 1;
        let fi = f.entry(item).or_insert(0);
        for (dj, m) in d.iter_mut().zip(&net.members) {
            let yi = m.snapshot.get(&item).copied().unwrap_or(0) as i128;
            *dj += 2 * (*fi as i128 - yi) + 1;
        }
        *fi += 1;
        let nearest = d.iter().copied().min().unwrap_or(i128::MAX);
        worst = worst.max(nearest);

        while next_member < net.members.len() && net.members[next_member].t == t {
            let snap = &net.members[next_member].snapshot;
            prefixes_ok &= snap.len() == f.len() && snap.iter().all(|(k, v)| f.get(k) == Some(v));
            next_member += 1;
        }
    }
    prefixes_ok &= next_member == net.members.len();
    let times_increasing = net.members.windows(2).all(|w| w[0].t < w[1].t);
    let max_min_distance = (worst as f64).sqrt();
    NetCheck {
        covered: worst as f64 <= net.eps * net.eps,
        max_min_distance,
        members_are_prefixes: prefixes_ok,
        times_increasing,
    }
}
