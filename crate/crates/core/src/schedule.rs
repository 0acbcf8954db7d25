//! Frequency-ranked vocabulary partitioning and per-part synchronization
//! periods, plus the closed-form communication-cost predictions they imply.

use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::{Error, Result};

/// A partition of the vocabulary into `n` contiguous frequency-rank blocks.
/// Part rank 1 holds the most frequent words; sizes differ by at most one,
/// with the remainder going to the lowest ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabPartition {
    /// `parts[r - 1]` lists the word ids of the part with rank `r`.
    parts: Vec<Vec<u32>>,
}

impl VocabPartition {
    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// Word ids of the part with 1-based rank `r`.
    pub fn part(&self, r: usize) -> &[u32] {
        &self.parts[r - 1]
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        self.parts.iter().map(Vec::len).collect()
    }

    /// Total vocabulary size covered.
    pub fn vocab_size(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }
}

/// Splits the vocabulary into `n` frequency-ranked parts.
pub fn partition_vocab(ft: &FrequencyTable, n: usize) -> Result<VocabPartition> {
    let w = ft.rank_order().len();
    if n < 1 || n > w {
        return Err(Error::Config(format!("part count {n} outside [1, {w}]")));
    }
    let parts = ft
        .rank_blocks(n)
        .into_iter()
        .map(|b| ft.rank_order()[b].to_vec())
        .collect();
    Ok(VocabPartition { parts })
}

/// A communication schedule: each part syncs with its own period, the part
/// of rank `r` every `max(1, round(r^h))` iterations, plus a forced sync of
/// every part at the final iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CommSchedule {
    partition: VocabPartition,
    h: f64,
    periods: Vec<u64>,
    t: usize,
}

impl CommSchedule {
    /// Builds the schedule over a partition for horizon `t`.
    pub fn new(partition: VocabPartition, h: f64, t: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("h must be positive, got {h}")));
        }
        if t < 1 {
            return Err(Error::Config("t must be >= 1".into()));
        }
        let periods = (1..=partition.num_parts())
            .map(|r| part_period(r, h))
            .collect();
        Ok(CommSchedule { partition, h, periods, t })
    }

    /// An all-parts-every-iteration schedule (plain full synchronization).
    pub fn all_parts(partition: VocabPartition, t: usize) -> Result<Self> {
        let n = partition.num_parts();
        let mut s = CommSchedule::new(partition, 1.0, t)?;
        s.periods = vec![1; n];
        Ok(s)
    }

    pub fn partition(&self) -> &VocabPartition {
        &self.partition
    }

    pub fn num_parts(&self) -> usize {
        self.partition.num_parts()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> usize {
        self.t
    }

    /// Sync period of the part with 1-based rank `r`.
    pub fn period(&self, r: usize) -> u64 {
        self.periods[r - 1]
    }

    /// JSON dump `{N, H, part_sizes[], periods[]}` for inspection.
    pub fn dump(&self) -> ScheduleDump {
        ScheduleDump {
            n: self.num_parts(),
            h: self.h,
            part_sizes: self.partition.part_sizes(),
            periods: self.periods.clone(),
        }
    }
}

/// Serialized form of a [`CommSchedule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDump {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "H")]
    pub h: f64,
    pub part_sizes: Vec<usize>,
    pub periods: Vec<u64>,
}

/// Sync period of part rank `r` under exponent `h`: `max(1, round(r^h))`.
pub fn part_period(r: usize, h: f64) -> u64 {
    let p = (r as f64).powf(h).round();
    if p < 1.0 {
        1
    } else {
        p as u64
    }
}

/// Ranks due to synchronize at iteration `t` (1-based): all `r` whose period
/// divides `t`, plus every rank when `t` is the final iteration.
pub fn parts_due(schedule: &CommSchedule, t: usize) -> Vec<usize> {
    assert!(t >= 1 && t <= schedule.horizon(), "iteration outside schedule horizon");
    let forced = t == schedule.horizon();
    (1..=schedule.num_parts())
        .filter(|&r| forced || t as u64 % schedule.period(r) == 0)
        .collect()
}

/// Ranks naturally due at iteration `t`, ignoring the forced terminal sync.
pub fn parts_due_unforced(schedule: &CommSchedule, t: usize) -> Vec<usize> {
    assert!(t >= 1 && t <= schedule.horizon());
    (1..=schedule.num_parts())
        .filter(|&r| t as u64 % schedule.period(r) == 0)
        .collect()
}

/// Bytes moved at iteration `t`: `(naturally due, forced by the terminal
/// sync)`. Each due part costs `2 * M * |part| * K * bytes_per_entry`
/// (delta upload plus broadcast download per worker). The instrumented
/// trainer and the dry-run simulation both count through here.
pub fn iteration_sync_bytes(
    schedule: &CommSchedule,
    t: usize,
    m: usize,
    k: usize,
    bytes_per_entry: usize,
) -> (u64, u64) {
    let per_word = 2 * m as u64 * k as u64 * bytes_per_entry as u64;
    let natural: usize = parts_due_unforced(schedule, t)
        .iter()
        .map(|&r| schedule.partition().part(r).len())
        .sum();
    let total: usize = parts_due(schedule, t)
        .iter()
        .map(|&r| schedule.partition().part(r).len())
        .sum();
    (natural as u64 * per_word, (total - natural) as u64 * per_word)
}

/// Walks the whole schedule without training, returning
/// `(scheduled bytes, forced terminal bytes)` - exactly the counters a real
/// run accumulates.
pub fn simulate_run_bytes(schedule: &CommSchedule, m: usize, k: usize, bytes_per_entry: usize) -> (u64, u64) {
    let mut scheduled = 0;
    let mut terminal = 0;
    for t in 1..=schedule.horizon() {
        let (natural, forced) = iteration_sync_bytes(schedule, t, m, k, bytes_per_entry);
        scheduled += natural;
        terminal += forced;
    }
    (scheduled, terminal)
}

/// Total bytes moved by full per-iteration synchronization:
/// `2 * M * T * W * K * bytes_per_entry` (upload plus broadcast for each of
/// `M` workers, every iteration).
pub fn predicted_full_cost(w: usize, k: usize, m: usize, t: usize, bytes_per_entry: usize) -> u128 {
    assert!(w > 0 && k > 0 && m > 0 && t > 0 && bytes_per_entry > 0);
    2 * m as u128 * t as u128 * w as u128 * k as u128 * bytes_per_entry as u128
}

/// Total bytes moved under a rank-periodic schedule, with exact part sizes:
/// `sum_r floor(T / p_r) * 2 * M * |part_r| * K * bytes_per_entry`. Excludes
/// the forced terminal sync.
pub fn predicted_reduced_cost(
    w: usize,
    k: usize,
    m: usize,
    t: usize,
    n: usize,
    h: f64,
    bytes_per_entry: usize,
) -> Result<u128> {
    assert!(w > 0 && k > 0 && m > 0 && t > 0 && bytes_per_entry > 0);
    if n < 1 || n > w {
        return Err(Error::Config(format!("part count {n} outside [1, {w}]")));
    }
    if !(h > 0.0) {
        return Err(Error::Config(format!("h must be positive, got {h}")));
    }
    let sizes = crate::corpus::rank_blocks(w, n);
    let mut total: u128 = 0;
    for (i, block) in sizes.into_iter().enumerate() {
        let syncs = t as u128 / part_period(i + 1, h) as u128;
        total += syncs * 2 * m as u128 * block.len() as u128 * k as u128 * bytes_per_entry as u128;
    }
    Ok(total)
}
