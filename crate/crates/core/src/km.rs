//! Kaplan-Meier product-limit estimator.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KmError {
    #[error("no observations")]
    EmptyGroup,
    #[error("input lengths differ: {times} times, {events} events, {groups} groups")]
    LengthMismatch { times: usize, events: usize, groups: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmRow {
    pub time: u64,
    pub at_risk: usize,
    pub events: usize,
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmGroup {
    pub group: usize,
    pub size: usize,
    /// One row per distinct event time, ascending.
    pub rows: Vec<KmRow>,
}

impl KmGroup {
    /// Right-continuous step value at `t` (1 before the first event).
    pub fn survival_at(&self, t: u64) -> f64 {
        self.rows.iter().take_while(|r| r.time <= t).last().map_or(1.0, |r| r.survival)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmCurve {
    pub groups: Vec<KmGroup>,
}

impl KmCurve {
    pub fn group(&self, group: usize) -> Option<&KmGroup> {
        self.groups.iter().find(|g| g.group == group)
    }
}

/// Product-limit estimate per group. A subject censored at `t` is still at
/// risk for events at `t`.
pub fn km_fit(times: &[u64], events: &[bool], groups: &[usize]) -> Result<KmCurve, KmError> {
    if times.len() != events.len() || times.len() != groups.len() {
        return Err(KmError::LengthMismatch { times: times.len(), events: events.len(), groups: groups.len() });
    }
    if times.is_empty() {
        return Err(KmError::EmptyGroup);
    }
    // group -> time -> (events, removed)
    let mut tallies: BTreeMap<usize, BTreeMap<u64, (usize, usize)>> = BTreeMap::new();
    for ((&t, &e), &g) in times.iter().zip(events).zip(groups) {
        let entry = tallies.entry(g).or_default().entry(t).or_default();
        entry.0 += usize::from(e);
        entry.1 += 1;
    }
    let groups = tallies
        .into_iter()
        .map(|(group, by_time)| {
            let size: usize = by_time.values().map(|v| v.1).sum();
            let mut at_risk = size;
            let mut survival = 1.0;
            let mut rows = Vec::new();
            for (time, (d, removed)) in by_time {
                if d > 0 {
                    survival *= (at_risk - d) as f64 / at_risk as f64;
                    rows.push(KmRow { time, at_risk, events: d, survival });
                }
                at_risk -= removed;
            }
            KmGroup { group, size, rows }
        })
        .collect();
    Ok(KmCurve { groups })
}
