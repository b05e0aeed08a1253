//! Placement, stage enumeration and delivery-time simulation.
//!
//! Indices are zero-based throughout: groups `0..Λ`, users within a group
//! `0..B`, files `0..N`. The JSON-lines timeline export is one-based to match
//! the usual `U_{g,b}` labelling.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::io::Write;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{SnrMatrix, SystemConfig};

/// Delivery scheme under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scheme {
    Tdm,
    Mn,
    Acc,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Tdm => "tdm",
            Scheme::Mn => "mn",
            Scheme::Acc => "acc",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tdm" => Ok(Scheme::Tdm),
            "mn" => Ok(Scheme::Mn),
            "acc" => Ok(Scheme::Acc),
            other => Err(Error::parameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// `n choose k`, exact for everything this crate enumerates.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// A subfile `W_n^T`: file `n`, cached at every state in `T`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubfileId {
    pub file: usize,
    pub cache_subset: Vec<usize>,
}

/// Content stored by every user of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheState {
    pub group: usize,
    pub contents: BTreeSet<SubfileId>,
}

/// An ordered set of `|G|` groups served together in one transmission stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StageSet {
    groups: Vec<usize>,
}

impl StageSet {
    /// Groups must be distinct and in ascending order.
    pub fn new(groups: Vec<usize>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::parameter("a stage needs at least one group"));
        }
        if groups.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parameter(format!("stage groups must be strictly increasing: {groups:?}")));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Requested file of every user, indexed by global user id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandVector(pub Vec<usize>);

impl DemandVector {
    /// Each user asks for a different file: user `k` requests file `k`.
    pub fn distinct(config: &SystemConfig) -> Self {
        DemandVector((0..config.num_users()).collect())
    }

    fn validate(&self, config: &SystemConfig) -> Result<()> {
        if self.0.len() != config.num_users() {
            return Err(Error::parameter(format!(
                "demand vector has {} entries for {} users",
                self.0.len(),
                config.num_users()
            )));
        }
        if let Some(bad) = self.0.iter().find(|&&d| d >= config.library_size()) {
            return Err(Error::parameter(format!("demanded file {bad} outside library")));
        }
        Ok(())
    }
}

/// Fixed block assignment: user `k` belongs to group `k / B` at position `k % B`.
pub fn assign_groups(config: &SystemConfig) -> Vec<(usize, usize)> {
    let b = config.users_per_group();
    (0..config.num_users()).map(|k| (k / b, k % b)).collect()
}

/// All size-`Λγ` subsets of the cache states, lexicographic.
fn cache_subsets(config: &SystemConfig) -> Vec<Vec<usize>> {
    (0..config.num_cache_states())
        .combinations(config.cache_multiplicity())
        .collect()
}

/// Number of subfiles each file is split into, `C(Λ, Λγ)`.
pub fn subpacketization(config: &SystemConfig) -> u64 {
    binomial(config.num_cache_states(), config.cache_multiplicity())
}

/// Cache contents of every group.
pub fn placement(config: &SystemConfig) -> Vec<CacheState> {
    let subsets = cache_subsets(config);
    (0..config.num_cache_states())
        .map(|group| {
            let contents = (0..config.library_size())
                .flat_map(|file| {
                    subsets
                        .iter()
                        .filter(|t| t.contains(&group))
                        .map(move |t| SubfileId {
                            file,
                            cache_subset: t.clone(),
                        })
                })
                .collect();
            CacheState { group, contents }
        })
        .collect()
}

/// All `C(Λ, Λγ+1)` stages, in lexicographic order.
pub fn enumerate_stages(config: &SystemConfig) -> Vec<StageSet> {
    (0..config.num_cache_states())
        .combinations(config.nominal_gain())
        .map(|groups| StageSet { groups })
        .collect()
}

/// The subfile of `file` sent to the user in slot `slot` of `stage`: the one
/// cached at every other group of the stage.
pub fn needed_subfile(stage: &StageSet, slot: usize, file: usize) -> Result<SubfileId> {
    if slot >= stage.len() {
        return Err(Error::parameter(format!("slot {slot} outside stage of size {}", stage.len())));
    }
    let target = stage.groups[slot];
    Ok(SubfileId {
        file,
        cache_subset: stage.groups.iter().copied().filter(|&g| g != target).collect(),
    })
}

/// A served user finishing its subfile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimelineEvent {
    #[serde(rename = "t")]
    pub time: f64,
    pub group: usize,
    pub user: usize,
}

/// Value of the pointer vector `v` right after an event. Entry `i` is the
/// user currently served in slot `i`; `B` means the group is finished.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerSnapshot {
    pub time: f64,
    pub pointers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryTimeline {
    pub events: Vec<TimelineEvent>,
    pub completion_time: f64,
    pub pointer_history: Vec<PointerSnapshot>,
}

#[derive(Serialize)]
struct JsonEvent {
    t: f64,
    group: usize,
    user: usize,
}

#[derive(Serialize)]
struct JsonFooter {
    completion_time: f64,
}

impl DeliveryTimeline {
    /// One `{"t", "group", "user"}` object per line (one-based indices),
    /// followed by a `{"completion_time"}` record.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            let line = JsonEvent {
                t: e.time,
                group: e.group + 1,
                user: e.user + 1,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(
            &mut out,
            &JsonFooter {
                completion_time: self.completion_time,
            },
        )?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Relative window inside which finish times count as simultaneous.
const TIE_WINDOW: f64 = 1e-12;

/// Fluid simulation of one ACC transmission stage.
///
/// In every group of the stage one user is active at a time and accrues data
/// at `log2(1 + SNR)`; when it holds `subfile_size` the next user of the same
/// group takes over. Groups drop out once all `B` users are done.
/// Simultaneous finishes are processed in ascending slot order.
pub fn acc_stage_timeline(stage: &StageSet, snr: &SnrMatrix, subfile_size: f64) -> Result<DeliveryTimeline> {
    if !(subfile_size > 0.0) || !subfile_size.is_finite() {
        return Err(Error::parameter(format!("subfile size must be positive, got {subfile_size}")));
    }
    if let Some(&g) = stage.groups().iter().find(|&&g| g >= snr.groups()) {
        return Err(Error::parameter(format!("stage group {g} outside SNR matrix with {} groups", snr.groups())));
    }
    let users = snr.users_per_group();
    let rates: Vec<Vec<f64>> = stage
        .groups()
        .iter()
        .map(|&g| snr.row(g).iter().map(|&s| s.ln_1p() / std::f64::consts::LN_2).collect())
        .collect();
    for (slot, row) in rates.iter().enumerate() {
        // A zero (or subnormal) rate makes the user's delay infinite.
        if let Some(user) = row.iter().position(|&r| !(r > 0.0 && (subfile_size / r).is_finite())) {
            return Err(Error::UnboundedDelay {
                group: stage.groups()[slot],
                user,
            });
        }
    }

    let mut pointers = vec![0usize; stage.len()];
    // Min-heap of (finish time bits, slot); finish times are positive so the bit order matches.
    let mut queue: BinaryHeap<Reverse<(u64, usize)>> = rates
        .iter()
        .enumerate()
        .map(|(slot, row)| Reverse(((subfile_size / row[0]).to_bits(), slot)))
        .collect();

    let mut events = Vec::with_capacity(stage.len() * users);
    let mut pointer_history = Vec::with_capacity(stage.len() * users);
    let mut completion_time = 0.0_f64;

    while let Some(Reverse((bits, slot))) = queue.pop() {
        let lead = f64::from_bits(bits);
        let mut batch = vec![(lead, slot)];
        while let Some(&Reverse((next_bits, next_slot))) = queue.peek() {
            let t = f64::from_bits(next_bits);
            if t - lead > TIE_WINDOW * lead {
                break;
            }
            queue.pop();
            batch.push((t, next_slot));
        }
        batch.sort_by_key(|&(_, s)| s);
        for (time, slot) in batch {
            let user = pointers[slot];
            events.push(TimelineEvent {
                time,
                group: stage.groups()[slot],
                user,
            });
            pointers[slot] += 1;
            pointer_history.push(PointerSnapshot {
                time,
                pointers: pointers.clone(),
            });
            completion_time = completion_time.max(time);
            if pointers[slot] < users {
                let finish = time + subfile_size / rates[slot][pointers[slot]];
                queue.push(Reverse((finish.to_bits(), slot)));
            }
        }
    }

    Ok(DeliveryTimeline {
        events,
        completion_time,
        pointer_history,
    })
}

/// Delay of one MN stage: the XOR is decodable only at the weakest user's rate.
pub fn mn_stage_delay(user_snrs: &[f64], xor_size: f64) -> Result<f64> {
    if user_snrs.is_empty() {
        return Err(Error::parameter("MN stage needs at least one user"));
    }
    if !(xor_size > 0.0) {
        return Err(Error::parameter(format!("XOR size must be positive, got {xor_size}")));
    }
    let (worst, snr) = user_snrs
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let delay = xor_size / (snr.ln_1p() / std::f64::consts::LN_2);
    if !(snr > 0.0 && delay.is_finite()) {
        return Err(Error::UnboundedDelay { group: worst, user: 0 });
    }
    Ok(delay)
}

/// Total delivery time of a whole session, in units of file-size / (bits/s/Hz).
///
/// ACC runs one stage per group set and takes one SNR matrix per stage. MN
/// repeats the dedicated-cache delivery `B` times; its stage for repetition
/// `r` and group set `s` uses matrix `r * C(Λ, |G|) + s`, reading user `r` of
/// every group in the set.
pub fn full_session_delay(
    config: &SystemConfig,
    demands: &DemandVector,
    snr_per_stage: &[SnrMatrix],
    scheme: Scheme,
) -> Result<f64> {
    demands.validate(config)?;
    let stages = enumerate_stages(config);
    let subfile_size = 1.0 / subpacketization(config) as f64;
    let expected = match scheme {
        Scheme::Acc => stages.len(),
        Scheme::Mn => stages.len() * config.users_per_group(),
        Scheme::Tdm => return Err(Error::parameter("session delay is defined for MN and ACC only")),
    };
    if snr_per_stage.len() != expected {
        return Err(Error::parameter(format!(
            "{} needs {expected} SNR matrices, got {}",
            scheme.name(),
            snr_per_stage.len()
        )));
    }
    if let Some(bad) = snr_per_stage
        .iter()
        .find(|m| m.groups() != config.num_cache_states() || m.users_per_group() != config.users_per_group())
    {
        return Err(Error::parameter(format!(
            "SNR matrix is {}x{}, expected {}x{}",
            bad.groups(),
            bad.users_per_group(),
            config.num_cache_states(),
            config.users_per_group()
        )));
    }
    match scheme {
        Scheme::Acc => stages
            .iter()
            .zip(snr_per_stage)
            .map(|(stage, snr)| acc_stage_timeline(stage, snr, subfile_size).map(|t| t.completion_time))
            .sum(),
        Scheme::Mn => {
            let mut total = 0.0;
            for repetition in 0..config.users_per_group() {
                for (s, stage) in stages.iter().enumerate() {
                    let snr = &snr_per_stage[repetition * stages.len() + s];
                    let users: Vec<f64> = stage.groups().iter().map(|&g| snr.get(g, repetition)).collect();
                    total += mn_stage_delay(&users, subfile_size)?;
                }
            }
            Ok(total)
        }
        Scheme::Tdm => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{sample_snr, SeedSpec};
    use proptest::prelude::*;

    /// SNRs whose point-to-point rates are exactly the given capacities.
    fn snr_for_capacities(rows: &[&[f64]]) -> SnrMatrix {
        SnrMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&c| c.exp2() - 1.0).collect()).collect()).unwrap()
    }

    fn example2() -> SnrMatrix {
        snr_for_capacities(&[&[1.0, 0.25, 0.2], &[0.2, 1.0, 0.25], &[0.25, 1.0, 0.2]])
    }

    #[test]
    fn block_group_assignment() {
        let config = SystemConfig::new(3, 2, 0, 6, 1.0).unwrap();
        let map = assign_groups(&config);
        // user 4 (one-based) -> group 2, position 2
        assert_eq!(map[3], (1, 1));
        for g in 0..3 {
            assert_eq!(map.iter().filter(|(gg, _)| *gg == g).count(), 2);
        }
        let dedicated = SystemConfig::new(3, 1, 0, 3, 1.0).unwrap();
        assert_eq!(assign_groups(&dedicated), vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn placement_examples() {
        let config = SystemConfig::from_cache_fraction(3, 1, 1.0 / 3.0, 3, 1.0).unwrap();
        assert_eq!(subpacketization(&config), 3);
        let caches = placement(&config);
        for cache in &caches {
            assert_eq!(cache.contents.len(), 3);
            assert!(cache.contents.iter().all(|s| s.cache_subset == vec![cache.group]));
        }

        let none = SystemConfig::new(3, 1, 0, 3, 1.0).unwrap();
        assert_eq!(subpacketization(&none), 1);
        assert!(placement(&none).iter().all(|c| c.contents.is_empty()));

        let half = SystemConfig::from_cache_fraction(4, 1, 0.5, 4, 1.0).unwrap();
        assert_eq!(subpacketization(&half), 6);
        for cache in placement(&half) {
            let per_file = cache.contents.iter().filter(|s| s.file == 0).count();
            assert_eq!(per_file, 3);
        }
    }

    #[test]
    fn stage_enumeration() {
        let config = SystemConfig::new(3, 1, 1, 3, 1.0).unwrap();
        let groups: Vec<Vec<usize>> = enumerate_stages(&config).iter().map(|s| s.groups().to_vec()).collect();
        assert_eq!(groups, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let full = SystemConfig::new(3, 1, 2, 3, 1.0).unwrap();
        assert_eq!(enumerate_stages(&full).len(), 1);
        let five = SystemConfig::new(5, 1, 2, 5, 1.0).unwrap();
        assert_eq!(enumerate_stages(&five).len(), 10);
    }

    #[test]
    fn needed_subfile_examples() {
        let stage = StageSet::new(vec![0, 1, 2]).unwrap();
        let s = needed_subfile(&stage, 0, 7).unwrap();
        assert_eq!(s, SubfileId { file: 7, cache_subset: vec![1, 2] });
        let pair = StageSet::new(vec![0, 1]).unwrap();
        assert_eq!(needed_subfile(&pair, 1, 1).unwrap().cache_subset, vec![0]);
        assert!(needed_subfile(&pair, 2, 1).is_err());
    }

    #[test]
    fn session_delivers_exactly_the_missing_subfiles() {
        let config = SystemConfig::from_cache_fraction(5, 2, 0.4, 10, 1.0).unwrap();
        let caches = placement(&config);
        let demands = DemandVector::distinct(&config);
        let assignment = assign_groups(&config);
        let mut received = vec![BTreeSet::new(); config.num_users()];
        for stage in enumerate_stages(&config) {
            for (slot, &g) in stage.groups().iter().enumerate() {
                for (k, &(group, _)) in assignment.iter().enumerate() {
                    if group == g {
                        received[k].insert(needed_subfile(&stage, slot, demands.0[k]).unwrap());
                    }
                }
            }
        }
        for (k, got) in received.iter().enumerate() {
            let (g, _) = assignment[k];
            let missing: BTreeSet<SubfileId> = cache_subsets(&config)
                .into_iter()
                .map(|t| SubfileId { file: demands.0[k], cache_subset: t })
                .filter(|s| !caches[g].contents.contains(s))
                .collect();
            assert_eq!(got, &missing, "user {k}");
        }
    }

    #[test]
    fn example2_timeline() {
        let stage = StageSet::new(vec![0, 1, 2]).unwrap();
        let tl = acc_stage_timeline(&stage, &example2(), 1.0).unwrap();
        assert!((tl.completion_time - 10.0).abs() < 1e-9);
        let first: Vec<(usize, usize)> = tl.events[..2].iter().map(|e| (e.group, e.user)).collect();
        assert_eq!(first, vec![(0, 0), (2, 0)]);
        assert!((tl.events[0].time - 1.0).abs() < 1e-9);
        assert!((tl.events[1].time - 4.0).abs() < 1e-9);
        let at_five: Vec<(usize, usize)> = tl.events[2..5].iter().map(|e| (e.group, e.user)).collect();
        assert_eq!(at_five, vec![(0, 1), (1, 0), (2, 1)]);
        assert!(tl.events[2..5].iter().all(|e| (e.time - 5.0).abs() < 1e-9));
        assert_eq!(tl.events.len(), 9);
        assert_eq!(tl.pointer_history[1].pointers, vec![1, 0, 1]);
    }

    #[test]
    fn single_user_groups() {
        let snr = snr_for_capacities(&[&[0.5], &[2.0], &[1.0]]);
        let stage = StageSet::new(vec![0, 1, 2]).unwrap();
        let tl = acc_stage_timeline(&stage, &snr, 1.0).unwrap();
        assert_eq!(tl.events.len(), 3);
        assert!((tl.completion_time - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_snr_finishes_together() {
        let snr = SnrMatrix::from_rows(vec![vec![3.0; 4]; 3]).unwrap();
        let stage = StageSet::new(vec![0, 1, 2]).unwrap();
        let tl = acc_stage_timeline(&stage, &snr, 1.0).unwrap();
        assert!((tl.completion_time - 4.0 / 2.0).abs() < 1e-12);
        let last: Vec<f64> = tl.events.iter().rev().take(3).map(|e| e.time).collect();
        assert!(last.iter().all(|&t| t == tl.completion_time));
    }

    #[test]
    fn zero_rate_is_reported() {
        let snr = SnrMatrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let stage = StageSet::new(vec![0, 1]).unwrap();
        assert_eq!(
            acc_stage_timeline(&stage, &snr, 1.0).unwrap_err(),
            Error::UnboundedDelay { group: 0, user: 1 }
        );
        assert!(matches!(mn_stage_delay(&[1.0, 0.0], 1.0), Err(Error::UnboundedDelay { .. })));
        // Subnormal SNR: positive rate, but the delay overflows.
        let tiny = SnrMatrix::from_rows(vec![vec![1.0, 1e-320]]).unwrap();
        let single = StageSet::new(vec![0]).unwrap();
        assert!(matches!(acc_stage_timeline(&single, &tiny, 1.0), Err(Error::UnboundedDelay { .. })));
        assert!(matches!(mn_stage_delay(&[1e-320], 1.0), Err(Error::UnboundedDelay { .. })));
    }

    #[test]
    fn mn_delay_examples() {
        assert!((mn_stage_delay(&[1.0, 1.0, 1.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mn_stage_delay(&[3.0, 1.0, 7.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mn_stage_delay(&[0.5], 2.0).unwrap() - 2.0 / 1.5f64.log2()).abs() < 1e-12);
        assert!((mn_stage_delay(&[0.5], 2.0).unwrap() - 3.419).abs() < 1e-3);
    }

    #[test]
    fn session_with_dedicated_caches_matches_mn() {
        let config = SystemConfig::from_cache_fraction(3, 1, 1.0 / 3.0, 3, 1.0).unwrap();
        let demands = DemandVector::distinct(&config);
        let snrs: Vec<SnrMatrix> = (0..3).map(|i| sample_snr(&config, SeedSpec::new(1, i))).collect();
        let acc = full_session_delay(&config, &demands, &snrs, Scheme::Acc).unwrap();
        let mn = full_session_delay(&config, &demands, &snrs, Scheme::Mn).unwrap();
        assert!((acc - mn).abs() < 1e-12 * mn);
    }

    #[test]
    fn symmetric_session_closed_form() {
        let config = SystemConfig::from_cache_fraction(2, 2, 0.5, 4, 1.0).unwrap();
        let demands = DemandVector::distinct(&config);
        let snr = 3.0_f64;
        let m = SnrMatrix::from_rows(vec![vec![snr; 2]; 2]).unwrap();
        let acc = full_session_delay(&config, &demands, &[m], Scheme::Acc).unwrap();
        let closed = (1.0 - 0.5) * 4.0 / (2.0 * (1.0 + snr).log2());
        assert!((acc - closed).abs() < 1e-12);
    }

    #[test]
    fn no_caching_is_tdm() {
        let config = SystemConfig::new(3, 2, 0, 6, 1.0).unwrap();
        let demands = DemandVector::distinct(&config);
        let snrs: Vec<SnrMatrix> = (0..3).map(|i| sample_snr(&config, SeedSpec::new(4, i))).collect();
        let acc = full_session_delay(&config, &demands, &snrs, Scheme::Acc).unwrap();
        // Stage s serves only group s; TDM total is the sum of per-user file times.
        let tdm: f64 = (0..3).map(|s| snrs[s].row(s).iter().map(|x| 1.0 / x.ln_1p() * 2f64.ln()).sum::<f64>()).sum();
        assert!((acc - tdm).abs() < 1e-12 * tdm);
    }

    #[test]
    fn session_rejects_wrong_inputs() {
        let config = SystemConfig::from_cache_fraction(3, 2, 1.0 / 3.0, 6, 1.0).unwrap();
        let demands = DemandVector::distinct(&config);
        let snrs: Vec<SnrMatrix> = (0..3).map(|i| sample_snr(&config, SeedSpec::new(1, i))).collect();
        assert!(full_session_delay(&config, &demands, &snrs, Scheme::Mn).is_err());
        assert!(full_session_delay(&config, &DemandVector(vec![0; 5]), &snrs, Scheme::Acc).is_err());
        assert!(full_session_delay(&config, &DemandVector(vec![6; 6]), &snrs, Scheme::Acc).is_err());
    }

    #[test]
    fn clique_property_exhaustive() {
        for lambda in 1..=8 {
            for t in 0..lambda {
                let config = SystemConfig::new(lambda, 1, t, lambda, 1.0).unwrap();
                let caches = placement(&config);
                for stage in enumerate_stages(&config) {
                    for slot in 0..stage.len() {
                        let sub = needed_subfile(&stage, slot, 0).unwrap();
                        assert_eq!(sub.cache_subset.len(), t);
                        assert!(!caches[stage.groups()[slot]].contents.contains(&sub));
                        for (other, &g) in stage.groups().iter().enumerate() {
                            if other != slot {
                                assert!(caches[g].contents.contains(&sub));
                            }
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn timeline_invariants(
            rows in prop::collection::vec(prop::collection::vec(0.01f64..50.0, 1..6), 1..5)
                .prop_filter("rectangular", |r| r.iter().all(|x| x.len() == r[0].len())),
            size in 0.1f64..3.0,
        ) {
            let snr = SnrMatrix::from_rows(rows.clone()).unwrap();
            let stage = StageSet::new((0..rows.len()).collect()).unwrap();
            let tl = acc_stage_timeline(&stage, &snr, size).unwrap();
            let users = rows[0].len();
            prop_assert_eq!(tl.events.len(), rows.len() * users);
            prop_assert!(tl.events.windows(2).all(|w| w[0].time <= w[1].time * (1.0 + TIE_WINDOW)));
            let mut last_finish = vec![0.0; rows.len()];
            let mut next_user = vec![0; rows.len()];
            for e in &tl.events {
                prop_assert_eq!(e.user, next_user[e.group]);
                next_user[e.group] += 1;
                let rate = snr.get(e.group, e.user).ln_1p() / std::f64::consts::LN_2;
                let delivered = rate * (e.time - last_finish[e.group]);
                prop_assert!((delivered - size).abs() < 1e-9 * size);
                last_finish[e.group] = e.time;
            }
            let closed = (0..rows.len())
                .map(|g| snr.row(g).iter().map(|&s| size / (s.ln_1p() / std::f64::consts::LN_2)).sum::<f64>())
                .fold(0.0, f64::max);
            prop_assert!((tl.completion_time - closed).abs() <= 1e-9 * closed);
            prop_assert_eq!(tl.completion_time, tl.events.last().unwrap().time);
        }

        #[test]
        fn mn_delay_permutation_invariant(mut snrs in prop::collection::vec(0.01f64..100.0, 1..8), size in 0.1f64..5.0) {
            let a = mn_stage_delay(&snrs, size).unwrap();
            snrs.reverse();
            prop_assert_eq!(a, mn_stage_delay(&snrs, size).unwrap());
        }
    }
}
