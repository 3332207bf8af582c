use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use klsym_core::expsum::{read_records, write_records, SumCache, SumEvaluator, SumRecord};
use klsym_core::ff::{Field, FieldDesc, Tower, DEFAULT_MAX_FIELD_SIZE};
use serde::Serialize;

use crate::error::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheCommand {
    Stat,
    Verify { sample: usize },
    Compact,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Mismatch {
    pub line: usize,
    pub key: String,
    pub stored: String,
    pub recomputed: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CacheSummary {
    pub records: usize,
    pub distinct_keys: usize,
    /// Record counts per `p,a,n`.
    pub by_instance: BTreeMap<String, usize>,
    pub checked: usize,
    pub skipped: usize,
    pub mismatches: Vec<Mismatch>,
    pub removed: usize,
}

fn load(path: &Path) -> CliResult<Vec<(usize, SumRecord)>> {
    if !path.exists() || std::fs::metadata(path)?.len() == 0 {
        return Ok(Vec::new());
    }
    Ok(read_records(path)?)
}

/// Every record when `sample >= len`, else `sample` evenly spaced ones.
fn sample_indices(len: usize, sample: usize) -> Vec<usize> {
    if sample >= len {
        return (0..len).collect();
    }
    (0..sample).map(|i| i * len / sample).collect()
}

pub fn cache_admin(path: &Path, cmd: CacheCommand) -> CliResult<CacheSummary> {
    let records = load(path)?;
    let mut summary = CacheSummary { records: records.len(), ..Default::default() };
    let keys: HashSet<_> = records.iter().map(|(_, r)| r.key.clone()).collect();
    summary.distinct_keys = keys.len();
    for (_, r) in &records {
        *summary.by_instance.entry(format!("p={},a={},n={}", r.key.p, r.key.a, r.key.n)).or_default() += 1;
    }
    match cmd {
        CacheCommand::Stat => {}
        CacheCommand::Verify { sample } => {
            for i in sample_indices(records.len(), sample) {
                let (line, rec) = &records[i];
                let key = &rec.key;
                let tower = Arc::new(Tower::new(key.p, DEFAULT_MAX_FIELD_SIZE)?);
                let base = Arc::new(Field::new(
                    FieldDesc::new(key.p, key.a, Some(key.modulus.clone()))?,
                    DEFAULT_MAX_FIELD_SIZE,
                )?);
                let ev = SumEvaluator::new(tower, base, Arc::new(SumCache::in_memory()))?;
                match ev.recompute(key)? {
                    None => summary.skipped += 1,
                    Some(v) => {
                        summary.checked += 1;
                        if v != rec.value {
                            summary.mismatches.push(Mismatch {
                                line: *line,
                                key: key.to_string(),
                                stored: rec.value.to_string(),
                                recomputed: v.to_string(),
                            });
                        }
                    }
                }
            }
        }
        CacheCommand::Compact => {
            let mut seen = HashSet::new();
            let mut kept: Vec<SumRecord> =
                records.iter().filter(|(_, r)| seen.insert(r.key.clone())).map(|(_, r)| r.clone()).collect();
            kept.sort_by(|a, b| a.key.cmp(&b.key));
            summary.removed = records.len() - kept.len();
            let tmp = path.with_extension("compact.tmp");
            write_records(&tmp, &kept)?;
            std::fs::rename(&tmp, path)?;
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_even() {
        assert_eq!(sample_indices(3, 10), vec![0, 1, 2]);
        assert_eq!(sample_indices(10, 3), vec![0, 3, 6]);
        assert!(sample_indices(0, 4).is_empty());
    }
}
