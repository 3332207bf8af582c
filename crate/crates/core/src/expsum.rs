//! Hyper-Kloosterman sums
//! `Kl_n(t, m) = Σ_{x ∈ (F_{q^{dm}}^*)^n} ζ_p^{Tr(x_1 + ... + x_n + t/(x_1···x_n))}`
//! with `Tr` the absolute trace to `F_p`, evaluated exactly in `Z[ζ_p]`.
//!
//! Two independent methods are provided: direct enumeration over the torus
//! and the multiplicative convolution recursion `g_j(t) = Σ_x ψ(x) g_{j-1}(t/x)`.
//! [`SumEvaluator`] adds a persistent append-only cache.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::ff::{ClosedPoint, ExtElem, Field, Tower};
use crate::CycInt;

pub const CACHE_HEADER: &str = "#klsym-cache v1";

/// Absolute traces indexed by discrete logarithm: `tr[e] = Tr(g^e)`.
fn trace_by_log(field: &Field) -> Vec<u32> {
    let order = field.size() as u64 - 1;
    (0..order).map(|e| field.abs_trace(field.exp(e))).collect()
}

fn counts_to_cyc(p: u32, counts: &[u64]) -> CycInt {
    CycInt::from_group_ring(p, counts.iter().map(|&c| BigInt::from(c)).collect())
}

/// `Kl_n(t)` over `field` by enumerating `(F^*)^{n-1}` and closing the last
/// variable against `t/∏x` through the log tables.
pub fn kloosterman_in_field(field: &Field, n: u32, t: ExtElem) -> Result<CycInt> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let lt = field.log(t).ok_or_else(|| Error::Config("t must be nonzero".into()))? as usize;
    let p = field.p() as usize;
    let tr = trace_by_log(field);
    let order = tr.len();
    let mut counts = vec![0u64; p];

    // recursive walk over (e_1, ..., e_{n-1}) keeping the partial trace sum
    // and the log of t / (x_1···x_{n-1})
    fn walk(depth: u32, rest: usize, s: usize, tr: &[u32], p: usize, counts: &mut [u64]) {
        let order = tr.len();
        if depth == 0 {
            for e in 0..order {
                let last = if e <= rest { rest - e } else { rest + order - e };
                counts[(s + tr[e] as usize + tr[last] as usize) % p] += 1;
            }
            return;
        }
        for e in 0..order {
            let next = if e <= rest { rest - e } else { rest + order - e };
            walk(depth - 1, next, (s + tr[e] as usize) % p, tr, p, counts);
        }
    }
    walk(n - 1, lt % order, 0, &tr, p, &mut counts);
    Ok(counts_to_cyc(field.p(), &counts))
}

/// `Kl_n(t)` for every `t ∈ F^*`, indexed by the element's packed index
/// (entry 0 is unused and set to zero).
pub fn kloosterman_table(field: &Field, n: u32) -> Result<Vec<CycInt>> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let p = field.p() as usize;
    let tr = trace_by_log(field);
    let order = tr.len();
    // g_0(g^e) = ψ(g^e)
    let mut g: Vec<Vec<u64>> = tr
        .iter()
        .map(|&t| {
            let mut v = vec![0u64; p];
            v[t as usize] = 1;
            v
        })
        .collect();
    for _ in 0..n {
        let mut next = vec![vec![0u64; p]; order];
        for (e, out) in next.iter_mut().enumerate() {
            for (f, &tf) in tr.iter().enumerate() {
                let prev = &g[(e + order - f) % order];
                for r in 0..p {
                    out[(r + tf as usize) % p] += prev[r];
                }
            }
        }
        g = next;
    }
    let mut table = vec![CycInt::zero(field.p()); field.size() as usize];
    for (e, counts) in g.iter().enumerate() {
        table[field.exp(e as u64).index() as usize] = counts_to_cyc(field.p(), counts);
    }
    Ok(table)
}

/// Cache key of `Kl_n(t, m)`: base field description, `n`, point degree,
/// representative coordinates in `F_{q^d}`, and `m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SumKey {
    pub p: u32,
    pub a: u32,
    pub modulus: Vec<u32>,
    pub n: u32,
    pub d: u32,
    pub rep: Vec<u32>,
    pub m: u32,
}

impl SumKey {
    pub fn new(base: &Field, n: u32, point: &ClosedPoint, m: u32) -> Self {
        SumKey {
            p: base.p(),
            a: base.degree(),
            modulus: base.desc().modulus().to_vec(),
            n,
            d: point.degree(),
            rep: point.coords(),
            m,
        }
    }
}

fn list(xs: &[u32]) -> String {
    let body: Vec<String> = xs.iter().map(u32::to_string).collect();
    format!("[{}]", body.join(","))
}

fn parse_list(s: &str) -> Option<Vec<u32>> {
    let body = s.strip_prefix('[')?.strip_suffix(']')?;
    if body.is_empty() {
        return Some(Vec::new());
    }
    body.split(',').map(|x| x.trim().parse().ok()).collect()
}

impl fmt::Display for SumKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "v1|{},{},{}|{}|{}|{}|{}",
            self.p,
            self.a,
            list(&self.modulus),
            self.n,
            self.d,
            list(&self.rep),
            self.m
        )
    }
}

/// One cache line: key and value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumRecord {
    pub key: SumKey,
    pub value: CycInt,
}

impl fmt::Display for SumRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.key, self.value)
    }
}

impl FromStr for SumRecord {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = line.trim().split('|').collect();
        let [version, field, n, d, rep, m, value] = parts[..] else {
            return Err(format!("expected 7 fields, found {}", parts.len()));
        };
        if version != "v1" {
            return Err(format!("unknown record version {version:?}"));
        }
        let mut fp = field.splitn(3, ',');
        let (Some(p), Some(a), Some(modulus)) = (fp.next(), fp.next(), fp.next()) else {
            return Err(format!("malformed field description {field:?}"));
        };
        let num = |s: &str, what: &str| s.trim().parse::<u32>().map_err(|_| format!("bad {what} {s:?}"));
        let key = SumKey {
            p: num(p, "p")?,
            a: num(a, "a")?,
            modulus: parse_list(modulus).ok_or_else(|| format!("bad modulus {modulus:?}"))?,
            n: num(n, "n")?,
            d: num(d, "d")?,
            rep: parse_list(rep).ok_or_else(|| format!("bad representative {rep:?}"))?,
            m: num(m, "m")?,
        };
        let value: CycInt = value.parse().map_err(|e: Error| e.to_string())?;
        if value.level() != key.p {
            return Err(format!("value level {} differs from p = {}", value.level(), key.p));
        }
        if key.modulus.len() != key.a as usize + 1 || key.rep.len() != (key.a * key.d) as usize {
            return Err("field description and representative lengths disagree".into());
        }
        Ok(SumRecord { key, value })
    }
}

/// Reads every record of a cache file with its 1-based line number, failing
/// on the first corrupt line.
pub fn read_records(path: &Path) -> Result<Vec<(usize, SumRecord)>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            if i == 0 && trimmed != CACHE_HEADER {
                return Err(Error::CorruptRecord { line: 1, reason: format!("unexpected header {trimmed:?}") });
            }
            continue;
        }
        if i == 0 {
            return Err(Error::CorruptRecord { line: 1, reason: "missing header".into() });
        }
        let rec = trimmed.parse().map_err(|reason| Error::CorruptRecord { line: i + 1, reason })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

/// Writes a fresh cache file holding `records`.
pub fn write_records(path: &Path, records: &[SumRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CACHE_HEADER}")?;
    for r in records {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub loaded: u64,
}

/// Write-through cache of sums; concurrent readers, serialized appends.
pub struct SumCache {
    path: Option<PathBuf>,
    map: RwLock<HashMap<SumKey, CycInt>>,
    writer: Mutex<Option<BufWriter<File>>>,
    hits: AtomicU64,
    misses: AtomicU64,
    loaded: u64,
}

impl SumCache {
    pub fn in_memory() -> Self {
        SumCache {
            path: None,
            map: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            loaded: 0,
        }
    }

    /// Opens (or creates) a cache file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut map = HashMap::new();
        let exists = path.exists() && std::fs::metadata(path)?.len() > 0;
        if exists {
            for (_, rec) in read_records(path)? {
                map.entry(rec.key).or_insert(rec.value);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut writer = BufWriter::new(file);
        if !exists {
            writeln!(writer, "{CACHE_HEADER}")?;
            writer.flush()?;
        }
        let loaded = map.len() as u64;
        Ok(SumCache {
            path: Some(path.to_path_buf()),
            map: RwLock::new(map),
            writer: Mutex::new(Some(writer)),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            loaded,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &SumKey) -> Option<CycInt> {
        let hit = self.map.read().expect("cache lock poisoned").get(key).cloned();
        match hit {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        hit
    }

    pub fn insert(&self, key: SumKey, value: CycInt) -> Result<()> {
        {
            let mut map = self.map.write().expect("cache lock poisoned");
            if map.contains_key(&key) {
                return Ok(());
            }
            map.insert(key.clone(), value.clone());
        }
        let mut writer = self.writer.lock().expect("cache writer poisoned");
        if let Some(w) = writer.as_mut() {
            writeln!(w, "{}", SumRecord { key, value })?;
            w.flush()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            loaded: self.loaded,
        }
    }
}

/// Evaluates `Kl_n(t, m)` at closed points of `G_m/F_q` through a shared
/// field tower and cache.
pub struct SumEvaluator {
    tower: Arc<Tower>,
    base: Arc<Field>,
    cache: Arc<SumCache>,
}

impl SumEvaluator {
    pub fn new(tower: Arc<Tower>, base: Arc<Field>, cache: Arc<SumCache>) -> Result<Self> {
        if tower.p() != base.p() {
            return Err(Error::Config("tower and base field characteristics differ".into()));
        }
        Ok(SumEvaluator { tower, base, cache })
    }

    pub fn tower(&self) -> &Arc<Tower> {
        &self.tower
    }

    pub fn base(&self) -> &Arc<Field> {
        &self.base
    }

    pub fn cache(&self) -> &Arc<SumCache> {
        &self.cache
    }

    /// `F_{q^{dm}}` and the image of the point's representative in it.
    pub fn sum_field(&self, point: &ClosedPoint, m: u32) -> Result<(Arc<Field>, ExtElem)> {
        if m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        let target = self.tower.extension(&self.base, point.degree() * m)?;
        let emb = self.tower.embedding(point.field(), &target)?;
        Ok((target, emb.apply(point.rep())))
    }

    /// `Kl_n(t, m)` without consulting the cache.
    pub fn compute(&self, n: u32, point: &ClosedPoint, m: u32) -> Result<CycInt> {
        let (field, t) = self.sum_field(point, m)?;
        kloosterman_in_field(&field, n, t)
    }

    pub fn kloosterman(&self, n: u32, point: &ClosedPoint, m: u32) -> Result<CycInt> {
        let key = SumKey::new(&self.base, n, point, m);
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = self.compute(n, point, m)?;
        self.cache.insert(key, v.clone())?;
        Ok(v)
    }

    /// Recomputes a stored record; `None` if it belongs to another base field.
    pub fn recompute(&self, key: &SumKey) -> Result<Option<CycInt>> {
        if key.p != self.base.p() || key.a != self.base.degree() || key.modulus != self.base.desc().modulus() {
            return Ok(None);
        }
        let point_field = self.tower.extension(&self.base, key.d)?;
        let rep = point_field.from_coords(&key.rep)?;
        let field = self.tower.extension(&self.base, key.d * key.m)?;
        let emb = self.tower.embedding(&point_field, &field)?;
        kloosterman_in_field(&field, key.n, emb.apply(rep)).map(Some)
    }
}
