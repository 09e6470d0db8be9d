//! Solved-text cache keyed by (variable, constraint set, context).

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{Assignment, Nltc, Value};

fn short_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Identifies a constraint set by its ids and clause texts, independent of order.
pub fn fingerprint(nltcs: &[Nltc]) -> String {
    let mut items: Vec<(&str, String)> = nltcs
        .iter()
        .map(|n| (n.id.as_str(), n.clause.split_whitespace().collect::<Vec<_>>().join(" ")))
        .collect();
    items.sort();
    items.dedup();
    let ids: Vec<&str> = items.iter().map(|(id, _)| *id).collect();
    let clauses: Vec<&str> = items.iter().map(|(_, c)| c.as_str()).collect();
    format!("{}#{}", ids.join(","), short_hash(&clauses))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub var: String,
    pub fingerprint: String,
    /// `(out_var, target)` for each constraint in the set, sorted.
    pub context: Vec<(String, bool)>,
    /// Boolean inputs the constraints read, other than their own outputs.
    pub bool_deps: Vec<(String, bool)>,
    /// Hashes of the other string inputs the constraints read.
    pub string_deps: Vec<(String, String)>,
}

impl CacheKey {
    /// Key for generating `var` under `nltcs` with the values in `pi`.
    /// Unbound inputs are left out.
    pub fn new(var: &str, nltcs: &[Nltc], pi: &Assignment) -> Self {
        let mut context: Vec<(String, bool)> = nltcs
            .iter()
            .filter_map(|n| pi.get_bool(&n.out_var).map(|b| (n.out_var.clone(), b)))
            .collect();
        context.sort();
        context.dedup();
        let outputs: Vec<&str> = nltcs.iter().map(|n| n.out_var.as_str()).collect();
        let mut bool_deps = Vec::new();
        let mut string_deps = Vec::new();
        for dep in nltcs.iter().flat_map(|n| n.dep_vars()) {
            if dep == var || outputs.contains(&dep) {
                continue;
            }
            match pi.get(dep) {
                Some(Value::Bool(b)) => bool_deps.push((dep.to_string(), *b)),
                Some(Value::Str(s)) => string_deps.push((dep.to_string(), short_hash(&[s]))),
                None => {}
            }
        }
        bool_deps.sort();
        bool_deps.dedup();
        string_deps.sort();
        string_deps.dedup();
        CacheKey {
            var: var.to_string(),
            fingerprint: fingerprint(nltcs),
            context,
            bool_deps,
            string_deps,
        }
    }

    fn comparable(&self, other: &CacheKey) -> bool {
        self.var == other.var
            && self.fingerprint == other.fingerprint
            && self.bool_deps == other.bool_deps
            && self.string_deps == other.string_deps
    }

    fn agreements(&self, other: &CacheKey) -> usize {
        self.context.iter().filter(|pair| other.context.contains(pair)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub text: String,
    pub created_at: u64,
}

#[derive(Default)]
struct Store {
    entries: Vec<CacheEntry>,
    latest: HashMap<CacheKey, usize>,
}

impl Store {
    fn push(&mut self, entry: CacheEntry) {
        self.latest.insert(entry.key.clone(), self.entries.len());
        self.entries.push(entry);
    }
}

/// In-memory cache with optional append-only JSON-lines persistence.
/// Reads are concurrent; writes are serialized.
pub struct NlCache {
    store: RwLock<Store>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl std::fmt::Debug for NlCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NlCache")
            .field("path", &self.path)
            .field("len", &self.len())
            .finish()
    }
}

impl Default for NlCache {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl NlCache {
    pub fn in_memory() -> Self {
        NlCache {
            store: RwLock::new(Store::default()),
            file: None,
            path: None,
        }
    }

    /// Loads every entry of `path` (creating it if missing) and appends new entries to it.
    /// Later lines win over earlier ones with the same key; unreadable lines are skipped.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let mut store = Store::default();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(entry) => store.push(entry),
                    Err(e) => log::warn!("{}:{}: skipping cache line: {e}", path.display(), i + 1),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(NlCache {
            store: RwLock::new(store),
            file: Some(Mutex::new(file)),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.read().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn insert(&self, key: CacheKey, text: impl Into<String>) -> std::io::Result<()> {
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let entry = CacheEntry {
            key,
            text: text.into(),
            created_at,
        };
        let mut store = self.store.write().unwrap_or_else(|e| e.into_inner());
        if let Some(file) = &self.file {
            let mut file = file.lock().unwrap_or_else(|e| e.into_inner());
            let line = serde_json::to_string(&entry).map_err(std::io::Error::other)?;
            writeln!(file, "{line}")?;
        }
        store.push(entry);
        Ok(())
    }

    pub fn lookup(&self, key: &CacheKey) -> Option<String> {
        let store = self.read();
        store.latest.get(key).map(|&i| store.entries[i].text.clone())
    }

    /// Text of the entry whose context agrees with `key` on the most outputs,
    /// among entries with the same variable, constraint set and other inputs.
    /// Ties go to the earliest entry; at least one agreement is required.
    pub fn closest(&self, key: &CacheKey) -> Option<String> {
        let store = self.read();
        let mut best: Option<(usize, &CacheEntry)> = None;
        for entry in store.entries.iter().filter(|e| e.key.comparable(key)) {
            let score = entry.key.agreements(key);
            if score > 0 && best.is_none_or(|(s, _)| score > s) {
                best = Some((score, entry));
            }
        }
        best.map(|(_, e)| e.text.clone())
    }
}

pub fn cache_lookup(cache: &NlCache, key: &CacheKey) -> Option<String> {
    cache.lookup(key)
}

pub fn cache_partial_match(cache: &NlCache, var: &str, nltcs: &[Nltc], pi: &Assignment) -> Option<String> {
    cache.closest(&CacheKey::new(var, nltcs, pi))
}
