use std::fs::{self, File, OpenOptions};
use std::io::{self, ErrorKind};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use super::{Maas, Namespace, StorageKey};
use crate::error::{Error, Result};

static TMP_SEQ: AtomicU64 = AtomicU64::new(0);

/// Store rooted at a shared directory, usable from several processes.
///
/// Objects are raw files written via rename, flags are empty marker files,
/// counters and queues are decimal text guarded by advisory locks under
/// `.locks/`.
#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
    poll: Duration,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join(".locks"))?;
        Ok(FileStore { root, poll: Duration::from_millis(20) })
    }

    pub fn with_poll_interval(mut self, poll: Duration) -> Self {
        self.poll = poll;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, key: &StorageKey) -> PathBuf {
        let mut p = self.root.join(key.namespace().as_str());
        for c in key.components() {
            p.push(c);
        }
        p
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension(format!(
            "tmp{}-{}",
            std::process::id(),
            TMP_SEQ.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Runs `f` while holding the exclusive lock for `key`.
    fn locked<T>(&self, key: &StorageKey, f: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
        let lock_path = self.root.join(".locks").join(key.render().replace('/', "~"));
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(lock_path)?;
        lock.lock()?;
        let out = f(&self.path(key));
        let _ = lock.unlock();
        out
    }

    fn read_text(&self, path: &Path, key: &StorageKey) -> Result<Option<String>> {
        match fs::read_to_string(path) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::Storage(format!("{}: {e}", key.render()))),
        }
    }

    fn read_queue(&self, path: &Path, key: &StorageKey) -> Result<Vec<u32>> {
        let Some(text) = self.read_text(path, key)? else { return Ok(Vec::new()) };
        text.split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Storage(format!("corrupt queue file {}", key.render()))))
            .collect()
    }

    fn write_queue(&self, path: &Path, items: &[u32]) -> Result<()> {
        let text: Vec<String> = items.iter().map(u32::to_string).collect();
        self.write_atomic(path, text.join("\n").as_bytes())
    }
}

fn ignore_missing(r: io::Result<()>) -> Result<()> {
    match r {
        Err(e) if e.kind() != ErrorKind::NotFound => Err(e.into()),
        _ => Ok(()),
    }
}

impl Maas for FileStore {
    fn put(&self, key: &StorageKey, value: &[u8]) -> Result<()> {
        self.write_atomic(&self.path(key), value)
    }

    fn get(&self, key: &StorageKey) -> Result<Vec<u8>> {
        match fs::read(self.path(key)) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == ErrorKind::NotFound => Err(Error::NotFound(key.render())),
            Err(e) => Err(e.into()),
        }
    }

    fn exists(&self, key: &StorageKey) -> Result<bool> {
        Ok(self.path(key).is_file())
    }

    fn delete(&self, key: &StorageKey) -> Result<()> {
        ignore_missing(fs::remove_file(self.path(key)))
    }

    fn init_counter(&self, key: &StorageKey, value: i64) -> Result<()> {
        self.locked(key, |path| self.write_atomic(path, value.to_string().as_bytes()))
    }

    fn atomic_add(&self, key: &StorageKey, delta: i64) -> Result<i64> {
        self.locked(key, |path| {
            let text = self.read_text(path, key)?.ok_or_else(|| Error::NotFound(key.render()))?;
            let current: i64 = text
                .trim()
                .parse()
                .map_err(|_| Error::Storage(format!("corrupt counter file {}", key.render())))?;
            let next = current + delta;
            if delta != 0 {
                self.write_atomic(path, next.to_string().as_bytes())?;
            }
            Ok(next)
        })
    }

    fn set_flag(&self, key: &StorageKey) -> Result<()> {
        let path = self.path(key);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        File::create(path)?;
        Ok(())
    }

    fn clear_flag(&self, key: &StorageKey) -> Result<()> {
        ignore_missing(fs::remove_file(self.path(key)))
    }

    fn flag_set(&self, key: &StorageKey) -> Result<bool> {
        Ok(self.path(key).exists())
    }

    fn queue_init(&self, key: &StorageKey, items: &[u32]) -> Result<()> {
        self.locked(key, |path| self.write_queue(path, items))
    }

    fn queue_pop(&self, key: &StorageKey) -> Result<Option<u32>> {
        self.locked(key, |path| {
            let mut items = self.read_queue(path, key)?;
            if items.is_empty() {
                return Ok(None);
            }
            let head = items.remove(0);
            self.write_queue(path, &items)?;
            Ok(Some(head))
        })
    }

    fn queue_remove(&self, key: &StorageKey, item: u32) -> Result<bool> {
        self.locked(key, |path| {
            let mut items = self.read_queue(path, key)?;
            let Some(i) = items.iter().position(|&x| x == item) else { return Ok(false) };
            items.remove(i);
            self.write_queue(path, &items)?;
            Ok(true)
        })
    }

    fn queue_len(&self, key: &StorageKey) -> Result<usize> {
        self.locked(key, |path| Ok(self.read_queue(path, key)?.len()))
    }

    fn clear_namespace(&self, ns: Namespace) -> Result<()> {
        match fs::remove_dir_all(self.root.join(ns.as_str())) {
            Err(e) if e.kind() != ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    fn default_poll_interval(&self) -> Duration {
        self.poll
    }
}
