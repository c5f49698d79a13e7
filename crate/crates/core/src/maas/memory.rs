use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::Duration;

use super::{Maas, Namespace, StorageKey};
use crate::error::{Error, Result};

#[derive(Debug, Default)]
struct State {
    objects: HashMap<StorageKey, Vec<u8>>,
    counters: HashMap<StorageKey, i64>,
    flags: HashSet<StorageKey>,
    queues: HashMap<StorageKey, VecDeque<u32>>,
    version: u64,
}

/// In-process shared store. Every mutation bumps a version counter and wakes
/// pollers blocked in [`Maas::wait_for_change`].
#[derive(Debug, Default)]
pub struct MemStore {
    state: Mutex<State>,
    changed: Condvar,
}

impl MemStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn mutate<T>(&self, f: impl FnOnce(&mut State) -> Result<T>) -> Result<T> {
        let mut st = self.lock();
        let out = f(&mut st)?;
        st.version += 1;
        drop(st);
        self.changed.notify_all();
        Ok(out)
    }

    /// Number of stored objects (flags and counters excluded).
    pub fn object_count(&self) -> usize {
        self.lock().objects.len()
    }
}

impl Maas for MemStore {
    fn put(&self, key: &StorageKey, value: &[u8]) -> Result<()> {
        self.mutate(|st| {
            st.objects.insert(key.clone(), value.to_vec());
            Ok(())
        })
    }

    fn get(&self, key: &StorageKey) -> Result<Vec<u8>> {
        self.lock()
            .objects
            .get(key)
            .cloned()
            .ok_or_else(|| Error::NotFound(key.render()))
    }

    fn exists(&self, key: &StorageKey) -> Result<bool> {
        Ok(self.lock().objects.contains_key(key))
    }

    fn delete(&self, key: &StorageKey) -> Result<()> {
        self.mutate(|st| {
            st.objects.remove(key);
            Ok(())
        })
    }

    fn init_counter(&self, key: &StorageKey, value: i64) -> Result<()> {
        self.mutate(|st| {
            st.counters.insert(key.clone(), value);
            Ok(())
        })
    }

    fn atomic_add(&self, key: &StorageKey, delta: i64) -> Result<i64> {
        self.mutate(|st| {
            let c = st.counters.get_mut(key).ok_or_else(|| Error::NotFound(key.render()))?;
            *c += delta;
            Ok(*c)
        })
    }

    fn set_flag(&self, key: &StorageKey) -> Result<()> {
        self.mutate(|st| {
            st.flags.insert(key.clone());
            Ok(())
        })
    }

    fn clear_flag(&self, key: &StorageKey) -> Result<()> {
        self.mutate(|st| {
            st.flags.remove(key);
            Ok(())
        })
    }

    fn flag_set(&self, key: &StorageKey) -> Result<bool> {
        Ok(self.lock().flags.contains(key))
    }

    fn queue_init(&self, key: &StorageKey, items: &[u32]) -> Result<()> {
        self.mutate(|st| {
            st.queues.insert(key.clone(), items.iter().copied().collect());
            Ok(())
        })
    }

    fn queue_pop(&self, key: &StorageKey) -> Result<Option<u32>> {
        self.mutate(|st| Ok(st.queues.get_mut(key).and_then(VecDeque::pop_front)))
    }

    fn queue_remove(&self, key: &StorageKey, item: u32) -> Result<bool> {
        self.mutate(|st| {
            let Some(q) = st.queues.get_mut(key) else { return Ok(false) };
            match q.iter().position(|&x| x == item) {
                Some(i) => {
                    q.remove(i);
                    Ok(true)
                }
                None => Ok(false),
            }
        })
    }

    fn queue_len(&self, key: &StorageKey) -> Result<usize> {
        Ok(self.lock().queues.get(key).map_or(0, VecDeque::len))
    }

    fn clear_namespace(&self, ns: Namespace) -> Result<()> {
        self.mutate(|st| {
            st.objects.retain(|k, _| k.namespace() != ns);
            st.counters.retain(|k, _| k.namespace() != ns);
            st.flags.retain(|k| k.namespace() != ns);
            st.queues.retain(|k, _| k.namespace() != ns);
            Ok(())
        })
    }

    fn version(&self) -> u64 {
        self.lock().version
    }

    fn wait_for_change(&self, seen: u64, timeout: Duration) {
        let st = self.lock();
        if st.version != seen {
            return;
        }
        let _ = self
            .changed
            .wait_timeout_while(st, timeout, |st| st.version == seen)
            .unwrap_or_else(|e| e.into_inner());
    }

    fn default_poll_interval(&self) -> Duration {
        Duration::from_millis(2)
    }
}
