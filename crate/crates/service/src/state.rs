use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use nimbus_core::algorithms::Registry;
use nimbus_core::api::{JobStatus, JobSummary};
use nimbus_core::maas::{self, Maas, MaasUri};
use nimbus_core::Result;

/// How `/run` starts workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkerMode {
    Threads,
    /// Separate processes of this executable; only for `file://` stores.
    Processes(PathBuf),
}

pub struct AppState {
    pub registry: Arc<Registry>,
    pub workers: WorkerMode,
    /// `mem://` stores live as long as the server so a later `/run` sees
    /// what `/partition` wrote.
    stores: Mutex<HashMap<String, Arc<dyn Maas>>>,
    busy: Mutex<HashSet<String>>,
    jobs: Mutex<BTreeMap<u64, JobSummary>>,
}

impl AppState {
    pub fn new(registry: Arc<Registry>, workers: WorkerMode) -> Arc<Self> {
        Arc::new(AppState {
            registry,
            workers,
            stores: Mutex::new(HashMap::new()),
            busy: Mutex::new(HashSet::new()),
            jobs: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn store(&self, uri: &str) -> Result<Arc<dyn Maas>> {
        match MaasUri::parse(uri)? {
            MaasUri::Memory(_) => {
                let mut stores = self.stores.lock().unwrap_or_else(|e| e.into_inner());
                Ok(stores.entry(uri.to_string()).or_insert_with(|| Arc::new(maas::MemStore::new())).clone())
            }
            MaasUri::File(_) => maas::open(uri),
        }
    }

    /// Marks a store as in use; one job or upload per store at a time.
    /// `None` while another request holds the store.
    pub fn lock_store(self: &Arc<Self>, uri: &str) -> Option<StoreGuard> {
        let mut busy = self.busy.lock().unwrap_or_else(|e| e.into_inner());
        busy.insert(uri.to_string()).then(|| StoreGuard { state: self.clone(), uri: uri.to_string() })
    }

    pub fn start_job(&self, algorithm: &str, maas: &str) -> u64 {
        let mut jobs = self.jobs.lock().unwrap_or_else(|e| e.into_inner());
        let id = jobs.keys().next_back().map_or(1, |k| k + 1);
        jobs.insert(
            id,
            JobSummary {
                job: id,
                algorithm: algorithm.to_string(),
                maas: maas.to_string(),
                status: JobStatus::Running,
                supersteps: None,
                error: None,
                report: None,
            },
        );
        id
    }

    pub fn update_job(&self, id: u64, f: impl FnOnce(&mut JobSummary)) {
        if let Some(j) = self.jobs.lock().unwrap_or_else(|e| e.into_inner()).get_mut(&id) {
            f(j);
        }
    }

    pub fn jobs(&self) -> Vec<JobSummary> {
        let jobs = self.jobs.lock().unwrap_or_else(|e| e.into_inner());
        jobs.values().map(|j| JobSummary { report: None, ..j.clone() }).collect()
    }

    pub fn job(&self, id: u64) -> Option<JobSummary> {
        self.jobs.lock().unwrap_or_else(|e| e.into_inner()).get(&id).cloned()
    }
}

pub struct StoreGuard {
    state: Arc<AppState>,
    uri: String,
}

impl Drop for StoreGuard {
    fn drop(&mut self) {
        self.state.busy.lock().unwrap_or_else(|e| e.into_inner()).remove(&self.uri);
    }
}
