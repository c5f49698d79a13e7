//! Worker tasks as separate OS processes sharing a `file://` store.

use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use nimbus_core::coordinator::{Launcher, WorkerHandle};
use nimbus_core::{Error, Result};

/// Spawns `<exe> worker --maas <uri> --worker <k>` per worker.
pub struct ProcessLauncher {
    exe: PathBuf,
    maas: String,
}

impl ProcessLauncher {
    pub fn new(exe: impl Into<PathBuf>, maas: &str) -> Result<Self> {
        if !maas.starts_with("file://") {
            return Err(Error::Config(format!("process workers need a file:// store, got `{maas}`")));
        }
        Ok(ProcessLauncher { exe: exe.into(), maas: maas.to_string() })
    }
}

struct ProcessHandle {
    worker: u32,
    child: Mutex<Child>,
    started: Instant,
}

impl WorkerHandle for ProcessHandle {
    fn is_finished(&self) -> bool {
        let mut child = self.child.lock().unwrap_or_else(|e| e.into_inner());
        !matches!(child.try_wait(), Ok(None))
    }

    fn join(self: Box<Self>) -> Result<Duration> {
        let status = self.child.into_inner().unwrap_or_else(|e| e.into_inner()).wait()?;
        let lived = self.started.elapsed();
        if status.success() {
            Ok(lived)
        } else {
            Err(Error::Worker { worker: self.worker, reason: format!("process exited with {status}") })
        }
    }
}

impl Launcher for ProcessLauncher {
    fn launch(&self, worker: u32) -> Result<Box<dyn WorkerHandle>> {
        let child = Command::new(&self.exe)
            .args(["worker", "--maas", &self.maas, "--worker", &worker.to_string()])
            .stdin(Stdio::null())
            .spawn()?;
        Ok(Box::new(ProcessHandle { worker, child: Mutex::new(child), started: Instant::now() }))
    }
}
