use std::net::SocketAddr;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use nimbus_core::algorithms::Registry;
use nimbus_core::maas::{self, Actor, MaasClient};
use nimbus_core::worker::worker_main;
use nimbus_service::{router, AppState, WorkerMode};

#[derive(Parser)]
#[command(name = "nimbus-server", version, about = "Graph engine service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
        /// Start workers as separate processes for jobs on file:// stores.
        #[arg(long)]
        process_workers: bool,
    },
    /// Run one worker task against a shared store, then exit.
    Worker {
        #[arg(long)]
        maas: String,
        #[arg(long)]
        worker: u32,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Serve { addr, process_workers } => serve(addr, process_workers),
        Command::Worker { maas, worker } => {
            let r = maas::open(&maas).and_then(|store| {
                let client = MaasClient::new(store, None, Actor::Worker(worker));
                worker_main(&client, worker, &Registry::with_builtins())
            });
            match r {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    log::error!("worker {worker}: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}

#[tokio::main]
async fn serve(addr: SocketAddr, process_workers: bool) -> ExitCode {
    let workers = if process_workers {
        match std::env::current_exe() {
            Ok(exe) => WorkerMode::Processes(exe),
            Err(e) => {
                log::error!("cannot locate own executable: {e}");
                return ExitCode::FAILURE;
            }
        }
    } else {
        WorkerMode::Threads
    };
    let app = router(AppState::new(Arc::new(Registry::with_builtins()), workers));
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            log::error!("bind {addr}: {e}");
            return ExitCode::FAILURE;
        }
    };
    log::info!("listening on {}", listener.local_addr().map_or(addr, |a| a));
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    match axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("server: {e}");
            ExitCode::FAILURE
        }
    }
}
