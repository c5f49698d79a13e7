use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nimbus_client::{render_result, Client};
use nimbus_core::algorithms::parse_params;
use nimbus_core::api::{BenchRequest, PartitionRequest, RunRequest, VerifyRequest};
use nimbus_core::job::JobConfig;
use nimbus_core::metrics::GraphSpec;

#[derive(Parser)]
#[command(name = "nimbus", version, about = "Client for the graph engine service")]
struct Cli {
    #[arg(long, global = true, env = "NIMBUS_SERVER", default_value = "http://127.0.0.1:7878")]
    server: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    #[arg(long)]
    algorithm: String,
    #[arg(long)]
    partitions: u32,
    #[arg(long, default_value_t = 1)]
    max_worker: u32,
    #[arg(long, default_value_t = 1)]
    threads: u32,
    #[arg(long)]
    activation_start: Option<u64>,
    #[arg(long)]
    no_key_aggregation: bool,
    #[arg(long)]
    no_colocation_dedup: bool,
    #[arg(long)]
    no_preload: bool,
    /// Algorithm parameter, `key=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long, default_value = "none")]
    compression: String,
    /// Configured memory per worker, for GB-seconds.
    #[arg(long, default_value_t = 1.0)]
    memory_gb: f64,
    #[arg(long)]
    max_supersteps: Option<u64>,
    #[arg(long)]
    barrier_timeout_ms: Option<u64>,
}

impl JobArgs {
    fn config(&self, maas: &str) -> Result<JobConfig, String> {
        let mut c = JobConfig::new(&self.algorithm, self.partitions, self.max_worker, self.threads);
        c.params = parse_params(&self.params).map_err(|e| e.to_string())?;
        c.activation_start = self.activation_start;
        c.key_aggregation = !self.no_key_aggregation;
        c.colocation_dedup = !self.no_colocation_dedup;
        c.preload = !self.no_preload;
        c.compression = self.compression.clone();
        c.memory_gb = self.memory_gb;
        c.maas_uri = maas.to_string();
        if let Some(m) = self.max_supersteps {
            c.max_supersteps = m;
        }
        if let Some(t) = self.barrier_timeout_ms {
            c.barrier_timeout_ms = t;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check that the server is up.
    Health,
    /// Cut an edge file into degree-balanced partitions and upload them.
    Partition {
        #[arg(long)]
        input: PathBuf,
        /// Vertex file, one id per line; fixes the dense id order.
        #[arg(long)]
        vertices: Option<PathBuf>,
        #[arg(long)]
        partitions: u32,
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        weighted: bool,
        /// Store URI: mem://<name> (held by the server) or file://<dir>.
        #[arg(long)]
        out: String,
    },
    /// Run a job on previously partitioned data.
    Run {
        #[command(flatten)]
        job: JobArgs,
        #[arg(long)]
        maas: String,
        /// Result file: `global_id value` per line.
        #[arg(long)]
        out: PathBuf,
        /// Also write the run report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the engine and the sequential oracle and compare.
    Verify {
        #[command(flatten)]
        job: JobArgs,
        /// Edge file readable by the server.
        #[arg(long, conflicts_with = "random")]
        input: Option<PathBuf>,
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        weighted: bool,
        /// Random graph with this many vertices instead of a file.
        #[arg(long)]
        random: Option<u64>,
        #[arg(long, default_value_t = 8.0)]
        degree: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt one message in flight; verification must then fail.
        #[arg(long, hide = true)]
        corrupt: bool,
        /// Vertex lines shown on failure.
        #[arg(long, default_value_t = 20)]
        diff_limit: usize,
    },
    /// Run a benchmark matrix and write one JSON record per run.
    Bench {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// List jobs, or show one.
    Jobs { id: Option<u64> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, String> {
    let client = Client::new(&cli.server).map_err(|e| e.to_string())?;
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let write = |p: &PathBuf, s: &str| std::fs::write(p, s).map_err(|e| format!("{}: {e}", p.display()));
    match cli.command {
        Command::Health => {
            println!("{}", client.health().map_err(|e| e.to_string())?);
        }
        Command::Partition { input, vertices, partitions, directed, weighted, out } => {
            let req = PartitionRequest {
                edges: read(&input)?,
                vertices: vertices.as_ref().map(read).transpose()?,
                partitions,
                directed,
                weighted,
                maas: out,
            };
            let m = client.partition(&req).map_err(|e| e.to_string())?.manifest;
            println!("{} vertices in {} partitions", m.vertex_count, m.num_partitions);
            for e in &m.partitions {
                println!("  part {}: {} vertices, {} edges, {} bytes", e.pid, e.inner_count, e.edge_count, e.byte_size);
            }
        }
        Command::Run { job, maas, out, report } => {
            let config = job.config(&maas)?;
            let r = client.run(&RunRequest { config }).map_err(|e| e.to_string())?;
            write(&out, &render_result(&r.values))?;
            if let Some(p) = report {
                write(&p, &pretty(&r.report))?;
            }
            println!(
                "job {}: {} supersteps, {} mode, {} workers, {:.3}s{}",
                r.job,
                r.supersteps,
                format!("{:?}", r.mode).to_lowercase(),
                r.workers,
                r.report.wall_seconds,
                if r.hit_cap { " (stopped at superstep cap)" } else { "" }
            );
        }
        Command::Verify { job, input, directed, weighted, random, degree, seed, corrupt, diff_limit } => {
            let graph = match (input, random) {
                (Some(path), _) => GraphSpec::File {
                    path: std::fs::canonicalize(&path).map_err(|e| format!("{}: {e}", path.display()))?,
                    vertices: None,
                    directed,
                    weighted,
                },
                (None, Some(n)) => GraphSpec::Random { n, degree, directed, seed },
                (None, None) => return Err("verify needs --input or --random".into()),
            };
            let config = job.config("mem://")?;
            let outcome = client.verify(&VerifyRequest { graph, config, corrupt }).map_err(|e| e.to_string())?;
            if outcome.passed {
                println!("pass: {} vertices, {} supersteps", outcome.compared, outcome.engine_supersteps);
            } else {
                println!("FAIL: {} of {} vertices differ", outcome.divergences.len(), outcome.compared);
                print!("{}", outcome.diff_text(diff_limit));
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bench { matrix, report } => {
            let records = client.bench(&BenchRequest { matrix: read(&matrix)? }).map_err(|e| e.to_string())?;
            let mut lines = String::new();
            for r in &records {
                lines += &serde_json::to_string(r).map_err(|e| e.to_string())?;
                lines.push('\n');
            }
            write(&report, &lines)?;
            let bad = records.iter().filter(|r| !r.matches_oracle).count();
            println!("{} runs, {bad} oracle mismatches", records.len());
            if bad > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Jobs { id: Some(id) } => {
            println!("{}", pretty(&client.job(id).map_err(|e| e.to_string())?));
        }
        Command::Jobs { id: None } => {
            for j in client.jobs().map_err(|e| e.to_string())? {
                let steps = j.supersteps.map_or("-".to_string(), |s| s.to_string());
                println!("{:>4} {:<10} {:<9?} {:>6} {}", j.job, j.algorithm, j.status, steps, j.error.unwrap_or_default());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}
