use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use linkcluster_client::{Client, SearchRequest};
use linkcluster_core::metrics::{write_sweep_csv, TABLE_HEADER};
use linkcluster_core::search::{self, SearchParams, SearchResponse, StatsResponse, DEFAULT_LIMIT};
use linkcluster_core::snapshot::{CORPUS_FILE, EDGES_FILE};
use linkcluster_core::synth::{self, SynthParams};
use linkcluster_core::textindex::write_corpus;
use linkcluster_core::{DegreeMode, Estimator, Snapshot, WalkConfig};

/// Query-time clustering of search results over a link graph.
#[derive(Debug, Parser)]
#[command(name = "linkcluster", version)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate an edge list and corpus and write a snapshot directory.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Explicit node count (otherwise inferred from edges and documents).
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Generate a synthetic power-law link graph and matching corpus.
    Gen {
        #[arg(long, default_value_t = 5000)]
        nodes: usize,
        #[arg(long, default_value_t = 2.5)]
        beta_in: f64,
        #[arg(long, default_value_t = 2.5)]
        beta_out: f64,
        #[arg(long, default_value_t = 1)]
        xmin: usize,
        /// Fraction of pages with no out-links.
        #[arg(long, default_value_t = 0.2)]
        dangling: f64,
        #[arg(long, default_value_t = 2000)]
        vocab_size: usize,
        #[arg(long, default_value_t = 0.5)]
        link_affinity: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for edges.tsv and corpus.jsonl.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a power law to the degree distribution of the graph or a query subgraph.
    Fit {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, alias = "query")]
        q: Option<String>,
        #[arg(long, default_value = "in")]
        mode: DegreeMode,
        #[arg(long, default_value_t = 1)]
        xmin: usize,
        #[arg(long, default_value = "approx")]
        estimator: Estimator,
        /// Emit CSV instead of the tab-separated table.
        #[arg(long)]
        csv: bool,
    },
    /// Cluster the results of one query.
    Cluster {
        #[command(flatten)]
        source: Source,
        #[arg(long, alias = "query")]
        q: String,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        /// Print the JSON search response instead of the text report.
        #[arg(long)]
        json: bool,
    },
    /// Coverage as a function of k over a list of queries.
    Sweep {
        #[arg(long)]
        snapshot: PathBuf,
        /// File with one query per line.
        #[arg(long)]
        queries: PathBuf,
        /// Comma-separated k values (default 0.1,0.2,...,1.0).
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<f64>>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        tcm: f64,
        #[arg(long, default_value_t = 1.0)]
        max_walk_factor: f64,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API over a snapshot.
    Serve {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Allowed CORS origin ("*" for any).
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Local snapshot directory.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Base URL of a running service.
    #[arg(long)]
    server: Option<String>,
}

#[derive(Debug, Args)]
struct WalkArgs {
    #[arg(long, default_value_t = WalkConfig::default().k)]
    k: f64,
    #[arg(long, default_value_t = WalkConfig::default().t_cm)]
    tcm: f64,
    /// Random when omitted; always echoed in the output.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = WalkConfig::default().max_walk_factor)]
    max_walk_factor: f64,
}

#[derive(Debug)]
struct CliError {
    kind: String,
    message: String,
}

impl From<linkcluster_core::Error> for CliError {
    fn from(e: linkcluster_core::Error) -> Self {
        CliError {
            kind: e.kind().to_owned(),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError {
            kind: if e.kind() == io::ErrorKind::BrokenPipe {
                "broken_pipe".into()
            } else {
                "io".into()
            },
            message: e.to_string(),
        }
    }
}

impl From<linkcluster_client::ClientError> for CliError {
    fn from(e: linkcluster_client::ClientError) -> Self {
        let kind = match &e {
            linkcluster_client::ClientError::Api { kind, .. } => kind.clone(),
            _ => "remote".into(),
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError {
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    Ok(tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error[argument]: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // Downstream closed the pipe (`| head`); nothing left to report.
        Err(e) if e.kind == "broken_pipe" => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind, e.message);
            ExitCode::from(
                if matches!(e.kind.as_str(), "argument" | "parse" | "domain") {
                    2
                } else {
                    1
                },
            )
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match command {
        Command::Ingest {
            edges,
            corpus,
            out: dir,
            nodes,
        } => {
            let snapshot = Snapshot::ingest(&edges, &corpus, nodes)?;
            snapshot.write(&dir)?;
            let m = &snapshot.manifest;
            writeln!(
                out,
                "ingested {} nodes, {} edges ({} dropped), {} documents, {} terms\nchecksum {}",
                m.node_count, m.edge_count, m.dropped_edges, m.doc_count, m.term_count, m.checksum
            )?;
        }
        Command::Gen {
            nodes,
            beta_in,
            beta_out,
            xmin,
            dangling,
            vocab_size,
            link_affinity,
            seed,
            out: dir,
        } => {
            let params = SynthParams {
                nodes,
                beta_in,
                beta_out,
                x_min: xmin,
                dangling,
                vocab_size,
                link_affinity,
                ..SynthParams::default()
            };
            let (graph, docs) = synth::generate(&params, seed)?;
            fs::create_dir_all(&dir).map_err(io_at(&dir))?;
            let edges_path = dir.join(EDGES_FILE);
            let mut w = BufWriter::new(fs::File::create(&edges_path).map_err(io_at(&edges_path))?);
            graph.write_edge_list(&mut w).map_err(io_at(&edges_path))?;
            w.flush().map_err(io_at(&edges_path))?;
            let corpus_path = dir.join(CORPUS_FILE);
            let mut w =
                BufWriter::new(fs::File::create(&corpus_path).map_err(io_at(&corpus_path))?);
            write_corpus(&mut w, &docs).map_err(io_at(&corpus_path))?;
            w.flush().map_err(io_at(&corpus_path))?;
            writeln!(
                out,
                "generated {} nodes, {} edges, {} documents in {}",
                graph.node_count(),
                graph.edge_count(),
                docs.len(),
                dir.display()
            )?;
        }
        Command::Fit {
            snapshot,
            q,
            mode,
            xmin,
            estimator,
            csv,
        } => {
            let snapshot = Snapshot::load(&snapshot)?;
            let stats = search::stats(&snapshot, q.as_deref(), mode, xmin, estimator)?;
            write_fit(&mut out, &stats, csv)?;
        }
        Command::Cluster {
            source,
            q,
            walk,
            limit,
            json,
        } => {
            let seed = walk
                .seed
                .unwrap_or_else(|| rand::random_range(0..(1u64 << 53)));
            let params = SearchParams {
                k: walk.k,
                tcm: walk.tcm,
                seed,
                max_walk_factor: walk.max_walk_factor,
            };
            let body: Vec<u8> = match (source.snapshot, source.server) {
                (Some(dir), _) => {
                    let snapshot = Snapshot::load(&dir)?;
                    let resp = search::search(&snapshot, &q, &params, limit)?;
                    serde_json::to_vec(&resp).map_err(io::Error::from)?
                }
                (None, Some(url)) => {
                    let req = SearchRequest {
                        q: q.clone(),
                        k: Some(params.k),
                        tcm: Some(params.tcm),
                        seed: Some(params.seed),
                        max_walk_factor: Some(params.max_walk_factor),
                        limit: Some(limit),
                    };
                    runtime()?.block_on(Client::new(url).search_raw(&req))?
                }
                (None, None) => unreachable!("clap enforces a source"),
            };
            if json {
                out.write_all(&body)?;
                writeln!(out)?;
            } else {
                let resp: SearchResponse =
                    serde_json::from_slice(&body).map_err(io::Error::from)?;
                write_cluster_report(&mut out, &resp)?;
            }
        }
        Command::Sweep {
            snapshot,
            queries,
            k_list,
            trials,
            seed,
            tcm,
            max_walk_factor,
            out: out_path,
        } => {
            let snapshot = Snapshot::load(&snapshot)?;
            let text = fs::read_to_string(&queries).map_err(io_at(&queries))?;
            let queries: Vec<String> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_owned)
                .collect();
            let ks = k_list.unwrap_or_else(search::default_k_values);
            let base = WalkConfig {
                t_cm: tcm,
                max_walk_factor,
                ..WalkConfig::default()
            };
            let rows = search::sweep_k(&snapshot, &queries, &ks, trials, seed, &base)?;
            match out_path {
                Some(path) => {
                    let mut w = BufWriter::new(fs::File::create(&path).map_err(io_at(&path))?);
                    write_sweep_csv(&mut w, &rows).map_err(io_at(&path))?;
                    w.flush().map_err(io_at(&path))?;
                    writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
                }
                None => write_sweep_csv(&mut out, &rows)?,
            }
        }
        Command::Serve {
            snapshot,
            bind,
            cors_origin,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .with_writer(io::stderr)
                .init();
            runtime()?
                .block_on(linkcluster_server::serve_snapshot(
                    &snapshot,
                    bind,
                    cors_origin.as_deref(),
                ))
                .map_err(|e| CliError {
                    kind: match &e {
                        linkcluster_server::ServeError::Snapshot(inner) => inner.kind().to_owned(),
                        _ => "serve".into(),
                    },
                    message: e.to_string(),
                })?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_fit<W: Write>(out: &mut W, stats: &StatsResponse, csv: bool) -> io::Result<()> {
    let scope = match &stats.query {
        Some(q) => format!("query:{q}"),
        None => "full graph".to_owned(),
    };
    let sep = if csv { "," } else { "\t" };
    writeln!(
        out,
        "{}",
        ["scope", "median", "mean", "beta_hat", "std_error", "n"].join(sep)
    )?;
    let num = |v: Option<f64>, prec: usize| match v {
        Some(v) => format!("{v:.prec$}"),
        None => "-".to_owned(),
    };
    match &stats.fit {
        Some(fit) => writeln!(
            out,
            "{}",
            [
                scope,
                num(stats.median, 2),
                num(stats.mean, 2),
                format!("{:.6}", fit.beta_hat),
                format!("{:.9}", fit.std_error),
                fit.n_samples.to_string(),
            ]
            .join(sep)
        )?,
        None => {
            writeln!(
                out,
                "{}",
                [
                    scope,
                    num(stats.median, 2),
                    num(stats.mean, 2),
                    "-".into(),
                    "-".into(),
                    "0".into()
                ]
                .join(sep)
            )?;
            let reason = if stats.node_count == 0 {
                "query matched no documents".to_owned()
            } else {
                stats.reason.clone().unwrap_or_default()
            };
            writeln!(out, "no samples: {reason}")?;
        }
    }
    writeln!(
        out,
        "# mode={} xmin={} estimator={} nodes={} edges={}",
        stats.mode,
        stats.fit.map_or(0, |f| f.x_min),
        stats.estimator,
        stats.node_count,
        stats.edge_count
    )?;
    Ok(())
}

fn write_cluster_report<W: Write>(out: &mut W, resp: &SearchResponse) -> io::Result<()> {
    let mut report = resp.coverage_report.clone();
    report.query = Some(resp.query.clone());
    writeln!(out, "{TABLE_HEADER}")?;
    writeln!(out, "{}", report.table_row())?;
    let p = &resp.params;
    writeln!(
        out,
        "# k={} tcm={} seed={} max_walk_factor={}",
        p.k, p.tcm, p.seed, p.max_walk_factor
    )?;
    for c in &resp.clusters {
        writeln!(
            out,
            "cluster {}\tsize={}\tpivot={}\t{}",
            c.id, c.size, c.pivot_doc.id, c.pivot_doc.url
        )?;
        for d in &c.docs {
            writeln!(out, "  {}\t{}", d.id, d.url)?;
        }
    }
    writeln!(out, "unassigned\tsize={}", resp.unassigned.size)?;
    for d in &resp.unassigned.docs {
        writeln!(out, "  {}\t{}", d.id, d.url)?;
    }
    Ok(())
}
