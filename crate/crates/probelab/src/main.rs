use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use probelab::output::{
    self, scatter_svg, summary_csv, summary_markdown, summary_rows, write_json,
};
use probelab::{config, load_dataset, resolve_data, run_parallel, save_dataset, worker_count};
use probelab_core::cluster::{cluster_pair_averages, HdbscanParams, KMeansParams};
use probelab_core::norm::{absorb_lone_noise, contrast_diffs, normalize_grouped, pair_average};
use probelab_core::probes::pca_top_k;
use probelab_core::synth::generate_synthetic;
use probelab_core::{ClusterAssignment, ClusterParams, ContrastPairSet, NormStats, Scale};

#[derive(Parser)]
#[command(
    name = "probelab",
    version,
    about = "Cluster-normalized unsupervised probing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    Burns,
    Cluster,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    PerDimension,
    Isotropic,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::PerDimension => Scale::PerDimension,
            ScaleArg::Isotropic => Scale::Isotropic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Hdbscan,
    Kmeans,
}

#[derive(clap::Args)]
struct NormArgs {
    #[arg(long, value_enum)]
    norm: Norm,
    #[arg(long, value_enum, default_value = "per-dimension")]
    scale: ScaleArg,
    /// HDBSCAN minimum cluster size (cluster normalization).
    #[arg(long, default_value_t = 5)]
    min_cluster_size: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run repeated probe fits and write a report.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-fit accuracy CSVs.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Record wall-clock time in the report (makes it non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Project normalized contrast differences onto their top three
    /// principal components.
    Pca {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        norm: NormArgs,
        #[arg(long)]
        out: PathBuf,
        /// Metadata key whose values shade the points.
        #[arg(long)]
        shade_key: Option<String>,
        /// Label key used for point colour.
        #[arg(long, default_value = "label")]
        label_key: String,
    },
    /// Compare reports in a markdown (.md) or CSV (.csv) table.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster pair averages and write the assignment as JSON.
    Cluster {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "hdbscan")]
        method: Method,
        #[arg(long, default_value_t = 5)]
        min_cluster_size: usize,
        #[arg(long)]
        min_samples: Option<usize>,
        /// Number of clusters (k-means).
        #[arg(long)]
        k: Option<usize>,
        /// Seed (k-means).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Normalize a dataset and write it with its statistics.
    Normalize {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        norm: NormArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn normalize(
    set: &ContrastPairSet,
    args: &NormArgs,
) -> Result<(ContrastPairSet, NormStats, Option<ClusterAssignment>)> {
    let scale = args.scale.into();
    Ok(match args.norm {
        Norm::Burns => {
            let (out, stats) = normalize_grouped(set, &vec![0; set.n()], scale)?;
            (out, stats, None)
        }
        Norm::Cluster => {
            let params = ClusterParams::Hdbscan(HdbscanParams {
                min_cluster_size: args.min_cluster_size,
                ..HdbscanParams::default()
            });
            let assignment = cluster_pair_averages(set, &params)?;
            let groups = absorb_lone_noise(&pair_average(set), &assignment.labels);
            let (out, stats) = normalize_grouped(set, &groups, scale)?;
            (out, stats, Some(assignment))
        }
    })
}

fn cmd_synth(config: &Path, out: &Path) -> Result<()> {
    let cfg = config::load_synth(config)?;
    let data = generate_synthetic(&cfg)?;
    save_dataset(&data.set, out)?;
    let back = load_dataset(out)?;
    ensure!(
        back.n() == cfg.n && back.d() == cfg.d,
        "written dataset failed validation"
    );
    println!("wrote {} pairs (d = {}) to {}", cfg.n, cfg.d, out.display());
    Ok(())
}

fn cmd_experiment(config: &Path, out: &Path, csv: Option<&Path>, timing: bool) -> Result<()> {
    let cfg = config::load_experiment(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let data = resolve_data(&cfg, base)?;
    let report = run_parallel(&cfg, &data, worker_count(), timing)?;
    write_json(out, &report)?;
    output::read_report(out)?;
    if let Some(dir) = csv {
        output::write_accuracy_csvs(&report, dir)?;
    }
    for m in &report.methods {
        match m.accuracy {
            Some(s) => println!(
                "{:<8} mean {:.4}  std {:.4}  min {:.4}  max {:.4}  failures {}",
                m.method.as_str(),
                s.mean,
                s.std,
                s.min,
                s.max,
                m.failures
            ),
            None => println!("{:<8} all {} fits failed", m.method.as_str(), m.failures),
        }
    }
    Ok(())
}

fn cmd_pca(
    data: &Path,
    norm: &NormArgs,
    out: &Path,
    shade_key: Option<&str>,
    label_key: &str,
) -> Result<()> {
    let set = load_dataset(data)?;
    let labels = set.label_vector(label_key).ok();
    let shade: Option<Vec<String>> = match shade_key {
        Some(key) => {
            let meta = set
                .meta()
                .with_context(|| format!("dataset has no metadata for --shade-key {key}"))?;
            Some(
                meta.iter()
                    .enumerate()
                    .map(|(i, m)| {
                        m.get(key)
                            .cloned()
                            .with_context(|| format!("row {i} has no metadata key {key:?}"))
                    })
                    .collect::<Result<_>>()?,
            )
        }
        None => None,
    };
    let (normalized, _, _) = normalize(&set, norm)?;
    let pca = pca_top_k(&contrast_diffs(&normalized), 3)?;
    let k = pca.components.len();
    ensure!(
        k >= 2,
        "contrast differences have rank {k}; need at least 2 for a scatter"
    );
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut w = csv::Writer::from_path(out.join("projections.csv"))?;
    let mut header = vec!["row".to_string()];
    header.extend((1..=k).map(|c| format!("pc{c}")));
    header.push("label".into());
    header.push("shade".into());
    w.write_record(&header)?;
    for i in 0..set.n() {
        let mut row = vec![i.to_string()];
        row.extend(pca.projections.row(i).iter().map(|v| v.to_string()));
        row.push(
            labels
                .as_ref()
                .map(|l| l[i].to_string())
                .unwrap_or_default(),
        );
        row.push(shade.as_ref().map(|s| s[i].clone()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;

    let column =
        |c: usize| -> Vec<f64> { (0..set.n()).map(|i| pca.projections.get(i, c)).collect() };
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        if b >= k {
            continue;
        }
        let svg = scatter_svg(
            &column(a),
            &column(b),
            labels.as_deref(),
            shade.as_deref(),
            &format!("PC{}", a + 1),
            &format!("PC{}", b + 1),
        );
        let path = out.join(format!("pc{}_pc{}.svg", a + 1, b + 1));
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "wrote {} projections onto {k} components to {}",
        set.n(),
        out.display()
    );
    Ok(())
}

fn cmd_report(reports: &[PathBuf], out: &Path) -> Result<()> {
    let loaded = reports
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or_else(
                || p.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            );
            Ok((name, output::read_report(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = summary_rows(&loaded);
    let text = match out.extension().and_then(|e| e.to_str()) {
        Some("md") => summary_markdown(&rows),
        Some("csv") => summary_csv(&rows)?,
        _ => bail!("--out must end in .md or .csv"),
    };
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))
}

fn cmd_cluster(
    data: &Path,
    out: &Path,
    method: Method,
    min_cluster_size: usize,
    min_samples: Option<usize>,
    k: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let set = load_dataset(data)?;
    let params = match method {
        Method::Hdbscan => ClusterParams::Hdbscan(HdbscanParams {
            min_cluster_size,
            min_samples,
            ..HdbscanParams::default()
        }),
        Method::Kmeans => {
            let k = k.context("--k is required for k-means")?;
            let seed = seed.context("--seed is required for k-means")?;
            ClusterParams::Kmeans(KMeansParams::new(k, seed))
        }
    };
    let assignment = cluster_pair_averages(&set, &params)?;
    write_json(out, &assignment)?;
    println!(
        "{} clusters, sizes {:?}, {} noise points",
        assignment.k,
        assignment.sizes(),
        assignment.noise_count()
    );
    Ok(())
}

fn cmd_normalize(data: &Path, norm: &NormArgs, out: &Path) -> Result<()> {
    let set = load_dataset(data)?;
    let (normalized, stats, _) = normalize(&set, norm)?;
    save_dataset(&normalized, out)?;
    write_json(&out.join("stats.json"), &stats)?;
    println!(
        "wrote {} normalized pairs to {}",
        normalized.n(),
        out.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth { config, out } => cmd_synth(&config, &out),
        Command::Experiment {
            config,
            out,
            csv,
            timing,
        } => cmd_experiment(&config, &out, csv.as_deref(), timing),
        Command::Pca {
            data,
            norm,
            out,
            shade_key,
            label_key,
        } => cmd_pca(&data, &norm, &out, shade_key.as_deref(), &label_key),
        Command::Report { reports, out } => cmd_report(&reports, &out),
        Command::Cluster {
            data,
            out,
            method,
            min_cluster_size,
            min_samples,
            k,
            seed,
        } => cmd_cluster(&data, &out, method, min_cluster_size, min_samples, k, seed),
        Command::Normalize { data, norm, out } => cmd_normalize(&data, &norm, &out),
    }
}
