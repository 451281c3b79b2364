//! Subcommand implementations. Each takes a resolved [`RunConfig`], writes its
//! artifacts and returns what should go to stdout.

use std::fs;
use std::path::{Path, PathBuf};

use gradnoise::harness::{
    load_idx, synth_blobs, train_and_probe, Activation, Dataset, ProbeConfig, ProbeSampling, TrainConfig,
};
use gradnoise::projection::{decode_noise, sas_sanity_sweep, write_noise, SweepConfig, NOISE_MAGIC};
use gradnoise::tail_index::{default_block_len, estimate_alpha, TailIndexEstimate};
use gradnoise::univariate::{anderson_darling, shapiro_wilk_at, UnivariateTestResult};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::figure::{FigureSpec, Series};

pub const SANITY_CSV: &str = "sanity_sas.csv";
pub const SANITY_SVG: &str = "sanity_sas.svg";
pub const REPORT_CSV: &str = "report.csv";
pub const TRACE_CSV: &str = "trace.csv";
pub const AGGREGATES_SVG: &str = "aggregates.svg";
pub const LOSS_SVG: &str = "loss_accuracy.svg";
pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED_CONFIG: &str = "config.resolved";

#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: Option<String>,
    pub files: Vec<PathBuf>,
}

/// Runs `f` on a dedicated pool when `threads > 0`.
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build a {threads}-thread pool: {e}")))?
        .install(f)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Figure(format!("CSV serialization failed: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Figure(format!("CSV serialization failed: {e}")))
}

#[derive(Debug, Serialize)]
struct SanityRow {
    alpha: f64,
    sw_mean_p: f64,
    ad_accept_frac: f64,
    baseline_sw_mean_p: f64,
    baseline_ad_accept_frac: f64,
    n_degenerate: usize,
}

/// `sanity-sas`: battery on i.i.d. SαS noise over a grid of α.
///
/// Writes `sanity_sas.csv` (alpha, sw_mean_p, ad_accept_frac,
/// baseline_sw_mean_p, baseline_ad_accept_frac, n_degenerate) and
/// `sanity_sas.svg`.
pub fn sanity_sas(cfg: &RunConfig) -> Result<Outcome> {
    let sweep = SweepConfig {
        alphas: cfg.list("alphas")?,
        rows: cfg.positive("rows")?,
        dim: cfg.positive("dim")?,
        directions: cfg.positive("directions")?,
        level: cfg.level("level")?,
        seed: cfg.parse("seed")?,
    };
    if sweep.alphas.is_empty() {
        return Err(CliError::Config("`alphas` must list at least one value".into()));
    }
    let threads: usize = cfg.parse("threads")?;
    let out = PathBuf::from(cfg.str("output_dir"));
    let results = with_threads(threads, || sas_sanity_sweep(&sweep).map_err(CliError::from_core))?;

    let rows: Vec<SanityRow> = results
        .iter()
        .map(|(alpha, r)| SanityRow {
            alpha: *alpha,
            sw_mean_p: r.sw_mean_p,
            ad_accept_frac: r.ad_accept_frac,
            baseline_sw_mean_p: r.baseline_sw_mean_p,
            baseline_ad_accept_frac: r.baseline_ad_accept_frac,
            n_degenerate: r.n_degenerate,
        })
        .collect();
    create_dir(&out)?;
    let csv_path = out.join(SANITY_CSV);
    write_file(&csv_path, csv_bytes(&rows)?)?;
    write_file(&out.join(RESOLVED_CONFIG), cfg.to_kv_text())?;

    let svg_path = out.join(SANITY_SVG);
    let col = |f: fn(&SanityRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    FigureSpec::new(
        "Gaussianity tests on SαS noise",
        "α",
        "aggregate",
        col(|r| r.alpha),
        svg_path.clone(),
    )
    .with_series(Series::new("SW mean p", col(|r| r.sw_mean_p)))
    .with_series(Series::new("AD accept frac", col(|r| r.ad_accept_frac)))
    .with_series(Series::new("baseline SW mean p", col(|r| r.baseline_sw_mean_p)).dashed())
    .with_series(Series::new("baseline AD accept frac", col(|r| r.baseline_ad_accept_frac)).dashed())
    .write()?;
    Ok(Outcome { stdout: None, files: vec![csv_path, out.join(RESOLVED_CONFIG), svg_path] })
}

#[derive(Debug, Clone, Serialize)]
struct ReportRow {
    iteration: u64,
    sw_mean_p: f64,
    ad_accept_frac: f64,
    baseline_sw_mean_p: f64,
    baseline_ad_accept_frac: f64,
    n_degenerate: usize,
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    iteration: u64,
    train_loss: f64,
    train_accuracy: f64,
    test_loss: Option<f64>,
    test_accuracy: Option<f64>,
}

fn load_idx_pair(images: &Path, labels: &Path) -> Result<Dataset> {
    load_idx(images, labels).map_err(|e| match e {
        gradnoise::Error::Io(source) => {
            let path = if images.exists() { labels } else { images };
            CliError::io(path, source)
        }
        other => CliError::from_core_data(other),
    })
}

fn subset(data: &Dataset, range: std::ops::Range<usize>) -> Result<Dataset> {
    let inputs = range.clone().flat_map(|i| data.input(i).iter().copied()).collect();
    let labels = data.labels()[range].to_vec();
    Dataset::new(inputs, labels, data.dim(), data.classes()).map_err(CliError::from_core)
}

fn load_datasets(cfg: &RunConfig) -> Result<(Dataset, Option<Dataset>)> {
    match cfg.str("dataset") {
        "blobs" => {
            let n = cfg.positive("blobs_n")?;
            let n_test: usize = cfg.parse("blobs_test_n")?;
            let all = synth_blobs(
                n + n_test,
                cfg.positive("blobs_dim")?,
                cfg.positive("blobs_classes")?,
                cfg.f64("blobs_spread")?,
                cfg.parse("data_seed")?,
            )?;
            let test = (n_test > 0).then(|| subset(&all, n..n + n_test)).transpose()?;
            Ok((subset(&all, 0..n)?, test))
        }
        "idx" => {
            let train = load_idx_pair(&cfg.required_path("train_images")?, &cfg.required_path("train_labels")?)?;
            let max: usize = cfg.parse("max_examples")?;
            let train = if max > 0 { train.truncate(max) } else { train };
            let test = match (cfg.path("test_images"), cfg.path("test_labels")) {
                (Some(img), Some(lbl)) => Some(load_idx_pair(&img, &lbl)?),
                (None, None) => None,
                _ => return Err(CliError::Config("`test_images` and `test_labels` must be given together".into())),
            };
            if let Some(t) = &test {
                if t.dim() != train.dim() {
                    return Err(CliError::Data(format!(
                        "test inputs have dimension {}, training inputs {}",
                        t.dim(),
                        train.dim()
                    )));
                }
                if t.classes() > train.classes() {
                    return Err(CliError::Data(format!(
                        "test labels reach class {} but training covers {} classes",
                        t.classes() - 1,
                        train.classes()
                    )));
                }
            }
            Ok((train, test))
        }
        other => Err(CliError::Config(format!("`dataset` must be blobs or idx, got `{other}`"))),
    }
}

/// `train-probe`: SGD on an MLP with the SGN battery at every checkpoint.
///
/// Writes `report.csv` (iteration, sw_mean_p, ad_accept_frac,
/// baseline_sw_mean_p, baseline_ad_accept_frac, n_degenerate), `trace.csv`
/// (iteration, train_loss, train_accuracy, test_loss, test_accuracy),
/// `config.resolved`, `manifest.json`, the two charts and, when `save_noise`
/// is set, one `sgn_iter{t}.bin` per checkpoint.
pub fn train_probe(cfg: &RunConfig) -> Result<Outcome> {
    let activation: Activation = cfg.parse("activation")?;
    let train_cfg = TrainConfig {
        hidden: cfg.list("hidden")?,
        activation,
        batch_size: cfg.positive("batch_size")?,
        learning_rate: cfg.f64("learning_rate")?,
        iterations: cfg.parse("iterations")?,
        checkpoint_every: cfg.parse("checkpoint_every")?,
        sgn_minibatches: cfg.positive("sgn_minibatches")?,
        seed: cfg.parse("seed")?,
    };
    if train_cfg.hidden.contains(&0) {
        return Err(CliError::Config("`hidden` widths must be at least 1".into()));
    }
    let probe = ProbeConfig {
        directions: cfg.positive("directions")?,
        level: cfg.level("level")?,
        sampling: if cfg.bool("full_batch_probe")? { ProbeSampling::FullBatch } else { ProbeSampling::WithReplacement },
    };
    let save_noise = cfg.bool("save_noise")?;
    let threads: usize = cfg.parse("threads")?;
    let out = PathBuf::from(cfg.str("output_dir"));
    let (train, test) = load_datasets(cfg)?;
    create_dir(&out)?;

    let mut files: Vec<PathBuf> = Vec::new();
    let run = with_threads(threads, || {
        let mut noise_files = Vec::new();
        let run = train_and_probe(&train_cfg, &probe, &train, test.as_ref(), |c, noise| {
            if save_noise {
                let path = out.join(format!("sgn_iter{}.bin", c.iteration));
                let file = fs::File::create(&path).map_err(gradnoise::Error::Io)?;
                write_noise(noise, std::io::BufWriter::new(file))?;
                noise_files.push(path);
            }
            Ok(())
        })
        .map_err(CliError::from_core)?;
        Ok((run, noise_files))
    });
    let (run, noise_files) = run?;
    files.extend(noise_files);

    let reports: Vec<ReportRow> = run
        .checkpoints
        .iter()
        .map(|(c, r)| ReportRow {
            iteration: c.iteration,
            sw_mean_p: r.sw_mean_p,
            ad_accept_frac: r.ad_accept_frac,
            baseline_sw_mean_p: r.baseline_sw_mean_p,
            baseline_ad_accept_frac: r.baseline_ad_accept_frac,
            n_degenerate: r.n_degenerate,
        })
        .collect();
    let trace: Vec<TraceRow> = run
        .checkpoints
        .iter()
        .map(|(c, _)| TraceRow {
            iteration: c.iteration,
            train_loss: c.train.loss,
            train_accuracy: c.train.accuracy,
            test_loss: c.test.map(|t| t.loss),
            test_accuracy: c.test.map(|t| t.accuracy),
        })
        .collect();

    let report_path = out.join(REPORT_CSV);
    let trace_path = out.join(TRACE_CSV);
    write_file(&report_path, csv_bytes(&reports)?)?;
    write_file(&trace_path, csv_bytes(&trace)?)?;
    write_file(&out.join(RESOLVED_CONFIG), cfg.to_kv_text())?;
    files.extend([report_path, trace_path, out.join(RESOLVED_CONFIG), out.join(MANIFEST)]);

    let model_dim = run.checkpoints.first().map(|(c, _)| c.model.dim()).unwrap_or(0);
    let file_names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .chain([AGGREGATES_SVG.to_string(), LOSS_SVG.to_string()])
        .collect();
    let manifest = serde_json::json!({
        "command": "train-probe",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.values(),
        "seeds": {
            "seed": run.config.seed,
            "data_seed": cfg.str("data_seed"),
            "direction_seed": run.direction_seed,
            "baseline_seed": run.baseline_seed,
        },
        "dataset": {
            "kind": cfg.str("dataset"),
            "n_train": train.len(),
            "n_test": test.as_ref().map_or(0, Dataset::len),
            "dim": train.dim(),
            "classes": train.classes(),
        },
        "layer_sizes": run.config.layer_sizes(&train),
        "parameter_dim": model_dim,
        "trace": trace,
        "reports": run.checkpoints.iter().map(|(_, r)| r).collect::<Vec<_>>(),
        "files": file_names,
    });
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out.join(MANIFEST), manifest_text + "\n")?;

    let x: Vec<f64> = reports.iter().map(|r| r.iteration as f64).collect();
    let col = |f: fn(&ReportRow) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    FigureSpec::new("Gaussianity tests on projected SGN", "iteration", "aggregate", x.clone(), out.join(AGGREGATES_SVG))
        .with_series(Series::new("SW mean p", col(|r| r.sw_mean_p)))
        .with_series(Series::new("AD accept frac", col(|r| r.ad_accept_frac)))
        .with_series(Series::new("baseline SW mean p", col(|r| r.baseline_sw_mean_p)).dashed())
        .with_series(Series::new("baseline AD accept frac", col(|r| r.baseline_ad_accept_frac)).dashed())
        .write()?;

    let mut loss_fig = FigureSpec::new("Accuracy and loss", "iteration", "value", x, out.join(LOSS_SVG))
        .with_series(Series::new("train loss", trace.iter().map(|t| t.train_loss).collect()))
        .with_series(Series::new("train accuracy", trace.iter().map(|t| t.train_accuracy).collect()));
    if test.is_some() {
        loss_fig = loss_fig
            .with_series(Series::new("test loss", trace.iter().filter_map(|t| t.test_loss).collect()).dashed())
            .with_series(Series::new("test accuracy", trace.iter().filter_map(|t| t.test_accuracy).collect()).dashed());
    }
    let peak = loss_fig.series.iter().flat_map(|s| s.y.iter().copied()).fold(1.0, f64::max);
    loss_fig.y_range = (0.0, peak.ceil());
    loss_fig.write()?;
    files.extend([out.join(AGGREGATES_SVG), out.join(LOSS_SVG)]);
    Ok(Outcome { stdout: None, files })
}

/// Newline-delimited numbers; blank lines are skipped.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| CliError::Data(format!("line {}: `{line}` is not a number", lineno + 1)))?;
        if !v.is_finite() {
            return Err(CliError::Data(format!("line {}: non-finite value", lineno + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{} is not UTF-8 text", path.display())))?;
    parse_numbers(&text)
}

#[derive(Debug, Serialize)]
struct AlphaOutput {
    input: String,
    format: &'static str,
    #[serde(flatten)]
    estimate: TailIndexEstimate,
}

/// `estimate-alpha`: tail index of a noise matrix file or a list of numbers.
pub fn estimate_alpha_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let input = cfg.required_path("input")?;
    let k1: usize = cfg.parse("k1")?;
    let bytes = fs::read(&input).map_err(|e| CliError::io(&input, e))?;
    let (format, samples) = if bytes.starts_with(NOISE_MAGIC) {
        ("sgnmat", decode_noise(&bytes).map_err(CliError::from_core_data)?.into_data())
    } else {
        let text =
            String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{} is neither SGNMAT01 nor text", input.display())))?;
        ("text", parse_numbers(&text)?)
    };
    let k1 = if k1 == 0 {
        default_block_len(samples.len())
            .ok_or_else(|| CliError::Data(format!("need at least 2 samples, got {}", samples.len())))?
    } else {
        k1
    };
    let estimate = estimate_alpha(&samples, k1).map_err(CliError::from_core)?;
    let json = serde_json::to_string_pretty(&AlphaOutput { input: input.display().to_string(), format, estimate })
        .expect("estimate serializes")
        + "\n";
    match cfg.path("output") {
        Some(path) => {
            write_file(&path, &json)?;
            Ok(Outcome { stdout: None, files: vec![path] })
        }
        None => Ok(Outcome { stdout: Some(json), files: Vec::new() }),
    }
}

#[derive(Debug, Serialize)]
struct Test1dOutput {
    n: usize,
    level: f64,
    shapiro_wilk: UnivariateTestResult,
    anderson_darling: UnivariateTestResult,
}

/// `test-1d`: Shapiro–Wilk and Anderson–Darling on one sample, JSON to stdout.
pub fn test_1d(cfg: &RunConfig) -> Result<Outcome> {
    let level = cfg.level("level")?;
    let samples = read_numbers(&cfg.required_path("input")?)?;
    let sw = shapiro_wilk_at(&samples, level.alpha()).map_err(CliError::from_core_data)?;
    let ad = anderson_darling(&samples, level).map_err(CliError::from_core_data)?;
    let out = Test1dOutput { n: samples.len(), level: level.alpha(), shapiro_wilk: sw, anderson_darling: ad };
    Ok(Outcome { stdout: Some(serde_json::to_string_pretty(&out).expect("result serializes") + "\n"), files: Vec::new() })
}
