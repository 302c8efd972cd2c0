//! Command-line front end: every computation of the library, emitted as
//! deterministic CSV/JSON suitable for external plotting.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use modefisher::estimation::{run_study, ExperimentConfig};
use modefisher::fisher::{
    cumulative_fisher, fisher_scan, mode_amplitudes, per_mode_fisher, plane_wave_fisher,
    plane_wave_fisher_printed, quantum_fisher, PlaneWaveChannel,
};
use modefisher::modes::{build_adapted_modes, build_hermite_gauss_modes_on, ModeSet};
use modefisher::numerics::Grid;
use modefisher::psf::{
    default_gaussian_grid, default_sinc_grid, load_amplitude_csv, make_gaussian_psf,
    make_sampled_psf, make_sinc_psf, PsfModel,
};

#[derive(Parser)]
#[command(
    name = "modefisher",
    version,
    about = "Fisher information and mode-sorting measurements for two-point separation estimation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct PsfArgs {
    /// PSF selector: `gaussian`, `sinc`, or `file:PATH` with `x,amplitude`
    /// CSV samples.
    #[arg(long, default_value = "sinc")]
    psf: String,
    /// Intensity standard deviation of the Gaussian PSF.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    sigma: f64,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s_min: f64,
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    s_max: f64,
    #[arg(long, default_value_t = 151)]
    s_steps: usize,
}

#[derive(Args)]
struct OutArgs {
    /// Output file (written atomically); standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quantum Fisher information of the PSF (independent of separation).
    Qfi {
        #[command(flatten)]
        psf: PsfArgs,
    },
    /// Export PSF-adapted measurement modes sampled in position space.
    Modes {
        #[command(flatten)]
        psf: PsfArgs,
        #[arg(long, default_value_t = 6)]
        n_modes: usize,
        /// Keep every k-th grid sample in the export.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Scan every Fisher quantity over a separation grid.
    Fisher {
        #[command(flatten)]
        psf: PsfArgs,
        #[arg(long, default_value_t = 10)]
        n_modes: usize,
        /// Mode budget for the cumulative column.
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cumulative mode-sorting information over a separation grid.
    Cumulative {
        #[command(flatten)]
        psf: PsfArgs,
        #[arg(long, default_value_t = 40)]
        n_modes: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fisher information of the Fourier sine/cosine quadrature channels of
    /// the sinc PSF.
    Planewave {
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a Monte Carlo estimation study from a TOML/JSON configuration.
    Simulate {
        /// Configuration file mirroring the experiment schema.
        #[arg(long)]
        config: PathBuf,
        /// Override the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination (JSON); standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional per-trial estimates CSV.
        #[arg(long)]
        estimates: Option<PathBuf>,
    },
    /// Data behind the adapted-sinc mode profiles figure.
    Figure1 {
        #[arg(long, default_value_t = 4)]
        n_modes: usize,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Data behind the cumulative-information figure: information captured
    /// by the first D projections, adapted basis vs Hermite-Gauss.
    Figure2 {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 100)]
        depth: usize,
        #[arg(long, default_value_t = std::f64::consts::PI, allow_negative_numbers = true)]
        hg_sigma: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Data behind the plane-wave channel figure: sine/cosine quadrature
    /// information versus separation.
    Figure3 {
        #[command(flatten)]
        scan: ScanArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

enum AppError {
    Usage(String),
    Failure(anyhow::Error),
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Failure(e)
    }
}

impl From<modefisher::Error> for AppError {
    fn from(e: modefisher::Error) -> Self {
        AppError::Failure(e.into())
    }
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(|v| format!("{v:.11e}")).collect();
                    s.push_str(&line.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let obj = serde_json::json!({
                    "columns": self.columns,
                    "rows": self.rows,
                });
                let mut s = serde_json::to_string_pretty(&obj).expect("static schema");
                s.push('\n');
                s
            }
        }
    }
}

fn write_atomic(path: &Path, content: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(content.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

fn emit(out: &OutArgs, table: &Table) -> anyhow::Result<()> {
    let content = table.render(out.format);
    match &out.out {
        Some(path) => write_atomic(path, &content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn build_psf(args: &PsfArgs) -> Result<PsfModel, AppError> {
    match args.psf.as_str() {
        "gaussian" => {
            if !(args.sigma.is_finite() && args.sigma > 0.0) {
                return Err(usage(format!("--sigma must be positive, got {}", args.sigma)));
            }
            let grid = default_gaussian_grid(args.sigma)?;
            Ok(make_gaussian_psf(args.sigma, &grid)?)
        }
        "sinc" => Ok(make_sinc_psf(&default_sinc_grid()?)?),
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                let (grid, amps) = load_amplitude_csv(path)?;
                Ok(make_sampled_psf(&grid, &amps)?)
            } else {
                Err(usage(format!(
                    "--psf must be 'gaussian', 'sinc' or 'file:PATH', got '{other}'"
                )))
            }
        }
    }
}

fn separation_grid(scan: &ScanArgs) -> Result<Vec<f64>, AppError> {
    if !(scan.s_min.is_finite() && scan.s_max.is_finite() && scan.s_min >= 0.0) {
        return Err(usage("--s-min must be finite and nonnegative"));
    }
    if scan.s_max <= scan.s_min {
        return Err(usage("--s-max must exceed --s-min"));
    }
    if scan.s_steps < 2 {
        return Err(usage("--s-steps must be at least 2"));
    }
    let h = (scan.s_max - scan.s_min) / (scan.s_steps - 1) as f64;
    Ok((0..scan.s_steps)
        .map(|i| scan.s_min + h * i as f64)
        .collect())
}

fn mode_table(psf: &PsfModel, modes: &ModeSet, stride: usize) -> Table {
    let mut columns = vec!["x".to_string()];
    columns.extend((0..modes.len()).map(|n| format!("phi_{n}")));
    let rows = (0..psf.grid().len())
        .step_by(stride)
        .map(|j| {
            let mut row = vec![psf.grid().point(j)];
            row.extend((0..modes.len()).map(|n| modes.mode_x(n)[j]));
            row
        })
        .collect();
    Table { columns, rows }
}

fn check_positive(name: &str, v: usize) -> Result<(), AppError> {
    if v == 0 {
        return Err(usage(format!("--{name} must be positive")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.cmd {
        Cmd::Qfi { psf } => {
            let model = build_psf(&psf)?;
            println!("{:.6}", quantum_fisher(&model));
            Ok(())
        }
        Cmd::Modes {
            psf,
            n_modes,
            stride,
            out,
        } => {
            check_positive("n-modes", n_modes)?;
            check_positive("stride", stride)?;
            let model = build_psf(&psf)?;
            let modes = build_adapted_modes(&model, n_modes)?;
            emit(&out, &mode_table(&model, &modes, stride))?;
            Ok(())
        }
        Cmd::Fisher {
            psf,
            n_modes,
            depth,
            scan,
            out,
        } => {
            check_positive("n-modes", n_modes)?;
            if depth > n_modes {
                return Err(usage("--depth cannot exceed --n-modes"));
            }
            let model = build_psf(&psf)?;
            let modes = build_adapted_modes(&model, n_modes)?;
            let seps = separation_grid(&scan)?;
            let curve = fisher_scan(&model, &modes, &seps)?;
            let mut columns = vec![
                "s".to_string(),
                "F_direct".to_string(),
                "F_quantum".to_string(),
            ];
            columns.extend((0..n_modes).map(|n| format!("F_mode_{n}")));
            columns.push("cumulative_D".to_string());
            columns.push("tail".to_string());
            let rows = (0..seps.len())
                .map(|i| {
                    let mut row = vec![seps[i], curve.direct[i], curve.quantum];
                    row.extend(curve.per_mode[i].iter().copied());
                    row.push(curve.cumulative[i][depth]);
                    row.push(curve.tail[i]);
                    row
                })
                .collect();
            emit(&out, &Table { columns, rows })?;
            Ok(())
        }
        Cmd::Cumulative {
            psf,
            n_modes,
            depth,
            scan,
            out,
        } => {
            check_positive("n-modes", n_modes)?;
            if depth > n_modes {
                return Err(usage("--depth cannot exceed --n-modes"));
            }
            let model = build_psf(&psf)?;
            let modes = build_adapted_modes(&model, n_modes)?;
            let seps = separation_grid(&scan)?;
            let table = mode_amplitudes(&model, &modes, &seps)?;
            let fm = per_mode_fisher(&table);
            let quantum = quantum_fisher(&model);
            let rows = (0..seps.len())
                .map(|i| {
                    let c = cumulative_fisher(&fm[i], depth);
                    vec![seps[i], c, quantum, c / quantum, table.tail(i, depth)]
                })
                .collect();
            emit(
                &out,
                &Table {
                    columns: ["s", "cumulative_D", "F_quantum", "fraction", "tail"]
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                    rows,
                },
            )?;
            Ok(())
        }
        Cmd::Planewave { scan, out } => {
            let model = make_sinc_psf(&default_sinc_grid()?)?;
            let seps = separation_grid(&scan)?;
            let rows = seps
                .iter()
                .map(|&s| -> Result<Vec<f64>, modefisher::Error> {
                    let sine = plane_wave_fisher(&model, s, PlaneWaveChannel::Sine)?;
                    let cosine = plane_wave_fisher(&model, s, PlaneWaveChannel::Cosine)?;
                    let printed = plane_wave_fisher_printed(&model, s)?;
                    Ok(vec![s, sine, cosine, sine + cosine, printed])
                })
                .collect::<Result<Vec<_>, _>>()?;
            emit(
                &out,
                &Table {
                    columns: ["s", "F_sine", "F_cosine", "F_total", "F_sine_as_printed"]
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                    rows,
                },
            )?;
            Ok(())
        }
        Cmd::Simulate {
            config,
            seed,
            out,
            estimates,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: ExperimentConfig = if config
                .extension()
                .map(|e| e.eq_ignore_ascii_case("json"))
                .unwrap_or(false)
            {
                serde_json::from_str(&text)
                    .map_err(|e| usage(format!("invalid JSON config: {e}")))?
            } else {
                toml::from_str(&text).map_err(|e| usage(format!("invalid TOML config: {e}")))?
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = run_study(&cfg)?;
            let mut json =
                serde_json::to_string_pretty(&report).context("serializing report")?;
            json.push('\n');
            match &out {
                Some(path) => write_atomic(path, &json)?,
                None => print!("{json}"),
            }
            if let Some(path) = &estimates {
                let mut csv = String::from("trial,estimate,boundary_flag\n");
                for (i, (e, b)) in report
                    .estimates
                    .iter()
                    .zip(&report.boundary_flags)
                    .enumerate()
                {
                    csv.push_str(&format!("{i},{e:.11e},{}\n", u8::from(*b)));
                }
                write_atomic(path, &csv)?;
            }
            Ok(())
        }
        Cmd::Figure1 {
            n_modes,
            stride,
            out,
        } => {
            check_positive("n-modes", n_modes)?;
            check_positive("stride", stride)?;
            let model = make_sinc_psf(&default_sinc_grid()?)?;
            let modes = build_adapted_modes(&model, n_modes)?;
            emit(&out, &mode_table(&model, &modes, stride))?;
            Ok(())
        }
        Cmd::Figure2 {
            s,
            depth,
            hg_sigma,
            out,
        } => {
            if !(s.is_finite() && s >= 0.0) {
                return Err(usage("--s must be finite and nonnegative"));
            }
            check_positive("depth", depth)?;
            if !(hg_sigma.is_finite() && hg_sigma > 0.0) {
                return Err(usage("--hg-sigma must be positive"));
            }
            let model = make_sinc_psf(&default_sinc_grid()?)?;
            let quantum = quantum_fisher(&model);
            // The adapted basis converges long before the polynomial
            // stability cap; beyond 40 modes the contributions at s <= 15
            // are below double precision.
            let adapted_count = depth.min(40);
            let adapted = build_adapted_modes(&model, adapted_count)?;
            let fm_adapted =
                per_mode_fisher(&mode_amplitudes(&model, &adapted, &[s])?)[0].clone();
            // Wide position grid: high Hermite-Gauss modes extend far beyond
            // the PSF's own window.
            let hg_grid = Grid::new(163.84, 1 << 14)?;
            let hg = build_hermite_gauss_modes_on(hg_sigma, depth, &hg_grid, model.p_grid())?;
            let fm_hg = per_mode_fisher(&mode_amplitudes(&model, &hg, &[s])?)[0].clone();
            let rows = (0..=depth)
                .map(|d| {
                    vec![
                        d as f64,
                        cumulative_fisher(&fm_adapted, d.min(adapted_count)),
                        cumulative_fisher(&fm_hg, d),
                        quantum,
                    ]
                })
                .collect();
            emit(
                &out,
                &Table {
                    columns: ["D", "adapted", "hermite_gauss", "F_quantum"]
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                    rows,
                },
            )?;
            Ok(())
        }
        Cmd::Figure3 { scan, out } => run(Cli {
            cmd: Cmd::Planewave { scan, out },
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("MODEFISHER_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: MODEFISHER_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Failure(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
