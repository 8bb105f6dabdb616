//! Command-line front end. Every pipeline stage is one subcommand.

use std::collections::BTreeMap;
use std::io::Write;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::time::Duration;

use auralis_core::ambisonics::DecodeMatrix;
use auralis_core::capture::{
    crop_direct_and_itdg, direct_monitor_compensation, estimate_itdg, generate_ess, generate_session,
    inverse_filter, latency_compensation_delay, load_layout, produce_sirs, save_layout, segment_bounds,
    Deconvolver, PopDetector, Recording, ReflectionGeometry, SessionLayout, SweepSpec, WavRecording,
    SEGMENT_TAIL_S,
};
use auralis_core::engine::{render_offline_files, ChannelMap, EngineConfig};
use auralis_core::interpolation::Interpolator;
use auralis_core::par::Exec;
use auralis_core::sir_model::{
    entry_file_name, load_sirset, save_sirset, write_manifest_for_files, Direction, GridSpec, SirSet,
    MANIFEST_FILE_NAME,
};
use auralis_core::wav::{read_wav, write_wav, SampleFormat};
use auralis_core::{ImpulseResponse, Pose};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::backend::PacedBackend;
use crate::error::{Result, ServiceError};
use crate::osc::{EmitMode, DEFAULT_TRACK_OFFSET};
use crate::serve::{self, ServeConfig, DEFAULT_OSC_PORT, DEFAULT_WS_PORT};

/// Environment variable holding the log filter.
pub const LOG_ENV: &str = "AURALIS_LOG";

#[derive(Debug, Parser)]
#[command(name = "auralis", version, about = "Five-degrees-of-freedom vocal auralization")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// SIR dataset manifest (or the directory holding `manifest.toml`).
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 48_000)]
    pub sr: u32,

    #[arg(long, global = true, default_value_t = 256)]
    pub block: usize,

    #[arg(long, global = true, default_value_t = DEFAULT_OSC_PORT)]
    pub osc_port: u16,

    /// Peer receiving gain messages, `host:port`.
    #[arg(long, global = true)]
    pub osc_out: Option<String>,

    #[arg(long, global = true, default_value_t = DEFAULT_WS_PORT)]
    pub ws_port: u16,

    #[arg(long, global = true, value_enum, default_value_t = Mode::Native)]
    pub mode: Mode,

    /// DAW track number of position 0's first child track.
    #[arg(long, global = true, default_value_t = DEFAULT_TRACK_OFFSET)]
    pub track_offset: usize,

    /// 16-line text file, two columns (left, right) per Ambisonic channel.
    #[arg(long, global = true)]
    pub decode_matrix: Option<PathBuf>,

    /// Dry monitor gain; the monitor path is muted when absent.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub monitor_gain_db: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = ChannelMapArg::Matched)]
    pub channel_map: ChannelMapArg,

    /// Latency-compensation delay in front of every SIR.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub unit_delay_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Native,
    DawCompat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelMapArg {
    Matched,
    MonoDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    F32,
    I24,
}

impl From<FormatArg> for SampleFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::F32 => SampleFormat::Float32,
            FormatArg::I24 => SampleFormat::Int24,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 20.0)]
    pub f_start: f64,
    #[arg(long, default_value_t = 20_000.0)]
    pub f_end: f64,
    #[arg(long, default_value_t = 20.0)]
    pub duration: f64,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub amplitude_db: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 4)]
    pub rows: usize,
    #[arg(long, default_value_t = 5)]
    pub cols: usize,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.rows, self.cols, self.spacing)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an exponential sine sweep and optionally its inverse filter.
    Sweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        inverse: Option<PathBuf>,
    },
    /// Write the mono measurement session track and its layout.
    Session {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        layout: PathBuf,
    },
    /// Cut a session recording at its sync pops into one WAV per measurement.
    Segment {
        #[arg(long)]
        recording: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = -12.0, allow_hyphen_values = true)]
        threshold_db: f64,
    },
    /// Deconvolve a session recording into a SIR dataset.
    Deconvolve {
        #[arg(long)]
        recording: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// SIR length in samples.
        #[arg(long, default_value_t = 24_000)]
        trim: usize,
        #[arg(long, default_value_t = -12.0, allow_hyphen_values = true)]
        threshold_db: f64,
    },
    /// Estimate the ITDG, crop every SIR past it and report the latency delay.
    Crop {
        #[arg(long)]
        out_dir: PathBuf,
        /// ITDG given directly; otherwise computed from the path lengths.
        #[arg(long, conflicts_with_all = ["direct_m", "leg1_m", "leg2_m"])]
        itdg_ms: Option<f64>,
        #[arg(long, requires_all = ["leg1_m", "leg2_m"])]
        direct_m: Option<f64>,
        #[arg(long)]
        leg1_m: Option<f64>,
        #[arg(long)]
        leg2_m: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        round_trip_ms: f64,
    },
    /// Direct-monitor gain from open-ear and occluded recordings.
    Compensation {
        #[arg(long)]
        open_ear: PathBuf,
        #[arg(long)]
        occluded: PathBuf,
    },
    /// Write and validate a manifest for the `sir_PPP_dir.wav` files in a directory.
    Pack {
        #[arg(long)]
        dir: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Print the nonzero gains for a pose.
    Weights {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        yaw: f64,
    },
    /// Render a dry recording along a pose trajectory to a stereo WAV.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        traj: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::F32)]
        format: FormatArg,
    },
    /// Run the real-time service.
    Serve {
        /// Mono input looped into the engine; silence when absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Stop after this many seconds.
        #[arg(long)]
        duration_s: Option<f64>,
    },
}

/// Installs the stderr logger filtered by [`LOG_ENV`].
pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env(LOG_ENV)
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// One-line, machine-parsable error report.
pub fn error_line(e: &ServiceError) -> String {
    let msg = e.to_string().replace('\n', " ");
    format!("error[{}]: {msg}", e.kind())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Sweep { sweep, out: path, inverse } => {
            let spec = sweep_spec(&sweep, g.sr);
            let ess = generate_ess(&spec)?;
            write_wav(&path, spec.sample_rate_hz, ess.channels(), SampleFormat::Float32)?;
            if let Some(inv_path) = inverse {
                let inv = inverse_filter(&spec)?;
                write_wav(&inv_path, spec.sample_rate_hz, &[inv], SampleFormat::Float32)?;
            }
            writeln!(out, "samples={}", ess.len())?;
        }
        Command::Session {
            sweep,
            grid,
            out: path,
            layout,
        } => {
            let spec = sweep_spec(&sweep, g.sr);
            let (track, map) = generate_session(&spec, &grid.grid()?)?;
            write_wav(&path, spec.sample_rate_hz, &[track], SampleFormat::Float32)?;
            save_layout(&map, &layout)?;
            writeln!(out, "measurements={} samples={}", map.len(), map.total_len)?;
        }
        Command::Segment {
            recording,
            layout,
            out_dir,
            threshold_db,
        } => {
            let layout = load_layout(&layout)?;
            let rec = WavRecording::open(&recording)?;
            let bounds = detect_segments(&rec, &layout, threshold_db)?;
            std::fs::create_dir_all(&out_dir)?;
            for (m, b) in layout.measurements.iter().zip(&bounds) {
                let seg = rec.read(b.start, b.len)?;
                let name = format!("segment_{:03}_{}.wav", m.position, m.direction);
                write_wav(out_dir.join(name), rec.sample_rate(), &seg, SampleFormat::Float32)?;
            }
            writeln!(out, "segments={}", bounds.len())?;
        }
        Command::Deconvolve {
            recording,
            layout,
            out_dir,
            trim,
            threshold_db,
        } => {
            let layout = load_layout(&layout)?;
            let rec = WavRecording::open(&recording)?;
            let bounds = detect_segments(&rec, &layout, threshold_db)?;
            let inv = inverse_filter(&layout.sweep)?;
            let max_len = bounds.iter().map(|b| b.len).max().unwrap_or(1);
            let dec = Deconvolver::new(&inv, layout.sample_rate, max_len);
            let irs = produce_sirs(&rec, &bounds, &dec, trim, Exec::Parallel)?;
            let set = SirSet::from_ordered(layout.grid, irs)?;
            let manifest = save_sirset(&set, &out_dir)?;
            writeln!(out, "manifest={}", manifest.display())?;
        }
        Command::Crop {
            out_dir,
            itdg_ms,
            direct_m,
            leg1_m,
            leg2_m,
            round_trip_ms,
        } => {
            let itdg_s = match (itdg_ms, direct_m, leg1_m, leg2_m) {
                (Some(ms), ..) => ms / 1e3,
                (None, Some(d), Some(l1), Some(l2)) => estimate_itdg(&ReflectionGeometry::new(d, l1, l2)?),
                _ => {
                    return Err(ServiceError::Usage(
                        "crop needs --itdg-ms or --direct-m, --leg1-m and --leg2-m".into(),
                    ))
                }
            };
            let delay_s = latency_compensation_delay(itdg_s, round_trip_ms / 1e3)?;
            let set = load_dataset(g)?;
            let cropped: Vec<ImpulseResponse> = set
                .iter()
                .map(|(_, _, ir)| crop_direct_and_itdg(ir, itdg_s))
                .collect::<auralis_core::Result<_>>()?;
            let manifest = save_sirset(&SirSet::from_ordered(*set.grid(), cropped)?, &out_dir)?;
            writeln!(
                out,
                "itdg_ms={:.4} delay_ms={:.4} manifest={}",
                itdg_s * 1e3,
                delay_s * 1e3,
                manifest.display()
            )?;
        }
        Command::Compensation { open_ear, occluded } => {
            let a = read_mono_ir(&open_ear)?;
            let b = read_mono_ir(&occluded)?;
            writeln!(out, "monitor_gain_db={:.4}", direct_monitor_compensation(&a, &b)?)?;
        }
        Command::Pack { dir, grid } => {
            let grid = grid.grid()?;
            let mut files = BTreeMap::new();
            for p in 0..grid.position_count() {
                for d in Direction::ALL {
                    files.insert((p, d), entry_file_name(p, d));
                }
            }
            let path = dir.join(MANIFEST_FILE_NAME);
            write_manifest_for_files(&path, &grid, g.sr, &files)?;
            let set = load_sirset(&path)?;
            writeln!(out, "entries={} manifest={}", set.len(), path.display())?;
        }
        Command::Weights { x, z, yaw } => {
            let grid = match &g.dataset {
                Some(_) => *load_dataset(g)?.grid(),
                None => GridSpec::default(),
            };
            let mut interp = Interpolator::new(grid, engine_config(g)?.activation)?;
            let gm = interp.update(Pose::new(x, z, yaw));
            for (p, d, v) in gm.nonzero() {
                writeln!(out, "{p} {d} {v:.6}")?;
            }
        }
        Command::Render {
            input,
            traj,
            out: path,
            format,
        } => {
            let manifest = dataset_path(g)?;
            render_offline_files(&input, traj.as_deref(), &manifest, &path, &engine_config(g)?, format.into())?;
            writeln!(out, "wrote={}", path.display())?;
        }
        Command::Serve { input, duration_s } => {
            let set = load_dataset(g)?;
            let mut cfg = ServeConfig::new(engine_config(g)?);
            cfg.osc_addr = SocketAddr::from(([0, 0, 0, 0], g.osc_port));
            cfg.ws_addr = SocketAddr::from(([0, 0, 0, 0], g.ws_port));
            cfg.osc_out = g.osc_out.as_deref().map(resolve_peer).transpose()?;
            cfg.emit_mode = match g.mode {
                Mode::Native => EmitMode::Native,
                Mode::DawCompat => EmitMode::DawCompat {
                    track_offset: g.track_offset,
                },
            };
            let samples = match input {
                Some(p) => downmix(read_wav(p)?.channels),
                None => Vec::new(),
            };
            let backend = PacedBackend::new(samples, g.block, g.sr, true);
            let handle = serve::start(&set, cfg, Box::new(backend))?;
            writeln!(out, "osc={} ws={}", handle.osc_addr(), handle.ws_addr())?;
            out.flush()?;
            match duration_s {
                Some(s) => {
                    std::thread::sleep(Duration::from_secs_f64(s.max(0.0)));
                    handle.shutdown();
                }
                None => {
                    handle.wait();
                }
            }
        }
    }
    Ok(())
}

fn sweep_spec(a: &SweepArgs, sr: u32) -> SweepSpec {
    SweepSpec {
        f_start_hz: a.f_start,
        f_end_hz: a.f_end,
        duration_s: a.duration,
        amplitude_dbfs: a.amplitude_db,
        sample_rate_hz: sr,
    }
}

fn detect_segments(
    rec: &WavRecording,
    layout: &SessionLayout,
    threshold_db: f64,
) -> Result<Vec<auralis_core::capture::SegmentBounds>> {
    let pops = PopDetector::with_threshold(threshold_db).detect_recording(rec, 0)?;
    let tail = (SEGMENT_TAIL_S * rec.sample_rate() as f64).round() as usize;
    Ok(segment_bounds(&pops, layout.len(), layout.sweep.len(), tail)?)
}

fn dataset_path(g: &GlobalArgs) -> Result<PathBuf> {
    let path = g
        .dataset
        .clone()
        .ok_or_else(|| ServiceError::Usage("--dataset is required".into()))?;
    Ok(if path.is_dir() {
        path.join(MANIFEST_FILE_NAME)
    } else {
        path
    })
}

fn load_dataset(g: &GlobalArgs) -> Result<SirSet> {
    Ok(load_sirset(dataset_path(g)?)?)
}

fn read_mono_ir(path: &Path) -> Result<ImpulseResponse> {
    let wav = read_wav(path)?;
    Ok(ImpulseResponse::new(wav.sample_rate, wav.channels)?)
}

fn downmix(channels: Vec<Vec<f64>>) -> Vec<f64> {
    let n = channels.len().max(1) as f64;
    let frames = channels.first().map_or(0, Vec::len);
    (0..frames).map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / n).collect()
}

fn resolve_peer(s: &str) -> Result<SocketAddr> {
    s.to_socket_addrs()
        .ok()
        .and_then(|mut it| it.next())
        .ok_or_else(|| ServiceError::Usage(format!("cannot resolve OSC peer `{s}`")))
}

/// Engine configuration from the global flags.
pub fn engine_config(g: &GlobalArgs) -> Result<EngineConfig> {
    let decode = match &g.decode_matrix {
        Some(p) => DecodeMatrix::load(p)?,
        None => DecodeMatrix::default(),
    };
    let cfg = EngineConfig {
        sample_rate: g.sr,
        block_size: g.block,
        monitor_gain_db: g.monitor_gain_db,
        decode,
        channel_map: match g.channel_map {
            ChannelMapArg::Matched => ChannelMap::Matched,
            ChannelMapArg::MonoDirect => ChannelMap::MonoDirect,
        },
        unit_delay_s: g.unit_delay_ms / 1e3,
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Result<String> {
        let cli = Cli::try_parse_from(std::iter::once("auralis").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        run(cli, &mut buf)?;
        Ok(String::from_utf8(buf).unwrap())
    }

    #[test]
    fn weights_on_the_default_grid() {
        let text = run_args(&["weights", "--x", "0.5", "--z", "0.5", "--yaw", "45"]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines.iter().all(|l| l.ends_with(" 0.176777")));
    }

    #[test]
    fn negative_coordinates_parse() {
        let text = run_args(&["weights", "--x", "-1", "--z", "0", "--yaw", "-90"]).unwrap();
        // Clamped to node 0, facing left.
        assert_eq!(text.trim(), "0 left 1.000000");
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        let err = Cli::try_parse_from(["auralis", "frobnicate"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn render_requires_a_dataset() {
        let err = run_args(&["render", "--in", "a.wav", "--out", "b.wav"]).unwrap_err();
        assert_eq!(err.kind(), "usage");
        assert_eq!(error_line(&err), "error[usage]: --dataset is required");
    }

    #[test]
    fn crop_without_geometry() {
        let err = run_args(&["crop", "--out-dir", "x"]).unwrap_err();
        assert_eq!(err.kind(), "usage");
    }

    #[test]
    fn bad_block_size_is_a_config_error() {
        let err = run_args(&["weights", "--x", "0", "--z", "0", "--block", "100"]).unwrap_err();
        assert_eq!(err.kind(), "invalid_config");
    }
}
