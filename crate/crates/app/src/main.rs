use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use holo_core::diffraction::{PlanCache, PropagatorRegistry, ASM, BLDSF};
use holo_core::dump;
use holo_core::field::{amplitude, phase, DisplayMode, Grid, OpticalParams, RealImage};
use holo_core::focus::{best_focus, focus_sweep, sweep_distances};
use holo_core::ingest::read_grayscale;
use holo_core::pipeline::{OutputKind, ReconstructionParams, Reconstructor};
use holo_core::sim::{add_sensor_noise, generate_hologram, ObjectSpec};
use holoscope::bench::{run_bench, BenchConfig};
use holoscope::config::AppConfig;
use holoscope::server::{bind, serve_on, Service};
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "holoscope",
    version,
    about = "Live inline hologram reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct one hologram at a given focus distance.
    Reconstruct(ReconstructArgs),
    /// Reconstruct over a range of distances and score sharpness.
    Sweep(SweepArgs),
    /// Compare method throughput on a synthetic hologram.
    Bench(BenchArgs),
    /// Write a synthetic hologram.
    Simulate(SimulateArgs),
    /// Run the streaming service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Hologram image (PNG, PGM) or dump (RIMG, CFLD).
    #[arg(long)]
    input: PathBuf,
    /// Sensor pixel pitch in meters. Dumps carry their own.
    #[arg(long)]
    pitch: f64,
    #[arg(long, default_value_t = 650e-9)]
    wavelength: f64,
    #[arg(long, default_value = BLDSF, value_parser = [ASM, BLDSF])]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    zoom: f64,
}

fn output_path(s: &str) -> Result<PathBuf, String> {
    let path = PathBuf::from(s);
    match path.extension().and_then(|e| e.to_str()) {
        Some("png" | "rimg") => Ok(path),
        _ => Err("output must end in .png or .rimg".into()),
    }
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("outputs").required(true).multiple(true))]
struct ReconstructArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Focus distance in meters, positive in front of the sensor.
    #[arg(long, default_value_t = 0.011, allow_negative_numbers = true)]
    z: f64,
    /// Display-mapped PNG, or RIMG with raw values and the output pitch.
    #[arg(long, group = "outputs", value_parser = output_path)]
    out_amp: Option<PathBuf>,
    #[arg(long, group = "outputs", value_parser = output_path)]
    out_phase: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, allow_negative_numbers = true)]
    z_start: f64,
    #[arg(long, allow_negative_numbers = true)]
    z_end: f64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    steps: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1920)]
    width: usize,
    #[arg(long, default_value_t = 1440)]
    height: usize,
    #[arg(long, default_value_t = 5)]
    frames: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [ASM.to_string(), BLDSF.to_string()])]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    zoom: f64,
    #[arg(long, default_value_t = 650e-9)]
    wavelength: f64,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("object_source").required(true))]
struct SimulateArgs {
    /// Object spec file (TOML).
    #[arg(long, group = "object_source")]
    object: Option<PathBuf>,
    /// Opaque disk radius in meters, centered.
    #[arg(long, group = "object_source")]
    disk_radius: Option<f64>,
    /// Object-to-sensor distance in meters.
    #[arg(long, default_value_t = 0.011)]
    distance: f64,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 2.5e-6)]
    pitch: f64,
    #[arg(long, default_value_t = 650e-9)]
    wavelength: f64,
    /// Standard deviation of additive intensity noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// RIMG keeps exact intensities; PNG is 16-bit, scaled to the maximum.
    #[arg(long, value_parser = output_path)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the port in the config file.
    #[arg(long)]
    port: Option<u16>,
}

fn is_rimg(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "rimg")
}

fn write_png8(path: &Path, width: usize, height: usize, pixels: Vec<u8>) -> Result<()> {
    let img = image::GrayImage::from_raw(width as u32, height as u32, pixels)
        .context("image size mismatch")?;
    img.save(path)
        .with_context(|| format!("writing {}", path.display()))
}

/// Writes raw values as a dump, or the display mapping as 8-bit PNG.
fn write_output(path: &Path, values: &RealImage, mode: DisplayMode) -> Result<()> {
    if is_rimg(path) {
        dump::save_image(path, values).with_context(|| format!("writing {}", path.display()))
    } else {
        let mapped = holo_core::field::to_display(values, mode);
        write_png8(path, values.width(), values.height(), mapped.to_u8())
    }
}

fn load_frame(args: &InputArgs) -> Result<holo_core::sim::HologramFrame> {
    let optics = OpticalParams::new(args.wavelength)?;
    let image = read_grayscale(&args.input, args.pitch)
        .with_context(|| format!("reading {}", args.input.display()))?;
    Ok(holo_core::sim::HologramFrame::new(image, None, optics)?)
}

fn checked_params(z: f64, args: &InputArgs, output: OutputKind) -> Result<ReconstructionParams> {
    let clamped =
        ReconstructionParams::from_focus_distance(z, args.zoom, &args.method, output).clamped()?;
    for note in &clamped.adjustments {
        eprintln!("warning: {note}");
    }
    Ok(clamped.params)
}

fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let frame = load_frame(&args.input)?;
    let output = match (&args.out_amp, &args.out_phase) {
        (Some(_), Some(_)) => OutputKind::Both,
        (None, Some(_)) => OutputKind::Phase,
        _ => OutputKind::Amplitude,
    };
    let params = checked_params(args.z, &args.input, output)?;
    let start = Instant::now();
    let rec = Reconstructor::default().reconstruct(&frame, &params)?;
    let elapsed = start.elapsed();
    if let Some(path) = &args.out_amp {
        write_output(path, &amplitude(&rec.field), DisplayMode::Amplitude)?;
    }
    if let Some(path) = &args.out_phase {
        write_output(path, &phase(&rec.field), DisplayMode::Phase)?;
    }
    let grid = rec.field.grid();
    println!(
        "method {}  z {} m  magnification {}  {}x{}  output pitch {:.6e} m  time {:.1} ms",
        rec.params.method,
        rec.params.focus_distance(),
        rec.params.magnification,
        grid.width,
        grid.height,
        grid.pitch_x,
        elapsed.as_secs_f64() * 1e3
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let distances = sweep_distances(args.z_start, args.z_end, args.steps as usize)?;
    let frame = load_frame(&args.input)?;
    fs::create_dir_all(&args.out_dir)?;
    let cache = PlanCache::new(Arc::new(PropagatorRegistry::builtin()));
    let points = focus_sweep(
        &frame,
        &distances,
        &args.input.method,
        args.input.zoom,
        &cache,
    )?;
    let best = best_focus(&points).context("empty sweep")?;
    let reconstructor = Reconstructor::with_cache(cache);
    let mut report = String::from("# z_m  normalized_variance\n");
    for (k, point) in points.iter().enumerate() {
        let params = checked_params(point.distance, &args.input, OutputKind::Amplitude)?;
        let rec = reconstructor.reconstruct(&frame, &params)?;
        let path = args.out_dir.join(format!("amp_{k:03}.png"));
        write_output(&path, &amplitude(&rec.field), DisplayMode::Amplitude)?;
        let mark = if point.distance == best.distance {
            "  <- max"
        } else {
            ""
        };
        report.push_str(&format!(
            "{:.6e}  {:.6e}{mark}\n",
            point.distance, point.score
        ));
    }
    fs::write(args.out_dir.join("report.txt"), report)?;
    println!(
        "best focus {:.6e} m over {} steps",
        best.distance,
        points.len()
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let config = BenchConfig {
        width: args.width,
        height: args.height,
        frames: args.frames,
        methods: args.methods,
        seed: args.seed,
        magnification: args.zoom,
        wavelength: args.wavelength,
    };
    for line in run_bench(&config)?.to_json_lines() {
        println!("{line}");
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let spec = match (&args.object, args.disk_radius) {
        (Some(path), _) => {
            ObjectSpec::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        (None, Some(radius)) => ObjectSpec::opaque_disk(radius),
        (None, None) => unreachable!("clap requires one object source"),
    };
    let grid = Grid::new(args.width, args.height, args.pitch, args.pitch)?;
    let optics = OpticalParams::new(args.wavelength)?;
    let mut frame = generate_hologram(&spec, args.distance, grid, optics)?;
    if args.noise > 0.0 {
        frame = add_sensor_noise(&frame, args.noise, args.seed)?;
    }
    if is_rimg(&args.out) {
        dump::save_image(&args.out, &frame.image)?;
    } else {
        let max = frame.image.values().iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            bail!("hologram is black");
        }
        let pixels = frame
            .image
            .values()
            .iter()
            .map(|v| (v / max * 65535.0).round() as u16)
            .collect();
        let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(
            args.width as u32,
            args.height as u32,
            pixels,
        )
        .context("image size mismatch")?;
        img.save(&args.out)
            .with_context(|| format!("writing {}", args.out.display()))?;
    }
    println!(
        "wrote {} ({}x{}, z {} m)",
        args.out.display(),
        args.width,
        args.height,
        args.distance
    );
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let mut config = AppConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(port) = args.port {
        config.port = port;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = bind(&config)
            .await
            .with_context(|| format!("binding port {}", config.port))?;
        let service = Service::start(&config)?;
        log::info!("listening on {}", listener.local_addr()?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        serve_on(listener, &service, shutdown).await?;
        service.shutdown();
        Ok(())
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reconstruct(args) => reconstruct(args),
        Command::Sweep(args) => {
            if args.z_start == args.z_end {
                Cli::command()
                    .error(
                        ErrorKind::ValueValidation,
                        "--z-start and --z-end must differ",
                    )
                    .exit();
            }
            sweep(args)
        }
        Command::Bench(args) => bench(args),
        Command::Simulate(args) => simulate(args),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
