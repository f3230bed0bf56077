use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

use aeriq::campaign::{
    analyze_links, append_iq, load_config, parse_gps_log, read_iq, run_pipeline, speed_from_gps,
    to_enu, write_iq, AnalyticsOptions, CaptureMeta, Enu, GeoOrigin, IqFormat, TrajectoryPoint,
};
use aeriq::impair::{ImpairmentSpec, MultipathTap};
use aeriq::propagation::{link_geometry, AntennaPattern, PathLossModelKind, PathLossSample};
use aeriq::waveform::{map_frame, ofdm_modulate, CellIdentity, OfdmParams};

#[derive(Parser)]
#[command(
    name = "aeriq",
    version,
    about = "LTE air-to-ground IQ toolkit: synthesize, impair, and analyze measurement campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a complete campaign: duty-cycled IQ capture, GPS log,
    /// and a ready-to-run pipeline config.
    Generate(GenerateArgs),
    /// Apply channel impairments (delay, multipath, CFO, AWGN) to a
    /// capture file.
    Impair(ImpairArgs),
    /// Run the capture-to-analytics pipeline described by a config file.
    Analyze(AnalyzeArgs),
    /// Fit propagation analytics from a per-frame CSV produced by
    /// `analyze`.
    Fit(FitArgs),
    /// Convert a GPS log to tower-relative ENU coordinates with speeds.
    Traj(TrajArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Sc16,
    Cf32,
}

impl From<FormatArg> for IqFormat {
    fn from(f: FormatArg) -> IqFormat {
        match f {
            FormatArg::Sc16 => IqFormat::Sc16,
            FormatArg::Cf32 => IqFormat::Cf32,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    TwoRay,
    FreeSpace,
}

#[derive(Args)]
struct GenerateArgs {
    /// Campaign directory to create.
    #[arg(long)]
    out: PathBuf,
    /// Number of 100 ms capture cycles (one frame each).
    #[arg(long, default_value_t = 10)]
    frames: usize,
    /// Physical cell identity; random when omitted.
    #[arg(long)]
    pci: Option<u16>,
    /// Carrier frequency offset in subcarrier spacings.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    cfo: f64,
    /// Per-segment AWGN level; omit for a noiseless capture.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Cf32)]
    format: FormatArg,
    /// Receiver altitude above the tower base.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    alt_m: f64,
    /// Horizontal speed of the synthetic flight.
    #[arg(long, default_value_t = 10.0)]
    speed_m_s: f64,
    /// Horizontal distance from the tower at the first frame.
    #[arg(long, default_value_t = 150.0, allow_negative_numbers = true)]
    start_east_m: f64,
}

#[derive(Args)]
struct ImpairArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Carrier frequency offset in subcarrier spacings.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    cfo: f64,
    /// Integer sample delay prepended to the stream.
    #[arg(long, default_value_t = 0)]
    delay: usize,
    /// Extra multipath taps as `delay:re:im`, comma separated.
    #[arg(long, value_delimiter = ',')]
    taps: Vec<String>,
    /// AWGN level; omit to leave the capture noiseless.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Pipeline config; falls back to the AERIQ_CONFIG environment
    /// variable when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Per-frame CSV written by `analyze`.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::TwoRay)]
    model: ModelArg,
    #[arg(long, default_value_t = 15.0)]
    permittivity: f64,
    #[arg(long, default_value_t = 10.0)]
    tower_height_m: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tower_alt_m: f64,
    #[arg(long, allow_negative_numbers = true)]
    tower_lat: f64,
    #[arg(long, allow_negative_numbers = true)]
    tower_lon: f64,
    #[arg(long, default_value_t = 3.51e9)]
    carrier_freq_hz: f64,
    #[arg(long)]
    tx_pattern: Option<PathBuf>,
    #[arg(long)]
    rx_pattern: Option<PathBuf>,
    /// Distance bin width for the shadowing correlation curve.
    #[arg(long, default_value_t = 5.0)]
    bin_m: f64,
}

#[derive(Args)]
struct TrajArgs {
    /// GPS log CSV with header `timestamp,lat,lon,alt`.
    #[arg(long)]
    gps: PathBuf,
    /// Tower latitude; defaults to the first GPS point.
    #[arg(long, allow_negative_numbers = true)]
    tower_lat: Option<f64>,
    /// Tower longitude; defaults to the first GPS point.
    #[arg(long, allow_negative_numbers = true)]
    tower_lon: Option<f64>,
    /// Tower base altitude; defaults to the first GPS point.
    #[arg(long, allow_negative_numbers = true)]
    tower_alt: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Impair(args) => impair(args),
        Command::Analyze(args) => analyze(args),
        Command::Fit(args) => fit(args),
        Command::Traj(args) => traj(args),
    }
}

const TOWER_LAT_DEG: f64 = 35.7275;
const TOWER_LON_DEG: f64 = -78.6962;
const START_TIME_UNIX: f64 = 1_700_000_000.0;
const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Inverse of the equirectangular ENU mapping used by the pipeline.
fn enu_to_lat_lon(east_m: f64, north_m: f64) -> (f64, f64) {
    let lat = TOWER_LAT_DEG + (north_m / EARTH_RADIUS_M).to_degrees();
    let lon = TOWER_LON_DEG
        + (east_m / (EARTH_RADIUS_M * TOWER_LAT_DEG.to_radians().cos())).to_degrees();
    (lat, lon)
}

fn generate(args: GenerateArgs) -> Result<()> {
    if args.frames == 0 {
        bail!("--frames must be at least 1");
    }
    let params = OfdmParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let pci = match args.pci {
        Some(pci) => pci,
        None => rng.gen_range(0..504),
    };
    let cell = CellIdentity::from_pci(pci).context("invalid PCI")?;
    let frame = ofdm_modulate(&map_frame(&cell, &params)?, &params)?;
    let frame_len = params.frame_len();
    let seg_len = 2 * frame_len;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let format: IqFormat = args.format.into();
    let capture_name = format!("campaign.{}", format.extension());
    let capture = args.out.join(&capture_name);
    let meta = CaptureMeta {
        sample_rate_hz: params.sample_rate_hz(),
        center_freq_hz: 3.51e9,
        format,
        start_time_unix: START_TIME_UNIX,
    };

    // Each stored record is the first 20 ms of one 100 ms cycle: two
    // tiled frame copies with a random boundary offset, then impairments.
    for k in 0..args.frames {
        let delay = rng.gen_range(0..params.half_frame_len());
        let spec = ImpairmentSpec {
            cfo: args.cfo,
            delay_samples: delay,
            taps: Vec::new(),
            snr_db: args.snr_db.unwrap_or(f64::INFINITY),
            seed: rng.gen(),
        };
        let mut samples = Vec::with_capacity(seg_len);
        while samples.len() < seg_len {
            samples.extend_from_slice(&frame.samples);
        }
        samples.truncate(seg_len);
        let base = aeriq::IqSegment::new(samples, params.sample_rate_hz());
        let mut impaired = spec.apply(&base, &params)?;
        impaired.samples.truncate(seg_len);
        if k == 0 {
            write_iq(&capture, &meta, &impaired.samples)?;
        } else {
            append_iq(&capture, &meta, &impaired.samples)?;
        }
    }

    // Straight east-bound flight at constant speed, logged at 1 Hz with
    // padding so every frame timestamp interpolates.
    let duration_s = args.frames as f64 * 0.1;
    let mut gps = String::from("timestamp,lat,lon,alt\n");
    let mut t = -2.0;
    while t <= duration_s + 2.0 {
        let east = args.start_east_m + args.speed_m_s * t;
        let (lat, lon) = enu_to_lat_lon(east, 25.0);
        gps.push_str(&format!(
            "{},{lat},{lon},{}\n",
            START_TIME_UNIX + t,
            args.alt_m
        ));
        t += 1.0;
    }
    std::fs::write(args.out.join("gps.csv"), gps)?;

    let config = format!(
        r#"captures = ["{capture_name}"]
gps_log = "gps.csv"
layout = "presegmented"
output_dir = "out"

[tower]
lat_deg = {TOWER_LAT_DEG}
lon_deg = {TOWER_LON_DEG}
alt_m = 0.0
"#
    );
    std::fs::write(args.out.join("config.toml"), config)?;

    println!(
        "{}",
        serde_json::json!({
            "capture": capture.display().to_string(),
            "config": args.out.join("config.toml").display().to_string(),
            "frames": args.frames,
            "pci": pci,
        })
    );
    Ok(())
}

fn parse_tap(text: &str) -> Result<MultipathTap> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("tap {text:?} is not of the form delay:re:im");
    }
    let delay: usize = parts[0].parse().context("tap delay")?;
    let re: f64 = parts[1].parse().context("tap re")?;
    let im: f64 = parts[2].parse().context("tap im")?;
    Ok(MultipathTap::new(delay, Complex64::new(re, im)))
}

fn impair(args: ImpairArgs) -> Result<()> {
    let (meta, samples) = read_iq(&args.input)?;
    let params = OfdmParams::default();
    let spec = ImpairmentSpec {
        cfo: args.cfo,
        delay_samples: args.delay,
        taps: args
            .taps
            .iter()
            .map(|t| parse_tap(t))
            .collect::<Result<Vec<_>>>()?,
        snr_db: args.snr_db.unwrap_or(f64::INFINITY),
        seed: args.seed,
    };
    let base = aeriq::IqSegment {
        samples,
        sample_rate_hz: meta.sample_rate_hz,
        center_freq_hz: meta.center_freq_hz,
        start_time_s: meta.start_time_unix,
    };
    let impaired = spec.apply(&base, &params)?;
    write_iq(&args.output, &meta, &impaired.samples)?;
    println!(
        "{}",
        serde_json::json!({
            "output": args.output.display().to_string(),
            "samples": impaired.samples.len(),
        })
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let loaded = load_config(args.config.as_deref())?;
    let report = run_pipeline(&loaded)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn load_pattern(path: &Option<PathBuf>) -> Result<AntennaPattern> {
    Ok(match path {
        Some(p) => AntennaPattern::from_csv(p)?,
        None => AntennaPattern::isotropic(),
    })
}

fn fit(args: FitArgs) -> Result<()> {
    let mut reader = csv::Reader::from_path(&args.frames)
        .with_context(|| format!("cannot open {}", args.frames.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no column {name:?}", args.frames.display()))
    };
    let rsrp_col = column("rsrp_dbm")?;
    let lat_col = column("lat")?;
    let lon_col = column("lon")?;
    let alt_col = column("alt")?;

    let origin = GeoOrigin {
        lat_deg: args.tower_lat,
        lon_deg: args.tower_lon,
        alt_m: args.tower_alt_m,
    };
    let mut samples = Vec::new();
    let mut positions = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.get(lat_col).map_or(true, str::is_empty) {
            continue;
        }
        let field = |idx: usize, name: &str| -> Result<f64> {
            record
                .get(idx)
                .with_context(|| format!("row missing {name}"))?
                .parse::<f64>()
                .with_context(|| format!("bad {name}"))
        };
        let point = TrajectoryPoint {
            timestamp_s: 0.0,
            lat_deg: field(lat_col, "lat")?,
            lon_deg: field(lon_col, "lon")?,
            alt_m: field(alt_col, "alt")?,
        };
        let enu = to_enu(&point, &origin);
        if enu.up_m <= 0.0 {
            continue;
        }
        let geometry = link_geometry(enu.horizontal_distance_m(), args.tower_height_m, enu.up_m)?;
        samples.push(PathLossSample {
            geometry,
            rsrp_dbm: field(rsrp_col, "rsrp_dbm")?,
        });
        positions.push(enu);
    }

    let options = AnalyticsOptions {
        carrier_freq_hz: args.carrier_freq_hz,
        tx_pattern: load_pattern(&args.tx_pattern)?,
        rx_pattern: load_pattern(&args.rx_pattern)?,
        relative_permittivity: args.permittivity,
        model: match args.model {
            ModelArg::TwoRay => PathLossModelKind::TwoRay,
            ModelArg::FreeSpace => PathLossModelKind::FreeSpace,
        },
        correlation_bin_m: args.bin_m,
    };
    let report = analyze_links(&samples, &positions, &options);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn traj(args: TrajArgs) -> Result<()> {
    let points = parse_gps_log(&args.gps)?;
    if points.is_empty() {
        bail!("{} contains no points", args.gps.display());
    }
    let origin = GeoOrigin {
        lat_deg: args.tower_lat.unwrap_or(points[0].lat_deg),
        lon_deg: args.tower_lon.unwrap_or(points[0].lon_deg),
        alt_m: args.tower_alt.unwrap_or(points[0].alt_m),
    };
    let speeds = speed_from_gps(&points)?;
    println!("timestamp,east_m,north_m,up_m,speed_m_s");
    for (point, (_, speed)) in points.iter().zip(&speeds) {
        let Enu {
            east_m,
            north_m,
            up_m,
        } = to_enu(point, &origin);
        println!("{},{east_m},{north_m},{up_m},{speed}", point.timestamp_s);
    }
    Ok(())
}
