use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wsd_core::sim::{
    csv_string, parse_poly, point_seed, run_sweep, Campaign, CodeParams, DecoderKind, SimConfig,
    SnrGrid, SweepOptions, Trials, DEFAULT_LIST_SIZE, DEFAULT_MAX_BLOCKS,
    DEFAULT_TARGET_BLOCK_ERRORS,
};
use wsd_core::{
    build_sphere, enumerate_spectrum, save_sphere, BlockCode, CaPolarCode, CrcSpec, SnrMode,
    WsdConfig, WsdMode,
};

#[derive(Parser)]
#[command(
    name = "wsd",
    version,
    about = "CA-polar list decoding with code-weight sphere refinement"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the weight spectrum of a CA-polar code.
    Spectrum {
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Enumerate the sphere S_r(0) and write it to a cache file.
    BuildSphere {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a BLER / complexity sweep and emit CSV.
    Simulate(SimulateArgs),
    /// Decode a single block and dump the outcome as JSON.
    DecodeOne(DecodeOneArgs),
}

#[derive(Args, Clone)]
struct CodeArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// Generator polynomial, bit i = coefficient of x^i (e.g. 0xE21).
    #[arg(long, default_value = "0xE21", value_parser = poly_arg)]
    crc_poly: u64,
}

fn poly_arg(s: &str) -> Result<u64, String> {
    parse_poly(s).map_err(|e| e.to_string())
}

fn code_from(args: &CodeArgs) -> wsd_core::Result<CaPolarCode> {
    CaPolarCode::new(args.n, args.k, CrcSpec::from_poly(args.crc_poly)?)
}

#[derive(Args)]
struct InlineArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, value_parser = ["scl", "scl_wsd", "mld"], default_value = "scl_wsd")]
    decoder: String,
    #[arg(long, default_value_t = DEFAULT_LIST_SIZE)]
    list_size: usize,
    #[arg(long, default_value_t = 2)]
    radius: usize,
    #[arg(long, default_value_t = 3)]
    max_rounds: usize,
    #[arg(long, value_parser = ["standard", "aom"], default_value = "standard")]
    mode: String,
    #[arg(long, value_parser = ["ebn0", "esn0"], default_value = "ebn0")]
    snr_mode: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sphere cache produced by `build-sphere`; built in memory when absent.
    #[arg(long)]
    sphere: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration; excludes the inline campaign flags.
    #[arg(long, conflicts_with_all = [
        "n", "k", "crc_poly", "decoder", "list_size", "radius", "max_rounds", "mode",
        "snr_mode", "seed", "sphere", "snr_start", "snr_stop", "snr_step", "max_blocks",
        "target_errors",
    ])]
    config: Option<PathBuf>,
    #[command(flatten)]
    inline: InlineArgs,
    #[arg(long, default_value_t = 0.0)]
    snr_start: f64,
    #[arg(long, default_value_t = 4.0)]
    snr_stop: f64,
    #[arg(long, default_value_t = 1.0)]
    snr_step: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_BLOCKS)]
    max_blocks: u64,
    #[arg(long, default_value_t = DEFAULT_TARGET_BLOCK_ERRORS)]
    target_errors: u64,
    /// Write CSV here (plus a JSON sidecar); stdout otherwise.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct DecodeOneArgs {
    #[command(flatten)]
    inline: InlineArgs,
    #[arg(long, allow_hyphen_values = true)]
    snr: f64,
    /// Trial index within the point's random streams.
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

impl InlineArgs {
    fn to_config(&self, grid: Vec<f64>, trials: Trials) -> wsd_core::Result<SimConfig> {
        let decoder: DecoderKind = self.decoder.parse()?;
        let wsd = match decoder {
            DecoderKind::SclWsd => Some(WsdConfig::new(
                self.radius,
                self.max_rounds,
                self.mode.parse::<WsdMode>()?,
            )?),
            _ => None,
        };
        let cfg = SimConfig {
            code: CodeParams {
                n: self.code.n,
                k: self.code.k,
                crc_poly: self.code.crc_poly,
            },
            decoder,
            list_size: self.list_size,
            wsd,
            snr: SnrGrid {
                mode: self.snr_mode.parse::<SnrMode>()?,
                grid,
            },
            trials,
            seed: self.seed,
            sphere_cache_path: self.sphere.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> wsd_core::Result<()> {
    match cli.cmd {
        Cmd::Spectrum { code } => {
            let code = code_from(&code)?;
            let spec = enumerate_spectrum(&code)?;
            println!(
                "# N={} K={} fingerprint={}",
                code.n(),
                code.k(),
                code.fingerprint()
            );
            // Shell 0 is the all-zero codeword; sphere_size counts shells 1..=r.
            println!("r,weight,count,sphere_size");
            for (r, (w, c)) in spec.iter().enumerate() {
                println!("{r},{w},{c},{}", spec.sphere_cardinality(r));
            }
        }
        Cmd::BuildSphere { code, radius, out } => {
            let code = code_from(&code)?;
            let sphere = build_sphere(&code, radius)?;
            save_sphere(&sphere, &out)?;
            eprintln!(
                "wrote {} members (weights {:?}) to {}",
                sphere.member_count(),
                sphere.weights_included(),
                out.display()
            );
        }
        Cmd::Simulate(args) => {
            let cfg = match &args.config {
                Some(path) => SimConfig::load(path)?,
                None => {
                    let grid = SnrGrid::range(
                        SnrMode::EbN0,
                        args.snr_start,
                        args.snr_stop,
                        args.snr_step,
                    )?
                    .grid;
                    let trials = Trials {
                        max_blocks: args.max_blocks,
                        target_block_errors: args.target_errors,
                    };
                    args.inline.to_config(grid, trials)?
                }
            };
            let opts = SweepOptions {
                threads: args.threads,
                csv_out: args.csv_out.clone(),
            };
            let points = run_sweep(&cfg, &opts)?;
            if args.csv_out.is_none() {
                print!("{}", csv_string(&cfg, &points)?);
            }
        }
        Cmd::DecodeOne(args) => {
            let cfg = args.inline.to_config(
                vec![args.snr],
                Trials {
                    max_blocks: 1,
                    target_block_errors: 1,
                },
            )?;
            let camp = Campaign::new(cfg)?;
            let noise = camp.noise(args.snr)?;
            let seed = point_seed(camp.config().seed, 0);
            let (message, y, out) = camp.run_trial(&noise, seed, args.trial)?;
            let dump = json!({
                "snr_db": args.snr,
                "sigma": noise.sigma(),
                "trial": args.trial,
                "sent_message": message.to_string(),
                "block_error": out.message != message,
                "received": y.as_slice(),
                "outcome": out,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&dump).expect("serializable")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
