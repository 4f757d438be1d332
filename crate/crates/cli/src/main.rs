use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pas_tcm::analysis::{
    crc_bit_pmf_symbolwise, frame_pmf_from_amplitudes, sign_asymmetry, signal_pmf, StatePmf,
    TransitionMatrices,
};
use pas_tcm::bounds::{rcu_bound, RcuConfig};
use pas_tcm::crc::CrcSpec;
use pas_tcm::modulation::snr_to_sigma;
use pas_tcm::harness::{crc_search, frame_rng, random_message, simulate_fer, FerRecord, SystemConfig};
use pas_tcm::shaping::{DistributionMatcher, Matcher};
use pas_tcm::tbcc::{build_trellis, shipped_code, ConvCodeSpec};
use pas_tcm::Bit;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Shaped 8-AM over CRC-aided tail-biting TCM: encoder, list decoder,
/// exact distribution analysis and RCU bound.
#[derive(Parser)]
#[command(name = "pas-tcm", version)]
struct Cli {
    /// TOML system configuration. Defaults to k = 87, n = 64, nu = 5 and the
    /// degree-6 CRC 0x43.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode messages and print one JSON record per message.
    Encode {
        /// Message as a string of k characters 0/1.
        #[arg(long, conflicts_with = "random")]
        bits: Option<String>,
        /// Number of random messages.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decode received sequences, one JSON record per frame.
    Decode {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
        format: InputFormat,
        /// Operating point that sets sigma in the metric.
        #[arg(long)]
        snr_db: f64,
    },
    /// Monte Carlo FER over the configured SNR points; CSV to stdout.
    Simulate {
        /// Overrides the configured SNR list.
        #[arg(long, value_delimiter = ',')]
        snr_db: Vec<f64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        min_errors: Option<usize>,
        #[arg(long)]
        max_frames: Option<usize>,
        /// JSON run metadata.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Exact state, label and CRC-bit distributions as JSON.
    Analyze {
        #[arg(long, default_value_t = 64)]
        steps: usize,
    },
    /// RCU bound over SNR points; CSV to stdout.
    Rcu {
        #[arg(long, value_delimiter = ',', required = true)]
        snr_db: Vec<f64>,
        /// Lattice step in bits.
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        #[arg(long, default_value_t = 200_000)]
        max_samples: usize,
        #[arg(long, default_value_t = 0.05)]
        rel_stderr: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Matcher statistics as JSON.
    DmStats,
    /// Rank every CRC polynomial of a degree on common random numbers.
    CrcSearch {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        snr_db: f64,
        /// Frames per candidate.
        #[arg(long, default_value_t = 10_000)]
        frames: usize,
    },
    /// Trellis edge list as CSV, or the label-to-signal table.
    TrellisDump {
        /// Shipped code memory instead of the configured code.
        #[arg(long)]
        nu: Option<usize>,
        #[arg(long)]
        labels: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// One frame per line, comma separated.
    Csv,
    /// Little-endian f64, T values per frame.
    F64le,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Encode { bits, random, seed } => encode(&cfg, bits, random, seed),
        Command::Decode {
            input,
            format,
            snr_db,
        } => decode(&cfg, &input, format, snr_db),
        Command::Simulate {
            snr_db,
            workers,
            seed,
            min_errors,
            max_frames,
            meta,
        } => {
            let mut cfg = cfg;
            if !snr_db.is_empty() {
                cfg.snr_db = snr_db;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(e) = min_errors {
                cfg.stopping.min_errors = e;
            }
            if let Some(f) = max_frames {
                cfg.stopping.max_frames = f;
            }
            simulate(&cfg, meta.as_deref())
        }
        Command::Analyze { steps } => analyze(&cfg, steps),
        Command::Rcu {
            snr_db,
            step,
            max_samples,
            rel_stderr,
            seed,
            meta,
        } => rcu(&cfg, &snr_db, step, max_samples, rel_stderr, seed, meta.as_deref()),
        Command::DmStats => dm_stats(&cfg),
        Command::CrcSearch {
            degree,
            snr_db,
            frames,
        } => search(&cfg, degree, snr_db, frames),
        Command::TrellisDump { nu, labels } => trellis_dump(&cfg, nu, labels),
    }
}

fn load_config(path: Option<&Path>) -> Result<SystemConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(SystemConfig::from_toml(&text)?)
        }
        None => {
            let code = shipped_code(5).context("shipped code")?.spec;
            Ok(SystemConfig::reference_system(&code, &CrcSpec::new(6, 0x43)?))
        }
    }
}

fn config_hash(cfg: &SystemConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

fn bit_string(bits: &[Bit]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Result<Vec<Bit>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("message must contain only 0 and 1, found {c:?}"),
        })
        .collect()
}

fn encode(cfg: &SystemConfig, bits: Option<String>, random: Option<usize>, seed: u64) -> Result<()> {
    let system = cfg.build()?;
    let k = system.message_bits();
    let messages: Vec<Vec<Bit>> = match (bits, random) {
        (Some(b), _) => vec![parse_bits(&b)?],
        (None, Some(count)) => (0..count as u64)
            .map(|i| random_message(&mut frame_rng(seed, u64::MAX, i), k))
            .collect(),
        (None, None) => bail!("give --bits or --random"),
    };
    let mut out = std::io::stdout().lock();
    for msg in messages {
        if msg.len() != k {
            bail!("message has {} bits, the matcher takes {k}", msg.len());
        }
        let tx = system.chain.transmit(&msg)?;
        let record = json!({
            "message": bit_string(&msg),
            "amplitudes": tx.amplitudes,
            "word": bit_string(&tx.word),
            "frames": tx.frames,
            "labels": tx.labels,
            "start_state": tx.start_state,
            "signals": tx.signals,
        });
        writeln!(out, "{record}")?;
    }
    Ok(())
}

fn read_frames(path: &Path, format: InputFormat, t: usize) -> Result<Vec<Vec<f64>>> {
    match format {
        InputFormat::Csv => {
            let text = std::fs::read_to_string(path)?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    l.split(',')
                        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad value {v:?}")))
                        .collect()
                })
                .collect()
        }
        InputFormat::F64le => {
            let raw = std::fs::read(path)?;
            if raw.len() % (8 * t) != 0 {
                bail!("{} bytes is not a whole number of {t}-symbol frames", raw.len());
            }
            Ok(raw
                .chunks_exact(8 * t)
                .map(|frame| {
                    frame
                        .chunks_exact(8)
                        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                        .collect()
                })
                .collect())
        }
    }
}

fn decode(cfg: &SystemConfig, input: &Path, format: InputFormat, snr_db: f64) -> Result<()> {
    let system = cfg.build()?;
    let decoder = system.decoder(system.sigma(snr_db))?;
    let frames = read_frames(input, format, system.chain.frames())?;
    let mut out = std::io::stdout().lock();
    for (i, y) in frames.iter().enumerate() {
        let record = match decoder.decode(y) {
            Ok(d) => json!({
                "frame": i,
                "status": "success",
                "rank": d.candidate.rank,
                "metric": d.candidate.metric,
                "message": bit_string(&d.message),
            }),
            Err(e) => json!({ "frame": i, "status": "failure", "reason": e.to_string() }),
        };
        writeln!(out, "{record}")?;
    }
    Ok(())
}

fn run_metadata(cfg: &SystemConfig) -> serde_json::Value {
    json!({
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "version": env!("CARGO_PKG_VERSION"),
        "snr_definition": "SNR = E[X^2] / sigma^2 with E[X^2] the mean transmitted symbol energy (shaped amplitudes on matcher positions, uniform on CRC positions; the RCU ensemble uses its own energy); Es/N0 = SNR - 3.01 dB",
    })
}

fn simulate(cfg: &SystemConfig, meta: Option<&Path>) -> Result<()> {
    if cfg.snr_db.is_empty() {
        bail!("no SNR points: set snr_db in the config or pass --snr-db");
    }
    let system = cfg.build()?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", FerRecord::CSV_HEADER)?;
    let mut records = Vec::new();
    for (i, &snr) in cfg.snr_db.iter().enumerate() {
        let r = simulate_fer(&system, snr, i as u64, &cfg.stopping, cfg.master_seed, cfg.workers)?;
        writeln!(out, "{}", r.csv_row())?;
        out.flush()?;
        records.push(r);
    }
    if let Some(path) = meta {
        let mut m = run_metadata(cfg);
        m["rate_bits_per_symbol"] = json!(system.chain.rate());
        m["records"] = json!(records);
        std::fs::write(path, serde_json::to_string_pretty(&m)?)?;
    }
    Ok(())
}

fn analyze(cfg: &SystemConfig, steps: usize) -> Result<()> {
    let system = cfg.build()?;
    let chain = &system.chain;
    let matcher_dist = &system.prior_dist;
    let frame_pmf = frame_pmf_from_amplitudes(matcher_dist);
    let tm = TransitionMatrices::new(chain.trellis(), &frame_pmf)?;
    let states = chain.trellis().num_states();
    let trajectory = tm.trajectory(&StatePmf::point_mass(states, 0), steps);
    let labels = tm.output_label_pmf(&StatePmf::uniform(states));
    let signals = signal_pmf(&labels, chain.constellation());
    let crc_bits = crc_bit_pmf_symbolwise(chain.crc(), matcher_dist, chain.matcher().output_len());
    let report = json!({
        "config_sha256": config_hash(cfg),
        "frame_pmf": frame_pmf,
        "state_distance_to_uniform": trajectory,
        "eigenvalue_magnitudes": tm.eigenvalue_magnitudes(),
        "label_pmf_uniform_states": labels,
        "signal_pmf": signals.iter().map(|(x, p)| json!({"x": x, "p": p})).collect::<Vec<_>>(),
        "sign_asymmetry": sign_asymmetry(&signals),
        "crc_bits": {
            "p_zero": crc_bits.p_zero,
            "j_even": crc_bits.j_even,
            "j_odd": crc_bits.j_odd,
            "max_bias": crc_bits.max_bias(),
        },
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn rcu(
    cfg: &SystemConfig,
    snr_db: &[f64],
    step: f64,
    max_samples: usize,
    rel_stderr: f64,
    seed: u64,
    meta: Option<&Path>,
) -> Result<()> {
    let system = cfg.build()?;
    let ensemble = system.rcu_ensemble()?;
    let rc = RcuConfig {
        k: system.message_bits(),
        grid_step: step,
        max_samples,
        target_rel_stderr: rel_stderr,
        seed,
        ..RcuConfig::default()
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "snr_db,rcu,stderr,samples")?;
    let mut points = Vec::new();
    for &snr in snr_db {
        let est = rcu_bound(&ensemble, &rc, snr_to_sigma(snr, ensemble.energy()))?;
        writeln!(out, "{snr},{},{},{}", est.value, est.stderr, est.samples)?;
        out.flush()?;
        points.push(json!({"snr_db": snr, "rcu": est.value, "stderr": est.stderr, "samples": est.samples}));
    }
    if let Some(path) = meta {
        let mut m = run_metadata(cfg);
        m["rcu"] = json!({
            "blocklength": ensemble.blocklength(),
            "k": rc.k,
            "grid_step_bits": step,
            "quantization": "each per-symbol atom is split between its two neighbouring lattice points in proportion to distance (mean preserving); the lattice point at zero counts with weight one half",
            "points": points,
        });
        std::fs::write(path, serde_json::to_string_pretty(&m)?)?;
    }
    Ok(())
}

fn dm_stats(cfg: &SystemConfig) -> Result<()> {
    let system = cfg.build()?;
    let m = system.chain.matcher();
    let mut report = json!({
        "kind": match m { Matcher::Shell(_) => "smdm", Matcher::ConstantComposition(_) => "ccdm" },
        "k": m.input_bits(),
        "n": m.output_len(),
        "target_pmf": m.distribution().pmf(),
        "realized_pmf": m.realized_pmf(),
        "normalized_kl_bits": m.normalized_kl(),
    });
    match m {
        Matcher::Shell(s) => {
            report["codebook_size"] = json!(s.codebook_size().to_string());
            report["weights"] = json!(s.weights());
        }
        Matcher::ConstantComposition(c) => {
            report["codebook_size"] = json!(format!("2^{}", m.input_bits()));
            report["composition"] = json!(c.composition());
            report["class_size"] = json!(c.class_size().to_string());
        }
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn search(cfg: &SystemConfig, degree: usize, snr_db: f64, frames: usize) -> Result<()> {
    let ranked = crc_search(cfg, degree, snr_db, frames)?;
    println!("rank,polynomial,frames,frame_errors,fer,ci95_low,ci95_high");
    for (i, c) in ranked.iter().enumerate() {
        let (lo, hi) = c.record.confidence_interval(1.96);
        println!(
            "{},{},{},{},{},{},{}",
            i + 1,
            c.crc.to_hex(),
            c.record.frames,
            c.record.frame_errors,
            c.record.fer,
            lo,
            hi
        );
    }
    Ok(())
}

fn trellis_dump(cfg: &SystemConfig, nu: Option<usize>, labels: bool) -> Result<()> {
    let spec = match nu {
        Some(nu) => shipped_code(nu).with_context(|| format!("no shipped code with nu = {nu}"))?.spec,
        None => ConvCodeSpec::from_octal(cfg.code.k0, cfg.code.nu, &cfg.code.parity)?,
    };
    if labels {
        let system = cfg.build()?;
        println!("label,bits,signal");
        for (l, x) in system.chain.constellation().signals().iter().enumerate() {
            println!("{l},{l:03b},{x}");
        }
        return Ok(());
    }
    let (trellis, _) = build_trellis(&spec);
    print!("{}", trellis.to_csv());
    Ok(())
}
