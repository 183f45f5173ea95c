mod config;
mod report;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use mmvc_core::codec::{analyze_stream, decode_stream, encode_stream};
use mmvc_core::metrics::{bd_rate, MetricSpace, RdPoint};
use mmvc_core::video_io::{
    read_raw, read_y4m, write_raw, write_y4m, ChromaMode, FrameSequence, Rational,
};

use config::CodecArgs;
use report::{quality, write_analysis, write_encode, write_quality, Sink, Utilization};

#[derive(Parser)]
#[command(name = "mmvc", version, about = "Block-based multi-mode video codec")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct RawArgs {
    /// Raw input width; required unless the input is Y4M
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value = "420")]
    chroma: ChromaMode,
    #[arg(long, default_value_t = 8)]
    bit_depth: u8,
    /// Raw input frame rate, `num` or `num/den`
    #[arg(long, default_value = "30")]
    fps: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode Y4M or raw YUV to an .mmvc stream
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[command(flatten)]
        raw: RawArgs,
        #[command(flatten)]
        codec: CodecArgs,
        /// Per-frame statistics
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Per-frame SHA-256 of the reconstruction, one per line
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Quality metrics in RGB instead of luma
        #[arg(long)]
        rgb: bool,
    },
    /// Decode an .mmvc stream to Y4M (or raw YUV)
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Mode, path and side-information breakdown of a stream
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        /// Source video, for per-frame quality
        #[arg(long)]
        original: Option<PathBuf>,
        #[command(flatten)]
        raw: RawArgs,
        #[arg(long)]
        rgb: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// BD-rate of `test` against `anchor`
    Bdrate {
        /// CSV with `bpp` and `psnr` columns, or comma-separated .mmvc streams
        #[arg(long)]
        anchor: String,
        #[arg(long)]
        test: String,
        /// Source video, needed when the curves are streams
        #[arg(long)]
        original: Option<PathBuf>,
        #[command(flatten)]
        raw: RawArgs,
        #[arg(long)]
        rgb: bool,
    },
}

fn parse_fps(s: &str) -> Result<Rational> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let r = Rational::new(n.trim().parse()?, d.trim().parse()?);
    if r.num == 0 || r.den == 0 {
        bail!("frame rate {s} must be positive");
    }
    Ok(r)
}

fn read_video(path: &Path, raw: &RawArgs) -> Result<FrameSequence> {
    let mut bytes = Vec::new();
    File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_end(&mut bytes)?;
    let seq = if bytes.starts_with(b"YUV4MPEG2") {
        read_y4m(&bytes[..])?
    } else {
        let (Some(w), Some(h)) = (raw.width, raw.height) else {
            bail!("{} is not Y4M; pass --width and --height", path.display());
        };
        read_raw(
            &bytes[..],
            w,
            h,
            raw.chroma,
            raw.bit_depth,
            parse_fps(&raw.fps)?,
        )?
    };
    Ok(seq)
}

fn read_stream(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?)
        .read_to_end(&mut bytes)?;
    Ok(bytes)
}

fn write_trace(path: &Path, hashes: &[String]) -> Result<()> {
    let mut out =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for h in hashes {
        writeln!(out, "{h}")?;
    }
    out.flush()?;
    Ok(())
}

fn space(rgb: bool) -> MetricSpace {
    if rgb {
        MetricSpace::Rgb
    } else {
        MetricSpace::Luma
    }
}

/// RD point of a stream against its source.
fn stream_point(path: &Path, orig: &FrameSequence, space: MetricSpace) -> Result<RdPoint> {
    let bytes = read_stream(path)?;
    let dec = decode_stream(&bytes).with_context(|| path.display().to_string())?;
    let recon: Vec<_> = dec.frames.iter().map(|f| f.frame.clone()).collect();
    if recon.len() != orig.len() {
        bail!(
            "{} has {} frames, the source {}",
            path.display(),
            recon.len(),
            orig.len()
        );
    }
    let q = quality(&orig.frames, &recon, space)?;
    let n = q.len() as f64;
    let h = &dec.header;
    Ok(RdPoint {
        bpp: mmvc_core::metrics::bpp(bytes.len(), h.width, h.height, h.frame_count)?,
        psnr: q.iter().map(|q| q.psnr).sum::<f64>() / n,
        msssim: q.iter().filter_map(|q| q.msssim).sum::<f64>() / n,
    })
}

fn csv_points(path: &Path) -> Result<Vec<RdPoint>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let head = r.headers()?.clone();
    let col = |name: &str| {
        head.iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .with_context(|| format!("{}: no `{name}` column", path.display()))
    };
    let (b, p) = (col("bpp")?, col("psnr")?);
    let m = col("msssim").ok();
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| -> Result<f64> {
                let v = rec.get(i).unwrap_or("").trim();
                v.parse()
                    .with_context(|| format!("{}: bad number `{v}`", path.display()))
            };
            Ok(RdPoint {
                bpp: f(b)?,
                psnr: f(p)?,
                msssim: m.map(f).transpose()?.unwrap_or(0.0),
            })
        })
        .collect()
}

fn curve(arg: &str, orig: &Option<FrameSequence>, space: MetricSpace) -> Result<Vec<RdPoint>> {
    let paths: Vec<&str> = arg
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if let [one] = paths[..] {
        if !one.ends_with(".mmvc") {
            return csv_points(Path::new(one));
        }
    }
    let Some(orig) = orig else {
        bail!("stream curves need --original");
    };
    paths
        .iter()
        .map(|p| stream_point(Path::new(p), orig, space))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.cmd {
        Cmd::Encode {
            input,
            output,
            raw,
            codec,
            csv,
            trace,
            rgb,
        } => {
            let cfg = codec.resolve()?;
            let seq = read_video(&input, &raw)?;
            let enc = encode_stream(&seq, &cfg)?;
            fs::write(&output, &enc.bytes)
                .with_context(|| format!("writing {}", output.display()))?;
            if let Some(path) = trace {
                write_trace(&path, &enc.trace())?;
            }
            if let Some(path) = csv {
                let q = quality(&seq.frames, &enc.recon, space(rgb))?;
                write_encode(&mut Sink::open(Some(&path))?, &enc, &q)?;
            }
            eprintln!(
                "{} frames, {} bytes, {:.4} bpp",
                seq.len(),
                enc.bytes.len(),
                mmvc_core::metrics::bpp(
                    enc.bytes.len(),
                    seq.frames[0].width,
                    seq.frames[0].height,
                    seq.len()
                )?
            );
        }
        Cmd::Decode {
            input,
            output,
            raw,
            trace,
        } => {
            let dec = decode_stream(&read_stream(&input)?)
                .with_context(|| input.display().to_string())?;
            let seq = dec.sequence()?;
            let out = BufWriter::new(
                File::create(&output).with_context(|| format!("creating {}", output.display()))?,
            );
            if raw {
                write_raw(&seq, out)?;
            } else {
                write_y4m(&seq, out)?;
            }
            if let Some(path) = trace {
                write_trace(&path, &dec.trace())?;
            }
        }
        Cmd::Analyze {
            input,
            original,
            raw,
            rgb,
            csv,
        } => {
            let bytes = read_stream(&input)?;
            let (dec, rows) =
                analyze_stream(&bytes).with_context(|| input.display().to_string())?;
            let mut w = Sink::open(csv.as_deref())?;
            write_analysis(&mut w, &Utilization::from_rows(&rows), bytes.len())?;
            if let Some(path) = original {
                let orig = read_video(&path, &raw)?;
                if orig.len() != dec.frames.len() {
                    bail!(
                        "stream has {} frames, {} has {}",
                        dec.frames.len(),
                        path.display(),
                        orig.len()
                    );
                }
                let recon: Vec<_> = dec.frames.iter().map(|f| f.frame.clone()).collect();
                let q = quality(&orig.frames, &recon, space(rgb))?;
                let sizes: Vec<_> = rows.iter().map(|r| r.bytes).collect();
                write_quality(&mut w, &sizes, &q, dec.header.width, dec.header.height)?;
            }
        }
        Cmd::Bdrate {
            anchor,
            test,
            original,
            raw,
            rgb,
        } => {
            let orig = original.map(|p| read_video(&p, &raw)).transpose()?;
            let a = curve(&anchor, &orig, space(rgb))?;
            let t = curve(&test, &orig, space(rgb))?;
            println!("bd_rate_percent,{:.4}", bd_rate(&a, &t)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
