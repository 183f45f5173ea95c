//! CSV reports.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use mmvc_core::codec::{EncodeOutput, FrameAnalysis, FrameType};
use mmvc_core::metrics::{bpp, frame_ms_ssim, frame_psnr, MetricSpace, MIN_MSSSIM_SIZE};
use mmvc_core::prediction::Mode;
use mmvc_core::video_io::Frame;
use rayon::prelude::*;

/// File or stdout holding one or more CSV tables, separated by blank lines.
pub struct Sink {
    out: Box<dyn Write>,
    tables: usize,
}

type Table<'a> = csv::Writer<&'a mut Box<dyn Write>>;

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout()),
        };
        Ok(Self { out, tables: 0 })
    }

    fn table(&mut self) -> Result<Table<'_>> {
        if self.tables > 0 {
            self.out.write_all(b"\n")?;
        }
        self.tables += 1;
        Ok(csv::Writer::from_writer(&mut self.out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quality {
    pub psnr: f64,
    /// `None` when the frame is below the MS-SSIM minimum size.
    pub msssim: Option<f64>,
}

pub fn quality(orig: &[Frame], recon: &[Frame], space: MetricSpace) -> Result<Vec<Quality>> {
    orig.par_iter()
        .zip(recon)
        .map(|(a, b)| {
            let msssim = if a.width >= MIN_MSSSIM_SIZE && a.height >= MIN_MSSSIM_SIZE {
                Some(frame_ms_ssim(a, b, space)?)
            } else {
                None
            };
            Ok(Quality {
                psnr: frame_psnr(a, b, space)?,
                msssim,
            })
        })
        .collect()
}

fn pct(n: usize, d: usize) -> String {
    if d == 0 {
        String::new()
    } else {
        format!("{:.3}", 100.0 * n as f64 / d as f64)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Per-frame rate, quality and mode utilization, then an `all` row.
pub fn write_encode(sink: &mut Sink, enc: &EncodeOutput, q: &[Quality]) -> Result<()> {
    let h = &enc.header;
    let mut w = sink.table()?;
    w.write_record([
        "frame",
        "type",
        "bytes",
        "bpp",
        "psnr",
        "msssim",
        "skip",
        "fp",
        "ofc",
        "fpg",
        "intra",
        "removed_channels",
        "sparse_blocks",
    ])?;
    let mut tot = [0usize; 8];
    for (f, q) in enc.frames.iter().zip(q) {
        let modes = [
            f.skipped_blocks,
            f.mode_count(Some(Mode::Fp)),
            f.mode_count(Some(Mode::Ofc)),
            f.mode_count(Some(Mode::Fpg)),
            f.mode_count(None),
        ];
        let coded: Vec<_> = f.blocks.iter().filter(|b| b.mode.is_some()).collect();
        let removed: usize = coded.iter().map(|b| b.removed_channels).sum();
        let channels: usize = coded.iter().map(|b| b.channels).sum();
        let sparse = f.blocks.iter().filter(|b| b.path.bit()).count();
        w.write_record(&[
            f.index.to_string(),
            match f.frame_type {
                FrameType::Intra => "I",
                FrameType::Predicted => "P",
            }
            .to_string(),
            f.bytes.to_string(),
            format!("{:.6}", bpp(f.bytes, h.width, h.height, 1)?),
            format!("{:.4}", q.psnr),
            opt(q.msssim),
            pct(modes[0], f.total_blocks),
            pct(modes[1], f.total_blocks),
            pct(modes[2], f.total_blocks),
            pct(modes[3], f.total_blocks),
            pct(modes[4], f.total_blocks),
            pct(removed, channels),
            pct(sparse, f.blocks.len()),
        ])?;
        for (t, v) in
            tot.iter_mut()
                .zip(modes.into_iter().chain([removed, channels, f.total_blocks]))
        {
            *t += v;
        }
    }
    w.write_record(&[
        "all".to_string(),
        String::new(),
        enc.bytes.len().to_string(),
        format!(
            "{:.6}",
            bpp(enc.bytes.len(), h.width, h.height, h.frame_count)?
        ),
        opt(mean(q.iter().map(|q| q.psnr))),
        opt(q
            .iter()
            .map(|q| q.msssim)
            .collect::<Option<Vec<_>>>()
            .and_then(|v| mean(v.into_iter()))),
        pct(tot[0], tot[7]),
        pct(tot[1], tot[7]),
        pct(tot[2], tot[7]),
        pct(tot[3], tot[7]),
        pct(tot[4], tot[7]),
        pct(tot[5], tot[6]),
        String::new(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Utilization over predicted frames.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Utilization {
    pub frames: usize,
    pub intra_frames: usize,
    /// FP, OFC, FPG, S
    pub blocks: [usize; 4],
    pub bits: [usize; 4],
    pub zero_channels: usize,
    pub coded_channels: usize,
    pub sparse: usize,
    pub dense: usize,
    pub frame_bytes: usize,
    pub side_bytes: usize,
    pub dense_only_bytes: usize,
}

impl Utilization {
    pub fn from_rows(rows: &[FrameAnalysis]) -> Self {
        let mut u = Self {
            frames: rows.len(),
            ..Self::default()
        };
        for r in rows {
            u.frame_bytes += r.bytes;
            u.side_bytes += r.side_bytes;
            u.dense_only_bytes += r.dense_only_bytes;
            if r.intra {
                u.intra_frames += 1;
                continue;
            }
            for m in 0..3 {
                u.blocks[m] += r.mode_blocks[m];
                u.bits[m] += r.mode_bits[m];
            }
            // A skipped block costs its mask bit.
            u.blocks[3] += r.skipped;
            u.bits[3] += r.skipped;
            u.zero_channels += r.zero_channels;
            u.coded_channels += r.coded_channels;
            u.sparse += r.sparse_blocks;
            u.dense += r.dense_blocks;
        }
        u
    }
}

pub fn write_analysis(sink: &mut Sink, u: &Utilization, stream_bytes: usize) -> Result<()> {
    let mut w = sink.table()?;
    w.write_record(["mode", "block_share", "bit_share"])?;
    let (nb, nbits) = (u.blocks.iter().sum(), u.bits.iter().sum());
    for (i, name) in ["FP", "OFC", "FPG", "S"].iter().enumerate() {
        w.write_record([
            name.to_string(),
            pct(u.blocks[i], nb),
            pct(u.bits[i], nbits),
        ])?;
    }
    w.flush()?;
    drop(w);
    let mut w = sink.table()?;
    w.write_record(["metric", "value"])?;
    let saving = if u.dense_only_bytes > 0 {
        format!(
            "{:.3}",
            100.0 * (1.0 - u.frame_bytes as f64 / u.dense_only_bytes as f64)
        )
    } else {
        String::new()
    };
    let coded = u.sparse + u.dense;
    let rows: [(&str, String); 10] = [
        ("frames", u.frames.to_string()),
        ("intra_frames", u.intra_frames.to_string()),
        ("zero_channel_share", pct(u.zero_channels, u.coded_channels)),
        ("sparse_block_share", pct(u.sparse, coded)),
        ("dense_block_share", pct(u.dense, coded)),
        ("side_info_byte_share", pct(u.side_bytes, u.frame_bytes)),
        ("stream_bytes", stream_bytes.to_string()),
        ("frame_bytes", u.frame_bytes.to_string()),
        ("dense_only_frame_bytes", u.dense_only_bytes.to_string()),
        ("dual_path_saving", saving),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// `frame,bpp,psnr,msssim` rows and a `mean` row.
pub fn write_quality(
    sink: &mut Sink,
    frame_bytes: &[usize],
    q: &[Quality],
    width: usize,
    height: usize,
) -> Result<()> {
    let mut w = sink.table()?;
    w.write_record(["frame", "bpp", "psnr", "msssim"])?;
    for (i, (b, q)) in frame_bytes.iter().zip(q).enumerate() {
        w.write_record([
            i.to_string(),
            format!("{:.6}", bpp(*b, width, height, 1)?),
            format!("{:.4}", q.psnr),
            opt(q.msssim),
        ])?;
    }
    let total: usize = frame_bytes.iter().sum();
    w.write_record([
        "mean".to_string(),
        format!(
            "{:.6}",
            bpp(total, width, height, frame_bytes.len().max(1))?
        ),
        opt(mean(q.iter().map(|q| q.psnr))),
        opt(q
            .iter()
            .map(|q| q.msssim)
            .collect::<Option<Vec<_>>>()
            .and_then(|v| mean(v.into_iter()))),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_sum_to_hundred() {
        let rows = vec![
            FrameAnalysis {
                intra: true,
                bytes: 100,
                ..Default::default()
            },
            FrameAnalysis {
                bytes: 50,
                side_bytes: 10,
                dense_only_bytes: 60,
                total_blocks: 10,
                skipped: 4,
                mode_blocks: [3, 2, 1, 0],
                mode_bits: [100, 80, 30, 0],
                ..Default::default()
            },
        ];
        let u = Utilization::from_rows(&rows);
        assert_eq!(u.blocks, [3, 2, 1, 4]);
        let share: f64 = (0..4)
            .map(|i| pct(u.blocks[i], 10).parse::<f64>().unwrap())
            .sum();
        assert!((share - 100.0).abs() < 0.1);
        assert_eq!(u.intra_frames, 1);
    }
}
