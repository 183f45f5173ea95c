//! Codec options from `key=value` files and flags. Flags win over the file,
//! the file wins over defaults.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use mmvc_core::codec::CodecConfig;

#[derive(Args, Clone, Debug, Default)]
pub struct CodecArgs {
    /// key=value file; keys are the long flag names below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Uniform quantizer step
    #[arg(long)]
    pub qstep: Option<f64>,
    /// Use a Lloyd-Max quantizer with this many levels, trained on the clip
    #[arg(long)]
    pub lloyd_levels: Option<usize>,
    /// Uniform quantizer index clamp
    #[arg(long)]
    pub index_bound: Option<u32>,
    /// Pixel block size P
    #[arg(long)]
    pub block: Option<usize>,
    /// Transform tile size B
    #[arg(long)]
    pub transform: Option<usize>,
    /// Subset of FP,OFC,FPG,S
    #[arg(long)]
    pub modes: Option<String>,
    /// Per-pixel skip threshold
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub density_threshold: Option<f64>,
    /// Channel-removal PSNR budget per block (dB)
    #[arg(long)]
    pub delta_db: Option<f64>,
    #[arg(long)]
    pub search_range: Option<usize>,
    /// Motion block size
    #[arg(long)]
    pub mblock: Option<usize>,
    /// 0 = only the first frame is intra
    #[arg(long)]
    pub intra_period: Option<u32>,
    /// true/false
    #[arg(long)]
    pub dual_path: Option<bool>,
    /// source or recon
    #[arg(long)]
    pub skip_reference: Option<String>,
}

impl CodecArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    out.push((stringify!($field), v.to_string()));
                })*
            };
        }
        push!(
            qstep,
            lloyd_levels,
            index_bound,
            block,
            transform,
            modes,
            epsilon,
            density_threshold,
            delta_db,
            search_range,
            mblock,
            intra_period,
            dual_path,
            skip_reference
        );
        out
    }

    pub fn resolve(&self) -> Result<CodecConfig> {
        if self.qstep.is_some() && self.lloyd_levels.is_some() {
            bail!("--qstep and --lloyd-levels are mutually exclusive");
        }
        let mut cfg = CodecConfig::default();
        if let Some(path) = &self.config {
            for (k, v) in read_config_file(path)? {
                cfg.set(&k, &v)
                    .with_context(|| format!("{}: {k}", path.display()))?;
            }
        }
        for (k, v) in self.pairs() {
            cfg.set(k, &v)
                .with_context(|| format!("--{}", k.replace('_', "-")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmvc_core::codec::QuantizerChoice;

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "# test\nqstep = 16\nmodes=FP,S\nsearch-range=4\n").unwrap();
        let args = CodecArgs {
            config: Some(path),
            qstep: Some(4.0),
            ..CodecArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.quantizer, QuantizerChoice::Uniform { step: 4.0 });
        assert_eq!(cfg.modes.to_string(), "FP,S");
        assert_eq!(cfg.search_range, 4);
        assert_eq!(cfg.block_px, CodecConfig::default().block_px);
    }

    #[test]
    fn rejects_bad_lines_and_keys() {
        assert!(parse_config("qstep 8").is_err());
        let mut cfg = CodecConfig::default();
        assert!(cfg.set("colour", "red").is_err());
    }

    #[test]
    fn block_must_divide_by_transform() {
        let args = CodecArgs {
            block: Some(60),
            transform: Some(8),
            ..CodecArgs::default()
        };
        assert!(args.resolve().is_err());
    }
}
