use std::fmt;
use std::str::FromStr;

use crate::entropy::{validate_threshold, DEFAULT_DENSITY_THRESHOLD, MAX_INDEX_BOUND};
use crate::error::{Error, Result};
use crate::prediction::Mode;
use crate::transform::TransformSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuantizerChoice {
    Uniform {
        step: f64,
    },
    /// Codebook trained on the clip before encoding and sent in the header.
    LloydMax {
        levels: usize,
    },
}

/// What the skip test compares the current source frame against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SkipReference {
    /// The previous source frame.
    #[default]
    Source,
    /// The previous reconstruction.
    Reconstruction,
}

impl FromStr for SkipReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "source" | "src" => Ok(Self::Source),
            "recon" | "reconstruction" => Ok(Self::Reconstruction),
            _ => Err(Error::InvalidConfig(format!("skip reference `{s}`"))),
        }
    }
}

impl fmt::Display for SkipReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Source => "source",
            Self::Reconstruction => "recon",
        })
    }
}

/// Enabled prediction modes plus the skip mode `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeSet {
    pub fp: bool,
    pub ofc: bool,
    pub fpg: bool,
    pub skip: bool,
}

impl Default for ModeSet {
    fn default() -> Self {
        Self::ALL
    }
}

impl ModeSet {
    pub const ALL: Self = Self {
        fp: true,
        ofc: true,
        fpg: true,
        skip: true,
    };

    pub fn contains(&self, mode: Mode) -> bool {
        match mode {
            Mode::Fp => self.fp,
            Mode::Ofc => self.ofc,
            Mode::Fpg => self.fpg,
        }
    }

    pub fn has_prediction(&self) -> bool {
        self.fp || self.ofc || self.fpg
    }

    pub fn to_bits(self) -> u8 {
        u8::from(self.fp)
            | u8::from(self.ofc) << 1
            | u8::from(self.fpg) << 2
            | u8::from(self.skip) << 3
    }

    pub fn from_bits(b: u8) -> Result<Self> {
        if b & !0x0f != 0 {
            return Err(Error::Corrupt(format!("mode set bits {b:#04x}")));
        }
        Ok(Self {
            fp: b & 1 != 0,
            ofc: b & 2 != 0,
            fpg: b & 4 != 0,
            skip: b & 8 != 0,
        })
    }
}

impl FromStr for ModeSet {
    type Err = Error;

    /// Comma-separated subset of FP, OFC, FPG, S.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = Self {
            fp: false,
            ofc: false,
            fpg: false,
            skip: false,
        };
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.to_ascii_uppercase().as_str() {
                "FP" => set.fp = true,
                "OFC" => set.ofc = true,
                "FPG" => set.fpg = true,
                "S" => set.skip = true,
                _ => return Err(Error::InvalidConfig(format!("unknown mode `{tok}`"))),
            }
        }
        Ok(set)
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.fp, "FP"),
            (self.ofc, "OFC"),
            (self.fpg, "FPG"),
            (self.skip, "S"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodecConfig {
    /// Pixel block size P.
    pub block_px: usize,
    pub transform: TransformSpec,
    pub quantizer: QuantizerChoice,
    /// Uniform quantizer clamp; derived from step and bit depth when `None`.
    pub index_bound: Option<u32>,
    /// Per-pixel skip threshold.
    pub epsilon: f64,
    pub density_threshold: f64,
    /// Channel-removal PSNR budget per block, dB.
    pub delta_db: f64,
    pub search_range: usize,
    pub mblock: usize,
    /// 0 = only frame 0 is intra.
    pub intra_period: u32,
    pub modes: ModeSet,
    /// Route sparse blocks through the run-length path.
    pub dual_path: bool,
    pub skip_reference: SkipReference,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            block_px: 64,
            transform: TransformSpec::default(),
            quantizer: QuantizerChoice::Uniform { step: 8.0 },
            index_bound: None,
            epsilon: 0.0,
            density_threshold: DEFAULT_DENSITY_THRESHOLD,
            delta_db: 0.05,
            search_range: 8,
            mblock: 16,
            intra_period: 0,
            modes: ModeSet::ALL,
            dual_path: true,
            skip_reference: SkipReference::Source,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        self.transform.validate()?;
        let b = self.transform.block_size;
        if self.block_px == 0
            || !self.block_px.is_multiple_of(b)
            || self.block_px > u16::MAX as usize
        {
            return Err(Error::InvalidConfig(format!(
                "block size {} is not a positive multiple of transform size {b}",
                self.block_px
            )));
        }
        match self.quantizer {
            QuantizerChoice::Uniform { step } if !(step > 0.0 && step.is_finite()) => {
                return Err(Error::InvalidConfig(format!("quantizer step {step}")));
            }
            QuantizerChoice::LloydMax { levels } if !(2..=4095).contains(&levels) => {
                return Err(Error::InvalidConfig(format!("Lloyd-Max levels {levels}")));
            }
            _ => {}
        }
        if let Some(bound) = self.index_bound {
            if bound == 0 || bound > MAX_INDEX_BOUND {
                return Err(Error::InvalidConfig(format!("index bound {bound}")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        validate_threshold(self.density_threshold)?;
        if !(self.delta_db >= 0.0 && self.delta_db.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta_db {}", self.delta_db)));
        }
        if self.search_range > 64 {
            return Err(Error::InvalidConfig(format!(
                "search range {} > 64",
                self.search_range
            )));
        }
        if self.mblock == 0 || self.mblock > 256 {
            return Err(Error::InvalidConfig(format!(
                "motion block {}",
                self.mblock
            )));
        }
        if !self.modes.has_prediction() && self.intra_period != 1 {
            return Err(Error::InvalidConfig(
                "mode set needs FP, OFC or FPG unless every frame is intra".into(),
            ));
        }
        Ok(())
    }

    /// Pixel alignment every plane is padded to.
    pub fn alignment(&self) -> usize {
        lcm(self.block_px, self.mblock)
    }

    pub fn is_intra(&self, t: usize) -> bool {
        t == 0 || (self.intra_period > 0 && t.is_multiple_of(self.intra_period as usize))
    }

    /// Default uniform index bound: twice the largest coefficient magnitude
    /// of a level-shifted tile, in steps, at least 255.
    pub fn auto_index_bound(&self, step: f64, bit_depth: u8) -> u32 {
        let max_coef = (self.transform.block_size as f64) * (1u32 << (bit_depth - 1)) as f64;
        let steps = (2.0 * max_coef / step).ceil();
        (steps.max(255.0) as u64).min(MAX_INDEX_BOUND as u64) as u32
    }

    /// Sets one option by name. Keys: `qstep`, `lloyd_levels`,
    /// `index_bound`, `block`, `transform`, `modes`, `epsilon`,
    /// `density_threshold`, `delta_db`, `search_range`, `mblock`,
    /// `intra_period`, `dual_path`, `skip_reference`. Dashes count as
    /// underscores. Does not validate the result.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("{key}: bad value `{v}`")))
        }
        let v = value.trim();
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "qstep" => self.quantizer = QuantizerChoice::Uniform { step: num(k, v)? },
            "lloyd_levels" => self.quantizer = QuantizerChoice::LloydMax { levels: num(k, v)? },
            "index_bound" => self.index_bound = Some(num(k, v)?),
            "block" => self.block_px = num(k, v)?,
            "transform" => self.transform = TransformSpec::dct(num(k, v)?)?,
            "modes" => self.modes = v.parse()?,
            "epsilon" => self.epsilon = num(k, v)?,
            "density_threshold" => self.density_threshold = num(k, v)?,
            "delta_db" => self.delta_db = num(k, v)?,
            "search_range" => self.search_range = num(k, v)?,
            "mblock" => self.mblock = num(k, v)?,
            "intra_period" => self.intra_period = num(k, v)?,
            "dual_path" => self.dual_path = num(k, v)?,
            "skip_reference" => self.skip_reference = v.parse()?,
            _ => return Err(Error::InvalidConfig(format!("unknown option `{k}`"))),
        }
        Ok(())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        CodecConfig::default().validate().unwrap();
        assert_eq!(CodecConfig::default().alignment(), 64);
    }

    #[test]
    fn block_must_be_multiple_of_transform() {
        let cfg = CodecConfig {
            block_px: 60,
            ..CodecConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mode_set_parsing() {
        let s: ModeSet = "FP,OFC,FPG,S".parse().unwrap();
        assert_eq!(s, ModeSet::ALL);
        let s: ModeSet = "fp".parse().unwrap();
        assert!(s.fp && !s.ofc && !s.fpg && !s.skip);
        assert_eq!(s.to_string(), "FP");
        assert_eq!(ModeSet::from_bits(s.to_bits()).unwrap(), s);
        assert!("FP,X".parse::<ModeSet>().is_err());
        let only_skip = CodecConfig {
            modes: "S".parse().unwrap(),
            ..CodecConfig::default()
        };
        assert!(only_skip.validate().is_err());
    }

    #[test]
    fn set_by_name() {
        let mut cfg = CodecConfig::default();
        cfg.set("search-range", "4").unwrap();
        cfg.set("modes", "FP,S").unwrap();
        cfg.set("lloyd_levels", "16").unwrap();
        assert_eq!(cfg.search_range, 4);
        assert_eq!(cfg.modes.to_string(), "FP,S");
        assert_eq!(cfg.quantizer, QuantizerChoice::LloydMax { levels: 16 });
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.set("qstep", "fast").is_err());
    }

    #[test]
    fn index_bound_scales_with_step() {
        let cfg = CodecConfig::default();
        assert_eq!(cfg.auto_index_bound(8.0, 8), 256);
        assert_eq!(cfg.auto_index_bound(32.0, 8), 255);
        assert_eq!(cfg.auto_index_bound(0.01, 10), MAX_INDEX_BOUND);
    }

    #[test]
    fn intra_schedule() {
        let mut cfg = CodecConfig::default();
        assert!(cfg.is_intra(0) && !cfg.is_intra(5));
        cfg.intra_period = 4;
        assert!(cfg.is_intra(8) && !cfg.is_intra(9));
    }
}
