use std::fs;
use std::path::{Path, PathBuf};

use expbrush::address::ExternalAddress;
use expbrush::brush::SubBrush;
use expbrush::curve::Rect;
use expbrush::rational::parse_rational;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_DEPTH: usize = 64;
pub const DEFAULT_KMAX: u32 = 3;
pub const DEFAULT_OFFSET: u32 = 0;
pub const DEFAULT_SEED: &str = "-1,1,-1,1";

/// Config and address files share one format; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema: Option<u32>,
    pub addresses: Option<Vec<String>>,
    pub depth: Option<usize>,
    pub kmax: Option<u32>,
    pub offset: Option<u32>,
    pub seed: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let cfg: FileConfig =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        match cfg.schema {
            None | Some(1) => Ok(cfg),
            Some(v) => Err(CliError::usage(format!(
                "{}: unsupported schema {v} (expected 1)",
                path.display()
            ))),
        }
    }

    /// `other`'s fields win where set.
    fn overlay(self, other: FileConfig) -> FileConfig {
        FileConfig {
            schema: other.schema.or(self.schema),
            addresses: other.addresses.or(self.addresses),
            depth: other.depth.or(self.depth),
            kmax: other.kmax.or(self.kmax),
            offset: other.offset.or(self.offset),
            seed: other.seed.or(self.seed),
        }
    }
}

/// Collects every violated constraint before reporting.
#[derive(Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    pub fn finish<T>(self, value: impl FnOnce() -> T) -> Result<T, CliError> {
        if self.0.is_empty() {
            Ok(value())
        } else {
            Err(CliError::Usage(self.0))
        }
    }
}

pub fn parse_address(s: &str, problems: &mut Problems) -> Option<ExternalAddress> {
    match s.parse::<ExternalAddress>() {
        Ok(a) => Some(a),
        Err(e) => {
            problems.push(e.to_string());
            None
        }
    }
}

/// `a,b,c,d` with `c, d` rational.
pub fn parse_seed(s: &str, problems: &mut Problems) -> Option<Rect> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        problems.push(format!("seed {s:?} must be a,b,c,d"));
        return None;
    }
    let a = parts[0].parse::<f64>().ok().filter(|v| v.is_finite());
    let b = parts[1].parse::<f64>().ok().filter(|v| v.is_finite());
    let c = parse_rational(parts[2]);
    let d = parse_rational(parts[3]);
    let mut ok = true;
    for (name, v) in [("a", a.is_some()), ("b", b.is_some())] {
        if !v {
            problems.push(format!("seed side {name} is not a finite number"));
            ok = false;
        }
    }
    for (name, v) in [("c", &c), ("d", &d)] {
        if let Err(e) = v {
            problems.push(format!("seed side {name} is not rational: {e}"));
            ok = false;
        }
    }
    if !ok {
        return None;
    }
    match Rect::new(a?, b?, c.ok()?, d.ok()?) {
        Ok(r) => Some(r),
        Err(e) => {
            problems.push(format!("seed {s:?}: {e}"));
            None
        }
    }
}

/// Sub-brush inputs as given on the command line.
#[derive(Debug, Default, Clone)]
pub struct BrushFlags {
    pub address: Vec<String>,
    pub addresses: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub depth: Option<usize>,
}

#[derive(Debug, Default, Clone)]
pub struct CurveFlags {
    pub kmax: Option<u32>,
    pub offset: Option<u32>,
    pub seed: Option<String>,
}

/// Settings for commands that build on a sub-brush.
#[derive(Debug, Clone)]
pub struct BrushConfig {
    pub addresses: Vec<ExternalAddress>,
    pub depth: usize,
    pub kmax: u32,
    pub offset: u32,
    pub seed: Rect,
}

impl BrushConfig {
    pub fn sub_brush(&self) -> Result<SubBrush, CliError> {
        SubBrush::new(self.addresses.clone(), self.depth).map_err(|e| CliError::Domain(e.to_string()))
    }
}

/// Merges config file, address file and flags, in increasing priority.
pub fn resolve(brush: &BrushFlags, curve: &CurveFlags) -> Result<BrushConfig, CliError> {
    let mut file = FileConfig::default();
    if let Some(p) = &brush.config {
        file = file.overlay(FileConfig::load(p)?);
    }
    if let Some(p) = &brush.addresses {
        file = file.overlay(FileConfig::load(p)?);
    }
    let mut problems = Problems::default();
    let raw: Vec<String> = if brush.address.is_empty() {
        file.addresses.clone().unwrap_or_default()
    } else {
        brush.address.clone()
    };
    if raw.is_empty() {
        problems.push("no addresses given (use --address, --addresses FILE or --config FILE)");
    }
    let addresses: Vec<ExternalAddress> = raw.iter().filter_map(|s| parse_address(s, &mut problems)).collect();
    let depth = brush.depth.or(file.depth).unwrap_or(DEFAULT_DEPTH);
    if depth == 0 {
        problems.push("depth must be at least 1");
    }
    let kmax = curve.kmax.or(file.kmax).unwrap_or(DEFAULT_KMAX);
    let offset = curve.offset.or(file.offset).unwrap_or(DEFAULT_OFFSET);
    let seed_text = curve
        .seed
        .clone()
        .or(file.seed)
        .unwrap_or_else(|| DEFAULT_SEED.to_string());
    let seed = parse_seed(&seed_text, &mut problems);
    problems.finish(|| BrushConfig {
        addresses,
        depth,
        kmax,
        offset,
        seed: seed.expect("seed parsed when no problems"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_parsing() {
        let mut p = Problems::default();
        let r = parse_seed("-1,1,-1/2,3/4", &mut p).unwrap();
        assert_eq!(r.a, -1.0);
        assert!(p.0.is_empty());
        assert!(parse_seed("-1,1,pi,1", &mut p).is_none());
        assert!(parse_seed("-1,1,1,1", &mut p).is_none());
        assert!(parse_seed("-1,1,1", &mut p).is_none());
        assert_eq!(p.0.len(), 3);
    }

    #[test]
    fn every_problem_is_listed() {
        let flags = BrushFlags {
            address: vec!["1,x".into(), "|".into()],
            depth: Some(0),
            ..Default::default()
        };
        let curve = CurveFlags {
            seed: Some("0,1,a,b".into()),
            ..Default::default()
        };
        match resolve(&flags, &curve) {
            Err(CliError::Usage(v)) => assert_eq!(v.len(), 5, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }
}
