use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cntk::{Architecture, ConvGeometry, Depth, GeometryKind, Padding, Propagation};
use crate::{Error, Result};

/// Where the covariate covariance comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SigmaSource {
    Identity,
    /// `Σ ∝ (Θ_D + εI)⁻¹` for the configured kernel at depth `D`.
    InverseTheta(usize),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BetaSource {
    /// Unit-norm Gaussian direction drawn from the master seed.
    Synthetic,
    File(PathBuf),
}

/// Which family of feature transforms the sweep walks through.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// The linear CNTK transform `Θ_D`.
    Cntk,
    /// `Θ_D = ββᵀ + |D − center|·I`.
    Aligned { center: usize },
}

/// Parsed experiment configuration. Every subcommand reads the same format
/// and uses the keys it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub geometry: ConvGeometry,
    pub padding: Padding,
    pub architecture: Architecture,
    pub propagation: Propagation,
    pub depths: Vec<Depth>,
    pub family: Family,
    pub sigma: SigmaSource,
    pub beta: BetaSource,
    pub noise_var: f64,
    pub n: usize,
    pub bias_trials: usize,
    pub variance_trials: usize,
    pub risk_trials: usize,
    pub test_points: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub digit_pos: u8,
    pub digit_neg: u8,
    pub count_per_class: usize,
    pub mnist_trials: usize,
    pub shuffle: bool,
}

const KEYS: &[&str] = &[
    "geometry",
    "size",
    "padding",
    "architecture",
    "propagation",
    "depths",
    "depth_range",
    "family",
    "family_center",
    "sigma",
    "beta",
    "noise_var",
    "n",
    "bias_trials",
    "variance_trials",
    "risk_trials",
    "test_points",
    "seed",
    "output_dir",
    "images",
    "labels",
    "digit_pos",
    "digit_neg",
    "count_per_class",
    "mnist_trials",
    "shuffle",
];

/// Raw `key = value` pairs with the line each came from.
struct Entries {
    map: HashMap<String, (usize, String)>,
    base: PathBuf,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(line, v)| (*line, v.as_str()))
    }

    fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|e| Error::config(Some(line), key, format!("invalid value `{v}`: {e}"))),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, v) = self
            .raw(key)
            .ok_or_else(|| Error::config(None, key, "missing required key"))?;
        v.parse()
            .map_err(|e| Error::config(Some(line), key, format!("invalid value `{v}`: {e}")))
    }

    fn path(&self, key: &str) -> Option<(usize, PathBuf)> {
        self.raw(key).map(|(line, v)| (line, self.base.join(v)))
    }
}

fn err_at(entries: &Entries, key: &str, message: impl Into<String>) -> Error {
    Error::config(entries.raw(key).map(|(l, _)| l), key, message)
}

fn existing_file(key: &str, path: PathBuf, line: usize) -> Result<PathBuf> {
    if !path.is_file() {
        return Err(Error::config(
            Some(line),
            key,
            format!("file `{}` does not exist", path.display()),
        ));
    }
    Ok(path)
}

fn parse_depth(token: &str) -> std::result::Result<Depth, String> {
    match token {
        "inf" => Ok(Depth::Infinite),
        t => t
            .parse::<usize>()
            .map(Depth::Finite)
            .map_err(|_| format!("`{t}` is not a depth (non-negative integer or `inf`)")),
    }
}

fn depth_key(d: &Depth) -> (u8, usize) {
    match d {
        Depth::Finite(v) => (0, *v),
        Depth::Infinite => (1, 0),
    }
}

/// `start:stop:count` → `count` log-spaced integer depths from `start` to
/// `stop` (duplicates after rounding are dropped). A start of 0 keeps 0 and
/// spaces the rest from 1.
pub fn log_spaced_depths(
    start: usize,
    stop: usize,
    count: usize,
) -> std::result::Result<Vec<usize>, String> {
    if count == 0 || stop < start {
        return Err("need count >= 1 and start <= stop".into());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let (mut out, lo, slots) = if start == 0 {
        (vec![0usize], 1usize, count - 1)
    } else {
        (Vec::new(), start, count)
    };
    if slots == 0 || stop == 0 {
        return Ok(out);
    }
    let (a, b) = ((lo as f64).ln(), (stop as f64).ln());
    for i in 0..slots {
        let t = if slots == 1 {
            1.0
        } else {
            i as f64 / (slots - 1) as f64
        };
        let d = (a + t * (b - a)).exp().round() as usize;
        if out.last().is_none_or(|&last| d > last) {
            out.push(d);
        }
    }
    Ok(out)
}

fn parse_depths(entries: &Entries) -> Result<Vec<Depth>> {
    let depths = match (entries.raw("depths"), entries.raw("depth_range")) {
        (Some(_), Some((line, _))) => {
            return Err(Error::config(
                Some(line),
                "depth_range",
                "give either `depths` or `depth_range`, not both",
            ))
        }
        (None, None) => return Err(Error::config(None, "depths", "missing required key")),
        (Some((line, v)), None) => v
            .split(',')
            .map(|t| parse_depth(t.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::config(Some(line), "depths", e))?,
        (None, Some((line, v))) => {
            let parts: Vec<&str> = v.split(':').map(str::trim).collect();
            let nums: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
            match nums.as_deref() {
                Some(&[start, stop, count]) => log_spaced_depths(start, stop, count)
                    .map_err(|e| Error::config(Some(line), "depth_range", e))?
                    .into_iter()
                    .map(Depth::Finite)
                    .collect(),
                _ => {
                    return Err(Error::config(
                        Some(line),
                        "depth_range",
                        format!("expected `start:stop:count`, got `{v}`"),
                    ))
                }
            }
        }
    };
    if depths.is_empty() {
        return Err(err_at(entries, "depths", "depth list is empty"));
    }
    if depths
        .windows(2)
        .any(|w| depth_key(&w[0]) >= depth_key(&w[1]))
    {
        return Err(err_at(
            entries,
            "depths",
            "depths must be strictly increasing",
        ));
    }
    Ok(depths)
}

fn parse_geometry(entries: &Entries) -> Result<ConvGeometry> {
    let kind = match entries.raw("geometry") {
        None => GeometryKind::OneD,
        Some((_, "1d")) => GeometryKind::OneD,
        Some((_, "2d")) => GeometryKind::TwoD,
        Some((line, other)) => {
            return Err(Error::config(
                Some(line),
                "geometry",
                format!("unknown geometry `{other}` (expected 1d | 2d)"),
            ))
        }
    };
    let size: usize = entries.required("size")?;
    let built = match kind {
        GeometryKind::OneD => ConvGeometry::one_d(size),
        GeometryKind::TwoD => ConvGeometry::two_d(size),
    };
    built.map_err(|e| err_at(entries, "size", e.to_string()))
}

fn parse_propagation(entries: &Entries) -> Result<Propagation> {
    match entries.raw("propagation") {
        None | Some((_, "spectral")) => Ok(Propagation::Spectral),
        Some((_, "iterate")) => Ok(Propagation::Iterate),
        Some((line, other)) => Err(Error::config(
            Some(line),
            "propagation",
            format!("unknown propagation `{other}` (expected spectral | iterate)"),
        )),
    }
}

fn parse_family(entries: &Entries) -> Result<Family> {
    let center: usize = entries.parse("family_center", 10)?;
    match entries.raw("family") {
        None | Some((_, "cntk")) => {
            if entries.raw("family_center").is_some() {
                return Err(err_at(
                    entries,
                    "family_center",
                    "only used with `family = aligned`",
                ));
            }
            Ok(Family::Cntk)
        }
        Some((_, "aligned")) => Ok(Family::Aligned { center }),
        Some((line, other)) => Err(Error::config(
            Some(line),
            "family",
            format!("unknown family `{other}` (expected cntk | aligned)"),
        )),
    }
}

fn parse_sigma(entries: &Entries) -> Result<SigmaSource> {
    let Some((line, v)) = entries.raw("sigma") else {
        return Ok(SigmaSource::Identity);
    };
    if v == "identity" {
        Ok(SigmaSource::Identity)
    } else if let Some(d) = v.strip_prefix("inverse_theta:") {
        d.trim()
            .parse()
            .map(SigmaSource::InverseTheta)
            .map_err(|_| Error::config(Some(line), "sigma", format!("invalid depth in `{v}`")))
    } else if let Some(p) = v.strip_prefix("file:") {
        existing_file("sigma", entries.base.join(p.trim()), line).map(SigmaSource::File)
    } else {
        Err(Error::config(
            Some(line),
            "sigma",
            format!("unknown covariance `{v}` (expected identity | inverse_theta:D | file:PATH)"),
        ))
    }
}

fn parse_beta(entries: &Entries) -> Result<BetaSource> {
    let Some((line, v)) = entries.raw("beta") else {
        return Ok(BetaSource::Synthetic);
    };
    if v == "synthetic" {
        Ok(BetaSource::Synthetic)
    } else if let Some(p) = v.strip_prefix("file:") {
        existing_file("beta", entries.base.join(p.trim()), line).map(BetaSource::File)
    } else {
        Err(Error::config(
            Some(line),
            "beta",
            format!("unknown β source `{v}` (expected synthetic | file:PATH)"),
        ))
    }
}

fn positive(entries: &Entries, key: &str, value: usize) -> Result<usize> {
    if value == 0 {
        return Err(err_at(entries, key, "must be at least 1"));
    }
    Ok(value)
}

fn digit(entries: &Entries, key: &str, default: u8) -> Result<u8> {
    let d: u8 = entries.parse(key, default)?;
    if d > 9 {
        return Err(err_at(entries, key, format!("`{d}` is not a digit")));
    }
    Ok(d)
}

fn tokenize(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::config(Some(line), content, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::config(Some(line), key, "unknown key"));
        }
        if value.is_empty() {
            return Err(Error::config(Some(line), key, "empty value"));
        }
        if let Some((first, ..)) = out.iter().find(|(_, k, _)| k == key) {
            return Err(Error::config(
                Some(line),
                key,
                format!("duplicate key (first set on line {first})"),
            ));
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Parses configuration text. Relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<SweepConfig> {
    let entries = Entries {
        map: tokenize(text)?
            .into_iter()
            .map(|(line, k, v)| (k, (line, v)))
            .collect(),
        base: base.to_path_buf(),
    };
    let noise_var: f64 = entries.parse("noise_var", 0.01)?;
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(err_at(
            &entries,
            "noise_var",
            "must be finite and non-negative",
        ));
    }
    let images = match entries.path("images") {
        Some((line, p)) => Some(existing_file("images", p, line)?),
        None => None,
    };
    let labels = match entries.path("labels") {
        Some((line, p)) => Some(existing_file("labels", p, line)?),
        None => None,
    };
    if images.is_some() != labels.is_some() {
        let key = if images.is_some() { "labels" } else { "images" };
        return Err(Error::config(
            None,
            key,
            "`images` and `labels` must be given together",
        ));
    }
    let cfg = SweepConfig {
        geometry: parse_geometry(&entries)?,
        padding: entries.parse("padding", Padding::Zero)?,
        architecture: entries.parse("architecture", Architecture::Pooling)?,
        propagation: parse_propagation(&entries)?,
        depths: parse_depths(&entries)?,
        family: parse_family(&entries)?,
        sigma: parse_sigma(&entries)?,
        beta: parse_beta(&entries)?,
        noise_var,
        n: positive(&entries, "n", entries.parse("n", 10)?)?,
        bias_trials: positive(&entries, "bias_trials", entries.parse("bias_trials", 500)?)?,
        variance_trials: positive(
            &entries,
            "variance_trials",
            entries.parse("variance_trials", 2000)?,
        )?,
        risk_trials: positive(&entries, "risk_trials", entries.parse("risk_trials", 2000)?)?,
        test_points: positive(&entries, "test_points", entries.parse("test_points", 100)?)?,
        seed: entries.parse("seed", 0)?,
        output_dir: entries
            .path("output_dir")
            .map_or_else(|| base.join("out"), |(_, p)| p),
        images,
        labels,
        digit_pos: digit(&entries, "digit_pos", 0)?,
        digit_neg: digit(&entries, "digit_neg", 1)?,
        count_per_class: positive(
            &entries,
            "count_per_class",
            entries.parse("count_per_class", 50)?,
        )?,
        mnist_trials: positive(&entries, "mnist_trials", entries.parse("mnist_trials", 20)?)?,
        shuffle: entries.parse("shuffle", false)?,
    };
    if cfg.digit_pos == cfg.digit_neg {
        return Err(err_at(
            &entries,
            "digit_neg",
            "must differ from `digit_pos`",
        ));
    }
    if let Family::Aligned { .. } = cfg.family {
        if cfg.depths.contains(&Depth::Infinite) {
            return Err(err_at(
                &entries,
                "depths",
                "the aligned family has no infinite depth",
            ));
        }
    }
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config(
            None,
            &path.display().to_string(),
            format!("cannot read config file: {e}"),
        )
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}
