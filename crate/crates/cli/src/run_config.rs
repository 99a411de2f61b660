//! Text format for reproducible `explain` runs.
//!
//! One `key=value` per line; blank lines and `#` comments are skipped.
//! Keys under `sha256.` and `resolved.` are informational (a run manifest
//! carries them) and are ignored when parsing, so a manifest can be fed
//! back through `prediff run --config`.

use crate::error::{CliError, CliResult};
use prediff::imaging::DEFAULT_SATURATION_QUANTILE;
use prediff::ClassLayer;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassChoice {
    /// The class the network predicts for the unperturbed image.
    Auto,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    /// Fitted Gaussian patch model file (conditional sampling).
    Model(PathBuf),
    /// Directory of images to draw windows from (marginal sampling).
    Marginal(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub net: PathBuf,
    pub image: PathBuf,
    pub source: SourceSpec,
    pub out: PathBuf,
    pub k: usize,
    pub l: usize,
    pub samples: usize,
    pub class: ClassChoice,
    pub layer: ClassLayer,
    pub seed: u64,
    pub stride: usize,
    pub laplace: bool,
    /// Thread count; never changes the result.
    pub workers: Option<usize>,
    pub overlay: bool,
    pub quantile: f64,
    pub top_percent: f64,
}

impl RunConfig {
    /// Default analysis settings (k=10, l=14, S=20) around the given paths.
    pub fn new(net: PathBuf, image: PathBuf, source: SourceSpec, out: PathBuf) -> Self {
        Self {
            net,
            image,
            source,
            out,
            k: 10,
            l: 14,
            samples: 20,
            class: ClassChoice::Auto,
            layer: ClassLayer::Probabilities,
            seed: 0,
            stride: 1,
            laplace: true,
            workers: None,
            overlay: true,
            quantile: DEFAULT_SATURATION_QUANTILE,
            top_percent: 5.0,
        }
    }

    pub fn sampler_name(&self) -> &'static str {
        match self.source {
            SourceSpec::Model(_) => "conditional",
            SourceSpec::Marginal(_) => "marginal",
        }
    }

    pub fn to_text(&self) -> CliResult<String> {
        let path = |p: &PathBuf| -> CliResult<String> {
            let s = p.to_str().ok_or_else(|| CliError::validation(format!("path {} is not UTF-8", p.display())))?;
            if s.contains('\n') || s.contains('\r') || s.trim() != s {
                return Err(CliError::validation("paths must not contain line breaks or surrounding spaces"));
            }
            Ok(s.to_string())
        };
        let mut t = String::from("# prediff run configuration\ncommand=explain\n");
        t += &format!("net={}\nimage={}\n", path(&self.net)?, path(&self.image)?);
        match &self.source {
            SourceSpec::Model(p) => t += &format!("model={}\n", path(p)?),
            SourceSpec::Marginal(p) => t += &format!("marginal={}\n", path(p)?),
        }
        t += &format!("out={}\n", path(&self.out)?);
        t += &format!("k={}\nl={}\nsamples={}\n", self.k, self.l, self.samples);
        t += &format!(
            "class={}\n",
            match self.class {
                ClassChoice::Auto => "auto".to_string(),
                ClassChoice::Index(c) => c.to_string(),
            }
        );
        t += &format!("layer={}\n", layer_name(self.layer));
        t += &format!("sampler={}\n", self.sampler_name());
        t += &format!("seed={}\nstride={}\n", self.seed, self.stride);
        t += &format!("laplace={}\n", on_off(self.laplace));
        t += &format!("workers={}\n", self.workers.map_or("auto".to_string(), |w| w.to_string()));
        t += &format!("overlay={}\n", on_off(self.overlay));
        t += &format!("quantile={}\ntop_percent={}\n", self.quantile, self.top_percent);
        Ok(t)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::validation(format!("config line {}: expected key=value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.starts_with("sha256.") || k.starts_with("resolved.") {
                continue;
            }
            if kv.insert(k, v).is_some() {
                return Err(CliError::validation(format!("config line {}: duplicate key '{k}'", n + 1)));
            }
        }
        let mut take = |key: &str| kv.remove(key);
        if let Some(cmd) = take("command") {
            if cmd != "explain" {
                return Err(CliError::validation(format!("config command '{cmd}' is not supported; expected explain")));
            }
        }
        let required = |v: Option<&str>, key: &str| -> CliResult<String> {
            v.map(str::to_string).ok_or_else(|| CliError::validation(format!("config is missing '{key}'")))
        };
        let net = PathBuf::from(required(take("net"), "net")?);
        let image = PathBuf::from(required(take("image"), "image")?);
        let out = PathBuf::from(required(take("out"), "out")?);
        let source = match (take("model"), take("marginal")) {
            (Some(m), None) => SourceSpec::Model(m.into()),
            (None, Some(d)) => SourceSpec::Marginal(d.into()),
            _ => return Err(CliError::validation("config needs exactly one of 'model' or 'marginal'")),
        };
        let mut cfg = RunConfig::new(net, image, source, out);
        if let Some(s) = take("sampler") {
            if s != cfg.sampler_name() {
                return Err(CliError::validation(format!(
                    "sampler={s} conflicts with the {} source",
                    cfg.sampler_name()
                )));
            }
        }
        macro_rules! num {
            ($key:literal, $field:expr) => {
                if let Some(v) = take($key) {
                    $field = v.parse().map_err(|_| CliError::validation(format!("config '{}': bad value '{v}'", $key)))?;
                }
            };
        }
        num!("k", cfg.k);
        num!("l", cfg.l);
        num!("samples", cfg.samples);
        num!("seed", cfg.seed);
        num!("stride", cfg.stride);
        num!("quantile", cfg.quantile);
        num!("top_percent", cfg.top_percent);
        if let Some(v) = take("class") {
            cfg.class = parse_class(v)?;
        }
        if let Some(v) = take("layer") {
            cfg.layer = parse_layer(v)?;
        }
        if let Some(v) = take("laplace") {
            cfg.laplace = parse_on_off("laplace", v)?;
        }
        if let Some(v) = take("overlay") {
            cfg.overlay = parse_on_off("overlay", v)?;
        }
        if let Some(v) = take("workers") {
            cfg.workers = match v {
                "auto" => None,
                n => Some(n.parse().map_err(|_| CliError::validation(format!("config 'workers': bad value '{n}'")))?),
            };
        }
        if let Some(k) = kv.keys().next() {
            return Err(CliError::validation(format!("unknown config key '{k}'")));
        }
        Ok(cfg)
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn parse_on_off(key: &str, v: &str) -> CliResult<bool> {
    match v {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(CliError::validation(format!("config '{key}': expected on or off, got '{v}'"))),
    }
}

pub fn layer_name(layer: ClassLayer) -> &'static str {
    match layer {
        ClassLayer::Probabilities => "output",
        ClassLayer::Logits => "logits",
    }
}

pub fn parse_layer(v: &str) -> CliResult<ClassLayer> {
    match v {
        "output" => Ok(ClassLayer::Probabilities),
        "logits" => Ok(ClassLayer::Logits),
        _ => Err(CliError::validation(format!("layer must be output or logits, got '{v}'"))),
    }
}

pub fn parse_class(v: &str) -> CliResult<ClassChoice> {
    match v {
        "auto" => Ok(ClassChoice::Auto),
        n => n
            .parse()
            .map(ClassChoice::Index)
            .map_err(|_| CliError::validation(format!("class must be a non-negative integer or auto, got '{n}'"))),
    }
}
