//! Subcommand implementations. Progress goes to stderr; each command
//! returns the one-line JSON summary printed on stdout.

use crate::args::{DeepvisArgs, ExplainArgs, FitModelArgs, RenderArgs, RunArgs, SensitivityArgs};
use crate::error::{CliError, CliResult};
use crate::outputs::{file_digest, Manifest, Outputs};
use crate::run_config::{layer_name, parse_class, parse_layer, ClassChoice, RunConfig, SourceSpec};
use prediff::classifier::load_network;
use prediff::deepvis::{feature_map_relevance, unit_relevance};
use prediff::imaging::{encode_pam, encode_pnm, load_image, render_scores, top_percent_mask};
use prediff::patch_model::{encode_model, extract_corpus, load_model};
use prediff::{
    explain, ExplainConfig, GaussianPatchModel, Image, Laplace, LayerTap, MarginalSampler, Network, PatchGeometry,
    PatchSource, RelevanceMap, SamplerKind, Selection, Shape, Target,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn progress(msg: impl AsRef<str>) {
    eprintln!("prediff: {}", msg.as_ref());
}

fn with_path(path: &Path) -> impl Fn(prediff::Error) -> CliError + '_ {
    move |e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    }
}

fn read_net(path: &Path) -> CliResult<Network> {
    progress(format!("loading network {}", path.display()));
    load_network(path).map_err(with_path(path))
}

fn read_image(path: &Path) -> CliResult<Image> {
    load_image(path).map_err(with_path(path))
}

fn read_model(path: &Path) -> CliResult<GaussianPatchModel> {
    progress(format!("loading patch model {}", path.display()));
    load_model(path).map_err(with_path(path))
}

fn is_image_file(p: &Path) -> bool {
    let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("ppm" | "pgm" | "pnm") => true,
        Some("png") => cfg!(feature = "png"),
        _ => false,
    }
}

/// Every loadable image in `dir`, in file-name order.
fn read_image_dir(dir: &Path) -> CliResult<Vec<(PathBuf, Image)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image_file(p))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::validation(format!("{} contains no images", dir.display())));
    }
    paths.into_iter().map(|p| read_image(&p).map(|img| (p, img))).collect()
}

fn check_image(net: &Network, image: &Image, path: &Path) -> CliResult<()> {
    let got = Shape::new(image.height(), image.width(), image.channels());
    if got != net.input_shape() {
        return Err(CliError::validation(format!(
            "{}: image shape {got} does not match network input {}",
            path.display(),
            net.input_shape()
        )));
    }
    Ok(())
}

fn check_class(net: &Network, class: ClassChoice) -> CliResult<()> {
    match class {
        ClassChoice::Index(c) if c >= net.num_classes() => Err(CliError::validation(format!(
            "class {c} out of range for a network with {} classes",
            net.num_classes()
        ))),
        _ => Ok(()),
    }
}

fn resolve_class(net: &Network, image: &Image, class: ClassChoice) -> CliResult<usize> {
    Ok(match class {
        ClassChoice::Index(c) => c,
        ClassChoice::Auto => net.forward(image)?.argmax(),
    })
}

fn check_render(r: &RenderArgs) -> CliResult<()> {
    if !(r.quantile > 0.5 && r.quantile <= 1.0) {
        return Err(CliError::validation(format!("--quantile must lie in (0.5, 1], got {}", r.quantile)));
    }
    if !(r.top_percent > 0.0 && r.top_percent <= 100.0) {
        return Err(CliError::validation(format!("--top-percent must lie in (0, 100], got {}", r.top_percent)));
    }
    Ok(())
}

fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> CliResult<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            progress(format!("using {n} worker threads"));
            Ok(prediff::parallel::with_workers(Some(n), f)?)
        }
    }
}

/// Heatmap (PAM with alpha, and PPM flattened on white), optional overlay
/// and top-percent mask.
fn write_renderings(
    outs: &mut Outputs,
    dir: &Path,
    image: &Image,
    scores: &[f64],
    render: &RenderArgs,
) -> CliResult<()> {
    let (h, w) = (image.height(), image.width());
    let heat = render_scores(h, w, scores, None, render.quantile)?;
    outs.write("heatmap.pam", dir.join("heatmap.pam"), &encode_pam(&heat))?;
    outs.write("heatmap.ppm", dir.join("heatmap.ppm"), &encode_pnm(&heat.flatten([255, 255, 255]))?)?;
    if !render.no_overlay {
        let over = render_scores(h, w, scores, Some(image), render.quantile)?;
        outs.write("overlay.ppm", dir.join("overlay.ppm"), &encode_pnm(&over.flatten([255, 255, 255]))?)?;
    }
    let mask = top_percent_mask(h, w, scores, render.top_percent)?;
    outs.write("mask.pgm", dir.join("mask.pgm"), &encode_pnm(&mask.to_image())?)?;
    Ok(())
}

fn finish(mut outs: Outputs, dir: &Path, mut manifest: Manifest) -> CliResult<Vec<String>> {
    for (label, _, digest) in outs.files() {
        manifest.push(format!("sha256.{label}"), digest);
    }
    outs.write("manifest.txt", dir.join("manifest.txt"), manifest.to_text().as_bytes())?;
    let names = outs.files().iter().map(|(l, _, _)| l.clone()).collect();
    outs.commit();
    Ok(names)
}

pub fn fit_model(a: &FitModelArgs) -> CliResult<Value> {
    let start = Instant::now();
    if a.l <= a.k || a.k == 0 {
        return Err(CliError::validation(format!("--l must exceed --k >= 1 (got k={}, l={})", a.k, a.l)));
    }
    if a.count == 0 {
        return Err(CliError::validation("--count must be at least 1"));
    }
    if !(a.eps >= 0.0 && a.eps.is_finite()) {
        return Err(CliError::validation(format!("--eps must be a finite non-negative number, got {}", a.eps)));
    }
    let images = read_image_dir(&a.images)?;
    progress(format!("loaded {} images from {}", images.len(), a.images.display()));
    let channels = images[0].1.channels();
    for (p, img) in &images {
        if img.channels() != channels {
            return Err(CliError::validation(format!(
                "{}: {} channels, expected {channels}",
                p.display(),
                img.channels()
            )));
        }
        if img.height() < a.l || img.width() < a.l {
            return Err(CliError::validation(format!(
                "{}: {}x{} is smaller than the {}x{} patch",
                p.display(),
                img.height(),
                img.width(),
                a.l,
                a.l
            )));
        }
    }
    let geometry = PatchGeometry::new(a.k, a.l, channels)?;
    let imgs: Vec<Image> = images.iter().map(|(_, i)| i.clone()).collect();
    progress(format!("extracting {} patches of {}x{}x{channels}", a.count, a.l, a.l));
    let corpus = extract_corpus(&imgs, geometry, a.count, a.seed)?;
    progress("estimating mean and covariance");
    let model = GaussianPatchModel::fit(&corpus, a.eps)?;

    let mut outs = Outputs::new();
    if let Some(parent) = a.out.parent() {
        outs.ensure_dir(parent)?;
    }
    outs.write("model", a.out.clone(), &encode_model(&model))?;
    let mut m = Manifest::new();
    m.push("command", "fit-model").push("resolved.version", VERSION);
    m.push("images", a.images.display()).push("k", a.k).push("l", a.l).push("count", a.count);
    m.push("eps", a.eps).push("seed", a.seed).push("out", a.out.display());
    m.push("resolved.channels", channels).push("resolved.image_count", images.len());
    for (p, _) in &images {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        m.push(format!("sha256.image.{name}"), file_digest(p)?);
    }
    let manifest_path = PathBuf::from(format!("{}.manifest", a.out.display()));
    for (label, _, digest) in outs.files() {
        m.push(format!("sha256.{label}"), digest);
    }
    outs.write("manifest", manifest_path.clone(), m.to_text().as_bytes())?;
    outs.commit();
    Ok(json!({
        "command": "fit-model",
        "status": "ok",
        "model": a.out,
        "manifest": manifest_path,
        "fit_count": model.fit_count(),
        "k": a.k,
        "l": a.l,
        "channels": channels,
        "dimension": geometry.outer_len(),
        "seconds": start.elapsed().as_secs_f64(),
    }))
}

pub fn explain_cmd(a: &ExplainArgs) -> CliResult<Value> {
    let source = match (&a.model, &a.marginal) {
        (Some(m), None) => SourceSpec::Model(m.clone()),
        (None, Some(d)) => SourceSpec::Marginal(d.clone()),
        _ => return Err(CliError::validation("give exactly one of --model or --marginal")),
    };
    let mut cfg = RunConfig::new(a.net.clone(), a.image.clone(), source, a.out.clone());
    if let Some(s) = &a.sampler {
        if s != cfg.sampler_name() {
            return Err(CliError::validation(format!(
                "--sampler {s} needs {}",
                if s == "conditional" { "--model" } else { "--marginal" }
            )));
        }
    }
    cfg.k = a.k;
    cfg.l = a.l;
    cfg.samples = a.samples;
    cfg.class = parse_class(&a.class)?;
    cfg.layer = parse_layer(&a.layer)?;
    cfg.seed = a.seed;
    cfg.stride = a.stride;
    cfg.laplace = !a.no_laplace;
    cfg.workers = a.workers;
    cfg.overlay = !a.render.no_overlay;
    cfg.quantile = a.render.quantile;
    cfg.top_percent = a.render.top_percent;
    run_explain(&cfg)
}

pub fn run(a: &RunArgs) -> CliResult<Value> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| CliError::io(format!("{}: {e}", a.config.display())))?;
    let cfg = RunConfig::parse(&text)?;
    progress(format!("running configuration {}", a.config.display()));
    run_explain(&cfg)
}

/// Runs one `explain` configuration and writes its outputs.
pub fn run_explain(cfg: &RunConfig) -> CliResult<Value> {
    let start = Instant::now();
    let render = RenderArgs { quantile: cfg.quantile, top_percent: cfg.top_percent, no_overlay: !cfg.overlay };
    check_render(&render)?;
    let config_text = cfg.to_text()?;
    let net = read_net(&cfg.net)?;
    check_class(&net, cfg.class)?;
    let image = read_image(&cfg.image)?;
    check_image(&net, &image, &cfg.image)?;
    let class = resolve_class(&net, &image, cfg.class)?;
    let laplace = if cfg.laplace { Some(Laplace::new(net.training_size().max(1), net.num_classes() as u32)?) } else { None };

    let mut manifest = Manifest::new();
    manifest.push_text(&config_text);
    manifest.push("resolved.version", VERSION).push("resolved.class", class);
    if let Some(lp) = laplace {
        manifest.push("resolved.laplace_training_size", lp.training_size).push("resolved.laplace_classes", lp.classes);
    }
    manifest.push("sha256.input.net", file_digest(&cfg.net)?);
    manifest.push("sha256.input.image", file_digest(&cfg.image)?);

    let (model, marginal) = match &cfg.source {
        SourceSpec::Model(p) => {
            let m = read_model(p)?;
            let g = m.geometry();
            if g.inner() != cfg.k || g.outer() != cfg.l || g.channels() != image.channels() {
                return Err(CliError::validation(format!(
                    "{}: model geometry k={}, l={}, C={} does not match k={}, l={}, C={}",
                    p.display(),
                    g.inner(),
                    g.outer(),
                    g.channels(),
                    cfg.k,
                    cfg.l,
                    image.channels()
                )));
            }
            manifest.push("sha256.input.model", file_digest(p)?);
            (Some(m), None)
        }
        SourceSpec::Marginal(dir) => {
            let images = read_image_dir(dir)?;
            progress(format!("loaded {} marginal source images", images.len()));
            for (p, img) in &images {
                if img.height() != image.height() || img.width() != image.width() || img.channels() != image.channels() {
                    return Err(CliError::validation(format!("{}: source image shape differs from the input", p.display())));
                }
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                manifest.push(format!("sha256.input.marginal.{name}"), file_digest(p)?);
            }
            let sampler = MarginalSampler::new(images.into_iter().map(|(_, i)| i).collect(), Selection::Random)?;
            (None, Some(sampler))
        }
    };
    let source = match (&model, &marginal) {
        (Some(m), _) => PatchSource::Conditional(m),
        (_, Some(s)) => PatchSource::Marginal(s),
        _ => unreachable!("one source is always loaded"),
    };
    let config = ExplainConfig {
        inner: cfg.k,
        outer: cfg.l,
        samples: cfg.samples,
        target: Target::Class { class, layer: cfg.layer },
        sampler: source.kind(),
        laplace,
        seed: cfg.seed,
        stride: cfg.stride,
    };
    config.validate()?;
    progress(format!(
        "explaining class {class} ({} sampling, k={}, l={}, S={})",
        cfg.sampler_name(),
        cfg.k,
        cfg.l,
        cfg.samples
    ));
    let map = with_workers(cfg.workers, || explain(&net, &image, source, &config))??;
    progress(format!("relevance computed in {:.1}s", start.elapsed().as_secs_f64()));

    let mut outs = Outputs::new();
    outs.ensure_dir(&cfg.out)?;
    outs.write("relevance.pdrm", cfg.out.join("relevance.pdrm"), &map.to_bytes())?;
    write_renderings(&mut outs, &cfg.out, &image, &map.scores, &render)?;
    let files = finish(outs, &cfg.out, manifest)?;
    Ok(json!({
        "command": "explain",
        "status": "ok",
        "class": class,
        "layer": layer_name(cfg.layer),
        "sampler": cfg.sampler_name(),
        "measure": map.measure.as_str(),
        "max_abs": map.max_abs(),
        "out": cfg.out,
        "files": files,
        "seconds": start.elapsed().as_secs_f64(),
    }))
}

pub fn deepvis(a: &DeepvisArgs) -> CliResult<Value> {
    let start = Instant::now();
    check_render(&a.render)?;
    if a.subsample.is_some() && a.unit.is_some() {
        return Err(CliError::validation("--subsample applies to --map only"));
    }
    let net = read_net(&a.net)?;
    let tap = match (a.map, a.unit) {
        (Some(m), None) => LayerTap::feature_map(&a.layer, m),
        (None, Some(u)) => LayerTap::unit(&a.layer, u),
        _ => return Err(CliError::validation("give exactly one of --map or --unit")),
    };
    net.resolve_tap(&tap)?;
    let image = read_image(&a.image)?;
    check_image(&net, &image, &a.image)?;
    let model = read_model(&a.model)?;
    let g = model.geometry();
    if g.channels() != image.channels() {
        return Err(CliError::validation(format!(
            "{}: model has {} channels, image has {}",
            a.model.display(),
            g.channels(),
            image.channels()
        )));
    }
    let config = ExplainConfig {
        inner: g.inner(),
        outer: g.outer(),
        samples: a.samples,
        target: Target::Unit(tap.clone()),
        sampler: SamplerKind::Conditional,
        laplace: None,
        seed: a.seed,
        stride: 1,
    };
    config.validate()?;
    let source = PatchSource::Conditional(&model);
    progress(format!("analysing layer '{}' (k={}, l={}, S={})", a.layer, g.inner(), g.outer(), a.samples));

    let (map, report): (RelevanceMap, _) = match a.map {
        Some(m) => {
            let r = with_workers(a.workers, || {
                feature_map_relevance(&net, &image, &a.layer, m, source, &config, a.subsample, false)
            })??;
            (r.averaged.clone(), Some(r))
        }
        None => (with_workers(a.workers, || unit_relevance(&net, &image, &tap, source, &config))??, None),
    };

    let mut manifest = Manifest::new();
    manifest.push("command", "deepvis").push("resolved.version", VERSION);
    manifest.push("net", a.net.display()).push("image", a.image.display()).push("model", a.model.display());
    manifest.push("layer", &a.layer);
    match (a.map, a.unit) {
        (Some(m), _) => manifest.push("map", m),
        (_, Some(u)) => manifest.push("unit", u),
        _ => unreachable!(),
    };
    manifest.push("subsample", a.subsample.map_or("none".to_string(), |s| s.to_string()));
    manifest.push("samples", a.samples).push("seed", a.seed).push("k", g.inner()).push("l", g.outer());
    manifest.push("quantile", a.render.quantile).push("top_percent", a.render.top_percent);
    manifest.push("overlay", if a.render.no_overlay { "off" } else { "on" });
    manifest.push("out", a.out.display());
    manifest.push("sha256.input.net", file_digest(&a.net)?);
    manifest.push("sha256.input.image", file_digest(&a.image)?);
    manifest.push("sha256.input.model", file_digest(&a.model)?);

    let mut outs = Outputs::new();
    outs.ensure_dir(&a.out)?;
    outs.write("relevance.pdrm", a.out.join("relevance.pdrm"), &map.to_bytes())?;
    if let Some(r) = &report {
        outs.write("units.txt", a.out.join("units.txt"), r.sidecar().as_bytes())?;
    }
    write_renderings(&mut outs, &a.out, &image, &map.scores, &a.render)?;
    let files = finish(outs, &a.out, manifest)?;
    Ok(json!({
        "command": "deepvis",
        "status": "ok",
        "layer": a.layer,
        "units": report.as_ref().map_or(1, |r| r.unit_count()),
        "subsample_seed": report.as_ref().and_then(|r| r.subsample_seed),
        "max_abs": map.max_abs(),
        "out": a.out,
        "files": files,
        "seconds": start.elapsed().as_secs_f64(),
    }))
}

/// Plain-text sensitivity values: a `height width` line, then one row per line.
pub fn sensitivity_text(h: usize, w: usize, data: &[f64]) -> String {
    let mut s = format!("{h} {w}\n");
    for row in data.chunks(w) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn sensitivity(a: &SensitivityArgs) -> CliResult<Value> {
    let start = Instant::now();
    check_render(&a.render)?;
    let choice = parse_class(&a.class)?;
    let net = read_net(&a.net)?;
    check_class(&net, choice)?;
    let image = read_image(&a.image)?;
    check_image(&net, &image, &a.image)?;
    let class = resolve_class(&net, &image, choice)?;
    progress(format!("backpropagating class {class}"));
    let smap = net.sensitivity_map(&image, class)?;

    let mut manifest = Manifest::new();
    manifest.push("command", "sensitivity").push("resolved.version", VERSION);
    manifest.push("net", a.net.display()).push("image", a.image.display()).push("class", &a.class);
    manifest.push("resolved.class", class);
    manifest.push("quantile", a.render.quantile).push("top_percent", a.render.top_percent);
    manifest.push("overlay", if a.render.no_overlay { "off" } else { "on" });
    manifest.push("out", a.out.display());
    manifest.push("sha256.input.net", file_digest(&a.net)?);
    manifest.push("sha256.input.image", file_digest(&a.image)?);

    let mut outs = Outputs::new();
    outs.ensure_dir(&a.out)?;
    let text = sensitivity_text(smap.height, smap.width, &smap.data);
    outs.write("sensitivity.txt", a.out.join("sensitivity.txt"), text.as_bytes())?;
    write_renderings(&mut outs, &a.out, &image, &smap.data, &a.render)?;
    let files = finish(outs, &a.out, manifest)?;
    let max = smap.data.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(json!({
        "command": "sensitivity",
        "status": "ok",
        "class": class,
        "max": max,
        "out": a.out,
        "files": files,
        "seconds": start.elapsed().as_secs_f64(),
    }))
}

