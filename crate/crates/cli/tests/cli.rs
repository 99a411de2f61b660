use prediff::classifier::save_network;
use prediff::imaging::{load_image, render_scores, save_image};
use prediff::synthetic::{random_conv_net, smooth_image};
use prediff::{Image, Layer, LayerKind, Network, Shape};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let net: Network = random_conv_net(Shape::new(16, 16, 3), (4, 3), 5, 1).unwrap();
        save_network(&net, dir.path().join("net.pdn")).unwrap();
        std::fs::create_dir(dir.path().join("images")).unwrap();
        for s in 0..4 {
            let img: Image = smooth_image(16, 16, 3, 30 + s);
            save_image(dir.path().join(format!("images/img{s}.ppm")), &img).unwrap();
        }
        save_image(dir.path().join("x.ppm"), &smooth_image::<f64>(16, 16, 3, 99)).unwrap();
        Self { dir }
    }

    fn path(&self, p: &str) -> PathBuf {
        self.dir.path().join(p)
    }

    fn s(&self, p: &str) -> String {
        self.path(p).display().to_string()
    }

    fn fit(&self, out: &str) -> Output {
        prediff(&["fit-model", "--images", &self.s("images"), "--k", "2", "--l", "4", "--count", "500", "--seed", "3", "--out", &self.s(out)])
    }

    fn explain(&self, out: &str, extra: &[&str]) -> Output {
        let mut args = vec![
            "explain".to_string(), "--net".into(), self.s("net.pdn"), "--image".into(), self.s("x.ppm"),
            "--model".into(), self.s("m.pdgm"), "--k".into(), "2".into(), "--l".into(), "4".into(),
            "--samples".into(), "3".into(), "--seed".into(), "5".into(), "--out".into(), self.s(out),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        prediff(&args.iter().map(String::as_str).collect::<Vec<_>>())
    }
}

fn prediff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prediff")).args(args).output().unwrap()
}

fn summary(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 1, "stdout must be one line: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn fit_model_is_deterministic_and_validates_geometry() {
    let f = Fixture::new();
    let a = f.fit("m1.pdgm");
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let s = summary(&a);
    assert_eq!(s["fit_count"], 500);
    assert_eq!(s["dimension"], 48);
    assert!(f.fit("m2.pdgm").status.success());
    assert_eq!(read(&f.path("m1.pdgm")), read(&f.path("m2.pdgm")));
    assert!(f.path("m1.pdgm.manifest").exists());

    let bad = prediff(&["fit-model", "--images", &f.s("images"), "--k", "4", "--l", "4", "--out", &f.s("bad.pdgm")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!f.path("bad.pdgm").exists());
    assert_eq!(summary(&bad)["status"], "error");
    let missing = prediff(&["fit-model", "--images", &f.s("nope"), "--k", "2", "--l", "4", "--out", &f.s("x.pdgm")]);
    assert_eq!(missing.status.code(), Some(2));
    let usage = prediff(&["fit-model", "--k", "2"]);
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn explain_writes_outputs_and_reproduces() {
    let f = Fixture::new();
    assert!(f.fit("m.pdgm").status.success());
    let one = f.explain("o1", &["--workers", "1"]);
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    let s = summary(&one);
    assert_eq!(s["measure"], "weight-of-evidence");
    for name in ["relevance.pdrm", "heatmap.pam", "heatmap.ppm", "overlay.ppm", "mask.pgm", "manifest.txt"] {
        assert!(f.path("o1").join(name).exists(), "{name}");
    }
    assert!(f.explain("o8", &["--workers", "8"]).status.success());
    assert_eq!(read(&f.path("o1/relevance.pdrm")), read(&f.path("o8/relevance.pdrm")));

    // The manifest is itself a run configuration.
    let manifest = std::fs::read_to_string(f.path("o1/manifest.txt")).unwrap();
    assert!(manifest.contains("resolved.class="));
    assert!(manifest.contains("sha256.relevance.pdrm="));
    let rerun = manifest.replace(&format!("out={}", f.s("o1")), &format!("out={}", f.s("o3")));
    std::fs::write(f.path("rerun.cfg"), rerun).unwrap();
    let r = prediff(&["run", "--config", &f.s("rerun.cfg")]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read(&f.path("o1/relevance.pdrm")), read(&f.path("o3/relevance.pdrm")));

    let mask: Image = load_image(f.path("o1/mask.pgm")).unwrap();
    assert_eq!(mask.data().iter().filter(|&&v| v == 1.0).count(), 13);
}

#[test]
fn class_out_of_range_fails_before_any_work() {
    let f = Fixture::new();
    let o = prediff(&[
        "explain", "--net", &f.s("net.pdn"), "--image", &f.s("x.ppm"), "--model", &f.s("missing.pdgm"),
        "--class", "7", "--out", &f.s("out"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&o);
    assert!(s["message"].as_str().unwrap().contains("class 7 out of range"), "{s}");
    assert!(!f.path("out").exists());
}

#[test]
fn geometry_and_sampler_mismatches_are_rejected() {
    let f = Fixture::new();
    assert!(f.fit("m.pdgm").status.success());
    let o = f.explain("g", &["--k", "3", "--l", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!f.path("g").exists());
    let o = f.explain("g", &["--sampler", "marginal"]);
    assert_eq!(o.status.code(), Some(1));
    let m = prediff(&[
        "explain", "--net", &f.s("net.pdn"), "--image", &f.s("x.ppm"), "--marginal", &f.s("images"), "--k", "2",
        "--l", "4", "--samples", "2", "--layer", "logits", "--out", &f.s("marg"),
    ]);
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    assert_eq!(summary(&m)["measure"], "activation-difference");
}

#[test]
fn partial_outputs_are_removed_on_failure() {
    let f = Fixture::new();
    assert!(f.fit("m.pdgm").status.success());
    // A directory where the mask file should go makes the final writes fail.
    std::fs::create_dir_all(f.path("p/mask.pgm")).unwrap();
    let o = f.explain("p", &[]);
    assert_eq!(o.status.code(), Some(2));
    let left: Vec<_> = std::fs::read_dir(f.path("p")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, vec![std::ffi::OsString::from("mask.pgm")]);
    // A freshly created output tree is removed entirely.
    let o = f.explain("q/r/s", &["--quantile", "0.3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!f.path("q").exists());
}

#[test]
fn deepvis_units_and_maps() {
    let f = Fixture::new();
    assert!(f.fit("m.pdgm").status.success());
    let base = |out: &str| {
        vec![
            "deepvis".to_string(), "--net".into(), f.s("net.pdn"), "--image".into(), f.s("x.ppm"), "--model".into(),
            f.s("m.pdgm"), "--samples".into(), "2".into(), "--out".into(), f.s(out),
        ]
    };
    let run = |out: &str, extra: &[&str]| {
        let mut a = base(out);
        a.extend(extra.iter().map(|s| s.to_string()));
        prediff(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let dense = run("d", &["--layer", "fc", "--map", "0"]);
    assert_eq!(dense.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&dense.stderr).contains("layer 'fc' is not convolutional"));

    let a = run("a", &["--layer", "relu1", "--map", "1", "--subsample", "16", "--seed", "4"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(summary(&a)["units"], 16);
    assert!(run("b", &["--layer", "relu1", "--map", "1", "--subsample", "16", "--seed", "4"]).status.success());
    let units = std::fs::read_to_string(f.path("a/units.txt")).unwrap();
    assert_eq!(units, std::fs::read_to_string(f.path("b/units.txt")).unwrap());
    assert!(units.contains("subsample_seed=4"));

    let u = run("u", &["--layer", "prob", "--unit", "2"]);
    assert!(u.status.success());
    let map = prediff::RelevanceMap::<f64>::load(f.path("u/relevance.pdrm")).unwrap();
    assert_eq!(map.measure, prediff::Measure::ActivationDifference);
}

#[test]
fn sensitivity_matches_the_library() {
    let f = Fixture::new();
    let o = prediff(&["sensitivity", "--net", &f.s("net.pdn"), "--image", &f.s("x.ppm"), "--class", "3", "--out", &f.s("s")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let net: Network = prediff::classifier::load_network(f.path("net.pdn")).unwrap();
    let x: Image = load_image(f.path("x.ppm")).unwrap();
    let want = net.sensitivity_map(&x, 3).unwrap();
    let text = std::fs::read_to_string(f.path("s/sensitivity.txt")).unwrap();
    let got: Vec<f64> = text.lines().skip(1).flat_map(|l| l.split(' ').map(|v| v.parse::<f64>().unwrap())).collect();
    assert_eq!(got, want.data);
    let heat = render_scores(16, 16, &want.data, None, 0.99).unwrap();
    assert_eq!(read(&f.path("s/heatmap.pam")), prediff::imaging::encode_pam(&heat));

    // Zero weights: zero gradient, fully transparent heatmap.
    let zero = Network::<f64>::new(
        Shape::new(16, 16, 3),
        100,
        vec![
            Layer::new("fc", LayerKind::Dense { inputs: 768, outputs: 2, weights: vec![0.0; 1536], biases: vec![0.0; 2] }),
            Layer::new("prob", LayerKind::Softmax),
        ],
    )
    .unwrap();
    save_network(&zero, f.path("zero.pdn")).unwrap();
    let o = prediff(&["sensitivity", "--net", &f.s("zero.pdn"), "--image", &f.s("x.ppm"), "--out", &f.s("z")]);
    assert!(o.status.success());
    let pam = read(&f.path("z/heatmap.pam"));
    assert!(pam[pam.len() - 16 * 16 * 4..].iter().all(|&b| b == 0));
}
