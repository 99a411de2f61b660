use prediff::imaging::{
    decode_pnm, encode_pam, encode_pnm, load_image, render_scores, save_image, save_rendered, top_percent_mask,
    DEFAULT_SATURATION_QUANTILE,
};
use prediff::rng::{Purpose, Stream};
use prediff::Image;

fn byte_image(h: usize, w: usize, c: usize, seed: u64) -> Image {
    let mut s = Stream::new(seed, Purpose::Auxiliary, 20, 0);
    Image::new(h, w, c, (0..h * w * c).map(|_| s.index(256) as f64 / 255.0).collect()).unwrap()
}

#[test]
fn pnm_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (c, name) in [(3, "a.ppm"), (1, "b.pgm")] {
        let img = byte_image(13, 7, c, c as u64);
        let path = dir.path().join(name);
        save_image(&path, &img).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back: Image = load_image(&path).unwrap();
        assert_eq!(back, img);
        assert_eq!(encode_pnm(&back).unwrap(), bytes);
    }
}

#[test]
fn header_comments_and_truncation() {
    let img: Image = decode_pnm(b"P6\n# made by hand\n2 1\n255\n\x00\xff\x00\xff\x00\x00").unwrap();
    assert_eq!(img.data(), &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    let err = decode_pnm::<f64>(b"P6\n2 2\n255\n\x00\x00\x00").unwrap_err();
    assert!(matches!(err, prediff::Error::Format(_)));
    assert!(decode_pnm::<f64>(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00").is_err());
}

fn signed_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut s = Stream::new(seed, Purpose::Auxiliary, 21, 0);
    (0..n).map(|_| s.standard_normal()).collect()
}

#[test]
fn rendering_is_invariant_to_positive_scaling() {
    let scores = signed_scores(20 * 20, 4);
    let overlay = byte_image(20, 20, 3, 9);
    let base = render_scores(20, 20, &scores, Some(&overlay), DEFAULT_SATURATION_QUANTILE).unwrap();
    for factor in [3.0, 0.1, 1e5] {
        let scaled: Vec<f64> = scores.iter().map(|s| s * factor).collect();
        let other = render_scores(20, 20, &scaled, Some(&overlay), DEFAULT_SATURATION_QUANTILE).unwrap();
        assert_eq!(base, other, "factor {factor}");
    }
}

#[test]
fn rendered_outputs_and_mask() {
    let dir = tempfile::tempdir().unwrap();
    let scores = signed_scores(10 * 10, 8);
    let heat = render_scores(10, 10, &scores, None, 1.0).unwrap();
    let pam = encode_pam(&heat);
    assert!(pam.starts_with(b"P7\nWIDTH 10\nHEIGHT 10\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n"));
    assert_eq!(pam.len() - pam.windows(7).position(|w| w == b"ENDHDR\n").unwrap() - 7, 400);
    save_rendered(dir.path().join("h.pam"), &heat).unwrap();
    let mask = top_percent_mask(10, 10, &scores, 5.0).unwrap();
    assert_eq!(mask.count(), 5);
    let mut sorted: Vec<f64> = scores.iter().map(|s| s.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for (i, &m) in mask.data.iter().enumerate() {
        assert_eq!(m, scores[i].abs() >= sorted[4]);
    }
}
