use super::RenderedImage;
use crate::error::{validation, Result};
use crate::image::Image;
use crate::relevance::RelevanceMap;
use crate::scalar::Scalar;

/// Saturation quantile used when none is given.
pub const DEFAULT_SATURATION_QUANTILE: f64 = 0.99;

const RED: [f64; 3] = [1.0, 0.0, 0.0];
const BLUE: [f64; 3] = [0.0, 0.0, 1.0];

/// Nearest-rank `q`-quantile of `|scores|`.
pub fn abs_quantile<T: Scalar>(scores: &[T], q: f64) -> T {
    if scores.is_empty() {
        return T::zero();
    }
    let mut mags: Vec<T> = scores.iter().map(|s| s.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let rank = ((q * mags.len() as f64).ceil() as usize).clamp(1, mags.len());
    mags[rank - 1]
}

fn to_byte(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Signed heatmap of raw scores: positive red, negative blue, opacity
/// `min(|s| / m, 1)` with `m` the `q`-quantile of `|scores|`. With an
/// overlay the colours are composited onto its grayscale version.
pub fn render_scores<T: Scalar>(
    height: usize,
    width: usize,
    scores: &[T],
    overlay: Option<&Image<T>>,
    q: f64,
) -> Result<RenderedImage> {
    if !(q > 0.5 && q <= 1.0) {
        return Err(validation(format!("saturation quantile must lie in (0.5, 1], got {q}")));
    }
    if scores.len() != height * width {
        return Err(validation("score array does not match the map shape"));
    }
    let gray = match overlay {
        Some(img) => {
            if img.height() != height || img.width() != width {
                return Err(validation(format!(
                    "overlay image is {}x{}, map is {height}x{width}",
                    img.height(),
                    img.width()
                )));
            }
            Some(img.to_grayscale())
        }
        None => None,
    };
    let m = abs_quantile(scores, q).to_f64_lossy();
    let mut rgba = Vec::with_capacity(height * width * 4);
    for (i, s) in scores.iter().enumerate() {
        let s = s.to_f64_lossy();
        let (alpha, color) = if m > 0.0 && s != 0.0 {
            ((s.abs() / m).min(1.0), if s > 0.0 { RED } else { BLUE })
        } else {
            (0.0, [0.0; 3])
        };
        match &gray {
            Some(g) => {
                let base = g.data()[i].to_f64_lossy();
                for c in color {
                    rgba.push(to_byte(alpha * c + (1.0 - alpha) * base));
                }
                rgba.push(255);
            }
            None => {
                let a = to_byte(alpha);
                if a == 0 {
                    rgba.extend([0, 0, 0, 0]);
                } else {
                    rgba.extend(color.map(to_byte));
                    rgba.push(a);
                }
            }
        }
    }
    Ok(RenderedImage { height, width, rgba })
}

pub fn render_heatmap<T: Scalar>(map: &RelevanceMap<T>, overlay: Option<&Image<T>>, q: f64) -> Result<RenderedImage> {
    render_scores(map.height, map.width, &map.scores, overlay, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_map_is_transparent() {
        let r = render_scores(3, 4, &[0.0f64; 12], None, 0.99).unwrap();
        assert!(r.rgba.iter().all(|&b| b == 0));
    }

    #[test]
    fn single_peak_is_pure_red() {
        let mut s = vec![0.0f64; 9];
        s[4] = 2.5;
        let r = render_scores(3, 3, &s, None, 1.0).unwrap();
        assert_eq!(r.pixel(1, 1), [255, 0, 0, 255]);
        assert_eq!(r.pixel(0, 0), [0, 0, 0, 0]);
    }

    #[test]
    fn rejects_bad_quantile() {
        assert!(render_scores(1, 1, &[1.0f64], None, 0.5).is_err());
        assert!(render_scores(1, 1, &[1.0f64], None, 1.01).is_err());
    }

    #[test]
    fn overlay_composites_onto_gray() {
        let img = Image::new(1, 2, 3, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = render_scores(1, 2, &[0.0, -1.0], Some(&img), 1.0).unwrap();
        assert_eq!(r.pixel(0, 0), [255, 255, 255, 255]);
        assert_eq!(r.pixel(0, 1), [0, 0, 255, 255]);
    }

    proptest! {
        #[test]
        fn negation_swaps_red_and_blue(scores in prop::collection::vec(-5.0f64..5.0, 16), q in 0.51f64..=1.0) {
            let a = render_scores(4, 4, &scores, None, q).unwrap();
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let b = render_scores(4, 4, &neg, None, q).unwrap();
            for (pa, pb) in a.rgba.chunks(4).zip(b.rgba.chunks(4)) {
                prop_assert_eq!(pa[0], pb[2]);
                prop_assert_eq!(pa[2], pb[0]);
                prop_assert_eq!(pa[1], pb[1]);
                prop_assert_eq!(pa[3], pb[3]);
            }
        }

        #[test]
        fn positive_scaling_does_not_change_rendering(
            scores in prop::collection::vec(-5.0f64..5.0, 25),
            exp in -20i32..20,
        ) {
            let c = 2f64.powi(exp);
            let scaled: Vec<f64> = scores.iter().map(|s| s * c).collect();
            prop_assert_eq!(
                render_scores(5, 5, &scores, None, 0.9).unwrap(),
                render_scores(5, 5, &scaled, None, 0.9).unwrap()
            );
        }
    }
}
