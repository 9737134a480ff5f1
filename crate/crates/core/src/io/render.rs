//! Binary portable graymaps (P5) and pixmaps (P6), one pixel per grid
//! node, with `+y` pointing up.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderStyle {
    /// Min-max normalised gray levels: min black, max white.
    GrayDensity,
    /// Linear red/blue diverging map, zero at mid gray, scaled by `max |v|`.
    SignedRedblue,
    /// Data layer (white to red) multiplied onto a grayscale background.
    OverlayPotential,
}

impl std::str::FromStr for RenderStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gray-density" => Ok(Self::GrayDensity),
            "signed-redblue" => Ok(Self::SignedRedblue),
            "overlay-potential" => Ok(Self::OverlayPotential),
            _ => Err(format!("unknown style {s:?}; expected gray-density, signed-redblue or overlay-potential")),
        }
    }
}

/// Pixel value of NaN entries in graymaps.
pub const NAN_GRAY: u8 = 0;
/// Pixel colour of NaN entries in pixmaps (magenta).
pub const NAN_RGB: [u8; 3] = [255, 0, 255];

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub bytes: Vec<u8>,
    pub nan_pixels: usize,
    /// Raw data range behind the normalisation (finite values only).
    pub range: (f64, f64),
}

fn finite_range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Visits nodes in image order: top row (largest y) first.
fn image_order(nx: usize, ny: usize) -> impl Iterator<Item = usize> {
    (0..ny).rev().flat_map(move |j| (0..nx).map(move |i| j * nx + i))
}

fn unit(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo { ((x - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 }
}

fn level(u: f64) -> u8 {
    (u * 255.0).round() as u8
}

pub fn render_gray(values: &[f64], nx: usize, ny: usize) -> Image {
    assert_eq!(values.len(), nx * ny);
    let (lo, hi) = finite_range(values);
    let mut bytes = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    let mut nan_pixels = 0;
    for k in image_order(nx, ny) {
        let v = values[k];
        if v.is_nan() {
            nan_pixels += 1;
            bytes.push(NAN_GRAY);
        } else {
            bytes.push(level(unit(v, lo, hi)));
        }
    }
    Image { bytes, nan_pixels, range: (lo, hi) }
}

fn diverging(t: f64) -> [u8; 3] {
    // t in [-1, 1]: blue .. mid gray .. red.
    let g = 0.5 * (1.0 - t.abs());
    if t >= 0.0 {
        [level(0.5 + 0.5 * t), level(g), level(g)]
    } else {
        [level(g), level(g), level(0.5 - 0.5 * t)]
    }
}

pub fn render_signed(values: &[f64], nx: usize, ny: usize) -> Image {
    assert_eq!(values.len(), nx * ny);
    let (lo, hi) = finite_range(values);
    let scale = lo.abs().max(hi.abs());
    let mut bytes = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    let mut nan_pixels = 0;
    for k in image_order(nx, ny) {
        let v = values[k];
        let px = if v.is_nan() {
            nan_pixels += 1;
            NAN_RGB
        } else if scale > 0.0 && scale.is_finite() {
            diverging((v / scale).clamp(-1.0, 1.0))
        } else {
            diverging(0.0)
        };
        bytes.extend_from_slice(&px);
    }
    Image { bytes, nan_pixels, range: (lo, hi) }
}

/// `data` normalised min-max to a white-to-red ramp, multiplied by a
/// background whose gray level falls from 1 (lowest potential) to 0.45
/// (highest).
pub fn render_overlay(data: &[f64], background: &[f64], nx: usize, ny: usize) -> Image {
    assert_eq!(data.len(), nx * ny);
    assert_eq!(background.len(), nx * ny);
    let (lo, hi) = finite_range(data);
    let (blo, bhi) = finite_range(background);
    let mut bytes = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    let mut nan_pixels = 0;
    for k in image_order(nx, ny) {
        let v = data[k];
        if v.is_nan() {
            nan_pixels += 1;
            bytes.extend_from_slice(&NAN_RGB);
            continue;
        }
        let d = unit(v, lo, hi);
        let shade = 1.0 - 0.55 * unit(background[k], blo, bhi);
        let layer = [1.0, 1.0 - d, 1.0 - d];
        bytes.extend(layer.iter().map(|c| level(c * shade)));
    }
    Image { bytes, nan_pixels, range: (lo, hi) }
}
