//! PNG output: spectrograms and sweep curves.

use std::path::Path;

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::signal::{stft, Spectrogram, Waveform};

/// Dynamic range shown by [`spectrogram_png`], in dB below the peak.
pub const SPECTROGRAM_RANGE_DB: f64 = 80.0;

/// One pixel column per frame, one row per bin, low frequencies at the bottom.
/// Brightness is linear in dB over the top 80 dB.
pub fn spectrogram_image(spec: &Spectrogram) -> Result<GrayImage> {
    let (w, h) = (spec.num_frames(), spec.num_bins());
    if w == 0 || h == 0 {
        return Err(Error::invalid("empty spectrogram"));
    }
    let peak = spec.max_magnitude();
    let floor = -SPECTROGRAM_RANGE_DB;
    let mut img = GrayImage::new(w as u32, h as u32);
    for (x, frame) in spec.magnitudes.iter().enumerate() {
        for (bin, &m) in frame.iter().enumerate() {
            let db = if peak > 0.0 && m > 0.0 {
                (20.0 * (m / peak).log10()).max(floor)
            } else {
                floor
            };
            let v = (255.0 * (db - floor) / SPECTROGRAM_RANGE_DB).round() as u8;
            img.put_pixel(x as u32, (h - 1 - bin) as u32, Luma([v]));
        }
    }
    Ok(img)
}

/// The analysis used for every rendered spectrogram: 32 ms Hann, 8 ms hop.
pub fn render_stft(wav: &Waveform) -> Result<Spectrogram> {
    stft(wav, 0.032, 0.008)
}

pub fn spectrogram_png(spec: &Spectrogram, path: &Path) -> Result<()> {
    save(spectrogram_image(spec)?.save(path), path)
}

/// The same grid as the image, as numbers: a header row of bin frequencies,
/// then one row per frame starting with its start time. Values are dB relative
/// to the peak, floored at -80.
pub fn spectrogram_csv(spec: &Spectrogram, path: &Path) -> Result<()> {
    let peak = spec.max_magnitude();
    let mut out = String::from("time_s");
    for b in 0..spec.num_bins() {
        out.push_str(&format!(",{}", spec.bin_freq(b)));
    }
    out.push('\n');
    for (f, frame) in spec.magnitudes.iter().enumerate() {
        out.push_str(&format!("{:.4}", f as f64 * spec.frame_hop));
        for &m in frame {
            let db = if peak > 0.0 && m > 0.0 {
                (20.0 * (m / peak).log10()).max(-SPECTROGRAM_RANGE_DB)
            } else {
                -SPECTROGRAM_RANGE_DB
            };
            out.push_str(&format!(",{db:.2}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn save(r: image::ImageResult<()>, path: &Path) -> Result<()> {
    r.map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
}

const PLOT_W: u32 = 640;
const PLOT_H: u32 = 400;
const MARGIN: u32 = 40;

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
    for s in 0..=steps {
        let x = x0 + (x1 - x0) * s / steps;
        let y = y0 + (y1 - y0) * s / steps;
        if (0..PLOT_W as i64).contains(&x) && (0..PLOT_H as i64).contains(&y) {
            img.put_pixel(x as u32, y as u32, c);
        }
    }
}

/// Mean SDRi against jitter bound. Axes carry a tick per point on x and one
/// per 5 dB on y; there is no text.
pub fn curve_image(points: &[(f64, f64)]) -> Result<RgbImage> {
    if points.is_empty() {
        return Err(Error::invalid("nothing to plot"));
    }
    let mut img = RgbImage::from_pixel(PLOT_W, PLOT_H, Rgb([255, 255, 255]));
    let black = Rgb([0, 0, 0]);
    let grey = Rgb([200, 200, 200]);
    let blue = Rgb([30, 80, 200]);
    let xmax = points.iter().map(|p| p.0).fold(0.0_f64, f64::max).max(1e-3);
    let ymin = points.iter().map(|p| p.1).fold(0.0_f64, f64::min);
    let ymax = points.iter().map(|p| p.1).fold(ymin + 1.0, f64::max);
    let (ylo, yhi) = ((ymin / 5.0).floor() * 5.0, (ymax / 5.0).ceil() * 5.0);
    let (left, bottom) = (MARGIN as i64, (PLOT_H - MARGIN) as i64);
    let (right, top) = ((PLOT_W - MARGIN) as i64, MARGIN as i64);
    let px = |x: f64| left + ((x / xmax) * (right - left) as f64).round() as i64;
    let py = |y: f64| bottom - (((y - ylo) / (yhi - ylo)) * (bottom - top) as f64).round() as i64;
    let mut tick = ylo;
    while tick <= yhi + 1e-9 {
        let y = py(tick);
        line(&mut img, (left, y), (right, y), if tick == 0.0 { black } else { grey });
        line(&mut img, (left - 4, y), (left, y), black);
        tick += 5.0;
    }
    line(&mut img, (left, bottom), (right, bottom), black);
    line(&mut img, (left, bottom), (left, top), black);
    for &(x, _) in points {
        line(&mut img, (px(x), bottom), (px(x), bottom + 4), black);
    }
    for w in points.windows(2) {
        line(&mut img, (px(w[0].0), py(w[0].1)), (px(w[1].0), py(w[1].1)), blue);
    }
    for &(x, y) in points {
        let (cx, cy) = (px(x), py(y));
        for d in -3..=3 {
            line(&mut img, (cx - 3, cy + d), (cx + 3, cy + d), blue);
        }
    }
    Ok(img)
}

pub fn curve_png(points: &[(f64, f64)], path: &Path) -> Result<()> {
    save(curve_image(points)?.save(path), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tone::{synth_tone_complex, ToneComplexSpec};

    #[test]
    fn spectrogram_orientation_and_range() {
        let w = synth_tone_complex(&ToneComplexSpec::harmonic(1000.0, 0.0, 0.5), 16_000).unwrap();
        let spec = stft(&w, 0.032, 0.008).unwrap();
        let img = spectrogram_image(&spec).unwrap();
        assert_eq!(img.width() as usize, spec.num_frames());
        let h = img.height();
        let bin = spec.bin_of(1000.0) as u32;
        let col = 10;
        assert!(img.get_pixel(col, h - 1 - bin)[0] >= 250);
        assert!(img.get_pixel(col, 0)[0] < 50);
    }

    #[test]
    fn csv_matches_grid() {
        let w = synth_tone_complex(&ToneComplexSpec::harmonic(500.0, 0.0, 0.1), 16_000).unwrap();
        let spec = render_stft(&w).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        spectrogram_csv(&spec, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), spec.num_frames() + 1);
        assert_eq!(lines[0].split(',').count(), spec.num_bins() + 1);
    }

    #[test]
    fn curve_png_writes_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.png");
        curve_png(&[(0.0, 10.0), (0.1, 4.0), (0.3, -2.0)], &p).unwrap();
        assert!(image::open(&p).is_ok());
        assert!(curve_image(&[]).is_err());
    }
}
