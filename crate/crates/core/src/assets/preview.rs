use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use thiserror::Error;

use super::image::probe_image;

pub const DEFAULT_PREVIEW_MAX_DIM: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreviewError {
    #[error("cannot decode image: {0}")]
    DecodeError(String),
    #[error("max_dim must be at least 1")]
    ZeroMaxDim,
}

/// Output size for a `width` x `height` image bounded by `max_dim`:
/// the longest side becomes `max_dim`, the other is scaled and rounded
/// half-up, never below 1 px.
pub fn preview_size(width: u32, height: u32, max_dim: u32) -> (u32, u32) {
    let longest = width.max(height) as u64;
    if longest <= max_dim as u64 {
        return (width, height);
    }
    let scale = |side: u32| {
        let num = 2 * side as u64 * max_dim as u64 + longest;
        ((num / (2 * longest)) as u32).max(1)
    };
    (scale(width), scale(height))
}

/// Downsamples an image so its longest side is at most `max_dim`, using an
/// area-average (box) filter, and encodes the result as PNG. Images already
/// within bounds are returned unchanged, whatever their format.
pub fn derive_preview(bytes: &[u8], max_dim: u32) -> Result<Vec<u8>, PreviewError> {
    if max_dim == 0 {
        return Err(PreviewError::ZeroMaxDim);
    }
    let info = probe_image(bytes).map_err(|e| PreviewError::DecodeError(e.to_string()))?;
    let (out_w, out_h) = preview_size(info.width, info.height, max_dim);
    if (out_w, out_h) == (info.width, info.height) {
        return Ok(bytes.to_vec());
    }

    let decoded =
        image::load_from_memory(bytes).map_err(|e| PreviewError::DecodeError(e.to_string()))?;
    let (w, h) = (decoded.width(), decoded.height());
    let (pixels, channels, color) = if decoded.color().has_alpha() {
        (decoded.into_rgba8().into_raw(), 4, ExtendedColorType::Rgba8)
    } else {
        (decoded.into_rgb8().into_raw(), 3, ExtendedColorType::Rgb8)
    };
    let out = box_downsample(&pixels, w as usize, h as usize, channels, out_w as usize, out_h as usize);

    let mut png = Vec::new();
    PngEncoder::new(&mut png)
        .write_image(&out, out_w, out_h, color)
        .map_err(|e| PreviewError::DecodeError(format!("PNG encoding failed: {e}")))?;
    Ok(png)
}

/// Per output sample: `(first source index, overlaps)` where each overlap is
/// the covered length in units of `1/out_len` source pixels. Overlaps of one
/// output sample sum to `src_len`.
fn coverage(src_len: usize, out_len: usize) -> Vec<(usize, Vec<u64>)> {
    let (n, m) = (src_len as u64, out_len as u64);
    (0..m)
        .map(|i| {
            let (start, end) = (i * n, (i + 1) * n);
            let first = start / m;
            let last = (end - 1) / m;
            let weights = (first..=last)
                .map(|k| end.min((k + 1) * m) - start.max(k * m))
                .collect();
            (first as usize, weights)
        })
        .collect()
}

pub(crate) fn box_downsample(
    src: &[u8],
    w: usize,
    h: usize,
    channels: usize,
    out_w: usize,
    out_h: usize,
) -> Vec<u8> {
    let cols = coverage(w, out_w);
    let rows = coverage(h, out_h);

    // Horizontal pass into f64, then vertical pass with final rounding.
    let mut tmp = vec![0f64; out_w * h * channels];
    for y in 0..h {
        let row = &src[y * w * channels..(y + 1) * w * channels];
        for (ox, (first, weights)) in cols.iter().enumerate() {
            for c in 0..channels {
                let sum: u64 = weights
                    .iter()
                    .enumerate()
                    .map(|(k, &wt)| row[(first + k) * channels + c] as u64 * wt)
                    .sum();
                tmp[(y * out_w + ox) * channels + c] = sum as f64 / w as f64;
            }
        }
    }

    let mut out = vec![0u8; out_w * out_h * channels];
    for (oy, (first, weights)) in rows.iter().enumerate() {
        for ox in 0..out_w {
            for c in 0..channels {
                let sum: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(k, &wt)| tmp[((first + k) * out_w + ox) * channels + c] * wt as f64)
                    .sum();
                out[(oy * out_w + ox) * channels + c] = (sum / h as f64).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}
