//! Header-level PNG and JPEG probing (no pixel decoding).

use serde::Serialize;
use thiserror::Error;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1A, b'\n'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("unknown image format")]
    UnknownFormat,
    #[error("corrupt {format} header: {message}")]
    CorruptHeader {
        format: &'static str,
        message: String,
    },
}

fn corrupt(format: &'static str, message: impl Into<String>) -> ImageError {
    ImageError::CorruptHeader {
        format,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Jpeg,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Jpeg => "jpg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ImageInfo {
    pub format: ImageFormat,
    pub width: u32,
    pub height: u32,
}

/// Identifies a PNG or JPEG and reads its dimensions.
///
/// Besides the header, the container framing is walked to the end (PNG
/// chunks up to `IEND`, JPEG segments up to the scan and a trailing `EOI`),
/// so a truncated file is reported as corrupt rather than probed.
pub fn probe_image(bytes: &[u8]) -> Result<ImageInfo, ImageError> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        probe_png(bytes)
    } else if bytes.starts_with(&[0xFF, 0xD8]) {
        probe_jpeg(bytes)
    } else {
        Err(ImageError::UnknownFormat)
    }
}

fn be_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

fn probe_png(bytes: &[u8]) -> Result<ImageInfo, ImageError> {
    let mut offset = PNG_SIGNATURE.len();
    let mut dims = None;
    loop {
        let header = bytes
            .get(offset..offset + 8)
            .ok_or_else(|| corrupt("png", "file ends before IEND"))?;
        let length = be_u32(&header[..4]) as usize;
        let chunk_type = &header[4..8];
        let data_start = offset + 8;
        let crc_start = data_start
            .checked_add(length)
            .filter(|_| length <= i32::MAX as usize)
            .ok_or_else(|| corrupt("png", "chunk length out of range"))?;
        let crc = bytes
            .get(crc_start..crc_start + 4)
            .ok_or_else(|| corrupt("png", "file ends inside a chunk"))?;

        if dims.is_none() {
            if chunk_type != b"IHDR" {
                return Err(corrupt("png", "first chunk is not IHDR"));
            }
            if length != 13 {
                return Err(corrupt("png", format!("IHDR length {length}, expected 13")));
            }
            let mut hasher = crc32fast::Hasher::new();
            hasher.update(&bytes[offset + 4..crc_start]);
            if hasher.finalize() != be_u32(crc) {
                return Err(corrupt("png", "IHDR checksum mismatch"));
            }
            let data = &bytes[data_start..crc_start];
            let (w, h) = (be_u32(&data[..4]), be_u32(&data[4..8]));
            if w == 0 || h == 0 || w > i32::MAX as u32 || h > i32::MAX as u32 {
                return Err(corrupt("png", format!("invalid dimensions {w}x{h}")));
            }
            dims = Some((w, h));
        } else if chunk_type == b"IHDR" {
            return Err(corrupt("png", "duplicate IHDR"));
        }

        offset = crc_start + 4;
        if chunk_type == b"IEND" {
            let (width, height) = dims.expect("IHDR precedes IEND");
            return Ok(ImageInfo {
                format: ImageFormat::Png,
                width,
                height,
            });
        }
    }
}

fn probe_jpeg(bytes: &[u8]) -> Result<ImageInfo, ImageError> {
    let mut offset = 2;
    let mut dims = None;
    loop {
        // Markers may be preceded by any number of 0xFF fill bytes.
        if bytes.get(offset) != Some(&0xFF) {
            return Err(corrupt("jpeg", format!("expected marker at offset {offset}")));
        }
        while bytes.get(offset) == Some(&0xFF) {
            offset += 1;
        }
        let marker = *bytes
            .get(offset)
            .ok_or_else(|| corrupt("jpeg", "file ends inside a marker"))?;
        offset += 1;
        match marker {
            0x01 | 0xD0..=0xD7 => continue,
            0xD8 => return Err(corrupt("jpeg", "unexpected SOI")),
            0xD9 => return Err(corrupt("jpeg", "EOI before any scan")),
            0x00 => return Err(corrupt("jpeg", "stuffed zero outside scan data")),
            _ => {}
        }
        let len = bytes
            .get(offset..offset + 2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as usize)
            .ok_or_else(|| corrupt("jpeg", "file ends inside a segment header"))?;
        if len < 2 {
            return Err(corrupt("jpeg", "segment length below 2"));
        }
        let segment = bytes
            .get(offset + 2..offset + len)
            .ok_or_else(|| corrupt("jpeg", "file ends inside a segment"))?;

        match marker {
            0xC0 | 0xC2 if dims.is_none() => {
                if segment.len() < 6 {
                    return Err(corrupt("jpeg", "SOF segment too short"));
                }
                let height = u16::from_be_bytes([segment[1], segment[2]]) as u32;
                let width = u16::from_be_bytes([segment[3], segment[4]]) as u32;
                if width == 0 || height == 0 {
                    return Err(corrupt("jpeg", format!("invalid dimensions {width}x{height}")));
                }
                dims = Some((width, height));
            }
            0xDA => {
                let (width, height) =
                    dims.ok_or_else(|| corrupt("jpeg", "scan starts before a SOF0/SOF2 frame header"))?;
                // Entropy-coded data runs to the end; require a clean EOI.
                if bytes.len() < offset + len + 2 || !bytes.ends_with(&[0xFF, 0xD9]) {
                    return Err(corrupt("jpeg", "missing EOI marker (truncated file?)"));
                }
                return Ok(ImageInfo {
                    format: ImageFormat::Jpeg,
                    width,
                    height,
                });
            }
            _ => {}
        }
        offset += len;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquirectCheck {
    Pass,
    Warn,
    Fail,
}

/// Relative aspect-ratio tolerance accepted (with a warning) for panoramas.
pub const EQUIRECT_RATIO_TOLERANCE: f64 = 0.01;

/// Full equirectangular panoramas are exactly twice as wide as tall.
pub fn check_equirectangular(info: &ImageInfo) -> EquirectCheck {
    if info.width as u64 == 2 * info.height as u64 {
        EquirectCheck::Pass
    } else if (info.width as f64 / info.height as f64 - 2.0).abs() <= EQUIRECT_RATIO_TOLERANCE {
        EquirectCheck::Warn
    } else {
        EquirectCheck::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Canonical 1x1 PNG: signature, IHDR (1x1, 8-bit grayscale), one IDAT
    /// holding a zlib stream for the single scanline `00 00`, IEND.
    const ONE_PIXEL_PNG: [u8; 67] = [
        0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, // signature
        0x00, 0x00, 0x00, 0x0D, 0x49, 0x48, 0x44, 0x52, // IHDR, 13 bytes
        0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, // width 1, height 1
        0x08, 0x00, 0x00, 0x00, 0x00, // depth 8, gray, deflate, filter 0, no interlace
        0x3A, 0x7E, 0x9B, 0x55, // CRC
        0x00, 0x00, 0x00, 0x0A, 0x49, 0x44, 0x41, 0x54, // IDAT, 10 bytes
        0x78, 0x9C, 0x63, 0x60, 0x00, 0x00, 0x00, 0x02, 0x00, 0x01, //
        0x48, 0xAF, 0xA4, 0x71, // CRC
        0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4E, 0x44, // IEND
        0xAE, 0x42, 0x60, 0x82,
    ];

    #[test]
    fn one_pixel_png() {
        let info = probe_image(&ONE_PIXEL_PNG).unwrap();
        assert_eq!(info, ImageInfo { format: ImageFormat::Png, width: 1, height: 1 });
    }

    #[test]
    fn reference_decoder_agrees_on_png_fixture() {
        let img = image::load_from_memory(&ONE_PIXEL_PNG).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
    }

    /// SOI, APP0 stub, SOF0 (precision 8, 2048 rows, 4096 cols, 1 component),
    /// SOS header, two bytes of scan data, EOI.
    fn sof0_jpeg(width: u16, height: u16) -> Vec<u8> {
        let mut v = vec![0xFF, 0xD8];
        v.extend_from_slice(&[0xFF, 0xE0, 0x00, 0x04, 0x4A, 0x46]);
        v.extend_from_slice(&[0xFF, 0xC0, 0x00, 0x0B, 0x08]);
        v.extend_from_slice(&height.to_be_bytes());
        v.extend_from_slice(&width.to_be_bytes());
        v.extend_from_slice(&[0x01, 0x01, 0x11, 0x00]);
        v.extend_from_slice(&[0xFF, 0xDA, 0x00, 0x08, 0x01, 0x01, 0x00, 0x00, 0x3F, 0x00]);
        v.extend_from_slice(&[0x12, 0x34, 0xFF, 0xD9]);
        v
    }

    #[test]
    fn jpeg_sof0_dimensions() {
        let info = probe_image(&sof0_jpeg(4096, 2048)).unwrap();
        assert_eq!(info, ImageInfo { format: ImageFormat::Jpeg, width: 4096, height: 2048 });
    }

    #[test]
    fn hello_is_unknown() {
        assert_eq!(probe_image(b"hello"), Err(ImageError::UnknownFormat));
        assert_eq!(probe_image(b""), Err(ImageError::UnknownFormat));
    }

    #[test]
    fn every_truncation_is_rejected() {
        for full in [ONE_PIXEL_PNG.to_vec(), sof0_jpeg(4096, 2048)] {
            for cut in 0..full.len() {
                match probe_image(&full[..cut]) {
                    Err(ImageError::UnknownFormat | ImageError::CorruptHeader { .. }) => {}
                    other => panic!("prefix {cut}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn png_crc_mismatch() {
        let mut bytes = ONE_PIXEL_PNG;
        bytes[19] = 2;
        assert!(matches!(probe_image(&bytes), Err(ImageError::CorruptHeader { .. })));
    }

    #[test]
    fn equirect_tri_state() {
        let info = |w, h| ImageInfo { format: ImageFormat::Jpeg, width: w, height: h };
        assert_eq!(check_equirectangular(&info(4096, 2048)), EquirectCheck::Pass);
        assert_eq!(check_equirectangular(&info(4100, 2048)), EquirectCheck::Warn);
        assert_eq!(check_equirectangular(&info(1920, 1080)), EquirectCheck::Fail);
    }
}
