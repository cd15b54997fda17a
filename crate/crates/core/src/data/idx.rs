use std::path::Path;

use super::Dataset;
use crate::{Error, IdxError, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const IMAGE_SIDE: usize = 28;

/// Magic number and big-endian dimension sizes of an IDX container.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

impl IdxHeader {
    pub fn payload_len(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }
}

fn read_u32(bytes: &[u8], offset: usize, field: &'static str) -> Result<u32, IdxError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(IdxError::Truncated {
            field,
            expected: offset + 4,
            found: bytes.len(),
        })
}

/// Splits an unsigned-byte IDX container into its header and payload. The
/// magic must equal `expected_magic`, whose low byte gives the rank.
pub fn parse_idx(bytes: &[u8], expected_magic: u32) -> Result<(IdxHeader, &[u8]), IdxError> {
    let magic = read_u32(bytes, 0, "magic")?;
    if magic != expected_magic {
        return Err(IdxError::UnsupportedMagic {
            found: magic,
            expected: expected_magic,
        });
    }
    let rank = (magic & 0xff) as usize;
    let dims = (0..rank)
        .map(|i| read_u32(bytes, 4 + 4 * i, "dimensions"))
        .collect::<Result<Vec<_>, _>>()?;
    let header = IdxHeader { magic, dims };
    let start = 4 + 4 * rank;
    let expected = start + header.payload_len();
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            field: "payload",
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(IdxError::TrailingBytes {
            expected,
            found: bytes.len(),
        });
    }
    Ok((header, &bytes[start..]))
}

/// Decodes a 28×28 image file into `(count, pixel bytes)`.
pub fn decode_idx_images(bytes: &[u8]) -> Result<(usize, &[u8]), IdxError> {
    let (header, payload) = parse_idx(bytes, IMAGE_MAGIC)?;
    let (rows, cols) = (header.dims[1] as usize, header.dims[2] as usize);
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(IdxError::Shape { rows, cols });
    }
    Ok((header.dims[0] as usize, payload))
}

pub fn decode_idx_labels(bytes: &[u8]) -> Result<&[u8], IdxError> {
    parse_idx(bytes, LABEL_MAGIC).map(|(_, payload)| payload)
}

pub fn encode_idx_images(pixels: &[u8], count: usize) -> Vec<u8> {
    assert_eq!(pixels.len(), count * IMAGE_SIDE * IMAGE_SIDE);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for word in [
        IMAGE_MAGIC,
        count as u32,
        IMAGE_SIDE as u32,
        IMAGE_SIDE as u32,
    ] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image file and its companion label file. Pixels are flattened
/// row-major and scaled to `v/255`; labels keep their digit values.
pub fn load_idx_images(images: &Path, labels: &Path) -> Result<Dataset> {
    let image_bytes = read_file(images)?;
    let label_bytes = read_file(labels)?;
    let idx_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Idx { path, source }
    };
    let (count, pixels) = decode_idx_images(&image_bytes).map_err(idx_err(images))?;
    let digits = decode_idx_labels(&label_bytes).map_err(idx_err(labels))?;
    if digits.len() != count {
        return Err(Error::Idx {
            path: labels.to_path_buf(),
            source: IdxError::CountMismatch {
                images: count,
                labels: digits.len(),
            },
        });
    }
    let p = IMAGE_SIDE * IMAGE_SIDE;
    let x = nalgebra::DMatrix::from_row_iterator(
        count,
        p,
        pixels.iter().map(|&v| f64::from(v) / 255.0),
    );
    let y = nalgebra::DVector::from_iterator(count, digits.iter().map(|&d| f64::from(d)));
    Dataset::new(x, y, format!("idx:{}", images.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_arithmetic() {
        let bytes = encode_idx_images(&[7u8; 2 * 784], 2);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        let (header, payload) = parse_idx(&bytes, IMAGE_MAGIC).unwrap();
        assert_eq!(header.dims, vec![2, 28, 28]);
        assert_eq!(payload.len(), 1568);
        assert_eq!(decode_idx_images(&bytes).unwrap().0, 2);
    }

    #[test]
    fn rejects_wrong_magic() {
        let mut bytes = encode_idx_images(&[0u8; 784], 1);
        bytes[3] = 0x02;
        let err = decode_idx_images(&bytes).unwrap_err();
        assert_eq!(
            err,
            IdxError::UnsupportedMagic {
                found: 0x802,
                expected: 0x803
            }
        );
        assert!(err.to_string().contains("unsupported magic"));
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let bytes = encode_idx_images(&[0u8; 784], 1);
        assert!(matches!(
            decode_idx_images(&bytes[..bytes.len() - 1]),
            Err(IdxError::Truncated {
                field: "payload",
                ..
            })
        ));
        assert!(matches!(
            decode_idx_images(&bytes[..10]),
            Err(IdxError::Truncated {
                field: "dimensions",
                ..
            })
        ));
        assert!(matches!(
            decode_idx_images(&bytes[..2]),
            Err(IdxError::Truncated { field: "magic", .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            decode_idx_images(&long),
            Err(IdxError::TrailingBytes { .. })
        ));
    }

    #[test]
    fn rejects_other_shapes() {
        let mut bytes = Vec::new();
        for word in [IMAGE_MAGIC, 1, 4, 4] {
            bytes.extend_from_slice(&word.to_be_bytes());
        }
        bytes.extend_from_slice(&[0u8; 16]);
        assert_eq!(
            decode_idx_images(&bytes),
            Err(IdxError::Shape { rows: 4, cols: 4 })
        );
    }

    #[test]
    fn labels_round_trip() {
        let bytes = encode_idx_labels(&[0, 1, 9]);
        assert_eq!(&bytes[..8], &[0, 0, 8, 1, 0, 0, 0, 3]);
        assert_eq!(decode_idx_labels(&bytes).unwrap(), &[0, 1, 9]);
    }

    #[test]
    fn loads_scaled_pixels_and_checks_counts() {
        let dir = tempfile::tempdir().unwrap();
        let mut pixels = vec![0u8; 2 * 784];
        pixels[1] = 255;
        pixels[784 + 783] = 51;
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        std::fs::write(&img, encode_idx_images(&pixels, 2)).unwrap();
        std::fs::write(&lab, encode_idx_labels(&[3, 8])).unwrap();
        let ds = load_idx_images(&img, &lab).unwrap();
        assert_eq!(ds.x.shape(), (2, 784));
        assert_eq!(ds.x[(0, 1)], 1.0);
        assert_eq!(ds.x[(1, 783)], 0.2);
        assert_eq!(ds.x[(0, 0)], 0.0);
        assert_eq!(ds.y.as_slice(), &[3.0, 8.0]);

        std::fs::write(&lab, encode_idx_labels(&[3])).unwrap();
        let err = load_idx_images(&img, &lab).unwrap_err();
        assert!(err.to_string().contains("2 images but 1 labels"), "{err}");
    }
}
