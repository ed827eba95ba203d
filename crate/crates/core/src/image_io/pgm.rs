use super::ImageGrid;
use crate::error::{Error, PgmError, Result};

/// Parses a binary PGM ("P5") with maxval 255.
///
/// Header tokens may be separated by any ASCII whitespace and `#` comments
/// run to end of line. Exactly one whitespace byte separates maxval from the
/// raster; trailing bytes after the raster are ignored.
pub fn read_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 2 {
        return Err(PgmError::MalformedHeader("missing magic number").into());
    }
    if &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..2]).into_owned();
        return Err(PgmError::UnsupportedFormat(magic).into());
    }

    let mut cursor = HeaderCursor { bytes, pos: 2 };
    let width = cursor.next_number("width")?;
    let height = cursor.next_number("height")?;
    let maxval = cursor.next_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader("zero image dimension").into());
    }
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval(maxval).into());
    }
    // single whitespace byte terminates the header
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(PgmError::MalformedHeader("missing whitespace after maxval").into()),
    }

    let expected = (width as usize)
        .checked_mul(height as usize)
        .ok_or(PgmError::MalformedHeader("image dimensions overflow"))?;
    let raster = &bytes[cursor.pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            found: raster.len(),
        }
        .into());
    }
    ImageGrid::new(width as usize, height as usize, raster[..expected].to_vec())
}

/// Serializes a grid as canonical `P5\n<w> <h>\n255\n` followed by raw bytes.
pub fn write_pgm(grid: &ImageGrid) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", grid.width(), grid.height());
    let mut out = Vec::with_capacity(header.len() + grid.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(grid.pixels());
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, what: &'static str) -> std::result::Result<u32, Error> {
        let start = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == start {
            return Err(PgmError::MalformedHeader("expected whitespace between header fields").into());
        }
        let digits_start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(PgmError::MalformedHeader(match what {
                "width" => "missing or non-numeric width",
                "height" => "missing or non-numeric height",
                _ => "missing or non-numeric maxval",
            })
            .into());
        }
        std::str::from_utf8(&self.bytes[digits_start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::MalformedHeader("header number out of range").into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pgm_err(bytes: &[u8]) -> PgmError {
        match read_pgm(bytes) {
            Err(Error::Pgm(e)) => e,
            other => panic!("expected PGM error, got {other:?}"),
        }
    }

    #[test]
    fn reads_two_by_two() {
        let mut bytes = b"P5 2 2 255 ".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 7]);
        let g = read_pgm(&bytes).unwrap();
        assert_eq!((g.width(), g.height()), (2, 2));
        assert_eq!(g.pixels(), &[0, 128, 255, 7]);
        assert_eq!(g.get(0, 1), 255);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n3 1\n# max\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(read_pgm(&bytes).unwrap().pixels(), &[1, 2, 3]);
    }

    #[test]
    fn distinct_parse_errors() {
        assert_eq!(
            pgm_err(b"P6 1 1 255 abc"),
            PgmError::UnsupportedFormat("P6".into())
        );
        assert!(matches!(pgm_err(b"P5 x 1 255 a"), PgmError::MalformedHeader(_)));
        assert!(matches!(pgm_err(b"P"), PgmError::MalformedHeader(_)));
        assert_eq!(pgm_err(b"P5 1 1 65535 ab"), PgmError::UnsupportedMaxval(65535));
        assert_eq!(
            pgm_err(b"P5 2 2 255 \x01\x02"),
            PgmError::Truncated {
                expected: 4,
                found: 2
            }
        );
    }

    #[test]
    fn canonical_single_pixel() {
        let g = ImageGrid::new(1, 1, vec![42]).unwrap();
        let bytes = write_pgm(&g);
        assert_eq!(bytes, b"P5\n1 1\n255\n\x2a");
        assert_eq!(write_pgm(&g), bytes);
    }

    proptest! {
        #[test]
        fn pgm_round_trip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..w * h)
                .map(|i| (seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 56) as u8)
                .collect();
            let g = ImageGrid::new(w, h, pixels).unwrap();
            let bytes = write_pgm(&g);
            prop_assert_eq!(read_pgm(&bytes).unwrap(), g);
            prop_assert_eq!(write_pgm(&read_pgm(&bytes).unwrap()), bytes);
        }
    }
}
