//! `Range: bytes=…` parsing for a single range.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteRange {
    pub start: u64,
    pub end_inclusive: u64,
}

impl ByteRange {
    pub fn len(&self) -> u64 {
        self.end_inclusive - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("malformed Range header")]
    Malformed,
    #[error("multiple ranges are not supported")]
    MultipleRanges,
    #[error("range not satisfiable")]
    Unsatisfiable,
}

/// Resolves a `Range` header value against a representation of `len` bytes.
///
/// Supports `bytes=a-b`, `bytes=a-` and suffix `bytes=-n`. An end past the
/// last byte is clamped.
pub fn parse_range(header: &str, len: u64) -> Result<ByteRange, RangeError> {
    let spec = header
        .trim()
        .strip_prefix("bytes=")
        .ok_or(RangeError::Malformed)?;
    if spec.contains(',') {
        return Err(RangeError::MultipleRanges);
    }
    let (first, last) = spec.trim().split_once('-').ok_or(RangeError::Malformed)?;
    let num = |s: &str| -> Result<u64, RangeError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RangeError::Malformed);
        }
        // Digits that overflow u64 are still a syntactically valid, huge value.
        Ok(s.parse().unwrap_or(u64::MAX))
    };
    let (first, last) = (first.trim(), last.trim());

    if first.is_empty() {
        let suffix = num(last)?;
        if suffix == 0 || len == 0 {
            return Err(RangeError::Unsatisfiable);
        }
        return Ok(ByteRange {
            start: len.saturating_sub(suffix),
            end_inclusive: len - 1,
        });
    }
    let start = num(first)?;
    let end = if last.is_empty() { u64::MAX } else { num(last)? };
    if end < start {
        return Err(RangeError::Malformed);
    }
    if start >= len {
        return Err(RangeError::Unsatisfiable);
    }
    Ok(ByteRange {
        start,
        end_inclusive: end.min(len - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(start: u64, end_inclusive: u64) -> Result<ByteRange, RangeError> {
        Ok(ByteRange { start, end_inclusive })
    }

    #[test]
    fn forms() {
        assert_eq!(parse_range("bytes=0-1023", 5000), r(0, 1023));
        assert_eq!(parse_range("bytes=4000-", 5000), r(4000, 4999));
        assert_eq!(parse_range("bytes=-500", 5000), r(4500, 4999));
        assert_eq!(parse_range("bytes=-9000", 5000), r(0, 4999));
        assert_eq!(parse_range("bytes=10-99999", 50), r(10, 49));
        assert_eq!(parse_range("bytes=0-0", 1), r(0, 0));
    }

    #[test]
    fn failures() {
        assert_eq!(parse_range("bytes=999999999-", 100), Err(RangeError::Unsatisfiable));
        assert_eq!(parse_range("bytes=-0", 100), Err(RangeError::Unsatisfiable));
        assert_eq!(parse_range("bytes=0-", 0), Err(RangeError::Unsatisfiable));
        assert_eq!(parse_range("bytes=0-1,5-6", 100), Err(RangeError::MultipleRanges));
        assert_eq!(parse_range("items=0-1", 100), Err(RangeError::Malformed));
        assert_eq!(parse_range("bytes=5-2", 100), Err(RangeError::Malformed));
        assert_eq!(parse_range("bytes=a-b", 100), Err(RangeError::Malformed));
        assert_eq!(parse_range("bytes=-", 100), Err(RangeError::Malformed));
    }
}
