use sha2::{Digest, Sha256};

/// Length of the hex digest prefix used in bundle file names and ETags.
pub const HASH_PREFIX_LEN: usize = 16;

/// First 16 lowercase hex characters of the SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = hex::encode(digest);
    hex.truncate(HASH_PREFIX_LEN);
    hex
}

/// Content-addressed file name: `<hash>.<ext>`, extension lowercased.
pub fn hashed_name(bytes: &[u8], ext: &str) -> String {
    format!("{}.{}", content_hash(bytes), ext.to_ascii_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_vectors() {
        assert_eq!(content_hash(b""), "e3b0c44298fc1c14");
        assert_eq!(content_hash(b"abc"), "ba7816bf8f01cfea");
    }

    #[test]
    fn stable_and_lowercase() {
        let a = content_hash(b"Santa Clara");
        assert_eq!(a, content_hash(b"Santa Clara"));
        assert_eq!(a.len(), HASH_PREFIX_LEN);
        assert!(a.chars().all(|c| c.is_ascii_digit() || ('a'..='f').contains(&c)));
        assert_eq!(hashed_name(b"", "glb"), "e3b0c44298fc1c14.glb");
    }
}
