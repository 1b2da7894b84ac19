//! Stable 64-bit content hashing (FNV-1a).
//!
//! Used for gallery integrity checks and parameter fingerprints. The hash is
//! part of the on-disk manifest format, so it must never change between
//! builds; FNV-1a is fixed by definition, unlike `std`'s default hasher.

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}
