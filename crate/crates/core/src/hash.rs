//! MurmurHash3, x64 128-bit variant.
//!
//! Digest layout matches the reference implementation: the two 64-bit
//! lanes are emitted little-endian, `h1` first.

#[inline]
fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

pub fn murmur3_x64_128(data: &[u8], seed: u32) -> [u8; 16] {
    const C1: u64 = 0x87c3_7b91_1142_53d5;
    const C2: u64 = 0x4cf5_ad43_2745_937f;

    let mut h1 = seed as u64;
    let mut h2 = seed as u64;

    let mut blocks = data.chunks_exact(16);
    for block in &mut blocks {
        let mut k1 = u64::from_le_bytes(block[0..8].try_into().unwrap());
        let mut k2 = u64::from_le_bytes(block[8..16].try_into().unwrap());

        k1 = k1.wrapping_mul(C1).rotate_left(31).wrapping_mul(C2);
        h1 ^= k1;
        h1 = h1.rotate_left(27).wrapping_add(h2).wrapping_mul(5).wrapping_add(0x52dc_e729);

        k2 = k2.wrapping_mul(C2).rotate_left(33).wrapping_mul(C1);
        h2 ^= k2;
        h2 = h2.rotate_left(31).wrapping_add(h1).wrapping_mul(5).wrapping_add(0x3849_5ab5);
    }

    let tail = blocks.remainder();
    if tail.len() > 8 {
        let mut k2: u64 = 0;
        for i in (8..tail.len()).rev() {
            k2 ^= (tail[i] as u64) << ((i - 8) * 8);
        }
        k2 = k2.wrapping_mul(C2).rotate_left(33).wrapping_mul(C1);
        h2 ^= k2;
    }
    if !tail.is_empty() {
        let mut k1: u64 = 0;
        for i in (0..tail.len().min(8)).rev() {
            k1 ^= (tail[i] as u64) << (i * 8);
        }
        k1 = k1.wrapping_mul(C1).rotate_left(31).wrapping_mul(C2);
        h1 ^= k1;
    }

    h1 ^= data.len() as u64;
    h2 ^= data.len() as u64;
    h1 = h1.wrapping_add(h2);
    h2 = h2.wrapping_add(h1);
    h1 = fmix64(h1);
    h2 = fmix64(h2);
    h1 = h1.wrapping_add(h2);
    h2 = h2.wrapping_add(h1);

    let mut out = [0u8; 16];
    out[0..8].copy_from_slice(&h1.to_le_bytes());
    out[8..16].copy_from_slice(&h2.to_le_bytes());
    out
}

/// Convenience for deriving 64-bit stream seeds from structured inputs.
pub fn murmur3_u64(data: &[u8], seed: u32) -> u64 {
    u64::from_le_bytes(murmur3_x64_128(data, seed)[0..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn reference(data: &[u8], seed: u32) -> [u8; 16] {
        let v = murmur3::murmur3_x64_128(&mut Cursor::new(data), seed).unwrap();
        v.to_le_bytes()
    }

    #[test]
    fn matches_reference_crate() {
        let cases: &[&[u8]] = &[
            b"",
            b"a",
            b"ab",
            b"hello",
            b"hello, world",
            b"0123456789abcdef",          // exactly one block
            b"0123456789abcdef0",         // block plus 1-byte tail
            b"0123456789abcdefexactly16", // block plus 9-byte tail
            b"The quick brown fox jumps over the lazy dog",
        ];
        for &case in cases {
            for seed in [0u32, 1, 0x9747_b28c] {
                assert_eq!(
                    murmur3_x64_128(case, seed),
                    reference(case, seed),
                    "input {case:?} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn matches_reference_on_all_tail_lengths() {
        let data: Vec<u8> = (0u8..64).collect();
        for len in 0..=data.len() {
            assert_eq!(murmur3_x64_128(&data[..len], 7), reference(&data[..len], 7), "len {len}");
        }
    }
}
