//! Canonical Huffman coding of the binary density map.
//!
//! Map bits are packed MSB-first into 4-bit symbols (last group zero
//! padded). The payload is 16 code lengths as nibbles (8 bytes, symbol 0 in
//! the high nibble of byte 0) followed by the MSB-first coded bits. With a
//! single distinct symbol its length is 1 and no coded bits follow.

use crate::bitio::{BitReader, BitWriter};
use crate::error::{Error, Result};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub const ALPHABET: usize = 16;
const TABLE_BYTES: usize = ALPHABET / 2;

pub fn symbols_of(bits: &[bool]) -> Vec<u8> {
    bits.chunks(4)
        .map(|g| {
            g.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (3 - i)))
        })
        .collect()
}

/// Code lengths from symbol counts. Ties in the merge heap resolve by the
/// smallest symbol contained in each subtree, so lengths are deterministic.
pub fn code_lengths(freq: &[u64; ALPHABET]) -> [u8; ALPHABET] {
    let mut lengths = [0u8; ALPHABET];
    let used: Vec<usize> = (0..ALPHABET).filter(|&s| freq[s] > 0).collect();
    match used.len() {
        0 => return lengths,
        1 => {
            lengths[used[0]] = 1;
            return lengths;
        }
        _ => {}
    }
    // (weight, tie key, members)
    let mut heap: BinaryHeap<Reverse<(u64, usize, Vec<usize>)>> = used
        .iter()
        .map(|&s| Reverse((freq[s], s, vec![s])))
        .collect();
    while heap.len() > 1 {
        let Reverse((wa, ka, mut a)) = heap.pop().unwrap();
        let Reverse((wb, kb, b)) = heap.pop().unwrap();
        for &s in a.iter().chain(&b) {
            lengths[s] += 1;
        }
        a.extend(b);
        heap.push(Reverse((wa + wb, ka.min(kb), a)));
    }
    lengths
}

/// Canonical codes ordered by (length, symbol).
fn canonical_codes(lengths: &[u8; ALPHABET]) -> [u32; ALPHABET] {
    let mut order: Vec<usize> = (0..ALPHABET).filter(|&s| lengths[s] > 0).collect();
    order.sort_by_key(|&s| (lengths[s], s));
    let mut codes = [0u32; ALPHABET];
    let mut code = 0u32;
    let mut prev_len = 0u8;
    for (i, &s) in order.iter().enumerate() {
        if i > 0 {
            code += 1;
        }
        code <<= lengths[s] - prev_len;
        prev_len = lengths[s];
        codes[s] = code;
    }
    codes
}

pub fn encode_density_map(bits: &[bool]) -> Result<Vec<u8>> {
    if bits.is_empty() {
        return Err(Error::InvalidConfig("empty density map".into()));
    }
    let syms = symbols_of(bits);
    let mut freq = [0u64; ALPHABET];
    for &s in &syms {
        freq[s as usize] += 1;
    }
    let lengths = code_lengths(&freq);
    let mut out: Vec<u8> = lengths.chunks(2).map(|p| (p[0] << 4) | p[1]).collect();
    if lengths.iter().filter(|&&l| l > 0).count() > 1 {
        let codes = canonical_codes(&lengths);
        let mut w = BitWriter::new();
        for &s in &syms {
            w.put(codes[s as usize], lengths[s as usize] as u32);
        }
        out.extend(w.finish());
    }
    Ok(out)
}

pub fn decode_density_map(payload: &[u8], nbits: usize) -> Result<Vec<bool>> {
    if nbits == 0 {
        return Err(Error::Corrupt("empty density map".into()));
    }
    if payload.len() < TABLE_BYTES {
        return Err(Error::Truncated);
    }
    let mut lengths = [0u8; ALPHABET];
    for (i, &b) in payload[..TABLE_BYTES].iter().enumerate() {
        lengths[2 * i] = b >> 4;
        lengths[2 * i + 1] = b & 0x0f;
    }
    let used: Vec<usize> = (0..ALPHABET).filter(|&s| lengths[s] > 0).collect();
    let nsyms = nbits.div_ceil(4);
    let body = &payload[TABLE_BYTES..];

    let syms: Vec<u8> = if used.len() == 1 {
        if lengths[used[0]] != 1 || !body.is_empty() {
            return Err(Error::Corrupt("bad single-symbol density map".into()));
        }
        vec![used[0] as u8; nsyms]
    } else {
        // Kraft sum must be exactly one for a complete prefix code.
        let kraft: u32 = used.iter().map(|&s| 1u32 << (15 - lengths[s])).sum();
        if used.is_empty() || kraft != 1 << 15 {
            return Err(Error::Corrupt("incomplete Huffman length table".into()));
        }
        let codes = canonical_codes(&lengths);
        let mut r = BitReader::new(body);
        let mut syms = Vec::with_capacity(nsyms);
        for _ in 0..nsyms {
            let (mut code, mut len) = (0u32, 0u8);
            let sym = loop {
                code = (code << 1) | r.bit()?;
                len += 1;
                if let Some(&s) = used
                    .iter()
                    .find(|&&s| lengths[s] == len && codes[s] == code)
                {
                    break s;
                }
                if len >= 15 {
                    return Err(Error::Corrupt("invalid Huffman code".into()));
                }
            };
            syms.push(sym as u8);
        }
        let consumed = (nsyms_bits(&syms, &lengths)).div_ceil(8);
        if consumed != body.len() {
            return Err(Error::Corrupt("trailing bytes in density map".into()));
        }
        syms
    };

    let mut bits: Vec<bool> = syms
        .iter()
        .flat_map(|&s| (0..4).map(move |i| (s >> (3 - i)) & 1 == 1))
        .collect();
    if bits[nbits..].iter().any(|&b| b) {
        return Err(Error::Corrupt("nonzero density map padding".into()));
    }
    bits.truncate(nbits);
    Ok(bits)
}

fn nsyms_bits(syms: &[u8], lengths: &[u8; ALPHABET]) -> usize {
    syms.iter().map(|&s| lengths[s as usize] as usize).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_dense_map_is_table_only() {
        let bits = vec![false; 16];
        let p = encode_density_map(&bits).unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(decode_density_map(&p, 16).unwrap(), bits);
    }

    #[test]
    fn repeated_nibble_is_single_symbol() {
        let bits: Vec<bool> = [1, 0, 0, 1, 1, 0, 0, 1].iter().map(|&b| b == 1).collect();
        assert_eq!(symbols_of(&bits), vec![9, 9]);
        let p = encode_density_map(&bits).unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(decode_density_map(&p, 8).unwrap(), bits);
    }

    #[test]
    fn random_maps_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..300 {
            let n = if trial < 200 {
                256
            } else {
                rng.gen_range(1..300)
            };
            let p1 = rng.gen::<f64>();
            let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(p1)).collect();
            let p = encode_density_map(&bits).unwrap();
            assert_eq!(decode_density_map(&p, n).unwrap(), bits);
        }
    }

    #[test]
    fn lengths_satisfy_kraft_and_are_optimal_on_oracle() {
        // textbook frequencies with a known optimal cost of 224 bits
        let freq = [5u64, 9, 12, 13, 16, 45, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        let l = code_lengths(&freq);
        let cost: u64 = (0..ALPHABET).map(|s| freq[s] * l[s] as u64).sum();
        assert_eq!(cost, 224);
        let kraft: f64 = l
            .iter()
            .filter(|&&x| x > 0)
            .map(|&x| 0.5f64.powi(x as i32))
            .sum();
        assert!((kraft - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_codes_are_prefix_free() {
        let l = code_lengths(&[
            1, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384,
        ]);
        assert!(l.iter().all(|&x| (1..=15).contains(&x)));
        let c = canonical_codes(&l);
        for a in 0..ALPHABET {
            for b in 0..ALPHABET {
                if a != b && l[a] <= l[b] {
                    assert_ne!(c[b] >> (l[b] - l[a]), c[a], "{a} prefixes {b}");
                }
            }
        }
    }

    #[test]
    fn corrupt_tables_rejected() {
        assert!(encode_density_map(&[]).is_err());
        // two symbols of length 2: Kraft sum 1/2
        let mut p = vec![0x22, 0, 0, 0, 0, 0, 0, 0];
        p.push(0);
        assert!(decode_density_map(&p, 8).is_err());
        assert!(decode_density_map(&[0u8; 7], 4).is_err());
        assert!(decode_density_map(&[0u8; 8], 4).is_err());
    }
}
