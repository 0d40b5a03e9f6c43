//! Fixed-width and power-of-two binned means.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinScheme {
    /// Bin `b >= 1` covers keys in `(w (b - 1), w b]`.
    FixedWidth(u64),
    /// Bin `b >= 1` covers keys in `[2^(b - 1), 2^b)`.
    Pow2,
}

impl BinScheme {
    /// Bin of `key`, or `None` when the key is outside every bin.
    pub fn bin_of(&self, key: f64) -> Option<u64> {
        if !(key.is_finite() && key > 0.0) {
            return None;
        }
        match *self {
            BinScheme::FixedWidth(w) => {
                if w == 0 {
                    return None;
                }
                Some(libm::ceil(key / w as f64) as u64)
            }
            BinScheme::Pow2 => {
                if key < 1.0 {
                    return None;
                }
                // key = m * 2^e with m in [1, 2): read e from the exponent bits.
                let exponent = ((key.to_bits() >> 52) & 0x7ff) as i64 - 1023;
                Some(exponent as u64 + 1)
            }
        }
    }

    /// Half-open bounds `(lower, upper)` of bin `b`; for fixed width the lower
    /// bound is exclusive and the upper inclusive, for Pow2 the reverse.
    pub fn bounds(&self, b: u64) -> (f64, f64) {
        match *self {
            BinScheme::FixedWidth(w) => ((w * (b - 1)) as f64, (w * b) as f64),
            BinScheme::Pow2 => (libm::ldexp(1.0, b as i32 - 1), libm::ldexp(1.0, b as i32)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bin {
    pub label: u64,
    pub lower: f64,
    pub upper: f64,
    /// Mean of the keys that fell in the bin.
    pub key_mean: f64,
    pub mean: f64,
    pub count: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BinnedMeans {
    /// Non-empty bins in increasing order.
    pub bins: Vec<Bin>,
    /// Pairs whose key fell outside every bin (nonpositive, or below 1 for
    /// Pow2).
    pub rejected: u64,
}

/// Mean value per bin of key.
pub fn binned_mean(pairs: impl IntoIterator<Item = (f64, f64)>, scheme: BinScheme) -> BinnedMeans {
    // (sum of keys, sum of values, count)
    let mut acc: BTreeMap<u64, (f64, f64, u64)> = BTreeMap::new();
    let mut rejected = 0;
    for (key, value) in pairs {
        match scheme.bin_of(key) {
            Some(b) => {
                let e = acc.entry(b).or_insert((0.0, 0.0, 0));
                e.0 += key;
                e.1 += value;
                e.2 += 1;
            }
            None => rejected += 1,
        }
    }
    let bins = acc
        .into_iter()
        .map(|(label, (ks, vs, count))| {
            let (lower, upper) = scheme.bounds(label);
            Bin {
                label,
                lower,
                upper,
                key_mean: ks / count as f64,
                mean: vs / count as f64,
                count,
            }
        })
        .collect();
    BinnedMeans { bins, rejected }
}
