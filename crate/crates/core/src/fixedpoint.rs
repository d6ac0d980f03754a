//! Sign-magnitude number formats used throughout the datapath.
//!
//! Three widths appear in the MAC unit: 8-bit operands (1 sign + 7
//! magnitude bits), 15-bit products (1 + 14) and the 21-bit accumulator
//! (1 + 20). All three keep a single canonical zero: a zero magnitude
//! always carries a clear sign bit.

use std::fmt;

use crate::error::{Error, Result};

/// Largest 7-bit magnitude.
pub const MAG7_MAX: u8 = 127;
/// Largest 14-bit product magnitude reachable from two 7-bit operands.
pub const PRODUCT_MAG_MAX: u16 = 127 * 127;
/// Largest 20-bit accumulator magnitude.
pub const ACC_MAG_MAX: u32 = (1 << 20) - 1;

/// 8-bit sign-magnitude scalar. Bit 7 is the sign, bits 6..0 the magnitude.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SignMag8 {
    negative: bool,
    mag: u8,
}

impl SignMag8 {
    pub const ZERO: SignMag8 = SignMag8 {
        negative: false,
        mag: 0,
    };

    pub fn new(negative: bool, mag: u8) -> Result<Self> {
        if mag > MAG7_MAX {
            return Err(Error::Range(mag as i64));
        }
        Ok(Self::from_parts(negative, mag))
    }

    /// Non-negative value with the given magnitude, clamped to 127.
    pub fn positive(mag: u8) -> Self {
        Self::from_parts(false, mag.min(MAG7_MAX))
    }

    /// Same magnitude with the given sign (still normalised at zero).
    pub fn with_sign(self, negative: bool) -> Self {
        Self::from_parts(negative, self.mag)
    }

    #[inline]
    fn from_parts(negative: bool, mag: u8) -> Self {
        SignMag8 {
            negative: negative && mag != 0,
            mag,
        }
    }

    pub fn encode(v: i32) -> Result<Self> {
        if !(-127..=127).contains(&v) {
            return Err(Error::Range(v as i64));
        }
        Ok(Self::from_parts(v < 0, v.unsigned_abs() as u8))
    }

    #[inline]
    pub fn decode(self) -> i32 {
        if self.negative {
            -(self.mag as i32)
        } else {
            self.mag as i32
        }
    }

    /// Reads the wire byte. `0x80` (negative zero) becomes `+0`.
    #[inline]
    pub fn from_byte(byte: u8) -> Self {
        Self::from_parts(byte & 0x80 != 0, byte & 0x7f)
    }

    #[inline]
    pub fn to_byte(self) -> u8 {
        ((self.negative as u8) << 7) | self.mag
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.negative
    }

    #[inline]
    pub fn mag(self) -> u8 {
        self.mag
    }
}

impl fmt::Debug for SignMag8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignMag8({:+})", self.decode())
    }
}

/// 15-bit sign-magnitude multiplier output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Product15 {
    negative: bool,
    mag: u16,
}

impl Product15 {
    pub fn new(negative: bool, mag: u16) -> Result<Self> {
        if mag > PRODUCT_MAG_MAX {
            return Err(Error::Range(mag as i64));
        }
        Ok(Self::from_parts(negative, mag))
    }

    #[inline]
    pub(crate) fn from_parts(negative: bool, mag: u16) -> Self {
        debug_assert!(mag <= PRODUCT_MAG_MAX);
        Product15 {
            negative: negative && mag != 0,
            mag,
        }
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.negative
    }

    #[inline]
    pub fn mag(self) -> u16 {
        self.mag
    }

    #[inline]
    pub fn decode(self) -> i32 {
        if self.negative {
            -(self.mag as i32)
        } else {
            self.mag as i32
        }
    }
}

/// 21-bit sign-magnitude accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignedAcc {
    negative: bool,
    mag: u32,
}

impl SignedAcc {
    pub const ZERO: SignedAcc = SignedAcc {
        negative: false,
        mag: 0,
    };

    pub fn new(negative: bool, mag: u32) -> Result<Self> {
        if mag > ACC_MAG_MAX {
            return Err(Error::Range(mag as i64));
        }
        Ok(Self::from_parts(negative, mag))
    }

    /// Saturating conversion from a plain integer.
    pub fn from_i64(v: i64) -> Self {
        let mag = v.unsigned_abs().min(ACC_MAG_MAX as u64) as u32;
        Self::from_parts(v < 0, mag)
    }

    #[inline]
    fn from_parts(negative: bool, mag: u32) -> Self {
        SignedAcc {
            negative: negative && mag != 0,
            mag,
        }
    }

    #[inline]
    pub fn is_negative(self) -> bool {
        self.negative
    }

    #[inline]
    pub fn mag(self) -> u32 {
        self.mag
    }

    #[inline]
    pub fn decode(self) -> i32 {
        if self.negative {
            -(self.mag as i32)
        } else {
            self.mag as i32
        }
    }

    /// Adds a signed term given as sign and magnitude, the way the MAC's
    /// adder/subtractor/comparator does it.
    #[inline]
    pub fn add_signed_mag(self, negative: bool, mag: u32) -> Self {
        let mag = mag.min(ACC_MAG_MAX);
        if self.negative == negative {
            Self::from_parts(negative, (self.mag + mag).min(ACC_MAG_MAX))
        } else if self.mag >= mag {
            Self::from_parts(self.negative, self.mag - mag)
        } else {
            Self::from_parts(negative, mag - self.mag)
        }
    }

    #[inline]
    pub fn add_product(self, p: Product15) -> Self {
        self.add_signed_mag(p.negative, p.mag as u32)
    }
}

/// Adds `p` (with `|p|` clamped to 2^20 - 1) to `acc`, saturating at the
/// 21-bit bounds. Never yields negative zero.
pub fn acc_add(acc: SignedAcc, p: i64) -> SignedAcc {
    let mag = p.unsigned_abs().min(ACC_MAG_MAX as u64) as u32;
    acc.add_signed_mag(p < 0, mag)
}

/// Saturation stage: logical right shift, then clamp to 7 bits.
#[inline]
pub fn rescale_clamp(mag: u32, shift: u32) -> u8 {
    let shifted = if shift >= 32 { 0 } else { mag >> shift };
    shifted.min(MAG7_MAX as u32) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn encode_examples() {
        let five = SignMag8::encode(5).unwrap();
        assert_eq!((five.is_negative(), five.mag(), five.to_byte()), (false, 5, 0x05));
        let minus_five = SignMag8::encode(-5).unwrap();
        assert_eq!(
            (minus_five.is_negative(), minus_five.mag(), minus_five.to_byte()),
            (true, 5, 0x85)
        );
        assert_eq!(SignMag8::encode(0).unwrap(), SignMag8::ZERO);
        assert!(matches!(SignMag8::encode(128), Err(Error::Range(128))));
        assert!(matches!(SignMag8::encode(-128), Err(Error::Range(-128))));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(SignMag8::new(true, 127).unwrap().decode(), -127);
        assert_eq!(SignMag8::ZERO.decode(), 0);
        let nz = SignMag8::from_byte(0x80);
        assert_eq!(nz, SignMag8::ZERO);
        assert!(!nz.is_negative());
        assert_eq!(nz.decode(), 0);
    }

    #[test]
    fn encode_decode_exhaustive() {
        for v in -127..=127 {
            let x = SignMag8::encode(v).unwrap();
            assert_eq!(x.decode(), v);
            assert_eq!(x.is_negative(), v < 0);
            assert_eq!(SignMag8::from_byte(x.to_byte()), x);
        }
    }

    #[test]
    fn acc_add_examples() {
        let r = acc_add(SignedAcc::from_i64(10), -25);
        assert_eq!((r.is_negative(), r.mag()), (true, 15));
        let r = acc_add(SignedAcc::from_i64(7), -7);
        assert_eq!((r.is_negative(), r.mag()), (false, 0));
        let r = acc_add(SignedAcc::from_i64(ACC_MAG_MAX as i64), 5);
        assert_eq!(r.decode(), ACC_MAG_MAX as i32);
        let r = acc_add(SignedAcc::from_i64(-(ACC_MAG_MAX as i64)), -5);
        assert_eq!(r.decode(), -(ACC_MAG_MAX as i32));
    }

    #[test]
    fn acc_add_matches_wide_integer_sum() {
        let bound = ACC_MAG_MAX as i64;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let a = rng.random_range(-bound..=bound);
            let p = rng.random_range(-bound..=bound);
            let r = acc_add(SignedAcc::from_i64(a), p);
            assert_eq!(r.decode() as i64, (a + p).clamp(-bound, bound));
            assert!(!(r.is_negative() && r.mag() == 0));
        }
    }

    #[test]
    fn rescale_clamp_examples() {
        assert_eq!(rescale_clamp(300, 4), 18);
        assert_eq!(rescale_clamp(50_000, 4), 127);
        for s in 0..=20 {
            assert_eq!(rescale_clamp(0, s), 0);
        }
    }

    #[test]
    fn range_checked_constructors() {
        assert!(SignMag8::new(false, 128).is_err());
        assert!(Product15::new(false, PRODUCT_MAG_MAX + 1).is_err());
        assert!(SignedAcc::new(false, ACC_MAG_MAX + 1).is_err());
        assert_eq!(Product15::new(true, 0).unwrap().decode(), 0);
        assert!(!SignedAcc::new(true, 0).unwrap().is_negative());
    }
}
