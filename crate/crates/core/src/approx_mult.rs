//! 7x7 unsigned array multiplier with a 5-bit error-control input.
//!
//! The product is assembled column by column (column `c` holds the partial
//! products `a[i] & b[j]` with `i + j = c`). Mask bit `i` switches columns
//! `2i` and `2i + 1` to OR-compression: the column's partial products
//! collapse to a single OR bit, which then enters the ripple carry chain
//! like any other column value. Exact columns feed their full popcount.
//!
//! Every column contributes at most its exact value and the carry chain is
//! an exact adder over column values, so approximate products never exceed
//! the exact product and adding mask bits never increases the result.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fixedpoint::{Product15, SignMag8, MAG7_MAX};

/// Number of error-control configurations (5-bit mask).
pub const CONFIG_COUNT: usize = 32;
/// Columns 0..=9 can be approximated; 10..=13 are always exact.
pub const APPROXIMABLE_COLUMNS: u32 = 10;
/// Output columns of a 7x7 product.
pub const PRODUCT_COLUMNS: u32 = 14;
/// Operand pairs per configuration: 128 x 128.
pub const OPERAND_PAIRS: usize = 1 << 14;

/// The 5-bit error-control word. Mask 0 is the exact configuration.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultConfig(u8);

impl MultConfig {
    pub const EXACT: MultConfig = MultConfig(0);
    /// Every approximable column pair switched on.
    pub const MOST_APPROXIMATE: MultConfig = MultConfig(31);

    pub fn new(mask: u8) -> Result<Self> {
        if mask as usize >= CONFIG_COUNT {
            return Err(Error::contract(format!(
                "multiplier configuration {mask} out of range 0..=31"
            )));
        }
        Ok(MultConfig(mask))
    }

    /// All 32 configurations in ascending mask order.
    pub fn all() -> impl Iterator<Item = MultConfig> + Clone {
        (0..CONFIG_COUNT as u8).map(MultConfig)
    }

    #[inline]
    pub fn mask(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_exact(self) -> bool {
        self.0 == 0
    }

    /// Bit-set inclusion: every column pair approximated by `self` is also
    /// approximated by `other`.
    #[inline]
    pub fn is_subset_of(self, other: MultConfig) -> bool {
        self.0 & other.0 == self.0
    }
}

impl fmt::Debug for MultConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultConfig({:#07b})", self.0)
    }
}

impl fmt::Display for MultConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Set of product columns that are OR-compressed under a configuration.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ColumnPlan {
    bits: u16,
}

impl ColumnPlan {
    #[inline]
    pub fn contains(self, column: u32) -> bool {
        column < 16 && self.bits >> column & 1 == 1
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn columns(self) -> impl Iterator<Item = u32> {
        (0..16).filter(move |&c| self.contains(c))
    }
}

pub fn approx_columns(cfg: MultConfig) -> ColumnPlan {
    let mut bits = 0u16;
    for pair in 0..5 {
        if cfg.0 >> pair & 1 == 1 {
            bits |= 0b11 << (2 * pair);
        }
    }
    ColumnPlan { bits }
}

/// Number of partial products landing in `column` of a 7x7 array.
pub fn column_population(column: u32) -> u32 {
    if column > 12 {
        0
    } else {
        7 - (column as i32 - 6).unsigned_abs()
    }
}

/// Column-level evaluation of the configurable multiplier.
pub fn multiply_mag(a: u8, b: u8, cfg: MultConfig) -> u16 {
    debug_assert!(a <= MAG7_MAX && b <= MAG7_MAX);
    let (a, b) = (a as u32 & 0x7f, b as u32 & 0x7f);
    let plan = approx_columns(cfg);
    let mut carry = 0u32;
    let mut out = 0u32;
    for c in 0..PRODUCT_COLUMNS {
        let lo = c.saturating_sub(6);
        let hi = c.min(6);
        let mut ones = 0u32;
        for i in lo..=hi {
            ones += (a >> i) & (b >> (c - i)) & 1;
        }
        let value = if plan.contains(c) {
            (ones != 0) as u32
        } else {
            ones
        };
        let total = value + carry;
        out |= (total & 1) << c;
        carry = total >> 1;
    }
    debug_assert_eq!(carry, 0, "carry out of the product MSB");
    out as u16
}

/// Signed wrapper: XOR of the operand signs, magnitude from the array.
pub fn multiply_signed(a: SignMag8, b: SignMag8, cfg: MultConfig) -> Product15 {
    let mag = multiply_mag(a.mag(), b.mag(), cfg);
    Product15::from_parts(a.is_negative() ^ b.is_negative(), mag)
}

/// Precomputed products for one configuration, indexed by `(a << 7) | b`.
/// Inference goes through these tables; they are built from
/// [`multiply_mag`] and are therefore bit-identical to it.
pub struct ProductTable {
    cfg: MultConfig,
    products: Box<[u16]>,
}

impl ProductTable {
    pub fn build(cfg: MultConfig) -> Self {
        let products = (0..OPERAND_PAIRS)
            .map(|idx| multiply_mag((idx >> 7) as u8, (idx & 0x7f) as u8, cfg))
            .collect();
        ProductTable { cfg, products }
    }

    pub fn config(&self) -> MultConfig {
        self.cfg
    }

    #[inline]
    pub fn mag(&self, a: u8, b: u8) -> u16 {
        self.products[((a as usize & 0x7f) << 7) | (b as usize & 0x7f)]
    }

    #[inline]
    pub fn multiply_signed(&self, a: SignMag8, b: SignMag8) -> Product15 {
        Product15::from_parts(a.is_negative() ^ b.is_negative(), self.mag(a.mag(), b.mag()))
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.products
    }
}

static TABLES: OnceLock<Vec<ProductTable>> = OnceLock::new();

/// Shared product table for `cfg`; all 32 are built on first use.
pub fn product_table(cfg: MultConfig) -> &'static ProductTable {
    let tables = TABLES.get_or_init(|| {
        let configs: Vec<MultConfig> = MultConfig::all().collect();
        Execution::default().map(&configs, |&c| ProductTable::build(c))
    });
    &tables[cfg.index()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mask: u8) -> MultConfig {
        MultConfig::new(mask).unwrap()
    }

    #[test]
    fn column_plans() {
        assert!(approx_columns(cfg(0)).is_empty());
        assert_eq!(approx_columns(cfg(1)).columns().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(
            approx_columns(cfg(31)).columns().collect::<Vec<_>>(),
            (0..10).collect::<Vec<_>>()
        );
        for m in MultConfig::all() {
            assert_eq!(approx_columns(m).len(), 2 * m.mask().count_ones() as usize);
        }
        assert!(MultConfig::new(32).is_err());
    }

    #[test]
    fn column_populations_sum_to_49() {
        let pops: Vec<u32> = (0..14).map(column_population).collect();
        assert_eq!(pops, vec![1, 2, 3, 4, 5, 6, 7, 6, 5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(multiply_mag(127, 127, cfg(0)), 16129);
        assert_eq!(multiply_mag(3, 3, cfg(1)), 7);
        assert_eq!(multiply_mag(127, 127, cfg(31)), 12287);
    }

    #[test]
    fn signed_examples() {
        let s = |v| SignMag8::encode(v).unwrap();
        let p = multiply_signed(s(3), s(-3), cfg(0));
        assert_eq!((p.is_negative(), p.mag()), (true, 9));
        let p = multiply_signed(s(-5), s(-2), cfg(0));
        assert_eq!((p.is_negative(), p.mag()), (false, 10));
        for m in MultConfig::all() {
            for v in [-127, -3, 0, 9, 127] {
                let p = multiply_signed(s(0), s(v), m);
                assert_eq!((p.is_negative(), p.mag()), (false, 0));
                let p = multiply_signed(s(v), s(0), m);
                assert_eq!((p.is_negative(), p.mag()), (false, 0));
            }
        }
    }

    #[test]
    fn commutative_everywhere() {
        for m in MultConfig::all() {
            for a in 0..=127u8 {
                for b in 0..a {
                    assert_eq!(multiply_mag(a, b, m), multiply_mag(b, a, m));
                }
            }
        }
    }

    #[test]
    fn tables_match_column_evaluation() {
        for m in MultConfig::all() {
            let t = product_table(m);
            assert_eq!(t.config(), m);
            for a in 0..=127u8 {
                for b in 0..=127u8 {
                    assert_eq!(t.mag(a, b), multiply_mag(a, b, m));
                }
            }
        }
    }
}
