use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// Train/validation block ordering.
///
/// `A`: train input, validation input, train output, validation output.
/// `B`: train input, train output, validation input, validation output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A => "A",
            Variant::B => "B",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            _ => Err(format!("unknown split variant `{s}`")),
        }
    }
}

/// Index blocks over the source series, each `[start, end)`. Input sample
/// `i` of a block pairs with output sample `i` of its partner block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub variant: Variant,
    pub train_size: usize,
    pub val_size: usize,
    pub train_in: Range<usize>,
    pub train_out: Range<usize>,
    pub val_in: Range<usize>,
    pub val_out: Range<usize>,
}

pub fn make_split(
    variant: Variant,
    train_size: usize,
    val_size: usize,
) -> Result<SplitSpec, ExperimentError> {
    if train_size == 0 || val_size == 0 {
        return Err(ExperimentError::Config(
            "train_size and val_size must both be at least 1".into(),
        ));
    }
    let (a, v) = (train_size, val_size);
    let (train_in, train_out, val_in, val_out) = match variant {
        Variant::A => (0..a, a + v..2 * a + v, a..a + v, 2 * a + v..2 * a + 2 * v),
        Variant::B => (0..a, a..2 * a, 2 * a..2 * a + v, 2 * a + v..2 * a + 2 * v),
    };
    Ok(SplitSpec {
        variant,
        train_size,
        val_size,
        train_in,
        train_out,
        val_in,
        val_out,
    })
}

impl SplitSpec {
    pub fn total_len(&self) -> usize {
        2 * self.train_size + 2 * self.val_size
    }

    /// Blocks in series order.
    pub fn ordered_blocks(&self) -> [Range<usize>; 4] {
        match self.variant {
            Variant::A => [
                self.train_in.clone(),
                self.val_in.clone(),
                self.train_out.clone(),
                self.val_out.clone(),
            ],
            Variant::B => [
                self.train_in.clone(),
                self.train_out.clone(),
                self.val_in.clone(),
                self.val_out.clone(),
            ],
        }
    }

    pub fn check_bounds(&self, series_len: usize) -> Result<(), ExperimentError> {
        if series_len < self.total_len() {
            return Err(ExperimentError::Bounds {
                needed: self.total_len(),
                available: series_len,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn variant_a_900() {
        let s = make_split(Variant::A, 900, 100).unwrap();
        assert_eq!(s.train_in, 0..900);
        assert_eq!(s.val_in, 900..1000);
        assert_eq!(s.train_out, 1000..1900);
        assert_eq!(s.val_out, 1900..2000);
    }

    #[test]
    fn variant_b_300() {
        let s = make_split(Variant::B, 300, 100).unwrap();
        assert_eq!(s.ordered_blocks(), [0..300, 300..600, 600..700, 700..800]);
        assert_eq!(s.total_len(), 800);
    }

    #[test]
    fn variant_a_300() {
        let s = make_split(Variant::A, 300, 100).unwrap();
        assert_eq!(s.ordered_blocks(), [0..300, 300..400, 400..700, 700..800]);
    }

    #[test]
    fn bounds_and_sizes() {
        assert!(make_split(Variant::A, 0, 1).is_err());
        assert!(make_split(Variant::B, 1, 0).is_err());
        let s = make_split(Variant::B, 10, 5).unwrap();
        assert!(s.check_bounds(30).is_ok());
        assert!(matches!(
            s.check_bounds(29),
            Err(ExperimentError::Bounds {
                needed: 30,
                available: 29
            })
        ));
    }

    proptest! {
        #[test]
        fn blocks_tile_the_prefix(b in any::<bool>(), a in 1usize..5000, v in 1usize..5000) {
            let variant = if b { Variant::B } else { Variant::A };
            let s = make_split(variant, a, v).unwrap();
            let blocks = s.ordered_blocks();
            prop_assert_eq!(blocks[0].start, 0);
            for w in blocks.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            prop_assert_eq!(blocks[3].end, s.total_len());
            prop_assert_eq!(s.train_in.len(), s.train_out.len());
            prop_assert_eq!(s.val_in.len(), s.val_out.len());
        }
    }
}
