//! k-median and k-means clustering over the result of a join query, computed
//! from weighted coresets without materializing the join.

// Display and FromStr for fieldless enums with fixed lowercase names.
macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ }) => {
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl std::str::FromStr for $ty {
            type Err = $crate::Error;

            fn from_str(s: &str) -> $crate::Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err($crate::Error::InvalidInput(format!("unknown {}: {other}", stringify!($ty).to_lowercase()))),
                }
            }
        }
    };
}

pub mod clustering;
pub mod coreset;
pub mod error;
#[cfg(test)]
pub(crate) mod fixtures;
pub mod geometry;
pub mod ghd;
pub mod oracle;
pub mod pipeline;
pub mod points;
pub mod rect;
pub mod relational;

pub use error::{Error, Result};
pub use points::WeightedPointSet;
