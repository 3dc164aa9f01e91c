use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Bit width of a quantizer, with `Infinite` meaning the stage is bypassed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bits {
    Finite(u32),
    Infinite,
}

impl Bits {
    pub fn finite(self) -> Option<u32> {
        match self {
            Bits::Finite(b) => Some(b),
            Bits::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Bits::Infinite)
    }

    /// Sort key used for lexicographic tie-breaking; infinity sorts last.
    pub(crate) fn key(self) -> u32 {
        self.finite().unwrap_or(u32::MAX)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bits::Finite(b) => write!(f, "{b}"),
            Bits::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "inf" | "infinite" | "∞" => Ok(Bits::Infinite),
            _ => t
                .parse::<u32>()
                .map(Bits::Finite)
                .map_err(|_| Error::config(format!("invalid bit width {s:?}"))),
        }
    }
}

impl Serialize for Bits {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bits::Finite(b) => s.serialize_u32(*b),
            Bits::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(b) => Ok(Bits::Finite(b)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
