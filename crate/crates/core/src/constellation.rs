//! Gray-labelled QPSK and 16-QAM with unit average energy.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Modulation::Qpsk),
            "16qam" | "16-qam" | "qam16" => Ok(Modulation::Qam16),
            _ => Err(Error::config(format!("unknown modulation {s:?}"))),
        }
    }
}

const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/√10

/// Per-axis Gray code for 4-PAM: 00 → -3, 01 → -1, 11 → +1, 10 → +3.
const PAM4_LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

#[inline]
fn pam4_label(x: f64) -> usize {
    if x < -2.0 {
        0b00
    } else if x < 0.0 {
        0b01
    } else if x < 2.0 {
        0b11
    } else {
        0b10
    }
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Constellation point for a label; the high half of the label bits drive
    /// the in-phase axis.
    #[inline]
    pub fn point(self, label: usize) -> Complex64 {
        match self {
            Modulation::Qpsk => {
                let i = if label & 0b10 == 0 { 1.0 } else { -1.0 };
                let q = if label & 0b01 == 0 { 1.0 } else { -1.0 };
                Complex64::new(i * FRAC_1_SQRT_2, q * FRAC_1_SQRT_2)
            }
            Modulation::Qam16 => Complex64::new(
                PAM4_LEVELS[(label >> 2) & 0b11] * QAM16_SCALE,
                PAM4_LEVELS[label & 0b11] * QAM16_SCALE,
            ),
        }
    }

    pub fn points(self) -> Vec<Complex64> {
        (0..self.order()).map(|l| self.point(l)).collect()
    }

    /// Nearest-point hard decision.
    #[inline]
    pub fn detect(self, z: Complex64) -> usize {
        match self {
            Modulation::Qpsk => (usize::from(z.re < 0.0) << 1) | usize::from(z.im < 0.0),
            Modulation::Qam16 => {
                (pam4_label(z.re / QAM16_SCALE) << 2) | pam4_label(z.im / QAM16_SCALE)
            }
        }
    }
}

/// Hard-detects equalized symbols `ŝ_u / tx_scale_u`.
pub fn detect(s_hat: &[Complex64], modulation: Modulation, tx_scale: &[f64]) -> Vec<usize> {
    s_hat
        .iter()
        .zip(tx_scale)
        .map(|(s, a)| modulation.detect(s / a))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [Modulation; 2] = [Modulation::Qpsk, Modulation::Qam16];

    fn brute_nearest(m: Modulation, z: Complex64) -> usize {
        (0..m.order())
            .min_by(|&a, &b| {
                (m.point(a) - z)
                    .norm_sqr()
                    .partial_cmp(&(m.point(b) - z).norm_sqr())
                    .unwrap()
            })
            .unwrap()
    }

    #[test]
    fn unit_average_energy() {
        for m in ALL {
            let e: f64 = m.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn qpsk_quadrant() {
        let l = Modulation::Qpsk.detect(Complex64::new(0.1, 0.9));
        assert_eq!(Modulation::Qpsk.point(l), Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2));
    }

    #[test]
    fn exact_points_detect_to_themselves() {
        for m in ALL {
            for l in 0..m.order() {
                assert_eq!(m.detect(m.point(l)), l);
            }
        }
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        for m in ALL {
            let pts = m.points();
            let dmin = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::MAX, f64::min);
            let mut edges = 0;
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate().skip(i + 1) {
                    if ((a - b).norm() - dmin).abs() < 1e-9 {
                        edges += 1;
                        assert_eq!((i ^ j).count_ones(), 1, "{m}: {i} vs {j}");
                    }
                }
            }
            // 4-point square has 4 edges, 4x4 grid has 24.
            assert_eq!(edges, if m == Modulation::Qpsk { 4 } else { 24 });
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("16qam".parse::<Modulation>().unwrap(), Modulation::Qam16);
        assert_eq!("QPSK".parse::<Modulation>().unwrap(), Modulation::Qpsk);
        assert!("8psk".parse::<Modulation>().is_err());
    }

    proptest! {
        #[test]
        fn slicer_matches_brute_force(re in -2.0f64..2.0, im in -2.0f64..2.0) {
            for m in ALL {
                let z = Complex64::new(re, im);
                prop_assert_eq!(m.detect(z), brute_nearest(m, z));
            }
        }

        #[test]
        fn conjugate_detection(re in -2.0f64..2.0, im in -2.0f64..2.0) {
            prop_assume!(im.abs() > 1e-9 && (im.abs() * 10f64.sqrt() - 2.0).abs() > 1e-9);
            for m in ALL {
                let z = Complex64::new(re, im);
                prop_assert_eq!(m.point(m.detect(z.conj())), m.point(m.detect(z)).conj());
            }
        }
    }
}
