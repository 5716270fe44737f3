//! Extended real numbers for perception values.
//!
//! Distances and collision times are unbounded when a neighbour is absent or
//! when two vehicles do not close on each other. Those cases are carried as
//! explicit variants so membership evaluation can map them onto saturation
//! degrees instead of extrapolating from a large magnitude.

use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_negative(self) -> bool {
        match self {
            ExtReal::NegInf => true,
            ExtReal::Finite(x) => x < 0.0,
            ExtReal::PosInf => false,
        }
    }

    /// `numerator / denominator` where a zero denominator or an unbounded
    /// numerator yields `+inf`.
    ///
    /// Every ratio in the perception model is a distance over a closing speed;
    /// a non-closing pair (zero denominator) never collides.
    pub fn ratio(numerator: ExtReal, denominator: f64) -> ExtReal {
        match numerator {
            ExtReal::Finite(n) if denominator != 0.0 => ExtReal::Finite(n / denominator),
            _ => ExtReal::PosInf,
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Lossy conversion for plotting and logging.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (PosInf, _) | (_, NegInf) => Some(Ordering::Greater),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_places_markers_at_the_ends() {
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e300));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
        assert!(ExtReal::Finite(1.0) < ExtReal::Finite(2.0));
        assert_eq!(ExtReal::PosInf.min(ExtReal::Finite(3.0)), ExtReal::Finite(3.0));
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(ExtReal::ratio(ExtReal::Finite(46.0), 10.0), ExtReal::Finite(4.6));
        assert_eq!(ExtReal::ratio(ExtReal::Finite(46.0), 0.0), ExtReal::PosInf);
        assert_eq!(ExtReal::ratio(ExtReal::Finite(46.0), -0.0), ExtReal::PosInf);
        assert_eq!(ExtReal::ratio(ExtReal::PosInf, -3.0), ExtReal::PosInf);
        assert!(ExtReal::ratio(ExtReal::Finite(46.0), -5.0).is_negative());
    }
}
