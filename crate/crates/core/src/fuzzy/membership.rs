use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Triangular,
    Trapezoidal,
    Shoulder,
}

/// Piecewise-linear membership function.
///
/// `points` holds the breakpoints `(x, degree)` with strictly increasing `x`;
/// `below` and `above` are the degrees for inputs left of the first and
/// right of the last breakpoint (including the unbounded markers).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMembership")]
pub struct MembershipFunction {
    shape: Shape,
    points: Vec<[f64; 2]>,
    below: f64,
    above: f64,
}

#[derive(Deserialize)]
struct RawMembership {
    shape: Shape,
    points: Vec<[f64; 2]>,
    below: f64,
    above: f64,
}

impl TryFrom<RawMembership> for MembershipFunction {
    type Error = Error;

    fn try_from(raw: RawMembership) -> Result<Self> {
        MembershipFunction::new(raw.shape, raw.points, raw.below, raw.above)
    }
}

fn is_degree(mu: f64) -> bool {
    (0.0..=1.0).contains(&mu)
}

impl MembershipFunction {
    pub fn new(shape: Shape, points: Vec<[f64; 2]>, below: f64, above: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMembership("no breakpoints".into()));
        }
        if !is_degree(below) || !is_degree(above) {
            return Err(Error::InvalidMembership(format!(
                "saturation degrees ({below}, {above}) outside [0, 1]"
            )));
        }
        for [x, mu] in &points {
            if !x.is_finite() || !is_degree(*mu) {
                return Err(Error::InvalidMembership(format!("bad breakpoint ({x}, {mu})")));
            }
        }
        if points.windows(2).any(|w| w[0][0] >= w[1][0]) {
            return Err(Error::InvalidMembership("breakpoints must strictly increase".into()));
        }
        if shape == Shape::Triangular {
            let ok = points.len() == 3
                && points[0][1] == 0.0
                && points[1][1] == 1.0
                && points[2][1] == 0.0
                && below == 0.0
                && above == 0.0;
            if !ok {
                return Err(Error::InvalidMembership(
                    "a triangle needs breakpoints (a,0) (b,1) (c,0) and zero saturation".into(),
                ));
            }
        }
        Ok(Self { shape, points, below, above })
    }

    pub fn triangular(left: f64, peak: f64, right: f64) -> Result<Self> {
        Self::new(Shape::Triangular, vec![[left, 0.0], [peak, 1.0], [right, 0.0]], 0.0, 0.0)
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let mut points = vec![[a, 0.0], [b, 1.0], [c, 1.0], [d, 0.0]];
        points.dedup_by(|next, prev| next[0] == prev[0] && next[1] == prev[1]);
        Self::new(Shape::Trapezoidal, points, 0.0, 0.0)
    }

    /// Degree 1 from `start` up to `plateau_end`, falling to 0 at `foot`.
    /// `below` is the degree left of `start`.
    pub fn left_shoulder(start: f64, plateau_end: f64, foot: f64, below: f64) -> Result<Self> {
        let mut points = vec![[start, 1.0], [plateau_end, 1.0], [foot, 0.0]];
        points.dedup_by(|next, prev| next[0] == prev[0]);
        Self::new(Shape::Trapezoidal, points, below, 0.0)
    }

    /// Degree 0 up to `foot`, rising to 1 at `top` and saturating there.
    pub fn right_shoulder(foot: f64, top: f64) -> Result<Self> {
        Self::new(Shape::Shoulder, vec![[foot, 0.0], [top, 1.0]], 0.0, 1.0)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn saturation(&self) -> (f64, f64) {
        (self.below, self.above)
    }

    /// Peak of a triangular function.
    pub fn peak(&self) -> Option<f64> {
        (self.shape == Shape::Triangular).then(|| self.points[1][0])
    }

    pub fn degree(&self, x: ExtReal) -> f64 {
        match x {
            ExtReal::NegInf => self.below,
            ExtReal::PosInf => self.above,
            ExtReal::Finite(x) => self.degree_at(x),
        }
    }

    pub fn degree_at(&self, x: f64) -> f64 {
        let first = self.points[0];
        if x < first[0] {
            return self.below;
        }
        if x == first[0] {
            return first[1];
        }
        for w in self.points.windows(2) {
            let [x0, m0] = w[0];
            let [x1, m1] = w[1];
            if x <= x1 {
                return m0 + (m1 - m0) * (x - x0) / (x1 - x0);
            }
        }
        self.above
    }

    /// Points mapped to degree `w` by a triangular function.
    ///
    /// Returns the empty set for `w = 0` (the preimage would be unbounded),
    /// the peak for `w = 1` and one point per flank otherwise.
    pub fn preimage(&self, w: f64) -> Result<ArrayVec<f64, 2>> {
        if self.shape != Shape::Triangular {
            return Err(Error::InvalidMembership(
                "preimages are only defined for plateau-free triangles".into(),
            ));
        }
        if !is_degree(w) {
            return Err(Error::InvalidMembership(format!("degree {w} outside [0, 1]")));
        }
        let mut out = ArrayVec::new();
        let (a, b, c) = (self.points[0][0], self.points[1][0], self.points[2][0]);
        if w == 0.0 {
            return Ok(out);
        }
        if w == 1.0 {
            out.push(b);
        } else {
            out.push(a + w * (b - a));
            out.push(c - w * (c - b));
        }
        Ok(out)
    }
}
