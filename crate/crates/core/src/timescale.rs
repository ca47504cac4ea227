//! Bounded time scales stored exactly as a finite union of closed intervals
//! and isolated points.
//!
//! All operators here work on the closed-form representation, so the jump
//! operators and the graininess are exact: no sampling, no tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One piece of a time scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Segment {
    Interval { lo: f64, hi: f64 },
    Point { t: f64 },
}

impl Segment {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Segment::Interval { lo, hi }
    }

    pub fn point(t: f64) -> Self {
        Segment::Point { t }
    }

    pub fn start(&self) -> f64 {
        match *self {
            Segment::Interval { lo, .. } => lo,
            Segment::Point { t } => t,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            Segment::Interval { hi, .. } => hi,
            Segment::Point { t } => t,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start() <= t && t <= self.end()
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, Segment::Interval { .. })
    }

    /// Checks finiteness and ordering; degenerate intervals become points.
    fn normalized(self) -> Result<Self> {
        match self {
            Segment::Interval { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidSegment(format!(
                        "interval [{lo}, {hi}] has a non-finite endpoint"
                    )));
                }
                if lo > hi {
                    return Err(Error::InvalidSegment(format!(
                        "interval [{lo}, {hi}] has lo > hi"
                    )));
                }
                if lo == hi {
                    Ok(Segment::Point { t: lo })
                } else {
                    Ok(self)
                }
            }
            Segment::Point { t } => {
                if t.is_finite() {
                    Ok(self)
                } else {
                    Err(Error::InvalidSegment(format!("point {t} is not finite")))
                }
            }
        }
    }
}

/// Left/right classification of a point of a time scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointClass {
    pub right_scattered: bool,
    pub left_scattered: bool,
    pub is_max: bool,
    pub is_min: bool,
}

impl PointClass {
    pub fn is_isolated(&self) -> bool {
        self.right_scattered && self.left_scattered
    }

    /// `t < sup T` and `σ(t) = t`.
    pub fn is_right_dense(&self) -> bool {
        !self.right_scattered && !self.is_max
    }

    /// `t > inf T` and `ρ(t) = t`.
    pub fn is_left_dense(&self) -> bool {
        !self.left_scattered && !self.is_min
    }
}

#[derive(Deserialize)]
struct RawScale {
    segments: Vec<Segment>,
}

impl TryFrom<RawScale> for TimeScale {
    type Error = Error;

    fn try_from(raw: RawScale) -> Result<Self> {
        canonicalize(raw.segments)
    }
}

/// A nonempty bounded time scale in canonical form: segments sorted,
/// pairwise disjoint, with touching pieces merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScale")]
pub struct TimeScale {
    segments: Vec<Segment>,
}

/// Sorts and merges an arbitrary list of segments into canonical form.
pub fn canonicalize(raw: Vec<Segment>) -> Result<TimeScale> {
    if raw.is_empty() {
        return Err(Error::EmptyScale);
    }
    let mut segs = raw
        .into_iter()
        .map(Segment::normalized)
        .collect::<Result<Vec<_>>>()?;
    segs.sort_by(|a, b| a.start().total_cmp(&b.start()));

    let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
    for seg in segs {
        let Some(last) = out.last_mut() else {
            out.push(seg);
            continue;
        };
        if seg.start() > last.end() {
            out.push(seg);
            continue;
        }
        // Overlapping or touching: grow the last piece.
        let lo = last.start();
        let hi = last.end().max(seg.end());
        *last = if hi > lo {
            Segment::Interval { lo, hi }
        } else {
            Segment::Point { t: lo }
        };
    }
    Ok(TimeScale { segments: out })
}

impl TimeScale {
    pub fn new(raw: Vec<Segment>) -> Result<Self> {
        canonicalize(raw)
    }

    /// The closed interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        canonicalize(vec![Segment::interval(lo, hi)])
    }

    /// A purely discrete scale from a list of points.
    pub fn points(ts: &[f64]) -> Result<Self> {
        canonicalize(ts.iter().map(|&t| Segment::point(t)).collect())
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn min(&self) -> f64 {
        self.segments[0].start()
    }

    pub fn max(&self) -> f64 {
        self.segments[self.segments.len() - 1].end()
    }

    /// Index of the segment holding `t`, if any.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let idx = self.segments.partition_point(|s| s.end() < t);
        match self.segments.get(idx) {
            Some(s) if s.contains(t) => Some(idx),
            _ => None,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_some()
    }

    fn require(&self, t: f64) -> Result<usize> {
        self.locate(t).ok_or(Error::NotInScale(t))
    }

    /// Forward jump operator; `σ(max) = max`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let idx = self.require(t)?;
        match self.segments[idx] {
            Segment::Interval { hi, .. } if t < hi => Ok(t),
            _ => Ok(self.segments.get(idx + 1).map_or(t, Segment::start)),
        }
    }

    /// Backward jump operator; `ρ(min) = min`.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let idx = self.require(t)?;
        match self.segments[idx] {
            Segment::Interval { lo, .. } if t > lo => Ok(t),
            _ if idx == 0 => Ok(t),
            _ => Ok(self.segments[idx - 1].end()),
        }
    }

    /// `μ(t) = σ(t) − t`.
    pub fn graininess(&self, t: f64) -> Result<f64> {
        Ok(self.sigma(t)? - t)
    }

    pub fn classify(&self, t: f64) -> Result<PointClass> {
        let sigma = self.sigma(t)?;
        let rho = self.rho(t)?;
        Ok(PointClass {
            right_scattered: sigma > t,
            left_scattered: rho < t,
            is_max: t == self.max(),
            is_min: t == self.min(),
        })
    }

    /// `T^κ`: drops the maximum when it is left-scattered.
    pub fn kappa(&self) -> TimeScale {
        let n = self.segments.len();
        if n > 1 && !self.segments[n - 1].is_interval() {
            TimeScale {
                segments: self.segments[..n - 1].to_vec(),
            }
        } else {
            self.clone()
        }
    }

    /// `T ∩ [lo, hi]` for `lo, hi ∈ T`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<TimeScale> {
        let first = self.require(lo)?;
        let last = self.require(hi)?;
        if lo > hi {
            return Err(Error::BadRange(format!("restrict: {lo} > {hi}")));
        }
        let segments = self.segments[first..=last]
            .iter()
            .map(|seg| match *seg {
                Segment::Interval { lo: a, hi: b } => {
                    let (a, b) = (a.max(lo), b.min(hi));
                    if a < b {
                        Segment::Interval { lo: a, hi: b }
                    } else {
                        Segment::Point { t: a }
                    }
                }
                p => p,
            })
            .collect();
        Ok(TimeScale { segments })
    }

    /// True when every segment is an isolated point.
    pub fn is_discrete(&self) -> bool {
        self.segments.iter().all(|s| !s.is_interval())
    }

    /// True when the scale is one closed interval (no scattered points at all).
    pub fn is_continuum(&self) -> bool {
        self.segments.len() == 1 && self.segments[0].is_interval()
    }
}
