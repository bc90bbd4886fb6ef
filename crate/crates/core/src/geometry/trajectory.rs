use super::Pose;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stamped {
    pub timestamp: f64,
    pub pose: Pose,
}

/// Pose sequence with strictly increasing timestamps (seconds).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimedTrajectory {
    entries: Vec<Stamped>,
}

impl TimedTrajectory {
    pub fn new(entries: Vec<Stamped>) -> Result<Self> {
        if let Some(i) = entries.windows(2).position(|w| !(w[1].timestamp > w[0].timestamp)) {
            return Err(Error::invalid(format!(
                "timestamps not strictly increasing at entry {}",
                i + 1
            )));
        }
        if entries.iter().any(|e| !e.timestamp.is_finite()) {
            return Err(Error::invalid("non-finite timestamp"));
        }
        Ok(Self { entries })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, Pose)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(timestamp, pose)| Stamped { timestamp, pose })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[Stamped] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.timestamp)
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose> + '_ {
        self.entries.iter().map(|e| &e.pose)
    }

    /// Applies `f` to every pose and `shift` to every timestamp. A constant
    /// shift preserves ordering.
    pub fn map(&self, shift: f64, f: impl Fn(&Pose) -> Pose) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| Stamped {
                    timestamp: e.timestamp + shift,
                    pose: f(&e.pose),
                })
                .collect(),
        }
    }
}
