//! Discretisation of the day into equal segments.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfcaError};

pub const MINUTES_PER_DAY: f64 = 1440.0;

/// Day of week, Monday first. Matches the dow ∈ 1..7 CSV encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dow {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

pub const ALL_DOWS: [Dow; 7] = [
    Dow::Mon,
    Dow::Tue,
    Dow::Wed,
    Dow::Thu,
    Dow::Fri,
    Dow::Sat,
    Dow::Sun,
];

impl Dow {
    pub fn from_index(i: u8) -> Option<Dow> {
        ALL_DOWS.get(i.checked_sub(1)? as usize).copied()
    }

    /// 1-based index, Mon = 1.
    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Dow::Mon => "Mon",
            Dow::Tue => "Tue",
            Dow::Wed => "Wed",
            Dow::Thu => "Thu",
            Dow::Fri => "Fri",
            Dow::Sat => "Sat",
            Dow::Sun => "Sun",
        }
    }

    pub fn is_weekend(self) -> bool {
        matches!(self, Dow::Sat | Dow::Sun)
    }
}

/// Equal-width discretisation of one day. Segments are 1-based: segment `s`
/// spans minutes `[(s-1)*w, s*w)` and is represented by its midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentGrid {
    pub segments_per_day: usize,
    pub segment_minutes: f64,
    /// Segment index treated as the first segment when a rotated (shifted)
    /// day axis is required, e.g. decoding with the day starting at 4 pm.
    pub day_start_offset: usize,
}

impl Default for SegmentGrid {
    fn default() -> Self {
        SegmentGrid {
            segments_per_day: 96,
            segment_minutes: 15.0,
            day_start_offset: 64,
        }
    }
}

impl SegmentGrid {
    pub fn new(segments_per_day: usize, day_start_offset: usize) -> Result<Self> {
        if segments_per_day == 0 || 1440 % segments_per_day != 0 {
            return Err(SfcaError::Config(format!(
                "segments_per_day {segments_per_day} must divide 1440"
            )));
        }
        if day_start_offset < 1 || day_start_offset > segments_per_day {
            return Err(SfcaError::Config(format!(
                "day_start_offset {day_start_offset} outside 1..{segments_per_day}"
            )));
        }
        Ok(SegmentGrid {
            segments_per_day,
            segment_minutes: MINUTES_PER_DAY / segments_per_day as f64,
            day_start_offset,
        })
    }

    /// Representative time of segment `s` (1-based): the segment midpoint,
    /// in minutes after midnight.
    pub fn midpoint(&self, s: usize) -> f64 {
        debug_assert!(s >= 1 && s <= self.segments_per_day);
        (s as f64 - 0.5) * self.segment_minutes
    }

    /// Segment (1-based) containing minute-of-day `m`.
    pub fn segment_of(&self, minute: f64) -> usize {
        let s = (minute / self.segment_minutes).floor() as usize + 1;
        s.min(self.segments_per_day)
    }

    /// Segments lost to first/second differencing (the first two of each day).
    pub fn usable_segments(&self) -> usize {
        self.segments_per_day - 2
    }
}
