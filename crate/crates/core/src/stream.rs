//! Time-ordered photon / click records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PS_PER_SECOND: f64 = 1e12;

/// Convert seconds to integer picoseconds, rounding to nearest.
pub fn secs_to_ps(seconds: f64) -> u64 {
    (seconds * PS_PER_SECOND).round().max(0.0) as u64
}

pub fn ps_to_secs(ps: u64) -> f64 {
    ps as f64 / PS_PER_SECOND
}

/// Origin of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Tag {
    /// Photon from the emitter under study.
    Signal = 0,
    /// Photon from another transition leaking through the filter.
    Background = 1,
    /// Detector dark count.
    Dark = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub time: u64,
    pub tag: Tag,
}

impl Event {
    pub fn new(time: u64, tag: Tag) -> Self {
        Event { time, tag }
    }
}

/// Events ordered by nondecreasing time within `[0, duration]` picoseconds.
///
/// Stored column-wise; the time column is what every analysis scans.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventStream {
    times: Vec<u64>,
    tags: Vec<Tag>,
    duration: u64,
}

impl EventStream {
    pub fn empty(duration_ps: u64) -> Self {
        EventStream {
            times: Vec::new(),
            tags: Vec::new(),
            duration: duration_ps,
        }
    }

    /// Build a stream from events, checking ordering and range.
    pub fn from_events(events: impl IntoIterator<Item = Event>, duration_ps: u64) -> Result<Self> {
        let (times, tags) = events.into_iter().map(|e| (e.time, e.tag)).unzip();
        Self::from_columns(times, tags, duration_ps)
    }

    /// Build a single-tag stream from raw timestamps, checking ordering and range.
    pub fn from_times(times: Vec<u64>, tag: Tag, duration_ps: u64) -> Result<Self> {
        let tags = vec![tag; times.len()];
        Self::from_columns(times, tags, duration_ps)
    }

    pub fn from_columns(times: Vec<u64>, tags: Vec<Tag>, duration_ps: u64) -> Result<Self> {
        if times.len() != tags.len() {
            return Err(Error::config(format!(
                "{} timestamps but {} tags",
                times.len(),
                tags.len()
            )));
        }
        let s = EventStream {
            times,
            tags,
            duration: duration_ps,
        };
        s.validate()?;
        Ok(s)
    }

    /// Build from events in arbitrary order; sorts by time (stable).
    pub(crate) fn from_unsorted(mut events: Vec<Event>, duration_ps: u64) -> Self {
        events.sort_by_key(|e| e.time);
        let (times, tags) = events.into_iter().map(|e| (e.time, e.tag)).unzip();
        let s = EventStream {
            times,
            tags,
            duration: duration_ps,
        };
        debug_assert!(s.validate().is_ok());
        s
    }

    pub(crate) fn from_sorted_unchecked(times: Vec<u64>, tags: Vec<Tag>, duration_ps: u64) -> Self {
        let s = EventStream {
            times,
            tags,
            duration: duration_ps,
        };
        debug_assert!(s.validate().is_ok());
        s
    }

    /// Check the ordering and range invariants.
    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.times.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::Unsorted {
                    index: i + 1,
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        if let Some(&last) = self.times.last() {
            if last > self.duration {
                return Err(Error::OutOfRange {
                    index: self.times.len() - 1,
                    time: last,
                    duration: self.duration,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration
    }

    pub fn duration_secs(&self) -> f64 {
        ps_to_secs(self.duration)
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn get(&self, index: usize) -> Option<Event> {
        Some(Event::new(*self.times.get(index)?, self.tags[index]))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Event> + '_ {
        self.times
            .iter()
            .zip(&self.tags)
            .map(|(&time, &tag)| Event { time, tag })
    }

    pub fn count_tag(&self, tag: Tag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    /// Mean event rate over the stream duration, 1/s.
    pub fn rate(&self) -> f64 {
        if self.duration == 0 {
            0.0
        } else {
            self.len() as f64 / self.duration_secs()
        }
    }

    /// Keep the events for which `keep(index, event)` returns true.
    pub fn retain(&self, mut keep: impl FnMut(usize, Event) -> bool) -> EventStream {
        let mut times = Vec::new();
        let mut tags = Vec::new();
        for (i, e) in self.iter().enumerate() {
            if keep(i, e) {
                times.push(e.time);
                tags.push(e.tag);
            }
        }
        EventStream::from_sorted_unchecked(times, tags, self.duration)
    }

    /// Merge two ordered streams. On equal times events of `self` come first.
    /// The result spans the longer of the two durations.
    pub fn merge(&self, other: &EventStream) -> EventStream {
        let n = self.len() + other.len();
        let mut times = Vec::with_capacity(n);
        let mut tags = Vec::with_capacity(n);
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_self = j >= other.len() || (i < self.len() && self.times[i] <= other.times[j]);
            if take_self {
                times.push(self.times[i]);
                tags.push(self.tags[i]);
                i += 1;
            } else {
                times.push(other.times[j]);
                tags.push(other.tags[j]);
                j += 1;
            }
        }
        EventStream::from_sorted_unchecked(times, tags, self.duration.max(other.duration))
    }

    /// Events with `start <= time < end`, keeping the original time axis.
    pub fn slice_time(&self, start: u64, end: u64) -> EventStream {
        let lo = self.times.partition_point(|&t| t < start);
        let hi = self.times.partition_point(|&t| t < end);
        EventStream::from_sorted_unchecked(self.times[lo..hi].to_vec(), self.tags[lo..hi].to_vec(), self.duration)
    }

    pub fn into_columns(self) -> (Vec<u64>, Vec<Tag>, u64) {
        (self.times, self.tags, self.duration)
    }
}
