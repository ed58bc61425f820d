use std::collections::BTreeMap;

use crate::error::{MfmError, Result};
use crate::layout::BitString;

/// Histogram of observed bitstrings for one prepared state.
///
/// For ordinary runs the prepared state and the outcomes share a width. For
/// spectator runs the prepared state covers only the target subsystem while
/// outcomes span the whole layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsRecord {
    prepared: BitString,
    counts: BTreeMap<BitString, u64>,
    shots: u64,
}

impl CountsRecord {
    pub fn new(prepared: BitString, counts: BTreeMap<BitString, u64>, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(MfmError::TooFewShots { min: 1, found: 0 });
        }
        let mut widths = counts.keys().map(|k| k.width());
        if let Some(w) = widths.next() {
            if let Some(other) = widths.find(|&x| x != w) {
                return Err(MfmError::WidthMismatch { expected: w, found: other });
            }
        }
        let sum: u64 = counts.values().sum();
        if sum != shots {
            return Err(MfmError::CountsSumMismatch { prepared: prepared.to_string(), sum, shots });
        }
        let counts = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        Ok(Self { prepared, counts, shots })
    }

    /// Builds a record from a dense histogram indexed by outcome.
    pub fn from_histogram(prepared: BitString, outcome_width: usize, histogram: &[u64]) -> Result<Self> {
        if histogram.len() != 1usize << outcome_width {
            return Err(MfmError::DimensionMismatch { expected: 1 << outcome_width, found: histogram.len() });
        }
        let shots = histogram.iter().sum();
        let counts = histogram
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(k, c)| Ok((BitString::new(k as u64, outcome_width)?, *c)))
            .collect::<Result<_>>()?;
        Self::new(prepared, counts, shots)
    }

    pub fn prepared(&self) -> &BitString {
        &self.prepared
    }

    pub fn counts(&self) -> &BTreeMap<BitString, u64> {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Width of the observed outcomes, if any were recorded.
    pub fn outcome_width(&self) -> usize {
        self.counts.keys().next().map_or(self.prepared.width(), |k| k.width())
    }

    /// Dense histogram over `2^width` outcomes.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; 1usize << self.outcome_width()];
        for (k, c) in &self.counts {
            h[k.value() as usize] += c;
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn rejects_inconsistent_records() {
        let c: BTreeMap<_, _> = [(bs("0"), 3), (bs("1"), 4)].into();
        assert!(matches!(CountsRecord::new(bs("0"), c.clone(), 8), Err(MfmError::CountsSumMismatch { .. })));
        assert!(CountsRecord::new(bs("0"), c, 7).is_ok());
        let c: BTreeMap<_, _> = [(bs("0"), 3), (bs("10"), 4)].into();
        assert!(matches!(CountsRecord::new(bs("0"), c, 7), Err(MfmError::WidthMismatch { .. })));
        assert!(CountsRecord::new(bs("0"), BTreeMap::new(), 0).is_err());
    }

    #[test]
    fn histogram_round_trip() {
        let r = CountsRecord::from_histogram(bs("01"), 2, &[1, 0, 5, 2]).unwrap();
        assert_eq!(r.shots(), 8);
        assert_eq!(r.counts().len(), 3);
        assert_eq!(r.histogram(), vec![1, 0, 5, 2]);
    }
}
