//! Qubit layouts, fixed-width bitstrings and subsystem selections.
//!
//! Bit significance convention: position 0 of a layout is the most significant
//! bit of every bitstring and of every matrix index over that layout. The
//! rendered string "10" therefore has index 2, with the first character
//! belonging to the first qubit of the layout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};
use crate::MAX_QUBITS;

/// Ordered list of distinct physical qubit ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct QubitLayout(Vec<u32>);

impl QubitLayout {
    pub fn new(qubits: Vec<u32>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(MfmError::EmptyLayout);
        }
        if qubits.len() > MAX_QUBITS {
            return Err(MfmError::TooManyQubits(qubits.len()));
        }
        for (k, q) in qubits.iter().enumerate() {
            if qubits[..k].contains(q) {
                return Err(MfmError::DuplicateQubit(*q));
            }
        }
        Ok(Self(qubits))
    }

    /// Layout `0, 1, ..., width - 1`.
    pub fn contiguous(width: usize) -> Result<Self> {
        Self::new((0..width as u32).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    /// Matrix dimension `2^width`.
    pub fn dim(&self) -> usize {
        1usize << self.0.len()
    }

    pub fn qubits(&self) -> &[u32] {
        &self.0
    }

    pub fn position_of(&self, qubit: u32) -> Option<usize> {
        self.0.iter().position(|&q| q == qubit)
    }

    pub fn contains(&self, qubit: u32) -> bool {
        self.0.contains(&qubit)
    }

    /// Concatenation; fails if the two layouts share a qubit.
    pub fn concat(&self, other: &QubitLayout) -> Result<QubitLayout> {
        if let Some(q) = other.0.iter().find(|q| self.contains(**q)) {
            return Err(MfmError::OverlappingLayouts(*q));
        }
        let mut qubits = self.0.clone();
        qubits.extend_from_slice(&other.0);
        QubitLayout::new(qubits)
    }

    /// Positions in `self` of each qubit of `sub`, in `sub`'s order.
    pub fn positions_of(&self, sub: &QubitLayout) -> Result<Vec<usize>> {
        sub.0
            .iter()
            .map(|&q| {
                self.position_of(q).ok_or_else(|| {
                    MfmError::InvalidArgument(format!("qubit {q} is not part of layout {:?}", self.0))
                })
            })
            .collect()
    }

    /// Every bitstring over this layout, in index order.
    pub fn states(&self) -> impl Iterator<Item = BitString> + '_ {
        let width = self.width();
        (0..self.dim() as u64).map(move |v| BitString { value: v, width })
    }
}

impl TryFrom<Vec<u32>> for QubitLayout {
    type Error = MfmError;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        QubitLayout::new(v)
    }
}

impl From<QubitLayout> for Vec<u32> {
    fn from(l: QubitLayout) -> Self {
        l.0
    }
}

impl fmt::Display for QubitLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, q) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, "}}")
    }
}

/// Fixed-width classical bitstring.
///
/// Ordering is by width, then by integer value, so maps keyed by bitstrings of
/// one width iterate in matrix index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    width: usize,
    value: u64,
}

impl BitString {
    pub fn new(value: u64, width: usize) -> Result<Self> {
        if width == 0 || width > 63 {
            return Err(MfmError::InvalidArgument(format!("bitstring width {width} unsupported")));
        }
        if value >> width != 0 {
            return Err(MfmError::OutOfRange { name: "bitstring value", value: value as f64 });
        }
        Ok(Self { width, value })
    }

    /// All-zero word.
    pub fn zeros(width: usize) -> Self {
        Self { width, value: 0 }
    }

    /// All-one word.
    pub fn ones(width: usize) -> Self {
        Self { width, value: (1u64 << width) - 1 }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bit at layout position `position` (0 = most significant).
    pub fn bit(&self, position: usize) -> bool {
        debug_assert!(position < self.width);
        (self.value >> (self.width - 1 - position)) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.value.count_ones()
    }

    /// Row/column index of this bitstring in a matrix over a layout of `width` qubits.
    pub fn index_of(&self, width: usize) -> Result<usize> {
        if width != self.width {
            return Err(MfmError::WidthMismatch { expected: width, found: self.width });
        }
        Ok(self.value as usize)
    }

    /// Sub-word at `positions`, in the given order.
    pub fn restrict(&self, positions: &[usize]) -> Result<BitString> {
        check_positions(positions, self.width)?;
        Ok(BitString { width: positions.len(), value: restrict_index(self.value as usize, self.width, positions) as u64 })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.width {
            f.write_str(if self.bit(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 63 {
            return Err(MfmError::InvalidBitString(s.to_string()));
        }
        let mut value = 0u64;
        for c in s.chars() {
            value <<= 1;
            match c {
                '0' => {}
                '1' => value |= 1,
                _ => return Err(MfmError::InvalidBitString(s.to_string())),
            }
        }
        Ok(BitString { width: s.len(), value })
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Matrix index of `x` over `layout`.
pub fn index_of(x: &BitString, layout: &QubitLayout) -> Result<usize> {
    x.index_of(layout.width())
}

/// Sub-word of `x` at the given layout positions, in the given order.
pub fn restrict_bits(x: &BitString, positions: &[usize]) -> Result<BitString> {
    x.restrict(positions)
}

/// Selects bits `positions` of a `width`-bit index and packs them, first
/// position most significant.
#[inline]
pub fn restrict_index(index: usize, width: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .fold(0usize, |acc, &p| (acc << 1) | ((index >> (width - 1 - p)) & 1))
}

/// Precomputes `restrict_index` for every index of a `width`-bit space.
pub fn restriction_table(width: usize, positions: &[usize]) -> Vec<usize> {
    (0..1usize << width).map(|i| restrict_index(i, width, positions)).collect()
}

pub(crate) fn check_positions(positions: &[usize], width: usize) -> Result<()> {
    for (k, &p) in positions.iter().enumerate() {
        if p >= width {
            return Err(MfmError::PositionOutOfRange { position: p, width });
        }
        if positions[..k].contains(&p) {
            return Err(MfmError::DuplicatePosition(p));
        }
    }
    Ok(())
}

/// A subsystem of a parent layout, given as an ordered list of parent positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemSelection {
    parent: QubitLayout,
    positions: Vec<usize>,
}

impl SubsystemSelection {
    pub fn new(parent: QubitLayout, positions: Vec<usize>) -> Result<Self> {
        if positions.is_empty() {
            return Err(MfmError::EmptySelection);
        }
        check_positions(&positions, parent.width())?;
        Ok(Self { parent, positions })
    }

    /// Selection of the given qubit ids (in that order) within `parent`.
    pub fn of_qubits(parent: &QubitLayout, qubits: &[u32]) -> Result<Self> {
        let sub = QubitLayout::new(qubits.to_vec())?;
        let positions = parent.positions_of(&sub)?;
        Self::new(parent.clone(), positions)
    }

    pub fn parent(&self) -> &QubitLayout {
        &self.parent
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn width(&self) -> usize {
        self.positions.len()
    }

    /// Layout of the selected qubits, in selection order.
    pub fn layout(&self) -> QubitLayout {
        QubitLayout(self.positions.iter().map(|&p| self.parent.0[p]).collect())
    }

    /// Parent positions not in the selection, ascending.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.parent.width()).filter(|p| !self.positions.contains(p)).collect()
    }

    pub fn is_full(&self) -> bool {
        self.positions.len() == self.parent.width()
    }
}
