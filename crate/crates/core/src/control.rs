//! Bang-off control fields: a type (a word over `P`, `0`, `N`) plus one
//! duration per letter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude bound `M` on the control field, `|hx(t)| <= M`.
pub const AMPLITUDE_BOUND: f64 = 4.0;

/// Tolerance on `Σ t_k = T` when validating duration vectors coming out of an
/// optimizer.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControlLevel {
    /// `hx = +M`
    Positive,
    /// `hx = 0`
    Off,
    /// `hx = -M`
    Negative,
}

impl ControlLevel {
    pub const ALL: [ControlLevel; 3] = [Self::Positive, Self::Off, Self::Negative];

    pub fn field(self) -> f64 {
        match self {
            Self::Positive => AMPLITUDE_BOUND,
            Self::Off => 0.0,
            Self::Negative => -AMPLITUDE_BOUND,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Positive => 'P',
            Self::Off => '0',
            Self::Negative => 'N',
        }
    }

    pub fn from_symbol(c: char) -> Result<Self> {
        match c {
            'P' => Ok(Self::Positive),
            '0' => Ok(Self::Off),
            'N' => Ok(Self::Negative),
            other => Err(Error::UnknownLevel(other)),
        }
    }

    pub fn negated(self) -> Self {
        match self {
            Self::Positive => Self::Negative,
            Self::Off => Self::Off,
            Self::Negative => Self::Positive,
        }
    }

    /// Position in the fixed `P < 0 < N` order, also used as a cache index.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ControlLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Sequence of levels with no two neighbours equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ControlType(Vec<ControlLevel>);

impl ControlType {
    pub fn new(levels: Vec<ControlLevel>) -> Result<Self> {
        check_levels(&levels)?;
        Ok(Self(levels))
    }

    /// Builds a type without checking adjacency. Callers must run
    /// [`validate`] before evolving a control that uses it.
    pub fn new_unchecked(levels: Vec<ControlLevel>) -> Self {
        Self(levels)
    }

    pub fn levels(&self) -> &[ControlLevel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn switch_count(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Reverse, then swap `P` and `N`.
    pub fn flipped(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.negated()).collect())
    }

    /// Swap `P` and `N` in place (no time reversal).
    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|l| l.negated()).collect())
    }
}

impl fmt::Display for ControlType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for level in &self.0 {
            write!(f, "{}", level.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for ControlType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_levels(s)?)
    }
}

fn parse_levels(s: &str) -> Result<Vec<ControlLevel>> {
    s.trim().chars().map(ControlLevel::from_symbol).collect()
}

fn check_levels(levels: &[ControlLevel]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::EmptyType);
    }
    for (index, pair) in levels.windows(2).enumerate() {
        if pair[0] == pair[1] {
            return Err(Error::AdjacentEqualLevels {
                index,
                level: pair[0].symbol(),
            });
        }
    }
    Ok(())
}

/// Segment durations `[t_1, t_2, ...]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DurationVector(Vec<f64>);

impl DurationVector {
    pub fn new(durations: Vec<f64>) -> Self {
        Self(durations)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl From<Vec<f64>> for DurationVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A piecewise-constant field `hx(t)` taking values in `{+M, 0, -M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BangOffControl {
    control_type: ControlType,
    durations: DurationVector,
}

impl BangOffControl {
    pub fn new(control_type: ControlType, durations: impl Into<DurationVector>) -> Result<Self> {
        let durations = durations.into();
        if control_type.len() != durations.len() {
            return Err(Error::LengthMismatch {
                levels: control_type.len(),
                durations: durations.len(),
            });
        }
        Ok(Self {
            control_type,
            durations,
        })
    }

    /// Parses the type word and pairs it with `durations`, checking only the
    /// lengths. Run [`validate`] for the rest.
    pub fn from_word(word: &str, durations: Vec<f64>) -> Result<Self> {
        Self::new(ControlType::new_unchecked(parse_levels(word)?), durations)
    }

    /// The zero-length control: no segments, `T = 0`.
    pub fn empty() -> Self {
        Self {
            control_type: ControlType(Vec::new()),
            durations: DurationVector(Vec::new()),
        }
    }

    pub fn control_type(&self) -> &ControlType {
        &self.control_type
    }

    pub fn durations(&self) -> &[f64] {
        self.durations.as_slice()
    }

    pub fn levels(&self) -> &[ControlLevel] {
        self.control_type.levels()
    }

    pub fn total_duration(&self) -> f64 {
        self.durations.total()
    }

    pub fn segments(&self) -> impl Iterator<Item = (ControlLevel, f64)> + '_ {
        self.levels().iter().copied().zip(self.durations().iter().copied())
    }

    pub fn flipped(&self) -> Self {
        flip(self)
    }

    /// `hx(t) -> -hx(t)`.
    pub fn negated(&self) -> Self {
        Self {
            control_type: self.control_type.negated(),
            durations: self.durations.clone(),
        }
    }

    /// Checks everything [`validate`] checks except the total duration.
    pub(crate) fn check_structure(&self) -> Result<()> {
        if self.control_type.is_empty() {
            return Ok(());
        }
        check_levels(self.levels())?;
        for (index, &d) in self.durations().iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::NonFiniteDuration { index });
            }
            if d < 0.0 {
                return Err(Error::NegativeDuration { index, duration: d });
            }
        }
        Ok(())
    }
}

impl fmt::Display for BangOffControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (level, d)) in self.segments().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}_{}", level.symbol(), d)?;
        }
        Ok(())
    }
}

/// All `3·2^ns` types with `ns` switches, in lexicographic `P < 0 < N` order.
pub fn enumerate_types(ns: usize) -> Vec<ControlType> {
    let mut out = Vec::with_capacity(3 << ns);
    let mut current = Vec::with_capacity(ns + 1);
    extend_types(ns + 1, &mut current, &mut out);
    out
}

fn extend_types(len: usize, current: &mut Vec<ControlLevel>, out: &mut Vec<ControlType>) {
    if current.len() == len {
        out.push(ControlType(current.clone()));
        return;
    }
    for level in ControlLevel::ALL {
        if current.last() == Some(&level) {
            continue;
        }
        current.push(level);
        extend_types(len, current, out);
        current.pop();
    }
}

/// Level of the segment containing `t`. A switch instant belongs to the
/// later segment; `t = T` belongs to the last one.
pub fn field_at(control: &BangOffControl, t: f64) -> Result<ControlLevel> {
    let total = control.total_duration();
    if control.control_type.is_empty() || !(0.0..=total).contains(&t) {
        return Err(Error::TimeOutOfRange { t, total });
    }
    let mut start = 0.0;
    for (level, d) in control.segments() {
        let end = start + d;
        if t < end {
            return Ok(level);
        }
        start = end;
    }
    Ok(*control.levels().last().expect("non-empty"))
}

/// Drops zero-length segments and merges equal neighbours until nothing
/// changes.
pub fn canonicalize(control: &BangOffControl) -> BangOffControl {
    let mut levels: Vec<ControlLevel> = Vec::with_capacity(control.levels().len());
    let mut durations: Vec<f64> = Vec::with_capacity(control.levels().len());
    for (level, d) in control.segments() {
        if d == 0.0 {
            continue;
        }
        match levels.last() {
            Some(&last) if last == level => *durations.last_mut().expect("paired") += d,
            _ => {
                levels.push(level);
                durations.push(d);
            }
        }
    }
    if levels.is_empty() {
        if let Some(&first) = control.levels().first() {
            // A control of total duration zero still needs a level.
            levels.push(first);
            durations.push(0.0);
        }
    }
    BangOffControl {
        control_type: ControlType(levels),
        durations: DurationVector(durations),
    }
}

/// `hx(t) -> -hx(T - t)`.
pub fn flip(control: &BangOffControl) -> BangOffControl {
    BangOffControl {
        control_type: control.control_type.flipped(),
        durations: DurationVector(control.durations().iter().rev().copied().collect()),
    }
}

pub fn validate(control: &BangOffControl, total_duration: f64) -> Result<()> {
    if control.control_type.is_empty() && !control.durations.is_empty() {
        return Err(Error::EmptyType);
    }
    control.check_structure()?;
    let sum = control.total_duration();
    if (sum - total_duration).abs() > SUM_TOLERANCE {
        return Err(Error::DurationSumMismatch {
            sum,
            expected: total_duration,
        });
    }
    Ok(())
}

/// On-disk form of a control:
/// `{"type": "P0N0", "durations": [...], "total_duration": T}`.
///
/// Extra fields are ignored on read, so optimizer reports double as control
/// files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    #[serde(rename = "type")]
    pub control_type: String,
    pub durations: Vec<f64>,
    pub total_duration: f64,
}

impl ControlRecord {
    pub fn from_control(control: &BangOffControl) -> Self {
        Self {
            control_type: control.control_type.to_string(),
            durations: control.durations().to_vec(),
            total_duration: control.total_duration(),
        }
    }

    /// Rebuilds and validates the control.
    pub fn to_control(&self) -> Result<BangOffControl> {
        let control = BangOffControl::from_word(&self.control_type, self.durations.clone())?;
        validate(&control, self.total_duration)?;
        Ok(control)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Parse errors carry the line and column reported by the JSON reader.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!(
                "malformed control record at line {}, column {}: {}",
                e.line(),
                e.column(),
                e
            ))
        })
    }
}
