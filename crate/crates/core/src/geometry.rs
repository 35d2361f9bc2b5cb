//! The open set `G` (a finite family of disjoint open intervals inside a
//! computational window, plus declared tail behaviour) and its closed
//! complement `F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the depth of generated fat Cantor sets.
pub const DEFAULT_MAX_DEPTH: u32 = 20;

/// A bounded interval `[lo, hi]`; whether the ends belong to it depends on
/// context (components of `G` are open, components of `F` closed).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains_open(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Length of the intersection with `[lo, hi]`.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        (self.hi.min(hi) - self.lo.max(lo)).max(0.0)
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Behaviour of the set outside the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    /// Everything beyond the window belongs to `G`.
    AllG,
    /// Everything beyond the window belongs to `F`.
    AllF,
    /// The window is one period of a periodic layout.
    Periodic,
}

/// Which half of the partition `R = G ∪ F` a query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    G,
    F,
}

/// Tail declarations. `None` means undeclared: the set is only meaningful
/// inside its window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tails {
    pub left: Option<Tail>,
    pub right: Option<Tail>,
    pub period: Option<f64>,
}

impl Tails {
    pub const UNDECLARED: Tails = Tails {
        left: None,
        right: None,
        period: None,
    };

    pub fn new(left: Tail, right: Tail) -> Self {
        Self {
            left: Some(left),
            right: Some(right),
            period: None,
        }
    }

    pub fn both(tail: Tail) -> Self {
        Self::new(tail, tail)
    }

    pub fn periodic(period: f64) -> Self {
        Self {
            left: Some(Tail::Periodic),
            right: Some(Tail::Periodic),
            period: Some(period),
        }
    }
}

/// The open set `G` restricted to a window, together with the cached closed
/// components of `F` inside the window.
///
/// Components are strictly ordered, pairwise disjoint and never share an
/// endpoint, so every component of `F` in the window has positive length.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet {
    window: Interval,
    components: Vec<Interval>,
    tails: Tails,
    f_components: Vec<Interval>,
    // prefix[k] = total length of components[..k]
    prefix: Vec<f64>,
    left_merged: bool,
    right_merged: bool,
}

impl IntervalSet {
    pub fn new(window: Interval, components: Vec<Interval>, tails: Tails) -> Result<Self> {
        let Interval { lo: w0, hi: w1 } = window;
        if !(w0.is_finite() && w1.is_finite() && w0 < w1) {
            return Err(Error::InvalidWindow { lo: w0, hi: w1 });
        }
        for c in &components {
            if !(c.lo.is_finite() && c.hi.is_finite() && c.lo < c.hi) {
                return Err(Error::EmptyComponent { lo: c.lo, hi: c.hi });
            }
            if c.lo < w0 || c.hi > w1 {
                return Err(Error::OutsideWindow {
                    lo: c.lo,
                    hi: c.hi,
                    w0,
                    w1,
                });
            }
        }
        for pair in components.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            if q.lo == p.hi {
                return Err(Error::SharedEndpoint {
                    a0: p.lo,
                    b0: p.hi,
                    a1: q.lo,
                    b1: q.hi,
                });
            }
            if q.lo < p.hi {
                return Err(Error::Overlap {
                    a0: p.lo,
                    b0: p.hi,
                    a1: q.lo,
                    b1: q.hi,
                });
            }
        }

        let periodic = tails.left == Some(Tail::Periodic) || tails.right == Some(Tail::Periodic);
        if periodic {
            if tails.left != tails.right {
                return Err(Error::InvalidTails(
                    "periodic tails must be declared on both sides".into(),
                ));
            }
            let Some(period) = tails.period else {
                return Err(Error::InvalidTails("periodic tails need a period".into()));
            };
            let len = w1 - w0;
            if !period.is_finite() || (period - len).abs() > 1e-12 * len.max(1.0) {
                return Err(Error::InvalidPeriod {
                    period,
                    reason: "the window must span exactly one period",
                });
            }
            if let (Some(first), Some(last)) = (components.first(), components.last()) {
                if first.lo == w0 && last.hi == w1 {
                    return Err(Error::IsolatedPoint { x: w0 });
                }
            }
        } else if tails.period.is_some() {
            return Err(Error::InvalidTails(
                "a period is only meaningful with periodic tails".into(),
            ));
        }

        let left_merged =
            tails.left == Some(Tail::AllG) && components.first().is_some_and(|c| c.lo == w0);
        let right_merged =
            tails.right == Some(Tail::AllG) && components.last().is_some_and(|c| c.hi == w1);
        if left_merged && right_merged && components.len() == 1 {
            return Err(Error::InvalidTails("G would be the whole line".into()));
        }

        let mut f_components = Vec::with_capacity(components.len() + 1);
        let mut cursor = w0;
        for c in &components {
            if c.lo > cursor {
                f_components.push(Interval::new(cursor, c.lo));
            }
            cursor = c.hi;
        }
        if cursor < w1 {
            f_components.push(Interval::new(cursor, w1));
        }

        let mut prefix = Vec::with_capacity(components.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for c in &components {
            acc += c.len();
            prefix.push(acc);
        }

        Ok(Self {
            window,
            components,
            tails,
            f_components,
            prefix,
            left_merged,
            right_merged,
        })
    }

    /// Same components, different tails.
    pub fn with_tails(&self, tails: Tails) -> Result<Self> {
        Self::new(self.window, self.components.clone(), tails)
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    /// Open components of `G` inside the window, in increasing order.
    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    /// Closed components of `F` inside the window, in increasing order.
    pub fn f_components(&self) -> &[Interval] {
        &self.f_components
    }

    pub fn tails(&self) -> Tails {
        self.tails
    }

    pub fn period(&self) -> Option<f64> {
        self.tails.period
    }

    /// Whether component `index` continues beyond the window into an
    /// unbounded component of `G`.
    pub fn is_unbounded(&self, index: usize) -> bool {
        (index == 0 && self.left_merged)
            || (index + 1 == self.components.len() && self.right_merged)
    }

    /// Components of `G` that are bounded intervals, with their indices.
    pub fn finite_components(&self) -> impl Iterator<Item = (usize, Interval)> + '_ {
        self.components
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| !self.is_unbounded(*i))
    }

    /// Finite endpoint `b_-` of the unbounded component `(-inf, b_-)`, if any.
    pub fn unbounded_left(&self) -> Option<f64> {
        if self.tails.left != Some(Tail::AllG) {
            return None;
        }
        Some(if self.left_merged {
            self.components[0].hi
        } else {
            self.window.lo
        })
    }

    /// Finite endpoint `a_+` of the unbounded component `(a_+, inf)`, if any.
    pub fn unbounded_right(&self) -> Option<f64> {
        if self.tails.right != Some(Tail::AllG) {
            return None;
        }
        Some(if self.right_merged {
            self.components[self.components.len() - 1].lo
        } else {
            self.window.hi
        })
    }

    /// The endpoint set `H` inside the window, sorted.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut h = Vec::with_capacity(2 * self.components.len() + 2);
        if let (Some(b), false) = (self.unbounded_left(), self.left_merged) {
            h.push(b);
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(i == 0 && self.left_merged) {
                h.push(c.lo);
            }
            if !(i + 1 == self.components.len() && self.right_merged) {
                h.push(c.hi);
            }
        }
        if let (Some(a), false) = (self.unbounded_right(), self.right_merged) {
            h.push(a);
        }
        h
    }

    pub fn is_endpoint(&self, x: f64) -> bool {
        self.endpoints().binary_search_by(|h| h.total_cmp(&x)).is_ok()
    }

    /// Index of the component containing `x` (open), inside the window.
    pub fn component_containing(&self, x: f64) -> Option<usize> {
        let k = self.components.partition_point(|c| c.hi <= x);
        (k < self.components.len() && self.components[k].contains_open(x)).then_some(k)
    }

    /// Which part of the partition contains `x`.
    pub fn part_of(&self, x: f64) -> Result<Part> {
        let Interval { lo: w0, hi: w1 } = self.window;
        if x < w0 || x > w1 {
            let (side, tail) = if x < w0 {
                ("left", self.tails.left)
            } else {
                ("right", self.tails.right)
            };
            return match tail {
                None => Err(Error::UndeclaredTail { side, x }),
                Some(Tail::AllG) => Ok(Part::G),
                Some(Tail::AllF) => Ok(Part::F),
                Some(Tail::Periodic) => self.part_of(self.reduce(x)),
            };
        }
        if (x == w0 && self.left_merged) || (x == w1 && self.right_merged) {
            return Ok(Part::G);
        }
        Ok(if self.component_containing(x).is_some() {
            Part::G
        } else {
            Part::F
        })
    }

    fn reduce(&self, x: f64) -> f64 {
        let p = self.window.len();
        self.window.lo + (x - self.window.lo).rem_euclid(p)
    }

    /// Mass of `G` inside the window.
    pub fn g_mass_in_window(&self) -> f64 {
        self.prefix[self.components.len()]
    }

    /// `G`-mass of `[w0, x]` for `x` inside the window.
    fn cumulative_in_window(&self, x: f64) -> f64 {
        let k = self.components.partition_point(|c| c.hi <= x);
        let mut acc = self.prefix[k];
        if let Some(c) = self.components.get(k) {
            if c.lo < x {
                acc += x - c.lo;
            }
        }
        acc
    }

    /// `(G-mass, F-mass)` of `[lo, hi]` with both ends inside the window.
    fn window_masses(&self, lo: f64, hi: f64) -> (f64, f64) {
        let g = self.cumulative_in_window(hi) - self.cumulative_in_window(lo);
        (g, (hi - lo) - g)
    }

    /// `(G-mass, F-mass)` of `[lo, hi]` for a periodic layout.
    fn periodic_masses(&self, lo: f64, hi: f64) -> (f64, f64) {
        let p = self.window.len();
        let pg = self.g_mass_in_window();
        if lo.is_infinite() || hi.is_infinite() {
            let g = if pg > 0.0 { f64::INFINITY } else { 0.0 };
            let f = if pg < p { f64::INFINITY } else { 0.0 };
            return (g, f);
        }
        let cum = |x: f64| {
            let q = ((x - self.window.lo) / p).floor();
            let r = self.reduce(x);
            q * pg + self.cumulative_in_window(r)
        };
        let g = cum(hi) - cum(lo);
        (g, (hi - lo) - g)
    }

    fn tail_masses(&self, side: &'static str, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let tail = if side == "left" {
            self.tails.left
        } else {
            self.tails.right
        };
        let len = hi - lo;
        match tail {
            None => Err(Error::UndeclaredTail {
                side,
                x: if side == "left" { lo } else { hi },
            }),
            Some(Tail::AllG) => Ok((len, 0.0)),
            Some(Tail::AllF) => Ok((0.0, len)),
            Some(Tail::Periodic) => Ok(self.periodic_masses(lo, hi)),
        }
    }

    /// `(G-mass, F-mass)` of `[lo, hi]`; infinite ends are allowed when the
    /// corresponding tail is declared.
    pub fn masses(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "query interval [{lo}, {hi}] is not ordered"
            )));
        }
        let Interval { lo: w0, hi: w1 } = self.window;
        let (mut g, mut f) = (0.0, 0.0);
        if lo < w0 {
            let (tg, tf) = self.tail_masses("left", lo, hi.min(w0))?;
            g += tg;
            f += tf;
        }
        let (a, b) = (lo.max(w0), hi.min(w1));
        if a < b {
            let (wg, wf) = self.window_masses(a, b);
            g += wg;
            f += wf;
        }
        if hi > w1 {
            let (tg, tf) = self.tail_masses("right", lo.max(w1), hi)?;
            g += tg;
            f += tf;
        }
        Ok((g, f))
    }

    /// Lebesgue mass of `part ∩ [lo, hi]`.
    pub fn lebesgue(&self, lo: f64, hi: f64, part: Part) -> Result<f64> {
        let (g, f) = self.masses(lo, hi)?;
        Ok(match part {
            Part::G => g,
            Part::F => f,
        })
    }

    /// Whether `G` carries infinite mass beyond the window on the given side.
    pub(crate) fn tail_g_infinite(&self, tail: Option<Tail>) -> Option<bool> {
        tail.map(|t| match t {
            Tail::AllG => true,
            Tail::AllF => false,
            Tail::Periodic => self.g_mass_in_window() > 0.0,
        })
    }

    pub fn validate(&self, delta: f64) -> ValidationReport {
        validate_raw(self.window, &self.components, self.tails, delta)
    }
}

/// Outcome of [`validate_raw`] / [`IntervalSet::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub delta: f64,
    pub measure_dense: bool,
    pub no_shared_endpoints: bool,
    pub no_isolated_f_points: bool,
    /// Subintervals of the window of length at least `delta` that miss `G`.
    pub violations: Vec<Interval>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.measure_dense && self.no_shared_endpoints && self.no_isolated_f_points
    }
}

/// Checks a raw component list without rejecting it, so that every failure
/// can be reported at once.
///
/// The set is `delta`-measure-dense when every subinterval of the window of
/// length `>= delta` meets `G` in positive measure, i.e. when every gap left
/// by the components inside the window is shorter than `delta`.
pub fn validate_raw(
    window: Interval,
    components: &[Interval],
    tails: Tails,
    delta: f64,
) -> ValidationReport {
    let mut sorted: Vec<Interval> = components
        .iter()
        .copied()
        .filter(|c| c.lo < c.hi)
        .collect();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));

    let mut no_shared = true;
    for pair in sorted.windows(2) {
        if pair[1].lo == pair[0].hi {
            no_shared = false;
        }
    }
    let mut no_isolated = no_shared;
    if tails.left == Some(Tail::Periodic) {
        if let (Some(first), Some(last)) = (sorted.first(), sorted.last()) {
            if first.lo <= window.lo && last.hi >= window.hi {
                no_isolated = false;
            }
        }
    }

    // Gaps of the union of the components, clipped to the window.
    let mut violations = Vec::new();
    let mut cursor = window.lo;
    let mut g_mass = 0.0;
    for c in &sorted {
        let (lo, hi) = (c.lo.max(window.lo), c.hi.min(window.hi));
        if lo >= hi {
            continue;
        }
        if lo > cursor && lo - cursor >= delta {
            violations.push(Interval::new(cursor, lo));
        }
        g_mass += (hi - lo.max(cursor)).max(0.0);
        cursor = cursor.max(hi);
    }
    if window.hi > cursor && window.hi - cursor >= delta {
        violations.push(Interval::new(cursor, window.hi));
    }

    ValidationReport {
        delta,
        measure_dense: g_mass > 0.0 && violations.is_empty(),
        no_shared_endpoints: no_shared,
        no_isolated_f_points: no_isolated,
        violations,
    }
}

/// Removed intervals of the depth-`depth` Smith–Volterra–Cantor construction
/// on `[0, 1]`, as integer numerators over `2^(2 depth + 1)`.
fn svc_unit_numerators(depth: u32) -> (Vec<(u64, u64)>, u64) {
    let denom = 1u64 << (2 * depth + 1);
    let mut remaining = vec![(0u64, denom)];
    let mut removed = Vec::new();
    for step in 1..=depth {
        let cut = denom >> (2 * step);
        let mut next = Vec::with_capacity(2 * remaining.len());
        for &(l, r) in &remaining {
            let side = (r - l - cut) / 2;
            debug_assert_eq!((r - l - cut) % 2, 0);
            let (a, b) = (l + side, l + side + cut);
            removed.push((a, b));
            next.push((l, a));
            next.push((b, r));
        }
        remaining = next;
    }
    removed.sort_unstable();
    (removed, denom)
}

/// Complement of the Smith–Volterra–Cantor set of the given depth, scaled
/// onto `window`. Step `i` removes `2^(i-1)` middle intervals of length
/// `4^-i * |window|`. Tails are `AllF`.
pub fn svc_complement(depth: u32, window: Interval) -> Result<IntervalSet> {
    svc_complement_with_max(depth, window, DEFAULT_MAX_DEPTH)
}

pub fn svc_complement_with_max(depth: u32, window: Interval, max_depth: u32) -> Result<IntervalSet> {
    // 2^(2k+1) must fit the integer construction.
    if depth > max_depth.min(30) {
        return Err(Error::DepthTooLarge {
            depth,
            max: max_depth,
        });
    }
    let (removed, denom) = svc_unit_numerators(depth);
    let scale = window.len() / denom as f64;
    let components = removed
        .into_iter()
        .map(|(a, b)| Interval::new(window.lo + a as f64 * scale, window.lo + b as f64 * scale))
        .collect();
    IntervalSet::new(window, components, Tails::both(Tail::AllF))
}

/// One period of `F = ∪_k (K + k·period)` where `K` is the depth-`depth`
/// Smith–Volterra–Cantor set on `[0, 1]`. The window is `[0, period]` and
/// `(1, period)` is a component of `G`.
pub fn periodic_fat_cantor(depth: u32, period: f64) -> Result<IntervalSet> {
    if !(period.is_finite() && period > 1.0) {
        return Err(Error::InvalidPeriod {
            period,
            reason: "the period must exceed the length of the base window [0, 1]",
        });
    }
    if depth > DEFAULT_MAX_DEPTH {
        return Err(Error::DepthTooLarge {
            depth,
            max: DEFAULT_MAX_DEPTH,
        });
    }
    let (removed, denom) = svc_unit_numerators(depth);
    let mut components: Vec<Interval> = removed
        .into_iter()
        .map(|(a, b)| Interval::new(a as f64 / denom as f64, b as f64 / denom as f64))
        .collect();
    components.push(Interval::new(1.0, period));
    IntervalSet::new(Interval::new(0.0, period), components, Tails::periodic(period))
}

/// JSON layout of an [`IntervalSet`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalSetJson {
    pub window: [f64; 2],
    pub components: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_left: Option<Tail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_right: Option<Tail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl IntervalSetJson {
    pub fn tails(&self) -> Tails {
        Tails {
            left: self.tail_left,
            right: self.tail_right,
            period: self.period,
        }
    }

    pub fn components(&self) -> Vec<Interval> {
        self.components.iter().map(|&c| c.into()).collect()
    }
}

impl From<&IntervalSet> for IntervalSetJson {
    fn from(set: &IntervalSet) -> Self {
        Self {
            window: set.window.into(),
            components: set.components.iter().map(|&c| c.into()).collect(),
            tail_left: set.tails.left,
            tail_right: set.tails.right,
            period: set.tails.period,
        }
    }
}

impl TryFrom<IntervalSetJson> for IntervalSet {
    type Error = Error;

    fn try_from(raw: IntervalSetJson) -> Result<Self> {
        IntervalSet::new(raw.window.into(), raw.components(), raw.tails())
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalSetJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = IntervalSetJson::deserialize(d)?;
        IntervalSet::try_from(raw).map_err(serde::de::Error::custom)
    }
}
