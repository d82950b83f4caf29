//! Block spectra, interval counts, and the piecewise-linear window functions
//! whose trace statistics sandwich an interval count.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::DenseSymmetric;
use crate::linalg::{self, Matrix};
use crate::mplaw::Interval;

/// Sorted eigenvalues of a block matrix `[[0, X], [Xᵀ, 0]]` together with
/// the factor they are multiplied by before counting.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    scale: f64,
}

impl Spectrum {
    /// Wraps arbitrary eigenvalues; they are sorted here.
    pub fn new(mut values: Vec<f64>, scale: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) || !(scale.is_finite() && scale > 0.0) {
            return Err(Error::domain(
                "spectrum values and scale must be finite, scale positive",
            ));
        }
        for v in &mut values {
            // Folds -0.0 into +0.0 so dumps never print a signed zero.
            *v += 0.0;
        }
        values.sort_by(f64::total_cmp);
        Ok(Spectrum { values, scale })
    }

    /// Unscaled eigenvalues, ascending.
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        assert!(scale.is_finite() && scale > 0.0, "scale must be positive");
        self.scale = scale;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scaled eigenvalues, ascending.
    pub fn values(&self) -> impl ExactSizeIterator<Item = f64> + DoubleEndedIterator + '_ {
        self.values.iter().map(move |v| v * self.scale)
    }
}

pub use linalg::singular_values;

/// Spectrum of `[[0, X], [Xᵀ, 0]]` assembled from the singular values of `X`:
/// `{-σ} ∪ {0}^{|m-n|} ∪ {σ}`. Pairing is exact by construction.
pub fn bipartite_spectrum(x: &Matrix) -> Result<Spectrum> {
    let sv = singular_values(x)?;
    let zeros = x.rows().abs_diff(x.cols());
    let mut values = Vec::with_capacity(2 * sv.len() + zeros);
    values.extend(sv.iter().rev().map(|s| 0.0 - s)); // 0 - 0 is +0
    values.extend(std::iter::repeat_n(0.0, zeros));
    values.extend(sv.iter().copied());
    Ok(Spectrum { values, scale: 1.0 })
}

/// Spectrum of a normalized block matrix.
pub fn block_spectrum(matrix: &DenseSymmetric) -> Result<Spectrum> {
    bipartite_spectrum(matrix.block())
}

/// Number of scaled eigenvalues in the closed interval.
pub fn count_in_interval(s: &Spectrum, interval: &Interval) -> usize {
    s.values().filter(|&v| interval.contains(v)).count()
}

/// `Σ f(λᵢ)` over the scaled spectrum. Terms are combined outermost pairs
/// first, so odd functions vanish exactly on a ±-paired spectrum.
pub fn trace_statistic(s: &Spectrum, f: impl Fn(f64) -> f64) -> f64 {
    let n = s.len();
    let mut total = 0.0;
    for i in 0..n / 2 {
        let lo = s.values[i] * s.scale;
        let hi = s.values[n - 1 - i] * s.scale;
        total += f(lo) + f(hi);
    }
    if n % 2 == 1 {
        total += f(s.values[n / 2] * s.scale);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// `f1, f2`: flanks outside `I`, bounding the count from above.
    Upper,
    /// `g1, g2`: flanks inside `I`, bounding the count from below.
    Lower,
}

/// Convex piecewise-linear pair with slopes `±C/|I|` around `I = [a, b]`.
///
/// For the upper pair, `f1` is zero on `[a - w, b + w]` (`w = |I|/C`) and `f2`
/// is `-1` on `I`; their difference is one on `I` and zero beyond the flanks.
/// For the lower pair the flanks sit inside `I`: `g1` is zero on `I` and `g2`
/// is `-1` on `[a + w, b - w]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPair {
    kind: WindowKind,
    a: f64,
    b: f64,
    width: f64,
    slope: f64,
}

impl WindowPair {
    pub fn new(interval: Interval, c: f64, kind: WindowKind) -> Result<Self> {
        let len = interval.len();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::domain(format!("window needs a proper interval, got {interval}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("window constant must be positive, got {c}")));
        }
        if kind == WindowKind::Lower && c <= 2.0 {
            return Err(Error::domain(format!("lower window needs C > 2, got {c}")));
        }
        Ok(WindowPair {
            kind,
            a: interval.lo(),
            b: interval.hi(),
            width: len / c,
            slope: c / len,
        })
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.a, self.b).expect("validated at construction")
    }

    /// Flank width `|I|/C`.
    pub fn flank_width(&self) -> f64 {
        self.width
    }

    /// Lipschitz constant `C/|I|` shared by both functions.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// `I` widened by both flanks.
    pub fn outer(&self) -> Interval {
        Interval::new(self.a - self.width, self.b + self.width).expect("flanks are nonnegative")
    }

    /// `I' = [a + w, b - w]` of the lower pair.
    pub fn inner(&self) -> Interval {
        let lo = self.a + self.width;
        let hi = (self.b - self.width).max(lo);
        Interval::new(lo, hi).expect("ordered")
    }

    fn left(&self, x: f64) -> f64 {
        self.slope * (self.a - x)
    }

    fn right(&self, x: f64) -> f64 {
        self.slope * (x - self.b)
    }

    /// `f1` or `g1`.
    pub fn first(&self, x: f64) -> f64 {
        match self.kind {
            WindowKind::Upper => {
                if x < self.a - self.width {
                    self.left(x) - 1.0
                } else if x <= self.b + self.width {
                    0.0
                } else {
                    self.right(x) - 1.0
                }
            }
            WindowKind::Lower => {
                if x < self.a {
                    self.left(x)
                } else if x <= self.b {
                    0.0
                } else {
                    self.right(x)
                }
            }
        }
    }

    /// `f2` or `g2`. On the flanks the linear piece is clamped to `[-1, 0]`,
    /// which only removes rounding overshoot.
    pub fn second(&self, x: f64) -> f64 {
        match self.kind {
            WindowKind::Upper => {
                if x < self.a {
                    let v = self.left(x) - 1.0;
                    if x >= self.a - self.width {
                        v.clamp(-1.0, 0.0)
                    } else {
                        v
                    }
                } else if x <= self.b {
                    -1.0
                } else {
                    let v = self.right(x) - 1.0;
                    if x <= self.b + self.width {
                        v.clamp(-1.0, 0.0)
                    } else {
                        v
                    }
                }
            }
            WindowKind::Lower => {
                if x < self.a + self.width {
                    let v = self.left(x);
                    if x >= self.a {
                        v.clamp(-1.0, 0.0)
                    } else {
                        v
                    }
                } else if x <= self.b - self.width {
                    -1.0
                } else {
                    let v = self.right(x);
                    if x <= self.b {
                        v.clamp(-1.0, 0.0)
                    } else {
                        v
                    }
                }
            }
        }
    }

    /// `first - second`: one on the core, zero outside, linear on the flanks.
    pub fn difference(&self, x: f64) -> f64 {
        self.first(x) - self.second(x)
    }
}

/// `N_I` bracketed by window trace statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub inner_count: usize,
    pub lower: f64,
    pub count: usize,
    pub upper: f64,
    pub outer_count: usize,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        (self.inner_count as f64) <= self.lower
            && self.lower <= self.count as f64
            && (self.count as f64) <= self.upper
            && self.upper <= self.outer_count as f64
    }
}

/// Evaluates `N_{I'} <= Σ(g1-g2) <= N_I <= Σ(f1-f2) <= N_{I ∪ flanks}`.
pub fn sandwich(s: &Spectrum, interval: Interval, c: f64) -> Result<Sandwich> {
    let up = WindowPair::new(interval, c, WindowKind::Upper)?;
    let low = WindowPair::new(interval, c, WindowKind::Lower)?;
    Ok(Sandwich {
        inner_count: count_in_interval(s, &low.inner()),
        lower: trace_statistic(s, |x| low.difference(x)),
        count: count_in_interval(s, &interval),
        upper: trace_statistic(s, |x| up.difference(x)),
        outer_count: count_in_interval(s, &up.outer()),
    })
}

/// Eigenvalue dump: `index,eigenvalue` with 17 significant digits.
pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::with_capacity(32 * (s.len() + 1));
    out.push_str("index,eigenvalue\n");
    for (i, v) in s.values().enumerate() {
        writeln!(out, "{i},{v:.16e}").expect("write to String");
    }
    out
}

/// Parses [`spectrum_csv`] output back into values. Indices must run 0, 1, ...
pub fn parse_spectrum_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, "index,eigenvalue")) => {}
        _ => return Err(Error::parse(1, "expected header `index,eigenvalue`")),
    }
    let mut values = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(lineno, "expected `index,eigenvalue`"))?;
        let idx: usize = idx.parse().map_err(|e| Error::parse(lineno, format!("index: {e}")))?;
        if idx != values.len() {
            return Err(Error::parse(lineno, format!("index {idx} out of sequence")));
        }
        let val: f64 = val
            .parse()
            .map_err(|e| Error::parse(lineno, format!("eigenvalue: {e}")))?;
        if !val.is_finite() {
            return Err(Error::parse(lineno, "eigenvalue is not finite"));
        }
        values.push(val);
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram of the scaled spectrum over `[min, max]`; the last
/// bin is closed so counts add up to the spectrum length.
pub fn histogram(s: &Spectrum, bins: usize) -> Result<Vec<Bin>> {
    if bins == 0 {
        return Err(Error::domain("histogram needs at least one bin"));
    }
    let (mut lo, mut hi) = match (s.values().next(), s.values().next_back()) {
        (Some(l), Some(h)) => (l, h),
        _ => return Ok(Vec::new()),
    };
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in s.values() {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| Bin {
            lo: lo + k as f64 * width,
            hi: if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width },
            count,
        })
        .collect())
}

pub fn histogram_csv(bins: &[Bin]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for b in bins {
        writeln!(out, "{:.16e},{:.16e},{}", b.lo, b.hi, b.count).expect("write to String");
    }
    out
}
