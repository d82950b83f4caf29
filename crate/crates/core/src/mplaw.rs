//! Marchenko-Pastur density and its symmetrized bipartite limit law.
//!
//! For aspect ratio `alpha >= 1` the limit law of the block spectrum puts an
//! atom of mass `(alpha - 1)/(alpha + 1)` at zero and spreads the rest over
//! `[-b, -a] ∪ [a, b]`, where `a = 1 - alpha^{-1/2}` and `b = 1 + alpha^{-1/2}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute error target for interval masses.
pub const MEASURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawRepr")]
pub struct LimitLaw {
    alpha: f64,
    a: f64,
    b: f64,
    atom0: f64,
}

/// Deserialized laws are rebuilt from `alpha`; stored derived fields are ignored.
#[derive(Deserialize)]
struct LawRepr {
    alpha: f64,
}

impl TryFrom<LawRepr> for LimitLaw {
    type Error = Error;
    fn try_from(r: LawRepr) -> Result<Self> {
        LimitLaw::new(r.alpha)
    }
}

impl LimitLaw {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 1.0) {
            return Err(Error::domain(format!(
                "aspect ratio must be finite and >= 1, got {alpha}"
            )));
        }
        let r = alpha.sqrt().recip();
        Ok(LimitLaw {
            alpha,
            a: 1.0 - r,
            b: 1.0 + r,
            atom0: (alpha - 1.0) / (alpha + 1.0),
        })
    }

    /// Law matching an `m x n` biadjacency block; the ratio is taken as larger over smaller side.
    pub fn for_shape(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::domain("empty side"));
        }
        let (hi, lo) = if m >= n { (m, n) } else { (n, m) };
        Self::new(hi as f64 / lo as f64)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Inner edge of the continuous support.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Outer edge of the continuous support.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Point mass at zero.
    pub fn atom0(&self) -> f64 {
        self.atom0
    }

    /// Total mass of the continuous part, `2/(1+alpha)`.
    pub fn continuous_mass(&self) -> f64 {
        2.0 / (1.0 + self.alpha)
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Deserialize)]
struct IntervalRepr {
    lo: f64,
    hi: f64,
}

impl TryFrom<IntervalRepr> for Interval {
    type Error = Error;
    fn try_from(r: IntervalRepr) -> Result<Self> {
        Interval::new(r.lo, r.hi)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::domain(format!("malformed interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn avoids_zero(&self) -> bool {
        !self.contains(0.0)
    }

    /// Reflection through the origin.
    pub fn mirrored(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Marchenko-Pastur density of ratio `1/alpha`, supported on `[a², b²]`.
///
/// At `alpha = 1` the density is unbounded at the origin; `x <= 0` is treated
/// as outside the support.
pub fn mp_density(x: f64, alpha: f64) -> Result<f64> {
    let law = LimitLaw::new(alpha)?;
    if !x.is_finite() {
        return Err(Error::domain("density argument must be finite"));
    }
    let (lo, hi) = (law.a * law.a, law.b * law.b);
    if x <= 0.0 || x < lo || x > hi {
        return Ok(0.0);
    }
    let root = ((hi - x) * (x - lo)).max(0.0).sqrt();
    Ok(alpha / (2.0 * PI * x) * root)
}

/// Density of the continuous part of the limit law. The atom at zero is not included.
pub fn sym_density(x: f64, law: &LimitLaw) -> f64 {
    let t = x.abs();
    if t < law.a || t > law.b {
        return 0.0;
    }
    let c = law.alpha / ((1.0 + law.alpha) * PI);
    if law.a == 0.0 {
        // sqrt(x² - 0)/|x| cancels; semicircle-type closed form.
        return c * ((law.b - t) * (law.b + t)).max(0.0).sqrt();
    }
    let root = ((law.b - t) * (law.b + t) * (t - law.a) * (t + law.a)).max(0.0).sqrt();
    c * root / t
}

/// Continuous mass of `[u, v] ∩ [a, b]` for `0 <= u`.
///
/// Substituting `x = a + r(1 - cos θ)` with `r = (b - a)/2` turns both
/// square-root edges into smooth `sin²θ` factors.
fn positive_mass(law: &LimitLaw, u: f64, v: f64, tol: f64) -> Result<f64> {
    let lo = u.max(law.a);
    let hi = v.min(law.b);
    if lo >= hi {
        return Ok(0.0);
    }
    let (a, b) = (law.a, law.b);
    let r = 0.5 * (b - a);
    let angle = |x: f64| (1.0 - (x - a) / r).clamp(-1.0, 1.0).acos();
    let c = law.alpha / ((1.0 + law.alpha) * PI);
    let integrand = |theta: f64| {
        let x = a + r * (1.0 - theta.cos());
        if x <= 0.0 {
            return 0.0;
        }
        let s = theta.sin();
        c * ((b + x) * (x + a)).sqrt() * r * r * s * s / x
    };
    let est = quadrature::integrate(integrand, angle(lo), angle(hi), tol)?;
    Ok(est.value.max(0.0))
}

/// Continuous mass of `[lo, hi]`, either bound possibly infinite.
fn continuous_mass(law: &LimitLaw, lo: f64, hi: f64) -> Result<f64> {
    let half = 0.5 * MEASURE_TOL;
    let pos = if hi > 0.0 {
        positive_mass(law, lo.max(0.0), hi, half)?
    } else {
        0.0
    };
    let neg = if lo < 0.0 {
        positive_mass(law, (-hi).max(0.0), -lo, half)?
    } else {
        0.0
    };
    Ok(pos + neg)
}

/// `mu(I)`: continuous mass of `I` plus the atom when `0 ∈ I`.
pub fn measure(interval: &Interval, law: &LimitLaw) -> Result<f64> {
    let mut mass = continuous_mass(law, interval.lo, interval.hi)?;
    if interval.contains(0.0) {
        mass += law.atom0;
    }
    Ok(mass.clamp(0.0, 1.0))
}

/// `mu((-inf, x])`.
pub fn cdf(x: f64, law: &LimitLaw) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("cdf argument is NaN"));
    }
    let mut mass = continuous_mass(law, f64::NEG_INFINITY, x)?;
    if x >= 0.0 {
        mass += law.atom0;
    }
    Ok(mass.clamp(0.0, 1.0))
}

/// `mu((-inf, x))`, the left limit of [`cdf`]; differs only at the atom.
pub fn cdf_left(x: f64, law: &LimitLaw) -> Result<f64> {
    let mut mass = cdf(x, law)?;
    if x == 0.0 {
        mass -= law.atom0;
    }
    Ok(mass.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHAS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, 10.0];

    /// Independent route: composite Simpson on `x = edge ± t²`, splitting the
    /// support at its midpoint so each half sees one square-root edge.
    fn simpson_mass(law: &LimitLaw, u: f64, v: f64) -> f64 {
        let lo = u.max(law.a());
        let hi = v.min(law.b());
        if lo >= hi {
            return 0.0;
        }
        let mid = 0.5 * (law.a() + law.b());
        let simpson = |g: &dyn Fn(f64) -> f64, t0: f64, t1: f64| {
            let k = 20_000;
            let h = (t1 - t0) / k as f64;
            let mut s = g(t0) + g(t1);
            for i in 1..k {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * g(t0 + i as f64 * h);
            }
            s * h / 3.0
        };
        let mut total = 0.0;
        // Left half: x = a + t².
        let (l0, l1) = (lo.min(mid), hi.min(mid));
        if l0 < l1 {
            let g = |t: f64| sym_density(law.a() + t * t, law) * 2.0 * t;
            total += simpson(&g, (l0 - law.a()).sqrt(), (l1 - law.a()).sqrt());
        }
        // Right half: x = b - t².
        let (r0, r1) = (lo.max(mid), hi.max(mid));
        if r0 < r1 {
            let g = |t: f64| sym_density(law.b() - t * t, law) * 2.0 * t;
            total += simpson(&g, (law.b() - r1).sqrt(), (law.b() - r0).sqrt());
        }
        total
    }

    #[test]
    fn law_parameters() {
        let law = LimitLaw::new(4.0).unwrap();
        assert_eq!(law.a(), 0.5);
        assert_eq!(law.b(), 1.5);
        assert_eq!(law.atom0(), 3.0 / 5.0);
        let one = LimitLaw::new(1.0).unwrap();
        assert_eq!(one.a(), 0.0);
        assert_eq!(one.atom0(), 0.0);
        assert!(LimitLaw::new(0.5).is_err());
        assert!(LimitLaw::new(f64::NAN).is_err());
    }

    #[test]
    fn law_invariants() {
        for alpha in ALPHAS {
            let law = LimitLaw::new(alpha).unwrap();
            assert!(0.0 <= law.a() && law.a() < law.b() && law.b() <= 2.0);
            assert!((0.0..1.0).contains(&law.atom0()));
            assert_eq!(law.a() == 0.0, alpha == 1.0);
        }
    }

    #[test]
    fn mp_density_examples() {
        let expected = 3f64.sqrt() / (2.0 * PI);
        assert!((mp_density(1.0, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.2757).abs() < 5e-5);
        assert_eq!(mp_density(5.0, 1.0).unwrap(), 0.0);
        assert_eq!(mp_density(-1.0, 3.0).unwrap(), 0.0);
        let law = LimitLaw::new(2.0).unwrap();
        assert_eq!(mp_density(law.a() * law.a(), 2.0).unwrap(), 0.0);
        assert_eq!(mp_density(law.b() * law.b(), 2.0).unwrap(), 0.0);
        assert!(mp_density(1.0, 0.5).is_err());
    }

    #[test]
    fn mp_density_normalizes() {
        // Riemann check of the MP density itself on x = a² + t², separate from the symmetrized law.
        for alpha in [1.5, 2.0, 4.0] {
            let law = LimitLaw::new(alpha).unwrap();
            let (lo, hi) = (law.a() * law.a(), law.b() * law.b());
            let est = quadrature::integrate(
                |t| mp_density(lo + t * t, alpha).unwrap() * 2.0 * t,
                0.0,
                (hi - lo).sqrt(),
                1e-9,
            )
            .unwrap();
            assert!((est.value - 1.0).abs() < 1e-6, "alpha={alpha}: {}", est.value);
        }
    }

    #[test]
    fn sym_density_relates_to_mp() {
        // q(x) = 2|x|/(1+alpha) p(x²)
        for alpha in ALPHAS {
            let law = LimitLaw::new(alpha).unwrap();
            for i in 1..200 {
                let x = -2.0 + 4.0 * i as f64 / 200.0;
                if x == 0.0 {
                    // 0·∞ at alpha = 1; the relation only holds off the origin.
                    continue;
                }
                let direct = 2.0 * x.abs() / (1.0 + alpha) * mp_density(x * x, alpha).unwrap();
                let q = sym_density(x, &law);
                assert!((direct - q).abs() < 1e-12, "alpha={alpha} x={x}: {direct} vs {q}");
            }
        }
    }

    #[test]
    fn sym_density_examples() {
        let law = LimitLaw::new(1.0).unwrap();
        assert!((sym_density(1.0, &law) - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-15);
        // Second coding of the closed form at alpha = 4, x = 0.5 (inner edge).
        let law4 = LimitLaw::new(4.0).unwrap();
        let x: f64 = 0.5;
        let other = 4.0 / (5.0 * PI * x) * ((1.5f64.powi(2) - x * x) * (x * x - 0.25)).sqrt();
        assert_eq!(sym_density(x, &law4), other.max(0.0));
        let x = 0.9;
        let other = 4.0 / (5.0 * PI * x) * ((2.25 - x * x) * (x * x - 0.25)).sqrt();
        assert!((sym_density(x, &law4) - other).abs() < 1e-14);
    }

    #[test]
    fn symmetric_and_nonnegative_on_grid() {
        for alpha in ALPHAS {
            let law = LimitLaw::new(alpha).unwrap();
            for i in 0..10_000 {
                let x = -3.0 + 6.0 * i as f64 / 9_999.0;
                let q = sym_density(x, &law);
                assert!(q >= 0.0);
                assert_eq!(q, sym_density(-x, &law));
            }
        }
    }

    #[test]
    fn semicircle_reduction() {
        let law = LimitLaw::new(1.0).unwrap();
        for i in 0..=2000 {
            let x = -2.0 + 4.0 * i as f64 / 2000.0;
            let sc = (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI);
            assert!((sym_density(x, &law) - sc).abs() <= 1e-12);
        }
    }

    #[test]
    fn full_mass_is_one() {
        for alpha in ALPHAS {
            let law = LimitLaw::new(alpha).unwrap();
            let iv = Interval::new(-law.b() - 1.0, law.b() + 1.0).unwrap();
            let m = measure(&iv, &law).unwrap();
            assert!((m - 1.0).abs() <= 1e-8, "alpha={alpha}: {m}");
        }
    }

    #[test]
    fn half_continuous_mass_matches_both_routes() {
        for alpha in ALPHAS {
            let law = LimitLaw::new(alpha).unwrap();
            let iv = Interval::new(law.a(), law.b()).unwrap();
            let gk = measure(&iv, &law).unwrap();
            // At alpha = 1 the interval [0, 2] also picks up the (zero) atom.
            assert!((gk - 1.0 / (1.0 + alpha)).abs() <= 1e-8);
            let oracle = simpson_mass(&law, law.a(), law.b());
            assert!((oracle - 1.0 / (1.0 + alpha)).abs() <= 1e-6, "simpson {oracle}");
        }
    }

    #[test]
    fn partial_intervals_agree_with_simpson() {
        for alpha in ALPHAS {
            let law = LimitLaw::new(alpha).unwrap();
            let w = law.b() - law.a();
            for (s, t) in [(0.0, 0.1), (0.1, 0.45), (0.3, 0.8), (0.77, 1.0), (0.5, 0.5001)] {
                let (u, v) = (law.a() + s * w, law.a() + t * w);
                let gk = measure(&Interval::new(u, v).unwrap(), &law).unwrap();
                let neg = measure(&Interval::new(-v, -u).unwrap(), &law).unwrap();
                let oracle = simpson_mass(&law, u, v);
                if u > 0.0 {
                    assert!((gk - oracle).abs() < 1e-7, "alpha={alpha} [{u},{v}]: {gk} vs {oracle}");
                }
                assert!((gk - neg).abs() < 2e-10 || u == 0.0);
            }
        }
    }

    #[test]
    fn atom_only_near_zero() {
        let law = LimitLaw::new(4.0).unwrap();
        let iv = Interval::new(-0.25, 0.25).unwrap();
        assert_eq!(measure(&iv, &law).unwrap(), law.atom0());
        let off = Interval::new(0.1, 0.2).unwrap();
        assert_eq!(measure(&off, &law).unwrap(), 0.0);
    }

    #[test]
    fn additivity() {
        let law = LimitLaw::new(2.0).unwrap();
        let whole = measure(&Interval::new(0.4, 1.6).unwrap(), &law).unwrap();
        let left = measure(&Interval::new(0.4, 0.9).unwrap(), &law).unwrap();
        let right = measure(&Interval::new(0.9, 1.6).unwrap(), &law).unwrap();
        assert!((whole - left - right).abs() <= 2.0 * MEASURE_TOL);
    }

    #[test]
    fn cdf_examples() {
        let law = LimitLaw::new(3.0).unwrap();
        assert_eq!(cdf(-law.b() - 1e-9, &law).unwrap(), 0.0);
        assert!((cdf(law.b() + 1e-9, &law).unwrap() - 1.0).abs() < 1e-9);
        let jump = cdf(0.0, &law).unwrap() - cdf_left(0.0, &law).unwrap();
        assert!((jump - law.atom0()).abs() < 1e-15);
        let above = cdf(1e-12, &law).unwrap();
        let expected = 1.0 / (1.0 + 3.0) + 2.0 / 4.0;
        assert!((above - expected).abs() < 1e-9);
        let semi = LimitLaw::new(1.0).unwrap();
        assert!((cdf(0.0, &semi).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn cdf_is_monotone() {
        let law = LimitLaw::new(1.5).unwrap();
        let mut prev = 0.0;
        for i in 0..400 {
            let x = -2.0 + 4.0 * i as f64 / 399.0;
            let c = cdf(x, &law).unwrap();
            assert!(c + 1e-12 >= prev);
            prev = c;
        }
    }

    #[test]
    fn bounded_density_bound() {
        // mu(I) <= sup(q) |I| for I inside the continuous support when a > 0.
        for alpha in [1.5, 2.0, 4.0, 10.0] {
            let law = LimitLaw::new(alpha).unwrap();
            let sup = (0..=20_000)
                .map(|i| sym_density(law.a() + (law.b() - law.a()) * i as f64 / 20_000.0, &law))
                .fold(0.0, f64::max);
            for k in 0..20 {
                let lo = law.a() + (law.b() - law.a()) * k as f64 / 20.0;
                let iv = Interval::new(lo, lo + (law.b() - law.a()) / 20.0).unwrap();
                let m = measure(&iv, &law).unwrap();
                assert!(m <= 1.001 * sup * iv.len(), "alpha={alpha} {iv}");
            }
        }
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        let iv = Interval::new(-1.0, 1.0).unwrap();
        assert!(!iv.avoids_zero());
        assert!(Interval::new(0.1, 1.0).unwrap().avoids_zero());
        assert_eq!(
            Interval::new(0.2, 0.5).unwrap().mirrored(),
            Interval::new(-0.5, -0.2).unwrap()
        );
    }
}
