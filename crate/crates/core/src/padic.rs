//! Finite-precision p-adic numbers and ball addressing.
//!
//! A number is stored as a finite digit string `x = Σ d_k p^(e0 + k)`.
//! Balls inside a finite [`Window`] are addressed by the digit path from the
//! root ball `B_{gamma_max}(0)` downwards: the first path digit is the digit
//! at exponent `-gamma_max`, the last one at exponent `-level - 1`. Since the
//! p-adic absolute value looks at the *lowest* nonzero digit, the coarsest
//! split of a ball is decided by its lowest-exponent digit.
//!
//! Composite bases are allowed; nothing here assumes primality. For a
//! composite base the distance is the digit-string ultrametric
//! `p^(-k)`, `k` the lowest exponent at which two numbers differ.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radix of the digit expansions. Limited to 36 so every digit has a
/// one-character text form (`0-9a-z`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Base(u32);

impl Base {
    pub fn new(p: u32) -> Result<Self> {
        if (2..=36).contains(&p) {
            Ok(Base(p))
        } else {
            Err(Error::InvalidBase(p))
        }
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// `p^e` as an exact rational; `e` may be negative.
    pub fn pow(self, e: i64) -> BigRational {
        let p = BigInt::from(self.0);
        let mag = num_traits::pow(p, e.unsigned_abs() as usize);
        if e >= 0 {
            BigRational::from_integer(mag)
        } else {
            BigRational::new(BigInt::one(), mag)
        }
    }

    pub fn pow_f64(self, e: i64) -> f64 {
        (self.0 as f64).powi(e as i32)
    }

    pub fn digit_char(self, d: u8) -> char {
        char::from_digit(d as u32, self.0).expect("digit below base")
    }

    pub fn parse_digit(self, c: char) -> Result<u8> {
        c.to_digit(self.0)
            .map(|d| d as u8)
            .ok_or_else(|| Error::InvalidPath(c.to_string()))
    }

    fn check_digit(self, d: u8) -> Result<()> {
        if (d as u32) < self.0 {
            Ok(())
        } else {
            Err(Error::DigitOutOfRange {
                digit: d as u32,
                base: self.0,
            })
        }
    }
}

impl TryFrom<u32> for Base {
    type Error = Error;
    fn try_from(p: u32) -> Result<Self> {
        Base::new(p)
    }
}

impl From<Base> for u32 {
    fn from(b: Base) -> u32 {
        b.0
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Finite truncation of `Q_p`: leaves are balls of radius `p^gamma_min`, the
/// root is the ball of radius `p^gamma_max` around 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    gamma_min: i32,
    gamma_max: i32,
}

impl Window {
    pub fn new(gamma_min: i32, gamma_max: i32) -> Result<Self> {
        if gamma_min > gamma_max {
            return Err(Error::InvalidWindow {
                gamma_min,
                gamma_max,
            });
        }
        Ok(Window {
            gamma_min,
            gamma_max,
        })
    }

    #[inline]
    pub fn gamma_min(self) -> i32 {
        self.gamma_min
    }

    #[inline]
    pub fn gamma_max(self) -> i32 {
        self.gamma_max
    }

    /// Number of levels between leaves and root.
    #[inline]
    pub fn depth(self) -> usize {
        (self.gamma_max - self.gamma_min) as usize
    }

    pub fn contains_level(self, level: i32) -> bool {
        (self.gamma_min..=self.gamma_max).contains(&level)
    }

    pub(crate) fn check_level(self, level: i32) -> Result<()> {
        if self.contains_level(level) {
            Ok(())
        } else {
            Err(Error::LevelOutOfWindow {
                level,
                gamma_min: self.gamma_min,
                gamma_max: self.gamma_max,
            })
        }
    }
}

/// A nonnegative p-adic number with finitely many digits.
///
/// Canonical form: the lowest and highest stored digits are nonzero; zero is
/// the empty digit string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdicApprox {
    base: Base,
    lowest_exponent: i64,
    digits: Vec<u8>,
}

impl PAdicApprox {
    pub fn zero(base: Base) -> Self {
        PAdicApprox {
            base,
            lowest_exponent: 0,
            digits: Vec::new(),
        }
    }

    /// `Σ digits[k] p^(lowest_exponent + k)`.
    pub fn from_digits(base: Base, lowest_exponent: i64, digits: Vec<u8>) -> Result<Self> {
        for &d in &digits {
            base.check_digit(d)?;
        }
        let mut x = PAdicApprox {
            base,
            lowest_exponent,
            digits,
        };
        x.normalize();
        Ok(x)
    }

    pub fn from_integer(base: Base, n: u64) -> Self {
        let p = base.get() as u64;
        let mut digits = Vec::new();
        let mut n = n;
        while n > 0 {
            digits.push((n % p) as u8);
            n /= p;
        }
        let mut x = PAdicApprox {
            base,
            lowest_exponent: 0,
            digits,
        };
        x.normalize();
        x
    }

    /// Accepts nonnegative rationals whose denominator divides a power of
    /// the base; everything else has an infinite expansion.
    pub fn from_rational(base: Base, q: &BigRational) -> Result<Self> {
        if q.is_negative() {
            return Err(Error::NotFinitelyRepresentable(q.to_string()));
        }
        let p = BigInt::from(base.get());
        let denom = q.denom().clone();
        let mut scale = BigInt::one();
        let mut k: i64 = 0;
        let limit = denom.bits() as i64 + 1;
        while !(&scale % &denom).is_zero() {
            if k > limit {
                return Err(Error::NotFinitelyRepresentable(q.to_string()));
            }
            scale *= &p;
            k += 1;
        }
        let mut n = q.numer() * &scale / &denom;
        let mut digits = Vec::new();
        while !n.is_zero() {
            // n stays nonnegative, so truncating division is floor division
            let rem = &n % &p;
            digits.push(u8::try_from(rem).expect("remainder below base"));
            n /= &p;
        }
        let mut x = PAdicApprox {
            base,
            lowest_exponent: -k,
            digits,
        };
        x.normalize();
        Ok(x)
    }

    fn normalize(&mut self) {
        while self.digits.last() == Some(&0) {
            self.digits.pop();
        }
        let lead = self.digits.iter().take_while(|&&d| d == 0).count();
        if lead == self.digits.len() {
            self.digits.clear();
            self.lowest_exponent = 0;
            return;
        }
        self.digits.drain(..lead);
        self.lowest_exponent += lead as i64;
    }

    #[inline]
    pub fn base(&self) -> Base {
        self.base
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn lowest_exponent(&self) -> i64 {
        self.lowest_exponent
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Digit at exponent `e` (0 outside the stored range).
    pub fn digit(&self, e: i64) -> u8 {
        let k = e - self.lowest_exponent;
        if k < 0 {
            return 0;
        }
        self.digits.get(k as usize).copied().unwrap_or(0)
    }

    /// p-adic valuation; `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.lowest_exponent)
    }

    pub fn to_rational(&self) -> BigRational {
        self.digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0)
            .map(|(k, &d)| {
                self.base.pow(self.lowest_exponent + k as i64) * BigRational::from_integer(d.into())
            })
            .fold(BigRational::zero(), |acc, t| acc + t)
    }

    /// `|x|_p = p^(-v(x))`, and 0 for zero.
    pub fn norm(&self) -> BigRational {
        match self.valuation() {
            Some(v) => self.base.pow(-v),
            None => BigRational::zero(),
        }
    }

    /// `|x - y|_p`, computed from the lowest differing digit.
    pub fn distance(&self, other: &PAdicApprox) -> Result<BigRational> {
        if self.base != other.base {
            return Err(Error::BaseMismatch {
                left: self.base.get(),
                right: other.base.get(),
            });
        }
        Ok(match self.first_difference(other) {
            Some(e) => self.base.pow(-e),
            None => BigRational::zero(),
        })
    }

    fn first_difference(&self, other: &PAdicApprox) -> Option<i64> {
        let lo = match (self.valuation(), other.valuation()) {
            (None, None) => return None,
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => a.min(b),
        };
        let hi = (self.lowest_exponent + self.digits.len() as i64)
            .max(other.lowest_exponent + other.digits.len() as i64);
        (lo..hi).find(|&e| self.digit(e) != other.digit(e))
    }

    /// Fractional part `{x}` (digits at negative exponents) and integer
    /// part `[x]`; their sum is `x`.
    pub fn split_parts(&self) -> (PAdicApprox, PAdicApprox) {
        let mut frac = Vec::new();
        let mut int = Vec::new();
        for (k, &d) in self.digits.iter().enumerate() {
            let e = self.lowest_exponent + k as i64;
            if e < 0 {
                frac.push((e, d));
            } else {
                int.push((e, d));
            }
        }
        (self.collect(frac), self.collect(int))
    }

    fn collect(&self, parts: Vec<(i64, u8)>) -> PAdicApprox {
        let Some(&(e0, _)) = parts.first() else {
            return PAdicApprox::zero(self.base);
        };
        let mut x = PAdicApprox {
            base: self.base,
            lowest_exponent: e0,
            digits: parts.into_iter().map(|(_, d)| d).collect(),
        };
        x.normalize();
        x
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, k: i64) -> PAdicApprox {
        if self.is_zero() {
            return self.clone();
        }
        PAdicApprox {
            base: self.base,
            lowest_exponent: self.lowest_exponent + k,
            digits: self.digits.clone(),
        }
    }
}

impl fmt::Display for PAdicApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_rational())
    }
}

/// A ball of radius `p^level` inside a window, named by its digit path from
/// the root. Centers are canonical: the digit truncation with all remaining
/// digits zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BallAddress {
    base: Base,
    window: Window,
    level: i32,
    path: Vec<u8>,
}

impl BallAddress {
    pub fn root(base: Base, window: Window) -> Self {
        BallAddress {
            base,
            window,
            level: window.gamma_max(),
            path: Vec::new(),
        }
    }

    pub fn new(base: Base, window: Window, path: Vec<u8>) -> Result<Self> {
        if path.len() > window.depth() {
            return Err(Error::InvalidPath(format!("{path:?}")));
        }
        for &d in &path {
            base.check_digit(d)?;
        }
        Ok(BallAddress {
            base,
            window,
            level: window.gamma_max() - path.len() as i32,
            path,
        })
    }

    /// Parses the digit-path text form, coarsest digit first. The empty
    /// string is the root.
    pub fn parse(base: Base, window: Window, text: &str) -> Result<Self> {
        let path = text
            .trim()
            .chars()
            .map(|c| base.parse_digit(c))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::InvalidPath(text.to_string()))?;
        BallAddress::new(base, window, path)
    }

    /// The ball at `level` whose position among the `p^(gamma_max - level)`
    /// balls of that level (lexicographic path order) is `index`.
    pub fn from_index(base: Base, window: Window, level: i32, index: usize) -> Result<Self> {
        window.check_level(level)?;
        let len = (window.gamma_max() - level) as usize;
        let p = base.get() as usize;
        let mut path = vec![0u8; len];
        let mut rest = index;
        for slot in path.iter_mut().rev() {
            *slot = (rest % p) as u8;
            rest /= p;
        }
        if rest != 0 {
            return Err(Error::InvalidPath(format!(
                "index {index} at level {level}"
            )));
        }
        Ok(BallAddress {
            base,
            window,
            level,
            path,
        })
    }

    #[inline]
    pub fn base(&self) -> Base {
        self.base
    }

    #[inline]
    pub fn window(&self) -> Window {
        self.window
    }

    #[inline]
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn path(&self) -> &[u8] {
        &self.path
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    pub fn is_leaf(&self) -> bool {
        self.level == self.window.gamma_min()
    }

    /// Position among the balls of this level, in lexicographic path order.
    pub fn index(&self) -> usize {
        let p = self.base.get() as usize;
        self.path.iter().fold(0, |acc, &d| acc * p + d as usize)
    }

    /// Leaf indices covered by this ball; contiguous because leaves are
    /// ordered lexicographically.
    pub fn leaf_range(&self) -> std::ops::Range<usize> {
        let span = (self.base.get() as usize).pow((self.level - self.window.gamma_min()) as u32);
        let start = self.index() * span;
        start..start + span
    }

    /// Last path digit: which sub-ball of the parent this is.
    pub fn last_digit(&self) -> Option<u8> {
        self.path.last().copied()
    }

    pub fn parent(&self) -> Result<BallAddress> {
        if self.is_root() {
            return Err(Error::RootHasNoParent);
        }
        let mut path = self.path.clone();
        path.pop();
        Ok(BallAddress {
            base: self.base,
            window: self.window,
            level: self.level + 1,
            path,
        })
    }

    pub fn child(&self, digit: u8) -> Result<BallAddress> {
        if self.is_leaf() {
            return Err(Error::LeafHasNoChildren);
        }
        self.base.check_digit(digit)?;
        let mut path = self.path.clone();
        path.push(digit);
        Ok(BallAddress {
            base: self.base,
            window: self.window,
            level: self.level - 1,
            path,
        })
    }

    pub fn children(&self) -> Result<Vec<BallAddress>> {
        (0..self.base.get() as u8).map(|a| self.child(a)).collect()
    }

    /// Ancestor at a coarser `level` (or the ball itself).
    pub fn ancestor(&self, level: i32) -> Result<BallAddress> {
        if level < self.level {
            return Err(Error::LevelOutOfWindow {
                level,
                gamma_min: self.level,
                gamma_max: self.window.gamma_max(),
            });
        }
        self.window.check_level(level)?;
        let keep = (self.window.gamma_max() - level) as usize;
        Ok(BallAddress {
            base: self.base,
            window: self.window,
            level,
            path: self.path[..keep].to_vec(),
        })
    }

    pub fn contains(&self, other: &BallAddress) -> bool {
        self.base == other.base
            && self.window == other.window
            && self.level >= other.level
            && other.path.starts_with(&self.path)
    }

    /// Canonical center: digit `path[k]` sits at exponent `-gamma_max + k`.
    pub fn center(&self) -> PAdicApprox {
        let mut x = PAdicApprox {
            base: self.base,
            lowest_exponent: -(self.window.gamma_max() as i64),
            digits: self.path.clone(),
        };
        x.normalize();
        x
    }

    pub fn path_string(&self) -> String {
        self.path.iter().map(|&d| self.base.digit_char(d)).collect()
    }
}

impl fmt::Display for BallAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "<root>")
        } else {
            f.write_str(&self.path_string())
        }
    }
}

/// The unique ball of radius `p^level` in `window` containing `x`.
pub fn ball_of(x: &PAdicApprox, level: i32, window: Window) -> Result<BallAddress> {
    window.check_level(level)?;
    let top = -(window.gamma_max() as i64);
    if let Some(v) = x.valuation() {
        if v < top {
            return Err(Error::OutsideRootBall {
                gamma_max: window.gamma_max(),
            });
        }
    }
    let path = (top..-(level as i64)).map(|e| x.digit(e)).collect();
    Ok(BallAddress {
        base: x.base(),
        window,
        level,
        path,
    })
}

/// Radius exponent of the smallest window ball containing both leaves.
pub(crate) fn lca_level(base: Base, gamma_min: i32, a: usize, b: usize) -> i32 {
    let p = base.get() as usize;
    let (mut a, mut b) = (a, b);
    let mut level = gamma_min;
    while a != b {
        a /= p;
        b /= p;
        level += 1;
    }
    level
}

impl PartialOrd for PAdicApprox {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.base == other.base).then(|| self.to_rational().cmp(&other.to_rational()))
    }
}
