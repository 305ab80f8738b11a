//! Radial jump rates `W(p^i)` on the window levels.
//!
//! Beyond the window the kernel is taken to vanish, `W(p^i) -> 0`, so the
//! tail of the telescoping sum `Σ_{i >= gamma_max} (W(p^i) - W(p^(i+1)))`
//! is exactly `W(p^gamma_max)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{Base, Window};

#[derive(Clone, Debug, PartialEq)]
pub struct RateProfile {
    base: Base,
    window: Window,
    // values[j] = W(p^(gamma_min + j))
    values: Vec<f64>,
    tail_total: f64,
}

impl RateProfile {
    /// `W(r) = r^-(alpha + 1)`, so `W(p^i) = p^(-i (alpha + 1))`.
    pub fn vladimirov(alpha: f64, window: Window, base: Base) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        let p = base.get() as f64;
        let values = (window.gamma_min()..=window.gamma_max())
            .map(|i| p.powf(-(i as f64) * (alpha + 1.0)))
            .collect();
        Self::from_values(base, window, values)
    }

    /// Explicit table; every window level must be present.
    pub fn table(values: &BTreeMap<i32, f64>, window: Window, base: Base) -> Result<Self> {
        let values = (window.gamma_min()..=window.gamma_max())
            .map(|i| values.get(&i).copied().ok_or(Error::MissingRate(i)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(base, window, values)
    }

    fn from_values(base: Base, window: Window, values: Vec<f64>) -> Result<Self> {
        for (j, &w) in values.iter().enumerate() {
            let level = window.gamma_min() + j as i32;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidRate { level, value: w });
            }
            if j > 0 && w > values[j - 1] {
                return Err(Error::MonotonicityViolation { level });
            }
        }
        let tail_total = *values.last().expect("window has at least one level");
        Ok(RateProfile {
            base,
            window,
            values,
            tail_total,
        })
    }

    pub fn from_config(config: &KernelConfig, window: Window, base: Base) -> Result<Self> {
        match config {
            KernelConfig::Vladimirov { alpha } => Self::vladimirov(*alpha, window, base),
            KernelConfig::Table { values, tail } => {
                if tail != "vanishing" {
                    return Err(Error::UnsupportedTail(tail.clone()));
                }
                let values = values
                    .iter()
                    .map(|(k, v)| {
                        k.trim().parse::<i32>().map(|k| (k, *v)).map_err(|_| {
                            Error::Parse(format!("rate table key {k:?} is not a level"))
                        })
                    })
                    .collect::<Result<BTreeMap<_, _>>>()?;
                Self::table(&values, window, base)
            }
        }
    }

    #[inline]
    pub fn base(&self) -> Base {
        self.base
    }

    #[inline]
    pub fn window(&self) -> Window {
        self.window
    }

    /// `W(p^level)`; `level` must lie in the window.
    #[inline]
    pub fn w(&self, level: i32) -> f64 {
        self.values[(level - self.window.gamma_min()) as usize]
    }

    pub fn get(&self, level: i32) -> Option<f64> {
        self.window.contains_level(level).then(|| self.w(level))
    }

    /// `W(p^i) - W(p^(i+1))` for `gamma_min <= i < gamma_max`.
    pub fn delta_w(&self, i: i32) -> Result<f64> {
        if i < self.window.gamma_min() || i >= self.window.gamma_max() {
            return Err(Error::LevelOutOfWindow {
                level: i,
                gamma_min: self.window.gamma_min(),
                gamma_max: self.window.gamma_max() - 1,
            });
        }
        Ok(self.w(i) - self.w(i + 1))
    }

    /// `Σ_{i >= gamma_max} (W(p^i) - W(p^(i+1)))` under the vanishing tail.
    pub fn tail_total(&self) -> f64 {
        self.tail_total
    }

    pub(crate) fn check_compatible(&self, base: Base, window: Window) -> Result<()> {
        if self.base != base {
            return Err(Error::BaseMismatch {
                left: base.get(),
                right: self.base.get(),
            });
        }
        if self.window != window {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }
}

/// `{ "type": "vladimirov", "alpha": 1.0 }` or
/// `{ "type": "table", "values": { "-1": 4.0, "0": 1.0 }, "tail": "vanishing" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelConfig {
    Vladimirov {
        alpha: f64,
    },
    Table {
        /// Keyed by level, written as a string (JSON object keys).
        values: BTreeMap<String, f64>,
        #[serde(default = "vanishing")]
        tail: String,
    },
}

fn vanishing() -> String {
    "vanishing".to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z2(gamma_min: i32) -> (Window, Base) {
        (Window::new(gamma_min, 0).unwrap(), Base::new(2).unwrap())
    }

    #[test]
    fn vladimirov_values() {
        let (w, b) = z2(-3);
        let k = RateProfile::vladimirov(1.0, w, b).unwrap();
        assert_eq!(k.w(0), 1.0);
        assert_eq!(k.w(-1), 4.0);
        assert_eq!(k.delta_w(-1).unwrap(), 3.0);
        assert_eq!(k.tail_total(), 1.0);
        for i in -3..0 {
            assert!(k.w(i) > k.w(i + 1));
        }
        assert!(RateProfile::vladimirov(0.0, w, b).is_err());
    }

    #[test]
    fn delta_w_example() {
        let (_, b) = z2(0);
        let w = Window::new(0, 1).unwrap();
        let k = RateProfile::vladimirov(1.0, w, b).unwrap();
        assert_eq!(k.delta_w(0).unwrap(), 0.75);
        assert!(k.delta_w(1).is_err());
    }

    #[test]
    fn telescoping_example() {
        // gamma = -1, p = 2, alpha = 1: (4 - 1) + (1 - 1/4) + 1/4 = 4
        let b = Base::new(2).unwrap();
        let w = Window::new(-1, 1).unwrap();
        let k = RateProfile::vladimirov(1.0, w, b).unwrap();
        let sum = k.delta_w(-1).unwrap() + k.delta_w(0).unwrap() + k.tail_total();
        assert_eq!(sum, 4.0);
        assert_eq!(sum, k.w(-1));
    }

    #[test]
    fn constant_table_is_accepted() {
        let (w, b) = z2(-2);
        let values = (-2..=0).map(|i| (i, 0.5)).collect();
        let k = RateProfile::table(&values, w, b).unwrap();
        for i in -2..0 {
            assert_eq!(k.delta_w(i).unwrap(), 0.0);
        }
        assert_eq!(k.tail_total(), 0.5);
    }

    #[test]
    fn table_errors() {
        let (w, b) = z2(-2);
        let up: BTreeMap<_, _> = [(-2, 1.0), (-1, 2.0), (0, 0.5)].into();
        assert!(matches!(
            RateProfile::table(&up, w, b),
            Err(Error::MonotonicityViolation { level: -1 })
        ));
        let missing: BTreeMap<_, _> = [(-2, 1.0), (0, 0.5)].into();
        assert!(matches!(
            RateProfile::table(&missing, w, b),
            Err(Error::MissingRate(-1))
        ));
        let cfg: KernelConfig = serde_json::from_str(
            r#"{"type":"table","values":{"-2":1,"-1":1,"0":1},"tail":"heavy"}"#,
        )
        .unwrap();
        assert!(matches!(
            RateProfile::from_config(&cfg, w, b),
            Err(Error::UnsupportedTail(_))
        ));
    }

    #[test]
    fn kernel_config_json() {
        let cfg: KernelConfig =
            serde_json::from_str(r#"{"type":"vladimirov","alpha":1.5}"#).unwrap();
        assert_eq!(cfg, KernelConfig::Vladimirov { alpha: 1.5 });
        let cfg: KernelConfig =
            serde_json::from_str(r#"{"type":"table","values":{"-1":4.0,"0":1.0}}"#).unwrap();
        let (w, b) = z2(-1);
        let k = RateProfile::from_config(&cfg, w, b).unwrap();
        assert_eq!(k.w(-1), 4.0);
    }

    proptest! {
        #[test]
        fn telescoping_identity(alpha in 0.05f64..4.0, p in 2u32..7, lo in -6i32..0, hi in 0i32..3) {
            let b = Base::new(p).unwrap();
            let w = Window::new(lo, hi).unwrap();
            let k = RateProfile::vladimirov(alpha, w, b).unwrap();
            for gamma in lo..=hi {
                let sum: f64 = (gamma..hi).map(|i| k.delta_w(i).unwrap()).sum();
                let expected = k.w(gamma) - k.w(hi);
                prop_assert!((sum - expected).abs() <= 1e-14 * k.w(gamma));
            }
        }
    }
}
