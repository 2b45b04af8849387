//! Exact arithmetic for the sum secure degrees of freedom: the closed-form
//! value, the two upper bounds it is the minimum of, regime classification,
//! and the per-regime stream budgets that realize it.
//!
//! Everything here is integer/rational; floating point never enters, so
//! boundary comparisons like `K = N/2` are exact.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational value. Every quantity this module produces reduces to a
/// denominator of 1 or 3.
pub type Rational = Ratio<i64>;

fn rat(num: i64, den: i64) -> Rational {
    Ratio::new(num, den)
}

/// The five scheme regimes over `K` for a given `N`, plus the degenerate
/// tail where no secure streams survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeClass {
    /// `K <= N/2`: pure nullspace beamforming, one slot.
    R1,
    /// `N/2 <= K < N`: beamforming plus aligned jamming over three slots.
    R2,
    /// `N <= K <= 4N/3`: fully aligned jamming over three slots.
    R3,
    /// `4N/3 <= K <= 3N/2`: one-slot alignment with an asymmetric split.
    R4,
    /// `3N/2 <= K <= 2N`: single secure transmitter, the other only jams.
    R5,
    /// `K > 2N`: zero secure degrees of freedom.
    Degenerate,
}

impl std::fmt::Display for RegimeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeClass::R1 => "R1",
            RegimeClass::R2 => "R2",
            RegimeClass::R3 => "R3",
            RegimeClass::R4 => "R4",
            RegimeClass::R5 => "R5",
            RegimeClass::Degenerate => "degenerate",
        };
        write!(f, "{s}")
    }
}

/// Per-block symbol accounting for one regime's scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamBudget {
    /// Secure information symbols sent by transmitter 1 per block.
    pub n1: usize,
    /// Secure information symbols sent by transmitter 2 per block.
    pub n2: usize,
    /// Block length in slots.
    pub n_b: usize,
    /// Jamming symbols sent by transmitter 1 per block.
    pub jam1: usize,
    /// Jamming symbols sent by transmitter 2 per block.
    pub jam2: usize,
}

impl StreamBudget {
    /// `(n1 + n2) / n_b` as an exact rational.
    pub fn sum_rate(&self) -> Rational {
        rat((self.n1 + self.n2) as i64, self.n_b as i64)
    }
}

/// Closed-form optimal sum s.d.o.f. as a function of the antenna counts.
pub fn sum_sdof(n: usize, k: usize) -> Rational {
    let (n, k) = (n as i64, k as i64);
    if 2 * k <= n {
        rat(n, 1)
    } else if k <= n {
        rat(2 * (2 * n - k), 3)
    } else if 3 * k <= 4 * n {
        rat(2 * n, 3)
    } else if k <= 2 * n {
        rat(2 * n - k, 1)
    } else {
        rat(0, 1)
    }
}

/// Upper bound from letting the transmitters cooperate:
/// `min((2N - K)^+, N)`.
pub fn cooperative_bound(n: usize, k: usize) -> Rational {
    let (n, k) = (n as i64, k as i64);
    rat((2 * n - k).max(0).min(n), 1)
}

/// Upper bound from the transmitters staying distributed:
/// `max(2/3 (2N - K), 2/3 N)`.
pub fn distributed_bound(n: usize, k: usize) -> Rational {
    let (n, k) = (n as i64, k as i64);
    rat(2 * (2 * n - k), 3).max(rat(2 * n, 3))
}

/// Which scheme family serves `(N, K)`. Boundaries resolve to the
/// lower-index regime, except `K = N`, which resolves to [`RegimeClass::R3`]
/// so that the fixed-gain dispatch lands on the construction that covers the
/// square `N = K` case.
pub fn classify_regime(n: usize, k: usize) -> RegimeClass {
    let (ni, ki) = (n as i64, k as i64);
    if 2 * ki <= ni {
        RegimeClass::R1
    } else if ki < ni {
        RegimeClass::R2
    } else if 3 * ki <= 4 * ni {
        RegimeClass::R3
    } else if 2 * ki <= 3 * ni {
        RegimeClass::R4
    } else if ki <= 2 * ni {
        RegimeClass::R5
    } else {
        RegimeClass::Degenerate
    }
}

/// Stream counts realizing `sum_sdof(n, k)` in the regime's slot count.
pub fn stream_budget(n: usize, k: usize) -> StreamBudget {
    match classify_regime(n, k) {
        RegimeClass::R1 => StreamBudget { n1: n - k, n2: k, n_b: 1, jam1: 0, jam2: 0 },
        RegimeClass::R2 => StreamBudget {
            n1: 2 * n - k,
            n2: 2 * n - k,
            n_b: 3,
            jam1: 2 * k - n,
            jam2: 2 * k - n,
        },
        RegimeClass::R3 => StreamBudget { n1: n, n2: n, n_b: 3, jam1: n, jam2: n },
        RegimeClass::R4 => StreamBudget {
            n1: k - n,
            n2: 3 * n - 2 * k,
            n_b: 1,
            jam1: 3 * n - 2 * k,
            jam2: k - n,
        },
        RegimeClass::R5 => StreamBudget {
            n1: 2 * n - k,
            n2: 0,
            n_b: 1,
            jam1: 0,
            jam2: 2 * n - k,
        },
        RegimeClass::Degenerate => StreamBudget { n1: 0, n2: 0, n_b: 1, jam1: 0, jam2: 0 },
    }
}

/// One row of the `regimes` table.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub n: usize,
    pub k: usize,
    pub regime: RegimeClass,
    pub ds_num: i64,
    pub ds_den: i64,
    pub coop_bound: String,
    pub dist_bound: String,
}

/// Format a rational as `p` or `p/q` for table output.
pub fn format_rational(r: Rational) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Table of s.d.o.f. values and bounds for `K = 0..=k_max`.
pub fn regime_table(n: usize, k_max: usize) -> Result<Vec<RegimeRow>> {
    if n < 1 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    Ok((0..=k_max)
        .map(|k| {
            let ds = sum_sdof(n, k);
            RegimeRow {
                n,
                k,
                regime: classify_regime(n, k),
                ds_num: *ds.numer(),
                ds_den: *ds.denom(),
                coop_bound: format_rational(cooperative_bound(n, k)),
                dist_bound: format_rational(distributed_bound(n, k)),
            }
        })
        .collect())
}
