//! Channel realizations for the two-transmitter wiretap setup.
//!
//! Each slot holds the four matrices `(H1, H2, G1, G2)`: `H_i` is the
//! `N x N` link from transmitter `i` to the legitimate receiver, `G_i` the
//! `K x N` link to the eavesdropper. Entries are i.i.d. uniform on `[-1, 1]`
//! and draws that would break a scheme (near-singular `H_i`, rank-deficient
//! `G_i`) are resampled, mirroring the measure-zero exclusions the designs
//! assume.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, RealMatrix, Tolerance};

/// Antenna counts: `n` per transmitter and at the receiver, `k` at the
/// eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDims {
    pub n: usize,
    pub k: usize,
}

impl ChannelDims {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidInput("need at least one antenna (n >= 1)".into()));
        }
        Ok(Self { n, k })
    }
}

/// Whether gains persist for the whole block or refresh every slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    Fixed,
    Fading,
}

impl std::fmt::Display for GainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GainMode::Fixed => write!(f, "fixed"),
            GainMode::Fading => write!(f, "fading"),
        }
    }
}

impl std::str::FromStr for GainMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(GainMode::Fixed),
            "fading" => Ok(GainMode::Fading),
            other => Err(Error::InvalidInput(format!(
                "unknown gain mode {other:?}; expected fixed or fading"
            ))),
        }
    }
}

/// One slot's channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub dims: ChannelDims,
    /// 1-based slot index.
    pub slot: usize,
    pub h1: RealMatrix,
    pub h2: RealMatrix,
    pub g1: RealMatrix,
    pub g2: RealMatrix,
}

impl ChannelSet {
    pub fn h(&self, transmitter: usize) -> &RealMatrix {
        match transmitter {
            1 => &self.h1,
            2 => &self.h2,
            _ => panic!("transmitter index must be 1 or 2"),
        }
    }

    pub fn g(&self, transmitter: usize) -> &RealMatrix {
        match transmitter {
            1 => &self.g1,
            2 => &self.g2,
            _ => panic!("transmitter index must be 1 or 2"),
        }
    }
}

/// Resampling threshold on `sigma_max / sigma_min`. Draws above it are
/// rejected so that downstream inverses keep alignment residuals well
/// below the certification tolerance.
pub const CONDITION_LIMIT: f64 = 1e6;

const RESAMPLE_ATTEMPTS: usize = 100;

fn draw_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

fn draw_valid<V: Fn(&RealMatrix) -> bool>(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    valid: V,
    what: &str,
) -> Result<RealMatrix> {
    for _ in 0..RESAMPLE_ATTEMPTS {
        let m = draw_matrix(rng, rows, cols);
        if valid(&m) {
            return Ok(m);
        }
    }
    Err(Error::DegenerateDistribution(format!(
        "{what}: no valid draw in {RESAMPLE_ATTEMPTS} attempts"
    )))
}

fn h_is_valid(m: &RealMatrix) -> bool {
    matches!(matrix::condition_number(m), Ok(c) if c <= CONDITION_LIMIT)
}

fn g_is_valid(m: &RealMatrix, tol: &Tolerance) -> bool {
    let (k, n) = m.shape();
    if k == 0 {
        return true;
    }
    // Full row rank when wide, full column rank when tall, and mild
    // conditioning either way so Gram inverses stay accurate.
    matches!(matrix::rank(m, tol), Ok(r) if r == k.min(n))
        && matches!(matrix::condition_number(m), Ok(c) if c <= CONDITION_LIMIT)
}

/// Draw `slots` channel realizations. Fixed mode reuses the slot-1 matrices
/// for every slot; fading mode refreshes all four matrices each slot. The
/// RNG stream is split per `(slot, matrix)`, so slot `t`'s draw does not
/// depend on how many earlier slots were consumed.
pub fn draw_channels(
    dims: ChannelDims,
    mode: GainMode,
    slots: usize,
    rng_seed: u64,
) -> Result<Vec<ChannelSet>> {
    if slots < 1 {
        return Err(Error::InvalidInput("slots must be >= 1".into()));
    }
    let tol = Tolerance::default();
    let draw_slot = |slot: usize| -> Result<ChannelSet> {
        let rng_for = |matrix_idx: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream((slot as u64) * 4 + matrix_idx);
            rng
        };
        let h1 = draw_valid(&mut rng_for(0), dims.n, dims.n, h_is_valid, "H1")?;
        let h2 = draw_valid(&mut rng_for(1), dims.n, dims.n, h_is_valid, "H2")?;
        let g1 = draw_valid(&mut rng_for(2), dims.k, dims.n, |m| g_is_valid(m, &tol), "G1")?;
        let g2 = draw_valid(&mut rng_for(3), dims.k, dims.n, |m| g_is_valid(m, &tol), "G2")?;
        Ok(ChannelSet { dims, slot: slot + 1, h1, h2, g1, g2 })
    };

    let mut out = Vec::with_capacity(slots);
    match mode {
        GainMode::Fixed => {
            let first = draw_slot(0)?;
            for t in 0..slots {
                let mut ch = first.clone();
                ch.slot = t + 1;
                out.push(ch);
            }
        }
        GainMode::Fading => {
            for t in 0..slots {
                out.push(draw_slot(t)?);
            }
        }
    }
    Ok(out)
}

/// One named validity check with its measured value.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

/// Report-only validation of a channel realization.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    pub slot: usize,
    pub checks: Vec<CheckItem>,
    pub pass: bool,
}

/// Check ranks and conditioning of all four matrices. Never errors; failed
/// invariants show up as failed check items naming the matrix.
pub fn validate_channels(ch: &ChannelSet, tol: &Tolerance) -> ChannelReport {
    let mut checks = Vec::new();
    let mut push = |name: String, value: f64, pass: bool| {
        checks.push(CheckItem { name, value, pass });
    };

    for (name, m) in [("H1", &ch.h1), ("H2", &ch.h2)] {
        let r = matrix::rank(m, tol).unwrap_or(0);
        push(format!("rank({name})"), r as f64, r == ch.dims.n);
        let c = matrix::condition_number(m).unwrap_or(f64::INFINITY);
        push(format!("cond({name})"), c, c <= CONDITION_LIMIT);
    }
    for (name, m) in [("G1", &ch.g1), ("G2", &ch.g2)] {
        let want = ch.dims.k.min(ch.dims.n);
        let r = matrix::rank(m, tol).unwrap_or(0);
        push(format!("rank({name})"), r as f64, r == want);
    }
    let bounded = [&ch.h1, &ch.h2, &ch.g1, &ch.g2]
        .iter()
        .all(|m| m.iter().all(|x| x.is_finite() && x.abs() <= 1.0 + 1e-12));
    push("entries_in_unit_interval".into(), if bounded { 1.0 } else { 0.0 }, bounded);

    let pass = checks.iter().all(|c| c.pass);
    ChannelReport { slot: ch.slot, checks, pass }
}
