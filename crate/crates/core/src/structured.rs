//! Fixed-gain schemes: PAM signaling, real interference alignment on the
//! two-antenna square channel, and the combined Gaussian + PAM designs
//! with output filtering.
//!
//! When the gains do not vary across slots, the three-slot designs lose
//! their diversity and the fractional part of the sum s.d.o.f. has to come
//! from structured signals instead. The channel input splits into a
//! Gaussian part carrying the integer d.o.f. `d` and a PAM part carrying
//! the fractional `l/3` per transmitter, `3d + l = 2K - N` or `N` depending
//! on the sub-regime. The receiver isolates the PAM part with a linear
//! filter that annihilates every Gaussian stream, then decodes it by
//! nearest-point search over the rational dimensions.

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::gaussian::{self, ResidualItem, SchemeDesign, SlotPrecoders};
use crate::matrix::{self, hcat, max_abs, RealMatrix, Tolerance};
use crate::regimes::{Rational, RegimeClass, StreamBudget};

/// Instantiated PAM constellation parameters at one operating power.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PamConfig {
    /// Amplitude step.
    pub a: f64,
    /// Constellation half-width; the constellation is `a * {-q..q}`.
    pub q: i64,
    pub delta: f64,
    pub gamma: f64,
    /// Alignment order of the monomial construction.
    pub m: usize,
}

impl PamConfig {
    /// `M = m^2`: monomials per basis (the exponent pair ranges over
    /// `{0..m-1}^2`).
    pub fn big_m(&self) -> usize {
        self.m * self.m
    }

    /// `M_S = 2m^2 + (m+1)^2`: rational dimensions per receiver antenna in
    /// the two-antenna construction.
    pub fn m_s(&self) -> usize {
        2 * self.m * self.m + (self.m + 1) * (self.m + 1)
    }
}

/// `2m^2 / (2m^2 + (m+1)^2)`, the fraction of receiver dimensions carrying
/// desired symbols; tends to 2/3 as `m` grows.
pub fn dimension_ratio(m: usize) -> Rational {
    let m = m as i64;
    Rational::new(2 * m * m, 2 * m * m + (m + 1) * (m + 1))
}

/// The PAM constellation `a * {-q, ..., q}`.
pub fn pam_points(cfg: &PamConfig) -> Vec<f64> {
    (-cfg.q..=cfg.q).map(|i| cfg.a * i as f64).collect()
}

/// Power-derived constellation parameters: `Q = floor(P^((1-delta) /
/// (2(M_S + delta))))` and `a = gamma * sqrt(P) / Q`. `dims` is the number
/// of rational dimensions per receiver antenna (`M_S` for the two-antenna
/// construction, 3 for the scalar one).
pub fn pam_params(p: f64, delta: f64, gamma: f64, dims: usize) -> Result<(i64, f64)> {
    if !(p > 1.0) {
        return Err(Error::PowerTooLow(format!(
            "P = {p} cannot hold a constellation; need P > 1"
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta must lie in [0, 1], got {delta}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    let exponent = (1.0 - delta) / (2.0 * (dims as f64 + delta));
    // Nudge before flooring: exact powers like 1e6^(1/6) land within one
    // ulp of an integer and must not round down past it.
    let q = (p.powf(exponent) * (1.0 + 1e-12)).floor() as i64;
    if q < 1 {
        return Err(Error::PowerTooLow(format!(
            "P = {p} yields constellation half-width {q}; need Q >= 1"
        )));
    }
    let a = gamma * p.sqrt() / q as f64;
    Ok((q, a))
}

/// Power-independent PAM parameters of a structured design. Instantiated
/// into a [`PamConfig`] once the operating power is known.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PamSpec {
    pub m: usize,
    pub delta: f64,
    /// Power normalization; chosen at design time so the PAM part consumes
    /// at most half the power budget.
    pub gamma: f64,
    /// Rational dimensions per antenna of the variant (3 for the scalar
    /// variant, `2m^2 + (m+1)^2` for the two-antenna one).
    pub dims: usize,
    /// Pinned half-width, bypassing the power-derived choice.
    pub q_override: Option<i64>,
}

impl PamSpec {
    pub fn config_at(&self, p: f64) -> Result<PamConfig> {
        let (q, a) = match self.q_override {
            Some(q) => {
                if q < 0 {
                    return Err(Error::InvalidInput("pinned Q must be >= 0".into()));
                }
                let a = if q == 0 { 0.0 } else { self.gamma * p.sqrt() / q as f64 };
                (q, a)
            }
            None => pam_params(p, self.delta, self.gamma, self.dims)?,
        };
        Ok(PamConfig { a, q, delta: self.delta, gamma: self.gamma, m: self.m })
    }
}

/// User-facing PAM knobs; `gamma` and the variant are derived per design.
#[derive(Debug, Clone, Copy)]
pub struct PamKnobs {
    pub m: usize,
    pub delta: f64,
    pub q_override: Option<i64>,
}

impl Default for PamKnobs {
    fn default() -> Self {
        Self { m: 3, delta: 0.05, q_override: None }
    }
}

/// Monomials of one effective channel pair: `gen_a^{r1} gen_b^{r2}` over
/// `r in {0..m-1}^2` (`values`) and `{0..m}^2` (`extended`), row-major in
/// `r1`.
#[derive(Debug, Clone, Serialize)]
pub struct MonomialBasis {
    pub gen_a: f64,
    pub gen_b: f64,
    pub m: usize,
    pub values: Vec<f64>,
    pub extended: Vec<f64>,
}

impl MonomialBasis {
    pub fn value_at(&self, r1: usize, r2: usize) -> f64 {
        self.values[r1 * self.m + r2]
    }

    pub fn extended_at(&self, r1: usize, r2: usize) -> f64 {
        self.extended[r1 * (self.m + 1) + r2]
    }
}

fn monomial(base_a: f64, base_b: f64, r1: usize, r2: usize) -> f64 {
    base_a.powi(r1 as i32) * base_b.powi(r2 as i32)
}

/// Build the monomial basis for `antenna` (1 or 2) from the diagonal
/// entries of the effective receiver maps.
pub fn monomial_basis(
    a_eff: &RealMatrix,
    b_eff: &RealMatrix,
    m: usize,
    antenna: usize,
) -> Result<MonomialBasis> {
    if m < 1 {
        return Err(Error::InvalidInput("alignment order m must be >= 1".into()));
    }
    if !(antenna == 1 || antenna == 2) {
        return Err(Error::InvalidInput("antenna index must be 1 or 2".into()));
    }
    let i = antenna - 1;
    let gen_a = a_eff[(i, i)];
    let gen_b = b_eff[(i, i)];
    if gen_a == 0.0 || gen_b == 0.0 || !gen_a.is_finite() || !gen_b.is_finite() {
        return Err(Error::DegenerateChannel(format!(
            "effective diagonal gains at antenna {antenna} are ({gen_a}, {gen_b}); need nonzero"
        )));
    }
    let mut values = Vec::with_capacity(m * m);
    for r1 in 0..m {
        for r2 in 0..m {
            values.push(monomial(gen_a, gen_b, r1, r2));
        }
    }
    let mut extended = Vec::with_capacity((m + 1) * (m + 1));
    for r1 in 0..=m {
        for r2 in 0..=m {
            extended.push(monomial(gen_a, gen_b, r1, r2));
        }
    }
    Ok(MonomialBasis { gen_a, gen_b, m, values, extended })
}

/// Split of one transmitter's aligned streams into Gaussian and PAM parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitBudget {
    /// Gaussian streams per transmitter.
    pub d: usize,
    /// PAM streams per transmitter (0, 1, or 2).
    pub l: usize,
}

/// `d = floor(total / 3)`, `l = total mod 3` with `total = 2K - N` in the
/// lower sub-regime and `N` in the upper one.
pub fn split_budget(n: usize, k: usize) -> Result<SplitBudget> {
    if 2 * k < n || 3 * k > 4 * n {
        return Err(Error::WrongRegime(format!(
            "structured split needs N/2 <= K <= 4N/3, got (N={n}, K={k})"
        )));
    }
    let total = if k <= n { 2 * k - n } else { n };
    Ok(SplitBudget { d: total / 3, l: total % 3 })
}

/// The PAM sub-channel after filtering, in the two shapes it can take.
#[derive(Debug, Clone)]
pub enum PamPart {
    /// `l = 1`: scalar channel `y = c1 v1 + c2 v2 + (u1 + u2) + noise`.
    Siso { c1: f64, c2: f64 },
    /// `l = 2`: two-antenna channel `y = A s1 + B s2 + (j1 + j2) + noise`
    /// with monomial-combined scalars, decoded by real alignment.
    Mimo2 {
        eff_a: RealMatrix,
        eff_b: RealMatrix,
        t1: MonomialBasis,
        t2: MonomialBasis,
    },
}

/// Receiver-side filter isolating the PAM streams: `F` stacks the Gaussian
/// receive directions, `B` spans its nullspace, `D = (B^T Q2)^{-1} B^T`
/// maps `Y` onto the PAM sub-channel, and `E = [D; I 0]` is the full
/// invertible change of observation.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub f: RealMatrix,
    pub b: RealMatrix,
    pub d: RealMatrix,
    pub e: RealMatrix,
}

/// A combined fixed-gain design: single-slot Gaussian sub-design plus the
/// `l`-column PAM precoders and their filter.
#[derive(Debug, Clone)]
pub struct StructuredDesign {
    /// Gaussian sub-design (the `d`-column precoders and, in the lower
    /// sub-regime, the eavesdropper-nullspace beams).
    pub gaussian: SchemeDesign,
    pub split: SplitBudget,
    /// PAM precoder columns (`N x l`).
    pub p1_pam: RealMatrix,
    pub p2_pam: RealMatrix,
    pub q_pam: RealMatrix,
    pub filter: Option<FilterBank>,
    pub pam: Option<PamPart>,
    pub pam_spec: PamSpec,
}

impl StructuredDesign {
    pub fn n(&self) -> usize {
        self.gaussian.n
    }

    pub fn k(&self) -> usize {
        self.gaussian.k
    }

    /// Information PAM symbols per transmitter: `M` per combined stream.
    pub fn pam_symbols_per_tx(&self) -> usize {
        match &self.pam {
            None => 0,
            Some(PamPart::Siso { .. }) => 1,
            Some(PamPart::Mimo2 { t1, .. }) => 2 * t1.values.len(),
        }
    }

    /// Residual map from Gaussian symbols into the filtered PAM channel
    /// (exactly zero up to the certification tolerance).
    pub fn gaussian_residual_into_filtered(&self, ch: &ChannelSet) -> Result<RealMatrix> {
        let Some(filter) = &self.filter else {
            return Ok(RealMatrix::zeros(0, 0));
        };
        let cols = gaussian_receiver_columns(&self.gaussian, ch)?;
        Ok(&filter.d * &cols)
    }
}

/// Half of the average power goes to each of the Gaussian and PAM parts
/// when both are present.
const PAM_POWER_SHARE: f64 = 0.5;

/// All receiver-side columns of the Gaussian streams (the columns `F`
/// transposes).
fn gaussian_receiver_columns(g: &SchemeDesign, ch: &ChannelSet) -> Result<RealMatrix> {
    let slot = &g.per_slot[0];
    let mut blocks: Vec<RealMatrix> = Vec::new();
    if let Some(gp1) = &slot.gperp1 {
        blocks.push(&ch.h1 * gp1);
    }
    if let Some(gp2) = &slot.gperp2 {
        blocks.push(&ch.h2 * gp2);
    }
    blocks.push(&ch.h1 * slot.p1.as_ref().expect("gaussian sub-design has P1"));
    blocks.push(&ch.h2 * slot.p2.as_ref().expect("gaussian sub-design has P2"));
    blocks.push(slot.q.as_ref().expect("gaussian sub-design has Q").clone());
    Ok(hcat(&blocks.iter().collect::<Vec<_>>()))
}

fn build_filter(
    gaussian: &SchemeDesign,
    ch: &ChannelSet,
    q_pam: &RealMatrix,
    tol: &Tolerance,
) -> Result<Option<FilterBank>> {
    let n = ch.dims.n;
    let l = q_pam.ncols();
    if l == 0 {
        return Ok(None);
    }
    let cols = gaussian_receiver_columns(gaussian, ch)?;
    debug_assert_eq!(cols.ncols(), n - l);
    let f = cols.transpose();
    let b = matrix::nullspace_basis(&f, tol)?;
    if b.ncols() != l {
        return Err(Error::InfeasibleDesign(format!(
            "filter nullspace has {} columns, expected l = {l}",
            b.ncols()
        )));
    }
    let bq = b.transpose() * q_pam;
    let Some(bq_inv) = bq.clone().try_inverse() else {
        return Err(Error::SingularChannel(
            "B^T Q2 is singular; PAM columns fall into the Gaussian span".into(),
        ));
    };
    let d = bq_inv * b.transpose();
    let mut e = RealMatrix::zeros(n, n);
    e.view_mut((0, 0), (l, n)).copy_from(&d);
    if n > l {
        e.view_mut((l, 0), (n - l, n - l))
            .copy_from(&RealMatrix::identity(n - l, n - l));
    }
    if matrix::rank(&e, tol)? != n {
        return Err(Error::SingularChannel("observation filter E is singular".into()));
    }
    Ok(Some(FilterBank { f, b, d, e }))
}

fn pam_part_from_filtered(
    eff_a: RealMatrix,
    eff_b: RealMatrix,
    l: usize,
    m: usize,
) -> Result<Option<PamPart>> {
    match l {
        0 => Ok(None),
        1 => {
            let (c1, c2) = (eff_a[(0, 0)], eff_b[(0, 0)]);
            if c1 == 0.0 || c2 == 0.0 {
                return Err(Error::DegenerateChannel(
                    "filtered scalar gains vanish; cannot place PAM streams".into(),
                ));
            }
            Ok(Some(PamPart::Siso { c1, c2 }))
        }
        2 => {
            let t1 = monomial_basis(&eff_a, &eff_b, m, 1)?;
            let t2 = monomial_basis(&eff_a, &eff_b, m, 2)?;
            Ok(Some(PamPart::Mimo2 { eff_a, eff_b, t1, t2 }))
        }
        _ => Err(Error::InvalidInput(format!("PAM stream count l = {l} out of range"))),
    }
}

/// Per-combined-stream weights `||t_k||^2` entering the PAM transmit power.
fn pam_stream_weights(pam: &PamPart) -> Vec<f64> {
    match pam {
        PamPart::Siso { .. } => vec![1.0],
        PamPart::Mimo2 { t1, t2, .. } => vec![
            t1.values.iter().map(|v| v * v).sum(),
            t2.values.iter().map(|v| v * v).sum(),
        ],
    }
}

/// `gamma` such that the PAM part consumes at most `share` of the power
/// budget at either transmitter, for every `Q >= 1`, independent of P.
fn pam_gamma(
    ch: &ChannelSet,
    p1_pam: &RealMatrix,
    p2_pam: &RealMatrix,
    q_pam: &RealMatrix,
    pam: &PamPart,
    share: f64,
) -> Result<f64> {
    let weights = pam_stream_weights(pam);
    let h1_inv = ch.h1.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H1 is not invertible".into())
    })?;
    let h2_inv = ch.h2.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H2 is not invertible".into())
    })?;
    let j1 = &h1_inv * q_pam;
    let j2 = &h2_inv * q_pam;
    let mut worst = 0.0_f64;
    for (p_pam, j) in [(p1_pam, &j1), (p2_pam, &j2)] {
        let mut c = 0.0;
        for (kcol, w) in weights.iter().enumerate() {
            c += w * (p_pam.column(kcol).norm_squared() + j.column(kcol).norm_squared());
        }
        worst = worst.max(c);
    }
    if worst == 0.0 {
        return Ok(1.0);
    }
    // Per-symbol variance is a^2 Q(Q+1)/3 <= (2/3) gamma^2 P for Q >= 1.
    Ok((3.0 * share / (2.0 * worst)).sqrt())
}

/// Rescale the Gaussian sub-design's power so the Gaussian part fits in the
/// remaining budget share.
fn scale_gaussian_alpha(design: &mut SchemeDesign, ch: &ChannelSet, share: f64) -> Result<()> {
    let full = gaussian::power_scale(design, std::slice::from_ref(ch))?;
    design.alpha = full * share;
    Ok(())
}

/// The canonical square two-antenna design (`N = K = 2`): both transmitters
/// place monomial-combined PAM symbols so every information stream hides
/// inside the other transmitter's jamming at the eavesdropper, while the
/// receiver separates them in rational dimensions.
pub fn design_2222(ch: &ChannelSet, knobs: &PamKnobs, tol: &Tolerance) -> Result<StructuredDesign> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    if n != 2 || k != 2 {
        return Err(Error::WrongRegime(format!(
            "two-antenna square design needs N = K = 2, got (N={n}, K={k})"
        )));
    }
    let g1_inv = ch.g1.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("G1 is not invertible".into())
    })?;
    let g2_inv = ch.g2.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("G2 is not invertible".into())
    })?;
    let h1_inv = ch.h1.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H1 is not invertible".into())
    })?;
    let h2_inv = ch.h2.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H2 is not invertible".into())
    })?;

    let p1_pam = &g1_inv * &ch.g2 * &h2_inv;
    let p2_pam = &g2_inv * &ch.g1 * &h1_inv;
    let q_pam = RealMatrix::identity(2, 2);

    let eff_a = &ch.h1 * &p1_pam;
    let eff_b = &ch.h2 * &p2_pam;
    let pam = pam_part_from_filtered(eff_a, eff_b, 2, knobs.m)?.expect("l = 2");
    // No Gaussian part here, so the PAM streams take the whole budget.
    let gamma = pam_gamma(ch, &p1_pam, &p2_pam, &q_pam, &pam, 1.0)?;

    let empty = RealMatrix::zeros(2, 0);
    let gaussian = SchemeDesign {
        regime: RegimeClass::R3,
        n,
        k,
        slots: 1,
        per_slot: vec![SlotPrecoders {
            p1: Some(empty.clone()),
            p2: Some(empty.clone()),
            q: Some(empty),
            ..Default::default()
        }],
        budget: StreamBudget { n1: 0, n2: 0, n_b: 1, jam1: 0, jam2: 0 },
        alpha: 1.0,
    };

    let filter = FilterBank {
        f: RealMatrix::zeros(0, 2),
        b: RealMatrix::identity(2, 2),
        d: RealMatrix::identity(2, 2),
        e: RealMatrix::identity(2, 2),
    };
    let m_s = PamConfig { a: 0.0, q: 0, delta: knobs.delta, gamma, m: knobs.m }.m_s();
    let design = StructuredDesign {
        gaussian,
        split: SplitBudget { d: 0, l: 2 },
        p1_pam,
        p2_pam,
        q_pam,
        filter: Some(filter),
        pam: Some(pam),
        pam_spec: PamSpec {
            m: knobs.m,
            delta: knobs.delta,
            gamma,
            dims: m_s,
            q_override: knobs.q_override,
        },
    };
    let _ = tol;
    Ok(design)
}

/// Fixed-gain design for `N/2 <= K <= N`: nullspace beams plus `d + l`
/// aligned columns, with the last `l` columns carrying PAM symbols behind
/// the annihilating filter.
pub fn design_fixed_r2(
    ch: &ChannelSet,
    knobs: &PamKnobs,
    tol: &Tolerance,
    seed: u64,
) -> Result<StructuredDesign> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    if 2 * k < n || k > n {
        return Err(Error::WrongRegime(format!(
            "fixed lower-regime design needs N/2 <= K <= N, got (N={n}, K={k})"
        )));
    }
    let split = split_budget(n, k)?;
    let (d, l) = (split.d, split.l);
    let total = d + l;

    let gperp1 = matrix::nullspace_basis(&ch.g1, tol)?;
    let gperp2 = matrix::nullspace_basis(&ch.g2, tol)?;
    let h1_inv = ch.h1.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H1 is not invertible".into())
    })?;
    let h2_inv = ch.h2.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H2 is not invertible".into())
    })?;
    let pinv1 = matrix::pseudo_inverse_row(&ch.g1)?;
    let pinv2 = matrix::pseudo_inverse_row(&ch.g2)?;

    for attempt in 0..100_u64 {
        let q_full = random_orthonormal_cols(n, total, seed.wrapping_add(attempt * 7919), tol)?;
        let p1_full = &pinv1 * (&ch.g2 * &h2_inv * &q_full);
        let p2_full = &pinv2 * (&ch.g1 * &h1_inv * &q_full);

        let (mut p1_g, p1_pam) = split_cols(&p1_full, d);
        let (mut p2_g, p2_pam) = split_cols(&p2_full, d);
        let (mut q_g, q_pam) = split_cols(&q_full, d);
        let j1 = &h1_inv * &q_g;
        let j2 = &h2_inv * &q_g;
        gaussian::balance_aligned_columns(&mut p1_g, &mut p2_g, &mut q_g, &[&j1, &j2]);

        let mut gaussian = SchemeDesign {
            regime: RegimeClass::R2,
            n,
            k,
            slots: 1,
            per_slot: vec![SlotPrecoders {
                p1: Some(p1_g),
                p2: Some(p2_g),
                q: Some(q_g),
                gperp1: Some(gperp1.clone()),
                gperp2: Some(gperp2.clone()),
                ..Default::default()
            }],
            budget: StreamBudget {
                n1: (n - k) + d,
                n2: (n - k) + d,
                n_b: 1,
                jam1: d,
                jam2: d,
            },
            alpha: 1.0,
        };

        let filter = match build_filter(&gaussian, ch, &q_pam, tol) {
            Ok(f) => f,
            Err(Error::SingularChannel(_)) => continue,
            Err(e) => return Err(e),
        };
        let gauss_streams = 2 * (n - k) + 2 * d > 0;
        let pam_share = if gauss_streams { PAM_POWER_SHARE } else { 1.0 };
        let (pam, gamma) = match &filter {
            None => (None, 1.0),
            Some(bank) => {
                let eff_a = &bank.d * &ch.h1 * &p1_pam;
                let eff_b = &bank.d * &ch.h2 * &p2_pam;
                let pam = pam_part_from_filtered(eff_a, eff_b, l, knobs.m)?.expect("l > 0");
                let gamma = pam_gamma(ch, &p1_pam, &p2_pam, &q_pam, &pam, pam_share)?;
                (Some(pam), gamma)
            }
        };
        let share = if l > 0 { 1.0 - pam_share } else { 1.0 };
        scale_gaussian_alpha(&mut gaussian, ch, share.max(0.0))?;

        let dims = match &pam {
            Some(PamPart::Siso { .. }) => 3,
            _ => PamConfig { a: 0.0, q: 0, delta: knobs.delta, gamma, m: knobs.m }.m_s(),
        };
        return Ok(StructuredDesign {
            gaussian,
            split,
            p1_pam,
            p2_pam,
            q_pam,
            filter,
            pam,
            pam_spec: PamSpec {
                m: knobs.m,
                delta: knobs.delta,
                gamma,
                dims,
                q_override: knobs.q_override,
            },
        });
    }
    Err(Error::DegenerateDistribution(
        "no PAM precoder draw escaped the Gaussian span in 100 attempts".into(),
    ))
}

/// Fixed-gain design for `N <= K <= 4N/3`: all `d + l` columns come from
/// the nullspace of the one-slot alignment system; the square `N = K = 2`
/// case reduces to the canonical two-antenna design.
pub fn design_fixed_r3(
    ch: &ChannelSet,
    knobs: &PamKnobs,
    tol: &Tolerance,
    seed: u64,
) -> Result<StructuredDesign> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    if k < n || 3 * k > 4 * n {
        return Err(Error::WrongRegime(format!(
            "fixed upper-regime design needs N <= K <= 4N/3, got (N={n}, K={k})"
        )));
    }
    if n == 2 && k == 2 {
        return design_2222(ch, knobs, tol);
    }
    let split = split_budget(n, k)?;
    let (d, l) = (split.d, split.l);
    let total = d + l;
    // Alignment feasibility: the nullspace must hold all d + l columns.
    if 3 * n < 2 * k + total {
        return Err(Error::InfeasibleDesign(format!(
            "alignment nullspace dimension {} < d + l = {total}",
            3 * n - 2 * k
        )));
    }

    let psi = gaussian::single_slot_alignment_system(ch)?;
    let h1_inv = ch.h1.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H1 is not invertible".into())
    })?;
    let h2_inv = ch.h2.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H2 is not invertible".into())
    })?;
    for attempt in 0..100_u64 {
        let stack = matrix::nullspace_subset(&psi, total, tol, seed.wrapping_add(attempt * 7919))?;
        let p1_full = stack.rows(0, n).into_owned();
        let p2_full = stack.rows(n, n).into_owned();
        let q_full = stack.rows(2 * n, n).into_owned();

        let (mut p1_g, p1_pam) = split_cols(&p1_full, d);
        let (mut p2_g, p2_pam) = split_cols(&p2_full, d);
        let (mut q_g, q_pam) = split_cols(&q_full, d);
        let j1 = &h1_inv * &q_g;
        let j2 = &h2_inv * &q_g;
        gaussian::balance_aligned_columns(&mut p1_g, &mut p2_g, &mut q_g, &[&j1, &j2]);

        let mut gaussian = SchemeDesign {
            regime: RegimeClass::R3,
            n,
            k,
            slots: 1,
            per_slot: vec![SlotPrecoders {
                p1: Some(p1_g),
                p2: Some(p2_g),
                q: Some(q_g),
                ..Default::default()
            }],
            budget: StreamBudget { n1: d, n2: d, n_b: 1, jam1: d, jam2: d },
            alpha: 1.0,
        };

        let filter = match build_filter(&gaussian, ch, &q_pam, tol) {
            Ok(f) => f,
            Err(Error::SingularChannel(_)) => continue,
            Err(e) => return Err(e),
        };
        let gauss_streams = d > 0;
        let pam_share = if gauss_streams { PAM_POWER_SHARE } else { 1.0 };
        let (pam, gamma) = match &filter {
            None => (None, 1.0),
            Some(bank) => {
                let eff_a = &bank.d * &ch.h1 * &p1_pam;
                let eff_b = &bank.d * &ch.h2 * &p2_pam;
                let pam = pam_part_from_filtered(eff_a, eff_b, l, knobs.m)?.expect("l > 0");
                let gamma = pam_gamma(ch, &p1_pam, &p2_pam, &q_pam, &pam, pam_share)?;
                (Some(pam), gamma)
            }
        };
        let share = if l > 0 { 1.0 - pam_share } else { 1.0 };
        scale_gaussian_alpha(&mut gaussian, ch, share.max(0.0))?;

        let dims = match &pam {
            Some(PamPart::Siso { .. }) => 3,
            _ => PamConfig { a: 0.0, q: 0, delta: knobs.delta, gamma, m: knobs.m }.m_s(),
        };
        return Ok(StructuredDesign {
            gaussian,
            split,
            p1_pam,
            p2_pam,
            q_pam,
            filter,
            pam,
            pam_spec: PamSpec {
                m: knobs.m,
                delta: knobs.delta,
                gamma,
                dims,
                q_override: knobs.q_override,
            },
        });
    }
    Err(Error::DegenerateDistribution(
        "no PAM precoder draw escaped the Gaussian span in 100 attempts".into(),
    ))
}

/// A fixed-gain design: the structured construction where the fractional
/// regimes need it, the plain Gaussian one elsewhere.
#[derive(Debug, Clone)]
pub enum FixedDesign {
    Gaussian(SchemeDesign),
    Structured(Box<StructuredDesign>),
}

/// Dispatch the fixed-gain design for the channels' `(N, K)`.
pub fn design_fixed_for(
    ch: &ChannelSet,
    knobs: &PamKnobs,
    tol: &Tolerance,
    seed: u64,
) -> Result<FixedDesign> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    match crate::regimes::classify_regime(n, k) {
        RegimeClass::R1 => Ok(FixedDesign::Gaussian(gaussian::design_r1(ch, tol, seed)?)),
        RegimeClass::R2 => Ok(FixedDesign::Structured(Box::new(design_fixed_r2(
            ch, knobs, tol, seed,
        )?))),
        RegimeClass::R3 => Ok(FixedDesign::Structured(Box::new(design_fixed_r3(
            ch, knobs, tol, seed,
        )?))),
        RegimeClass::R4 => Ok(FixedDesign::Gaussian(gaussian::design_r4(ch, tol, seed)?)),
        RegimeClass::R5 => Ok(FixedDesign::Gaussian(gaussian::design_r5(ch, tol, seed)?)),
        RegimeClass::Degenerate => Ok(FixedDesign::Gaussian(SchemeDesign {
            regime: RegimeClass::Degenerate,
            n,
            k,
            slots: 1,
            per_slot: vec![SlotPrecoders::default()],
            budget: StreamBudget { n1: 0, n2: 0, n_b: 1, jam1: 0, jam2: 0 },
            alpha: 1.0,
        })),
    }
}

fn split_cols(m: &RealMatrix, d: usize) -> (RealMatrix, RealMatrix) {
    let l = m.ncols() - d;
    (m.columns(0, d).into_owned(), m.columns(d, l).into_owned())
}

fn random_orthonormal_cols(
    rows: usize,
    cols: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<RealMatrix> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    if cols == 0 {
        return Ok(RealMatrix::zeros(rows, 0));
    }
    for _ in 0..100 {
        let raw = RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0));
        if matrix::rank(&raw, tol)? < cols {
            continue;
        }
        let q = raw.qr().q();
        return Ok(q.columns(0, cols).into_owned());
    }
    Err(Error::DegenerateDistribution(format!(
        "no full-column-rank {rows} x {cols} draw in 100 attempts"
    )))
}

/// Smallest pairwise relative gap among `values`.
fn min_relative_gap(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut min_gap = f64::INFINITY;
    for w in sorted.windows(2) {
        let scale = w[0].abs().max(w[1].abs()).max(1e-300);
        min_gap = min_gap.min((w[1] - w[0]).abs() / scale);
    }
    min_gap
}

/// Rational dimensions observed at filtered antenna `i` (0-based): the
/// interference monomials plus the two desired coefficient sets.
pub fn antenna_dimensions(pam: &PamPart, antenna: usize) -> Vec<f64> {
    match pam {
        PamPart::Siso { c1, c2 } => vec![1.0, *c1, *c2],
        PamPart::Mimo2 { eff_a, eff_b, t1, t2 } => {
            let (own, other) = if antenna == 0 { (t1, t2) } else { (t2, t1) };
            let o = 1 - antenna;
            let a_cross = eff_a[(antenna, o)];
            let b_cross = eff_b[(antenna, o)];
            let mut dims = own.extended.clone();
            dims.extend(other.values.iter().map(|v| a_cross * v));
            dims.extend(other.values.iter().map(|v| b_cross * v));
            dims
        }
    }
}

/// Certification report for a structured design.
#[derive(Debug, Clone, Serialize)]
pub struct StructuredReport {
    pub items: Vec<ResidualItem>,
    pub max_residual: f64,
    /// Smallest relative gap among rational dimensions across antennas
    /// (infinity when there is no PAM part).
    pub min_dimension_gap: f64,
    pub pass: bool,
}

const DIMENSION_GAP_TOL: f64 = 1e-12;

/// Verify all equalities and rank conditions of a structured design against
/// its channel.
pub fn verify_structured(
    design: &StructuredDesign,
    ch: &ChannelSet,
    tol: &Tolerance,
) -> Result<StructuredReport> {
    let mut items: Vec<ResidualItem> = Vec::new();
    let mut push = |name: String, residual: f64, pass: bool| {
        items.push(ResidualItem { name, residual, pass });
    };
    let n = design.n();
    let l = design.split.l;

    let h1_inv = ch.h1.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H1 is not invertible".into())
    })?;
    let h2_inv = ch.h2.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel("H2 is not invertible".into())
    })?;

    // Gaussian sub-design alignment (covers Gperp and the first d columns).
    let slot = &design.gaussian.per_slot[0];
    if let Some(gp1) = &slot.gperp1 {
        let r = max_abs(&(&ch.g1 * gp1));
        push("G1*Gperp1 = 0".into(), r, r <= tol.residual_abs_tol);
    }
    if let Some(gp2) = &slot.gperp2 {
        let r = max_abs(&(&ch.g2 * gp2));
        push("G2*Gperp2 = 0".into(), r, r <= tol.residual_abs_tol);
    }
    // Full-column alignment at the eavesdropper (Gaussian and PAM columns).
    let p1_all = hcat(&[slot.p1.as_ref().unwrap(), &design.p1_pam]);
    let p2_all = hcat(&[slot.p2.as_ref().unwrap(), &design.p2_pam]);
    let q_all = hcat(&[slot.q.as_ref().unwrap(), &design.q_pam]);
    let r = matrix::subspace_residual(&(&ch.g1 * &p1_all), &(&ch.g2 * &h2_inv * &q_all))?;
    push("G1*P1 = G2*H2^-1*Q".into(), r, r <= tol.residual_abs_tol);
    let r = matrix::subspace_residual(&(&ch.g2 * &p2_all), &(&ch.g1 * &h1_inv * &q_all))?;
    push("G2*P2 = G1*H1^-1*Q".into(), r, r <= tol.residual_abs_tol);

    // Gaussian streams stay separable at the receiver.
    let gauss_cols = gaussian_receiver_columns(&design.gaussian, ch)?;
    let rank = matrix::rank(&gauss_cols, tol)?;
    push(
        format!("rank(Gaussian receive columns) = {}", n - l),
        (n - l) as f64 - rank as f64,
        rank == n - l,
    );

    let mut min_gap = f64::INFINITY;
    if let Some(bank) = &design.filter {
        let r = max_abs(&(&bank.f * &bank.b));
        push("F*B = 0".into(), r, r <= tol.residual_abs_tol);
        let r = matrix::subspace_residual(
            &(&bank.d * &design.q_pam),
            &RealMatrix::identity(l, l),
        )?;
        push("D*Q2 = I".into(), r, r <= tol.residual_abs_tol);
        let r = max_abs(&(&bank.d * &gauss_cols));
        push("D annihilates Gaussian receive columns".into(), r, r <= tol.residual_abs_tol);
        let e_rank = matrix::rank(&bank.e, tol)?;
        push("E invertible".into(), n as f64 - e_rank as f64, e_rank == n);

        if let Some(pam) = &design.pam {
            // The stored effective maps must match the filtered channel.
            let eff_a = &bank.d * &ch.h1 * &design.p1_pam;
            let eff_b = &bank.d * &ch.h2 * &design.p2_pam;
            let (stored_a, stored_b) = match pam {
                PamPart::Siso { c1, c2 } => (
                    RealMatrix::from_element(1, 1, *c1),
                    RealMatrix::from_element(1, 1, *c2),
                ),
                PamPart::Mimo2 { eff_a, eff_b, .. } => (eff_a.clone(), eff_b.clone()),
            };
            let r = matrix::subspace_residual(&eff_a, &stored_a)?
                .max(matrix::subspace_residual(&eff_b, &stored_b)?);
            push("filtered maps match stored".into(), r, r <= tol.residual_abs_tol);

            for antenna in 0..l.min(2) {
                let dims = antenna_dimensions(pam, antenna);
                min_gap = min_gap.min(min_relative_gap(&dims));
            }
            push(
                "rational dimensions pairwise distinct".into(),
                min_gap,
                min_gap > DIMENSION_GAP_TOL,
            );
        }
    }

    let max_residual = items
        .iter()
        .filter(|i| !i.name.starts_with("rank") && !i.name.contains("invertible") && !i.name.contains("distinct"))
        .map(|i| i.residual)
        .fold(0.0_f64, f64::max);
    let pass = items.iter().all(|i| i.pass);
    Ok(StructuredReport { items, max_residual, min_dimension_gap: min_gap, pass })
}

/// Sorted table of noiseless hypothesis points for one filtered antenna.
pub struct DecoderTable {
    /// (noiseless value, encoded desired tuple), sorted by value.
    entries: Vec<(f64, u32)>,
    /// Number of desired PAM symbols this antenna decodes.
    pub desired_symbols: usize,
    radix: i64,
    q: i64,
}

impl DecoderTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn encode(&self, symbols: &[i64]) -> u32 {
        debug_assert_eq!(symbols.len(), self.desired_symbols);
        let mut code: u32 = 0;
        for &s in symbols.iter().rev() {
            code = code * self.radix as u32 + (s + self.q) as u32;
        }
        code
    }

    pub fn symbols(&self, mut code: u32) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.desired_symbols);
        for _ in 0..self.desired_symbols {
            out.push((code % self.radix as u32) as i64 - self.q);
            code /= self.radix as u32;
        }
        out
    }

    /// Nearest-point decision: the desired tuple of the closest noiseless
    /// hypothesis.
    pub fn decode(&self, y: f64) -> u32 {
        let i = self.entries.partition_point(|e| e.0 < y);
        let lo = i.checked_sub(1);
        let hi = if i < self.entries.len() { Some(i) } else { None };
        match (lo, hi) {
            (Some(a), Some(b)) => {
                if (y - self.entries[a].0).abs() <= (self.entries[b].0 - y).abs() {
                    self.entries[a].1
                } else {
                    self.entries[b].1
                }
            }
            (Some(a), None) => self.entries[a].1,
            (None, Some(b)) => self.entries[b].1,
            (None, None) => 0,
        }
    }
}

const HYPOTHESIS_BUDGET: u64 = 10_000_000;

/// Coefficients and integer ranges spanning one antenna's hypothesis space:
/// desired symbols first (range `Q`), interference aggregates after (their
/// listed ranges).
struct HypothesisSpace {
    coeffs: Vec<f64>,
    ranges: Vec<i64>,
    desired: usize,
}

fn hypothesis_space(pam: &PamPart, antenna: usize, q: i64) -> HypothesisSpace {
    match pam {
        PamPart::Siso { c1, c2 } => HypothesisSpace {
            coeffs: vec![*c1, *c2, 1.0],
            ranges: vec![q, q, 2 * q],
            desired: 2,
        },
        PamPart::Mimo2 { eff_a, eff_b, t1, t2 } => {
            let (own, other) = if antenna == 0 { (t1, t2) } else { (t2, t1) };
            let o = 1 - antenna;
            let a_cross = eff_a[(antenna, o)];
            let b_cross = eff_b[(antenna, o)];
            let m = own.m;
            let mut coeffs = Vec::new();
            let mut ranges = Vec::new();
            // Desired: transmitter 1's and transmitter 2's other-index
            // streams, one symbol per monomial of the other basis.
            for v in &other.values {
                coeffs.push(a_cross * v);
                ranges.push(q);
            }
            for v in &other.values {
                coeffs.push(b_cross * v);
                ranges.push(q);
            }
            let desired = coeffs.len();
            // Interference aggregates on the extended own-basis monomials.
            for s1 in 0..=m {
                for s2 in 0..=m {
                    let mut span = 0;
                    if s1 < m && s2 < m {
                        span += 2 * q; // jamming sum
                    }
                    if s1 >= 1 && s2 < m {
                        span += q; // own-index stream of transmitter 1
                    }
                    if s1 < m && s2 >= 1 {
                        span += q; // own-index stream of transmitter 2
                    }
                    if span > 0 {
                        coeffs.push(own.extended_at(s1, s2));
                        ranges.push(span);
                    }
                }
            }
            HypothesisSpace { coeffs, ranges, desired }
        }
    }
}

/// Build the nearest-point decoder table for filtered antenna `antenna`.
pub fn decoder_table(pam: &PamPart, antenna: usize, cfg: &PamConfig) -> Result<DecoderTable> {
    let space = hypothesis_space(pam, antenna, cfg.q);
    let mut count: u64 = 1;
    for &r in &space.ranges {
        count = count.saturating_mul(2 * r as u64 + 1);
        if count > HYPOTHESIS_BUDGET {
            return Err(Error::DeskScaleLimit(format!(
                "hypothesis space exceeds {HYPOTHESIS_BUDGET} points; \
                 shrink Q or the alignment order"
            )));
        }
    }
    let radix = 2 * cfg.q + 1;
    let mut entries = Vec::with_capacity(count as usize);
    let dims = space.ranges.len();
    let mut state: Vec<i64> = space.ranges.iter().map(|r| -r).collect();
    loop {
        let mut y = 0.0;
        for (j, &s) in state.iter().enumerate() {
            y += space.coeffs[j] * s as f64;
        }
        let mut code: u32 = 0;
        for j in (0..space.desired).rev() {
            code = code * radix as u32 + (state[j] + cfg.q) as u32;
        }
        entries.push((cfg.a * y, code));
        // Odometer increment.
        let mut j = 0;
        loop {
            if j == dims {
                break;
            }
            state[j] += 1;
            if state[j] <= space.ranges[j] {
                break;
            }
            state[j] = -space.ranges[j];
            j += 1;
        }
        if j == dims {
            break;
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DecoderTable {
        entries,
        desired_symbols: space.desired,
        radix,
        q: cfg.q,
    })
}

/// Hard decisions for one filtered observation of the two-antenna design:
/// antenna 1 decodes `(v12, v22)`, antenna 2 decodes `(v11, v21)`. Each
/// vector holds `M` constellation indices in `-Q..Q`.
pub struct Decoded2222 {
    pub v11: Vec<i64>,
    pub v12: Vec<i64>,
    pub v21: Vec<i64>,
    pub v22: Vec<i64>,
}

/// Nearest-point decode of a two-antenna observation using prebuilt tables
/// (one per antenna).
pub fn ml_decode_2222(y: &[f64; 2], tables: &[DecoderTable], _cfg: &PamConfig) -> Decoded2222 {
    let m_syms = tables[0].desired_symbols / 2;
    let d0 = tables[0].symbols(tables[0].decode(y[0]));
    let d1 = tables[1].symbols(tables[1].decode(y[1]));
    Decoded2222 {
        v12: d0[..m_syms].to_vec(),
        v22: d0[m_syms..].to_vec(),
        v11: d1[..m_syms].to_vec(),
        v21: d1[m_syms..].to_vec(),
    }
}

/// Exact leakage in bits of `streams` PAM information streams, each hidden
/// behind an independent same-constellation jamming symbol: `streams *
/// (H(v + u) - H(u))` from the triangular law of the sum.
pub fn exact_pam_leakage(q: i64, streams: usize) -> f64 {
    if q <= 0 || streams == 0 {
        return 0.0;
    }
    let card = (2 * q + 1) as f64;
    let h_u = card.log2();
    let mut h_sum = 0.0;
    for s in -2 * q..=2 * q {
        let p = (card - (s as f64).abs()) / (card * card);
        h_sum -= p * p.log2();
    }
    streams as f64 * (h_sum - h_u)
}
