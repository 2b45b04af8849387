//! Gaussian-signaling precoder designs based on vector-space alignment.
//!
//! One constructor per `(N, K)` regime. Each design beamforms information
//! streams so they stay invisible or aligned-with-jamming at the
//! eavesdropper while the stacked receiver matrix keeps full column rank.
//! The single-slot designs (regimes 1, 4, 5) work for fixed and fading
//! gains alike; the three-slot designs (regimes 2, 3) need fading gains.
//!
//! Synthesis is deterministic per `(channels, seed)`. [`design_for`]
//! re-verifies every design it returns and fails loudly instead of handing
//! back an uncertified one.

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::matrix::{
    self, block_diag, hcat, max_abs, vcat, RealMatrix, Tolerance,
};
use crate::regimes::{classify_regime, stream_budget, RegimeClass, StreamBudget};

/// Precoders of one slot. Which fields are present depends on the regime:
/// regime 1 uses `p1, p2`; regime 2 all of `gperp_i, p_i, q`; regime 3
/// `p_i, q`; regime 4 `r_i, p_i, q`; regime 5 `p1` (information) and `q`
/// (the second transmitter's jamming map applied directly to its antennas).
#[derive(Debug, Clone, Default)]
pub struct SlotPrecoders {
    pub p1: Option<RealMatrix>,
    pub p2: Option<RealMatrix>,
    pub q: Option<RealMatrix>,
    pub r1: Option<RealMatrix>,
    pub r2: Option<RealMatrix>,
    pub gperp1: Option<RealMatrix>,
    pub gperp2: Option<RealMatrix>,
}

impl SlotPrecoders {
    pub fn named(&self) -> Vec<(&'static str, &RealMatrix)> {
        let mut out = Vec::new();
        for (name, m) in [
            ("P1", &self.p1),
            ("P2", &self.p2),
            ("Q", &self.q),
            ("R1", &self.r1),
            ("R2", &self.r2),
            ("Gperp1", &self.gperp1),
            ("Gperp2", &self.gperp2),
        ] {
            if let Some(m) = m {
                out.push((name, m));
            }
        }
        out
    }
}

/// A complete per-regime precoder design for one block.
#[derive(Debug, Clone)]
pub struct SchemeDesign {
    pub regime: RegimeClass,
    pub n: usize,
    pub k: usize,
    pub slots: usize,
    pub per_slot: Vec<SlotPrecoders>,
    pub budget: StreamBudget,
    /// Per-stream power scale: streams carry variance `alpha * P` so the
    /// binding transmitter/slot meets `E||X||^2 = P` with equality.
    pub alpha: f64,
}

/// Effective linear maps from symbols to stacked observations over the
/// block. Information maps keep each transmitter's symbols in budget order;
/// jamming maps are per transmitter. In aligned regimes the two receiver
/// jamming maps coincide column-for-column, which is exactly why the sums
/// `u1 + u2` occupy single receiver dimensions.
#[derive(Debug, Clone)]
pub struct MixingModel {
    pub slots: usize,
    /// Receiver-side maps (rows = N * slots).
    pub a_v1: RealMatrix,
    pub a_v2: RealMatrix,
    pub a_u1: RealMatrix,
    pub a_u2: RealMatrix,
    /// Eavesdropper-side maps (rows = K * slots).
    pub b_v1: RealMatrix,
    pub b_v2: RealMatrix,
    pub b_u1: RealMatrix,
    pub b_u2: RealMatrix,
    /// Leading columns of `v1` / `v2` that are zero-forced at the
    /// eavesdropper; the remaining columns pair with the other
    /// transmitter's jamming map.
    pub zf_cols1: usize,
    pub zf_cols2: usize,
}

impl MixingModel {
    pub fn receiver_rows(&self) -> usize {
        self.a_v1.nrows()
    }

    pub fn eaves_rows(&self) -> usize {
        self.b_v1.nrows()
    }

    /// Stacked receiver matrix of all separable streams:
    /// `[A_v1 | A_v2 | A_u2]` (`A_u2` covers every jamming stream the
    /// receiver must resolve; `A_u1` duplicates aligned columns of it).
    pub fn receiver_decode_matrix(&self) -> RealMatrix {
        hcat(&[&self.a_v1, &self.a_v2, &self.a_u2])
    }
}

fn inverse_of(name: &str, slot: usize, m: &RealMatrix) -> Result<RealMatrix> {
    m.clone().try_inverse().ok_or_else(|| {
        Error::SingularChannel(format!("{name} in slot {slot} is not invertible"))
    })
}

fn require_regime(cond: bool, what: &str, n: usize, k: usize) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::WrongRegime(format!("{what} does not admit (N={n}, K={k})")))
    }
}

/// Seeded random matrix with orthonormal columns (used for the free
/// precoder `Q` in regime 2).
fn random_orthonormal(rows: usize, cols: usize, seed: u64, tol: &Tolerance) -> Result<RealMatrix> {
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

/// Rescale each aligned stream column so its worst transmit-antenna column
/// has unit norm. Alignment equalities are per-column, so joint scaling
/// preserves them exactly; without this, a single expensive direction drags
/// the power scale down and pushes slope convergence far beyond the
/// measurement grid.
pub(crate) fn balance_aligned_columns(
    p1: &mut RealMatrix,
    p2: &mut RealMatrix,
    q: &mut RealMatrix,
    jam_maps: &[&RealMatrix],
) {
    for k in 0..q.ncols() {
        let mut worst = p1.column(k).norm().max(p2.column(k).norm());
        for j in jam_maps {
            worst = worst.max(j.column(k).norm());
        }
        if worst > 0.0 {
            let inv = 1.0 / worst;
            p1.column_mut(k).scale_mut(inv);
            p2.column_mut(k).scale_mut(inv);
            q.column_mut(k).scale_mut(inv);
        }
    }
}

/// Same rebalancing for a pair of directly transmitted column groups.
fn balance_pair_columns(a: &mut RealMatrix, b: &mut RealMatrix) {
    for k in 0..a.ncols() {
        let worst = a.column(k).norm().max(b.column(k).norm());
        if worst > 0.0 {
            let inv = 1.0 / worst;
            a.column_mut(k).scale_mut(inv);
            b.column_mut(k).scale_mut(inv);
        }
    }
}

/// Regime 1 (`K <= N/2`): both transmitters beamform into the nullspace of
/// their own eavesdropper channel; no jamming needed.
pub fn design_r1(ch: &ChannelSet, tol: &Tolerance, seed: u64) -> Result<SchemeDesign> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    require_regime(2 * k <= n, "regime-1 design", n, k)?;
    let p1 = matrix::nullspace_basis(&ch.g1, tol)?;
    if p1.ncols() != n - k {
        return Err(Error::SingularChannel(format!(
            "nullity of G1 is {} but the design needs {}",
            p1.ncols(),
            n - k
        )));
    }
    let p2 = matrix::nullspace_subset(&ch.g2, k, tol, seed)?;
    let slot = SlotPrecoders { p1: Some(p1), p2: Some(p2), ..Default::default() };
    let mut design = SchemeDesign {
        regime: RegimeClass::R1,
        n,
        k,
        slots: 1,
        per_slot: vec![slot],
        budget: StreamBudget { n1: n - k, n2: k, n_b: 1, jam1: 0, jam2: 0 },
        alpha: 1.0,
    };
    design.alpha = power_scale(&design, std::slice::from_ref(ch))?;
    Ok(design)
}

/// Regime 2 (`N/2 <= K <= N`), three slots: per slot, `N - K` streams ride
/// the eavesdropper nullspace while `2K - N` streams are aligned with the
/// other transmitter's jamming through `P_i = G_i^+ G_j H_j^{-1} Q`.
pub fn design_r2(chs: &[ChannelSet], tol: &Tolerance, seed: u64) -> Result<SchemeDesign> {
    let (n, k) = (chs[0].dims.n, chs[0].dims.k);
    require_regime(2 * k >= n && k <= n, "regime-2 design", n, k)?;
    if chs.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "regime-2 design needs 3 slots, got {}",
            chs.len()
        )));
    }
    let streams = 2 * k - n;
    let mut per_slot = Vec::with_capacity(3);
    for (t, ch) in chs.iter().enumerate() {
        let gperp1 = matrix::nullspace_basis(&ch.g1, tol)?;
        let gperp2 = matrix::nullspace_basis(&ch.g2, tol)?;
        let q = random_orthonormal(n, streams, seed.wrapping_add(t as u64), tol)?;
        let h1_inv = inverse_of("H1", ch.slot, &ch.h1)?;
        let h2_inv = inverse_of("H2", ch.slot, &ch.h2)?;
        let mut q = q;
        let mut p1 = matrix::pseudo_inverse_row(&ch.g1)? * (&ch.g2 * &h2_inv * &q);
        let mut p2 = matrix::pseudo_inverse_row(&ch.g2)? * (&ch.g1 * &h1_inv * &q);
        let j1 = &h1_inv * &q;
        let j2 = &h2_inv * &q;
        balance_aligned_columns(&mut p1, &mut p2, &mut q, &[&j1, &j2]);
        per_slot.push(SlotPrecoders {
            p1: Some(p1),
            p2: Some(p2),
            q: Some(q),
            gperp1: Some(gperp1),
            gperp2: Some(gperp2),
            ..Default::default()
        });
    }
    let mut design = SchemeDesign {
        regime: RegimeClass::R2,
        n,
        k,
        slots: 3,
        per_slot,
        budget: StreamBudget {
            n1: 2 * n - k,
            n2: 2 * n - k,
            n_b: 3,
            jam1: streams,
            jam2: streams,
        },
        alpha: 1.0,
    };
    design.alpha = power_scale(&design, chs)?;
    Ok(design)
}

/// Stacked alignment system for the three-slot regime-3 design:
/// `[G~1, 0, -G~2 H~2^-1; 0, G~2, -G~1 H~1^-1]`, a `6K x 9N` matrix whose
/// nullspace supplies `[P~1; P~2; Q~]`.
pub fn r3_alignment_system(chs: &[ChannelSet]) -> Result<RealMatrix> {
    let (n, k) = (chs[0].dims.n, chs[0].dims.k);
    let g1 = block_diag(&[&chs[0].g1, &chs[1].g1, &chs[2].g1]);
    let g2 = block_diag(&[&chs[0].g2, &chs[1].g2, &chs[2].g2]);
    let mut h1_invs = Vec::new();
    let mut h2_invs = Vec::new();
    for ch in chs {
        h1_invs.push(inverse_of("H1", ch.slot, &ch.h1)?);
        h2_invs.push(inverse_of("H2", ch.slot, &ch.h2)?);
    }
    let h1_inv = block_diag(&[&h1_invs[0], &h1_invs[1], &h1_invs[2]]);
    let h2_inv = block_diag(&[&h2_invs[0], &h2_invs[1], &h2_invs[2]]);
    let zeros = RealMatrix::zeros(3 * k, 3 * n);
    let top = hcat(&[&g1, &zeros, &(-(&g2 * &h2_inv))]);
    let bottom = hcat(&[&zeros, &g2, &(-(&g1 * &h1_inv))]);
    Ok(vcat(&[&top, &bottom]))
}

/// Regime 3 (`N <= K <= 4N/3`), three slots: all `N` streams per transmitter
/// are aligned with jamming; the precoders come from `N` random vectors in
/// the nullspace of the stacked alignment system.
pub fn design_r3(chs: &[ChannelSet], tol: &Tolerance, seed: u64) -> Result<SchemeDesign> {
    let (n, k) = (chs[0].dims.n, chs[0].dims.k);
    require_regime(k >= n && 3 * k <= 4 * n, "regime-3 design", n, k)?;
    if chs.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "regime-3 design needs 3 slots, got {}",
            chs.len()
        )));
    }
    let psi = r3_alignment_system(chs)?;
    let stacked = matrix::nullspace_subset(&psi, n, tol, seed)?;
    let mut p1s = Vec::with_capacity(3);
    let mut p2s = Vec::with_capacity(3);
    let mut qs = Vec::with_capacity(3);
    let mut jams: Vec<RealMatrix> = Vec::with_capacity(6);
    for t in 0..3 {
        let p1 = stacked.rows(t * n, n).into_owned();
        let p2 = stacked.rows(3 * n + t * n, n).into_owned();
        let q = stacked.rows(6 * n + t * n, n).into_owned();
        jams.push(inverse_of("H1", chs[t].slot, &chs[t].h1)? * &q);
        jams.push(inverse_of("H2", chs[t].slot, &chs[t].h2)? * &q);
        p1s.push(p1);
        p2s.push(p2);
        qs.push(q);
    }
    // Joint per-column rescale across all three slots.
    for col in 0..n {
        let mut worst = 0.0_f64;
        for t in 0..3 {
            worst = worst
                .max(p1s[t].column(col).norm())
                .max(p2s[t].column(col).norm())
                .max(jams[2 * t].column(col).norm())
                .max(jams[2 * t + 1].column(col).norm());
        }
        if worst > 0.0 {
            let inv = 1.0 / worst;
            for t in 0..3 {
                p1s[t].column_mut(col).scale_mut(inv);
                p2s[t].column_mut(col).scale_mut(inv);
                qs[t].column_mut(col).scale_mut(inv);
            }
        }
    }
    let mut per_slot = Vec::with_capacity(3);
    for ((p1, p2), q) in p1s.into_iter().zip(p2s).zip(qs) {
        per_slot.push(SlotPrecoders {
            p1: Some(p1),
            p2: Some(p2),
            q: Some(q),
            ..Default::default()
        });
    }
    let mut design = SchemeDesign {
        regime: RegimeClass::R3,
        n,
        k,
        slots: 3,
        per_slot,
        budget: StreamBudget { n1: n, n2: n, n_b: 3, jam1: n, jam2: n },
        alpha: 1.0,
    };
    design.alpha = power_scale(&design, chs)?;
    Ok(design)
}

/// One-slot alignment system `[G1, 0, -G2 H2^-1; 0, G2, -G1 H1^-1]`
/// (`2K x 3N`); its nullspace supplies `[P1; P2; Q]` for regime 4 and for
/// the fixed-gain regime-3 designs.
pub fn single_slot_alignment_system(ch: &ChannelSet) -> Result<RealMatrix> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    let h1_inv = inverse_of("H1", ch.slot, &ch.h1)?;
    let h2_inv = inverse_of("H2", ch.slot, &ch.h2)?;
    let zeros = RealMatrix::zeros(k, n);
    let top = hcat(&[&ch.g1, &zeros, &(-(&ch.g2 * &h2_inv))]);
    let bottom = hcat(&[&zeros, &ch.g2, &(-(&ch.g1 * &h1_inv))]);
    Ok(vcat(&[&top, &bottom]))
}

/// `[G1 | -G2]` (`K x 2N`); its nullspace supplies the pairs `(R1, R2)`
/// in regime 4 and `(P, Q)` in regime 5.
pub fn pair_alignment_system(ch: &ChannelSet) -> RealMatrix {
    hcat(&[&ch.g1, &(-ch.g2.clone())])
}

/// Regime 4 (`4N/3 <= K <= 3N/2`), one slot: transmitter 1 adds `3K - 4N`
/// streams aligned with transmitter 2's extra jamming via `G1 R1 = G2 R2`,
/// on top of a `3N - 2K`-stream aligned core.
pub fn design_r4(ch: &ChannelSet, tol: &Tolerance, seed: u64) -> Result<SchemeDesign> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    require_regime(3 * k >= 4 * n && 2 * k <= 3 * n, "regime-4 design", n, k)?;
    let extra = 3 * k - 4 * n;
    let core = 3 * n - 2 * k;

    let pair = pair_alignment_system(ch);
    let r_stack = matrix::nullspace_subset(&pair, extra, tol, seed)?;
    let mut r1 = r_stack.rows(0, n).into_owned();
    let mut r2 = r_stack.rows(n, n).into_owned();
    balance_pair_columns(&mut r1, &mut r2);

    let lambda = single_slot_alignment_system(ch)?;
    let pq_stack = matrix::nullspace_subset(&lambda, core, tol, seed.wrapping_add(1))?;
    let mut p1 = pq_stack.rows(0, n).into_owned();
    let mut p2 = pq_stack.rows(n, n).into_owned();
    let mut q = pq_stack.rows(2 * n, n).into_owned();
    let j1 = inverse_of("H1", ch.slot, &ch.h1)? * &q;
    let j2 = inverse_of("H2", ch.slot, &ch.h2)? * &q;
    balance_aligned_columns(&mut p1, &mut p2, &mut q, &[&j1, &j2]);

    let slot = SlotPrecoders {
        p1: Some(p1),
        p2: Some(p2),
        q: Some(q),
        r1: Some(r1),
        r2: Some(r2),
        ..Default::default()
    };
    let mut design = SchemeDesign {
        regime: RegimeClass::R4,
        n,
        k,
        slots: 1,
        per_slot: vec![slot],
        budget: StreamBudget {
            n1: k - n,
            n2: core,
            n_b: 1,
            jam1: core,
            jam2: k - n,
        },
        alpha: 1.0,
    };
    design.alpha = power_scale(&design, std::slice::from_ref(ch))?;
    Ok(design)
}

/// Regime 5 (`3N/2 <= K <= 2N`), one slot: only transmitter 1 sends
/// information; transmitter 2 jams along `Q` with `G1 P = G2 Q`.
pub fn design_r5(ch: &ChannelSet, tol: &Tolerance, seed: u64) -> Result<SchemeDesign> {
    let (n, k) = (ch.dims.n, ch.dims.k);
    require_regime(2 * k >= 3 * n && k <= 2 * n, "regime-5 design", n, k)?;
    let streams = 2 * n - k;
    let pair = pair_alignment_system(ch);
    let stack = matrix::nullspace_subset(&pair, streams, tol, seed)?;
    let mut p = stack.rows(0, n).into_owned();
    let mut q = stack.rows(n, n).into_owned();
    balance_pair_columns(&mut p, &mut q);
    let slot = SlotPrecoders { p1: Some(p), q: Some(q), ..Default::default() };
    let mut design = SchemeDesign {
        regime: RegimeClass::R5,
        n,
        k,
        slots: 1,
        per_slot: vec![slot],
        budget: StreamBudget { n1: streams, n2: 0, n_b: 1, jam1: 0, jam2: streams },
        alpha: 1.0,
    };
    design.alpha = power_scale(&design, std::slice::from_ref(ch))?;
    Ok(design)
}

/// Per-(transmitter, slot) map from that transmitter's stacked
/// (information, jamming) symbols to its antenna signals. The Frobenius
/// norms of these maps set the power scale.
pub fn transmit_maps(design: &SchemeDesign, chs: &[ChannelSet]) -> Result<Vec<(usize, usize, RealMatrix)>> {
    let n = design.n;
    let empty = RealMatrix::zeros(n, 0);
    let mut out = Vec::new();
    for (t, slot) in design.per_slot.iter().enumerate() {
        let ch = &chs[t.min(chs.len() - 1)];
        let (m1, m2): (RealMatrix, RealMatrix) = match design.regime {
            RegimeClass::R1 => (
                slot.p1.clone().unwrap_or_else(|| empty.clone()),
                slot.p2.clone().unwrap_or_else(|| empty.clone()),
            ),
            RegimeClass::R2 => {
                let q = slot.q.as_ref().expect("regime-2 slot has Q");
                let j1 = inverse_of("H1", ch.slot, &ch.h1)? * q;
                let j2 = inverse_of("H2", ch.slot, &ch.h2)? * q;
                (
                    hcat(&[slot.gperp1.as_ref().unwrap(), slot.p1.as_ref().unwrap(), &j1]),
                    hcat(&[slot.gperp2.as_ref().unwrap(), slot.p2.as_ref().unwrap(), &j2]),
                )
            }
            RegimeClass::R3 => {
                let q = slot.q.as_ref().expect("regime-3 slot has Q");
                let j1 = inverse_of("H1", ch.slot, &ch.h1)? * q;
                let j2 = inverse_of("H2", ch.slot, &ch.h2)? * q;
                (
                    hcat(&[slot.p1.as_ref().unwrap(), &j1]),
                    hcat(&[slot.p2.as_ref().unwrap(), &j2]),
                )
            }
            RegimeClass::R4 => {
                let q = slot.q.as_ref().expect("regime-4 slot has Q");
                let j1 = inverse_of("H1", ch.slot, &ch.h1)? * q;
                let j2 = inverse_of("H2", ch.slot, &ch.h2)? * q;
                (
                    hcat(&[slot.r1.as_ref().unwrap(), slot.p1.as_ref().unwrap(), &j1]),
                    hcat(&[slot.r2.as_ref().unwrap(), slot.p2.as_ref().unwrap(), &j2]),
                )
            }
            RegimeClass::R5 => (
                slot.p1.clone().unwrap_or_else(|| empty.clone()),
                slot.q.clone().unwrap_or_else(|| empty.clone()),
            ),
            RegimeClass::Degenerate => (empty.clone(), empty.clone()),
        };
        out.push((1, t + 1, m1));
        out.push((2, t + 1, m2));
    }
    Ok(out)
}

/// `alpha` such that with per-stream variance `alpha * P`, the binding
/// transmitter/slot transmits at exactly `P`.
pub fn power_scale(design: &SchemeDesign, chs: &[ChannelSet]) -> Result<f64> {
    let maps = transmit_maps(design, chs)?;
    let worst = maps
        .iter()
        .map(|(_, _, m)| m.norm_squared())
        .fold(0.0_f64, f64::max);
    if worst == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 / worst)
}

/// One alignment equality and its measured residual.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualItem {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

/// Residuals of every alignment equation a design promises.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub regime: RegimeClass,
    pub equations: Vec<ResidualItem>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Rank certificate of the stacked receiver matrix.
#[derive(Debug, Clone, Serialize)]
pub struct DecodabilityReport {
    pub regime: RegimeClass,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub smallest_singular_value: f64,
    pub pass: bool,
}

/// Check every alignment equality of `design` against the channels it was
/// synthesized from.
pub fn verify_alignment(
    design: &SchemeDesign,
    chs: &[ChannelSet],
    tol: &Tolerance,
) -> Result<AlignmentReport> {
    let mut eqs: Vec<(String, f64)> = Vec::new();
    match design.regime {
        RegimeClass::R1 => {
            let slot = &design.per_slot[0];
            let ch = &chs[0];
            eqs.push(("G1*P1 = 0".into(), max_abs(&(&ch.g1 * slot.p1.as_ref().unwrap()))));
            eqs.push(("G2*P2 = 0".into(), max_abs(&(&ch.g2 * slot.p2.as_ref().unwrap()))));
        }
        RegimeClass::R2 => {
            for (t, slot) in design.per_slot.iter().enumerate() {
                let ch = &chs[t];
                let h1_inv = inverse_of("H1", ch.slot, &ch.h1)?;
                let h2_inv = inverse_of("H2", ch.slot, &ch.h2)?;
                let q = slot.q.as_ref().unwrap();
                eqs.push((
                    format!("G1({0})*P1({0}) = G2({0})*H2({0})^-1*Q({0})", t + 1),
                    matrix::subspace_residual(
                        &(&ch.g1 * slot.p1.as_ref().unwrap()),
                        &(&ch.g2 * &h2_inv * q),
                    )?,
                ));
                eqs.push((
                    format!("G2({0})*P2({0}) = G1({0})*H1({0})^-1*Q({0})", t + 1),
                    matrix::subspace_residual(
                        &(&ch.g2 * slot.p2.as_ref().unwrap()),
                        &(&ch.g1 * &h1_inv * q),
                    )?,
                ));
                eqs.push((
                    format!("G1({0})*Gperp1({0}) = 0", t + 1),
                    max_abs(&(&ch.g1 * slot.gperp1.as_ref().unwrap())),
                ));
                eqs.push((
                    format!("G2({0})*Gperp2({0}) = 0", t + 1),
                    max_abs(&(&ch.g2 * slot.gperp2.as_ref().unwrap())),
                ));
            }
        }
        RegimeClass::R3 => {
            let (b_v1, b_v2, b_u1, b_u2) = eaves_maps_aligned(design, chs)?;
            eqs.push((
                "G~1*P~1 = G~2*H~2^-1*Q~".into(),
                matrix::subspace_residual(&b_v1, &b_u2)?,
            ));
            eqs.push((
                "G~2*P~2 = G~1*H~1^-1*Q~".into(),
                matrix::subspace_residual(&b_v2, &b_u1)?,
            ));
        }
        RegimeClass::R4 => {
            let slot = &design.per_slot[0];
            let ch = &chs[0];
            let h1_inv = inverse_of("H1", ch.slot, &ch.h1)?;
            let h2_inv = inverse_of("H2", ch.slot, &ch.h2)?;
            eqs.push((
                "G1*R1 = G2*R2".into(),
                matrix::subspace_residual(
                    &(&ch.g1 * slot.r1.as_ref().unwrap()),
                    &(&ch.g2 * slot.r2.as_ref().unwrap()),
                )?,
            ));
            eqs.push((
                "G1*P1 = G2*H2^-1*Q".into(),
                matrix::subspace_residual(
                    &(&ch.g1 * slot.p1.as_ref().unwrap()),
                    &(&ch.g2 * &h2_inv * slot.q.as_ref().unwrap()),
                )?,
            ));
            eqs.push((
                "G2*P2 = G1*H1^-1*Q".into(),
                matrix::subspace_residual(
                    &(&ch.g2 * slot.p2.as_ref().unwrap()),
                    &(&ch.g1 * &h1_inv * slot.q.as_ref().unwrap()),
                )?,
            ));
        }
        RegimeClass::R5 => {
            let slot = &design.per_slot[0];
            let ch = &chs[0];
            eqs.push((
                "G1*P = G2*Q".into(),
                matrix::subspace_residual(
                    &(&ch.g1 * slot.p1.as_ref().unwrap()),
                    &(&ch.g2 * slot.q.as_ref().unwrap()),
                )?,
            ));
        }
        RegimeClass::Degenerate => {}
    }
    let equations: Vec<ResidualItem> = eqs
        .into_iter()
        .map(|(name, residual)| ResidualItem {
            name,
            residual,
            pass: residual <= tol.residual_abs_tol,
        })
        .collect();
    let max_residual = equations.iter().map(|e| e.residual).fold(0.0_f64, f64::max);
    let pass = equations.iter().all(|e| e.pass);
    Ok(AlignmentReport { regime: design.regime, equations, max_residual, pass })
}

/// Rank-check the stacked receiver matrix of all separable streams.
pub fn verify_decodability(
    design: &SchemeDesign,
    chs: &[ChannelSet],
    tol: &Tolerance,
) -> Result<DecodabilityReport> {
    let mix = assemble_mixing(design, chs)?;
    let phi = mix.receiver_decode_matrix();
    let (rows, cols) = phi.shape();
    let rank = matrix::rank(&phi, tol)?;
    let smallest = if cols == 0 { 0.0 } else { matrix::smallest_singular_value(&phi)? };
    Ok(DecodabilityReport {
        regime: design.regime,
        rows,
        cols,
        rank,
        smallest_singular_value: smallest,
        pass: rank == cols,
    })
}

/// Eavesdropper-side stacked maps `(B_v1, B_v2, B_u1, B_u2)` restricted to
/// the aligned (non-zero-forced) information columns.
fn eaves_maps_aligned(
    design: &SchemeDesign,
    chs: &[ChannelSet],
) -> Result<(RealMatrix, RealMatrix, RealMatrix, RealMatrix)> {
    let mut bv1 = Vec::new();
    let mut bv2 = Vec::new();
    let mut bu1 = Vec::new();
    let mut bu2 = Vec::new();
    for (t, slot) in design.per_slot.iter().enumerate() {
        let ch = &chs[t];
        let h1_inv = inverse_of("H1", ch.slot, &ch.h1)?;
        let h2_inv = inverse_of("H2", ch.slot, &ch.h2)?;
        let q = slot.q.as_ref().expect("aligned regime has Q");
        bv1.push(&ch.g1 * slot.p1.as_ref().unwrap());
        bv2.push(&ch.g2 * slot.p2.as_ref().unwrap());
        bu1.push(&ch.g1 * &h1_inv * q);
        bu2.push(&ch.g2 * &h2_inv * q);
    }
    let stack = |v: &Vec<RealMatrix>| vcat(&v.iter().collect::<Vec<_>>());
    Ok((stack(&bv1), stack(&bv2), stack(&bu1), stack(&bu2)))
}

/// Build the effective symbol-to-observation maps of a verified design.
pub fn assemble_mixing(design: &SchemeDesign, chs: &[ChannelSet]) -> Result<MixingModel> {
    let (n, k) = (design.n, design.k);
    let slots = design.slots;
    let rx_empty = RealMatrix::zeros(n * slots, 0);
    let ev_empty = RealMatrix::zeros(k * slots, 0);

    match design.regime {
        RegimeClass::R1 => {
            let slot = &design.per_slot[0];
            let ch = &chs[0];
            let p1 = slot.p1.as_ref().unwrap();
            let p2 = slot.p2.as_ref().unwrap();
            Ok(MixingModel {
                slots,
                a_v1: &ch.h1 * p1,
                a_v2: &ch.h2 * p2,
                a_u1: rx_empty.clone(),
                a_u2: rx_empty,
                b_v1: &ch.g1 * p1,
                b_v2: &ch.g2 * p2,
                b_u1: ev_empty.clone(),
                b_u2: ev_empty,
                zf_cols1: p1.ncols(),
                zf_cols2: p2.ncols(),
            })
        }
        RegimeClass::R2 => {
            let mut rx_tilde1 = Vec::new();
            let mut rx_tilde2 = Vec::new();
            let mut ev_tilde1 = Vec::new();
            let mut ev_tilde2 = Vec::new();
            let mut rx_p1 = Vec::new();
            let mut rx_p2 = Vec::new();
            let mut rx_q = Vec::new();
            for (t, slot) in design.per_slot.iter().enumerate() {
                let ch = &chs[t];
                rx_tilde1.push(&ch.h1 * slot.gperp1.as_ref().unwrap());
                rx_tilde2.push(&ch.h2 * slot.gperp2.as_ref().unwrap());
                ev_tilde1.push(&ch.g1 * slot.gperp1.as_ref().unwrap());
                ev_tilde2.push(&ch.g2 * slot.gperp2.as_ref().unwrap());
                rx_p1.push(&ch.h1 * slot.p1.as_ref().unwrap());
                rx_p2.push(&ch.h2 * slot.p2.as_ref().unwrap());
                rx_q.push(slot.q.as_ref().unwrap().clone());
            }
            let (bv1a, bv2a, bu1, bu2) = eaves_maps_aligned(design, chs)?;
            let a_v1 = hcat(&[
                &block_diag(&rx_tilde1.iter().collect::<Vec<_>>()),
                &vcat(&rx_p1.iter().collect::<Vec<_>>()),
            ]);
            let a_v2 = hcat(&[
                &block_diag(&rx_tilde2.iter().collect::<Vec<_>>()),
                &vcat(&rx_p2.iter().collect::<Vec<_>>()),
            ]);
            let a_q = vcat(&rx_q.iter().collect::<Vec<_>>());
            let b_v1 = hcat(&[&block_diag(&ev_tilde1.iter().collect::<Vec<_>>()), &bv1a]);
            let b_v2 = hcat(&[&block_diag(&ev_tilde2.iter().collect::<Vec<_>>()), &bv2a]);
            let zf = design.per_slot.iter().map(|s| s.gperp1.as_ref().unwrap().ncols()).sum();
            Ok(MixingModel {
                slots,
                a_v1,
                a_v2,
                a_u1: a_q.clone(),
                a_u2: a_q,
                b_v1,
                b_v2,
                b_u1: bu1,
                b_u2: bu2,
                zf_cols1: zf,
                zf_cols2: zf,
            })
        }
        RegimeClass::R3 => {
            let mut rx_p1 = Vec::new();
            let mut rx_p2 = Vec::new();
            let mut rx_q = Vec::new();
            for (t, slot) in design.per_slot.iter().enumerate() {
                let ch = &chs[t];
                rx_p1.push(&ch.h1 * slot.p1.as_ref().unwrap());
                rx_p2.push(&ch.h2 * slot.p2.as_ref().unwrap());
                rx_q.push(slot.q.as_ref().unwrap().clone());
            }
            let (b_v1, b_v2, b_u1, b_u2) = eaves_maps_aligned(design, chs)?;
            let a_q = vcat(&rx_q.iter().collect::<Vec<_>>());
            Ok(MixingModel {
                slots,
                a_v1: vcat(&rx_p1.iter().collect::<Vec<_>>()),
                a_v2: vcat(&rx_p2.iter().collect::<Vec<_>>()),
                a_u1: a_q.clone(),
                a_u2: a_q,
                b_v1,
                b_v2,
                b_u1,
                b_u2,
                zf_cols1: 0,
                zf_cols2: 0,
            })
        }
        RegimeClass::R4 => {
            let slot = &design.per_slot[0];
            let ch = &chs[0];
            let h1_inv = inverse_of("H1", ch.slot, &ch.h1)?;
            let h2_inv = inverse_of("H2", ch.slot, &ch.h2)?;
            let (r1, r2) = (slot.r1.as_ref().unwrap(), slot.r2.as_ref().unwrap());
            let (p1, p2, q) = (
                slot.p1.as_ref().unwrap(),
                slot.p2.as_ref().unwrap(),
                slot.q.as_ref().unwrap(),
            );
            Ok(MixingModel {
                slots,
                a_v1: hcat(&[&(&ch.h1 * r1), &(&ch.h1 * p1)]),
                a_v2: &ch.h2 * p2,
                a_u1: q.clone(),
                a_u2: hcat(&[&(&ch.h2 * r2), q]),
                b_v1: hcat(&[&(&ch.g1 * r1), &(&ch.g1 * p1)]),
                b_v2: &ch.g2 * p2,
                b_u1: &ch.g1 * &h1_inv * q,
                b_u2: hcat(&[&(&ch.g2 * r2), &(&ch.g2 * &h2_inv * q)]),
                zf_cols1: 0,
                zf_cols2: 0,
            })
        }
        RegimeClass::R5 | RegimeClass::Degenerate => {
            let slot = &design.per_slot[0];
            let ch = &chs[0];
            let p = slot.p1.clone().unwrap_or_else(|| RealMatrix::zeros(n, 0));
            let q = slot.q.clone().unwrap_or_else(|| RealMatrix::zeros(n, 0));
            Ok(MixingModel {
                slots,
                a_v1: &ch.h1 * &p,
                a_v2: RealMatrix::zeros(n, 0),
                a_u1: RealMatrix::zeros(n, 0),
                a_u2: &ch.h2 * &q,
                b_v1: &ch.g1 * &p,
                b_v2: RealMatrix::zeros(k, 0),
                b_u1: RealMatrix::zeros(k, 0),
                b_u2: &ch.g2 * &q,
                zf_cols1: 0,
                zf_cols2: 0,
            })
        }
    }
}

/// Synthesize, certify, and return the design for the channels' `(N, K)`,
/// or fail with the offending residual/rank if certification fails.
pub fn design_for(chs: &[ChannelSet], tol: &Tolerance, seed: u64) -> Result<SchemeDesign> {
    let (n, k) = (chs[0].dims.n, chs[0].dims.k);
    let regime = classify_regime(n, k);
    let design = match regime {
        RegimeClass::R1 => design_r1(&chs[0], tol, seed)?,
        RegimeClass::R2 => design_r2(chs, tol, seed)?,
        RegimeClass::R3 => design_r3(chs, tol, seed)?,
        RegimeClass::R4 => design_r4(&chs[0], tol, seed)?,
        RegimeClass::R5 => design_r5(&chs[0], tol, seed)?,
        RegimeClass::Degenerate => SchemeDesign {
            regime,
            n,
            k,
            slots: 1,
            per_slot: vec![SlotPrecoders::default()],
            budget: stream_budget(n, k),
            alpha: 1.0,
        },
    };
    let alignment = verify_alignment(&design, chs, tol)?;
    if !alignment.pass {
        let worst = alignment
            .equations
            .iter()
            .max_by(|a, b| a.residual.total_cmp(&b.residual))
            .map(|e| format!("{} (residual {:.3e})", e.name, e.residual))
            .unwrap_or_default();
        return Err(Error::VerificationFailed(format!(
            "alignment failed for {regime}: {worst}"
        )));
    }
    let decode = verify_decodability(&design, chs, tol)?;
    if !decode.pass {
        return Err(Error::VerificationFailed(format!(
            "decode matrix for {regime} has rank {} < {} columns",
            decode.rank, decode.cols
        )));
    }
    Ok(design)
}

/// Number of slots the regime of `(n, k)` requires.
pub fn slots_for(n: usize, k: usize) -> usize {
    stream_budget(n, k).n_b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, ChannelDims, GainMode};

    fn fading(n: usize, k: usize, slots: usize, seed: u64) -> Vec<ChannelSet> {
        draw_channels(ChannelDims::new(n, k).unwrap(), GainMode::Fading, slots, seed).unwrap()
    }

    #[test]
    fn r1_hand_example_recovers_coordinate_nullspaces() {
        let dims = ChannelDims::new(2, 1).unwrap();
        let ch = ChannelSet {
            dims,
            slot: 1,
            h1: RealMatrix::identity(2, 2),
            h2: RealMatrix::identity(2, 2),
            g1: RealMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            g2: RealMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        };
        let tol = Tolerance::default();
        let d = design_r1(&ch, &tol, 3).unwrap();
        let p1 = d.per_slot[0].p1.as_ref().unwrap();
        let p2 = d.per_slot[0].p2.as_ref().unwrap();
        assert!(p1[(0, 0)].abs() < 1e-12 && (p1[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((p2[(0, 0)].abs() - 1.0).abs() < 1e-12 && p2[(1, 0)].abs() < 1e-12);
        let dec = verify_decodability(&d, std::slice::from_ref(&ch), &tol).unwrap();
        assert!(dec.pass);
    }

    #[test]
    fn r1_receiver_matrix_full_rank_on_random_draws() {
        let tol = Tolerance::default();
        for seed in 0..50 {
            let chs = fading(4, 2, 1, seed);
            let d = design_r1(&chs[0], &tol, seed).unwrap();
            let dec = verify_decodability(&d, &chs, &tol).unwrap();
            assert!(dec.pass, "seed {seed}");
            assert_eq!((dec.rows, dec.cols), (4, 4));
        }
    }

    #[test]
    fn r1_without_eavesdropper_spans_everything() {
        let tol = Tolerance::default();
        let chs = fading(3, 0, 1, 5);
        let d = design_r1(&chs[0], &tol, 1).unwrap();
        assert_eq!(d.per_slot[0].p1.as_ref().unwrap().ncols(), 3);
        assert_eq!(d.per_slot[0].p2.as_ref().unwrap().ncols(), 0);
    }

    #[test]
    fn r2_alignment_residuals_are_tiny() {
        let tol = Tolerance::default();
        for seed in 0..20 {
            let chs = fading(2, 2, 3, seed);
            let d = design_r2(&chs, &tol, seed).unwrap();
            let rep = verify_alignment(&d, &chs, &tol).unwrap();
            assert!(rep.max_residual <= 1e-9, "seed {seed}: {}", rep.max_residual);
        }
    }

    #[test]
    fn r2_receiver_is_nine_by_nine_full_rank() {
        let tol = Tolerance::default();
        let chs = fading(3, 2, 3, 17);
        let d = design_r2(&chs, &tol, 17).unwrap();
        let dec = verify_decodability(&d, &chs, &tol).unwrap();
        assert_eq!((dec.rows, dec.cols), (9, 9));
        assert!(dec.pass);
    }

    #[test]
    fn r2_at_k_equals_n_has_empty_gperp() {
        let tol = Tolerance::default();
        let chs = fading(2, 2, 3, 9);
        let d = design_r2(&chs, &tol, 9).unwrap();
        assert_eq!(d.per_slot[0].gperp1.as_ref().unwrap().ncols(), 0);
        assert_eq!(d.per_slot[0].p1.as_ref().unwrap().ncols(), 2);
    }

    #[test]
    fn r3_nullity_matches_closed_form() {
        let tol = Tolerance::default();
        for (n, k, want) in [(3, 3, 9), (3, 4, 3), (2, 2, 6)] {
            let chs = fading(n, k, 3, (n * 10 + k) as u64);
            let psi = r3_alignment_system(&chs).unwrap();
            let basis = matrix::nullspace_basis(&psi, &tol).unwrap();
            assert_eq!(basis.ncols(), want, "n={n} k={k}");
        }
    }

    #[test]
    fn r3_design_verifies_and_decodes() {
        let tol = Tolerance::default();
        for seed in 0..20 {
            let chs = fading(2, 2, 3, 100 + seed);
            let d = design_r3(&chs, &tol, seed).unwrap();
            let rep = verify_alignment(&d, &chs, &tol).unwrap();
            assert!(rep.max_residual <= 1e-9, "seed {seed}: {}", rep.max_residual);
            let dec = verify_decodability(&d, &chs, &tol).unwrap();
            assert_eq!((dec.rows, dec.cols), (6, 6));
            assert!(dec.pass, "seed {seed}");
        }
    }

    #[test]
    fn r4_boundary_at_4n3_drops_extra_streams() {
        let tol = Tolerance::default();
        let chs = fading(3, 4, 1, 23);
        let d = design_r4(&chs[0], &tol, 23).unwrap();
        assert_eq!(d.per_slot[0].r1.as_ref().unwrap().ncols(), 0);
        assert_eq!(d.per_slot[0].p1.as_ref().unwrap().ncols(), 1);
        assert_eq!((d.budget.n1, d.budget.n2), (1, 1));
    }

    #[test]
    fn r4_full_design_certifies() {
        let tol = Tolerance::default();
        for seed in 0..20 {
            let chs = fading(6, 8, 1, 300 + seed);
            let d = design_r4(&chs[0], &tol, seed).unwrap();
            let rep = verify_alignment(&d, &chs, &tol).unwrap();
            assert!(rep.max_residual <= 1e-9, "seed {seed}: {}", rep.max_residual);
            let dec = verify_decodability(&d, &chs, &tol).unwrap();
            assert_eq!((dec.rows, dec.cols), (6, 6));
            assert!(dec.pass, "seed {seed}");
        }
    }

    #[test]
    fn r4_at_3n2_boundary_has_no_core_streams() {
        let tol = Tolerance::default();
        let chs = fading(2, 3, 1, 31);
        let d = design_r4(&chs[0], &tol, 31).unwrap();
        assert_eq!((d.budget.n1, d.budget.n2), (1, 0));
        assert_eq!(d.per_slot[0].p2.as_ref().unwrap().ncols(), 0);
        assert_eq!(d.per_slot[0].r1.as_ref().unwrap().ncols(), 1);
    }

    #[test]
    fn r5_single_pair_is_decodable() {
        let tol = Tolerance::default();
        let chs = fading(2, 3, 1, 37);
        let d = design_r5(&chs[0], &tol, 37).unwrap();
        let dec = verify_decodability(&d, &chs, &tol).unwrap();
        assert_eq!((dec.rows, dec.cols), (2, 2));
        assert!(dec.pass);
    }

    #[test]
    fn r5_alignment_residual_small_on_random_draws() {
        let tol = Tolerance::default();
        for seed in 0..20 {
            let chs = fading(4, 6, 1, 400 + seed);
            let d = design_r5(&chs[0], &tol, seed).unwrap();
            let rep = verify_alignment(&d, &chs, &tol).unwrap();
            assert!(rep.max_residual <= 1e-9, "seed {seed}: {}", rep.max_residual);
        }
    }

    #[test]
    fn r5_at_2n_is_empty() {
        let tol = Tolerance::default();
        let chs = fading(2, 4, 1, 41);
        let d = design_r5(&chs[0], &tol, 41).unwrap();
        assert_eq!(d.budget.n1, 0);
        assert_eq!(d.per_slot[0].p1.as_ref().unwrap().ncols(), 0);
    }

    #[test]
    fn mixing_pairs_information_with_opposite_jamming() {
        let tol = Tolerance::default();
        // One representative point per aligned regime.
        for (n, k, slots) in [(3, 2, 3), (3, 3, 3), (5, 7, 1), (3, 5, 1)] {
            let chs = fading(n, k, slots, (n * 100 + k) as u64);
            let d = design_for(&chs, &tol, 5).unwrap();
            let mix = assemble_mixing(&d, &chs).unwrap();
            let aligned1 = mix.b_v1.columns(mix.zf_cols1, mix.b_v1.ncols() - mix.zf_cols1);
            let aligned2 = mix.b_v2.columns(mix.zf_cols2, mix.b_v2.ncols() - mix.zf_cols2);
            assert!(
                max_abs(&(aligned1.into_owned() - &mix.b_u2)) <= tol.residual_abs_tol,
                "n={n} k={k}: b_v1 vs b_u2"
            );
            assert!(
                max_abs(&(aligned2.into_owned() - &mix.b_u1)) <= tol.residual_abs_tol,
                "n={n} k={k}: b_v2 vs b_u1"
            );
            // Zero-forced columns vanish at the eavesdropper.
            assert!(max_abs(&mix.b_v1.columns(0, mix.zf_cols1).into_owned()) <= tol.residual_abs_tol);
        }
    }

    #[test]
    fn mixing_r1_eavesdropper_sees_nothing() {
        let tol = Tolerance::default();
        let chs = fading(4, 2, 1, 77);
        let d = design_r1(&chs[0], &tol, 77).unwrap();
        let mix = assemble_mixing(&d, &chs).unwrap();
        assert!(max_abs(&mix.b_v1) <= tol.residual_abs_tol);
        assert!(max_abs(&mix.b_v2) <= tol.residual_abs_tol);
        assert_eq!(mix.b_u1.ncols(), 0);
        assert_eq!(mix.a_u2.ncols(), 0);
    }

    #[test]
    fn mixing_dimensions_match_slots() {
        let tol = Tolerance::default();
        let chs = fading(3, 2, 3, 88);
        let d = design_r2(&chs, &tol, 88).unwrap();
        let mix = assemble_mixing(&d, &chs).unwrap();
        assert_eq!(mix.receiver_rows(), 9);
        assert_eq!(mix.eaves_rows(), 6);
        assert_eq!(mix.a_v1.ncols(), d.budget.n1);
        assert_eq!(mix.a_v2.ncols(), d.budget.n2);
    }

    #[test]
    fn power_scale_binds_the_worst_transmitter() {
        let tol = Tolerance::default();
        let chs = fading(3, 2, 3, 55);
        let d = design_r2(&chs, &tol, 55).unwrap();
        let maps = transmit_maps(&d, &chs).unwrap();
        let p = 100.0;
        let worst = maps
            .iter()
            .map(|(_, _, m)| d.alpha * p * m.norm_squared())
            .fold(0.0_f64, f64::max);
        assert!((worst - p).abs() <= 1e-9 * p);
    }

    #[test]
    fn design_for_dispatches_every_regime() {
        let tol = Tolerance::default();
        for (n, k, regime) in [
            (4, 2, RegimeClass::R1),
            (3, 2, RegimeClass::R2),
            (3, 3, RegimeClass::R3),
            (5, 7, RegimeClass::R4),
            (3, 5, RegimeClass::R5),
            (2, 5, RegimeClass::Degenerate),
        ] {
            let slots = slots_for(n, k);
            let chs = fading(n, k, slots, (n * 1000 + k) as u64);
            let d = design_for(&chs, &tol, 7).unwrap();
            assert_eq!(d.regime, regime, "n={n} k={k}");
            assert_eq!(d.budget, stream_budget(n, k));
        }
    }

    #[test]
    fn design_rejects_wrong_regime() {
        let tol = Tolerance::default();
        let chs = fading(4, 1, 1, 3);
        assert!(matches!(
            design_r5(&chs[0], &tol, 3),
            Err(Error::WrongRegime(_))
        ));
    }

    #[test]
    fn decodability_fails_on_zeroed_channel() {
        let tol = Tolerance::default();
        let chs = fading(2, 1, 1, 19);
        let d = design_r1(&chs[0], &tol, 19).unwrap();
        let mut broken = chs.clone();
        broken[0].h1 = RealMatrix::zeros(2, 2);
        broken[0].h2 = RealMatrix::zeros(2, 2);
        let dec = verify_decodability(&d, &broken, &tol).unwrap();
        assert!(!dec.pass);
    }
}
