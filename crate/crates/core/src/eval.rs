//! Rate evaluation: exact Gaussian mutual information, PAM leakage
//! accounting, Monte Carlo error probability, high-SNR slope fits, and the
//! `(N, K, P)` sweep that ties them together.
//!
//! The empirical side of the theory: a verified design should show
//! `I(V;Y)` growing like `(n1 + n2) * (1/2) log2 P` while `I(V;Z)` stays
//! bounded, so the fitted slope of the per-slot secure rate against
//! `(1/2) log2 P` lands on the closed-form sum s.d.o.f.

use nalgebra::{Cholesky, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::channel::{draw_channels, ChannelDims, ChannelSet, GainMode};
use crate::error::{Error, Result};
use crate::gaussian::{self, MixingModel, SchemeDesign};
use crate::matrix::{RealMatrix, Tolerance};
use crate::regimes::{self, classify_regime, RegimeClass};
use crate::structured::{
    self, decoder_table, DecoderTable, FixedDesign, PamKnobs, PamPart, StructuredDesign,
};

/// Rate accounting of one design at one power.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Linear power (not dB).
    pub p: f64,
    /// Bits per block at the legitimate receiver.
    pub i_vy: f64,
    /// Bits per block at the eavesdropper.
    pub i_vz: f64,
    /// `max(i_vy - i_vz, 0)` bits per block.
    pub secure_rate: f64,
    /// Secure bits per channel use.
    pub per_slot_rate: f64,
    pub slots: usize,
}

/// Least-squares fit of per-slot rate against `(1/2) log2 P`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub fit_rmse: f64,
    pub grid_db: Vec<f64>,
}

fn logdet_spd(m: &RealMatrix) -> Result<f64> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>());
    }
    // Near-singular covariance: retry with a small diagonal jitter.
    let n = m.nrows();
    let jitter = 1e-12 * m.trace().max(1.0);
    let bumped = m + RealMatrix::identity(n, n) * jitter;
    Cholesky::new(bumped)
        .map(|chol| 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
        .ok_or_else(|| {
            Error::NumericalConditioning("covariance is not positive definite".into())
        })
}

/// `I(V; Y)` in bits for `Y = sum_i S_i v_i + sum_j J_j u_j + noise` with
/// all streams i.i.d. Gaussian at `stream_power` and unit noise:
/// `(1/2) log2 det(Sigma_total) / det(Sigma_without_signal)`.
pub fn gaussian_mutual_information(
    signal_maps: &[&RealMatrix],
    jamming_maps: &[&RealMatrix],
    stream_power: f64,
) -> Result<f64> {
    if !(stream_power > 0.0) {
        return Err(Error::InvalidInput(format!(
            "stream power must be positive, got {stream_power}"
        )));
    }
    let rows = signal_maps
        .iter()
        .chain(jamming_maps.iter())
        .map(|m| m.nrows())
        .max()
        .unwrap_or(0);
    if rows == 0 {
        return Ok(0.0);
    }
    for m in signal_maps.iter().chain(jamming_maps.iter()) {
        if m.ncols() > 0 && m.nrows() != rows {
            return Err(Error::InvalidInput(
                "signal and jamming maps must share the stacked dimension".into(),
            ));
        }
    }
    let mut given = RealMatrix::identity(rows, rows);
    for j in jamming_maps {
        if j.ncols() > 0 {
            given += *j * j.transpose() * stream_power;
        }
    }
    let mut total = given.clone();
    for s in signal_maps {
        if s.ncols() > 0 {
            total += *s * s.transpose() * stream_power;
        }
    }
    Ok((logdet_spd(&total)? - logdet_spd(&given)?) / (2.0 * std::f64::consts::LN_2))
}

/// Exact Gaussian rate report of a verified design's mixing model.
pub fn secure_rate(mix: &MixingModel, p: f64, alpha: f64) -> Result<RateReport> {
    let p_bar = alpha * p;
    let i_vy = gaussian_mutual_information(
        &[&mix.a_v1, &mix.a_v2],
        &[&mix.a_u1, &mix.a_u2],
        p_bar,
    )?;
    let i_vz = gaussian_mutual_information(
        &[&mix.b_v1, &mix.b_v2],
        &[&mix.b_u1, &mix.b_u2],
        p_bar,
    )?;
    let secure = (i_vy - i_vz).max(0.0);
    Ok(RateReport {
        p,
        i_vy,
        i_vz,
        secure_rate: secure,
        per_slot_rate: secure / mix.slots as f64,
        slots: mix.slots,
    })
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Rate report of a combined fixed-gain design: exact Gaussian accounting
/// for the Gaussian part plus PAM accounting, where `I(V;Y)` of the PAM
/// part is `log2(2Q+1)` per stream discounted by the measured error rate
/// (Fano) and `I(V;Z)` is the exact constellation leakage.
pub fn structured_rate(
    design: &StructuredDesign,
    ch: &ChannelSet,
    p: f64,
    trials: usize,
    rng_seed: u64,
) -> Result<RateReport> {
    let mix = gaussian::assemble_mixing(&design.gaussian, std::slice::from_ref(ch))?;
    let base = secure_rate(&mix, p, design.gaussian.alpha)?;
    let (mut i_vy, mut i_vz) = (base.i_vy, base.i_vz);
    if design.pam.is_some() {
        let cfg = design.pam_spec.config_at(p)?;
        let streams = 2 * design.pam_symbols_per_tx();
        let pe = error_probability_with_noise(design, ch, p, trials, rng_seed, 1.0)?;
        let per_stream = ((2 * cfg.q + 1) as f64).log2();
        let pam_vy = ((1.0 - pe) * streams as f64 * per_stream - binary_entropy(pe)).max(0.0);
        i_vy += pam_vy;
        i_vz += structured::exact_pam_leakage(cfg.q, streams);
    }
    let secure = (i_vy - i_vz).max(0.0);
    Ok(RateReport {
        p,
        i_vy,
        i_vz,
        secure_rate: secure,
        per_slot_rate: secure,
        slots: 1,
    })
}

/// Fit `per_slot_rate = slope * (1/2) log2 P + intercept` by least squares.
pub fn sdof_slope(reports: &[RateReport]) -> Result<SlopeEstimate> {
    let mut ps: Vec<f64> = reports.iter().map(|r| r.p).collect();
    ps.sort_by(|a, b| a.total_cmp(b));
    ps.dedup();
    if ps.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "slope fit needs >= 3 distinct powers, got {}",
            ps.len()
        )));
    }
    let span_db = 10.0 * (ps[ps.len() - 1] / ps[0]).log10();
    if span_db < 20.0 - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "slope fit needs >= 20 dB of span, got {span_db:.1} dB"
        )));
    }
    let xs: Vec<f64> = reports.iter().map(|r| 0.5 * r.p.log2()).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.per_slot_rate).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rmse = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SlopeEstimate {
        slope,
        intercept,
        fit_rmse: rmse,
        grid_db: reports.iter().map(|r| 10.0 * r.p.log10()).collect(),
    })
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Monte Carlo symbol error probability of a structured design's PAM part
/// through the filtered channel, with per-trial RNG streams so the result
/// is seed-deterministic. `noise_std` scales the receiver noise (the
/// channel model itself has unit noise).
pub fn error_probability_with_noise(
    design: &StructuredDesign,
    ch: &ChannelSet,
    p: f64,
    trials: usize,
    rng_seed: u64,
    noise_std: f64,
) -> Result<f64> {
    let Some(pam) = &design.pam else {
        return Ok(0.0);
    };
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    let cfg = design.pam_spec.config_at(p)?;
    let q = cfg.q;
    let bank = design.filter.as_ref().expect("PAM part implies filter");
    let l = design.split.l;
    // Per-antenna noise deviations of the filtered observation D * noise.
    let ddt = &bank.d * bank.d.transpose();
    let noise_devs: Vec<f64> = (0..l).map(|i| ddt[(i, i)].sqrt() * noise_std).collect();
    // Gaussian streams leak into the filtered channel only through the
    // annihilation residual.
    let resid = design.gaussian_residual_into_filtered(ch)?;
    let gauss_std = (design.gaussian.alpha * p).sqrt();

    let tables: Vec<DecoderTable> = match pam {
        PamPart::Siso { .. } => vec![decoder_table(pam, 0, &cfg)?],
        PamPart::Mimo2 { .. } => {
            vec![decoder_table(pam, 0, &cfg)?, decoder_table(pam, 1, &cfg)?]
        }
    };

    let mut errors = 0usize;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(trial as u64);
        let trial_error = match pam {
            PamPart::Siso { c1, c2 } => {
                let v1 = rng.random_range(-q..=q);
                let v2 = rng.random_range(-q..=q);
                let u1 = rng.random_range(-q..=q);
                let u2 = rng.random_range(-q..=q);
                let mut y = cfg.a * (c1 * v1 as f64 + c2 * v2 as f64 + (u1 + u2) as f64);
                for gcol in 0..resid.ncols() {
                    y += resid[(0, gcol)] * gauss_std * standard_normal(&mut rng);
                }
                y += noise_devs[0] * standard_normal(&mut rng);
                let decoded = tables[0].symbols(tables[0].decode(y));
                decoded[0] != v1 || decoded[1] != v2
            }
            PamPart::Mimo2 { eff_a, eff_b, t1, t2 } => {
                let m_syms = t1.values.len();
                let mut draw = |count: usize| -> Vec<i64> {
                    (0..count).map(|_| rng.random_range(-q..=q)).collect()
                };
                let v11 = draw(m_syms);
                let v12 = draw(m_syms);
                let v21 = draw(m_syms);
                let v22 = draw(m_syms);
                let u11 = draw(m_syms);
                let u12 = draw(m_syms);
                let u21 = draw(m_syms);
                let u22 = draw(m_syms);
                let comb = |t: &[f64], s: &[i64]| -> f64 {
                    t.iter().zip(s).map(|(tv, sv)| tv * *sv as f64).sum()
                };
                let sv1 = DVector::from_vec(vec![
                    cfg.a * comb(&t1.values, &v11),
                    cfg.a * comb(&t2.values, &v12),
                ]);
                let sv2 = DVector::from_vec(vec![
                    cfg.a * comb(&t1.values, &v21),
                    cfg.a * comb(&t2.values, &v22),
                ]);
                let su = DVector::from_vec(vec![
                    cfg.a * (comb(&t1.values, &u11) + comb(&t1.values, &u21)),
                    cfg.a * (comb(&t2.values, &u12) + comb(&t2.values, &u22)),
                ]);
                let mut y = eff_a * sv1 + eff_b * sv2 + su;
                for row in 0..l {
                    for gcol in 0..resid.ncols() {
                        y[row] += resid[(row, gcol)] * gauss_std * standard_normal(&mut rng);
                    }
                    y[row] += noise_devs[row] * standard_normal(&mut rng);
                }
                let dec = structured::ml_decode_2222(&[y[0], y[1]], &tables, &cfg);
                dec.v11 != v11 || dec.v12 != v12 || dec.v21 != v21 || dec.v22 != v22
            }
        };
        if trial_error {
            errors += 1;
        }
    }
    Ok(errors as f64 / trials as f64)
}

/// Error probability under the channel model's unit receiver noise.
pub fn error_probability(
    design: &StructuredDesign,
    ch: &ChannelSet,
    p: f64,
    trials: usize,
    rng_seed: u64,
) -> Result<f64> {
    error_probability_with_noise(design, ch, p, trials, rng_seed, 1.0)
}

/// Maximum transmit power used by any transmitter in any slot under the
/// design's power scale, relative to the budget `p` (at most 1 for a
/// well-scaled design).
pub fn power_utilization(design: &SchemeDesign, chs: &[ChannelSet], p: f64) -> Result<f64> {
    let maps = gaussian::transmit_maps(design, chs)?;
    let worst = maps
        .iter()
        .map(|(_, _, m)| design.alpha * p * m.norm_squared())
        .fold(0.0_f64, f64::max);
    Ok(worst / p)
}

/// One `(N, K)` row of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub k: usize,
    pub regime: RegimeClass,
    pub ds_num: i64,
    pub ds_den: i64,
    pub coop_bound: String,
    pub dist_bound: String,
    pub slope: Option<f64>,
    pub slope_rmse: Option<f64>,
    pub max_residual: Option<f64>,
    pub leakage_delta_bits: Option<f64>,
    pub status: String,
}

/// Full sweep output plus the configuration that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub n: usize,
    pub k_range: (usize, usize),
    pub mode: GainMode,
    pub seed: u64,
    pub p_grid_db: Vec<f64>,
    pub points: Vec<SweepPoint>,
}

/// Number of top grid points used for the slope fit; the lower points
/// carry too much finite-SNR offset.
const SLOPE_FIT_POINTS: usize = 3;

pub fn default_p_grid_db() -> Vec<f64> {
    vec![40.0, 50.0, 60.0, 70.0, 80.0]
}

fn point_seed(seed: u64, n: usize, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 32)
        .wrapping_add(k as u64)
}

/// Leakage increase over the top 20 dB of the grid.
fn leakage_delta(reports: &[RateReport]) -> Option<f64> {
    let hi = reports.iter().map(|r| r.p).fold(f64::NEG_INFINITY, f64::max);
    let lo_target = hi / 100.0;
    let hi_rep = reports.iter().find(|r| r.p == hi)?;
    let lo_rep = reports
        .iter()
        .min_by(|a, b| (a.p - lo_target).abs().total_cmp(&(b.p - lo_target).abs()))?;
    Some(hi_rep.i_vz - lo_rep.i_vz)
}

fn slope_over_top(reports: &[RateReport]) -> Result<SlopeEstimate> {
    let mut sorted: Vec<RateReport> = reports.to_vec();
    sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
    let take = sorted.len().min(SLOPE_FIT_POINTS).max(3).min(sorted.len());
    let top = &sorted[sorted.len() - take..];
    sdof_slope(top)
}

/// Evaluate one `(N, K)` point: synthesize, certify, rate over the grid,
/// fit the slope.
fn sweep_point(
    n: usize,
    k: usize,
    mode: GainMode,
    p_grid_db: &[f64],
    seed: u64,
    trials: usize,
    tol: &Tolerance,
) -> SweepPoint {
    let ds = regimes::sum_sdof(n, k);
    let regime = classify_regime(n, k);
    let mut point = SweepPoint {
        n,
        k,
        regime,
        ds_num: *ds.numer(),
        ds_den: *ds.denom(),
        coop_bound: regimes::format_rational(regimes::cooperative_bound(n, k)),
        dist_bound: regimes::format_rational(regimes::distributed_bound(n, k)),
        slope: None,
        slope_rmse: None,
        max_residual: None,
        leakage_delta_bits: None,
        status: String::new(),
    };
    // No secure streams at or beyond K = 2N: theory columns only.
    if regime == RegimeClass::Degenerate || (point.ds_num == 0) {
        point.status = "degenerate".into();
        return point;
    }
    let pseed = point_seed(seed, n, k);
    let run = || -> Result<(String, f64, Vec<RateReport>)> {
        let dims = ChannelDims::new(n, k)?;
        match mode {
            GainMode::Fading => {
                let slots = gaussian::slots_for(n, k);
                let chs = draw_channels(dims, mode, slots, pseed)?;
                let design = gaussian::design_for(&chs, tol, pseed)?;
                let report = gaussian::verify_alignment(&design, &chs, tol)?;
                let mix = gaussian::assemble_mixing(&design, &chs)?;
                let reports = p_grid_db
                    .iter()
                    .map(|db| secure_rate(&mix, 10f64.powf(db / 10.0), design.alpha))
                    .collect::<Result<Vec<_>>>()?;
                Ok(("gaussian".into(), report.max_residual, reports))
            }
            GainMode::Fixed => {
                let chs = draw_channels(dims, mode, 1, pseed)?;
                let knobs = PamKnobs { m: 1, delta: 0.05, q_override: None };
                match structured::design_fixed_for(&chs[0], &knobs, tol, pseed)? {
                    FixedDesign::Gaussian(design) => {
                        let report = gaussian::verify_alignment(&design, &chs, tol)?;
                        let mix = gaussian::assemble_mixing(&design, &chs)?;
                        let reports = p_grid_db
                            .iter()
                            .map(|db| secure_rate(&mix, 10f64.powf(db / 10.0), design.alpha))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(("gaussian".into(), report.max_residual, reports))
                    }
                    FixedDesign::Structured(design) => {
                        let report = structured::verify_structured(&design, &chs[0], tol)?;
                        let reports = p_grid_db
                            .iter()
                            .map(|db| {
                                structured_rate(
                                    &design,
                                    &chs[0],
                                    10f64.powf(db / 10.0),
                                    trials,
                                    pseed,
                                )
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok(("structured".into(), report.max_residual, reports))
                    }
                }
            }
        }
    };
    match run() {
        Ok((status, max_residual, reports)) => {
            point.status = status;
            point.max_residual = Some(max_residual);
            point.leakage_delta_bits = leakage_delta(&reports);
            match slope_over_top(&reports) {
                Ok(est) => {
                    point.slope = Some(est.slope);
                    point.slope_rmse = Some(est.fit_rmse);
                }
                Err(e) => {
                    point.status = format!("failed: {e}");
                }
            }
        }
        Err(e) => {
            point.status = format!("failed: {e}");
        }
    }
    point
}

/// Sweep `K` over a range at fixed `N`: theory columns always, empirical
/// columns where a scheme exists. Per-point failures are recorded in the
/// status column and the sweep continues.
pub fn sweep(
    n: usize,
    k_range: (usize, usize),
    p_grid_db: &[f64],
    mode: GainMode,
    seed: u64,
    trials: usize,
) -> Result<SweepReport> {
    if n < 1 || k_range.1 < k_range.0 {
        return Err(Error::InvalidInput("need n >= 1 and a nonempty K range".into()));
    }
    if p_grid_db.len() < 3 {
        return Err(Error::InvalidInput("power grid needs >= 3 points".into()));
    }
    let tol = Tolerance::default();
    let points = (k_range.0..=k_range.1)
        .map(|k| sweep_point(n, k, mode, p_grid_db, seed, trials, &tol))
        .collect();
    Ok(SweepReport {
        n,
        k_range,
        mode,
        seed,
        p_grid_db: p_grid_db.to_vec(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, ChannelDims, GainMode};
    use crate::matrix::Tolerance;

    fn fading(n: usize, k: usize, slots: usize, seed: u64) -> Vec<ChannelSet> {
        draw_channels(ChannelDims::new(n, k).unwrap(), GainMode::Fading, slots, seed).unwrap()
    }

    #[test]
    fn scalar_awgn_capacity_form() {
        let one = RealMatrix::from_element(1, 1, 1.0);
        for p in [1.0, 10.0, 1e4] {
            let mi = gaussian_mutual_information(&[&one], &[], p).unwrap();
            assert!((mi - 0.5 * (1.0 + p).log2()).abs() <= 1e-10, "p={p}");
        }
    }

    #[test]
    fn zero_signal_map_gives_zero_information() {
        let empty = RealMatrix::zeros(3, 0);
        let jam = RealMatrix::from_fn(3, 2, |i, j| (i + j) as f64 * 0.1 + 0.2);
        let mi = gaussian_mutual_information(&[&empty], &[&jam], 100.0).unwrap();
        assert_eq!(mi, 0.0);
    }

    #[test]
    fn mutual_information_matches_sampled_covariance_oracle() {
        // Estimate h(Y) and h(Y | V) from sample covariances and compare.
        let s = RealMatrix::from_row_slice(2, 2, &[0.9, -0.3, 0.4, 1.1]);
        let j = RealMatrix::from_row_slice(2, 1, &[0.5, -0.8]);
        let p = 1000.0;
        let exact = gaussian_mutual_information(&[&s], &[&j], p).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples = 1_000_000;
        let mut acc_total = [[0.0f64; 2]; 2];
        let mut acc_given = [[0.0f64; 2]; 2];
        for _ in 0..samples {
            let v = [
                p.sqrt() * standard_normal(&mut rng),
                p.sqrt() * standard_normal(&mut rng),
            ];
            let u = p.sqrt() * standard_normal(&mut rng);
            let noise = [standard_normal(&mut rng), standard_normal(&mut rng)];
            let mut y = [0.0f64; 2];
            let mut y_given = [0.0f64; 2];
            for r in 0..2 {
                let sig = s[(r, 0)] * v[0] + s[(r, 1)] * v[1];
                let jam = j[(r, 0)] * u;
                y[r] = sig + jam + noise[r];
                y_given[r] = jam + noise[r];
            }
            for r in 0..2 {
                for c in 0..2 {
                    acc_total[r][c] += y[r] * y[c];
                    acc_given[r][c] += y_given[r] * y_given[c];
                }
            }
        }
        let to_mat =
            |acc: [[f64; 2]; 2]| RealMatrix::from_fn(2, 2, |r, c| acc[r][c] / samples as f64);
        let est = (logdet_spd(&to_mat(acc_total)).unwrap()
            - logdet_spd(&to_mat(acc_given)).unwrap())
            / (2.0 * std::f64::consts::LN_2);
        assert!((est - exact).abs() <= 0.05, "sampled {est} vs exact {exact}");
    }

    #[test]
    fn nullspace_regime_leaks_nothing() {
        let tol = Tolerance::default();
        let chs = fading(4, 2, 1, 7);
        let d = gaussian::design_r1(&chs[0], &tol, 7).unwrap();
        let mix = gaussian::assemble_mixing(&d, &chs).unwrap();
        let report = secure_rate(&mix, 1e6, d.alpha).unwrap();
        assert_eq!(report.i_vz, 0.0);
        assert!(report.i_vy > 0.0);
        assert_eq!(report.secure_rate, report.i_vy);
    }

    #[test]
    fn aligned_leakage_saturates_across_the_grid() {
        let tol = Tolerance::default();
        // Upper aligned regime, three slots.
        let chs = fading(3, 4, 3, 11);
        let d = gaussian::design_r3(&chs, &tol, 11).unwrap();
        let mix = gaussian::assemble_mixing(&d, &chs).unwrap();
        let dbs = [40.0, 50.0, 60.0, 70.0, 80.0];
        let reports: Vec<RateReport> = dbs
            .iter()
            .map(|db| secure_rate(&mix, 10f64.powf(db / 10.0), d.alpha).unwrap())
            .collect();
        for w in reports.windows(2) {
            assert!(w[1].i_vz - w[0].i_vz <= 0.1, "leakage grew: {w:?}");
        }
        // One-slot regime at the strong-eavesdropper end: leakage bounded
        // while the legitimate rate keeps growing.
        let chs5 = fading(2, 3, 1, 13);
        let d5 = gaussian::design_r4(&chs5[0], &tol, 13).unwrap();
        let mix5 = gaussian::assemble_mixing(&d5, &chs5).unwrap();
        let r60 = secure_rate(&mix5, 1e6, d5.alpha).unwrap();
        let r80 = secure_rate(&mix5, 1e8, d5.alpha).unwrap();
        assert!(r80.i_vz - r60.i_vz <= 0.1);
        assert!(r80.i_vy - r60.i_vy > 2.0);
    }

    #[test]
    fn slope_recovers_exact_linear_data() {
        let mk = |p: f64, rate: f64| RateReport {
            p,
            i_vy: rate,
            i_vz: 0.0,
            secure_rate: rate,
            per_slot_rate: rate,
            slots: 1,
        };
        let reports: Vec<RateReport> = [1e4, 1e6, 1e8]
            .iter()
            .map(|&p| mk(p, 1.5 * 0.5 * p.log2() + 3.0))
            .collect();
        let est = sdof_slope(&reports).unwrap();
        assert!((est.slope - 1.5).abs() <= 1e-9);
        assert!((est.intercept - 3.0).abs() <= 1e-6);
        assert!(est.fit_rmse <= 1e-9);
    }

    #[test]
    fn slope_rejects_degenerate_grids() {
        let mk = |p: f64| RateReport {
            p,
            i_vy: 1.0,
            i_vz: 0.0,
            secure_rate: 1.0,
            per_slot_rate: 1.0,
            slots: 1,
        };
        assert!(matches!(
            sdof_slope(&[mk(1e4), mk(1e6)]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            sdof_slope(&[mk(1e4), mk(1.5e4), mk(2e4)]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn empirical_slope_tracks_theory_for_gaussian_designs() {
        let tol = Tolerance::default();
        for (n, k) in [(2usize, 1usize), (3, 2), (3, 3)] {
            let slots = gaussian::slots_for(n, k);
            let chs = fading(n, k, slots, (70 + n * 10 + k) as u64);
            let d = gaussian::design_for(&chs, &tol, 7).unwrap();
            let mix = gaussian::assemble_mixing(&d, &chs).unwrap();
            let reports: Vec<RateReport> = [60.0, 70.0, 80.0]
                .iter()
                .map(|db| secure_rate(&mix, 10f64.powf(db / 10.0), d.alpha).unwrap())
                .collect();
            let est = sdof_slope(&reports).unwrap();
            let ds = regimes::sum_sdof(n, k);
            let want = *ds.numer() as f64 / *ds.denom() as f64;
            assert!(
                (est.slope - want).abs() <= 0.05,
                "(n={n}, k={k}): slope {} vs {want}",
                est.slope
            );
        }
    }

    #[test]
    fn noiseless_decode_has_zero_errors() {
        let tol = Tolerance::default();
        let ch = fading(2, 2, 1, 23).remove(0);
        let knobs = PamKnobs { m: 1, delta: 0.05, q_override: Some(1) };
        let d = structured::design_2222(&ch, &knobs, &tol).unwrap();
        let pe = error_probability_with_noise(&d, &ch, 1e7, 500, 5, 0.0).unwrap();
        assert_eq!(pe, 0.0);
    }

    #[test]
    fn decode_error_rate_small_at_70db_and_monotone() {
        let tol = Tolerance::default();
        let ch = fading(2, 2, 1, 29).remove(0);
        let knobs = PamKnobs { m: 1, delta: 0.05, q_override: Some(1) };
        let d = structured::design_2222(&ch, &knobs, &tol).unwrap();
        let mut rates = Vec::new();
        for db in [50.0, 60.0, 70.0] {
            let pe = error_probability(&d, &ch, 10f64.powf(db / 10.0), 2000, 11).unwrap();
            rates.push(pe);
        }
        assert!(rates[2] < 1e-2, "70 dB error rate {}", rates[2]);
        assert!(rates[0] >= rates[1] && rates[1] >= rates[2], "{rates:?}");
    }

    #[test]
    fn power_utilization_never_exceeds_budget() {
        let tol = Tolerance::default();
        for (n, k) in [(4, 2), (3, 2), (3, 3), (5, 7), (3, 5)] {
            let slots = gaussian::slots_for(n, k);
            let chs = fading(n, k, slots, (n * 31 + k) as u64);
            let d = gaussian::design_for(&chs, &tol, 3).unwrap();
            let util = power_utilization(&d, &chs, 1e6).unwrap();
            assert!(util <= 1.0 + 1e-9, "(n={n},k={k}): {util}");
            assert!(util >= 0.999, "(n={n},k={k}): {util}");
        }
    }

    #[test]
    fn sweep_reproduces_the_staircase_for_n6() {
        let report = sweep(6, (0, 12), &default_p_grid_db(), GainMode::Fading, 99, 200).unwrap();
        let expect = [
            (6, 1), (6, 1), (6, 1), (6, 1),
            (16, 3), (14, 3),
            (4, 1), (4, 1), (4, 1),
            (3, 1), (2, 1), (1, 1), (0, 1),
        ];
        assert_eq!(report.points.len(), 13);
        for (point, (num, den)) in report.points.iter().zip(expect.iter()) {
            assert_eq!((point.ds_num, point.ds_den), (*num, *den), "k={}", point.k);
        }
        // Degenerate tail carries no slope.
        assert!(report.points[12].slope.is_none());
        assert_eq!(report.points[12].status, "degenerate");
    }

    #[test]
    fn sweep_is_seed_deterministic() {
        let a = sweep(3, (0, 6), &default_p_grid_db(), GainMode::Fading, 7, 100).unwrap();
        let b = sweep(3, (0, 6), &default_p_grid_db(), GainMode::Fading, 7, 100).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn sweep_slopes_match_theory_where_gaussian() {
        let report = sweep(3, (0, 6), &default_p_grid_db(), GainMode::Fading, 5, 100).unwrap();
        for point in &report.points {
            if point.status == "gaussian" {
                let want = point.ds_num as f64 / point.ds_den as f64;
                let got = point.slope.expect("gaussian points have slopes");
                assert!(
                    (got - want).abs() <= 0.05,
                    "k={}: slope {got} vs {want}",
                    point.k
                );
            }
        }
    }
}
