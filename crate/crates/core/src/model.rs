//! Scenario parameters, reproducible channel sampling and worst-case
//! self-interference bounds.
//!
//! Channels are flat Rayleigh: every entry is an i.i.d. circularly symmetric
//! complex Gaussian with unit variance. The loop (self-interference) channels
//! are drawn the same way and then scaled by the amplitude
//! `sqrt(sic_residual_fraction)`, so their residual power after analog/digital
//! cancellation is the configured fraction of the raw draw. Estimation error
//! on the loop channels is handled by deterministic worst-case bounds rather
//! than by sampling the error.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{spectral_norm, ComplexMatrix};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// All scenario scalars, in linear units (powers in watts).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of mobile stations.
    pub k: usize,
    /// Base station transmit antennas.
    pub n_t: usize,
    /// Base station receive antennas.
    pub n_r: usize,
    /// Antenna noise power at each mobile station (W).
    pub sigma2_ms: f64,
    /// Information-decoder processing noise power (W).
    pub delta2_ms: f64,
    /// Base station noise power (W).
    pub sigma2_bs: f64,
    /// Downlink SINR target (linear).
    pub gamma_dl: f64,
    /// Uplink SINR target (linear).
    pub gamma_ul: f64,
    /// Harvested-power target (W).
    pub q_bar: f64,
    /// Per-node transmit power cap (W).
    pub p_max: f64,
    /// Loop-channel estimation error bound at the mobile stations.
    pub eps1: f64,
    /// Loop-channel estimation error bound at the base station.
    pub eps2: f64,
    /// Energy conversion efficiency of the harvester. Kept explicit even
    /// though it is fixed at 1, so the harvested-power expression stays
    /// visible in the code that uses it.
    pub eta: f64,
    /// Fraction of self-interference power that survives cancellation.
    pub sic_residual_fraction: f64,
}

impl SystemParams {
    /// Defaults for the Monte Carlo study: two users, four transmit antennas,
    /// -20 dB downlink SINR target, 20 dBm harvest target, 30 dBm power cap,
    /// 10 dBm noise floors, and 60% of the self-interference power cancelled.
    /// All powers are in the normalized units of the unit-variance channels.
    pub fn default_scenario() -> Self {
        Self {
            k: 2,
            n_t: 4,
            n_r: 2,
            sigma2_ms: 1e-2,
            delta2_ms: 1e-2,
            sigma2_bs: 1e-2,
            gamma_dl: 1e-2,
            gamma_ul: 1e-4,
            q_bar: 0.1,
            p_max: 1.0,
            eps1: 0.1,
            eps2: 0.1,
            eta: 1.0,
            sic_residual_fraction: 0.4,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positives = [
            ("sigma2_ms", self.sigma2_ms),
            ("delta2_ms", self.delta2_ms),
            ("sigma2_bs", self.sigma2_bs),
            ("gamma_dl", self.gamma_dl),
            ("gamma_ul", self.gamma_ul),
            ("q_bar", self.q_bar),
            ("p_max", self.p_max),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.k == 0 || self.n_t == 0 || self.n_r == 0 {
            return Err(ModelError::InvalidParameter(
                "k, n_t and n_r must be at least 1".into(),
            ));
        }
        if self.n_t < self.k {
            return Err(ModelError::InvalidParameter(format!(
                "zero-forcing requires n_t >= k, got n_t = {}, k = {}",
                self.n_t, self.k
            )));
        }
        if !(self.eps1 >= 0.0 && self.eps2 >= 0.0) {
            return Err(ModelError::InvalidParameter(
                "eps1 and eps2 must be nonnegative".into(),
            ));
        }
        if !(self.sic_residual_fraction > 0.0 && self.sic_residual_fraction <= 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "sic_residual_fraction must be in (0, 1], got {}",
                self.sic_residual_fraction
            )));
        }
        if (self.eta - 1.0).abs() > 0.0 {
            return Err(ModelError::InvalidParameter(
                "eta is fixed at 1.0 in this model".into(),
            ));
        }
        Ok(())
    }

    /// Uplink power cap `min(q_bar, p_max)`.
    pub fn uplink_cap(&self) -> f64 {
        self.q_bar.min(self.p_max)
    }
}

/// RNG coordinates that produced a channel draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTag {
    pub seed: u64,
    pub trial_index: u64,
}

/// One draw of all downlink, uplink and loop channels.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Downlink channels, one length-`n_t` vector per user.
    pub h_dl: Vec<Vec<Complex64>>,
    /// Uplink channels, one length-`n_r` vector per user.
    pub h_ul: Vec<Vec<Complex64>>,
    /// Estimated loop channel at each mobile station.
    pub h_si_ms: Vec<Complex64>,
    /// Estimated loop channel at the base station, `n_r x n_t`.
    pub h_si_bs: ComplexMatrix,
    /// RNG coordinates of this draw.
    pub seed_tag: SeedTag,
}

/// Worst-case self-interference powers for the bounded problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustBounds {
    /// Worst-case self-interference power at the base station (W).
    pub e_bar: f64,
    /// Per-user worst-case loop power entering the SINR constraint (W).
    pub g_bar: Vec<f64>,
    /// Per-user minimum loop power entering the harvesting constraint (W).
    pub g_tilde: Vec<f64>,
}

// Stream identifiers for the counter-based RNG. Each user and channel group
// gets its own stream so that enlarging an antenna array extends a draw
// without disturbing the entries already sampled.
const STREAM_DL: u64 = 0x01_0000;
const STREAM_UL: u64 = 0x02_0000;
const STREAM_SI_MS: u64 = 0x03_0000;
const STREAM_SI_BS: u64 = 0x04_0000;

fn stream_rng(seed: u64, trial_index: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial_index.to_le_bytes());
    key[16..24].copy_from_slice(&stream.to_le_bytes());
    key[24..32].copy_from_slice(b"fdswipt\0");
    ChaCha8Rng::from_seed(key)
}

/// Unit-variance circularly symmetric complex Gaussian draw.
fn cscg(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws one channel realization.
///
/// Identical `(seed, trial_index)` always reproduces the identical draw,
/// independent of execution order or thread count: every channel group and
/// user is keyed to its own counter-based stream.
pub fn sample_channels(params: &SystemParams, trial_index: u64, seed: u64) -> ChannelRealization {
    let si_amp = params.sic_residual_fraction.sqrt();

    let h_dl = (0..params.k)
        .map(|k| {
            let mut rng = stream_rng(seed, trial_index, STREAM_DL + k as u64);
            (0..params.n_t).map(|_| cscg(&mut rng)).collect()
        })
        .collect();
    let h_ul = (0..params.k)
        .map(|k| {
            let mut rng = stream_rng(seed, trial_index, STREAM_UL + k as u64);
            (0..params.n_r).map(|_| cscg(&mut rng)).collect()
        })
        .collect();
    let h_si_ms = {
        let mut rng = stream_rng(seed, trial_index, STREAM_SI_MS);
        (0..params.k).map(|_| cscg(&mut rng) * si_amp).collect()
    };
    // Column-major draw so that adding transmit antennas appends columns.
    let h_si_bs = {
        let mut rng = stream_rng(seed, trial_index, STREAM_SI_BS);
        let mut m = ComplexMatrix::zeros(params.n_r, params.n_t);
        for j in 0..params.n_t {
            for i in 0..params.n_r {
                m.set(i, j, cscg(&mut rng) * si_amp);
            }
        }
        m
    };

    ChannelRealization {
        h_dl,
        h_ul,
        h_si_ms,
        h_si_bs,
        seed_tag: SeedTag { seed, trial_index },
    }
}

/// Worst-case self-interference powers from a realization.
///
/// With loop estimate magnitude `a = |h_si|` and error radius `eps1`, the
/// self-interference power at a mobile station lies in
/// `[max(0, a - eps1)^2, (a + eps1)^2]` times the transmit power, which is
/// bounded by `p_max`. The base-station bound uses the spectral norm, the
/// tightest norm with `|H v| <= |H| |v|`, across all `k` downlink streams at
/// the power cap.
pub fn compute_bounds(params: &SystemParams, ch: &ChannelRealization) -> RobustBounds {
    let g_bar = ch
        .h_si_ms
        .iter()
        .map(|h| (h.norm() + params.eps1).powi(2) * params.p_max)
        .collect();
    let g_tilde = ch
        .h_si_ms
        .iter()
        .map(|h| (h.norm() - params.eps1).max(0.0).powi(2) * params.p_max)
        .collect();
    let e_bar = (spectral_norm(&ch.h_si_bs) + params.eps2).powi(2)
        * params.k as f64
        * params.p_max;
    RobustBounds {
        e_bar,
        g_bar,
        g_tilde,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams::default_scenario()
    }

    #[test]
    fn default_scenario_is_valid() {
        params().validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut p = params();
        p.q_bar = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.n_t = 1;
        assert!(p.validate().is_err(), "n_t < k must be rejected");
        let mut p = params();
        p.sic_residual_fraction = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = params();
        let a = sample_channels(&p, 3, 42);
        let b = sample_channels(&p, 3, 42);
        assert_eq!(a.h_dl, b.h_dl);
        assert_eq!(a.h_ul, b.h_ul);
        assert_eq!(a.h_si_ms, b.h_si_ms);
        assert_eq!(a.h_si_bs.entries(), b.h_si_bs.entries());
        let c = sample_channels(&p, 4, 42);
        assert_ne!(a.h_dl, c.h_dl, "different trials must differ");
    }

    #[test]
    fn growing_the_array_extends_the_draw() {
        let mut p = params();
        p.n_t = 2;
        let small = sample_channels(&p, 0, 9);
        p.n_t = 6;
        let large = sample_channels(&p, 0, 9);
        for k in 0..p.k {
            assert_eq!(&large.h_dl[k][..2], &small.h_dl[k][..]);
        }
        for j in 0..2 {
            for i in 0..p.n_r {
                assert_eq!(large.h_si_bs.get(i, j), small.h_si_bs.get(i, j));
            }
        }
    }

    #[test]
    fn downlink_entries_have_unit_variance() {
        let p = params();
        let mut sum = 0.0;
        let mut count = 0usize;
        for trial in 0..3200 {
            let ch = sample_channels(&p, trial, 1);
            for h in &ch.h_dl {
                for z in h {
                    sum += z.norm_sqr();
                    count += 1;
                }
            }
        }
        let mean = sum / count as f64;
        assert!(
            (mean - 1.0).abs() < 0.02,
            "mean downlink entry power {mean} should be 1 +/- 0.02 over {count} draws"
        );
    }

    #[test]
    fn si_entries_carry_residual_fraction() {
        let p = params();
        let mut sum = 0.0;
        let mut count = 0usize;
        for trial in 0..50_000 {
            let ch = sample_channels(&p, trial, 5);
            for z in &ch.h_si_ms {
                sum += z.norm_sqr();
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!(
            (mean - 0.4).abs() < 0.01,
            "mean loop power {mean} should be 0.4 +/- 0.01"
        );
    }

    #[test]
    fn bounds_zero_estimate() {
        let mut p = params();
        p.k = 1;
        p.n_t = 1;
        p.n_r = 1;
        p.eps1 = 0.1;
        p.eps2 = 0.0;
        p.p_max = 1.0;
        let ch = ChannelRealization {
            h_dl: vec![vec![Complex64::new(1.0, 0.0)]],
            h_ul: vec![vec![Complex64::new(1.0, 0.0)]],
            h_si_ms: vec![Complex64::new(0.0, 0.0)],
            h_si_bs: ComplexMatrix::zeros(1, 1),
            seed_tag: SeedTag { seed: 0, trial_index: 0 },
        };
        let b = compute_bounds(&p, &ch);
        assert!((b.g_bar[0] - 0.01).abs() < 1e-15);
        // The estimate magnitude is below eps1, so the worst-case minimum
        // loop power is zero (the uncertainty disc contains the origin).
        assert_eq!(b.g_tilde[0], 0.0);
        assert_eq!(b.e_bar, 0.0);
    }

    #[test]
    fn bounds_perfect_csi() {
        let mut p = params();
        p.k = 1;
        p.eps1 = 0.0;
        p.eps2 = 0.0;
        p.p_max = 2.0;
        let h = Complex64::new(0.3, -0.4); // |h| = 0.5
        let ch = ChannelRealization {
            h_dl: vec![vec![Complex64::new(1.0, 0.0)]],
            h_ul: vec![vec![Complex64::new(1.0, 0.0)]],
            h_si_ms: vec![h],
            h_si_bs: ComplexMatrix::identity(2),
            seed_tag: SeedTag { seed: 0, trial_index: 0 },
        };
        let b = compute_bounds(&p, &ch);
        assert!((b.g_bar[0] - 0.5).abs() < 1e-12); // |h|^2 * p_max
        assert!((b.g_tilde[0] - 0.5).abs() < 1e-12);
        assert!((b.e_bar - 2.0).abs() < 1e-12); // |I|^2 * k * p_max
    }

    #[test]
    fn bounds_direct_evaluation() {
        let mut p = params();
        p.k = 1;
        p.eps1 = 0.1;
        p.p_max = 2.0;
        let ch = ChannelRealization {
            h_dl: vec![vec![Complex64::new(1.0, 0.0)]],
            h_ul: vec![vec![Complex64::new(1.0, 0.0)]],
            h_si_ms: vec![Complex64::new(0.5, 0.0)],
            h_si_bs: ComplexMatrix::zeros(1, 1),
            seed_tag: SeedTag { seed: 0, trial_index: 0 },
        };
        let b = compute_bounds(&p, &ch);
        assert!((b.g_bar[0] - 0.72).abs() < 1e-12, "(0.6)^2 * 2");
        assert!((b.g_tilde[0] - 0.32).abs() < 1e-12, "(0.4)^2 * 2");
    }

    #[test]
    fn bounds_monotone_in_eps() {
        let ch = sample_channels(&params(), 0, 123);
        let mut prev_gbar = -1.0;
        let mut prev_gtilde = f64::INFINITY;
        let a = ch.h_si_ms[0].norm();
        for i in 0..=20 {
            let mut p = params();
            p.eps1 = a * i as f64 / 20.0;
            let b = compute_bounds(&p, &ch);
            assert!(b.g_bar[0] >= prev_gbar);
            assert!(b.g_tilde[0] <= prev_gtilde);
            assert!(b.g_bar[0] >= b.g_tilde[0]);
            prev_gbar = b.g_bar[0];
            prev_gtilde = b.g_tilde[0];
        }
        let mut prev_ebar = -1.0;
        for i in 0..=20 {
            let mut p = params();
            p.eps2 = i as f64 / 20.0;
            let b = compute_bounds(&p, &ch);
            assert!(b.e_bar >= prev_ebar);
            prev_ebar = b.e_bar;
        }
        // eps1 = 0 collapses the interval.
        let mut p = params();
        p.eps1 = 0.0;
        let b = compute_bounds(&p, &ch);
        for k in 0..p.k {
            assert!((b.g_bar[k] - b.g_tilde[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn bounds_contain_perturbed_loop_power() {
        use rand::Rng;
        let p = params();
        let ch = sample_channels(&p, 1, 77);
        let b = compute_bounds(&p, &ch);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let k = rng.gen_range(0..p.k);
            // Random perturbation with |dh| <= eps1.
            let ang: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let mag: f64 = rng.gen::<f64>() * p.eps1;
            let dh = Complex64::from_polar(mag, ang);
            let power = (ch.h_si_ms[k] + dh).norm_sqr() * p.p_max;
            assert!(power <= b.g_bar[k] + 1e-12);
            assert!(power >= b.g_tilde[k] - 1e-12);
        }
    }
}
