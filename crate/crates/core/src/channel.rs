//! BPSK over real AWGN and channel LLRs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("code rate must be in (0, 1], got {0}")]
    BadRate(f64),
    #[error("Eb/N0 must be finite, got {0}")]
    BadEbN0(f64),
}

/// Noise standard deviation for a given Eb/N0 (dB) and code rate.
pub fn ebno_to_sigma(ebno_db: f64, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(ChannelError::BadRate(rate));
    }
    if !ebno_db.is_finite() {
        return Err(ChannelError::BadEbN0(ebno_db));
    }
    let ebno = 10f64.powf(ebno_db / 10.0);
    Ok((1.0 / (2.0 * rate * ebno)).sqrt())
}

/// Per-frame generator: one ChaCha stream per frame index under a common seed,
/// so frames are reproducible in isolation.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Maps bits to `+1/-1` and adds white Gaussian noise of deviation `sigma`.
pub fn transmit<R: Rng + ?Sized>(x: &[u8], sigma: f64, rng: &mut R) -> Vec<f64> {
    x.iter()
        .map(|&b| {
            let z: f64 = rng.sample(StandardNormal);
            1.0 - 2.0 * f64::from(b) + sigma * z
        })
        .collect()
}

/// `2y / sigma^2`.
pub fn llr(y: &[f64], sigma: f64) -> Vec<f64> {
    let s = 2.0 / (sigma * sigma);
    y.iter().map(|v| s * v).collect()
}

/// Number of positions whose hard decision disagrees with the sent codeword.
pub fn hard_errors(y: &[f64], x: &[u8]) -> usize {
    y.iter()
        .zip(x)
        .filter(|(v, b)| u8::from(**v < 0.0) != **b)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_values() {
        assert!((ebno_to_sigma(0.0, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!((ebno_to_sigma(3.0103, 0.5).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert!(ebno_to_sigma(1.0, 0.0).is_err());
        assert!(ebno_to_sigma(1.0, 1.5).is_err());
        assert!(ebno_to_sigma(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn llr_scale() {
        assert_eq!(llr(&[1.5], 1.0), vec![3.0]);
    }

    #[test]
    fn noise_statistics() {
        let sigma = 0.8;
        let mut rng = frame_rng(7, 0);
        let n = 200_000;
        let y = transmit(&vec![0u8; n], sigma, &mut rng);
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Standard error of the mean is sigma/sqrt(n) ~ 0.0018.
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        // Standard error of the variance is sigma^2 sqrt(2/n) ~ 0.002.
        assert!((var - sigma * sigma).abs() < 0.01, "var {var}");
        let ones = transmit(&vec![1u8; 1000], 1e-9, &mut rng);
        assert!(ones.iter().all(|v| (v + 1.0).abs() < 1e-6));
    }

    #[test]
    fn frame_streams_are_independent_and_reproducible() {
        let a: Vec<f64> = transmit(&[0; 8], 1.0, &mut frame_rng(3, 5));
        let b: Vec<f64> = transmit(&[0; 8], 1.0, &mut frame_rng(3, 5));
        let c: Vec<f64> = transmit(&[0; 8], 1.0, &mut frame_rng(3, 6));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn hard_error_count() {
        assert_eq!(hard_errors(&[0.5, -0.2, 0.1, -1.0], &[0, 0, 1, 1]), 2);
    }
}
