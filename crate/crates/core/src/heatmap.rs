//! Gaussian keypoint heatmaps: encoding, sub-pixel decoding, and the on-disk format.
//!
//! Pixel coordinates follow image convention: `u` is the column, `v` the row, and the
//! value of pixel `(u, v)` is stored at `v * width + u`.
//!
//! Decoding refines the integer argmax `m` with one Newton step on the log-heatmap,
//! `μ = m − H⁻¹ g`, where `g` and `H` are central finite-difference gradient and Hessian
//! of `ln(D + ε)` on the 3×3 neighbourhood of `m`. For an exact Gaussian the log surface
//! is quadratic and the step lands on the mode.
//!
//! # Binary format
//!
//! One file per heatmap channel, little-endian:
//!
//! | offset | size        | content                           |
//! |--------|-------------|-----------------------------------|
//! | 0      | 4           | width, `u32`                      |
//! | 4      | 4           | height, `u32`                     |
//! | 8      | 4·w·h       | values, `f32`, row-major          |
//!
//! A JSON sidecar ([`HeatmapSidecar`]) maps each channel file to its keypoint id.

use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::KeypointId;
use crate::scalar::Real;

pub const MIN_HEATMAP_SIDE: usize = 5;
const HEADER_BYTES: usize = 8;

/// Dense row-major grid of nonnegative keypoint beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T: Real> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Real> Heatmap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        if width < MIN_HEATMAP_SIDE || height < MIN_HEATMAP_SIDE {
            return Err(Error::Heatmap(format!(
                "{width}x{height} is smaller than the {MIN_HEATMAP_SIDE}x{MIN_HEATMAP_SIDE} minimum"
            )));
        }
        if values.len() != width * height {
            return Err(Error::Dimension {
                expected: width * height,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::Heatmap(format!(
                "value at index {i} is negative or non-finite"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![T::zero(); width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> T {
        self.values[v * self.width + u]
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::zero(), |a, b| a.max(b))
    }

    /// Index-wise map; negative or non-finite results are rejected.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn cast<U: Real>(&self) -> Heatmap<U> {
        Heatmap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Serializes to the little-endian binary channel format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + 4 * self.values.len());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
        out
    }

    pub fn write_bin(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

impl Heatmap<f32> {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Format(format!(
                "heatmap file truncated: {} bytes, header needs {HEADER_BYTES}",
                bytes.len()
            )));
        }
        let width = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
        let height = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(HEADER_BYTES))
            .ok_or_else(|| Error::Format("heatmap dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "heatmap file is {} bytes; {width}x{height} requires {expected}",
                bytes.len()
            )));
        }
        let values = bytes[HEADER_BYTES..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Heatmap::new(width, height, values).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read_bin(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

/// JSON sidecar naming the keypoint carried by each channel file of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatmapSidecar {
    pub schema_version: u32,
    pub channels: Vec<HeatmapChannel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatmapChannel {
    pub keypoint_id: KeypointId,
    /// Path relative to the sidecar's directory.
    pub file: String,
}

/// Isotropic Gaussian heatmap model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapModel<T: Real> {
    /// Spatial standard deviation in heatmap pixels.
    pub sigma: T,
}

impl<T: Real> HeatmapModel<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    /// Peak value `1 / (2πσ²)` of a Gaussian centred exactly on a pixel.
    pub fn ideal_peak(&self) -> T {
        T::one() / (T::two_pi() * self.sigma * self.sigma)
    }
}

/// Samples `(1/(2πσ²))·exp(−((u−u*)² + (v−v*)²)/(2σ²))` at every pixel centre.
pub fn encode_gaussian<T: Real>(
    u_star: T,
    v_star: T,
    model: &HeatmapModel<T>,
    width: usize,
    height: usize,
) -> Result<Heatmap<T>> {
    HeatmapModel::new(model.sigma)?;
    if width < MIN_HEATMAP_SIDE || height < MIN_HEATMAP_SIDE {
        return Err(Error::Heatmap(format!(
            "{width}x{height} is smaller than the {MIN_HEATMAP_SIDE}x{MIN_HEATMAP_SIDE} minimum"
        )));
    }
    let norm = model.ideal_peak();
    let inv_two_var = T::one() / (T::lit(2.0) * model.sigma * model.sigma);
    // Separable: exp(a + b) = exp(a)·exp(b).
    let gu: Vec<T> = (0..width)
        .map(|u| {
            let du = T::lit(u as f64) - u_star;
            (-du * du * inv_two_var).exp()
        })
        .collect();
    let mut values = Vec::with_capacity(width * height);
    for v in 0..height {
        let dv = T::lit(v as f64) - v_star;
        let gv = (-dv * dv * inv_two_var).exp() * norm;
        values.extend(gu.iter().map(|&g| g * gv));
    }
    Heatmap::new(width, height, values)
}

/// Decoded keypoint location and confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedKeypoint<T: Real> {
    /// Column coordinate, pixels.
    pub u: T,
    /// Row coordinate, pixels.
    pub v: T,
    /// Heatmap value at `peak_location` (the maximum activation).
    pub peak_activation: T,
    /// Integer argmax as `(column, row)`.
    pub peak_location: (usize, usize),
    pub valid: bool,
}

impl<T: Real> DecodedKeypoint<T> {
    pub fn coords(&self) -> Vector2<T> {
        Vector2::new(self.u, self.v)
    }
}

/// Tunables for [`decode_dark`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig<T: Real> {
    /// Added before taking the logarithm so zero pixels stay finite.
    pub epsilon: T,
    /// Per-axis bound on the Newton correction, pixels.
    pub max_offset: T,
    /// Both Hessian eigenvalues must be below `-min_curvature`.
    pub min_curvature: T,
    /// Upper bound on `|λ|max / |λ|min` of the Hessian.
    pub max_condition: T,
}

impl<T: Real> Default for DecodeConfig<T> {
    fn default() -> Self {
        Self {
            epsilon: T::lit(1e-10),
            max_offset: T::one(),
            min_curvature: T::lit(1e-12),
            max_condition: T::lit(1e6),
        }
    }
}

/// Global maximum; ties resolve to the smallest row-major index.
fn argmax<T: Real>(hm: &Heatmap<T>) -> Result<(usize, usize, T)> {
    let mut best = 0;
    let mut best_val = hm.values[0];
    for (i, &val) in hm.values.iter().enumerate().skip(1) {
        if val > best_val {
            best = i;
            best_val = val;
        }
    }
    if best_val <= T::zero() {
        return Err(Error::NoPeak);
    }
    Ok((best % hm.width, best / hm.width, best_val))
}

/// Integer argmax decoding.
pub fn decode_argmax<T: Real>(hm: &Heatmap<T>) -> Result<DecodedKeypoint<T>> {
    let (u, v, peak) = argmax(hm)?;
    Ok(DecodedKeypoint {
        u: T::lit(u as f64),
        v: T::lit(v as f64),
        peak_activation: peak,
        peak_location: (u, v),
        valid: true,
    })
}

/// Distribution-aware sub-pixel decoding on the log-heatmap.
///
/// Falls back to the integer argmax with `valid = false` when the peak is on the
/// border or the log-surface is not a well-conditioned local maximum there.
pub fn decode_dark<T: Real>(
    hm: &Heatmap<T>,
    config: &DecodeConfig<T>,
) -> Result<DecodedKeypoint<T>> {
    let coarse = decode_argmax(hm)?;
    let (mu, mv) = coarse.peak_location;
    let invalid = DecodedKeypoint {
        valid: false,
        ..coarse
    };
    if mu == 0 || mv == 0 || mu + 1 >= hm.width || mv + 1 >= hm.height {
        return Ok(invalid);
    }
    let l = |du: isize, dv: isize| {
        let u = (mu as isize + du) as usize;
        let v = (mv as isize + dv) as usize;
        (hm.get(u, v) + config.epsilon).ln()
    };
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let two = T::lit(2.0);
    let c = l(0, 0);
    let gradient = Vector2::new((l(1, 0) - l(-1, 0)) * half, (l(0, 1) - l(0, -1)) * half);
    let duu = l(1, 0) - two * c + l(-1, 0);
    let dvv = l(0, 1) - two * c + l(0, -1);
    let duv = (l(1, 1) - l(1, -1) - l(-1, 1) + l(-1, -1)) * quarter;
    let hessian = Matrix2::new(duu, duv, duv, dvv);

    // Eigenvalues of the symmetric 2×2 Hessian in closed form.
    let mean = (duu + dvv) * half;
    let radius = (((duu - dvv) * half).powi(2) + duv * duv).sqrt();
    let (lam_hi, lam_lo) = (mean + radius, mean - radius);
    if !(lam_hi < -config.min_curvature) {
        return Ok(invalid);
    }
    if lam_lo.abs() / lam_hi.abs() > config.max_condition {
        return Ok(invalid);
    }
    let Some(inv) = hessian.try_inverse() else {
        return Ok(invalid);
    };
    let step = -(inv * gradient);
    if !step.iter().all(|s| s.is_finite()) {
        return Ok(invalid);
    }
    let clamp = |s: T| s.clamp(-config.max_offset, config.max_offset);
    Ok(DecodedKeypoint {
        u: coarse.u + clamp(step.x),
        v: coarse.v + clamp(step.y),
        valid: true,
        ..coarse
    })
}

/// Gaussian pre-smoothing followed by a rescale that restores the original maximum.
///
/// Near the border the truncated kernel is renormalised over the pixels that exist.
pub fn modulate<T: Real>(hm: &Heatmap<T>, model: &HeatmapModel<T>) -> Result<Heatmap<T>> {
    let sigma = model.sigma;
    let radius = (sigma * T::lit(3.0)).ceil().as_f64() as usize;
    let kernel: Vec<T> = (0..=2 * radius)
        .map(|i| {
            let d = T::lit(i as f64 - radius as f64);
            (-d * d / (T::lit(2.0) * sigma * sigma)).exp()
        })
        .collect();
    let (w, h) = (hm.width, hm.height);
    let blur_1d = |src: &[T], len: usize, stride: usize, offset: usize, dst: &mut [T]| {
        for i in 0..len {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(len - 1);
            let mut acc = T::zero();
            let mut wsum = T::zero();
            for j in lo..=hi {
                let k = kernel[j + radius - i];
                acc += k * src[offset + j * stride];
                wsum += k;
            }
            dst[offset + i * stride] = acc / wsum;
        }
    };
    let mut rows = vec![T::zero(); w * h];
    for v in 0..h {
        blur_1d(&hm.values, w, 1, v * w, &mut rows);
    }
    let mut out = vec![T::zero(); w * h];
    for u in 0..w {
        blur_1d(&rows, h, w, u, &mut out);
    }
    let old_max = hm.max_value();
    let new_max = out.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if new_max > T::zero() {
        let scale = old_max / new_max;
        for x in &mut out {
            *x = (*x * scale).max(T::zero());
        }
    }
    Heatmap::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(sigma: f64) -> HeatmapModel<f64> {
        HeatmapModel::new(sigma).unwrap()
    }

    #[test]
    fn encode_integer_centre_peak() {
        let hm = encode_gaussian(32.0, 32.0, &model(6.0), 64, 64).unwrap();
        let d = decode_argmax(&hm).unwrap();
        assert_eq!(d.peak_location, (32, 32));
        assert_relative_eq!(
            d.peak_activation,
            1.0 / (2.0 * std::f64::consts::PI * 36.0),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            d.peak_activation,
            1.0 / (72.0 * std::f64::consts::PI),
            epsilon = 1e-12
        );
    }

    #[test]
    fn encode_far_off_screen_is_negligible() {
        let hm = encode_gaussian(-100.0, -100.0, &model(6.0), 64, 64).unwrap();
        assert!(hm.max_value() < 1e-30);
    }

    #[test]
    fn encode_sum_matches_continuous_integral() {
        // Oracle: Simpson quadrature of the 1D Gaussian over the same support, squared.
        let sigma = 6.0;
        let centre = 64.0;
        let g = |x: f64| {
            (-(x - centre).powi(2) / (2.0 * sigma * sigma)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let n = 20_000;
        let (a, b) = (-0.5, 127.5);
        let h = (b - a) / n as f64;
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral_1d = s * h / 3.0;
        let hm = encode_gaussian(centre, centre, &model(sigma), 128, 128).unwrap();
        let sum: f64 = hm.values().iter().sum();
        assert!((sum - 1.0).abs() < 1e-6, "sum {sum}");
        assert!((sum - integral_1d * integral_1d).abs() < 1e-6);
    }

    #[test]
    fn encode_rejects_bad_parameters() {
        assert!(HeatmapModel::new(0.0).is_err());
        assert!(encode_gaussian(1.0, 1.0, &HeatmapModel { sigma: -1.0 }, 10, 10).is_err());
        assert!(encode_gaussian(1.0, 1.0, &model(1.0), 4, 10).is_err());
    }

    #[test]
    fn dark_exact_at_integer_centre() {
        let hm = encode_gaussian(20.0, 30.0, &model(6.0), 64, 64).unwrap();
        let d = decode_dark(&hm, &DecodeConfig::default()).unwrap();
        assert!(d.valid);
        assert_eq!((d.u, d.v), (20.0, 30.0));
    }

    #[test]
    fn dark_subpixel_beats_argmax() {
        let hm = encode_gaussian(10.3, 20.7, &model(6.0), 64, 64).unwrap();
        let dark = decode_dark(&hm, &DecodeConfig::default()).unwrap();
        let arg = decode_argmax(&hm).unwrap();
        assert!((dark.u - 10.3).abs() < 0.01 && (dark.v - 20.7).abs() < 0.01);
        assert_eq!((arg.u, arg.v), (10.0, 21.0));
        assert_relative_eq!((arg.u - 10.3).abs(), 0.3, epsilon = 1e-12);
        assert_relative_eq!((arg.v - 20.7).abs(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn dark_degenerate_inputs() {
        let uniform = Heatmap::new(8, 8, vec![1.0; 64]).unwrap();
        let d = decode_dark(&uniform, &DecodeConfig::default()).unwrap();
        assert!(!d.valid);
        assert_eq!(d.peak_location, (0, 0));

        let zeros = Heatmap::<f64>::zeros(8, 8).unwrap();
        assert_eq!(
            decode_dark(&zeros, &DecodeConfig::default()),
            Err(Error::NoPeak)
        );
        assert_eq!(decode_argmax(&zeros), Err(Error::NoPeak));

        // Peak on the border.
        let hm = encode_gaussian(0.2, 30.0, &model(3.0), 64, 64).unwrap();
        let d = decode_dark(&hm, &DecodeConfig::default()).unwrap();
        assert!(!d.valid);
        assert_eq!((d.u, d.v), (0.0, 30.0));
    }

    #[test]
    fn dark_ridge_is_rejected_by_condition_bound() {
        // Constant along u, Gaussian along v: the u-curvature is zero.
        let mut values = Vec::new();
        for v in 0..16 {
            for _u in 0..16 {
                values.push((-(v as f64 - 8.0).powi(2) / 8.0).exp());
            }
        }
        let hm = Heatmap::new(16, 16, values).unwrap();
        assert!(!decode_dark(&hm, &DecodeConfig::default()).unwrap().valid);
    }

    #[test]
    fn argmax_tie_break_and_delta() {
        let mut values = vec![0.0; 49];
        values[10] = 2.0;
        values[30] = 2.0;
        let hm = Heatmap::new(7, 7, values).unwrap();
        assert_eq!(decode_argmax(&hm).unwrap().peak_location, (3, 1));

        let mut values = vec![0.0; 49];
        values[7 * 4 + 5] = 0.25;
        let hm = Heatmap::new(7, 7, values).unwrap();
        let d = decode_argmax(&hm).unwrap();
        assert_eq!(d.peak_location, (5, 4));
        assert!(d.valid);
        assert_eq!(d.peak_activation, 0.25);
    }

    #[test]
    fn decoding_is_invariant_to_positive_scaling() {
        let hm = encode_gaussian(31.4, 17.9, &model(6.0), 64, 64).unwrap();
        let scaled = hm.map(|x| x * 1000.0).unwrap();
        let cfg = DecodeConfig {
            epsilon: 0.0,
            ..DecodeConfig::default()
        };
        let a = decode_dark(&hm, &cfg).unwrap();
        let b = decode_dark(&scaled, &cfg).unwrap();
        assert_eq!(a.peak_location, b.peak_location);
        assert_relative_eq!(a.u, b.u, epsilon = 1e-9);
        assert_relative_eq!(a.v, b.v, epsilon = 1e-9);
    }

    #[test]
    fn heatmap_rejects_invalid_values() {
        assert!(Heatmap::new(5, 5, vec![0.0; 24]).is_err());
        let mut v = vec![0.0; 25];
        v[3] = -1.0;
        assert!(Heatmap::new(5, 5, v.clone()).is_err());
        v[3] = f64::NAN;
        assert!(Heatmap::new(5, 5, v).is_err());
    }

    #[test]
    fn modulate_preserves_peak_and_argmax() {
        let hm = encode_gaussian(25.0, 40.0, &model(6.0), 64, 64).unwrap();
        let m = modulate(&hm, &model(6.0)).unwrap();
        let a = decode_argmax(&hm).unwrap();
        let b = decode_argmax(&m).unwrap();
        assert_eq!(a.peak_location, b.peak_location);
        assert!((a.peak_activation - b.peak_activation).abs() < 1e-12);
    }

    #[test]
    fn modulate_helps_on_noisy_heatmaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = model(6.0);
        let cfg = DecodeConfig::default();
        let (mut plain, mut smoothed) = (0.0, 0.0);
        let trials = 500;
        for _ in 0..trials {
            let (cu, cv) = (rng.random_range(20.0..44.0), rng.random_range(20.0..44.0));
            let hm = encode_gaussian(cu, cv, &m, 64, 64).unwrap();
            let amp = 0.05 * hm.max_value();
            let noisy = Heatmap::new(
                64,
                64,
                hm.values()
                    .iter()
                    .map(|&x| x + rng.random_range(0.0..amp))
                    .collect(),
            )
            .unwrap();
            let d0 = decode_dark(&noisy, &cfg).unwrap();
            let d1 = decode_dark(&modulate(&noisy, &m).unwrap(), &cfg).unwrap();
            plain += ((d0.u - cu).powi(2) + (d0.v - cv).powi(2)).sqrt();
            smoothed += ((d1.u - cu).powi(2) + (d1.v - cv).powi(2)).sqrt();
        }
        assert!(
            smoothed <= plain,
            "modulated {} vs plain {}",
            smoothed / trials as f64,
            plain / trials as f64
        );
    }

    #[test]
    fn binary_format_layout_is_exact() {
        let hm = Heatmap::new(5, 6, (0..30).map(|i| i as f32 * 0.5).collect()).unwrap();
        let bytes = hm.to_bytes();
        assert_eq!(bytes.len(), 8 + 30 * 4);
        assert_eq!(&bytes[0..4], &[5, 0, 0, 0]);
        assert_eq!(&bytes[4..8], &[6, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &0.5f32.to_le_bytes());
        assert_eq!(Heatmap::from_bytes(&bytes).unwrap(), hm);
        assert!(Heatmap::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Heatmap::from_bytes(&bytes[..4]).is_err());
        let mut bad = bytes.clone();
        bad[8..12].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(matches!(Heatmap::from_bytes(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn f32_decode_is_accurate() {
        let m = HeatmapModel::new(6.0f32).unwrap();
        let hm = encode_gaussian(30.25f32, 12.6, &m, 64, 64).unwrap();
        let d = decode_dark(&hm, &DecodeConfig::default()).unwrap();
        assert!((d.u - 30.25).abs() < 0.01 && (d.v - 12.6).abs() < 0.01);
    }

    proptest::proptest! {
        #[test]
        fn decode_stays_within_one_pixel(
            values in proptest::collection::vec(0.0f64..1.0, 100)
        ) {
            let hm = Heatmap::new(10, 10, values).unwrap();
            if let Ok(d) = decode_dark(&hm, &DecodeConfig::default()) {
                let (pu, pv) = d.peak_location;
                proptest::prop_assert!((d.u - pu as f64).abs() <= 1.0);
                proptest::prop_assert!((d.v - pv as f64).abs() <= 1.0);
                proptest::prop_assert_eq!(d.peak_activation, hm.get(pu, pv));
            }
        }

        #[test]
        fn integer_shift_equivariance(
            cu in 20.0f64..30.0, cv in 20.0f64..30.0, du in -8i32..8, dv in -8i32..8
        ) {
            let m = model(6.0);
            let cfg = DecodeConfig::default();
            let a = decode_dark(&encode_gaussian(cu, cv, &m, 64, 64).unwrap(), &cfg).unwrap();
            let b = decode_dark(&encode_gaussian(cu + du as f64, cv + dv as f64, &m, 64, 64).unwrap(), &cfg).unwrap();
            proptest::prop_assert!((b.u - a.u - du as f64).abs() < 1e-9);
            proptest::prop_assert!((b.v - a.v - dv as f64).abs() < 1e-9);
        }
    }
}
