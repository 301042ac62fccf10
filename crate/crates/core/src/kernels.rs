//! Super kernels: `φ = F^{-1} ψ` for an even, smooth `ψ` that equals one near the
//! origin, so that `∫ φ = 1` and every higher moment of `φ` vanishes.

use std::io::Write;
use std::ops::RangeInclusive;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MASS_TOLERANCE: f64 = 1e-8;
pub const MOMENT_TOLERANCE: f64 = 1e-6;
pub const CHECKED_MOMENTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    /// `ψ = 1` on `|ξ| ≤ plateau`.
    pub plateau: f64,
    /// Width of the smooth descent of `ψ` from 1 to 0.
    pub rolloff: f64,
    /// Half-width of the spatial grid `[-T, T)`.
    pub half_width: f64,
    /// Grid size, a power of two ≥ 4096.
    pub points: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            plateau: 8.0,
            rolloff: 24.0,
            half_width: 25.0,
            points: 4096,
        }
    }
}

/// `φ` sampled at `y_j = (j - M/2) h`, `h = 2T / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperKernel {
    params: KernelParams,
    h: f64,
    y: Vec<f64>,
    phi: Vec<f64>,
}

/// `C^∞` step: 0 for `u ≤ 0`, 1 for `u ≥ 1`, built from `e^{-1/u}`.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

/// `ψ(ξ) = 1 - step((|ξ| - plateau) / rolloff)`.
pub fn plateau_taper(params: &KernelParams, xi: f64) -> f64 {
    1.0 - smooth_step((xi.abs() - params.plateau) / params.rolloff)
}

impl SuperKernel {
    pub fn build(params: KernelParams) -> Result<Self> {
        let KernelParams {
            plateau,
            rolloff,
            half_width,
            points,
        } = params;
        if !(plateau > 0.0 && rolloff > 0.0 && half_width > 0.0) {
            return Err(Error::arg("kernel", "plateau, rolloff and half_width must be positive"));
        }
        if !points.is_power_of_two() || points < 1 << 12 {
            return Err(Error::arg("points", "must be a power of two ≥ 4096"));
        }
        let h = 2.0 * half_width / points as f64;
        if plateau + rolloff >= std::f64::consts::PI / h {
            return Err(Error::arg(
                "points",
                "grid too coarse: the taper reaches past the Nyquist frequency",
            ));
        }
        let phi = spectral_values(&params, h, 0);
        let y: Vec<f64> = (0..points)
            .map(|j| (j as f64 - (points / 2) as f64) * h)
            .collect();
        let mut kernel = SuperKernel { params, h, y, phi };
        let mass = kernel.moment(0);
        kernel.phi.iter_mut().for_each(|v| *v /= mass);
        kernel.check()?;
        Ok(kernel)
    }

    fn check(&self) -> Result<()> {
        let mass = self.moment(0);
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::KernelMoment { k: 0, value: mass });
        }
        for k in 1..=CHECKED_MOMENTS {
            let m = self.moment(k);
            if !(m.abs() <= MOMENT_TOLERANCE) {
                return Err(Error::KernelMoment { k, value: m });
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &[f64] {
        &self.y
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    /// `∫ y^k φ(y) dy` by the trapezoid rule on the periodic grid.
    pub fn moment(&self, k: usize) -> f64 {
        self.h
            * self
                .y
                .iter()
                .zip(&self.phi)
                .map(|(y, p)| y.powi(k as i32) * p)
                .sum::<f64>()
    }

    pub fn l1_norm(&self) -> f64 {
        self.h * self.phi.iter().map(|p| p.abs()).sum::<f64>()
    }

    /// `∫ |y|^m |φ^{(order)}(y)| dy`, finite for a Schwartz kernel.
    pub fn weighted_derivative_norm(&self, m: usize, order: usize) -> f64 {
        let mass = spectral_values(&self.params, self.h, 0)
            .iter()
            .sum::<f64>()
            * self.h;
        let deriv = spectral_values(&self.params, self.h, order);
        self.h
            * self
                .y
                .iter()
                .zip(&deriv)
                .map(|(y, v)| y.abs().powi(m as i32) * (v / mass).abs())
                .sum::<f64>()
    }

    /// `φ_δ(y) = δ^{-1} φ(y / δ)` by linear interpolation; zero off the grid.
    pub fn eval_scaled(&self, delta: f64, y: f64) -> f64 {
        let u = y / delta;
        let pos = (u - self.y[0]) / self.h;
        if pos < 0.0 || pos >= (self.y.len() - 1) as f64 {
            return 0.0;
        }
        let j = pos.floor() as usize;
        let t = pos - j as f64;
        ((1.0 - t) * self.phi[j] + t * self.phi[j + 1]) / delta
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::arg("output", e.to_string());
        out.write_record(["y", "phi"]).map_err(io)?;
        for (y, p) in self.y.iter().zip(&self.phi) {
            out.write_record([format!("{y:.12e}"), format!("{p:.12e}")])
                .map_err(io)?;
        }
        out.flush().map_err(|e| Error::arg("output", e.to_string()))
    }
}

/// `φ^{(order)}(y_j) = (1/2π) ∫ (iξ)^order ψ(ξ) e^{iξ y_j} dξ`, discretized on the FFT
/// frequency grid and symmetrized so that `φ` is exactly even (odd for odd `order`).
fn spectral_values(params: &KernelParams, h: f64, order: usize) -> Vec<f64> {
    let m = params.points;
    let dxi = 2.0 * std::f64::consts::PI / (m as f64 * h);
    let mut buf: Vec<Complex<f64>> = (0..m)
        .map(|k| {
            let kk = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
            let xi = kk * dxi;
            let psi = plateau_taper(params, xi);
            // (iξ)^order, then the shift e^{iξ y_0} with y_0 = -M h / 2 = -T, i.e. (-1)^k
            let mut c = Complex::new(psi, 0.0) * Complex::new(0.0, xi).powu(order as u32);
            if k % 2 == 1 {
                c = -c;
            }
            c
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = dxi / (2.0 * std::f64::consts::PI);
    let mut vals: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
    let parity = if order % 2 == 0 { 1.0 } else { -1.0 };
    for j in 1..m / 2 {
        let avg = 0.5 * (vals[m / 2 + j] + parity * vals[m / 2 - j]);
        vals[m / 2 + j] = avg;
        vals[m / 2 - j] = parity * avg;
    }
    if parity < 0.0 {
        vals[m / 2] = 0.0;
    }
    vals
}

/// `SuperKernel::build` with explicit parameters.
pub fn build_super_kernel(plateau: f64, rolloff: f64, half_width: f64, points: usize) -> Result<SuperKernel> {
    SuperKernel::build(KernelParams {
        plateau,
        rolloff,
        half_width,
        points,
    })
}

/// `(f * φ_δ)(x) = ∫ φ(u) f(x - δu) du` by the trapezoid rule on the kernel grid.
///
/// `domain` is where `f` may be evaluated; the window `[x - δT, x + δT]` must lie inside it.
pub fn mollify(
    f: impl Fn(f64) -> f64,
    domain: RangeInclusive<f64>,
    kernel: &SuperKernel,
    delta: f64,
    x: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::arg("delta", "must lie in (0, 1]"));
    }
    let reach = delta * kernel.params.half_width;
    if !(domain.contains(&(x - reach)) && domain.contains(&(x + reach))) {
        return Err(Error::arg("x", "convolution window exceeds the domain of f"));
    }
    Ok(kernel.h
        * kernel
            .y
            .iter()
            .zip(&kernel.phi)
            .map(|(y, p)| p * f(x - delta * y))
            .sum::<f64>())
}
