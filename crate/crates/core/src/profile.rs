//! Radial profiles used for mollifiers, Littlewood-Paley pieces and kernels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `(1 - r^2)^4` on the unit ball.
    Bump,
    /// `exp(-r^2)`.
    Gaussian,
    /// `(1 + r)^{-a}`, integrable when `a > n`.
    PowerDecay { exponent: f64 },
    /// `(2n - 4 r^2) exp(-r^2)`, minus the Laplacian of the Gaussian.
    MexicanHat,
}

/// A radial profile `amplitude * raw(|x|)` in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub dim: usize,
    pub amplitude: f64,
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// `Gamma(n / 2)` for a positive integer `n`.
fn gamma_half(n: usize) -> f64 {
    let mut g = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if n % 2 == 0 { 2 } else { 1 };
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

impl Profile {
    pub fn new(kind: ProfileKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Profile("dimension must be positive".into()));
        }
        if let ProfileKind::PowerDecay { exponent } = kind {
            if !(exponent > dim as f64) {
                return Err(Error::Profile(format!(
                    "power decay exponent {exponent} must exceed the dimension {dim}"
                )));
            }
        }
        Ok(Profile { kind, dim, amplitude: 1.0 })
    }

    /// Profile rescaled to integral one.
    pub fn unit_mass(kind: ProfileKind, dim: usize) -> Result<Self> {
        let p = Profile::new(kind, dim)?;
        let mass = p.integral();
        if mass == 0.0 {
            return Err(Error::Profile("mean-zero profile cannot be normalised to mass one".into()));
        }
        Ok(p.scaled(1.0 / mass))
    }

    pub fn scaled(self, c: f64) -> Self {
        Profile { amplitude: self.amplitude * c, ..self }
    }

    pub fn value(&self, r: f64) -> f64 {
        let raw = match self.kind {
            ProfileKind::Bump => {
                if r < 1.0 {
                    (1.0 - r * r).powi(4)
                } else {
                    0.0
                }
            }
            ProfileKind::Gaussian => (-r * r).exp(),
            ProfileKind::PowerDecay { exponent } => (1.0 + r).powf(-exponent),
            ProfileKind::MexicanHat => (2.0 * self.dim as f64 - 4.0 * r * r) * (-r * r).exp(),
        };
        self.amplitude * raw
    }

    /// `phi_t(x) = t^{-n} phi(x / t)` at distance `r`.
    pub fn dilated(&self, t: f64, r: f64) -> f64 {
        t.powi(-(self.dim as i32)) * self.value(r / t)
    }

    /// Closed-form integral over `R^n`.
    pub fn integral(&self) -> f64 {
        let n = self.dim;
        let raw = match self.kind {
            ProfileKind::Bump => {
                let prod: f64 = (0..5).map(|j| n as f64 / 2.0 + j as f64).product();
                sphere_area(n) / 2.0 * 24.0 / prod
            }
            ProfileKind::Gaussian => PI.powf(n as f64 / 2.0),
            ProfileKind::PowerDecay { exponent } => {
                // sphere_area * B(n, a - n)
                let mut beta = 1.0;
                for k in 0..n {
                    beta *= if k == 0 { 1.0 / (exponent - n as f64) } else { k as f64 / (exponent - n as f64 + k as f64) };
                }
                sphere_area(n) * beta
            }
            ProfileKind::MexicanHat => 0.0,
        };
        self.amplitude * raw
    }

    /// Radius outside which the profile vanishes, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Bump => Some(1.0),
            _ => None,
        }
    }

    /// Radius beyond which the mass of `|phi|` is at most `eps` (relative to
    /// the amplitude); exact support for compact profiles.
    pub fn tail_radius(&self, eps: f64) -> f64 {
        match self.kind {
            ProfileKind::Bump => 1.0,
            // exp(-r^2) tails: r^2 = ln(1/eps) plus a polynomial margin
            ProfileKind::Gaussian | ProfileKind::MexicanHat => {
                let base = (1.0 / eps).ln().max(1.0).sqrt();
                base + 1.0 + self.dim as f64
            }
            ProfileKind::PowerDecay { exponent } => {
                // omega_n int_R^inf r^{n-1} (1+r)^{-a} dr <= omega_n (1+R)^{n-a} / (a-n)
                let d = exponent - self.dim as f64;
                (sphere_area(self.dim) / (d * eps)).powf(1.0 / d)
            }
        }
    }

    /// Fourier transform `int phi(x) e^{-i x.xi} dx` along a coordinate axis,
    /// when a closed form or a one-dimensional quadrature is available.
    pub fn fourier(&self, xi: f64) -> Option<f64> {
        let n = self.dim as f64;
        let g = PI.powf(n / 2.0) * (-xi * xi / 4.0).exp();
        match self.kind {
            ProfileKind::Gaussian => Some(self.amplitude * g),
            ProfileKind::MexicanHat => Some(self.amplitude * xi * xi * g),
            ProfileKind::Bump if self.dim == 1 => {
                let steps = 4096;
                let h = 2.0 / steps as f64;
                let s: f64 = (0..steps)
                    .map(|k| {
                        let x = -1.0 + (k as f64 + 0.5) * h;
                        self.value(x.abs()) * (x * xi).cos()
                    })
                    .sum();
                Some(s * h)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radial_quadrature(p: &Profile, rmax: f64) -> f64 {
        let steps = 200_000;
        let dr = rmax / steps as f64;
        let s: f64 = (0..steps)
            .map(|k| {
                let r = (k as f64 + 0.5) * dr;
                r.powi(p.dim as i32 - 1) * p.value(r)
            })
            .sum();
        sphere_area(p.dim) * s * dr
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        for n in 1..=3 {
            for kind in [ProfileKind::Bump, ProfileKind::Gaussian, ProfileKind::MexicanHat] {
                let p = Profile::new(kind, n).unwrap();
                let q = radial_quadrature(&p, 12.0);
                assert!((q - p.integral()).abs() < 1e-7, "{kind:?} n={n}: {q} vs {}", p.integral());
            }
        }
        let p = Profile::new(ProfileKind::PowerDecay { exponent: 4.0 }, 2).unwrap();
        // 2 pi B(2, 2) = pi / 3
        assert!((p.integral() - PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn unit_mass_bump() {
        let p = Profile::unit_mass(ProfileKind::Bump, 1).unwrap();
        assert!((p.integral() - 1.0).abs() < 1e-15);
        // c_1 = 315 / 256
        assert!((p.value(0.0) - 315.0 / 256.0).abs() < 1e-14);
        assert!(Profile::unit_mass(ProfileKind::MexicanHat, 1).is_err());
    }

    #[test]
    fn rejects_non_integrable_power() {
        assert!(Profile::new(ProfileKind::PowerDecay { exponent: 1.0 }, 1).is_err());
    }

    #[test]
    fn tail_radius_bounds_power_tail() {
        let p = Profile::new(ProfileKind::PowerDecay { exponent: 3.0 }, 1).unwrap();
        let r = p.tail_radius(1e-3);
        // exact tail 2 * int_R^inf (1+r)^{-3} dr = (1+R)^{-2}
        assert!((1.0 + r).powi(-2) <= 1e-3);
    }

    #[test]
    fn mexican_hat_transform() {
        let p = Profile::new(ProfileKind::MexicanHat, 1).unwrap();
        let xi: f64 = 1.7;
        let steps = 40_000;
        let h = 24.0 / steps as f64;
        let direct: f64 = (0..steps)
            .map(|k| {
                let x = -12.0 + (k as f64 + 0.5) * h;
                p.value(x.abs()) * (x * xi).cos()
            })
            .sum::<f64>()
            * h;
        assert!((direct - p.fourier(xi).unwrap()).abs() < 1e-9);
    }
}
