use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Gauge, Mesh, Vec3};

/// Change of variables between the physical flow `(x, t)` and the rescaled
/// flow `(ξ, s)` about a base point `(x₀, t₀)`:
/// `λ = (−2(t − t₀))^{-1/2}`, `ξ = λ (x − x₀)`, `s = −½ log(t₀ − t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeMap {
    pub base_point: Vec3,
    pub base_time: f64,
}

impl Default for GaugeMap {
    fn default() -> Self {
        Self {
            base_point: Vec3::zeros(),
            base_time: 0.0,
        }
    }
}

impl GaugeMap {
    pub fn new(base_point: Vec3, base_time: f64) -> Self {
        Self {
            base_point,
            base_time,
        }
    }

    fn remaining(&self, t: f64) -> Result<f64> {
        let tau = self.base_time - t;
        if tau > 0.0 && tau.is_finite() {
            Ok(tau)
        } else {
            Err(Error::TimeNotBeforeBase {
                t,
                t0: self.base_time,
            })
        }
    }

    pub fn lambda(&self, t: f64) -> Result<f64> {
        Ok((2.0 * self.remaining(t)?).sqrt().recip())
    }

    pub fn s_of_t(&self, t: f64) -> Result<f64> {
        Ok(-0.5 * self.remaining(t)?.ln())
    }

    pub fn t_of_s(&self, s: f64) -> f64 {
        self.base_time - (-2.0 * s).exp()
    }

    /// `λ(t(s)) = e^s / √2`.
    pub fn lambda_of_s(&self, s: f64) -> f64 {
        s.exp() / std::f64::consts::SQRT_2
    }

    /// `(λ, s)` at a physical time.
    pub fn maps(&self, t: f64) -> Result<(f64, f64)> {
        Ok((self.lambda(t)?, self.s_of_t(t)?))
    }

    /// Relative residual of the identity `e^s = √2 λ(t)`.
    pub fn identity_residual(&self, t: f64) -> Result<f64> {
        let (lambda, s) = self.maps(t)?;
        let rhs = std::f64::consts::SQRT_2 * lambda;
        Ok((s.exp() - rhs).abs() / rhs)
    }

    pub fn rescale_point(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        Ok((x - self.base_point) * self.lambda(t)?)
    }

    /// Maps a physical-gauge mesh at time `t` to the rescaled gauge.
    pub fn rescale_surface(&self, mesh: &Mesh, t: f64) -> Result<Mesh> {
        if mesh.gauge != Gauge::Physical {
            return Err(Error::GaugeMismatch {
                expected: Gauge::Physical,
                found: mesh.gauge,
            });
        }
        let lambda = self.lambda(t)?;
        let mut out = mesh.clone();
        for v in &mut out.vertices {
            *v -= self.base_point;
        }
        let mut out = out.scaled(lambda);
        out.gauge = Gauge::Rescaled;
        Ok(out)
    }

    /// Inverse of [`rescale_surface`](Self::rescale_surface) at rescaled time `s`.
    pub fn unrescale_surface(&self, mesh: &Mesh, s: f64) -> Result<Mesh> {
        if mesh.gauge != Gauge::Rescaled {
            return Err(Error::GaugeMismatch {
                expected: Gauge::Rescaled,
                found: mesh.gauge,
            });
        }
        let lambda = self.lambda_of_s(s);
        let mut out = mesh.scaled(lambda.recip());
        for v in &mut out.vertices {
            *v += self.base_point;
        }
        out.gauge = Gauge::Physical;
        Ok(out)
    }
}
