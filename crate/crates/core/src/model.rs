//! Physical parameters, prescribed coefficient fields, viscosity, the
//! time-step scaling and the quadratic ocean drag.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::Expr;
use crate::mesh::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("concentration {0} outside [0, 1]")]
    ConcentrationOutOfRange(f64),
    #[error("thickness {h} below minimum {h_min}")]
    ThicknessBelowMinimum { h: f64, h_min: f64 },
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(&'static str),
    #[error("field `{field}` at ({x}, {y}, t = {t}): {message}")]
    Field {
        field: String,
        x: f64,
        y: f64,
        t: f64,
        message: String,
    },
}

/// Material and numerical constants. Defaults are standard sea-ice values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Ice density, kg/m³.
    pub rho: f64,
    /// Seawater density, kg/m³.
    pub rho_o: f64,
    /// Water drag coefficient.
    pub c_o: f64,
    /// Compressive strength, Pa.
    pub p_star: f64,
    /// Maximum creep, 1/s.
    pub c_m: f64,
    /// Compaction hardening.
    pub c_hard: f64,
    /// Minimum thickness of active ice, m.
    pub h_min: f64,
    /// Time step, s.
    pub dt: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            rho: 900.0,
            rho_o: 1028.0,
            c_o: 5e-3,
            p_star: 25e3,
            c_m: 2e-9,
            c_hard: 20.0,
            h_min: 0.05,
            dt: 600.0,
        }
    }
}

impl PhysicalParams {
    /// Checks positivity. The drag coefficient may be zero, which makes the
    /// problem linear.
    pub fn validate(&self) -> Result<(), ModelError> {
        let checks = [
            ("rho", self.rho),
            ("rho_o", self.rho_o),
            ("p_star", self.p_star),
            ("c_m", self.c_m),
            ("c_hard", self.c_hard),
            ("h_min", self.h_min),
            ("dt", self.dt),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::NonPositiveParameter(name));
            }
        }
        if !(self.c_o >= 0.0 && self.c_o.is_finite()) {
            return Err(ModelError::NonPositiveParameter("c_o"));
        }
        Ok(())
    }

    /// `ρ_o C_o`.
    pub fn drag_factor(&self) -> f64 {
        self.rho_o * self.c_o
    }
}

/// Viscosity and scaling bounds on the active domain for thickness in
/// `[h_min, h_max]` and any admissible concentration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedBounds {
    pub eta_min: f64,
    pub eta_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl DerivedBounds {
    pub fn new(params: &PhysicalParams, h_max: f64) -> Self {
        DerivedBounds {
            eta_min: params.h_min * params.p_star * (-params.c_hard).exp() / params.c_m,
            eta_max: h_max * params.p_star / params.c_m,
            beta_min: params.dt / (h_max * params.rho),
            beta_max: params.dt / (params.h_min * params.rho),
        }
    }
}

/// Shear viscosity `h P* exp(C (A - 1)) / c_m`.
pub fn eta(a: f64, h: f64, params: &PhysicalParams) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&a) {
        return Err(ModelError::ConcentrationOutOfRange(a));
    }
    if !(h >= params.h_min) {
        return Err(ModelError::ThicknessBelowMinimum { h, h_min: params.h_min });
    }
    Ok(h * params.p_star / params.c_m * (params.c_hard * (a - 1.0)).exp())
}

/// Time-step scaling `Δt / (h ρ)`.
pub fn beta(h: f64, params: &PhysicalParams) -> Result<f64, ModelError> {
    if !(h >= params.h_min) {
        return Err(ModelError::ThicknessBelowMinimum { h, h_min: params.h_min });
    }
    Ok(params.dt / (h * params.rho))
}

/// `ρ_o C_o |w| w` with `w = u - v_o`.
pub fn ocean_drag(u: [f64; 2], v_o: [f64; 2], params: &PhysicalParams) -> [f64; 2] {
    let w = [u[0] - v_o[0], u[1] - v_o[1]];
    let s = params.drag_factor() * w[0].hypot(w[1]);
    [s * w[0], s * w[1]]
}

/// Directional derivative of [`ocean_drag`] with respect to `u`:
/// `ρ_o C_o (|w| d + (w·d)/|w| w)`, zero at `w = 0`.
pub fn ocean_drag_derivative(u: [f64; 2], v_o: [f64; 2], direction: [f64; 2], params: &PhysicalParams) -> [f64; 2] {
    let w = [u[0] - v_o[0], u[1] - v_o[1]];
    let norm = w[0].hypot(w[1]);
    if norm == 0.0 {
        return [0.0, 0.0];
    }
    let k = params.drag_factor();
    let wd = (w[0] * direction[0] + w[1] * direction[1]) / norm;
    [
        k * (norm * direction[0] + wd * w[0]),
        k * (norm * direction[1] + wd * w[1]),
    ]
}

type FieldFn = dyn Fn(Point, f64) -> Result<f64, String> + Send + Sync;

/// A named scalar field of space and time.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    f: Arc<FieldFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

impl ScalarField {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(Point, f64) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            name: name.into(),
            f: Arc::new(move |x, t| Ok(f(x, t))),
        }
    }

    pub fn constant(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, move |_, _| value)
    }

    pub fn from_expr(name: impl Into<String>, expr: Expr) -> Self {
        ScalarField {
            name: name.into(),
            f: Arc::new(move |x, t| expr.eval(x[0], x[1], t).map_err(|e| e.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: Point, t: f64) -> Result<f64, ModelError> {
        let v = (self.f)(x, t).map_err(|message| self.error(x, t, message))?;
        if !v.is_finite() {
            return Err(self.error(x, t, format!("non-finite value {v}")));
        }
        Ok(v)
    }

    fn error(&self, x: Point, t: f64, message: String) -> ModelError {
        ModelError::Field {
            field: self.name.clone(),
            x: x[0],
            y: x[1],
            t,
            message,
        }
    }
}

/// Prescribed fields: concentration `A`, thickness `h`, ocean velocity and an
/// optional body force (used for manufactured solutions; enters the momentum
/// residual only).
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub concentration: ScalarField,
    pub thickness: ScalarField,
    pub ocean_velocity: [ScalarField; 2],
    pub body_force: Option<[ScalarField; 2]>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub params: PhysicalParams,
    pub fields: CoefficientFields,
}

/// Coefficients sampled at one point of the active domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub eta: f64,
    pub beta: f64,
    pub v_o: [f64; 2],
    pub g: [f64; 2],
}

impl Model {
    pub fn new(params: PhysicalParams, fields: CoefficientFields) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Model { params, fields })
    }

    /// Samples all coefficients. Active cells are selected by their averaged
    /// thickness, so a pointwise thickness below `h_min` inside an active
    /// cell is lifted to `h_min`.
    pub fn coefficients_at(&self, x: Point, t: f64) -> Result<PointCoefficients, ModelError> {
        let a = self.fields.concentration.eval(x, t)?;
        let h = self.fields.thickness.eval(x, t)?;
        if h < 0.0 {
            return Err(ModelError::Field {
                field: self.fields.thickness.name().to_string(),
                x: x[0],
                y: x[1],
                t,
                message: format!("negative thickness {h}"),
            });
        }
        let h = h.max(self.params.h_min);
        let v_o = [
            self.fields.ocean_velocity[0].eval(x, t)?,
            self.fields.ocean_velocity[1].eval(x, t)?,
        ];
        let g = match &self.fields.body_force {
            Some([gx, gy]) => [gx.eval(x, t)?, gy.eval(x, t)?],
            None => [0.0, 0.0],
        };
        Ok(PointCoefficients {
            eta: eta(a, h, &self.params)?,
            beta: beta(h, &self.params)?,
            v_o,
            g,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defaults_match_standard_values() {
        let p = PhysicalParams::default();
        assert_eq!((p.rho, p.rho_o, p.c_o, p.p_star, p.c_m, p.c_hard), (900.0, 1028.0, 5e-3, 25e3, 2e-9, 20.0));
        p.validate().unwrap();
    }

    #[test]
    fn viscosity_values() {
        let p = PhysicalParams::default();
        assert!((eta(1.0, 1.0, &p).unwrap() - 1.25e13).abs() <= 1e-15 * 1.25e13);
        let low = eta(0.0, 1.0, &p).unwrap();
        let expected = 1.25e13 * (-20.0f64).exp();
        assert!((low - expected).abs() <= 1e-15 * expected);
        assert!((low - 2.5764e4).abs() < 1.0, "{low}");
        assert_eq!(eta(1.2, 1.0, &p), Err(ModelError::ConcentrationOutOfRange(1.2)));
        assert_eq!(eta(-0.1, 1.0, &p), Err(ModelError::ConcentrationOutOfRange(-0.1)));
        assert!(matches!(eta(0.5, 0.01, &p), Err(ModelError::ThicknessBelowMinimum { .. })));
    }

    #[test]
    fn viscosity_sandwich() {
        let p = PhysicalParams::default();
        let h_max = 5.0;
        let b = DerivedBounds::new(&p, h_max);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            let a: f64 = rng.gen_range(0.0..=1.0);
            let h = rng.gen_range(p.h_min..=h_max);
            let e = eta(a, h, &p).unwrap();
            assert!(b.eta_min * (1.0 - 1e-15) <= e && e <= b.eta_max * (1.0 + 1e-15));
            let bt = beta(h, &p).unwrap();
            assert!(b.beta_min * (1.0 - 1e-15) <= bt && bt <= b.beta_max * (1.0 + 1e-15));
        }
    }

    #[test]
    fn beta_values() {
        let p = PhysicalParams::default();
        assert!((beta(1.0, &p).unwrap() - 2.0 / 3.0).abs() < 1e-16);
        let p2 = PhysicalParams { dt: 1200.0, ..p };
        assert_eq!(beta(1.0, &p2).unwrap(), 2.0 * beta(1.0, &p).unwrap());
        assert!(beta(p.h_min / 2.0, &p).is_err());
    }

    #[test]
    fn drag_values() {
        let p = PhysicalParams::default();
        assert_eq!(ocean_drag([0.3, -0.1], [0.3, -0.1], &p), [0.0, 0.0]);
        let d = ocean_drag([3.0, 4.0], [0.0, 0.0], &p);
        assert!((d[0] - 77.1).abs() < 1e-12 && (d[1] - 102.8).abs() < 1e-12, "{d:?}");
        let v = [0.2, -0.4];
        let u = [1.0, 0.5];
        let mirrored = [2.0 * v[0] - u[0], 2.0 * v[1] - u[1]];
        let (a, b) = (ocean_drag(u, v, &p), ocean_drag(mirrored, v, &p));
        assert!((a[0] + b[0]).abs() < 1e-15 && (a[1] + b[1]).abs() < 1e-15);
    }

    #[test]
    fn drag_derivative_values() {
        let p = PhysicalParams::default();
        assert_eq!(ocean_drag_derivative([1.0, 1.0], [1.0, 1.0], [0.3, 0.7], &p), [0.0, 0.0]);
        let d = ocean_drag_derivative([1.0, 0.0], [0.0, 0.0], [1.0, 0.0], &p);
        assert_eq!(d, [2.0 * p.drag_factor(), 0.0]);
    }

    #[test]
    fn drag_derivative_matches_finite_differences() {
        let p = PhysicalParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut n = 0;
        while n < 50 {
            let u: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let v: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if (u[0] - v[0]).hypot(u[1] - v[1]) < 0.01 {
                continue;
            }
            n += 1;
            let d = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let exact = ocean_drag_derivative(u, v, d, &p);
            let scale = exact[0].hypot(exact[1]);
            let best = [1e-4, 1e-5, 1e-6, 1e-7]
                .iter()
                .map(|&h| {
                    let fp = ocean_drag([u[0] + h * d[0], u[1] + h * d[1]], v, &p);
                    let fm = ocean_drag([u[0] - h * d[0], u[1] - h * d[1]], v, &p);
                    let fd = [(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)];
                    (fd[0] - exact[0]).hypot(fd[1] - exact[1]) / scale
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-6, "relative error {best}");
        }
    }

    #[test]
    fn taylor_remainder_is_quadratic() {
        let p = PhysicalParams::default();
        let (u, v, d): ([f64; 2], [f64; 2], [f64; 2]) = ([0.4, -0.2], [0.0, 0.1], [0.3, 0.9]);
        let rem = |h: f64| {
            let f1 = ocean_drag([u[0] + h * d[0], u[1] + h * d[1]], v, &p);
            let f0 = ocean_drag(u, v, &p);
            let df = ocean_drag_derivative(u, v, d, &p);
            (f1[0] - f0[0] - h * df[0]).hypot(f1[1] - f0[1] - h * df[1])
        };
        for h in [1e-2, 1e-3] {
            let ratio = rem(h) / rem(h / 2.0);
            assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
        }
    }

    #[test]
    fn local_lipschitz_bound() {
        // |τ(u) - τ(v)| ≤ 2 ρ_o C_o (|u| + |v|) |u - v| for the shifted drag
        let p = PhysicalParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let eps = 0.5;
            let u: [f64; 2] = [rng.gen_range(-eps..eps), rng.gen_range(-eps..eps)];
            let v: [f64; 2] = [rng.gen_range(-eps..eps), rng.gen_range(-eps..eps)];
            let (a, b) = (ocean_drag(u, [0.0; 2], &p), ocean_drag(v, [0.0; 2], &p));
            let lhs = (a[0] - b[0]).hypot(a[1] - b[1]);
            let rhs = 2.0 * p.drag_factor() * (u[0].hypot(u[1]) + v[0].hypot(v[1])) * (u[0] - v[0]).hypot(u[1] - v[1]);
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fields_from_expressions() {
        let f = ScalarField::from_expr("A", Expr::parse("x/500000").unwrap());
        assert_eq!(f.eval([250000.0, 0.0], 0.0).unwrap(), 0.5);
        let bad = ScalarField::from_expr("h", Expr::parse("1/x").unwrap());
        let err = bad.eval([0.0, 1.0], 0.0).unwrap_err();
        assert!(err.to_string().contains("division by zero"), "{err}");
    }

    #[test]
    fn coefficients_reject_bad_concentration() {
        let m = Model::new(
            PhysicalParams::default(),
            CoefficientFields {
                concentration: ScalarField::constant("A", 1.5),
                thickness: ScalarField::constant("h", 1.0),
                ocean_velocity: [ScalarField::constant("v_o_x", 0.0), ScalarField::constant("v_o_y", 0.0)],
                body_force: None,
            },
        )
        .unwrap();
        assert_eq!(m.coefficients_at([0.0, 0.0], 0.0), Err(ModelError::ConcentrationOutOfRange(1.5)));
    }
}
