//! Line-based `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::expr::Expr;
use crate::lsq::Mode;
use crate::model::{CoefficientFields, Model, PhysicalParams, ScalarField};
use crate::par::Execution;
use crate::solver::{GaussNewtonConfig, Preconditioner, SigmaInit};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, message: impl Into<String>) -> Self {
        ConfigError {
            file: None,
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(path) = &self.file {
            write!(f, "{}: ", path.display())?;
        }
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError::new(line, message)
}

/// Boundary tags of a generated square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareBoundary {
    Dirichlet,
    Neumann,
    /// Dirichlet on `x = 0` and `x = L`, Neumann on the other two sides.
    DirichletX,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Square {
        n: usize,
        length: f64,
        boundary: SquareBoundary,
    },
    File(PathBuf),
}

/// Which states are written as VTK files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtkOutput {
    None,
    Final,
    Every,
}

/// A field given as an expression, with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    pub source: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldExprs {
    pub concentration: FieldExpr,
    pub thickness: FieldExpr,
    pub ocean_velocity: [FieldExpr; 2],
    pub initial_velocity: Option<[FieldExpr; 2]>,
    pub body_force: Option<[FieldExpr; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub params: PhysicalParams,
    pub fields: FieldExprs,
    pub mode: Mode,
    pub n_steps: usize,
    pub t0: f64,
    pub gn: GaussNewtonConfig,
    pub sigma_init: SigmaInit,
    pub output_dir: PathBuf,
    pub vtk: VtkOutput,
    pub levels: usize,
    pub quadrature_degree: usize,
    pub execution: Execution,
}

const KEYS: &[&str] = &[
    "mesh_file",
    "square_n",
    "square_length",
    "square_boundary",
    "rho",
    "rho_o",
    "c_o",
    "p_star",
    "c_m",
    "c_hard",
    "h_min",
    "dt",
    "A",
    "h",
    "v_o_x",
    "v_o_y",
    "u0_x",
    "u0_y",
    "g_x",
    "g_y",
    "mode",
    "n_steps",
    "t0",
    "gn_tol",
    "gn_max_iter",
    "gn_damping",
    "gn_gradient_tol",
    "cg_tol",
    "cg_max_iter",
    "preconditioner",
    "sigma_init",
    "output_dir",
    "vtk",
    "levels",
    "quadrature_degree",
    "execution",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| err(Some(line), format!("invalid value '{v}' for '{key}': {e}"))),
        }
    }

    fn number(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.parsed::<f64>(key)?.unwrap_or(default))
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], default: T) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                err(Some(line), format!("invalid value '{v}' for '{key}' (expected one of {})", names.join(", ")))
            }),
        }
    }

    fn expr(&mut self, key: &str) -> Result<Option<FieldExpr>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => Expr::parse(&v)
                .map(|expr| Some(FieldExpr { source: v.clone(), expr }))
                .map_err(|e| err(Some(line), format!("invalid expression for '{key}': {e}"))),
        }
    }

    fn required_expr(&mut self, key: &str) -> Result<FieldExpr, ConfigError> {
        self.expr(key)?.ok_or_else(|| err(None, format!("missing required key '{key}'")))
    }

    fn pair(&mut self, kx: &str, ky: &str) -> Result<Option<[FieldExpr; 2]>, ConfigError> {
        match (self.expr(kx)?, self.expr(ky)?) {
            (Some(a), Some(b)) => Ok(Some([a, b])),
            (None, None) => Ok(None),
            (Some(_), None) => Err(err(None, format!("'{kx}' given without '{ky}'"))),
            (None, Some(_)) => Err(err(None, format!("'{ky}' given without '{kx}'"))),
        }
    }
}

impl RunConfig {
    /// Parses configuration text; relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(Some(line), format!("expected 'key = value', found '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(Some(line), format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(err(Some(line), format!("empty value for '{key}'")));
            }
            if map.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(err(Some(line), format!("duplicate key '{key}'")));
            }
        }
        let mut e = Entries { map };

        let mesh = match (e.take("mesh_file"), e.parsed::<usize>("square_n")?) {
            (Some(_), Some(_)) => return Err(err(None, "give either 'mesh_file' or 'square_n', not both")),
            (None, None) => return Err(err(None, "missing required key 'square_n' or 'mesh_file'")),
            (Some((_, path)), None) => {
                for k in ["square_length", "square_boundary"] {
                    if let Some((line, _)) = e.take(k) {
                        return Err(err(Some(line), format!("'{k}' only applies to 'square_n' meshes")));
                    }
                }
                MeshSource::File(base_dir.join(path))
            }
            (None, Some(n)) => {
                if n == 0 {
                    return Err(err(None, "'square_n' must be at least 1"));
                }
                let length = e.number("square_length", 1.0)?;
                if !(length > 0.0) {
                    return Err(err(None, "'square_length' must be positive"));
                }
                let boundary = e.choice(
                    "square_boundary",
                    &[
                        ("dirichlet", SquareBoundary::Dirichlet),
                        ("neumann", SquareBoundary::Neumann),
                        ("dirichlet_x", SquareBoundary::DirichletX),
                    ],
                    SquareBoundary::Dirichlet,
                )?;
                MeshSource::Square { n, length, boundary }
            }
        };

        let d = PhysicalParams::default();
        let params = PhysicalParams {
            rho: e.number("rho", d.rho)?,
            rho_o: e.number("rho_o", d.rho_o)?,
            c_o: e.number("c_o", d.c_o)?,
            p_star: e.number("p_star", d.p_star)?,
            c_m: e.number("c_m", d.c_m)?,
            c_hard: e.number("c_hard", d.c_hard)?,
            h_min: e.number("h_min", d.h_min)?,
            dt: e.number("dt", d.dt)?,
        };
        params.validate().map_err(|x| err(None, x.to_string()))?;

        let fields = FieldExprs {
            concentration: e.required_expr("A")?,
            thickness: e.required_expr("h")?,
            ocean_velocity: [e.required_expr("v_o_x")?, e.required_expr("v_o_y")?],
            initial_velocity: e.pair("u0_x", "u0_y")?,
            body_force: e.pair("g_x", "g_y")?,
        };

        let mode = e.choice(
            "mode",
            &[("time_dependent", Mode::TimeDependent), ("stationary", Mode::Stationary)],
            Mode::TimeDependent,
        )?;
        let n_steps = e.parsed::<usize>("n_steps")?;
        let n_steps = match (mode, n_steps) {
            (Mode::TimeDependent, None) => return Err(err(None, "missing required key 'n_steps'")),
            (_, Some(0)) => return Err(err(None, "'n_steps' must be at least 1")),
            (_, n) => n.unwrap_or(1),
        };
        let t0 = e.number("t0", 0.0)?;

        let dg = GaussNewtonConfig::default();
        let mut gn = GaussNewtonConfig {
            tol: e.number("gn_tol", dg.tol)?,
            max_iter: e.parsed("gn_max_iter")?.unwrap_or(dg.max_iter),
            damping: e.parsed("gn_damping")?.unwrap_or(dg.damping),
            gradient_tol: e.parsed("gn_gradient_tol")?,
            ..dg
        };
        if !(gn.tol > 0.0 && gn.tol < 1.0) {
            return Err(err(None, "'gn_tol' must lie in (0, 1)"));
        }
        if gn.max_iter == 0 {
            return Err(err(None, "'gn_max_iter' must be at least 1"));
        }
        gn.cg.rel_tol = e.number("cg_tol", gn.cg.rel_tol)?;
        if !(gn.cg.rel_tol > 0.0) {
            return Err(err(None, "'cg_tol' must be positive"));
        }
        gn.cg.max_iter = e.parsed("cg_max_iter")?;
        gn.cg.preconditioner = e.choice(
            "preconditioner",
            &[
                ("schwarz", Preconditioner::Schwarz),
                ("ic0", Preconditioner::IncompleteCholesky),
                ("jacobi", Preconditioner::Jacobi),
            ],
            Preconditioner::Schwarz,
        )?;
        let execution = e.choice(
            "execution",
            &[("parallel", Execution::Parallel), ("sequential", Execution::Sequential)],
            Execution::Parallel,
        )?;
        gn.cg.exec = execution;

        let sigma_init = e.choice(
            "sigma_init",
            &[("interpolate", SigmaInit::Interpolate), ("zero", SigmaInit::Zero)],
            SigmaInit::Interpolate,
        )?;
        let output_dir = base_dir.join(e.take("output_dir").map_or_else(|| "output".to_string(), |(_, v)| v));
        let vtk = e.choice(
            "vtk",
            &[("none", VtkOutput::None), ("final", VtkOutput::Final), ("every", VtkOutput::Every)],
            VtkOutput::Final,
        )?;
        let levels = e.parsed("levels")?.unwrap_or(4);
        let quadrature_degree = e.parsed("quadrature_degree")?.unwrap_or(crate::lsq::DEFAULT_QUADRATURE_DEGREE);
        if !(1..=8).contains(&quadrature_degree) {
            return Err(err(None, "'quadrature_degree' must lie in 1..=8"));
        }
        debug_assert!(e.map.is_empty(), "unconsumed keys: {:?}", e.map.keys());

        Ok(RunConfig {
            mesh,
            params,
            fields,
            mode,
            n_steps,
            t0,
            gn,
            sigma_init,
            output_dir,
            vtk,
            levels,
            quadrature_degree,
            execution,
        })
    }

    pub fn model(&self) -> Model {
        let f = |name: &str, fe: &FieldExpr| ScalarField::from_expr(name, fe.expr.clone());
        let fx = &self.fields;
        let fields = CoefficientFields {
            concentration: f("A", &fx.concentration),
            thickness: f("h", &fx.thickness),
            ocean_velocity: [f("v_o_x", &fx.ocean_velocity[0]), f("v_o_y", &fx.ocean_velocity[1])],
            body_force: fx.body_force.as_ref().map(|[gx, gy]| [f("g_x", gx), f("g_y", gy)]),
        };
        Model::new(self.params, fields).expect("parameters validated at parse time")
    }
}
