//! The line-oriented problem file:
//!
//! ```text
//! manifold = sphere          # euclidean | sphere | hyperboloid
//! dim = 2
//! objective = "gdist(0,0,1)^2"
//! constraint = "gdist(1,0,0) - 0.5"   # repeatable
//! anchor = [1, 0, 0]
//! start  = [0.995, 0.0998, 0]
//! seed = 0
//! stationarity_tol = 1e-5    # optional overrides
//! ```

use std::str::FromStr;

use geoconvex::kkt::{ProblemSpec, Tolerances};
use geoconvex::manifold::{ManifoldKind, ManifoldSpec, Point};
use geoconvex::region::{ConvexRegion, DEFAULT_INTERIOR_TOL};
use geoconvex::{parse, Expr};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Sourced<T> {
    pub value: T,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProblemFile {
    pub manifold: Option<ManifoldKind>,
    pub dim: Option<usize>,
    pub objective: Option<Sourced<String>>,
    pub constraints: Vec<Sourced<String>>,
    pub anchor: Option<Vec<f64>>,
    pub start: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub stationarity_tol: Option<f64>,
    pub complementarity_tol: Option<f64>,
    pub step_init: Option<f64>,
    pub max_iters: Option<usize>,
    pub interior_tol: Option<f64>,
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn bad(line: usize, message: impl Into<String>) -> CliError {
    CliError::ProblemFile { line, message: message.into() }
}

fn number<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(line, format!("`{key}` expects a number, found `{value}`")))
}

fn text(value: &str) -> String {
    value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value).to_string()
}

/// Comma-separated coordinates, with or without surrounding brackets.
pub fn coordinates(value: &str) -> Result<Vec<f64>, String> {
    let inner = value.trim();
    let inner = inner.strip_prefix('[').and_then(|v| v.strip_suffix(']')).unwrap_or(inner);
    inner
        .split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{c}` is not a finite coordinate"))
        })
        .collect()
}

fn set<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<(), CliError> {
    if slot.is_some() {
        return Err(bad(line, format!("`{key}` given twice")));
    }
    *slot = Some(value);
    Ok(())
}

impl ProblemFile {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let mut pf = ProblemFile::default();
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() || (content.starts_with('[') && content.ends_with(']') && !content.contains('=')) {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(bad(line, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "manifold" => {
                    let kind = ManifoldKind::from_str(&text(value)).map_err(|e| bad(line, e.to_string()))?;
                    set(&mut pf.manifold, kind, line, key)?;
                }
                "dim" => set(&mut pf.dim, number(value, line, key)?, line, key)?,
                "objective" => set(&mut pf.objective, Sourced { value: text(value), line }, line, key)?,
                "constraint" => pf.constraints.push(Sourced { value: text(value), line }),
                "anchor" => set(&mut pf.anchor, coordinates(value).map_err(|e| bad(line, e))?, line, key)?,
                "start" => set(&mut pf.start, coordinates(value).map_err(|e| bad(line, e))?, line, key)?,
                "seed" => set(&mut pf.seed, number(value, line, key)?, line, key)?,
                "stationarity_tol" => set(&mut pf.stationarity_tol, number(value, line, key)?, line, key)?,
                "complementarity_tol" => set(&mut pf.complementarity_tol, number(value, line, key)?, line, key)?,
                "step_init" => set(&mut pf.step_init, number(value, line, key)?, line, key)?,
                "max_iters" => set(&mut pf.max_iters, number(value, line, key)?, line, key)?,
                "interior_tol" => set(&mut pf.interior_tol, number(value, line, key)?, line, key)?,
                other => return Err(bad(line, format!("unknown key `{other}`"))),
            }
        }
        Ok(pf)
    }

    pub fn manifold_spec(&self) -> Result<ManifoldSpec, CliError> {
        let kind = self.manifold.ok_or_else(|| bad(0, "missing `manifold`"))?;
        let dim = self.dim.ok_or_else(|| bad(0, "missing `dim`"))?;
        Ok(ManifoldSpec::new(kind, dim)?)
    }

    /// Input coordinates are snapped onto the manifold (unit norm, upper sheet).
    pub fn point(&self, m: ManifoldSpec, coords: &[f64]) -> Result<Point, CliError> {
        Ok(m.project_point(coords.to_vec())?)
    }

    fn expression(m: ManifoldSpec, src: &Sourced<String>) -> Result<Expr, CliError> {
        parse(&src.value, m.ambient_dim()).map_err(|error| CliError::Expression { line: src.line, error })
    }

    pub fn region(&self) -> Result<ConvexRegion, CliError> {
        let m = self.manifold_spec()?;
        let anchor = self.anchor.as_ref().ok_or_else(|| bad(0, "missing `anchor`"))?;
        if self.constraints.is_empty() {
            return Err(bad(0, "at least one `constraint` is required"));
        }
        let mut builder = ConvexRegion::builder(m)
            .anchor(self.point(m, anchor)?)
            .interior_tol(self.interior_tol.unwrap_or(DEFAULT_INTERIOR_TOL));
        for c in &self.constraints {
            builder = builder.constraint(Self::expression(m, c)?);
        }
        Ok(builder.build()?)
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            stationarity_tol: self.stationarity_tol.unwrap_or(d.stationarity_tol),
            complementarity_tol: self.complementarity_tol.unwrap_or(d.complementarity_tol),
            step_init: self.step_init.unwrap_or(d.step_init),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
        }
    }

    /// The optimization problem; the start defaults to the anchor.
    pub fn problem(&self, region: ConvexRegion) -> Result<ProblemSpec, CliError> {
        let m = region.manifold();
        let objective = self.objective.as_ref().ok_or_else(|| bad(0, "missing `objective`"))?;
        let objective = Self::expression(m, objective)?;
        let start = match &self.start {
            Some(s) => self.point(m, s)?,
            None => region.anchor().clone(),
        };
        Ok(ProblemSpec::new(objective, region, start)?.with_tolerances(self.tolerances()))
    }
}
