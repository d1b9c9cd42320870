use super::{BinOp, EvalError, Expr, Func, Node, NodeKind};
use crate::error::{Error, Result};
use crate::manifold::{combine, dist_coords, exp_map, tangent_basis, ManifoldKind, Point, TangentVector};

/// Base finite-difference step; scaled by max(1, |f(p)|^½).
pub const FD_STEP: f64 = 1e-6;

const MIN_DENOMINATOR: f64 = 1e-300;
const GDIST_TARGET_TOL: f64 = 1e-9;

fn domain(node: &Node, message: impl Into<String>) -> EvalError {
    EvalError { offset: node.offset, message: message.into() }
}

fn finite(node: &Node, v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(node, "non-finite intermediate value"))
    }
}

pub(crate) fn eval_node(node: &Node, kind: ManifoldKind, x: &[f64]) -> Result<f64, EvalError> {
    let v = match &node.kind {
        NodeKind::Number(v) => *v,
        NodeKind::Var(i) => *x.get(*i).ok_or_else(|| domain(node, format!("no coordinate x{}", i + 1)))?,
        NodeKind::Neg(a) => -eval_node(a, kind, x)?,
        NodeKind::Binary(op, l, r) => {
            let a = eval_node(l, kind, x)?;
            let b = eval_node(r, kind, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.abs() < MIN_DENOMINATOR {
                        return Err(domain(node, "division by a vanishing denominator"));
                    }
                    a / b
                }
                BinOp::Pow => {
                    if b == 2.0 {
                        a * a
                    } else if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                        a.powi(b as i32)
                    } else if a < 0.0 {
                        return Err(domain(node, "negative base with a fractional exponent"));
                    } else {
                        a.powf(b)
                    }
                }
            }
        }
        NodeKind::Call(func, arg) => {
            let a = eval_node(arg, kind, x)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Tanh => a.tanh(),
                Func::Exp => a.exp(),
                Func::Log => {
                    if a <= 0.0 {
                        return Err(domain(node, "log of a nonpositive value"));
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(domain(node, "sqrt of a negative value"));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
            }
        }
        NodeKind::Gdist(target) => {
            if target.len() != x.len() {
                return Err(domain(node, "gdist arity does not match the point"));
            }
            let target = on_manifold(node, kind, target)?;
            dist_coords(kind, x, &target)
        }
    };
    finite(node, v)
}

fn on_manifold(node: &Node, kind: ManifoldKind, c: &[f64]) -> Result<Vec<f64>, EvalError> {
    match kind {
        ManifoldKind::Euclidean => Ok(c.to_vec()),
        ManifoldKind::Sphere => {
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (n - 1.0).abs() > GDIST_TARGET_TOL {
                return Err(domain(node, "gdist target is not on the sphere"));
            }
            Ok(c.iter().map(|v| v / n).collect())
        }
        ManifoldKind::Hyperboloid => {
            let spatial: f64 = c[1..].iter().map(|v| v * v).sum();
            let x0 = (1.0 + spatial).sqrt();
            if c[0] <= 0.0 || (c[0] - x0).abs() > GDIST_TARGET_TOL * x0 {
                return Err(domain(node, "gdist target is not on the hyperboloid"));
            }
            let mut out = c.to_vec();
            out[0] = x0;
            Ok(out)
        }
    }
}

impl Expr {
    /// Evaluates at a point; domain violations are errors, never NaN.
    pub fn evaluate(&self, point: &Point) -> Result<f64, EvalError> {
        if point.coords().len() != self.ambient_dim {
            return Err(EvalError {
                offset: 0,
                message: format!(
                    "expression expects {} coordinates, point has {}",
                    self.ambient_dim,
                    point.coords().len()
                ),
            });
        }
        eval_node(&self.root, point.manifold().kind(), point.coords())
    }
}

/// Riemannian gradient by central differences along geodesics through an
/// orthonormal tangent basis: cᵢ = [f(exp(h eᵢ)) − f(exp(−h eᵢ))]/(2h).
pub fn riemannian_grad(expr: &Expr, point: &Point) -> Result<TangentVector> {
    let f0 = expr.evaluate(point)?;
    let h = FD_STEP * f0.abs().sqrt().max(1.0);
    let basis = tangent_basis(point);
    let mut coeffs = Vec::with_capacity(basis.len());
    for e in &basis {
        let plus = expr.evaluate(&exp_map(&e.scale(h))?)?;
        let minus = expr.evaluate(&exp_map(&e.scale(-h))?)?;
        coeffs.push((plus - minus) / (2.0 * h));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NumericalBreakdown { iteration: 0, what: "non-finite gradient".into() });
    }
    Ok(combine(&basis, &coeffs))
}
