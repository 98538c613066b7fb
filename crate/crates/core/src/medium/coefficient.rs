use std::fmt;
use std::sync::Arc;

use evalexpr::{Context, EvalexprError, EvalexprResult, Node, Value};

use crate::error::{Error, Result};

/// A depth-dependent scalar parameter such as `chi0(z)` or `alpha(z)`.
#[derive(Clone)]
pub enum DepthProfile {
    Constant(f64),
    /// `a + b z`.
    Linear {
        a: f64,
        b: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DepthProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Linear { a, b } => write!(f, "Linear({a} + {b} z)"),
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl From<f64> for DepthProfile {
    fn from(c: f64) -> Self {
        Self::Constant(c)
    }
}

impl DepthProfile {
    pub fn value(&self, z: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Linear { a, b } => a + b * z,
            Self::Custom(f) => f(z),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Self::Constant(_) => 0.0,
            Self::Linear { b, .. } => *b,
            Self::Custom(f) => {
                let h = 1e-6;
                if z >= h {
                    (f(z + h) - f(z - h)) / (2.0 * h)
                } else {
                    (f(z + h) - f(z)) / h
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_) | Self::Linear { b: 0.0, .. })
    }

    /// Smallest value over `[0, z_max]` (sampled for custom profiles).
    pub fn min_on(&self, z_max: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Linear { a, b } => a.min(a + b * z_max),
            Self::Custom(f) => (0..=200)
                .map(|i| f(z_max * i as f64 / 200.0))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// One perturbation term `c_l(z, x)` of the medium.
///
/// Implementations must be pure; they are evaluated concurrently.
pub trait CoefficientField: Send + Sync + fmt::Debug {
    fn sample(&self, z: f64, x: [f64; 2]) -> f64;

    /// Analytic lateral gradient, when known.
    fn gradient(&self, _z: f64, _x: [f64; 2]) -> Option<[f64; 2]> {
        None
    }

    /// Analytic depth derivative, when known.
    fn dz(&self, _z: f64, _x: [f64; 2]) -> Option<f64> {
        None
    }

    fn has_analytic_gradient(&self) -> bool {
        false
    }

    fn has_analytic_dz(&self) -> bool {
        false
    }

    fn is_z_independent(&self) -> bool {
        false
    }

    /// Regularity exponent `r` this term is known to carry, if any.
    fn declared_regularity(&self) -> Option<f64> {
        None
    }

    /// Radius outside which the term vanishes, if compactly supported.
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantCoefficient(pub f64);

impl CoefficientField for ConstantCoefficient {
    fn sample(&self, _z: f64, _x: [f64; 2]) -> f64 {
        self.0
    }

    fn gradient(&self, _z: f64, _x: [f64; 2]) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }

    fn dz(&self, _z: f64, _x: [f64; 2]) -> Option<f64> {
        Some(0.0)
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn has_analytic_dz(&self) -> bool {
        true
    }

    fn is_z_independent(&self) -> bool {
        true
    }
}

/// Quintic smoothstep with matched value, slope and curvature at both ends.
fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
            30.0 * t2 * (1.0 - 2.0 * t + t2),
        )
    }
}

/// `chi0(z) B(|x|) (|x|² + eps²)^{alpha(z)/2}`, where the radial cutoff `B`
/// equals 1 on `|x| <= r1`, vanishes on `|x| >= r2` and is C² in between.
#[derive(Clone, Debug)]
pub struct ExampleCoefficient {
    pub chi0: DepthProfile,
    pub alpha: DepthProfile,
    pub r1: f64,
    pub r2: f64,
    pub eps: f64,
    pub declared_r: f64,
}

impl ExampleCoefficient {
    /// Cutoff value and radial derivative.
    pub fn cutoff(&self, rho: f64) -> (f64, f64) {
        let t = (rho - self.r1) / (self.r2 - self.r1);
        let (s, ds) = smoothstep(t);
        (1.0 - s, -ds / (self.r2 - self.r1))
    }

    fn q(&self, x: [f64; 2]) -> f64 {
        x[0] * x[0] + x[1] * x[1] + self.eps * self.eps
    }
}

impl CoefficientField for ExampleCoefficient {
    fn sample(&self, z: f64, x: [f64; 2]) -> f64 {
        let rho = x[0].hypot(x[1]);
        if rho >= self.r2 {
            return 0.0;
        }
        let (b, _) = self.cutoff(rho);
        self.chi0.value(z) * b * self.q(x).powf(0.5 * self.alpha.value(z))
    }

    fn gradient(&self, z: f64, x: [f64; 2]) -> Option<[f64; 2]> {
        let rho = x[0].hypot(x[1]);
        if rho >= self.r2 || rho == 0.0 {
            return Some([0.0, 0.0]);
        }
        let chi = self.chi0.value(z);
        let alpha = self.alpha.value(z);
        let q = self.q(x);
        let qa = q.powf(0.5 * alpha);
        let (b, db) = self.cutoff(rho);
        let radial = db / rho * qa + b * alpha * qa / q;
        Some([chi * radial * x[0], chi * radial * x[1]])
    }

    fn dz(&self, z: f64, x: [f64; 2]) -> Option<f64> {
        let rho = x[0].hypot(x[1]);
        let q = self.q(x);
        if rho >= self.r2 || q == 0.0 {
            return Some(0.0);
        }
        let alpha = self.alpha.value(z);
        let (b, _) = self.cutoff(rho);
        let qa = q.powf(0.5 * alpha);
        let dchi = self.chi0.derivative(z);
        let dalpha = self.alpha.derivative(z);
        Some(b * qa * (dchi + self.chi0.value(z) * 0.5 * dalpha * q.ln()))
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn has_analytic_dz(&self) -> bool {
        true
    }

    fn is_z_independent(&self) -> bool {
        self.chi0.is_constant() && self.alpha.is_constant()
    }

    fn declared_regularity(&self) -> Option<f64> {
        Some(self.declared_r)
    }

    fn support_radius(&self) -> Option<f64> {
        Some(self.r2)
    }
}

/// A coefficient given by closures, for media assembled in code.
#[derive(Clone)]
pub struct FnCoefficient {
    value: Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>,
    gradient: Option<Arc<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync>>,
    z_independent: bool,
}

impl fmt::Debug for FnCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCoefficient")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("z_independent", &self.z_independent)
            .finish()
    }
}

impl FnCoefficient {
    pub fn new(value: impl Fn(f64, [f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            z_independent: false,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn z_independent(mut self) -> Self {
        self.z_independent = true;
        self
    }
}

impl CoefficientField for FnCoefficient {
    fn sample(&self, z: f64, x: [f64; 2]) -> f64 {
        (self.value)(z, x)
    }

    fn gradient(&self, z: f64, x: [f64; 2]) -> Option<[f64; 2]> {
        self.gradient.as_ref().map(|g| g(z, x))
    }

    fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    fn is_z_independent(&self) -> bool {
        self.z_independent
    }
}

/// A coefficient parsed from an expression in the variables `x`, `y`, `z`
/// and `r = |x|`. Builtins such as `math::sqrt` and `math::exp` are available.
#[derive(Clone)]
pub struct ExprCoefficient {
    source: String,
    tree: Node,
    z_independent: bool,
}

impl fmt::Debug for ExprCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExprCoefficient({:?})", self.source)
    }
}

struct PointContext([Value; 4]);

impl Context for PointContext {
    fn get_value(&self, identifier: &str) -> Option<&Value> {
        let i = match identifier {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            "r" => 3,
            _ => return None,
        };
        Some(&self.0[i])
    }

    fn call_function(&self, identifier: &str, _argument: &Value) -> EvalexprResult<Value> {
        Err(EvalexprError::FunctionIdentifierNotFound(
            identifier.to_string(),
        ))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<()> {
        Ok(())
    }
}

impl ExprCoefficient {
    pub fn parse(source: &str) -> Result<Self> {
        let tree = evalexpr::build_operator_tree(source)
            .map_err(|e| Error::InvalidMedium(format!("expression {source:?}: {e}")))?;
        let mut z_independent = true;
        for ident in tree.iter_variable_identifiers() {
            match ident {
                "x" | "y" | "r" => {}
                "z" => z_independent = false,
                other => {
                    return Err(Error::InvalidMedium(format!(
                        "expression {source:?} uses unknown variable {other:?}"
                    )))
                }
            }
        }
        let out = Self {
            source: source.to_string(),
            tree,
            z_independent,
        };
        out.try_sample(0.0, [0.5, 0.25])?;
        Ok(out)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_sample(&self, z: f64, x: [f64; 2]) -> Result<f64> {
        let ctx = PointContext([
            Value::Float(x[0]),
            Value::Float(x[1]),
            Value::Float(z),
            Value::Float(x[0].hypot(x[1])),
        ]);
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::InvalidMedium(format!("expression {:?}: {e}", self.source)))
    }
}

impl CoefficientField for ExprCoefficient {
    fn sample(&self, z: f64, x: [f64; 2]) -> f64 {
        // parse() already evaluated the tree once, so failures here can only
        // come from domain errors; surface them as NaN for validation to catch
        self.try_sample(z, x).unwrap_or(f64::NAN)
    }

    fn is_z_independent(&self) -> bool {
        self.z_independent
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(alpha: f64, eps: f64) -> ExampleCoefficient {
        ExampleCoefficient {
            chi0: DepthProfile::Constant(1.0),
            alpha: DepthProfile::Constant(alpha),
            r1: 1.0,
            r2: 3.0,
            eps,
            declared_r: 0.9 * alpha,
        }
    }

    #[test]
    fn smoothstep_matches_endpoints() {
        assert_eq!(smoothstep(0.0), (0.0, 0.0));
        assert_eq!(smoothstep(1.0), (1.0, 0.0));
        let (v, d) = smoothstep(0.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!((d - 1.875).abs() < 1e-15);
    }

    #[test]
    fn example_is_power_inside_and_zero_outside() {
        let c = example(0.5, 0.0);
        let x = [0.3, -0.4];
        assert!((c.sample(0.0, x) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.sample(0.0, [3.0, 0.0]), 0.0);
        assert_eq!(c.sample(0.0, [2.5, 2.5]), 0.0);
        let mid = c.sample(0.0, [2.0, 0.0]);
        assert!(mid > 0.0 && mid < 2.0f64.sqrt());
    }

    #[test]
    fn example_gradient_matches_closed_form_inside() {
        let c = example(0.5, 0.0);
        let x = [0.3, 0.4];
        let g = c.gradient(0.0, x).unwrap();
        let rho: f64 = 0.5;
        for j in 0..2 {
            let expect = 0.5 * rho.powf(0.5 - 2.0) * x[j];
            assert!((g[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn example_gradient_matches_difference_quotient_in_transition() {
        let c = example(0.7, 0.1);
        let x = [1.3, -1.1];
        let g = c.gradient(0.0, x).unwrap();
        let h = 1e-6;
        let dx = (c.sample(0.0, [x[0] + h, x[1]]) - c.sample(0.0, [x[0] - h, x[1]])) / (2.0 * h);
        let dy = (c.sample(0.0, [x[0], x[1] + h]) - c.sample(0.0, [x[0], x[1] - h])) / (2.0 * h);
        assert!((g[0] - dx).abs() < 1e-8, "{} {}", g[0], dx);
        assert!((g[1] - dy).abs() < 1e-8);
    }

    #[test]
    fn example_dz_matches_difference_quotient() {
        let c = ExampleCoefficient {
            chi0: DepthProfile::Linear { a: 1.0, b: 0.5 },
            alpha: DepthProfile::Linear { a: 0.5, b: 0.25 },
            ..example(0.5, 0.0)
        };
        assert!(!c.is_z_independent());
        for x in [[0.2, 0.1], [1.5, 0.7], [0.0, 2.1]] {
            let z = 0.4;
            let h = 1e-6;
            let fd = (c.sample(z + h, x) - c.sample(z - h, x)) / (2.0 * h);
            assert!((c.dz(z, x).unwrap() - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn expression_coefficients_evaluate() {
        let c = ExprCoefficient::parse("math::exp(-r^2) * (1 + z)").unwrap();
        assert!(!c.is_z_independent());
        let v = c.sample(1.0, [0.6, 0.8]);
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
        let k = ExprCoefficient::parse("2").unwrap();
        assert!(k.is_z_independent());
        assert_eq!(k.sample(0.0, [1.0, 1.0]), 2.0);
        assert!(ExprCoefficient::parse("x + w").is_err());
        assert!(ExprCoefficient::parse("x +").is_err());
    }

    #[test]
    fn profile_min_and_derivative() {
        let p = DepthProfile::Linear { a: 1.0, b: -0.5 };
        assert_eq!(p.min_on(1.0), 0.5);
        assert_eq!(p.derivative(0.3), -0.5);
        let q = DepthProfile::Custom(Arc::new(|z: f64| z * z));
        assert!((q.derivative(0.5) - 1.0).abs() < 1e-8);
        assert!(q.min_on(1.0).abs() < 1e-12);
    }
}
