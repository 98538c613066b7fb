use std::fmt;
use std::sync::Arc;

/// Half-width of the interval around `tau = 0` on which symbol lower bounds are checked.
pub const NEAR_ZERO: f64 = 0.1;

/// Frequency dependence `h_l(tau)` of one medium term.
#[derive(Clone)]
pub enum FrequencySymbol {
    /// `h = 1`, order 0.
    One,
    /// `h = 1/|tau|` for `|tau| >= eta0`, blended smoothly and monotonically
    /// into the constant `2/eta0` below `eta0/2`. Order -1.
    InvTau { eta0: f64 },
    Custom {
        h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        order: f64,
        lower: f64,
        bound: f64,
    },
}

impl fmt::Debug for FrequencySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::One => f.write_str("One"),
            Self::InvTau { eta0 } => write!(f, "InvTau {{ eta0: {eta0} }}"),
            Self::Custom { order, .. } => write!(f, "Custom {{ order: {order} }}"),
        }
    }
}

fn psi(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// C-infinity step: 0 for `u <= 0`, 1 for `u >= 1`.
fn smooth_step(u: f64) -> f64 {
    let a = psi(u);
    let b = psi(1.0 - u);
    a / (a + b)
}

impl FrequencySymbol {
    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::InvTau { eta0 } => {
                let t = tau.abs();
                let rho = if t >= *eta0 {
                    t
                } else {
                    let beta = smooth_step((t - 0.5 * eta0) / (0.5 * eta0));
                    0.5 * eta0 + beta * (t - 0.5 * eta0)
                };
                1.0 / rho
            }
            Self::Custom { h, .. } => h(tau),
        }
    }

    pub fn order(&self) -> f64 {
        match self {
            Self::One => 0.0,
            Self::InvTau { .. } => -1.0,
            Self::Custom { order, .. } => *order,
        }
    }

    /// Guaranteed lower bound of `|h|` on `|tau| <= NEAR_ZERO`.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::InvTau { eta0 } => 1.0 / (0.5 * eta0).max(NEAR_ZERO),
            Self::Custom { lower, .. } => *lower,
        }
    }

    /// Constant `K` in `|h(tau)| <= K (1 + |tau|)^order`.
    pub fn growth_constant(&self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::InvTau { eta0 } => 2.0 * (1.0 + eta0) / eta0,
            Self::Custom { bound, .. } => *bound,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::One => "one",
            Self::InvTau { .. } => "inv_tau",
            Self::Custom { .. } => "custom",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_tau_is_exact_outside_cutoff() {
        let h = FrequencySymbol::InvTau { eta0: 0.5 };
        for t in [0.5, 1.0, 3.0, -2.0] {
            assert_eq!(h.eval(t), 1.0 / f64::abs(t));
        }
        assert_eq!(h.eval(0.0), 4.0);
        assert_eq!(h.eval(0.2), 4.0);
    }

    #[test]
    fn inv_tau_is_even_and_bounded() {
        let h = FrequencySymbol::InvTau { eta0: 0.3 };
        let k = h.growth_constant();
        for i in -400..=400 {
            let t = i as f64 * 0.01;
            let v = h.eval(t);
            assert_eq!(v, h.eval(-t));
            assert!(v >= 1.0 / 4.0 - 1e-15);
            assert!(v <= k * (1.0 + t.abs()).powf(h.order()) + 1e-12);
            if t.abs() <= NEAR_ZERO {
                assert!(v >= h.lower_bound());
            }
        }
    }

    #[test]
    fn inv_tau_blend_is_monotone() {
        let h = FrequencySymbol::InvTau { eta0: 1.0 };
        let mut prev = h.eval(0.0);
        for i in 1..=200 {
            let v = h.eval(i as f64 * 0.01);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }
}
