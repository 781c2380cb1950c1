//! Closed-form edge solutions of `-f'' = λ f`.
//!
//! On an edge of length `L` the solution is stored as two coefficients `c = [c0, c1]`:
//!
//! | branch      | representation                              |
//! |-------------|---------------------------------------------|
//! | `λ = k² > 0`| `c0 sin kx + c1 cos kx`                     |
//! | `λ = 0`     | `c0 x + c1`                                 |
//! | `λ = -κ² < 0`| `c0 e^{-κx} + c1 e^{-κ(L-x)}`              |
//!
//! The exponential pair replaces `(sinh κx, cosh κx)` because it stays bounded for
//! large `κL`; see [`Branch::to_hyperbolic`].

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Positive { k: f64 },
    Zero,
    Negative { kappa: f64 },
}

/// `t - sin t`, accurate for small `t`.
fn t_minus_sin(t: f64) -> f64 {
    if t.abs() < 1e-2 {
        let t2 = t * t;
        t * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    } else {
        t - t.sin()
    }
}

impl Branch {
    pub fn of(lambda: f64) -> Self {
        if lambda > 0.0 {
            Branch::Positive { k: lambda.sqrt() }
        } else if lambda < 0.0 {
            Branch::Negative { kappa: (-lambda).sqrt() }
        } else {
            Branch::Zero
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Branch::Positive { k } => k * k,
            Branch::Zero => 0.0,
            Branch::Negative { kappa } => -kappa * kappa,
        }
    }

    pub fn value(&self, c: [f64; 2], len: f64, x: f64) -> f64 {
        match *self {
            Branch::Positive { k } => c[0] * (k * x).sin() + c[1] * (k * x).cos(),
            Branch::Zero => c[0] * x + c[1],
            Branch::Negative { kappa } => c[0] * (-kappa * x).exp() + c[1] * (-kappa * (len - x)).exp(),
        }
    }

    pub fn derivative(&self, c: [f64; 2], len: f64, x: f64) -> f64 {
        match *self {
            Branch::Positive { k } => k * (c[0] * (k * x).cos() - c[1] * (k * x).sin()),
            Branch::Zero => c[0],
            Branch::Negative { kappa } => kappa * (-c[0] * (-kappa * x).exp() + c[1] * (-kappa * (len - x)).exp()),
        }
    }

    /// `∫₀ᴸ f²`.
    pub fn norm_sq(&self, c: [f64; 2], len: f64) -> f64 {
        let [a, b] = c;
        match *self {
            Branch::Positive { k } => {
                let t = 2.0 * k * len;
                let minus = t_minus_sin(t) / (4.0 * k);
                let plus = len - minus;
                let cross = (k * len).sin().powi(2) / k;
                a * a * minus + b * b * plus + a * b * cross
            }
            Branch::Zero => a * a * len.powi(3) / 3.0 + a * b * len * len + b * b * len,
            Branch::Negative { kappa } => {
                let e = (-kappa * len).exp();
                let tail = -(-2.0 * kappa * len).exp_m1() / (2.0 * kappa);
                (a * a + b * b) * tail + 2.0 * a * b * len * e
            }
        }
    }

    /// `∫₀ᴸ f'²`.
    pub fn energy(&self, c: [f64; 2], len: f64) -> f64 {
        let [a, b] = c;
        match *self {
            Branch::Positive { k } => {
                let t = 2.0 * k * len;
                let minus = t_minus_sin(t) / (4.0 * k);
                let plus = len - minus;
                let cross = (k * len).sin().powi(2) / k;
                k * k * (a * a * plus + b * b * minus - a * b * cross)
            }
            Branch::Zero => a * a * len,
            Branch::Negative { kappa } => {
                let e = (-kappa * len).exp();
                let tail = -(-2.0 * kappa * len).exp_m1() / (2.0 * kappa);
                kappa * kappa * ((a * a + b * b) * tail - 2.0 * a * b * len * e)
            }
        }
    }

    /// Zeros in `[-slack, L + slack]`, ascending. Empty when `f` has no isolated zeros.
    pub fn zeros(&self, c: [f64; 2], len: f64, slack: f64) -> Vec<f64> {
        let [a, b] = c;
        let inside = |x: f64| x >= -slack && x <= len + slack;
        match *self {
            Branch::Positive { k } => {
                if a == 0.0 && b == 0.0 {
                    return Vec::new();
                }
                let theta = b.atan2(a);
                let first = ((theta - k * slack) / std::f64::consts::PI).ceil() as i64;
                let last = ((theta + k * (len + slack)) / std::f64::consts::PI).floor() as i64;
                (first..=last).map(|j| (j as f64 * std::f64::consts::PI - theta) / k).filter(|&x| inside(x)).collect()
            }
            Branch::Zero => {
                if a == 0.0 {
                    return Vec::new();
                }
                let x = -b / a;
                if inside(x) {
                    vec![x]
                } else {
                    Vec::new()
                }
            }
            Branch::Negative { kappa } => {
                if a == 0.0 || b == 0.0 || (a > 0.0) == (b > 0.0) {
                    return Vec::new();
                }
                let x = (kappa * len + (-a / b).ln()) / (2.0 * kappa);
                if inside(x) {
                    vec![x]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Coefficients of `A sinh κx + B cosh κx` for the negative branch; identity otherwise.
    pub fn to_hyperbolic(&self, c: [f64; 2], len: f64) -> [f64; 2] {
        match *self {
            Branch::Negative { kappa } => {
                let e = (-kappa * len).exp();
                [c[1] * e - c[0], c[0] + c[1] * e]
            }
            _ => c,
        }
    }
}
