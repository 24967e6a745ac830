use std::ops::{Add, Div, Mul, Neg, Sub};

/// Most local variables a single constraint can touch: two arcs.
pub const MAX_LOCAL: usize = 12;

/// Scalar arithmetic shared by plain evaluation and forward-mode differentiation.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;
    fn sqrt(self) -> Self;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn val(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Forward-mode dual number carrying a gradient over the local variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: [f64; MAX_LOCAL],
}

impl Dual {
    pub fn var(v: f64, slot: usize) -> Self {
        let mut g = [0.0; MAX_LOCAL];
        g[slot] = 1.0;
        Self { v, g }
    }

    fn map_g(self, f: impl Fn(f64) -> f64, v: f64) -> Self {
        let mut g = self.g;
        for x in &mut g {
            *x = f(*x);
        }
        Self { v, g }
    }

    fn zip(self, o: Self, v: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut g = [0.0; MAX_LOCAL];
        for i in 0..MAX_LOCAL {
            g[i] = f(self.g[i], o.g[i]);
        }
        Self { v, g }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.zip(o, self.v + o.v, |a, b| a + b)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(o, self.v - o.v, |a, b| a - b)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (u, v) = (self.v, o.v);
        self.zip(o, u * v, |a, b| a * v + u * b)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let (u, v) = (self.v, o.v);
        self.zip(o, u / v, |a, b| (a * v - u * b) / (v * v))
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        self.map_g(|a| -a, -self.v)
    }
}

impl Real for Dual {
    fn cst(v: f64) -> Self {
        Self { v, g: [0.0; MAX_LOCAL] }
    }
    fn val(self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.map_g(|a| a / (2.0 * s), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::var(3.0, 0);
        let y = Dual::var(2.0, 1);
        let f = x * y / (x + y);
        // f = xy/(x+y); df/dx = y²/(x+y)², df/dy = x²/(x+y)²
        assert!((f.v - 1.2).abs() < 1e-15);
        assert!((f.g[0] - 4.0 / 25.0).abs() < 1e-15);
        assert!((f.g[1] - 9.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_derivative() {
        let x = Dual::var(4.0, 2);
        let s = x.sqrt();
        assert_eq!(s.v, 2.0);
        assert_eq!(s.g[2], 0.25);
    }
}
