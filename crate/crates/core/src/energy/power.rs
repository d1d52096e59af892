/// `|x|^p` and `|x|^{p-2} x` with fast paths for the exponents used most.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerLaw {
    Two,
    Three,
    ThreeHalves,
    General(f64),
}

impl PowerLaw {
    pub fn new(p: f64) -> Self {
        if p == 2.0 {
            Self::Two
        } else if p == 3.0 {
            Self::Three
        } else if p == 1.5 {
            Self::ThreeHalves
        } else {
            Self::General(p)
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            Self::Two => 2.0,
            Self::Three => 3.0,
            Self::ThreeHalves => 1.5,
            Self::General(p) => p,
        }
    }

    /// `|x|^p`.
    #[inline]
    pub fn pow(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            Self::Two => a * a,
            Self::Three => a * a * a,
            Self::ThreeHalves => a * a.sqrt(),
            Self::General(p) => a.powf(p),
        }
    }

    /// `|x|^{p-2} x`, zero at `x = 0`.
    #[inline]
    pub fn phi(self, x: f64) -> f64 {
        match self {
            Self::Two => x,
            Self::Three => x.abs() * x,
            Self::ThreeHalves => x.abs().sqrt().copysign(x),
            Self::General(p) => {
                if x == 0.0 {
                    0.0
                } else {
                    x.abs().powf(p - 1.0).copysign(x)
                }
            }
        }
    }

    /// `(|x|^p, |x|^{p-2} x)`.
    #[inline]
    pub fn both(self, x: f64) -> (f64, f64) {
        match self {
            Self::General(p) => {
                let a = x.abs();
                if a == 0.0 {
                    (0.0, 0.0)
                } else {
                    let ap = a.powf(p);
                    (ap, (ap / a).copysign(x))
                }
            }
            _ => (self.pow(x), self.phi(x)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_paths_agree_with_powf() {
        for &p in &[1.5, 2.0, 3.0, 2.7] {
            let law = PowerLaw::new(p);
            for &x in &[-2.3, -0.1, 0.0, 0.4, 5.0] {
                let (a, b) = law.both(x);
                let ea: f64 = f64::abs(x).powf(p);
                let eb = if x == 0.0 { 0.0 } else { f64::abs(x).powf(p - 2.0) * x };
                assert!((a - ea).abs() <= 1e-14 * ea.max(1.0), "p={p} x={x}");
                assert!((b - eb).abs() <= 1e-14 * eb.abs().max(1.0), "p={p} x={x}");
                assert_eq!(law.pow(x), a);
            }
        }
    }
}
