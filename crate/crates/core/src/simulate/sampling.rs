//! Hand-written samplers on top of the seeded uniform stream.

use crate::rng::Stream;

pub struct Sampler {
    stream: Stream,
    spare: Option<f64>,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            stream: Stream::new(seed, stream),
            spare: None,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.stream.uniform()
    }

    /// Standard normal (Box–Muller; the second variate is kept for the next call).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang; shapes below 1 use the
    /// `G(a + 1) U^{1/a}` boost.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            return g * self.uniform().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let z = self.normal();
            let v = 1.0 + c * z;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform();
            if u < 1.0 - 0.0331 * z.powi(4) || u.ln() < 0.5 * z * z + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Beta(a, b) as `X / (X + Y)` with independent gammas.
    pub fn beta(&mut self, a: f64, b: f64) -> f64 {
        let x = self.gamma(a);
        let y = self.gamma(b);
        x / (x + y)
    }

    /// Weibull with the given shape and scale, by inverse transform.
    pub fn weibull(&mut self, shape: f64, scale: f64) -> f64 {
        scale * (-self.uniform().ln()).powf(1.0 / shape)
    }
}
