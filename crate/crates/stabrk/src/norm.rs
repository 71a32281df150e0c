/// Tolerance-scaled rms norm used for error control:
/// `||v|| = sqrt( (1/N) sum (v_i / (atol + rtol |y_i|))^2 )`,
/// so a step is acceptable when the scaled error is `<= 1`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledNorm {
    pub atol: f64,
    pub rtol: f64,
}

impl ScaledNorm {
    pub fn new(atol: f64, rtol: f64) -> Self {
        assert!(atol > 0.0 && rtol >= 0.0);
        ScaledNorm { atol, rtol }
    }

    #[inline]
    pub fn scale(&self, y_abs: f64) -> f64 {
        self.atol + self.rtol * y_abs
    }

    pub fn eval(&self, v: &[f64], y: &[f64]) -> f64 {
        let n = v.len();
        let mut acc = 0.0;
        for i in 0..n {
            let sc = self.scale(y[i].abs());
            acc += (v[i] / sc) * (v[i] / sc);
        }
        (acc / n as f64).sqrt()
    }
}
