use std::f64::consts::PI;

/// Frequency bands used for ray features.
pub const FREQUENCIES: usize = 10;
/// Length of an encoded ray: raw `u, v` plus four terms per band.
pub const ENCODING_DIM: usize = 4 * FREQUENCIES + 2;

/// Sin/cos positional encoding of a 2D ray coordinate with `frequencies`
/// octave-spaced bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PosEncoding {
    pub frequencies: usize,
}

impl Default for PosEncoding {
    fn default() -> Self {
        PosEncoding {
            frequencies: FREQUENCIES,
        }
    }
}

impl PosEncoding {
    pub fn dim(&self) -> usize {
        4 * self.frequencies + 2
    }

    /// `[u, v, sin(2^k pi u), cos(2^k pi u), sin(2^k pi v), cos(2^k pi v) for k in 0..L]`
    pub fn encode_into(&self, u: f64, v: f64, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim());
        out[0] = u;
        out[1] = v;
        for k in 0..self.frequencies {
            let f = (1u64 << k) as f64 * PI;
            let (su, cu) = (f * u).sin_cos();
            let (sv, cv) = (f * v).sin_cos();
            out[2 + 4 * k..6 + 4 * k].copy_from_slice(&[su, cu, sv, cv]);
        }
    }

    pub fn encode(&self, u: f64, v: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.encode_into(u, v, &mut out);
        out
    }
}

/// Default 42-dimensional encoding of plane coordinates `(u, v)`.
pub fn encode_ray(u: f64, v: f64) -> [f64; ENCODING_DIM] {
    let mut out = [0.0; ENCODING_DIM];
    PosEncoding::default().encode_into(u, v, &mut out);
    out
}
