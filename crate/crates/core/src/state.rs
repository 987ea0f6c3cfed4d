use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Amplitudes `(psi, phi)` on the marked state and its complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State2 {
    pub psi: C64,
    pub phi: C64,
}

impl State2 {
    pub fn new(psi: C64, phi: C64) -> Self {
        Self { psi, phi }
    }

    pub fn from_array(v: [C64; 2]) -> Self {
        Self { psi: v[0], phi: v[1] }
    }

    pub fn to_array(self) -> [C64; 2] {
        [self.psi, self.phi]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.norm_sqr() + self.phi.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &State2) -> C64 {
        self.psi.conj() * other.psi + self.phi.conj() * other.phi
    }

    pub fn scale(self, c: C64) -> Self {
        Self { psi: self.psi * c, phi: self.phi * c }
    }

    /// Rescaled to unit norm; a zero vector is returned unchanged.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.scale(C64::new(1.0 / n, 0.0))
        } else {
            self
        }
    }
}
