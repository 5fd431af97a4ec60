/// Numerical tolerances used across the crate. `scaled` multiplies every
/// decision threshold (not step sizes or windows) by a common factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Residual bound for validated objects (orthonormality, symmetry).
    pub validation: f64,
    /// Isotropy defect accepted by the Lagrangian validator.
    pub isotropy: f64,
    /// Relative singular-value threshold for rank decisions.
    pub rank: f64,
    /// Angular distance (radians) at which an eigenvalue counts as -1.
    pub minus_one: f64,
    /// Minimal distance between a test angle and any sampled eigenphase.
    pub clearance: f64,
    /// Relative eigenvalue threshold for regular crossing forms.
    pub regularity: f64,
    /// Distance to the negative real axis that blocks a principal logarithm.
    pub log_cut: f64,
    /// Leray transversality threshold on eigenvalues of -U1 U2^H.
    pub leray_transversal: f64,
    /// Resolution of crossing and eigenvalue bisection.
    pub bisection: f64,
    /// Largest accepted spectral-norm step between adjacent unitary samples.
    pub unitary_step: f64,
    /// Largest accepted projection step between adjacent Lagrangian samples.
    pub frame_step: f64,
    /// Finite-difference step for crossing forms.
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            validation: 1e-10,
            isotropy: 1e-8,
            rank: 1e-8,
            minus_one: 1e-7,
            clearance: 1e-6,
            regularity: 1e-6,
            log_cut: 1e-6,
            leray_transversal: 1e-8,
            bisection: 1e-10,
            unitary_step: 0.5,
            frame_step: 0.3,
            fd_step: 1e-4,
        }
    }
}

impl Tolerances {
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Tolerances {
            validation: d.validation * factor,
            isotropy: d.isotropy * factor,
            rank: d.rank * factor,
            minus_one: d.minus_one * factor,
            clearance: d.clearance * factor,
            regularity: d.regularity * factor,
            log_cut: d.log_cut * factor,
            leray_transversal: d.leray_transversal * factor,
            bisection: d.bisection * factor,
            ..d
        }
    }
}
