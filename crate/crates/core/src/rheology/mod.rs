//! Pointwise constitutive law of the visco-plastic ice rheology.
//!
//! Everything here acts on a single strain-rate tensor `z` (the symmetric
//! velocity gradient `Du`, constant on a P1 element). The stress is
//!
//! ```text
//! σ(P, z) = P/2 · (D^λ z / δ(z) − Id),    D^λ z = λ dev z + (tr z) Id,
//! ```
//!
//! where `δ_p(z) = √(λ|dev z|² + (tr z)²)` is the plastic strain-rate magnitude and
//! `δ` one of its regularized versions selected by [`CutoffMode`].

mod tensor;

use serde::{Deserialize, Serialize};

pub use tensor::SymTensor2;

use crate::error::{Error, Result};

/// Which inverse-viscosity function replaces `δ_p` in the stress denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    /// `clamp(δ_p, δ_lo, δ_hi)`: the local cut-off on both sides.
    CutoffBoth,
    /// `δ_p` itself; the stress is the plastic tensor with `σ_p(0) = 0`.
    Plastic,
    /// `√(ε + δ_p²)`.
    EpsOnly,
    /// `min(√(ε + δ_p²), δ_hi)`: ε-regularization plus a cut-off at large rates.
    EpsUpper,
    /// `max(√(ε + δ_p²), δ_hi)`: the literal max reading of the large-rate cut-off.
    EpsUpperMax,
    /// `clamp(√(ε + δ_p²), δ_lo, δ_hi)`.
    EpsBoth,
}

impl CutoffMode {
    pub const ALL: [CutoffMode; 6] = [
        CutoffMode::CutoffBoth,
        CutoffMode::Plastic,
        CutoffMode::EpsOnly,
        CutoffMode::EpsUpper,
        CutoffMode::EpsUpperMax,
        CutoffMode::EpsBoth,
    ];

    pub fn uses_epsilon(self) -> bool {
        !matches!(self, CutoffMode::CutoffBoth | CutoffMode::Plastic)
    }

    /// Modes whose stress grows linearly for large strain rates.
    pub fn is_coercive(self) -> bool {
        matches!(
            self,
            CutoffMode::CutoffBoth | CutoffMode::EpsUpper | CutoffMode::EpsBoth
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            CutoffMode::CutoffBoth => "cutoff_both",
            CutoffMode::Plastic => "plastic",
            CutoffMode::EpsOnly => "eps_only",
            CutoffMode::EpsUpper => "eps_upper",
            CutoffMode::EpsUpperMax => "eps_upper_max",
            CutoffMode::EpsBoth => "eps_both",
        }
    }
}

impl std::str::FromStr for CutoffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CutoffMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown cut-off mode `{s}`")))
    }
}

pub const DEFAULT_E_BAR: f64 = 2.0;
/// Lower strain-rate cut-off, s⁻¹.
pub const DEFAULT_DELTA_LO: f64 = 2e-9;
/// Upper strain-rate cut-off, s⁻¹.
pub const DEFAULT_DELTA_HI: f64 = 2e-4;

/// Constitutive configuration. `lambda = 2 / e_bar²` is derived and cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RheologyParams {
    e_bar: f64,
    lambda: f64,
    delta_lo: f64,
    delta_hi: f64,
    epsilon: f64,
    mode: CutoffMode,
}

impl Default for RheologyParams {
    fn default() -> Self {
        Self::new(
            DEFAULT_E_BAR,
            DEFAULT_DELTA_LO,
            DEFAULT_DELTA_HI,
            0.0,
            CutoffMode::CutoffBoth,
        )
        .expect("defaults are valid")
    }
}

impl RheologyParams {
    pub fn new(e_bar: f64, delta_lo: f64, delta_hi: f64, epsilon: f64, mode: CutoffMode) -> Result<Self> {
        if !(e_bar.is_finite() && e_bar > 0.0) {
            return Err(Error::InvalidParameter(format!("e_bar must be positive, got {e_bar}")));
        }
        if !(delta_lo.is_finite() && delta_lo > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_lo must be positive, got {delta_lo}"
            )));
        }
        if !(delta_hi.is_finite() && delta_hi > delta_lo) {
            return Err(Error::InvalidParameter(format!(
                "delta_hi must exceed delta_lo ({delta_lo}), got {delta_hi}"
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be nonnegative, got {epsilon}"
            )));
        }
        if !mode.uses_epsilon() && epsilon != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be 0 in mode {}, got {epsilon}",
                mode.name()
            )));
        }
        Ok(Self {
            e_bar,
            lambda: 2.0 / (e_bar * e_bar),
            delta_lo,
            delta_hi,
            epsilon,
            mode,
        })
    }

    /// Same cut-offs and ellipticity, different mode (ε is reset to 0 for non-ε modes).
    pub fn with_mode(&self, mode: CutoffMode, epsilon: f64) -> Result<Self> {
        let epsilon = if mode.uses_epsilon() { epsilon } else { 0.0 };
        Self::new(self.e_bar, self.delta_lo, self.delta_hi, epsilon, mode)
    }

    pub fn e_bar(&self) -> f64 {
        self.e_bar
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn delta_lo(&self) -> f64 {
        self.delta_lo
    }
    pub fn delta_hi(&self) -> f64 {
        self.delta_hi
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn mode(&self) -> CutoffMode {
        self.mode
    }

    /// The inverse viscosity as a function of the plastic magnitude `x = δ_p(z)`.
    ///
    /// Every mode depends on `z` only through `δ_p(z)`. Clamps use closed intervals.
    pub fn delta_of_plastic(&self, x: f64) -> f64 {
        let (lo, hi) = (self.delta_lo, self.delta_hi);
        let eps = || (self.epsilon + x * x).sqrt();
        match self.mode {
            CutoffMode::CutoffBoth => x.clamp(lo, hi),
            CutoffMode::Plastic => x,
            CutoffMode::EpsOnly => eps(),
            CutoffMode::EpsUpper => eps().min(hi),
            CutoffMode::EpsUpperMax => eps().max(hi),
            CutoffMode::EpsBoth => eps().clamp(lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub trace: f64,
    pub dev: SymTensor2,
    pub dev_norm: f64,
}

pub fn tensor_invariants(z: SymTensor2) -> Invariants {
    let dev = z.dev();
    Invariants {
        trace: z.trace(),
        dev,
        dev_norm: dev.norm(),
    }
}

/// `λ dev z + (tr z) Id`. Satisfies `D^λ z : z = δ_p(z)²`.
pub fn d_lambda(z: SymTensor2, params: &RheologyParams) -> SymTensor2 {
    params.lambda * z.dev() + z.trace() * SymTensor2::IDENTITY
}

pub fn delta_p(z: SymTensor2, params: &RheologyParams) -> f64 {
    let tr = z.trace();
    (params.lambda * z.dev().norm_sq() + tr * tr).sqrt()
}

/// The mode-dependent inverse viscosity `δ(z)`.
pub fn delta_reg(z: SymTensor2, params: &RheologyParams) -> f64 {
    params.delta_of_plastic(delta_p(z, params))
}

/// Stress `σ(P, z)`. In [`CutoffMode::Plastic`] the branch `σ_p(0) = 0` applies.
pub fn sigma(p: f64, z: SymTensor2, params: &RheologyParams) -> Result<SymTensor2> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ice strength must be nonnegative, got {p}"
        )));
    }
    let dp = delta_p(z, params);
    if params.mode == CutoffMode::Plastic && dp == 0.0 {
        return Ok(SymTensor2::ZERO);
    }
    let delta = params.delta_of_plastic(dp);
    if delta == 0.0 {
        return Err(Error::DegenerateInput(
            "zero strain rate with epsilon = 0 leaves the stress undefined",
        ));
    }
    Ok(0.5 * p * (d_lambda(z, params) * (1.0 / delta) - SymTensor2::IDENTITY))
}

/// Residual of the elliptic yield-curve identity,
/// `¼(tr s)² + (1/λ)|dev s|² − (P²/4)(δ_p/δ)²` with `s = σ + (P/2) Id`.
///
/// Zero for every mode; the factor `(δ_p/δ)²` is 1 on the plastic branch.
pub fn yield_residual(p: f64, z: SymTensor2, params: &RheologyParams) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ice strength must be positive, got {p}"
        )));
    }
    if params.mode == CutoffMode::Plastic && z == SymTensor2::ZERO {
        return Err(Error::DegenerateInput(
            "plastic stress at zero strain rate is off the yield curve",
        ));
    }
    Ok(yield_lhs(p, z, params)? - 0.25 * p * p * yield_ratio(z, params))
}

/// Left-hand side of the yield-curve identity for the computed stress.
pub fn yield_lhs(p: f64, z: SymTensor2, params: &RheologyParams) -> Result<f64> {
    let s = sigma(p, z, params)? + 0.5 * p * SymTensor2::IDENTITY;
    let tr = s.trace();
    Ok(0.25 * tr * tr + s.dev().norm_sq() / params.lambda)
}

/// `(δ_p(z)/δ(z))²`: 1 in-band, below 1 under the lower cut-off, above 1 past the upper one.
pub fn yield_ratio(z: SymTensor2, params: &RheologyParams) -> f64 {
    let f = scalar_profile(delta_p(z, params), params);
    f * f
}

/// `f(x) = x / δ(x)` as a function of the plastic magnitude. Nondecreasing in every mode.
pub fn scalar_profile(x: f64, params: &RheologyParams) -> f64 {
    if params.mode == CutoffMode::Plastic {
        return 1.0;
    }
    let delta = params.delta_of_plastic(x);
    if delta == 0.0 {
        // x = 0 with ε = 0: x/x → 1
        1.0
    } else {
        x / delta
    }
}

/// Pointwise growth bound `(P/√2)(1 + δ_p/δ)` on `|σ(P, z)|`, valid for `λ ≤ 2`.
pub fn stress_growth_bound(p: f64, z: SymTensor2, params: &RheologyParams) -> f64 {
    p * std::f64::consts::FRAC_1_SQRT_2 * (1.0 + scalar_profile(delta_p(z, params), params))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn band(mode: CutoffMode, eps: f64) -> RheologyParams {
        RheologyParams::new(2.0, 0.5, 2.0, eps, mode).unwrap()
    }

    #[test]
    fn lambda_is_derived_from_e_bar() {
        let p = RheologyParams::default();
        assert_eq!(p.lambda(), 0.5);
        assert_eq!(p.delta_lo(), 2e-9);
        assert_eq!(p.delta_hi(), 2e-4);
        assert_eq!(
            RheologyParams::new(1.0, 1.0, 2.0, 0.0, CutoffMode::Plastic)
                .unwrap()
                .lambda(),
            2.0
        );
    }

    #[test]
    fn params_validation() {
        assert!(RheologyParams::new(0.0, 1.0, 2.0, 0.0, CutoffMode::CutoffBoth).is_err());
        assert!(RheologyParams::new(2.0, 2.0, 2.0, 0.0, CutoffMode::CutoffBoth).is_err());
        assert!(RheologyParams::new(2.0, 0.0, 2.0, 0.0, CutoffMode::CutoffBoth).is_err());
        assert!(RheologyParams::new(2.0, 1.0, 2.0, 1e-3, CutoffMode::CutoffBoth).is_err());
        assert!(RheologyParams::new(2.0, 1.0, 2.0, 1e-3, CutoffMode::Plastic).is_err());
        assert!(RheologyParams::new(2.0, 1.0, 2.0, -1.0, CutoffMode::EpsOnly).is_err());
        assert!(RheologyParams::new(2.0, 1.0, 2.0, 1e-3, CutoffMode::EpsBoth).is_ok());
    }

    #[test]
    fn invariants_examples() {
        let inv = tensor_invariants(SymTensor2::IDENTITY);
        assert_eq!((inv.trace, inv.dev, inv.dev_norm), (2.0, SymTensor2::ZERO, 0.0));

        let inv = tensor_invariants(SymTensor2::diag(1.0, -1.0));
        assert_eq!(inv.trace, 0.0);
        assert_eq!(inv.dev, SymTensor2::diag(1.0, -1.0));
        assert_relative_eq!(inv.dev_norm, 2f64.sqrt(), max_relative = 1e-15);

        let inv = tensor_invariants(SymTensor2::new(2.0, 1.0, 0.0));
        assert_eq!(inv.trace, 2.0);
        assert_eq!(inv.dev, SymTensor2::new(1.0, 1.0, -1.0));
        assert_eq!(inv.dev_norm, 2.0);
        assert_eq!(inv.dev.trace(), 0.0);
    }

    #[test]
    fn d_lambda_examples() {
        let p = band(CutoffMode::CutoffBoth, 0.0);
        assert_eq!(d_lambda(SymTensor2::ZERO, &p), SymTensor2::ZERO);
        assert_eq!(d_lambda(SymTensor2::diag(1.0, 1.0), &p), SymTensor2::diag(2.0, 2.0));
        assert_eq!(d_lambda(SymTensor2::diag(1.0, -1.0), &p), SymTensor2::diag(0.5, -0.5));
    }

    #[test]
    fn delta_p_examples() {
        let p = band(CutoffMode::CutoffBoth, 0.0);
        assert_eq!(delta_p(SymTensor2::ZERO, &p), 0.0);
        assert_eq!(delta_p(SymTensor2::diag(1.0, -1.0), &p), 1.0);
        for e_bar in [0.5, 1.0, 2.0, 3.0] {
            let q = RheologyParams::new(e_bar, 0.5, 2.0, 0.0, CutoffMode::CutoffBoth).unwrap();
            assert_eq!(delta_p(SymTensor2::IDENTITY, &q), 2.0);
        }
    }

    #[test]
    fn delta_reg_examples() {
        let p = band(CutoffMode::CutoffBoth, 0.0);
        assert_eq!(delta_reg(SymTensor2::diag(1.0, -1.0), &p), 1.0);
        assert_eq!(delta_reg(SymTensor2::ZERO, &p), 0.5);
        assert_eq!(delta_reg(SymTensor2::diag(10.0, 10.0), &p), 2.0);
        assert_eq!(delta_reg(SymTensor2::ZERO, &band(CutoffMode::EpsOnly, 1.0)), 1.0);
        assert_eq!(delta_reg(SymTensor2::ZERO, &band(CutoffMode::Plastic, 0.0)), 0.0);
        // both readings of the upper cut-off
        let z = SymTensor2::diag(0.25, 0.25);
        assert_eq!(delta_reg(z, &band(CutoffMode::EpsUpper, 1e-4)), (1e-4f64 + 0.25).sqrt());
        assert_eq!(delta_reg(z, &band(CutoffMode::EpsUpperMax, 1e-4)), 2.0);
        assert_eq!(delta_reg(SymTensor2::ZERO, &band(CutoffMode::EpsBoth, 1e-4)), 0.5);
    }

    #[test]
    fn sigma_examples() {
        let p = band(CutoffMode::CutoffBoth, 0.0);
        let s = sigma(2.0, SymTensor2::diag(0.5, 0.5), &p).unwrap();
        assert_eq!(s, SymTensor2::ZERO);
        assert_eq!(sigma(2.0, SymTensor2::ZERO, &p).unwrap(), -SymTensor2::IDENTITY);
        let s = sigma(2.0, SymTensor2::diag(1.0, -1.0), &p).unwrap();
        assert_eq!(s, SymTensor2::diag(-0.5, -1.5));
    }

    #[test]
    fn sigma_compressive_pure_trace_is_not_stress_free() {
        // dev z = 0 in-band but tr z < 0: the formula gives −P Id, not 0
        let p = band(CutoffMode::CutoffBoth, 0.0);
        let s = sigma(2.0, SymTensor2::diag(-0.5, -0.5), &p).unwrap();
        assert_eq!(s, -2.0 * SymTensor2::IDENTITY);
    }

    #[test]
    fn sigma_plastic_zero_branch_and_degenerate_eps() {
        let plastic = band(CutoffMode::Plastic, 0.0);
        assert_eq!(sigma(3.0, SymTensor2::ZERO, &plastic).unwrap(), SymTensor2::ZERO);
        let eps0 = band(CutoffMode::EpsOnly, 0.0);
        assert!(matches!(
            sigma(3.0, SymTensor2::ZERO, &eps0),
            Err(Error::DegenerateInput(_))
        ));
        assert!(sigma(3.0, SymTensor2::diag(1.0, 0.0), &eps0).is_ok());
        assert!(sigma(-1.0, SymTensor2::ZERO, &plastic).is_err());
    }

    #[test]
    fn yield_residual_examples() {
        let plastic = band(CutoffMode::Plastic, 0.0);
        for z in [SymTensor2::new(0.3, -1.2, 2.0), SymTensor2::diag(-1.0, -1.0)] {
            let r = yield_residual(5.0, z, &plastic).unwrap();
            assert!(r.abs() <= 1e-12 * 25.0 / 4.0, "{r}");
        }
        assert!(yield_residual(1.0, SymTensor2::ZERO, &plastic).is_err());

        let p = band(CutoffMode::CutoffBoth, 0.0);
        let z = SymTensor2::diag(0.5, 0.5);
        assert_relative_eq!(yield_lhs(2.0, z, &p).unwrap(), 1.0, max_relative = 1e-15);
        assert!(yield_residual(2.0, z, &p).unwrap().abs() < 1e-15);

        // δ_p = 2 δ_hi = 4
        let z = SymTensor2::diag(2.0, 2.0);
        assert_eq!(delta_p(z, &p), 4.0);
        assert_relative_eq!(yield_lhs(2.0, z, &p).unwrap(), 4.0, max_relative = 1e-15);
        assert!(yield_residual(2.0, z, &p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn scalar_profile_examples() {
        let p = band(CutoffMode::CutoffBoth, 0.0);
        assert_eq!(scalar_profile(0.5, &p), 1.0);
        assert_eq!(scalar_profile(1.3, &p), 1.0);
        assert_eq!(scalar_profile(2.0, &p), 1.0);
        assert_eq!(scalar_profile(4.0, &p), 2.0);
        assert_eq!(scalar_profile(0.25, &p), 0.5);
        let e = band(CutoffMode::EpsOnly, 1.0);
        assert_relative_eq!(scalar_profile(1.0, &e), std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(scalar_profile(7.0, &band(CutoffMode::Plastic, 0.0)), 1.0);
    }

    #[test]
    fn sigma_is_continuous_across_band_edges() {
        let p = band(CutoffMode::CutoffBoth, 0.0);
        let dir = SymTensor2::new(0.3, 0.7, -0.2);
        for edge in [p.delta_lo(), p.delta_hi()] {
            let z = dir * (edge / delta_p(dir, &p));
            let s0 = sigma(3.0, z, &p).unwrap();
            for f in [1.0 + 1e-8, 1.0 - 1e-8] {
                let s1 = sigma(3.0, z * f, &p).unwrap();
                assert!((s1 - s0).norm() <= 1e-6 * 3.0);
            }
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in CutoffMode::ALL {
            assert_eq!(m.name().parse::<CutoffMode>().unwrap(), m);
        }
        assert!("nope".parse::<CutoffMode>().is_err());
    }
}
