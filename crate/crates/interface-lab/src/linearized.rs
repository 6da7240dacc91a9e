//! Linearized interface operators and the vortex-sheet dispersion relation.
//!
//! Around a steady sheet with tangential slip `u = (v₊ − v₋)·τ̂`, the
//! quadratic energy controlling a small normal perturbation `w⊥` of the
//! interface splits into two competing parts:
//!
//! * the surface-tension form `⟨𝒜w, w⟩ = ∫ |∂_s w⊥|² dS`, third order in
//!   the mode number and always stabilizing;
//! * the shear form `⟨ℛ₀(v)w, w⟩ = −‖𝒩^{−1/2} 𝒟·(u w⊥ τ̂)‖²_{dS}`, second
//!   order and always destabilizing, with `𝒩 = (1/ρ₊)𝒩₊ + (1/ρ₋)𝒩₋` the
//!   density-weighted two-sided Dirichlet–Neumann operator.
//!
//! [`apply_a`] and [`apply_r0`] realize the operators concretely as
//! two-sided [`GradientField`]s — their `L²(ρ dx)` representatives on
//! admissible variations — while [`a_form`] and [`r0_form`] evaluate the
//! quadratic forms directly at the trace level.  The two routes agree
//! through the volume pairing, which the tests check mode by mode against
//! closed-form circle values.
//!
//! [`LinearizedSymbol`] packages the symbols `a(m) ~ m³` and `r(m) ~ m²`
//! on a flat interface or a circle, together with the resulting
//! dispersion relation: the classical Kelvin–Helmholtz balance with
//! surface tension (Drazin & Reid, ch. 1), where modes below the
//! threshold `m* = ρ₊ρ₋ ΔU² R/(ρ₊+ρ₋)` can grow exponentially and all
//! higher modes oscillate.

use num_complex::Complex64;

use crate::curve::ClosedCurve;
use crate::error::Result;
use crate::field::{BoundaryField, FieldKind};
use crate::potential::{Side, WeightedDtn};
use crate::tangent::{GradientField, TangentField};

/// Reference geometry for the closed-form symbols: a flat interface with
/// integer wavenumbers, or a circle of the given radius with angular
/// modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SymbolGeometry {
    Flat,
    Circle { radius: f64 },
}

/// Closed-form principal symbols of the linearized operators around a
/// uniform vortex sheet, and the dispersion relation they produce.
///
/// `delta_u` is the magnitude of the tangential slip.  The phase
/// convention places the interior fluid at rest with the exterior
/// sliding by `+delta_u τ̂` (flat case: `+delta_u x̂`); only `delta_u²`
/// enters the growth rates, the sign merely fixes the propagation
/// direction of the neutral modes.
#[derive(Clone, Copy, Debug)]
pub struct LinearizedSymbol {
    rho_plus: f64,
    rho_minus: f64,
    delta_u: f64,
    geometry: SymbolGeometry,
}

impl LinearizedSymbol {
    pub fn new(rho_plus: f64, rho_minus: f64, delta_u: f64, geometry: SymbolGeometry) -> Self {
        assert!(
            rho_plus.is_finite() && rho_plus > 0.0,
            "interior density must be positive, got {rho_plus}"
        );
        assert!(
            rho_minus.is_finite() && rho_minus > 0.0,
            "exterior density must be positive, got {rho_minus}"
        );
        assert!(delta_u.is_finite(), "slip must be finite, got {delta_u}");
        if let SymbolGeometry::Circle { radius } = geometry {
            assert!(
                radius.is_finite() && radius > 0.0,
                "circle radius must be positive, got {radius}"
            );
        }
        Self {
            rho_plus,
            rho_minus,
            delta_u,
            geometry,
        }
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }

    pub fn delta_u(&self) -> f64 {
        self.delta_u
    }

    pub fn geometry(&self) -> SymbolGeometry {
        self.geometry
    }

    fn rho_sum(&self) -> f64 {
        self.rho_plus + self.rho_minus
    }

    /// Surface-tension symbol `a(m) ≥ 0`: the value of `⟨𝒜w, w⟩ / ‖w‖²`
    /// on the `m`-th mode, with `‖w‖² = ∫ ρ|w|² dx` the volume norm of
    /// the mode's harmonic extension.  Grows like `m³`.
    pub fn a(&self, m: u32) -> f64 {
        let mf = f64::from(m);
        match self.geometry {
            SymbolGeometry::Flat => mf.powi(3) / self.rho_sum(),
            SymbolGeometry::Circle { radius } => mf.powi(3) / (self.rho_sum() * radius.powi(3)),
        }
    }

    /// Shear symbol `r(m) ≥ 0` of `−ℛ₀`: the mode value of
    /// `⟨−ℛ₀(v)w, w⟩ / ‖w‖²`.  Grows like `m²` with coefficient
    /// `ρ₊ρ₋ ΔU² / (ρ₊+ρ₋)²` (divided by `R²` on the circle).
    pub fn r(&self, m: u32) -> f64 {
        let mf = f64::from(m);
        let coeff =
            self.rho_plus * self.rho_minus * self.delta_u * self.delta_u / self.rho_sum().powi(2);
        match self.geometry {
            SymbolGeometry::Flat => coeff * mf * mf,
            SymbolGeometry::Circle { radius } => coeff * mf * mf / (radius * radius),
        }
    }

    /// Mode number where the symbols cross, `a(m*) = r(m*)`: the
    /// classical cutoff `ρ₊ρ₋ ΔU² R/(ρ₊+ρ₋)` above which surface tension
    /// dominates shear.  The exact discriminant roots sit near this value
    /// with `O(1)` corrections at small `m` from the curvature and drift
    /// terms.
    pub fn threshold_mode(&self) -> f64 {
        let coeff = self.rho_plus * self.rho_minus * self.delta_u * self.delta_u / self.rho_sum();
        match self.geometry {
            SymbolGeometry::Flat => coeff,
            SymbolGeometry::Circle { radius } => coeff * radius,
        }
    }

    /// Discriminant `D(m)` of the quadratic dispersion relation; a mode
    /// grows exactly when `D > 0`.
    fn discriminant(&self, m: u32) -> f64 {
        let mf = f64::from(m);
        let (rp, rm) = (self.rho_plus, self.rho_minus);
        match self.geometry {
            SymbolGeometry::Flat => {
                let du = self.delta_u;
                rp * rm * mf * mf * du * du - self.rho_sum() * mf.powi(3)
            }
            SymbolGeometry::Circle { radius } => {
                let omega = self.delta_u / radius;
                self.rho_sum()
                    * (rm * mf * (mf - 1.0) * omega * omega - (mf.powi(3) - mf) / radius.powi(3))
                    - rm * rm * mf * mf * omega * omega
            }
        }
    }

    /// Both roots `λ` of the dispersion relation for mode `m`, ordered by
    /// descending real part.  On the circle the underlying quadratic is
    ///
    /// ```text
    /// (ρ₊+ρ₋) λ² + 2iρ₋mΩ λ − [ρ₋m(m−1)Ω² − (m³−m)/R³] = 0,   Ω = ΔU/R,
    /// ```
    ///
    /// whose `R → ∞` limit at fixed wavelength is the flat relation
    /// `λ = (−iρ₋kΔU ± √(ρ₊ρ₋k²ΔU² − (ρ₊+ρ₋)k³))/(ρ₊+ρ₋)`.  With no
    /// slip the roots are the capillary pair `λ = ±i√((m³−m)/((ρ₊+ρ₋)R³))`;
    /// `m = 1` is the neutral translation mode.
    pub fn eigenvalues(&self, m: u32) -> (Complex64, Complex64) {
        let mf = f64::from(m);
        let rs = self.rho_sum();
        let drift = match self.geometry {
            SymbolGeometry::Flat => -self.rho_minus * mf * self.delta_u,
            SymbolGeometry::Circle { radius } => -self.rho_minus * mf * self.delta_u / radius,
        };
        let root = Complex64::new(self.discriminant(m), 0.0).sqrt();
        let base = Complex64::new(0.0, drift);
        let l1 = (base + root) / rs;
        let l2 = (base - root) / rs;
        if l1.re >= l2.re {
            (l1, l2)
        } else {
            (l2, l1)
        }
    }

    /// Exponential growth rate `max Re λ`; exactly zero for spectrally
    /// stable modes.
    pub fn growth_rate(&self, m: u32) -> f64 {
        let d = self.discriminant(m);
        if d > 0.0 {
            d.sqrt() / self.rho_sum()
        } else {
            0.0
        }
    }

    /// Whether mode `m` has a strictly growing root.
    pub fn is_unstable(&self, m: u32) -> bool {
        self.discriminant(m) > 0.0
    }
}

/// Both dispersion roots for mode `m`; convenience wrapper around
/// [`LinearizedSymbol::eigenvalues`].
pub fn dispersion(
    rho_plus: f64,
    rho_minus: f64,
    delta_u: f64,
    m: u32,
    geometry: SymbolGeometry,
) -> (Complex64, Complex64) {
    LinearizedSymbol::new(rho_plus, rho_minus, delta_u, geometry).eigenvalues(m)
}

/// Applies the surface-tension operator `𝒜` to a normal trace directly:
/// the two-sided gradient pair representing `w' ↦ ∫ (−Δ_S w⊥) w'⊥ dS` in
/// `L²(ρ dx)`.
///
/// Constants are annihilated node by node (the surface Laplacian of a
/// constant vanishes identically in spectral arithmetic): `𝒜` acts on
/// the shape of the perturbation, not on its mean displacement.
pub fn apply_a_density(
    curve: &ClosedCurve,
    w_perp: &BoundaryField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<GradientField> {
    let f0 = curve
        .surface_laplacian(&w_perp.reinterpret(FieldKind::Scalar))
        .scale(-1.0);
    GradientField::from_surface_density(curve, &f0, rho_plus, rho_minus)
}

/// The surface-tension operator applied to an admissible variation `w`,
/// acting through its interior normal trace `w⊥ = w₊·N₊`.
pub fn apply_a(
    curve: &ClosedCurve,
    w: &TangentField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<GradientField> {
    apply_a_density(curve, &w.normal_trace(Side::Interior), rho_plus, rho_minus)
}

/// The quadratic form `⟨𝒜w, w⟩ = ∫ |∂_s w⊥|² dS`, evaluated at the trace
/// level without any volume solve.
pub fn a_form(curve: &ClosedCurve, w: &TangentField) -> f64 {
    let wperp = w.normal_trace(Side::Interior);
    let dw = curve.arclength_derivative(&wperp);
    curve.inner_product(&dw, &dw)
}

/// `𝒟·(u w⊥ τ̂)`, the surface divergence of the slip-transported normal
/// trace — the common source term of the shear operator and its form.
fn shear_divergence(
    curve: &ClosedCurve,
    v: &TangentField,
    w: &TangentField,
) -> Result<BoundaryField> {
    let u = v.slip();
    let wperp = w.normal_trace(Side::Interior);
    let prod = BoundaryField::new(
        u.as_slice()
            .iter()
            .zip(wperp.as_slice())
            .map(|(a, b)| a * b)
            .collect(),
        FieldKind::TangentVector,
    );
    curve.surface_divergence(&prod)
}

/// Applies the shear operator `ℛ₀(v)` to `w`.
///
/// With `u = (v₊ − v₋)·τ̂`, the chain is `h = 𝒩⁻¹ 𝒟·(u w⊥ τ̂)`, then the
/// transported density `g = ∇_u h = u ∂_s h`, realized as the two-sided
/// gradient pair of `g`.  Pairing the result against `w'` gives
/// `⟨ℛ₀(v)w, w'⟩ = −∫ (𝒩⁻¹ d_w) d_{w'} dS` with `d_w = 𝒟·(u w⊥ τ̂)` — a
/// symmetric, negative semidefinite form (so `−ℛ₀` is dissipationless
/// but destabilizing in the energy balance).  Debug builds verify the
/// integration by parts behind that symmetry on the actual data.
pub fn apply_r0(
    curve: &ClosedCurve,
    v: &TangentField,
    w: &TangentField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<GradientField> {
    let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
    let d = shear_divergence(curve, v, w)?;
    let h = wd.solve_cg(&d)?;
    let u = v.slip();
    let dh = curve.arclength_derivative(&h);
    let g = BoundaryField::scalar(
        u.as_slice()
            .iter()
            .zip(dh.as_slice())
            .map(|(u, d)| u * d)
            .collect(),
    );
    #[cfg(debug_assertions)]
    {
        // ⟨g, w⊥⟩ = −⟨h, d⟩: spectral differentiation is antisymmetric on
        // the uniform grid, so the discrete form inherits the symmetry of
        // the continuum one exactly (up to rounding).
        let wperp = w.normal_trace(Side::Interior);
        let lhs = curve.inner_product(&g, &wperp);
        let rhs = -curve.inner_product(&h, &d);
        let scale = curve.l2_norm(&g) * curve.l2_norm(&wperp)
            + curve.l2_norm(&h) * curve.l2_norm(&d);
        debug_assert!(
            (lhs - rhs).abs() <= 1e-8 * scale.max(f64::MIN_POSITIVE),
            "transport form lost its discrete symmetry: {lhs:.3e} vs {rhs:.3e}"
        );
    }
    GradientField::from_surface_density(curve, &g, rho_plus, rho_minus)
}

/// The nonnegative shear form `⟨−ℛ₀(v)w, w⟩ = ‖𝒩^{−1/2} 𝒟·(u w⊥ τ̂)‖²_{dS}`,
/// evaluated through the dense symmetric square root of the weighted
/// Dirichlet–Neumann operator.
pub fn r0_form(
    curve: &ClosedCurve,
    v: &TangentField,
    w: &TangentField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<f64> {
    let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
    let d = shear_divergence(curve, v, w)?;
    let half = wd.apply_inverse_sqrt(&d)?;
    Ok(curve.inner_product(&half, &half))
}
