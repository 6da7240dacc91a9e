//! Energy functionals for the two-phase interface and their diagnostics.
//!
//! Two levels of bookkeeping are provided. The conserved energy `E₀` is
//! the physical one: kinetic energy of both phases plus the perimeter of
//! the interface (the surface-tension contribution in two dimensions).
//! On top of it sits a graded functional `E` of order `3k` built from the
//! density-weighted Dirichlet–Neumann operator `𝒩̄` and the surface
//! Laplacian `Δ_S`:
//!
//! * a velocity term `∫ v⊥ (−Δ_S 𝒩̄)^{k−1} (−Δ_S) v⊥ dS`,
//! * a curvature term `∫ κ 𝒩̄ (−Δ_S 𝒩̄)^{k−1} κ dS`,
//! * a vorticity term, zero for irrotational fields and realized as a
//!   grid Sobolev norm of order `3k/2 − 1` otherwise.
//!
//! Both boundary terms are evaluated by splitting the self-adjoint
//! operator string at its central factor, so the computed values are
//! nonnegative by construction rather than by cancellation. The strings
//! themselves are exposed ([`velocity_string`], [`curvature_string`]) for
//! cross-checks against the split evaluation.
//!
//! The module also carries a pointwise residual check of the vorticity
//! transport identity `D_t ω = −(Dv)*ω − ω Dv` on manufactured flows,
//! which is how time integrators are audited for consistency with the
//! curl dynamics without reference solutions.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;

use crate::curve::ClosedCurve;
use crate::error::Result;
use crate::fft;
use crate::field::{BoundaryField, FieldKind};
use crate::potential::{Side, WeightedDtn};
use crate::velocity::{Representation, TwoPhaseVelocity};

/// One row of energy bookkeeping for a single interface state.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    /// Simulation time the state belongs to (0 for standalone states).
    pub time: f64,
    /// Conserved energy: kinetic plus perimeter.
    pub e0: f64,
    /// Velocity term of the order-`3k` functional.
    pub e_a_term: f64,
    /// Curvature term of the order-`3k` functional.
    pub e_kappa_term: f64,
    /// Vorticity term; identically zero for irrotational states.
    pub e_omega_term: f64,
    /// Grading of the functional.
    pub k: u32,
    /// Diagnostic `H^{3k/2−1}` norm of the curvature.
    pub kappa_norm: f64,
    /// Diagnostic `H^{3k/2−1/2}` norm of the interior normal velocity.
    pub v_perp_norm: f64,
}

impl EnergyReport {
    /// Column order of [`EnergyReport::csv_row`]. The `e_total` column is
    /// the sum of the three functional terms.
    pub const CSV_HEADER: &'static str =
        "time,e0,e_a_term,e_kappa_term,e_omega_term,e_total,k,kappa_norm,v_perp_norm";

    /// The order-`3k` functional: sum of its three terms.
    pub fn total(&self) -> f64 {
        self.e_a_term + self.e_kappa_term + self.e_omega_term
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Serializes the report in the order of [`EnergyReport::CSV_HEADER`],
    /// floats in full-precision scientific notation.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
            self.time,
            self.e0,
            self.e_a_term,
            self.e_kappa_term,
            self.e_omega_term,
            self.total(),
            self.k,
            self.kappa_norm,
            self.v_perp_norm
        )
    }
}

/// Conserved energy `E₀`: kinetic energy of both phases plus the
/// perimeter of the interface.
///
/// Fails when the exterior kinetic energy cannot be trusted because the
/// field decays too slowly along the grid rays (states with net
/// circulation have logarithmically divergent energy, and that is
/// reported as an error rather than a truncated number).
pub fn energy_e0(
    curve: &ClosedCurve,
    vel: &TwoPhaseVelocity,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<f64> {
    assert!(
        rho_plus > 0.0 && rho_minus > 0.0,
        "densities must be positive, got ρ₊ = {rho_plus}, ρ₋ = {rho_minus}"
    );
    Ok(vel.kinetic_energy(rho_plus, rho_minus)? + curve.length())
}

fn neg_lap(curve: &ClosedCurve, f: &BoundaryField) -> BoundaryField {
    curve.surface_laplacian(f).scale(-1.0)
}

/// `∫ |∂_s f|² dS`, which discretely equals `⟨f, −Δ_S f⟩` because the
/// spectral differentiation matrix is antisymmetric.
fn dirichlet_form(curve: &ClosedCurve, f: &BoundaryField) -> f64 {
    let df = curve.arclength_derivative(f);
    curve.inner_product(&df, &df)
}

/// Applies the velocity operator string `(−Δ_S 𝒩̄)^{k−1} (−Δ_S)` to a
/// scalar boundary field (rightmost factor first).
pub fn velocity_string(
    curve: &ClosedCurve,
    f: &BoundaryField,
    rho_plus: f64,
    rho_minus: f64,
    k: u32,
) -> Result<BoundaryField> {
    assert!(k >= 1, "the operator string needs k ≥ 1, got {k}");
    let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
    let mut g = neg_lap(curve, &f.reinterpret(FieldKind::Scalar));
    for _ in 1..k {
        g = neg_lap(curve, &wd.apply_bar(&g)?);
    }
    Ok(g)
}

/// Applies the curvature operator string `𝒩̄ (−Δ_S 𝒩̄)^{k−1}` to a
/// scalar boundary field (rightmost factor first).
pub fn curvature_string(
    curve: &ClosedCurve,
    f: &BoundaryField,
    rho_plus: f64,
    rho_minus: f64,
    k: u32,
) -> Result<BoundaryField> {
    assert!(k >= 1, "the operator string needs k ≥ 1, got {k}");
    let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
    let mut g = f.reinterpret(FieldKind::Scalar);
    for _ in 1..k {
        g = neg_lap(curve, &wd.apply_bar(&g)?);
    }
    wd.apply_bar(&g)
}

/// `⟨v⊥, (−Δ_S 𝒩̄)^{k−1}(−Δ_S) v⊥⟩_dS` via the central split of the
/// palindromic string: the result is a quadratic form `⟨B v, 𝒩̄ B v⟩`
/// (k even) or `∫ |∂_s B v|² dS` (k odd), hence nonnegative without
/// relying on cancellation.
fn a_term(
    curve: &ClosedCurve,
    wd: &WeightedDtn,
    v_perp: &BoundaryField,
    k: u32,
) -> Result<f64> {
    let mut b = v_perp.reinterpret(FieldKind::Scalar);
    if k % 2 == 0 {
        for _ in 0..(k - 2) / 2 {
            b = wd.apply_bar(&neg_lap(curve, &b))?;
        }
        let b = neg_lap(curve, &b);
        let nb = wd.apply_bar(&b)?;
        Ok(curve.inner_product(&b, &nb))
    } else {
        for _ in 0..(k - 1) / 2 {
            b = wd.apply_bar(&neg_lap(curve, &b))?;
        }
        Ok(dirichlet_form(curve, &b))
    }
}

/// `⟨κ, 𝒩̄(−Δ_S 𝒩̄)^{k−1} κ⟩_dS` via the central split, mirroring
/// [`a_term`] with the roles of the two factors exchanged.
fn kappa_term(
    curve: &ClosedCurve,
    wd: &WeightedDtn,
    kappa: &BoundaryField,
    k: u32,
) -> Result<f64> {
    if k % 2 == 0 {
        let mut b = wd.apply_bar(kappa)?;
        for _ in 0..(k - 2) / 2 {
            b = wd.apply_bar(&neg_lap(curve, &b))?;
        }
        Ok(dirichlet_form(curve, &b))
    } else {
        let mut b = kappa.reinterpret(FieldKind::Scalar);
        for _ in 0..(k - 1) / 2 {
            b = neg_lap(curve, &wd.apply_bar(&b)?);
        }
        let nb = wd.apply_bar(&b)?;
        Ok(curve.inner_product(&b, &nb))
    }
}

/// Grid Sobolev norm of the vorticity, squared and summed over both
/// sides.
///
/// The realization applies the angular half-symbol `(1 + m²)^{σ/2}` with
/// `σ = 3k/2 − 1` ring by ring before exact grid quadrature; radial
/// regularity is not separately weighted. This is one member of the
/// equivalence class of order-`σ` volume norms for fields resolved on the
/// star-shaped grids, not a canonical representative, and exterior
/// contributions assume the vorticity decays fast enough for the ray
/// quadrature (states built by this crate have compactly supported or
/// identically zero vorticity).
fn vorticity_term(vel: &TwoPhaseVelocity, k: u32) -> f64 {
    let sigma = 1.5 * f64::from(k) - 1.0;
    let mut total = 0.0;
    for side in [Side::Interior, Side::Exterior] {
        let sv = vel.side(side);
        let solver = sv.solver();
        let (_, jb, jc) = sv.jacobian_grids();
        let (m, n) = (jb.nrows(), jb.ncols());
        let mut filtered = DMatrix::zeros(m, n);
        for i in 0..m {
            if solver.is_infinity_ring(i) {
                continue;
            }
            let ring: Vec<f64> = (0..n).map(|j| jc[(i, j)] - jb[(i, j)]).collect();
            let out = fft::apply_symbol(&ring, |mm| {
                Complex64::new((1.0 + (mm * mm) as f64).powf(sigma / 2.0), 0.0)
            });
            for (j, v) in out.iter().enumerate() {
                filtered[(i, j)] = *v;
            }
        }
        let sq = filtered.component_mul(&filtered);
        total += solver.integrate_grid(&sq);
    }
    total
}

/// Evaluates the order-`3k` energy of a state and attaches the
/// diagnostic Sobolev norms. Supported gradings are `2 ≤ k ≤ 5`.
///
/// The returned report carries `time = 0`; use
/// [`EnergyReport::with_time`] to stamp it.
pub fn energy_e(
    curve: &ClosedCurve,
    vel: &TwoPhaseVelocity,
    rho_plus: f64,
    rho_minus: f64,
    k: u32,
) -> Result<EnergyReport> {
    assert!(
        (2..=5).contains(&k),
        "energy grading k = {k} outside the supported range 2..=5"
    );
    let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
    let v_perp = vel.normal_trace(Side::Interior);
    let kappa = curve.curvature();
    let e_a_term = a_term(curve, &wd, &v_perp, k)?;
    let e_kappa_term = kappa_term(curve, &wd, &kappa, k)?;
    let e_omega_term = match vel.representation() {
        Representation::HarmonicGradient => 0.0,
        Representation::Manufactured => vorticity_term(vel, k),
    };
    let e0 = energy_e0(curve, vel, rho_plus, rho_minus)?;
    Ok(EnergyReport {
        time: 0.0,
        e0,
        e_a_term,
        e_kappa_term,
        e_omega_term,
        k,
        kappa_norm: curve.sobolev_norm(&kappa, 1.5 * f64::from(k) - 1.0),
        v_perp_norm: curve.sobolev_norm(&v_perp, 1.5 * f64::from(k) - 0.5),
    })
}

/// Closure giving velocity and Jacobian at `(x, y, t)`, Jacobian
/// convention `J[(i, j)] = ∂v_i/∂x_j`.
pub type FlowVelocity = Arc<dyn Fn(f64, f64, f64) -> (Vector2<f64>, Matrix2<f64>) + Send + Sync>;

/// Closure giving vorticity value, its time derivative, and its spatial
/// gradient at `(x, y, t)`.
pub type FlowVorticity = Arc<dyn Fn(f64, f64, f64) -> (f64, f64, Vector2<f64>) + Send + Sync>;

/// A space-time flow with analytic derivatives, used to audit the
/// vorticity transport identity pointwise.
pub struct ManufacturedFlow {
    pub velocity: FlowVelocity,
    pub vorticity: FlowVorticity,
}

impl ManufacturedFlow {
    /// Rigid rotation about `center`: vorticity is the constant
    /// `2·rate`, transported exactly.
    pub fn rigid_rotation(center: Vector2<f64>, rate: f64) -> Self {
        Self {
            velocity: Arc::new(move |x, y, _| {
                (
                    rate * Vector2::new(-(y - center.y), x - center.x),
                    Matrix2::new(0.0, -rate, rate, 0.0),
                )
            }),
            vorticity: Arc::new(move |_, _, _| (2.0 * rate, 0.0, Vector2::zeros())),
        }
    }

    /// A cellular flow translating at the given horizontal speed:
    /// the stream function `ψ = sin(x − ct) sin(y)` rides on the uniform
    /// velocity `(c, 0)`, so its vorticity `−2ψ` is transported exactly.
    pub fn traveling_cell(speed: f64) -> Self {
        Self {
            velocity: Arc::new(move |x, y, t| {
                let xi = x - speed * t;
                let v = Vector2::new(speed - xi.sin() * y.cos(), xi.cos() * y.sin());
                let j = Matrix2::new(
                    -xi.cos() * y.cos(),
                    xi.sin() * y.sin(),
                    -xi.sin() * y.sin(),
                    xi.cos() * y.cos(),
                );
                (v, j)
            }),
            vorticity: Arc::new(move |x, y, t| {
                let xi = x - speed * t;
                (
                    -2.0 * xi.sin() * y.sin(),
                    2.0 * speed * xi.cos() * y.sin(),
                    Vector2::new(-2.0 * xi.cos() * y.sin(), -2.0 * xi.sin() * y.cos()),
                )
            }),
        }
    }
}

/// Worst pointwise residual of the vorticity transport identity
/// `D_t ω = −(Dv)*ω − ω Dv` over the given probes and times, with
/// `ω` the antisymmetric part of the velocity gradient.
///
/// In the gradient convention `G_ij = ∂_i v_j` the right-hand side is
/// `−(Gᵀ ω + ω G)`; the stored Jacobian closure uses `J = Gᵀ`. For a
/// scalar 2-D vorticity `w` the whole identity collapses to
/// `∂_t w + v·∇w + w ∇·v = 0`, but the residual is evaluated in matrix
/// form so the check stays shaped like the identity it audits.
pub fn curl_evolution_residual(
    flow: &ManufacturedFlow,
    probes: &[(f64, f64)],
    times: &[f64],
) -> f64 {
    let mut worst = 0.0f64;
    for &t in times {
        for &(x, y) in probes {
            let (v, jac) = (flow.velocity)(x, y, t);
            let (w, w_t, grad_w) = (flow.vorticity)(x, y, t);
            let material = w_t + v.dot(&grad_w);
            let omega = Matrix2::new(0.0, w, -w, 0.0);
            let lhs = Matrix2::new(0.0, material, -material, 0.0);
            let rhs = -(jac * omega + omega * jac.transpose());
            worst = worst.max((lhs - rhs).amax());
        }
    }
    worst
}
