//! The variational structure of the interface problem: the manifold of
//! incompressible two-phase configurations, its tangent space, and the
//! scalar potentials that generate its normal directions.
//!
//! A configuration is the interface together with the fluid it carries.
//! Admissible variations (tangent vectors) are divergence-free velocity
//! pairs with matching normal traces; their orthogonal complement in
//! `L²(ρ dx)` consists of gradients `−∇ψ` with `ρ₊ψ₊ = ρ₋ψ₋` on the
//! interface ([`NormalPotential`]).  This module provides:
//!
//! * [`project_to_tangent`]: the orthogonal splitting `X = w − ∇ψ` of an
//!   arbitrary two-sided field;
//! * [`second_fundamental_pressure`]: the scalar pressure `p_{w,v}` whose
//!   negative gradient is the second fundamental form `II(w̄, v̄)` of the
//!   configuration manifold;
//! * [`sprime_pressure`]: the area-functional gradient, a two-sided
//!   harmonic pair `p_κ` whose gradient is itself an admissible variation
//!   ([`GradientField`]);
//! * [`curvature_form`]: the sectional-curvature combination
//!   `⟨II(v,v), II(w,w)⟩ − ‖II(v,w)‖²` in `L²(ρ dx)`.

use std::sync::Arc;

use nalgebra::{DMatrix, Vector2};

use crate::curve::ClosedCurve;
use crate::error::{Result, SolverError};
use crate::field::{BoundaryField, FieldKind};
use crate::potential::{dtn, Side, WeightedDtn};
use crate::velocity::{FieldClosure, SideVelocity, TwoPhaseVelocity};
use crate::volume::{laplace, poisson_from_samples, solver_for, VolumeField};

/// Relative surface-mean defect above which the argument handed to `𝒩⁻¹`
/// is considered inconsistent input rather than discretization noise.
const MEAN_DEFECT_LIMIT: f64 = 1e-6;

/// A divergence-free two-sided velocity with matching normal traces — an
/// admissible variation of the configuration.  Construction checks the
/// matching defect; divergence-freeness is the wrapped field's own
/// invariant.
#[derive(Debug)]
pub struct TangentField {
    vel: TwoPhaseVelocity,
}

impl TangentField {
    /// Wraps a velocity after verifying the kinematic matching condition.
    pub fn new(vel: TwoPhaseVelocity) -> Result<Self> {
        let scale = vel
            .side(Side::Interior)
            .trace()
            .iter()
            .chain(vel.side(Side::Exterior).trace())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let defect = vel.matching_defect();
        let limit = 1e-8 * (1.0 + scale);
        if defect > limit {
            return Err(SolverError::TraceMismatch { defect, limit }.into());
        }
        Ok(Self { vel })
    }

    /// Vortex-sheet fields are admissible by construction.
    pub fn from_sheet(curve: &ClosedCurve, gamma: &BoundaryField) -> Result<Self> {
        Self::new(TwoPhaseVelocity::from_sheet(curve, gamma)?)
    }

    /// The zero variation.
    pub fn zero(curve: &ClosedCurve) -> Result<Self> {
        Self::new(TwoPhaseVelocity::at_rest(curve)?)
    }

    pub fn velocity(&self) -> &TwoPhaseVelocity {
        &self.vel
    }

    pub fn into_velocity(self) -> TwoPhaseVelocity {
        self.vel
    }
}

impl std::ops::Deref for TangentField {
    type Target = TwoPhaseVelocity;
    fn deref(&self) -> &TwoPhaseVelocity {
        &self.vel
    }
}

/// A scalar pair `ψ = (ψ₊, ψ₋)` with `ρ₊ψ₊ = ρ₋ψ₋ = ψ^S` on the interface:
/// the potential of a normal direction `−∇ψ` of the configuration manifold.
/// Stored on both volume grids (harmonic extension of the boundary data
/// plus any particular Poisson part, summed).
#[derive(Debug)]
pub struct NormalPotential {
    curve: ClosedCurve,
    rho_plus: f64,
    rho_minus: f64,
    surface: BoundaryField,
    plus: VolumeField,
    minus: VolumeField,
    /// Pre-projection relative mean defect of the `𝒩⁻¹` argument.
    mean_defect: f64,
}

impl NormalPotential {
    /// The common weighted surface value `ψ^S = ρ₊ψ₊|_S = ρ₋ψ₋|_S`.
    pub fn surface_value(&self) -> &BoundaryField {
        &self.surface
    }

    /// One side's boundary trace `(1/ρ±) ψ^S`.
    pub fn side_trace(&self, side: Side) -> BoundaryField {
        let rho = match side {
            Side::Interior => self.rho_plus,
            Side::Exterior => self.rho_minus,
        };
        self.surface.scale(1.0 / rho)
    }

    pub fn field(&self, side: Side) -> &VolumeField {
        match side {
            Side::Interior => &self.plus,
            Side::Exterior => &self.minus,
        }
    }

    /// Relative surface mean of the boundary data before the mean-zero
    /// projection that `𝒩⁻¹` requires; a consistency diagnostic.
    pub fn mean_defect(&self) -> f64 {
        self.mean_defect
    }

    pub fn value_at(&self, side: Side, x: f64, y: f64) -> Result<f64> {
        self.field(side).value_at(x, y)
    }

    /// `∇ψ` at a point; the normal direction itself is `−∇ψ`, and for the
    /// second fundamental form potentials `II(w̄, v̄) = −∇p_{w,v}`.
    pub fn gradient_at(&self, side: Side, x: f64, y: f64) -> Result<Vector2<f64>> {
        self.field(side).gradient_at(x, y)
    }

    /// Max-norm defect of `ρ₊ψ₊ − ρ₋ψ₋` on the interface, from the stored
    /// grids.
    pub fn matching_defect(&self) -> f64 {
        let tp = self.plus.boundary_trace();
        let tm = self.minus.boundary_trace();
        tp.as_slice()
            .iter()
            .zip(tm.as_slice())
            .map(|(a, b)| (self.rho_plus * a - self.rho_minus * b).abs())
            .fold(0.0, f64::max)
    }

    /// `∫ ρ ∇ψ · ∇φ dx` over both sides (the `L²(ρ dx)` pairing of the two
    /// normal directions, sign included).
    pub fn gradient_pairing(&self, other: &NormalPotential) -> Result<f64> {
        let mut total = 0.0;
        for side in [Side::Interior, Side::Exterior] {
            let rho = match side {
                Side::Interior => self.rho_plus,
                Side::Exterior => self.rho_minus,
            };
            let a = self.field(side);
            let b = other.field(side);
            let (ax, ay) = a.gradient_grids();
            let (bx, by) = b.gradient_grids();
            let prod = DMatrix::from_fn(ax.nrows(), ax.ncols(), |i, j| {
                ax[(i, j)] * bx[(i, j)] + ay[(i, j)] * by[(i, j)]
            });
            let solver = a.solver();
            if side == Side::Exterior {
                solver.check_decay(&prod)?;
            }
            total += rho * solver.integrate_grid(&prod);
        }
        Ok(total)
    }

    /// `∫ ρ ∇ψ · Y dx` against a two-sided velocity field: the pairing that
    /// vanishes when `Y` is an admissible variation.
    pub fn velocity_pairing(&self, y: &TwoPhaseVelocity) -> Result<f64> {
        let mut total = 0.0;
        for side in [Side::Interior, Side::Exterior] {
            let rho = match side {
                Side::Interior => self.rho_plus,
                Side::Exterior => self.rho_minus,
            };
            let (gx, gy) = self.field(side).gradient_grids();
            let (vx, vy) = y.side(side).component_grids();
            let prod = DMatrix::from_fn(gx.nrows(), gx.ncols(), |i, j| {
                gx[(i, j)] * vx[(i, j)] + gy[(i, j)] * vy[(i, j)]
            });
            let solver = self.field(side).solver();
            if side == Side::Exterior {
                solver.check_decay(&prod)?;
            }
            total += rho * solver.integrate_grid(&prod);
        }
        Ok(total)
    }
}

/// A harmonic scalar pair `(f₊, f₋)` whose two-sided gradient is itself an
/// admissible variation: the per-side normal derivatives agree across the
/// interface (up to sign of the normals), unlike a [`NormalPotential`]
/// whose density-weighted *values* agree.  The area-functional gradient
/// `p_κ` has this form.
#[derive(Debug)]
pub struct GradientField {
    curve: ClosedCurve,
    plus: VolumeField,
    minus: VolumeField,
}

impl GradientField {
    /// The pair `f± = ±(1/ρ₊ρ₋) ℋ±(𝒩⁻¹ 𝒩∓ f₀)` generated by a surface
    /// scalar `f₀`: the `L²(ρ dx)` representative of the functional
    /// `w ↦ ∫ f₀ w₊^⊥ dS` on admissible variations.
    pub fn from_surface_density(
        curve: &ClosedCurve,
        f0: &BoundaryField,
        rho_plus: f64,
        rho_minus: f64,
    ) -> Result<Self> {
        f0.expect_kind(FieldKind::Scalar)?;
        let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
        let scale = 1.0 / (rho_plus * rho_minus);
        // Per-side Dirichlet–Neumann maps of f₀ are mean-zero, so they are
        // valid right-hand sides for 𝒩⁻¹ as they stand.
        let n_minus_f0 = dtn(curve, f0, Side::Exterior)?;
        let n_plus_f0 = dtn(curve, f0, Side::Interior)?;
        let trace_plus = wd.solve_cg(&n_minus_f0)?.scale(scale);
        let trace_minus = wd.solve_cg(&n_plus_f0)?.scale(-scale);
        let plus = laplace(curve, &trace_plus, Side::Interior)?;
        let minus = laplace(curve, &trace_minus, Side::Exterior)?;
        Ok(Self {
            curve: curve.clone(),
            plus,
            minus,
        })
    }

    pub fn field(&self, side: Side) -> &VolumeField {
        match side {
            Side::Interior => &self.plus,
            Side::Exterior => &self.minus,
        }
    }

    pub fn value_at(&self, side: Side, x: f64, y: f64) -> Result<f64> {
        self.field(side).value_at(x, y)
    }

    pub fn gradient_at(&self, side: Side, x: f64, y: f64) -> Result<Vector2<f64>> {
        self.field(side).gradient_at(x, y)
    }

    /// Max-norm defect of `∇_{N₊}f₊ + ∇_{N₋}f₋` on the interface — zero in
    /// the continuum because the harmonic means `𝒩±𝒩⁻¹𝒩∓` agree in either
    /// order.
    pub fn normal_matching_defect(&self) -> f64 {
        let np = self.plus.normal_derivative();
        let nm = self.minus.normal_derivative();
        np.as_slice()
            .iter()
            .zip(nm.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The gradient pair as a velocity field (an admissible variation).
    pub fn to_velocity(&self) -> Result<TangentField> {
        let mut sides = Vec::with_capacity(2);
        for side in [Side::Interior, Side::Exterior] {
            let f = self.field(side);
            let solver = f.solver().clone();
            let (gx, gy) = f.gradient_grids().clone();
            let (hxx, hxy, _hyy) = f.hessian_grids().clone();
            // Harmonic potential: the Jacobian of ∇f is the Hessian, with
            // f_yy = −f_xx.
            let trace: Vec<Vector2<f64>> = f
                .boundary_gradient()
                .into_iter()
                .collect();
            let n = self.curve.n_nodes();
            let jac_trace: Vec<(f64, f64, f64)> = (0..n)
                .map(|j| (hxx[(0, j)], hxy[(0, j)], hxy[(0, j)]))
                .collect();
            sides.push(SideVelocity::from_grids(
                solver,
                gx,
                gy,
                hxx.clone(),
                hxy.clone(),
                hxy,
                trace,
                jac_trace,
            ));
        }
        let minus = sides.pop().expect("two sides");
        let plus = sides.pop().expect("two sides");
        TangentField::new(TwoPhaseVelocity::from_sides(&self.curve, plus, minus))
    }

    /// `∫ ρ ∇f · w dx` against a two-sided velocity.
    pub fn velocity_pairing(
        &self,
        w: &TwoPhaseVelocity,
        rho_plus: f64,
        rho_minus: f64,
    ) -> Result<f64> {
        let mut total = 0.0;
        for side in [Side::Interior, Side::Exterior] {
            let rho = match side {
                Side::Interior => rho_plus,
                Side::Exterior => rho_minus,
            };
            let (gx, gy) = self.field(side).gradient_grids();
            let (vx, vy) = w.side(side).component_grids();
            let prod = DMatrix::from_fn(gx.nrows(), gx.ncols(), |i, j| {
                gx[(i, j)] * vx[(i, j)] + gy[(i, j)] * vy[(i, j)]
            });
            let solver = self.field(side).solver();
            if side == Side::Exterior {
                solver.check_decay(&prod)?;
            }
            total += rho * solver.integrate_grid(&prod);
        }
        Ok(total)
    }
}

/// Checks the relative surface mean of a boundary assembly destined for
/// `𝒩⁻¹`, then projects it to exact mean zero.  Returns the projected field
/// and the pre-projection relative defect.  The defect is measured against
/// the size of the assembly's constituent terms (`scale_floor`), not just
/// the assembled result, which may be small by cancellation.
pub(crate) fn gate_mean_zero(
    curve: &ClosedCurve,
    raw: &BoundaryField,
    scale_floor: f64,
) -> Result<(BoundaryField, f64)> {
    let scale = curve.l2_norm(raw).max(scale_floor).max(f64::MIN_POSITIVE);
    let defect = curve.surface_integral(raw).abs() / scale;
    if defect > MEAN_DEFECT_LIMIT {
        return Err(SolverError::NotMeanZero {
            defect,
            limit: MEAN_DEFECT_LIMIT,
        }
        .into());
    }
    Ok((curve.project_mean_zero(raw), defect))
}

/// Splits a two-sided field `X` into an admissible variation `w` and a
/// normal direction: `X = w + ∇ψ` with `∇·w = 0`, matching normal traces,
/// and `ρ₊ψ₊ = ρ₋ψ₋` on the interface.  The scalar solves
/// `Δψ = ∇·X` with the weighted boundary data that enforces the matching
/// of `w`; the splitting is orthogonal in `L²(ρ dx)`.
///
/// The exterior closure must decay fast enough for the volume grid: values
/// like `r⁻²` and divergence like `r⁻³` or faster.
pub fn project_to_tangent(
    curve: &ClosedCurve,
    x_plus: FieldClosure,
    x_minus: FieldClosure,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<(TangentField, NormalPotential)> {
    let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
    let n = curve.n_nodes();
    let normals = curve.outward_normal();

    struct Sampled {
        solver: Arc<VolumeSolver>,
        vx: DMatrix<f64>,
        vy: DMatrix<f64>,
        ja: DMatrix<f64>,
        jb: DMatrix<f64>,
        jc: DMatrix<f64>,
        jd: DMatrix<f64>,
        divergence: DMatrix<f64>,
        jac_scale: f64,
    }
    use crate::volume::VolumeSolver;

    let sample = |side: Side, f: &FieldClosure| -> Result<Sampled> {
        let solver = solver_for(curve, side)?;
        let (m, nn) = (solver.n_radial(), solver.n_theta());
        let mut s = Sampled {
            solver: solver.clone(),
            vx: DMatrix::zeros(m, nn),
            vy: DMatrix::zeros(m, nn),
            ja: DMatrix::zeros(m, nn),
            jb: DMatrix::zeros(m, nn),
            jc: DMatrix::zeros(m, nn),
            jd: DMatrix::zeros(m, nn),
            divergence: DMatrix::zeros(m, nn),
            jac_scale: 0.0,
        };
        for i in 0..m {
            for j in 0..nn {
                if let Some((x, y)) = solver.node_coordinates(i, j) {
                    let (v, jm) = f(x, y);
                    s.vx[(i, j)] = v.x;
                    s.vy[(i, j)] = v.y;
                    s.ja[(i, j)] = jm[(0, 0)];
                    s.jb[(i, j)] = jm[(0, 1)];
                    s.jc[(i, j)] = jm[(1, 0)];
                    s.jd[(i, j)] = jm[(1, 1)];
                    s.divergence[(i, j)] = jm[(0, 0)] + jm[(1, 1)];
                    s.jac_scale = s.jac_scale.max(jm.abs().max());
                }
            }
        }
        Ok(s)
    };
    let sp = sample(Side::Interior, &x_plus)?;
    let sm = sample(Side::Exterior, &x_minus)?;

    // Particular part: Δχ± = ∇·X with zero trace (χ = poisson(−∇·X)).
    // Divergences at the discretization floor are dropped: they are noise
    // from sampled evaluators, not a source, and their ring profile would
    // defeat the exterior decay estimate.
    let chi = |s: &Sampled| -> Result<Option<crate::volume::PoissonSolution>> {
        let floor = 1e-8 * (1.0 + s.jac_scale);
        if s.divergence.amax() <= floor {
            return Ok(None);
        }
        Ok(Some(poisson_from_samples(
            curve,
            -&s.divergence,
            s.solver.side(),
        )?))
    };
    let chi_p = chi(&sp)?;
    let chi_m = chi(&sm)?;

    // Boundary assembly: X₊^⊥ + X₋^⊥ − ∇_{N₊}Δ₊⁻¹∇·X − ∇_{N₋}Δ₋⁻¹∇·X,
    // with Δ±⁻¹∇·X = χ± and N₋ = −N₊.
    let nd_p = chi_p
        .as_ref()
        .map(|c| c.normal_derivative())
        .unwrap_or_else(|| BoundaryField::zeros(n, FieldKind::Scalar));
    let nd_m = chi_m
        .as_ref()
        .map(|c| c.normal_derivative())
        .unwrap_or_else(|| BoundaryField::zeros(n, FieldKind::Scalar));
    let mut term_scale = 0.0f64;
    let raw: Vec<f64> = (0..n)
        .map(|j| {
            let p = curve.nodes()[j];
            let xp = x_plus(p.x, p.y).0;
            let xm = x_minus(p.x, p.y).0;
            term_scale = term_scale
                .max(xp.norm())
                .max(xm.norm())
                .max(nd_p.as_slice()[j].abs())
                .max(nd_m.as_slice()[j].abs());
            (xp - xm).dot(&normals[j]) - nd_p.as_slice()[j] + nd_m.as_slice()[j]
        })
        .collect();
    let raw = BoundaryField::scalar(raw);
    let (projected, mean_defect) = gate_mean_zero(curve, &raw, term_scale)?;
    let psi_s = wd.solve_cg(&projected)?;

    // Total ψ per side: harmonic extension of (1/ρ±)ψ^S plus the particular
    // part.
    let build_side = |rho: f64, side: Side, chi: &Option<crate::volume::PoissonSolution>| -> Result<VolumeField> {
        let h = laplace(curve, &psi_s.scale(1.0 / rho), side)?;
        Ok(match chi {
            None => h,
            Some(c) => {
                let sum = h.grid_values() + c.field().grid_values();
                VolumeField::new(h.solver().clone(), sum)
            }
        })
    };
    let psi_p = build_side(rho_plus, Side::Interior, &chi_p)?;
    let psi_m = build_side(rho_minus, Side::Exterior, &chi_m)?;

    // w = X − ∇ψ on grids; its Jacobian is J_X − Hess ψ, symmetrized to
    // exact tracelessness (the residual trace is the discretization error
    // of the Poisson solve).
    let build_w = |s: &Sampled, psi: &VolumeField| -> SideVelocity {
        let (gx, gy) = psi.gradient_grids();
        let (hxx, hxy, hyy) = psi.hessian_grids();
        let (m, nn) = (s.vx.nrows(), s.vx.ncols());
        let wx = DMatrix::from_fn(m, nn, |i, j| s.vx[(i, j)] - gx[(i, j)]);
        let wy = DMatrix::from_fn(m, nn, |i, j| s.vy[(i, j)] - gy[(i, j)]);
        let wa = DMatrix::from_fn(m, nn, |i, j| {
            let a = s.ja[(i, j)] - hxx[(i, j)];
            let d = s.jd[(i, j)] - hyy[(i, j)];
            0.5 * (a - d)
        });
        let wb = DMatrix::from_fn(m, nn, |i, j| s.jb[(i, j)] - hxy[(i, j)]);
        let wc = DMatrix::from_fn(m, nn, |i, j| s.jc[(i, j)] - hxy[(i, j)]);
        let grad_b = psi.boundary_gradient();
        let trace: Vec<Vector2<f64>> = (0..nn)
            .map(|j| Vector2::new(s.vx[(0, j)], s.vy[(0, j)]) - grad_b[j])
            .collect();
        let jac_trace: Vec<(f64, f64, f64)> = (0..nn)
            .map(|j| (wa[(0, j)], wb[(0, j)], wc[(0, j)]))
            .collect();
        SideVelocity::from_grids(s.solver.clone(), wx, wy, wa, wb, wc, trace, jac_trace)
    };
    let w_plus = build_w(&sp, &psi_p);
    let w_minus = build_w(&sm, &psi_m);
    let w = TangentField::new(TwoPhaseVelocity::from_sides(curve, w_plus, w_minus))?;

    let psi = NormalPotential {
        curve: curve.clone(),
        rho_plus,
        rho_minus,
        surface: psi_s,
        plus: psi_p,
        minus: psi_m,
        mean_defect,
    };
    Ok((w, psi))
}

/// The potential `p_{w,v}` of the second fundamental form: solves
/// `−Δp_{w,v} = tr(Dv Dw)` with the weighted boundary value that makes
/// `−∇p_{w,v}` the normal component of `D_t w` along the flow of `v`.
/// Symmetric in `(v, w)` up to discretization.
pub fn second_fundamental_pressure(
    curve: &ClosedCurve,
    v: &TangentField,
    w: &TangentField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<NormalPotential> {
    second_fundamental_core(curve, v.velocity(), w.velocity(), rho_plus, rho_minus)
}

/// Core of [`second_fundamental_pressure`] on unwrapped velocities (the
/// pressure reconstruction also needs it, where the velocity's
/// admissibility has already been checked).
pub(crate) fn second_fundamental_core(
    curve: &ClosedCurve,
    v: &TwoPhaseVelocity,
    w: &TwoPhaseVelocity,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<NormalPotential> {
    let wd = WeightedDtn::new(curve, rho_plus, rho_minus)?;
    let n = curve.n_nodes();
    let normals = curve.outward_normal();

    // Zero-trace particular parts: −Δq± = tr(Dv Dw).
    let q_p = poisson_from_samples(
        curve,
        v.side(Side::Interior)
            .trace_product_grid(w.side(Side::Interior)),
        Side::Interior,
    )?;
    let q_m = poisson_from_samples(
        curve,
        v.side(Side::Exterior)
            .trace_product_grid(w.side(Side::Exterior)),
        Side::Exterior,
    )?;

    // Boundary assembly: ∇_{w₊}v₊·N₊ + ∇_{w₋}v₋·N₋ + 𝒟·(w₊^⊥ (v₊^⊤ − v₋^⊤))
    // − ∇_{N₊}Δ₊⁻¹tr(DvDw) − ∇_{N₋}Δ₋⁻¹tr(DvDw), with Δ±⁻¹tr = −q±.
    let slip_v = v.slip();
    let w_perp: Vec<f64> = w
        .side(Side::Interior)
        .trace()
        .iter()
        .zip(normals)
        .map(|(t, nrm)| t.dot(nrm))
        .collect();
    let transport =
        BoundaryField::tangent((0..n).map(|j| w_perp[j] * slip_v.as_slice()[j]).collect());
    let transport_div = curve.surface_divergence(&transport)?;

    let jac_dot = |side: Side, j: usize| -> f64 {
        let (a, b, c) = v.side(side).jacobian_trace()[j];
        let wt = w.side(side).trace()[j];
        let jw = Vector2::new(a * wt.x + b * wt.y, c * wt.x - a * wt.y);
        jw.dot(&normals[j])
    };
    let nd_p = q_p.normal_derivative();
    let nd_m = q_m.normal_derivative();
    let mut term_scale = 0.0f64;
    let raw: Vec<f64> = (0..n)
        .map(|j| {
            let terms = [
                jac_dot(Side::Interior, j),
                -jac_dot(Side::Exterior, j),
                transport_div.as_slice()[j],
                nd_p.as_slice()[j],
                -nd_m.as_slice()[j],
            ];
            for t in terms {
                term_scale = term_scale.max(t.abs());
            }
            terms.iter().sum()
        })
        .collect();
    let raw = BoundaryField::scalar(raw);
    let (projected, mean_defect) = gate_mean_zero(curve, &raw, term_scale)?;
    let p_s = wd.solve_cg(&projected)?.scale(-1.0);

    let total = |rho: f64, side: Side, q: &crate::volume::PoissonSolution| -> Result<VolumeField> {
        let h = laplace(curve, &p_s.scale(1.0 / rho), side)?;
        let sum = h.grid_values() + q.field().grid_values();
        Ok(VolumeField::new(h.solver().clone(), sum))
    };
    let plus = total(rho_plus, Side::Interior, &q_p)?;
    let minus = total(rho_minus, Side::Exterior, &q_m)?;
    Ok(NormalPotential {
        curve: curve.clone(),
        rho_plus,
        rho_minus,
        surface: p_s,
        plus,
        minus,
        mean_defect,
    })
}

/// The gradient of the area functional: `S′ = ∇p_κ` with
/// `p_κ^± = ±(1/ρ₊ρ₋) ℋ±(𝒩⁻¹ 𝒩∓ κ₊)`, an admissible variation satisfying
/// `⟨∇p_κ, w⟩_{L²(ρ dx)} = ∫ κ₊ w₊^⊥ dS` for every admissible `w`.
pub fn sprime_pressure(
    curve: &ClosedCurve,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<GradientField> {
    GradientField::from_surface_density(curve, &curve.curvature(), rho_plus, rho_minus)
}

/// The sectional-curvature combination
/// `⟨II(v,v), II(w,w)⟩_{ρ dx} − ‖II(v,w)‖²_{ρ dx}` of the configuration
/// manifold, from three second-fundamental-form potentials.
pub fn curvature_form(
    curve: &ClosedCurve,
    v: &TangentField,
    w: &TangentField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<f64> {
    let p_vv = second_fundamental_pressure(curve, v, v, rho_plus, rho_minus)?;
    let p_ww = second_fundamental_pressure(curve, w, w, rho_plus, rho_minus)?;
    let p_vw = second_fundamental_pressure(curve, v, w, rho_plus, rho_minus)?;
    Ok(p_vv.gradient_pairing(&p_ww)? - p_vw.gradient_pairing(&p_vw)?)
}
