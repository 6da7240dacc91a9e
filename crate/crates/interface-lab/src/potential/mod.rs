//! Layer potentials and Dirichlet–Neumann maps on closed spectral curves.
//!
//! The harmonic Dirichlet problems on both sides of the interface are
//! solved with a double-layer representation: `u = Dφ` inside, and
//! `u = Dφ + ⟨φ⟩` outside, where `⟨φ⟩` is the dS-mean of the density.
//! The exterior boundary equation gains a rank-one term that removes the
//! null space of `I/2 + D` on constants and simultaneously selects the
//! solution bounded at infinity, a standard cure for the exterior
//! resonance (see Kress, *Linear Integral Equations*, ch. 6).
//!
//! On-curve operators use Nyström discretization at the curve nodes. The
//! log singularity of the single layer is split off and applied in
//! Fourier space, where `ln(4 sin²(s/2))` acts diagonally; the remaining
//! kernel is smooth and handled by the trapezoid rule, which is
//! spectrally accurate on periodic integrands. The normal derivative of
//! the double layer is evaluated through the Maue identity
//! `T = d/ds ∘ S ∘ d/ds`, so the hypersingular operator never appears
//! explicitly.
//!
//! Sign conventions. `𝒩₊ f` and `𝒩₋ f` are the normal derivatives of the
//! interior/exterior harmonic extensions with respect to the *own*
//! outward normal of each domain, which makes both operators nonnegative:
//! on a circle of radius `R` they act as `m/R` on the mode `cos mθ`. The
//! density-weighted combination `𝒩 = (1/ρ₊)𝒩₊ + (1/ρ₋)𝒩₋` is invertible
//! on mean-zero boundary fields, and `𝒩̄ = (1/ρ₊)𝒩₊ 𝒩⁻¹ (1/ρ₋)𝒩₋` is the
//! self-adjoint positive operator that drives capillary dispersion.

mod cache;

pub use cache::{dtn_matrix_cached, read_dtn_cache, write_dtn_cache};

use crate::curve::ClosedCurve;
use crate::error::{Result, SolverError};
use crate::fft;
use crate::field::{BoundaryField, FieldKind};
use nalgebra::{Complex, DMatrix, DVector, Vector2};
use num_complex::Complex64;
use once_cell::sync::{Lazy, OnceCell};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

/// Which fluid domain an operator or extension refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// The compact domain `Ω₊` enclosed by the curve.
    Interior,
    /// The unbounded complement `Ω₋`.
    Exterior,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Interior => "interior",
            Side::Exterior => "exterior",
        }
    }

    pub(crate) fn flag_byte(self) -> u8 {
        match self {
            Side::Interior => 0,
            Side::Exterior => 1,
        }
    }
}

/// Minimum distance from the curve, in local mesh widths, at which the
/// plain trapezoid evaluation of a layer potential is trusted.
pub const EVAL_DISTANCE_FACTOR: f64 = 4.0;

/// Assembled Nyström operators for one curve. Construction is `O(n³)`;
/// the struct is immutable afterwards and safe to share across threads.
pub struct BoundaryOperators {
    curve: ClosedCurve,
    weights: Vec<f64>,
    /// Principal-value double-layer matrix, including quadrature weights
    /// and the curvature diagonal limit.
    double_layer: DMatrix<f64>,
    /// Single-layer matrix acting on node values of the density.
    single_layer: DMatrix<f64>,
    /// `T = d/ds ∘ S ∘ d/ds` (Maue form of the hypersingular operator).
    t_matrix: DMatrix<f64>,
    lu_interior: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_exterior: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    dtn_plus: OnceCell<DMatrix<f64>>,
    dtn_minus: OnceCell<DMatrix<f64>>,
}

impl BoundaryOperators {
    pub fn assemble(curve: &ClosedCurve) -> Result<Self> {
        let n = curve.n_nodes();
        let nodes = curve.nodes();
        let normals = curve.outward_normal();
        let kappa = curve.curvature_values();
        let speed = curve.speed();
        let alphas = curve.alphas();
        let w = curve.ds_weights();
        let len = curve.length();

        let mut d = DMatrix::zeros(n, n);
        let mut smooth = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    d[(i, i)] = -kappa[i] / (4.0 * PI) * w[i];
                    smooth[(i, i)] = -(speed[i].ln()) / (2.0 * PI) * w[i];
                } else {
                    let dx = nodes[i] - nodes[j];
                    let r2 = dx.norm_squared();
                    d[(i, j)] = normals[j].dot(&dx) / r2 * w[j] / (2.0 * PI);
                    let half = 0.5 * (alphas[i] - alphas[j]);
                    let periodic2 = 4.0 * half.sin().powi(2);
                    smooth[(i, j)] = -((r2 / periodic2).ln()) / (4.0 * PI) * w[j];
                }
            }
        }

        // Singular log part as a circulant acting on g = φ|z'|: the kernel
        // ln(4 sin²(s/2)) = -2 Σ cos(ks)/k becomes the symbol 1/(2|k|).
        let mut impulse = vec![0.0; n];
        impulse[0] = 1.0;
        let col = fft::apply_symbol(&impulse, |m| {
            if m == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / (2.0 * m.unsigned_abs() as f64), 0.0)
            }
        });
        let mut single = smooth;
        for i in 0..n {
            for j in 0..n {
                single[(i, j)] += col[(i + n - j) % n] * speed[j];
            }
        }

        // Arclength differentiation matrix from the same FFT convention
        // used everywhere else (Nyquist mode treated as a pure cosine).
        let dcol = fft::derivative(&impulse, 1);
        let mut ds = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                ds[(i, j)] = dcol[(i + n - j) % n] / speed[i];
            }
        }
        let t_matrix = &ds * &single * &ds;

        let mut a_int = d.clone();
        let mut a_ext = d.clone();
        for i in 0..n {
            a_int[(i, i)] -= 0.5;
            a_ext[(i, i)] += 0.5;
            for j in 0..n {
                a_ext[(i, j)] += w[j] / len;
            }
        }

        Ok(Self {
            curve: curve.clone(),
            weights: w,
            double_layer: d,
            single_layer: single,
            t_matrix,
            lu_interior: a_int.lu(),
            lu_exterior: a_ext.lu(),
            dtn_plus: OnceCell::new(),
            dtn_minus: OnceCell::new(),
        })
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    pub fn double_layer_matrix(&self) -> &DMatrix<f64> {
        &self.double_layer
    }

    /// Applies the on-curve single-layer operator `Sφ = ∫ G(·,y)φ(y) dS_y`.
    pub fn apply_single_layer(&self, phi: &[f64]) -> Vec<f64> {
        let v = &self.single_layer * DVector::from_column_slice(phi);
        v.as_slice().to_vec()
    }

    /// Applies the Maue operator `Tφ = (d/ds) S (dφ/ds)`.
    pub fn apply_t(&self, phi: &[f64]) -> Vec<f64> {
        let v = &self.t_matrix * DVector::from_column_slice(phi);
        v.as_slice().to_vec()
    }

    /// Solves the boundary integral equation for the double-layer density
    /// of the Dirichlet problem with trace `f`.
    pub fn dirichlet_density(&self, f: &[f64], side: Side) -> Result<DVector<f64>> {
        let rhs = DVector::from_column_slice(f);
        let lu = match side {
            Side::Interior => &self.lu_interior,
            Side::Exterior => &self.lu_exterior,
        };
        lu.solve(&rhs).ok_or_else(|| {
            SolverError::Singular {
                what: format!("{} Dirichlet boundary equation", side.name()),
            }
            .into()
        })
    }

    /// Dense matrix of the Dirichlet–Neumann map on the given side.
    pub fn dtn_matrix(&self, side: Side) -> Result<&DMatrix<f64>> {
        let cell = match side {
            Side::Interior => &self.dtn_plus,
            Side::Exterior => &self.dtn_minus,
        };
        cell.get_or_try_init(|| {
            let lu = match side {
                Side::Interior => &self.lu_interior,
                Side::Exterior => &self.lu_exterior,
            };
            let inv = lu.try_inverse().ok_or_else(|| -> crate::error::Error {
                SolverError::Singular {
                    what: format!("{} boundary equation inverse", side.name()),
                }
                .into()
            })?;
            let m = &self.t_matrix * inv;
            Ok(match side {
                Side::Interior => m,
                Side::Exterior => -m,
            })
        })
    }

    /// dS-mean of a nodal field.
    pub fn ds_mean(&self, v: &[f64]) -> f64 {
        let total: f64 = v.iter().zip(&self.weights).map(|(a, w)| a * w).sum();
        total / self.curve.length()
    }

    fn check_field(&self, f: &BoundaryField) -> Result<()> {
        if f.len() != self.curve.n_nodes() {
            return Err(SolverError::ShapeMismatch {
                got: f.len(),
                want: self.curve.n_nodes(),
            }
            .into());
        }
        f.expect_kind(FieldKind::Scalar)
    }

    /// Distance gate for plain kernel-sum evaluation off the curve.
    fn eval_distance_check(&self, x: Vector2<f64>) -> Result<()> {
        let n = self.curve.n_nodes();
        let mut best = f64::INFINITY;
        let mut best_j = 0;
        for (j, p) in self.curve.nodes().iter().enumerate() {
            let d = (x - p).norm();
            if d < best {
                best = d;
                best_j = j;
            }
        }
        let h = self.curve.speed()[best_j] * 2.0 * PI / n as f64;
        if best < EVAL_DISTANCE_FACTOR * h {
            return Err(SolverError::TooCloseToBoundary {
                x: x.x,
                y: x.y,
                distance: best,
            }
            .into());
        }
        Ok(())
    }

    /// Gauss winding integral `∫ ∂_{N_y} G(x,y) dS_y`: `-1` inside, `0`
    /// outside (the trapezoid value is spectrally close off the curve).
    fn gauss_integral(&self, x: Vector2<f64>) -> f64 {
        let mut acc = 0.0;
        for (j, p) in self.curve.nodes().iter().enumerate() {
            let dx = x - p;
            let r2 = dx.norm_squared();
            acc += self.curve.outward_normal()[j].dot(&dx) / r2 * self.weights[j] / (2.0 * PI);
        }
        acc
    }

    fn contains(&self, x: Vector2<f64>) -> bool {
        self.gauss_integral(x) < -0.5
    }

    /// Double-layer potential at a point strictly off the curve.
    fn double_layer_at(&self, x: Vector2<f64>, phi: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (j, p) in self.curve.nodes().iter().enumerate() {
            let dx = x - p;
            let r2 = dx.norm_squared();
            acc += self.curve.outward_normal()[j].dot(&dx) / r2 * self.weights[j] * phi[j]
                / (2.0 * PI);
        }
        acc
    }

    fn double_layer_gradient_at(&self, x: Vector2<f64>, phi: &DVector<f64>) -> Vector2<f64> {
        let mut acc = Vector2::zeros();
        for (j, p) in self.curve.nodes().iter().enumerate() {
            let dx = x - p;
            let r2 = dx.norm_squared();
            let nj = self.curve.outward_normal()[j];
            let grad = nj / r2 - dx * (2.0 * nj.dot(&dx) / (r2 * r2));
            acc += grad * (self.weights[j] * phi[j] / (2.0 * PI));
        }
        acc
    }
}

static OP_CACHE: Lazy<Mutex<HashMap<u64, Arc<BoundaryOperators>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Returns the assembled operators for a curve, memoized on the spectrum
/// hash so repeated calls inside a time loop are cheap.
pub fn operators_for(curve: &ClosedCurve) -> Result<Arc<BoundaryOperators>> {
    let key = curve.spectrum_hash();
    let mut map = OP_CACHE.lock().unwrap();
    if let Some(ops) = map.get(&key) {
        if ops.curve.n_nodes() == curve.n_nodes()
            && ops
                .curve
                .nodes()
                .iter()
                .zip(curve.nodes())
                .all(|(a, b)| a == b)
        {
            return Ok(ops.clone());
        }
    }
    let ops = Arc::new(BoundaryOperators::assemble(curve)?);
    if map.len() > 16 {
        map.clear();
    }
    map.insert(key, ops.clone());
    Ok(ops)
}

/// Harmonic extension of a boundary trace to one side of the curve.
pub struct HarmonicExtension {
    pub side: Side,
    /// Double-layer density solving the boundary equation.
    pub density: BoundaryField,
    pub boundary_trace: BoundaryField,
    /// Value of the extension at infinity (exterior side only).
    pub far_field_constant: Option<f64>,
    ops: Arc<BoundaryOperators>,
}

/// Solves `Δu = 0` on the requested side with `u = f` on the curve; the
/// exterior solution is the unique one bounded at infinity.
pub fn harmonic_extend(
    curve: &ClosedCurve,
    f: &BoundaryField,
    side: Side,
) -> Result<HarmonicExtension> {
    let ops = operators_for(curve)?;
    ops.check_field(f)?;
    let phi = ops.dirichlet_density(f.as_slice(), side)?;
    let far = match side {
        Side::Interior => None,
        Side::Exterior => Some(ops.ds_mean(phi.as_slice())),
    };
    Ok(HarmonicExtension {
        side,
        density: BoundaryField::scalar(phi.as_slice().to_vec()),
        boundary_trace: f.clone(),
        far_field_constant: far,
        ops,
    })
}

impl HarmonicExtension {
    fn phi(&self) -> DVector<f64> {
        DVector::from_column_slice(self.density.as_slice())
    }

    fn side_check(&self, x: Vector2<f64>) -> Result<()> {
        self.ops.eval_distance_check(x)?;
        let inside = self.ops.contains(x);
        let ok = match self.side {
            Side::Interior => inside,
            Side::Exterior => !inside,
        };
        if !ok {
            return Err(SolverError::WrongSide { x: x.x, y: x.y }.into());
        }
        Ok(())
    }

    /// Value of the extension at a point strictly off the curve.
    pub fn value_at(&self, x: Vector2<f64>) -> Result<f64> {
        self.side_check(x)?;
        let mut u = self.ops.double_layer_at(x, &self.phi());
        if let Some(c) = self.far_field_constant {
            u += c;
        }
        Ok(u)
    }

    /// Gradient of the extension at a point strictly off the curve.
    pub fn gradient_at(&self, x: Vector2<f64>) -> Result<Vector2<f64>> {
        self.side_check(x)?;
        Ok(self.ops.double_layer_gradient_at(x, &self.phi()))
    }

    /// Boundary values recomputed through the jump relation
    /// `u± = PV(Dφ) ± φ/2` (+ the far-field constant outside); agreement
    /// with `boundary_trace` is the discrete residual of the solve.
    pub fn boundary_values_via_jump(&self) -> BoundaryField {
        let phi = self.phi();
        let pv = &self.ops.double_layer * &phi;
        let n = phi.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let jump = match self.side {
                Side::Interior => -0.5 * phi[i],
                Side::Exterior => 0.5 * phi[i],
            };
            out.push(pv[i] + jump + self.far_field_constant.unwrap_or(0.0));
        }
        BoundaryField::scalar(out)
    }

    /// Max-norm defect of the jump-relation trace, relative to the trace.
    pub fn trace_defect(&self) -> f64 {
        let back = self.boundary_values_via_jump();
        let scale = self.boundary_trace.max_abs().max(1e-300);
        back.values()
            .iter()
            .zip(self.boundary_trace.values().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / scale
    }

    /// Normal derivative on the curve with respect to this side's own
    /// outward normal; equals the Dirichlet–Neumann map of the trace.
    pub fn normal_derivative(&self) -> BoundaryField {
        let t = self.ops.apply_t(self.density.as_slice());
        let vals = match self.side {
            Side::Interior => t,
            Side::Exterior => t.into_iter().map(|v| -v).collect(),
        };
        let mut out = BoundaryField::scalar(vals);
        out.set_mean_zero(true);
        out
    }

    /// Full boundary gradient `∇u|_S = (∂_{N₊}u) N₊ + (df/ds) τ`. The
    /// normal derivative of a double layer is continuous across the
    /// curve, so this is the one-sided limit from either side.
    pub fn boundary_gradient(&self) -> Vec<Vector2<f64>> {
        let t = self.ops.apply_t(self.density.as_slice());
        let fs = self
            .ops
            .curve
            .arclength_derivative(&self.boundary_trace.reinterpret(FieldKind::Scalar));
        let curve = &self.ops.curve;
        (0..curve.n_nodes())
            .map(|j| curve.outward_normal()[j] * t[j] + curve.tangent()[j] * fs.as_slice()[j])
            .collect()
    }
}

/// Dirichlet–Neumann map `𝒩± f = ∇_{N±} ℋ± f` (nonnegative on both sides).
pub fn dtn(curve: &ClosedCurve, f: &BoundaryField, side: Side) -> Result<BoundaryField> {
    let ops = operators_for(curve)?;
    ops.check_field(f)?;
    let m = ops.dtn_matrix(side)?;
    let v = m * f.values();
    let mut out = BoundaryField::scalar(v.as_slice().to_vec());
    out.set_resolution_warning(f.resolution_warning() || !curve.is_resolved());
    let out = curve.project_mean_zero(&out);
    Ok(out)
}

/// Weighted operators for a fixed density pair, with the direct solver
/// for `𝒩⁻¹` and the spectral square-root machinery.
pub struct WeightedDtn {
    ops: Arc<BoundaryOperators>,
    pub rho_plus: f64,
    pub rho_minus: f64,
    n_matrix: DMatrix<f64>,
    /// The discrete `𝒩` annihilates two directions to machine precision:
    /// constants, and the Nyquist sawtooth that the spectral `d/ds`
    /// inside the Maue operator cannot see. `null_basis` holds a
    /// dS-orthonormal basis of that pair; `lu_shifted` factors
    /// `𝒩 + Σ eᵢ⟨·,eᵢ⟩_dS`, whose shifts are exactly invisible on the
    /// deflated subspace where the inverse is defined.
    null_basis: [DVector<f64>; 2],
    lu_shifted: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    eig: OnceCell<(DMatrix<f64>, DVector<f64>)>,
}

impl WeightedDtn {
    pub fn new(curve: &ClosedCurve, rho_plus: f64, rho_minus: f64) -> Result<Arc<Self>> {
        assert!(
            rho_plus > 0.0 && rho_minus > 0.0,
            "densities must be positive, got ρ₊ = {rho_plus}, ρ₋ = {rho_minus}"
        );
        let key = (
            curve.spectrum_hash(),
            rho_plus.to_bits(),
            rho_minus.to_bits(),
        );
        {
            let map = WEIGHTED_CACHE.lock().unwrap();
            if let Some(w) = map.get(&key) {
                if w.ops.curve.nodes().iter().zip(curve.nodes()).all(|(a, b)| a == b) {
                    return Ok(w.clone());
                }
            }
        }
        let ops = operators_for(curve)?;
        let n = curve.n_nodes();
        let n_matrix =
            ops.dtn_matrix(Side::Interior)? / rho_plus + ops.dtn_matrix(Side::Exterior)? / rho_minus;
        let w = curve.ds_weights();
        // dS-orthonormal basis of the machine-null pair {1, (-1)^j}.
        let e1 = DVector::from_element(n, 1.0 / curve.length().sqrt());
        let saw = DVector::from_fn(n, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 });
        let ip = |a: &DVector<f64>, b: &DVector<f64>| -> f64 {
            a.iter().zip(b.iter()).zip(&w).map(|((x, y), wi)| x * y * wi).sum()
        };
        let mut e2 = &saw - &e1 * ip(&saw, &e1);
        e2 /= ip(&e2, &e2).sqrt();
        let mut shifted = n_matrix.clone();
        for e in [&e1, &e2] {
            for i in 0..n {
                for j in 0..n {
                    shifted[(i, j)] += e[i] * e[j] * w[j];
                }
            }
        }
        let built = Arc::new(Self {
            ops,
            rho_plus,
            rho_minus,
            n_matrix,
            null_basis: [e1, e2],
            lu_shifted: shifted.lu(),
            eig: OnceCell::new(),
        });
        let mut map = WEIGHTED_CACHE.lock().unwrap();
        if map.len() > 16 {
            map.clear();
        }
        map.insert(key, built.clone());
        Ok(built)
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.ops.curve
    }

    pub fn operators(&self) -> &Arc<BoundaryOperators> {
        &self.ops
    }

    pub fn n_matrix(&self) -> &DMatrix<f64> {
        &self.n_matrix
    }

    /// Applies `𝒩 = (1/ρ₊)𝒩₊ + (1/ρ₋)𝒩₋`.
    pub fn apply(&self, f: &BoundaryField) -> Result<BoundaryField> {
        self.ops.check_field(f)?;
        let v = &self.n_matrix * f.values();
        let mut out = BoundaryField::scalar(v.as_slice().to_vec());
        out.set_resolution_warning(f.resolution_warning());
        Ok(self.curve().project_mean_zero(&out))
    }

    fn require_mean_zero(&self, g: &BoundaryField) -> Result<()> {
        let defect = self.curve().surface_integral(g).abs();
        let limit = 1e-10 * self.curve().l2_norm(g).max(f64::MIN_POSITIVE);
        if defect > limit {
            return Err(SolverError::NotMeanZero { defect, limit }.into());
        }
        Ok(())
    }

    /// dS-orthogonal projection away from the two machine-null
    /// directions (constants and the Nyquist sawtooth); returns the
    /// projected vector and the removed sawtooth amplitude.
    fn project_resolved(&self, v: &DVector<f64>) -> (DVector<f64>, f64) {
        let w = self.curve().ds_weights();
        let ip = |a: &DVector<f64>, b: &DVector<f64>| -> f64 {
            a.iter().zip(b.iter()).zip(&w).map(|((x, y), wi)| x * y * wi).sum()
        };
        let mut out = v.clone();
        let c1 = ip(&out, &self.null_basis[0]);
        out.axpy(-c1, &self.null_basis[0], 1.0);
        let c2 = ip(&out, &self.null_basis[1]);
        out.axpy(-c2, &self.null_basis[1], 1.0);
        (out, c2.abs())
    }

    /// Direct `𝒩⁻¹` on mean-zero fields via the rank-one-shifted LU; the
    /// result is verified against the unshifted matrix.
    pub fn solve_direct(&self, g: &BoundaryField) -> Result<BoundaryField> {
        self.ops.check_field(g)?;
        self.require_mean_zero(g)?;
        let (rhs, removed) = self.project_resolved(g.values());
        let scale = self.curve().l2_norm(g).max(f64::MIN_POSITIVE);
        let x = self
            .lu_shifted
            .solve(&rhs)
            .ok_or_else(|| SolverError::Singular {
                what: "shifted weighted Dirichlet–Neumann system".into(),
            })?;
        let (x, _) = self.project_resolved(&x);
        let residual = (&self.n_matrix * &x - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
        if residual > 1e-8 {
            return Err(SolverError::NoConvergence {
                what: "direct weighted Dirichlet–Neumann solve".into(),
                iterations: 1,
                residual,
            }
            .into());
        }
        let mut out = BoundaryField::scalar(x.as_slice().to_vec());
        out.set_mean_zero(true);
        out.set_resolution_warning(g.resolution_warning() || removed > 1e-8 * scale);
        Ok(out)
    }

    /// Iterative `𝒩⁻¹` by conjugate gradients in the dS inner product on
    /// the resolved mean-zero subspace (tolerance 1e-10, cap `10·n`).
    pub fn solve_cg(&self, g: &BoundaryField) -> Result<BoundaryField> {
        self.ops.check_field(g)?;
        self.require_mean_zero(g)?;
        let n = self.curve().n_nodes();
        let w = self.curve().ds_weights();
        // W-symmetrized application keeps CG exactly self-adjoint in the
        // dS geometry; the symmetrization defect of the Nyström matrix is
        // at the discretization floor. Residual projection pins the
        // iteration to the resolved subspace, away from the two discrete
        // null directions.
        let a = &self.n_matrix;
        let apply = |x: &DVector<f64>| -> DVector<f64> {
            let ax = a * x;
            let mut wx = x.clone();
            for i in 0..n {
                wx[i] *= w[i];
            }
            let atwx = a.transpose() * wx;
            let mut out = ax;
            for i in 0..n {
                out[i] = 0.5 * (out[i] + atwx[i] / w[i]);
            }
            self.project_resolved(&out).0
        };
        let (b, removed) = self.project_resolved(g.values());
        let scale = self.curve().l2_norm(g).max(f64::MIN_POSITIVE);
        match cg_in_ds(&apply, &b, &w, 1e-10, 10 * n) {
            Ok((x, _iters)) => {
                let (x, _) = self.project_resolved(&x);
                let mut out = BoundaryField::scalar(x.as_slice().to_vec());
                out.set_mean_zero(true);
                out.set_resolution_warning(g.resolution_warning() || removed > 1e-8 * scale);
                Ok(out)
            }
            Err((iters, res)) => Err(SolverError::NoConvergence {
                what: "conjugate gradients for the weighted Dirichlet–Neumann inverse".into(),
                iterations: iters,
                residual: res,
            }
            .into()),
        }
    }

    /// Applies `𝒩̄ = (1/ρ₊) 𝒩₊ 𝒩⁻¹ (1/ρ₋) 𝒩₋`.
    pub fn apply_bar(&self, f: &BoundaryField) -> Result<BoundaryField> {
        self.ops.check_field(f)?;
        let minus = self.ops.dtn_matrix(Side::Exterior)? * f.values() / self.rho_minus;
        let g = self
            .curve()
            .project_mean_zero(&BoundaryField::scalar(minus.as_slice().to_vec()));
        let h = self.solve_direct(&g)?;
        let plus = self.ops.dtn_matrix(Side::Interior)? * h.values() / self.rho_plus;
        let out = BoundaryField::scalar(plus.as_slice().to_vec());
        Ok(self.curve().project_mean_zero(&out))
    }

    fn eigen(&self) -> &(DMatrix<f64>, DVector<f64>) {
        self.eig.get_or_init(|| {
            let n = self.curve().n_nodes();
            let w = self.curve().ds_weights();
            let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
            let mut b = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    b[(i, j)] = sqrt_w[i] * self.n_matrix[(i, j)] / sqrt_w[j];
                }
            }
            let bs = (&b + b.transpose()) * 0.5;
            let se = bs.symmetric_eigen();
            (se.eigenvectors, se.eigenvalues)
        })
    }

    /// Applies a spectral function of `𝒩` through the dense symmetric
    /// eigendecomposition in the dS geometry, dropping the constant
    /// near-null mode.
    fn apply_spectral_function(&self, g: &BoundaryField, f: impl Fn(f64) -> f64) -> BoundaryField {
        let (q, lam) = self.eigen();
        let n = g.len();
        let w = self.curve().ds_weights();
        let lam_max = lam.iter().cloned().fold(0.0f64, f64::max);
        let floor = 1e-12 * lam_max;
        let mut y = DVector::zeros(n);
        for i in 0..n {
            y[i] = g.as_slice()[i] * w[i].sqrt();
        }
        let mut c = q.transpose() * y;
        for i in 0..n {
            c[i] *= if lam[i] > floor { f(lam[i]) } else { 0.0 };
        }
        let x = q * c;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(x[i] / w[i].sqrt());
        }
        BoundaryField::scalar(out)
    }

    /// Applies `𝒩^{-1/2}` on mean-zero fields (dense symmetric square
    /// root on the mean-zero subspace).
    pub fn apply_inverse_sqrt(&self, g: &BoundaryField) -> Result<BoundaryField> {
        self.ops.check_field(g)?;
        self.require_mean_zero(g)?;
        let out = self.apply_spectral_function(g, |l| 1.0 / l.sqrt());
        Ok(self.curve().project_mean_zero(&out))
    }

    /// Applies `𝒩^{+1/2}` (used in cross-checks of the inverse root).
    pub fn apply_sqrt(&self, g: &BoundaryField) -> Result<BoundaryField> {
        self.ops.check_field(g)?;
        let out = self.apply_spectral_function(g, |l| l.sqrt());
        Ok(self.curve().project_mean_zero(&out))
    }
}

static WEIGHTED_CACHE: Lazy<Mutex<HashMap<(u64, u64, u64), Arc<WeightedDtn>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// `𝒩 f = (1/ρ₊)𝒩₊f + (1/ρ₋)𝒩₋f`.
pub fn dtn_combined(
    curve: &ClosedCurve,
    f: &BoundaryField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<BoundaryField> {
    WeightedDtn::new(curve, rho_plus, rho_minus)?.apply(f)
}

/// `𝒩̄ f = (1/ρ₊)𝒩₊ 𝒩⁻¹ (1/ρ₋)𝒩₋ f`.
pub fn dtn_bar(
    curve: &ClosedCurve,
    f: &BoundaryField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<BoundaryField> {
    WeightedDtn::new(curve, rho_plus, rho_minus)?.apply_bar(f)
}

/// Mean-zero solution of `𝒩 h = g` by conjugate gradients.
pub fn dtn_inverse(
    curve: &ClosedCurve,
    g: &BoundaryField,
    rho_plus: f64,
    rho_minus: f64,
) -> Result<BoundaryField> {
    WeightedDtn::new(curve, rho_plus, rho_minus)?.solve_cg(g)
}

/// Conjugate gradients with the weighted inner product `Σ aᵢbᵢwᵢ`.
/// Returns `(solution, iterations)` or `(iterations, relative residual)`
/// on stagnation.
pub(crate) fn cg_in_ds(
    apply: &impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    w: &[f64],
    tol: f64,
    max_iter: usize,
) -> std::result::Result<(DVector<f64>, usize), (usize, f64)> {
    let ip = |a: &DVector<f64>, c: &DVector<f64>| -> f64 {
        a.iter()
            .zip(c.iter())
            .zip(w)
            .map(|((x, y), wi)| x * y * wi)
            .sum()
    };
    let b_norm = ip(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((DVector::zeros(b.len()), 0));
    }
    let mut x = DVector::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = ip(&r, &r);
    for it in 0..max_iter {
        let ap = apply(&p);
        let denom = ip(&p, &ap);
        if denom <= 0.0 {
            return Err((it, rs.sqrt() / b_norm));
        }
        let alpha = rs / denom;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_new = ip(&r, &r);
        if rs_new.sqrt() <= tol * b_norm {
            return Ok((x, it + 1));
        }
        p = &r + &p * (rs_new / rs);
        rs = rs_new;
    }
    let res = ip(&r, &r).sqrt() / b_norm;
    Err((max_iter, res))
}

/// Complex helper used by the vortex-sheet kernels elsewhere.
#[allow(dead_code)]
pub(crate) fn complexify(v: Vector2<f64>) -> Complex<f64> {
    Complex::new(v.x, v.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::alphas;
    use rand::{Rng, SeedableRng};

    fn mode_field(curve: &ClosedCurve, m: usize) -> BoundaryField {
        BoundaryField::scalar(
            curve
                .alphas()
                .iter()
                .map(|&a| (m as f64 * a).cos())
                .collect(),
        )
    }

    fn random_smooth_field(curve: &ClosedCurve, seed: u64) -> BoundaryField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = curve.n_nodes();
        let coeffs: Vec<(f64, f64)> = (1..=8)
            .map(|m| {
                let decay = (-0.4 * m as f64).exp();
                (
                    decay * rng.gen_range(-1.0..1.0),
                    decay * rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let vals: Vec<f64> = alphas(n)
            .iter()
            .map(|&a| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, (ac, bs))| {
                        let m = (i + 1) as f64;
                        ac * (m * a).cos() + bs * (m * a).sin()
                    })
                    .sum()
            })
            .collect();
        BoundaryField::scalar(vals)
    }

    #[test]
    fn maue_operator_on_unit_circle() {
        // T cos(mθ) = -(m/2) cos(mθ) on the unit circle.
        let c = ClosedCurve::circle(Vector2::zeros(), 1.0, 64);
        let ops = BoundaryOperators::assemble(&c).unwrap();
        for m in 1..=5usize {
            let f = mode_field(&c, m);
            let t = ops.apply_t(f.as_slice());
            for (j, &a) in c.alphas().iter().enumerate() {
                let expect = -(m as f64) / 2.0 * (m as f64 * a).cos();
                assert!(
                    (t[j] - expect).abs() < 1e-10,
                    "mode {m} node {j}: {} vs {expect}",
                    t[j]
                );
            }
        }
    }

    #[test]
    fn single_layer_circle_eigenvalues() {
        // S cos(mθ) = (R/2m) cos(mθ); S 1 = -R ln R.
        let r = 1.6;
        let c = ClosedCurve::circle(Vector2::zeros(), r, 64);
        let ops = BoundaryOperators::assemble(&c).unwrap();
        let ones = vec![1.0; 64];
        let s1 = ops.apply_single_layer(&ones);
        for v in &s1 {
            assert!((v - (-r * r.ln())).abs() < 1e-10, "constant: {v}");
        }
        for m in 1..=4usize {
            let f = mode_field(&c, m);
            let s = ops.apply_single_layer(f.as_slice());
            for (j, &a) in c.alphas().iter().enumerate() {
                let expect = r / (2.0 * m as f64) * (m as f64 * a).cos();
                assert!((s[j] - expect).abs() < 1e-10, "mode {m}: {} vs {expect}", s[j]);
            }
        }
    }

    #[test]
    fn dtn_circle_eigenvalues_both_sides() {
        let r = 1.7;
        let c = ClosedCurve::circle(Vector2::new(0.2, -0.1), r, 64);
        for side in [Side::Interior, Side::Exterior] {
            for m in 1..=6usize {
                let f = mode_field(&c, m);
                let g = dtn(&c, &f, side).unwrap();
                for (j, &a) in c.alphas().iter().enumerate() {
                    let expect = m as f64 / r * (m as f64 * a).cos();
                    assert!(
                        (g.as_slice()[j] - expect).abs() < 1e-9,
                        "{} mode {m}: {} vs {expect}",
                        side.name(),
                        g.as_slice()[j]
                    );
                }
            }
        }
    }

    #[test]
    fn dtn_kills_constants() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.1, 3, 96).unwrap();
        let f = BoundaryField::scalar(vec![3.25; 96]);
        for side in [Side::Interior, Side::Exterior] {
            let g = dtn(&c, &f, side).unwrap();
            assert!(g.max_abs() < 1e-11, "{}: {}", side.name(), g.max_abs());
        }
    }

    #[test]
    fn dtn_self_adjoint_and_positive_on_ellipse() {
        let c = ClosedCurve::ellipse(Vector2::zeros(), 1.4, 0.9, 96);
        for side in [Side::Interior, Side::Exterior] {
            let f = random_smooth_field(&c, 11);
            let g = random_smooth_field(&c, 12);
            let nf = dtn(&c, &f, side).unwrap();
            let ng = dtn(&c, &g, side).unwrap();
            let a = c.inner_product(&nf, &g);
            let b = c.inner_product(&f, &ng);
            let scale = c.l2_norm(&nf) * c.l2_norm(&g);
            assert!(
                (a - b).abs() < 1e-8 * scale,
                "{}: ⟨𝒩f,g⟩ = {a}, ⟨f,𝒩g⟩ = {b}",
                side.name()
            );
            let quad = c.inner_product(&nf, &f);
            assert!(
                quad > -1e-10 * c.l2_norm(&f).powi(2),
                "{}: quadratic form {quad}",
                side.name()
            );
            let fz = c.project_mean_zero(&f);
            let nfz = dtn(&c, &fz, side).unwrap();
            assert!(c.inner_product(&nfz, &fz) > 0.0, "strict on mean-zero");
        }
    }

    #[test]
    fn harmonic_extension_matches_separation_of_variables() {
        let r = 1.0;
        let c = ClosedCurve::circle(Vector2::zeros(), r, 64);
        let m = 3usize;
        let f = mode_field(&c, m);
        let int = harmonic_extend(&c, &f, Side::Interior).unwrap();
        let ext = harmonic_extend(&c, &f, Side::Exterior).unwrap();
        assert_eq!(ext.far_field_constant.map(|v| v.abs() < 1e-12), Some(true));
        for &(rad, th) in &[(0.5, 0.3), (0.35, 2.2), (0.6, -1.4)] {
            let x = Vector2::new(rad * f64::cos(th), rad * f64::sin(th));
            let u = int.value_at(x).unwrap();
            let expect = rad.powi(m as i32) * (m as f64 * th).cos();
            assert!((u - expect).abs() < 1e-10, "interior {u} vs {expect}");
            let grad = int.gradient_at(x).unwrap();
            // ∇(r^m cos mθ) in polar components.
            let ur = m as f64 * rad.powi(m as i32 - 1) * (m as f64 * th).cos();
            let ut = -(m as f64) * rad.powi(m as i32 - 1) * (m as f64 * th).sin();
            let e_r = Vector2::new(th.cos(), th.sin());
            let e_t = Vector2::new(-th.sin(), th.cos());
            let expect_grad = e_r * ur + e_t * ut;
            assert!((grad - expect_grad).norm() < 1e-9, "interior gradient");
        }
        for &(rad, th) in &[(2.0, 0.7), (3.5, -2.0)] {
            let x = Vector2::new(rad * f64::cos(th), rad * f64::sin(th));
            let u = ext.value_at(x).unwrap();
            let expect = rad.powi(-(m as i32)) * (m as f64 * th).cos();
            assert!((u - expect).abs() < 1e-10, "exterior {u} vs {expect}");
        }
    }

    #[test]
    fn constant_trace_extends_to_constant() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.12, 4, 96).unwrap();
        let f = BoundaryField::scalar(vec![2.5; 96]);
        let int = harmonic_extend(&c, &f, Side::Interior).unwrap();
        let u = int.value_at(Vector2::new(0.1, -0.05)).unwrap();
        assert!((u - 2.5).abs() < 1e-11, "maximum principle: {u}");
        let g = int.gradient_at(Vector2::new(0.1, -0.05)).unwrap();
        assert!(g.norm() < 1e-11);
        let ext = harmonic_extend(&c, &f, Side::Exterior).unwrap();
        assert!((ext.far_field_constant.unwrap() - 2.5).abs() < 1e-11);
        let u = ext.value_at(Vector2::new(3.0, 1.0)).unwrap();
        assert!((u - 2.5).abs() < 1e-11);
    }

    #[test]
    fn jump_relation_reproduces_trace() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.15, 3, 128).unwrap();
        let f = random_smooth_field(&c, 5);
        for side in [Side::Interior, Side::Exterior] {
            let ext = harmonic_extend(&c, &f, side).unwrap();
            let defect = ext.trace_defect();
            assert!(defect < 1e-8, "{} trace defect {defect}", side.name());
        }
    }

    #[test]
    fn evaluation_guards_reject_bad_points() {
        let c = ClosedCurve::circle(Vector2::zeros(), 1.0, 64);
        let f = mode_field(&c, 2);
        let int = harmonic_extend(&c, &f, Side::Interior).unwrap();
        match int.value_at(Vector2::new(0.999, 0.0)) {
            Err(crate::error::Error::Solver(SolverError::TooCloseToBoundary { .. })) => {}
            other => panic!("expected distance guard, got {other:?}"),
        }
        match int.value_at(Vector2::new(2.0, 0.0)) {
            Err(crate::error::Error::Solver(SolverError::WrongSide { .. })) => {}
            other => panic!("expected side guard, got {other:?}"),
        }
    }

    #[test]
    fn weighted_operators_on_circle_modes() {
        let (rp, rm) = (2.0, 3.0);
        let r = 1.25;
        let c = ClosedCurve::circle(Vector2::zeros(), r, 64);
        for m in 1..=4usize {
            let f = mode_field(&c, m);
            let comb = dtn_combined(&c, &f, rp, rm).unwrap();
            let bar = dtn_bar(&c, &f, rp, rm).unwrap();
            let lam = m as f64 / r;
            let expect_comb = (1.0 / rp + 1.0 / rm) * lam;
            let expect_bar = m as f64 / (r * (rp + rm));
            for (j, &a) in c.alphas().iter().enumerate() {
                let basis = (m as f64 * a).cos();
                assert!(
                    (comb.as_slice()[j] - expect_comb * basis).abs() < 1e-9,
                    "combined m={m}"
                );
                assert!(
                    (bar.as_slice()[j] - expect_bar * basis).abs() < 1e-9,
                    "bar m={m}: {} vs {}",
                    bar.as_slice()[j],
                    expect_bar * basis
                );
            }
        }
        // Equal densities ρ₊ = ρ₋ = ρ: the general eigenvalue
        // m/(R(ρ₊+ρ₋)) reduces to (1/2ρ)(m/R).
        let f = mode_field(&c, 2);
        let bar = dtn_bar(&c, &f, 2.0, 2.0).unwrap();
        for (j, &a) in c.alphas().iter().enumerate() {
            let expect = (2.0 / r) / (2.0 * 2.0) * (2.0 * a).cos();
            assert!(
                (bar.as_slice()[j] - expect).abs() < 1e-9,
                "{} vs {expect}",
                bar.as_slice()[j]
            );
        }
    }

    #[test]
    fn dtn_inverse_circle_closed_form() {
        let (rp, rm) = (1.0, 4.0);
        let r = 2.0;
        let c = ClosedCurve::circle(Vector2::zeros(), r, 64);
        let m = 3usize;
        let g = mode_field(&c, m);
        let h = dtn_inverse(&c, &g, rp, rm).unwrap();
        let expect = (r / m as f64) / (1.0 / rp + 1.0 / rm);
        for (j, &a) in c.alphas().iter().enumerate() {
            let basis = (m as f64 * a).cos();
            assert!(
                (h.as_slice()[j] - expect * basis).abs() < 1e-8,
                "{} vs {}",
                h.as_slice()[j],
                expect * basis
            );
        }
    }

    #[test]
    fn dtn_inverse_round_trip_and_guards() {
        let c = ClosedCurve::ellipse(Vector2::zeros(), 1.3, 0.8, 96);
        let (rp, rm) = (1.5, 0.7);
        let g = c.project_mean_zero(&random_smooth_field(&c, 21));
        let h = dtn_inverse(&c, &g, rp, rm).unwrap();
        let back = dtn_combined(&c, &h, rp, rm).unwrap();
        let err = back
            .values()
            .iter()
            .zip(g.values().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-8 * g.max_abs(), "round trip error {err}");

        // The direct (LU) and iterative routes agree.
        let w = WeightedDtn::new(&c, rp, rm).unwrap();
        let hd = w.solve_direct(&g).unwrap();
        let diff = hd
            .values()
            .iter()
            .zip(h.values().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-8 * h.max_abs(), "CG vs LU differ by {diff}");

        // Zero maps to zero; non-mean-zero input is refused.
        let zero = BoundaryField::zeros(96, FieldKind::Scalar);
        assert!(dtn_inverse(&c, &zero, rp, rm).unwrap().max_abs() == 0.0);
        let bad = BoundaryField::scalar(vec![1.0; 96]);
        match dtn_inverse(&c, &bad, rp, rm) {
            Err(crate::error::Error::Solver(SolverError::NotMeanZero { .. })) => {}
            other => panic!("expected mean-zero guard, got {other:?}"),
        }
    }

    #[test]
    fn dtn_bar_is_self_adjoint_and_positive() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.1, 2, 96).unwrap();
        let (rp, rm) = (1.0, 2.5);
        let f = c.project_mean_zero(&random_smooth_field(&c, 31));
        let g = c.project_mean_zero(&random_smooth_field(&c, 32));
        let bf = dtn_bar(&c, &f, rp, rm).unwrap();
        let bg = dtn_bar(&c, &g, rp, rm).unwrap();
        let a = c.inner_product(&bf, &g);
        let b = c.inner_product(&f, &bg);
        assert!((a - b).abs() < 1e-8 * c.l2_norm(&bf) * c.l2_norm(&g));
        assert!(c.inner_product(&bf, &f) > 0.0);
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let c = ClosedCurve::ellipse(Vector2::zeros(), 1.2, 0.9, 64);
        let (rp, rm) = (1.0, 3.0);
        let w = WeightedDtn::new(&c, rp, rm).unwrap();
        let g = c.project_mean_zero(&random_smooth_field(&c, 41));
        let half = w.apply_inverse_sqrt(&g).unwrap();
        // ∫ |𝒩^{-1/2} g|² dS should equal ⟨g, 𝒩⁻¹g⟩ up to the Nyström
        // symmetrization defect.
        let lhs = c.inner_product(&half, &half);
        let rhs = c.inner_product(&g, &w.solve_direct(&g).unwrap());
        assert!(
            (lhs - rhs).abs() < 1e-7 * rhs.abs().max(1e-300),
            "{lhs} vs {rhs}"
        );
        // 𝒩^{1/2}𝒩^{-1/2} is the identity on mean-zero fields.
        let back = w.apply_sqrt(&half).unwrap();
        let err = back
            .values()
            .iter()
            .zip(g.values().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-8 * g.max_abs(), "root round trip {err}");
    }

    #[test]
    fn dtn_spectral_convergence_on_circle() {
        // Eigenvalue error decays geometrically in n until the floor.
        let r = 1.0;
        let m = 4usize;
        let mut last = f64::INFINITY;
        for n in [16usize, 24, 32, 48] {
            let c = ClosedCurve::circle(Vector2::zeros(), r, n);
            let f = mode_field(&c, m);
            let g = dtn(&c, &f, Side::Interior).unwrap();
            let err = g
                .values()
                .iter()
                .zip(f.values().iter())
                .map(|(a, b)| (a - (m as f64 / r) * b).abs())
                .fold(0.0f64, f64::max);
            if last > 1e-12 {
                assert!(
                    err < last * 0.5 || err < 1e-12,
                    "n = {n}: error {err} did not drop from {last}"
                );
            }
            last = err;
        }
        assert!(last < 1e-12, "finest error {last}");
    }

    #[test]
    fn normal_derivative_consistent_with_off_surface_finite_differences() {
        let c = ClosedCurve::ellipse(Vector2::zeros(), 1.5, 1.0, 256);
        let f = random_smooth_field(&c, 55);
        let int = harmonic_extend(&c, &f, Side::Interior).unwrap();
        let nd = int.normal_derivative();
        // One-sided 4-point finite difference along the inward ray at a
        // handful of nodes; the stencil stays outside the kernel-sum
        // guard band.
        let scale = nd.max_abs();
        for &j in &[0usize, 40, 97, 180] {
            let x0 = c.nodes()[j];
            let nrm = c.outward_normal()[j];
            let h = 0.16;
            let u = |k: usize| {
                int.value_at(x0 - nrm * (h * k as f64))
                    .expect("probe inside guard band")
            };
            let f0 = f.as_slice()[j];
            // ∂u/∂(inward) ≈ (-25/12 f0 + 4u1 - 3u2 + 4/3 u3 - 1/4 u4)/h.
            let dudin =
                (-25.0 / 12.0 * f0 + 4.0 * u(1) - 3.0 * u(2) + 4.0 / 3.0 * u(3) - 0.25 * u(4)) / h;
            let expect = -dudin; // outward derivative
            assert!(
                (nd.as_slice()[j] - expect).abs() < 1e-2 * scale,
                "node {j}: dtn {} vs FD {expect}",
                nd.as_slice()[j]
            );
        }
    }
}
