//! Volume solvers on the two sides of a closed interface.
//!
//! The boundary-integral machinery in [`crate::potential`] answers boundary
//! questions (traces, normal derivatives) with spectral accuracy, but several
//! quantities in the pressure and energy computations are genuine volume
//! integrals, and layer-potential sums lose accuracy within a few mesh widths
//! of the curve.  This module therefore solves the Dirichlet problems
//! directly on a curvilinear grid mapped from the curve:
//!
//! * interior: `x(r, θ) = c + r·ρ(θ)` with `ρ(θ) = z(θ) − c` for a center `c`
//!   (the area centroid) about which the domain must be star-shaped,
//!   `r ∈ (0, 1]` discretized at Chebyshev–Radau points (the boundary is a
//!   grid circle, the coordinate singularity at `r = 0` carries no node);
//! * exterior: the same rays compactified by `s = 1/r̂ ∈ [0, 1]`, discretized
//!   at Chebyshev–Lobatto points so that `s = 0` — infinity itself — is part
//!   of the grid.  Bounded solutions are polynomials in `s` to spectral
//!   accuracy, so no domain truncation or far-field tail estimate is needed.
//!
//! Angular derivatives are Fourier-spectral, radial ones come from
//! barycentric differentiation matrices, and the transformed Laplacian is
//! collocated and solved by dense LU with row equilibration.  The resulting
//! fields are uniformly accurate up to the boundary, provide first and second
//! Cartesian derivatives, and integrate smooth decaying fields over the
//! unbounded exterior with spectral accuracy.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, Vector2};
use once_cell::sync::{Lazy, OnceCell};

use crate::curve::{alphas, ClosedCurve};
use crate::error::{GeometryError, Result, SolverError};
use crate::fft;
use crate::field::{BoundaryField, FieldKind};
use crate::potential::Side;

/// Minimum algebraic decay rate `p` (source = O(r^{−p})) accepted for
/// exterior Poisson sources, estimated on the outermost quadrature rings.
pub const MIN_DECAY_RATE: f64 = 2.5;

/// A ray factor smaller than this fraction of the largest one fails the
/// star-shape test.
const STAR_SHAPE_RATIO: f64 = 1e-8;

const MAP_NEWTON_ITERS: usize = 60;

/// Direct collocation solver for one side of a fixed curve.  Solvers are
/// memoized per curve and side (see [`solver_for`]), and the O((m·n)³)
/// dense LU of the collocation operator is deferred until the first
/// actual solve: purely geometric users of the grid — velocity sampling,
/// quadrature, decay checks — never pay for the factorization.
#[derive(Debug)]
pub struct VolumeSolver {
    curve: ClosedCurve,
    side: Side,
    center: Vector2<f64>,
    /// Radial coordinate of each grid ring, descending from `radial[0] = 1`
    /// (the boundary).  Interior: the coordinate is `r`; exterior: `s = 1/r̂`
    /// and the last ring is `s = 0`, infinity.
    radial: Vec<f64>,
    bary: Vec<f64>,
    dr: DMatrix<f64>,
    dr2: DMatrix<f64>,
    radial_quad: Vec<f64>,
    dtheta: DMatrix<f64>,
    dtheta2: DMatrix<f64>,
    /// Signed ray Jacobian factor d(θ) = ρ × ρ′ per boundary node.
    jac: Vec<f64>,
    rho: Vec<Vector2<f64>>,
    rho_prime: Vec<Vector2<f64>>,
    coefs: PdeCoefs,
    /// Row-equilibrated LU of the collocation operator with its scaling,
    /// assembled and factored on first solve.
    factored: OnceCell<(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, DVector<f64>)>,
    grid_x: DMatrix<f64>,
    grid_y: DMatrix<f64>,
    m: usize,
    n: usize,
}

/// θ-dependent coefficients of the ray-mapped Laplacian.
#[derive(Debug)]
struct PdeCoefs {
    a: Vec<f64>,
    b: Vec<f64>,
    b_theta: Vec<f64>,
    c: Vec<f64>,
    c_theta: Vec<f64>,
}

/// Chebyshev–Radau points on (0, 1], descending, first node exactly 1.
fn radau_points(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| {
            let t = -f64::cos(2.0 * j as f64 * std::f64::consts::PI / (2 * m - 1) as f64);
            0.5 * (1.0 - t)
        })
        .collect()
}

/// Chebyshev–Lobatto points on [0, 1], descending, endpoints included.
fn lobatto_points(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| {
            let t = f64::cos(j as f64 * std::f64::consts::PI / (m - 1) as f64);
            0.5 * (1.0 + t)
        })
        .collect()
}

/// Barycentric interpolation weights for arbitrary distinct nodes.  Factors
/// are scaled by 4/(interval length) to keep the products in range
/// (Berrut–Trefethen, SIAM Rev. 46).
fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let (lo, hi) = x
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = 4.0 / (hi - lo);
    let mut w: Vec<f64> = (0..x.len())
        .map(|i| {
            let mut p = 1.0;
            for j in 0..x.len() {
                if j != i {
                    p *= (x[i] - x[j]) * scale;
                }
            }
            1.0 / p
        })
        .collect();
    let wmax = w.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    for v in &mut w {
        *v /= wmax;
    }
    w
}

/// First-derivative collocation matrix from barycentric weights, with the
/// negative-sum trick on the diagonal.
fn differentiation_matrix(x: &[f64], w: &[f64]) -> DMatrix<f64> {
    let m = x.len();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut diag = 0.0;
        for j in 0..m {
            if i != j {
                let v = (w[j] / w[i]) / (x[i] - x[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Quadrature weights on the given nodes in [0, 1], exact for polynomials of
/// degree < m (Clenshaw–Curtis construction: solve the Chebyshev Vandermonde
/// system against the Chebyshev moments).
fn quadrature_weights(x: &[f64]) -> Result<Vec<f64>> {
    let m = x.len();
    let mut v = DMatrix::zeros(m, m);
    let mut moments = DVector::zeros(m);
    for k in 0..m {
        for (i, &xi) in x.iter().enumerate() {
            let t = (2.0 * xi - 1.0).clamp(-1.0, 1.0);
            v[(k, i)] = f64::cos(k as f64 * t.acos());
        }
        moments[k] = if k % 2 == 0 {
            2.0 / (1.0 - (k * k) as f64)
        } else {
            0.0
        };
    }
    let w = v.lu().solve(&moments).ok_or(SolverError::Singular {
        what: "radial quadrature weights".into(),
    })?;
    Ok(w.iter().map(|&wi| 0.5 * wi).collect())
}

/// Dense Fourier differentiation matrix of the given order (columns are
/// spectral derivatives of node impulses).
fn fourier_diff_matrix(n: usize, order: u32) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = fft::derivative(&e, order);
        e[j] = 0.0;
        for i in 0..n {
            d[(i, j)] = col[i];
        }
    }
    d
}

impl VolumeSolver {
    /// Builds the solver with `n_radial` rings.  Fails with
    /// [`GeometryError::NotStarShaped`] if some boundary ray from the
    /// centroid leaves and re-enters the domain.
    pub fn new(curve: &ClosedCurve, side: Side, n_radial: usize) -> Result<Self> {
        assert!(n_radial >= 8, "need at least 8 radial rings, got {n_radial}");
        let n = curve.n_nodes();
        let m = n_radial;
        let or = curve.orientation();

        // Area centroid via boundary integrals (signed area cancels the
        // orientation).
        let nodes = curve.nodes();
        let speed = curve.speed();
        let tangent = curve.tangent();
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut signed_area = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for j in 0..n {
            let zp = tangent[j] * speed[j];
            signed_area += 0.5 * h * (nodes[j].x * zp.y - nodes[j].y * zp.x);
            cx += 0.5 * h * nodes[j].x * nodes[j].x * zp.y;
            cy -= 0.5 * h * nodes[j].y * nodes[j].y * zp.x;
        }
        let center = Vector2::new(cx / signed_area, cy / signed_area);

        let rho: Vec<Vector2<f64>> = nodes.iter().map(|p| p - center).collect();
        let rho_prime: Vec<Vector2<f64>> = (0..n).map(|j| tangent[j] * speed[j]).collect();
        let jac: Vec<f64> = (0..n)
            .map(|j| rho[j].x * rho_prime[j].y - rho[j].y * rho_prime[j].x)
            .collect();
        let star_min = jac.iter().map(|&d| or * d).fold(f64::MAX, f64::min);
        let star_max = jac.iter().map(|&d| or * d).fold(f64::MIN, f64::max);
        if !(star_min > STAR_SHAPE_RATIO * star_max && star_max > 0.0) {
            return Err(GeometryError::NotStarShaped {
                margin: star_min / star_max.max(f64::MIN_POSITIVE),
            }
            .into());
        }

        // PDE coefficients (functions of θ only): with d = ρ×ρ′,
        //   r² d Δu = a r² u_rr + (a − b_θ) r u_r − 2 b r u_rθ + c u_θθ + c_θ u_θ
        // where a = |ρ′|²/d, b = ρ·ρ′/d, c = |ρ|²/d; under s = 1/r̂ the radial
        // terms become a s² u_ss + (a + b_θ) s u_s + 2 b s u_sθ.
        let coef_a: Vec<f64> = (0..n).map(|j| rho_prime[j].norm_squared() / jac[j]).collect();
        let coef_b: Vec<f64> = (0..n).map(|j| rho[j].dot(&rho_prime[j]) / jac[j]).collect();
        let coef_c: Vec<f64> = (0..n).map(|j| rho[j].norm_squared() / jac[j]).collect();
        let coef_bth = fft::derivative(&coef_b, 1);
        let coef_cth = fft::derivative(&coef_c, 1);

        let radial = match side {
            Side::Interior => radau_points(m),
            Side::Exterior => lobatto_points(m),
        };
        let bary = barycentric_weights(&radial);
        let dr = differentiation_matrix(&radial, &bary);
        let dr2 = &dr * &dr;
        let radial_quad = quadrature_weights(&radial)?;
        let dtheta = fourier_diff_matrix(n, 1);
        let dtheta2 = fourier_diff_matrix(n, 2);

        let mut grid_x = DMatrix::zeros(m, n);
        let mut grid_y = DMatrix::zeros(m, n);
        for (i, &ri) in radial.iter().enumerate() {
            for j in 0..n {
                let p = match side {
                    Side::Interior => center + rho[j] * ri,
                    Side::Exterior => {
                        if ri == 0.0 {
                            Vector2::new(f64::NAN, f64::NAN)
                        } else {
                            center + rho[j] / ri
                        }
                    }
                };
                grid_x[(i, j)] = p.x;
                grid_y[(i, j)] = p.y;
            }
        }

        Ok(Self {
            curve: curve.clone(),
            side,
            center,
            radial,
            bary,
            dr,
            dr2,
            radial_quad,
            dtheta,
            dtheta2,
            jac,
            rho,
            rho_prime,
            coefs: PdeCoefs {
                a: coef_a,
                b: coef_b,
                b_theta: coef_bth,
                c: coef_c,
                c_theta: coef_cth,
            },
            factored: OnceCell::new(),
            grid_x,
            grid_y,
            m,
            n,
        })
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn center(&self) -> Vector2<f64> {
        self.center
    }

    /// Number of radial rings.
    pub fn n_radial(&self) -> usize {
        self.m
    }

    /// The factored collocation operator with its row equilibration,
    /// assembled and LU-factored on first use.
    fn factored(&self) -> Result<&(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, DVector<f64>)> {
        self.factored.get_or_try_init(|| {
            let (m, n) = (self.m, self.n);
            let dr = &self.dr;
            let dr2 = &self.dr2;
            let dtheta = &self.dtheta;
            let dtheta2 = &self.dtheta2;
            let coefs = &self.coefs;

            // Collocated operator: identity rows on the boundary ring, the
            // transformed −Δ everywhere else (including s = 0, where only the
            // angular terms survive and enforce constancy at infinity).
            let size = m * n;
            let mut mat = DMatrix::zeros(size, size);
            for j in 0..n {
                mat[(j, j)] = 1.0;
            }
            for i in 1..m {
                let q = self.radial[i];
                for j in 0..n {
                    let row = i * n + j;
                    let (c_rr, c_r, c_cross) = match self.side {
                        Side::Interior => (
                            coefs.a[j] * q * q,
                            (coefs.a[j] - coefs.b_theta[j]) * q,
                            -2.0 * coefs.b[j] * q,
                        ),
                        Side::Exterior => (
                            coefs.a[j] * q * q,
                            (coefs.a[j] + coefs.b_theta[j]) * q,
                            2.0 * coefs.b[j] * q,
                        ),
                    };
                    for k in 0..m {
                        mat[(row, k * n + j)] -= c_rr * dr2[(i, k)] + c_r * dr[(i, k)];
                    }
                    for l in 0..n {
                        mat[(row, i * n + l)] -=
                            coefs.c[j] * dtheta2[(j, l)] + coefs.c_theta[j] * dtheta[(j, l)];
                    }
                    for k in 0..m {
                        let dk = dr[(i, k)];
                        if dk != 0.0 {
                            let f = c_cross * dk;
                            for l in 0..n {
                                mat[(row, k * n + l)] -= f * dtheta[(j, l)];
                            }
                        }
                    }
                }
            }
            if self.side == Side::Exterior {
                // The infinity-ring rows reduce to the angular operator, which
                // annihilates ring constants, so they are one equation short: a
                // spurious "discrete logarithm" profile would make the system
                // singular.  The rows are linearly dependent (they sum to the
                // zero functional), so one of them is replaced by the regularity
                // condition that excludes the logarithm in the continuum: the
                // angular mean of u has zero s-slope at infinity.
                let row = (m - 1) * n;
                for c in 0..size {
                    mat[(row, c)] = 0.0;
                }
                for k in 0..m {
                    let v = dr[(m - 1, k)] / n as f64;
                    for l in 0..n {
                        mat[(row, k * n + l)] = v;
                    }
                }
            }

            // Row equilibration before the LU: the transformed operator rows
            // span many orders of magnitude in q.
            let mut row_scale = DVector::zeros(size);
            for r in 0..size {
                let amax = (0..size).fold(0.0f64, |a, c| a.max(mat[(r, c)].abs()));
                if amax < 1e-300 {
                    return Err(SolverError::Singular {
                        what: format!("volume collocation row {r}"),
                    }
                    .into());
                }
                let s = 1.0 / amax;
                row_scale[r] = s;
                for c in 0..size {
                    mat[(r, c)] *= s;
                }
            }
            Ok((mat.lu(), row_scale))
        })
    }

    /// Number of angular nodes (equals the curve node count).
    pub fn n_theta(&self) -> usize {
        self.n
    }

    /// Radial grid coordinates, descending from the boundary value 1.
    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial
    }

    /// True for the exterior ring that sits at infinity.
    pub fn is_infinity_ring(&self, i: usize) -> bool {
        self.side == Side::Exterior && self.radial[i] == 0.0
    }

    /// Cartesian coordinates of grid node (ring, ray); `None` at infinity.
    pub fn node_coordinates(&self, i: usize, j: usize) -> Option<(f64, f64)> {
        let (x, y) = (self.grid_x[(i, j)], self.grid_y[(i, j)]);
        if x.is_finite() {
            Some((x, y))
        } else {
            None
        }
    }

    /// Volume quadrature weight of grid node (ring, ray); zero at infinity.
    /// Exterior weights integrate to true infinity and assume the integrand
    /// decays faster than r̂⁻³ along each ray.
    pub fn quad_weight(&self, i: usize, j: usize) -> f64 {
        let or = self.curve.orientation();
        let h = 2.0 * std::f64::consts::PI / self.n as f64;
        let q = self.radial[i];
        match self.side {
            Side::Interior => self.radial_quad[i] * h * q * or * self.jac[j],
            Side::Exterior => {
                if q == 0.0 {
                    0.0
                } else {
                    self.radial_quad[i] * h * or * self.jac[j] / (q * q * q)
                }
            }
        }
    }

    /// Samples a source function at every finite grid node (zero at
    /// infinity), in the layout expected by the solve routines.
    pub fn sample_source(&self, f: &dyn Fn(f64, f64) -> f64) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.m, self.n);
        for i in 0..self.m {
            for j in 0..self.n {
                g[(i, j)] = match self.node_coordinates(i, j) {
                    Some((x, y)) => f(x, y),
                    None => 0.0,
                };
            }
        }
        g
    }

    /// Integrates grid samples over the side's volume.
    pub fn integrate_grid(&self, g: &DMatrix<f64>) -> f64 {
        assert_eq!(
            (g.nrows(), g.ncols()),
            (self.m, self.n),
            "grid shape mismatch in integrate_grid"
        );
        let mut acc = 0.0;
        for i in 0..self.m {
            for j in 0..self.n {
                let w = self.quad_weight(i, j);
                if w != 0.0 {
                    acc += w * g[(i, j)];
                }
            }
        }
        acc
    }

    /// Estimated algebraic decay rate of exterior source samples, from the
    /// two outermost finite rings; `None` when the far samples are already
    /// negligible (effectively compact support).
    fn decay_rate(&self, g: &DMatrix<f64>) -> Option<f64> {
        debug_assert_eq!(self.side, Side::Exterior);
        let far = self.m - 2;
        let near = self.m - 3;
        let ring_max = |i: usize| (0..self.n).fold(0.0f64, |a, j| a.max(g[(i, j)].abs()));
        let overall = (0..self.m - 1).fold(0.0f64, |a, i| a.max(ring_max(i)));
        let m_far = ring_max(far);
        let m_near = ring_max(near);
        if m_far <= 1e-13 * overall + f64::MIN_POSITIVE {
            return None;
        }
        let r_far = 1.0 / self.radial[far];
        let r_near = 1.0 / self.radial[near];
        Some(f64::ln(m_near / m_far) / f64::ln(r_far / r_near))
    }

    pub(crate) fn check_decay(&self, g: &DMatrix<f64>) -> Result<()> {
        if self.side == Side::Exterior {
            if let Some(rate) = self.decay_rate(g) {
                if !(rate >= MIN_DECAY_RATE) {
                    return Err(SolverError::DecayTooSlow {
                        rate,
                        required: MIN_DECAY_RATE,
                    }
                    .into());
                }
            }
        }
        Ok(())
    }

    fn solve_grid(&self, source: Option<&DMatrix<f64>>, trace: Option<&[f64]>) -> Result<DMatrix<f64>> {
        let mut rhs = DVector::zeros(self.m * self.n);
        if let Some(t) = trace {
            assert_eq!(t.len(), self.n, "trace length mismatch");
            for j in 0..self.n {
                rhs[j] = t[j];
            }
        }
        if let Some(g) = source {
            assert_eq!(
                (g.nrows(), g.ncols()),
                (self.m, self.n),
                "source grid shape mismatch"
            );
            for i in 1..self.m {
                let q = self.radial[i];
                for j in 0..self.n {
                    rhs[i * self.n + j] = match self.side {
                        Side::Interior => q * q * self.jac[j] * g[(i, j)],
                        Side::Exterior => {
                            if q == 0.0 {
                                0.0
                            } else {
                                self.jac[j] * g[(i, j)] / (q * q)
                            }
                        }
                    };
                }
            }
        }
        let (lu, row_scale) = self.factored()?;
        for r in 0..rhs.len() {
            rhs[r] *= row_scale[r];
        }
        let sol = lu.solve(&rhs).ok_or(SolverError::Singular {
            what: format!("{} volume collocation", self.side.name()),
        })?;
        Ok(DMatrix::from_fn(self.m, self.n, |i, j| sol[i * self.n + j]))
    }

    /// Locates a point in mapped coordinates: returns (r̂, θ) with
    /// `x = c + r̂ ρ(θ)`.  Newton iteration on the smooth map; the initial
    /// guess comes from the nearest boundary ray.
    fn locate(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let p = Vector2::new(x, y);
        let rel = p - self.center;
        let scale = self.curve.length() / (2.0 * std::f64::consts::PI);
        if rel.norm() < 1e-13 * scale {
            return match self.side {
                Side::Interior => Ok((0.0, 0.0)),
                Side::Exterior => Err(SolverError::WrongSide { x, y }.into()),
            };
        }
        let angles = alphas(self.n);
        let mut best = 0;
        let mut best_dot = f64::MIN;
        for j in 0..self.n {
            let d = rel.dot(&self.rho[j]) / self.rho[j].norm();
            if d > best_dot {
                best_dot = d;
                best = j;
            }
        }
        let mut theta = angles[best];
        let mut rad = (rel.norm() / self.rho[best].norm()).max(1e-12);
        let tol = 1e-12 * (scale + rel.norm());
        let mut converged = false;
        let mut residual = f64::MAX;
        for _ in 0..MAP_NEWTON_ITERS {
            let rho_t = self.curve.point_at(theta) - self.center;
            let rho_p = self.curve.derivative_at(theta);
            let f = self.center + rho_t * rad - p;
            residual = f.norm();
            if residual <= tol {
                converged = true;
                break;
            }
            let det = rad * (rho_t.x * rho_p.y - rho_t.y * rho_p.x);
            if det.abs() < 1e-300 {
                break;
            }
            // Solve [ρ, r̂ρ′]·(δr, δθ) = −f.
            let dr = (-f.x * rad * rho_p.y + f.y * rad * rho_p.x) / det;
            let dth = (f.x * rho_t.y - f.y * rho_t.x) / det;
            rad = (rad + dr).max(1e-14);
            theta += dth;
        }
        if !converged {
            return Err(SolverError::NoConvergence {
                what: "inverse grid map".into(),
                iterations: MAP_NEWTON_ITERS,
                residual,
            }
            .into());
        }
        Ok((rad, theta))
    }

    /// Maps a physical point to the grid's radial coordinate, enforcing the
    /// side convention.
    fn radial_coordinate(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (rad, theta) = self.locate(x, y)?;
        match self.side {
            Side::Interior => {
                if rad > 1.0 + 1e-9 {
                    Err(SolverError::WrongSide { x, y }.into())
                } else {
                    Ok((rad.min(1.0), theta))
                }
            }
            Side::Exterior => {
                if rad < 1.0 - 1e-9 {
                    Err(SolverError::WrongSide { x, y }.into())
                } else {
                    Ok(((1.0 / rad).min(1.0), theta))
                }
            }
        }
    }

    /// Tensor interpolation of grid samples: barycentric along the radial
    /// coordinate, trigonometric along the curve parameter.
    fn interp(&self, g: &DMatrix<f64>, q: f64, theta: f64) -> f64 {
        let mut slice = vec![0.0; self.n];
        let mut exact = None;
        for (i, &xi) in self.radial.iter().enumerate() {
            if (q - xi).abs() < 1e-14 {
                exact = Some(i);
                break;
            }
        }
        match exact {
            Some(i) => {
                for j in 0..self.n {
                    slice[j] = g[(i, j)];
                }
            }
            None => {
                let mut denom = 0.0;
                let mut coeff = vec![0.0; self.m];
                for i in 0..self.m {
                    let c = self.bary[i] / (q - self.radial[i]);
                    coeff[i] = c;
                    denom += c;
                }
                for j in 0..self.n {
                    let mut acc = 0.0;
                    for i in 0..self.m {
                        acc += coeff[i] * g[(i, j)];
                    }
                    slice[j] = acc / denom;
                }
            }
        }
        fft::TrigInterp::new(&slice).eval(theta)
    }

    /// Cartesian gradient grids of grid samples via the metric chain rule.
    /// Entries on the infinity ring are zero.
    fn cartesian_gradient(&self, g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let gr = &self.dr * g;
        let gt = g * self.dtheta.transpose();
        let mut gx = DMatrix::zeros(self.m, self.n);
        let mut gy = DMatrix::zeros(self.m, self.n);
        for i in 0..self.m {
            let q = self.radial[i];
            for j in 0..self.n {
                let (rx, ry) = (self.rho[j].x, self.rho[j].y);
                let (px, py) = (self.rho_prime[j].x, self.rho_prime[j].y);
                match self.side {
                    Side::Interior => {
                        let det = q * self.jac[j];
                        gx[(i, j)] = (q * py * gr[(i, j)] - ry * gt[(i, j)]) / det;
                        gy[(i, j)] = (-q * px * gr[(i, j)] + rx * gt[(i, j)]) / det;
                    }
                    Side::Exterior => {
                        if q == 0.0 {
                            continue;
                        }
                        let d = self.jac[j];
                        gx[(i, j)] = -(q * q * py * gr[(i, j)] + q * ry * gt[(i, j)]) / d;
                        gy[(i, j)] = (q * q * px * gr[(i, j)] + q * rx * gt[(i, j)]) / d;
                    }
                }
            }
        }
        (gx, gy)
    }
}

static VOLUME_CACHE: Lazy<Mutex<HashMap<(u64, u8, usize), Arc<VolumeSolver>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn default_radial(n: usize) -> usize {
    (n / 2).clamp(16, 36)
}

/// Memoized volume solver for a curve and side at the default radial
/// resolution.
pub fn solver_for(curve: &ClosedCurve, side: Side) -> Result<Arc<VolumeSolver>> {
    solver_with(curve, side, default_radial(curve.n_nodes()))
}

/// Memoized volume solver with an explicit number of radial rings.
pub fn solver_with(curve: &ClosedCurve, side: Side, n_radial: usize) -> Result<Arc<VolumeSolver>> {
    let key = (curve.spectrum_hash(), side.flag_byte(), n_radial);
    let mut map = VOLUME_CACHE.lock().unwrap();
    if let Some(s) = map.get(&key) {
        if s.curve.n_nodes() == curve.n_nodes()
            && s.curve.nodes().iter().zip(curve.nodes()).all(|(a, b)| a == b)
        {
            return Ok(s.clone());
        }
    }
    let solver = Arc::new(VolumeSolver::new(curve, side, n_radial)?);
    if map.len() > 6 {
        map.clear();
    }
    map.insert(key, solver.clone());
    Ok(solver)
}

/// A scalar field on a volume grid, with lazily derived Cartesian derivative
/// grids.
#[derive(Debug)]
pub struct VolumeField {
    solver: Arc<VolumeSolver>,
    values: DMatrix<f64>,
    grad: OnceCell<(DMatrix<f64>, DMatrix<f64>)>,
    hess: OnceCell<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>,
}

impl VolumeField {
    pub(crate) fn new(solver: Arc<VolumeSolver>, values: DMatrix<f64>) -> Self {
        Self {
            solver,
            values,
            grad: OnceCell::new(),
            hess: OnceCell::new(),
        }
    }

    pub fn solver(&self) -> &Arc<VolumeSolver> {
        &self.solver
    }

    pub fn side(&self) -> Side {
        self.solver.side
    }

    /// Raw grid values (rings × rays).
    pub fn grid_values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub(crate) fn gradient_grids(&self) -> &(DMatrix<f64>, DMatrix<f64>) {
        self.grad
            .get_or_init(|| self.solver.cartesian_gradient(&self.values))
    }

    pub(crate) fn hessian_grids(&self) -> &(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        self.hess.get_or_init(|| {
            let (ux, uy) = self.gradient_grids().clone();
            let (uxx, uxy_a) = self.solver.cartesian_gradient(&ux);
            let (uyx, uyy) = self.solver.cartesian_gradient(&uy);
            let uxy = 0.5 * (uxy_a + uyx);
            (uxx, uxy, uyy)
        })
    }

    /// Field value at a point on this side (uniformly accurate up to the
    /// boundary).
    pub fn value_at(&self, x: f64, y: f64) -> Result<f64> {
        let (q, theta) = self.solver.radial_coordinate(x, y)?;
        Ok(self.solver.interp(&self.values, q, theta))
    }

    /// Cartesian gradient at a point on this side.
    pub fn gradient_at(&self, x: f64, y: f64) -> Result<Vector2<f64>> {
        let (q, theta) = self.solver.radial_coordinate(x, y)?;
        let (gx, gy) = self.gradient_grids();
        Ok(Vector2::new(
            self.solver.interp(gx, q, theta),
            self.solver.interp(gy, q, theta),
        ))
    }

    /// Second derivatives (u_xx, u_xy, u_yy) at a point on this side.
    pub fn hessian_at(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let (q, theta) = self.solver.radial_coordinate(x, y)?;
        let (uxx, uxy, uyy) = self.hessian_grids();
        Ok((
            self.solver.interp(uxx, q, theta),
            self.solver.interp(uxy, q, theta),
            self.solver.interp(uyy, q, theta),
        ))
    }

    /// Trace on the curve (the boundary ring of the grid).
    pub fn boundary_trace(&self) -> BoundaryField {
        BoundaryField::scalar((0..self.solver.n).map(|j| self.values[(0, j)]).collect())
    }

    /// Normal derivative ∇u·N₊ at the curve nodes (N₊ is the outward normal
    /// of the interior domain for both sides).
    pub fn normal_derivative(&self) -> BoundaryField {
        let (gx, gy) = self.gradient_grids();
        let normal = self.solver.curve.outward_normal();
        BoundaryField::new(
            (0..self.solver.n)
                .map(|j| gx[(0, j)] * normal[j].x + gy[(0, j)] * normal[j].y)
                .collect(),
            FieldKind::Scalar,
        )
    }

    /// Cartesian gradient at every curve node.
    pub fn boundary_gradient(&self) -> Vec<Vector2<f64>> {
        let (gx, gy) = self.gradient_grids();
        (0..self.solver.n)
            .map(|j| Vector2::new(gx[(0, j)], gy[(0, j)]))
            .collect()
    }

    /// Value at infinity (mean over the compactified ring); exterior only.
    pub fn far_field_value(&self) -> Option<f64> {
        if self.solver.side != Side::Exterior {
            return None;
        }
        let last = self.solver.m - 1;
        let mean = (0..self.solver.n)
            .map(|j| self.values[(last, j)])
            .sum::<f64>()
            / self.solver.n as f64;
        Some(mean)
    }

    /// ∫ |∇u|² dV over this side's volume.
    pub fn dirichlet_energy(&self) -> f64 {
        let (gx, gy) = self.gradient_grids();
        let mut acc = 0.0;
        for i in 0..self.solver.m {
            for j in 0..self.solver.n {
                let w = self.solver.quad_weight(i, j);
                if w != 0.0 {
                    acc += w * (gx[(i, j)] * gx[(i, j)] + gy[(i, j)] * gy[(i, j)]);
                }
            }
        }
        acc
    }

    /// Integrates f(x, y, u) over this side's volume.
    pub fn integrate(&self, f: &dyn Fn(f64, f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.solver.m {
            for j in 0..self.solver.n {
                let w = self.solver.quad_weight(i, j);
                if w != 0.0 {
                    let (x, y) = self.solver.node_coordinates(i, j).unwrap();
                    acc += w * f(x, y, self.values[(i, j)]);
                }
            }
        }
        acc
    }
}

/// Solves Δu = 0 on the given side with trace `f`, on the volume grid.  The
/// exterior solution is the unique bounded one; its value at infinity is
/// available from [`VolumeField::far_field_value`].
pub fn laplace(curve: &ClosedCurve, f: &BoundaryField, side: Side) -> Result<VolumeField> {
    f.expect_kind(FieldKind::Scalar)?;
    let solver = solver_for(curve, side)?;
    if f.len() != solver.n {
        return Err(SolverError::ShapeMismatch {
            got: f.len(),
            want: solver.n,
        }
        .into());
    }
    let values = solver.solve_grid(None, Some(f.as_slice()))?;
    Ok(VolumeField::new(solver, values))
}

/// General Dirichlet solve −Δu = source, u|_S = trace, on the volume grid.
/// Either part may be omitted.
pub fn solve_dirichlet(
    curve: &ClosedCurve,
    source: Option<&DMatrix<f64>>,
    trace: Option<&BoundaryField>,
    side: Side,
) -> Result<VolumeField> {
    let solver = solver_for(curve, side)?;
    if let Some(g) = source {
        solver.check_decay(g)?;
    }
    let trace_values = match trace {
        Some(t) => {
            t.expect_kind(FieldKind::Scalar)?;
            Some(t.to_vec())
        }
        None => None,
    };
    let values = solver.solve_grid(source, trace_values.as_deref())?;
    Ok(VolumeField::new(solver, values))
}

/// Zero-trace Poisson solution −Δu = g on one side, with the source recorded
/// on the volume quadrature grid.
#[derive(Debug)]
pub struct PoissonSolution {
    field: VolumeField,
    source_samples: DMatrix<f64>,
    boundary_correction: BoundaryField,
}

/// Solves −Δu = source with u|_S = 0 on the given side.  The exterior
/// solution is the unique bounded one; sources must decay at the configured
/// algebraic rate (checked on the outermost quadrature rings).
pub fn poisson(
    curve: &ClosedCurve,
    source: &dyn Fn(f64, f64) -> f64,
    side: Side,
) -> Result<PoissonSolution> {
    let solver = solver_for(curve, side)?;
    let samples = solver.sample_source(source);
    poisson_from_samples_on(&solver, samples)
}

/// As [`poisson`], but with the source already sampled on the side's volume
/// grid (layout of [`VolumeSolver::sample_source`]).
pub fn poisson_from_samples(
    curve: &ClosedCurve,
    samples: DMatrix<f64>,
    side: Side,
) -> Result<PoissonSolution> {
    let solver = solver_for(curve, side)?;
    poisson_from_samples_on(&solver, samples)
}

fn poisson_from_samples_on(
    solver: &Arc<VolumeSolver>,
    samples: DMatrix<f64>,
) -> Result<PoissonSolution> {
    solver.check_decay(&samples)?;
    let values = solver.solve_grid(Some(&samples), None)?;
    let field = VolumeField::new(solver.clone(), values);
    // The zero-trace bounded solution generally has a finite nonzero value γ
    // at infinity; the decaying representative is obtained by adding the
    // harmonic extension of the constant correction −γ recorded here.
    let correction = match solver.side {
        Side::Interior => BoundaryField::zeros(solver.n, FieldKind::Scalar),
        Side::Exterior => {
            let gamma = field.far_field_value().unwrap_or(0.0);
            BoundaryField::scalar(vec![-gamma; solver.n])
        }
    };
    Ok(PoissonSolution {
        field,
        source_samples: samples,
        boundary_correction: correction,
    })
}

impl PoissonSolution {
    pub fn side(&self) -> Side {
        self.field.side()
    }

    /// The zero-trace solution as a grid field.
    pub fn field(&self) -> &VolumeField {
        &self.field
    }

    /// Source samples on the volume quadrature grid.
    pub fn source_samples(&self) -> &DMatrix<f64> {
        &self.source_samples
    }

    /// Boundary trace of the harmonic correction that turns the bounded
    /// zero-trace solution into the decaying representative (identically
    /// zero for interior problems and for exterior sources whose bounded
    /// solution already decays).
    pub fn boundary_correction(&self) -> &BoundaryField {
        &self.boundary_correction
    }

    pub fn value_at(&self, x: f64, y: f64) -> Result<f64> {
        self.field.value_at(x, y)
    }

    pub fn gradient_at(&self, x: f64, y: f64) -> Result<Vector2<f64>> {
        self.field.gradient_at(x, y)
    }

    pub fn hessian_at(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        self.field.hessian_at(x, y)
    }

    /// ∇u·N₊ on the curve.
    pub fn normal_derivative(&self) -> BoundaryField {
        self.field.normal_derivative()
    }

    /// Maximum boundary-trace magnitude relative to the solution scale.
    pub fn trace_defect(&self) -> f64 {
        let trace = self.field.boundary_trace();
        let scale = self
            .field
            .grid_values()
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            trace.max_abs() / scale
        }
    }

    pub fn far_field_value(&self) -> Option<f64> {
        self.field.far_field_value()
    }
}
