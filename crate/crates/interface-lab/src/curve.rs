//! Closed spectral curves in the plane.
//!
//! A `ClosedCurve` is a smooth Jordan curve `z(α) = (x(α), y(α))`,
//! `α ∈ [0, 2π)`, represented by its values at `n` equispaced nodes
//! together with the Fourier spectrum of both coordinates. Derivatives
//! are spectral, so every geometric quantity (frame, curvature, surface
//! operators) converges super-algebraically on analytic curves.
//!
//! Conventions fixed here and relied on everywhere else:
//! * `N₊` is the outward normal of the compact interior `Ω₊`.
//! * The curvature `κ₊` is the variational one: perturbing the curve by
//!   `ε w N₊` changes the perimeter at rate `∫ κ₊ w dS`, so a circle of
//!   radius `R` has `κ₊ = +1/R` and `∫ κ₊ dS = 2π` on every simple curve.
//! * The Sobolev norm of order `s` is `(Σ_m (1+m²)^s |f̂_m|²)^{1/2}` with
//!   `f̂_m` the coefficients in the uniform-arclength parametrization; at
//!   `s = 0` this equals `‖f‖_{L²(S)} / √L` with `L` the perimeter.

use crate::error::{GeometryError, Result, SolverError};
use crate::fft::{self, TrigInterp};
use crate::field::{BoundaryField, FieldKind};
use nalgebra::Vector2;
use once_cell::sync::OnceCell;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Fraction of the local mesh width below which non-adjacent nodes count
/// as a self-intersection.
pub const SIMPLICITY_FRACTION: f64 = 0.5;
/// Trailing-third spectral energy ratio above which a curve is flagged as
/// under-resolved.
pub const RESOLUTION_RATIO: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CurveFrame {
    pub tangent: Vec<Vector2<f64>>,
    pub normal: Vec<Vector2<f64>>,
}

#[derive(Clone, Debug)]
pub struct ClosedCurve {
    n: usize,
    max_mode: usize,
    nodes: Vec<Vector2<f64>>,
    speed: Vec<f64>,
    tangent: Vec<Vector2<f64>>,
    normal: Vec<Vector2<f64>>,
    curvature: Vec<f64>,
    orientation: f64,
    length: f64,
    area: f64,
    resolved: bool,
    interp_x: TrigInterp,
    interp_y: TrigInterp,
    // Canonical retained spectrum (a₀ plus (a_m, b_m) pairs per coordinate),
    // extracted once at construction; serialization and hashing always use
    // this copy so a save/load round trip is bit-exact.
    canon_x: (f64, Vec<(f64, f64)>),
    canon_y: (f64, Vec<(f64, f64)>),
    arclength_map: OnceCell<Vec<f64>>,
}

impl ClosedCurve {
    /// Builds a curve from node positions. The node count must be even and
    /// at least 8; the retained spectrum runs to `M = n/2 - 1`.
    pub fn from_nodes(points: Vec<Vector2<f64>>) -> Result<Self> {
        let n = points.len();
        if n < 8 || n % 2 != 0 {
            return Err(GeometryError::BadNodeCount {
                n,
                reason: "need an even count of at least 8",
            }
            .into());
        }
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.y).collect();

        let dx = fft::derivative(&xs, 1);
        let dy = fft::derivative(&ys, 1);
        let ddx = fft::derivative(&xs, 2);
        let ddy = fft::derivative(&ys, 2);

        let speed: Vec<f64> = dx
            .iter()
            .zip(&dy)
            .map(|(&a, &b)| (a * a + b * b).sqrt())
            .collect();
        let max_speed = speed.iter().cloned().fold(0.0, f64::max);
        let min_speed = speed.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_speed > 1e-10 * max_speed && min_speed.is_finite()) {
            return Err(GeometryError::Degenerate { min_speed }.into());
        }

        // Signed area fixes the orientation; the outward normal and the
        // variational curvature sign follow from it.
        let two_pi_over_n = 2.0 * PI / n as f64;
        let mut area2 = 0.0;
        for j in 0..n {
            area2 += (xs[j] * dy[j] - ys[j] * dx[j]) * two_pi_over_n;
        }
        let orientation = if area2 >= 0.0 { 1.0 } else { -1.0 };
        let area = 0.5 * area2 * orientation;

        let tangent: Vec<Vector2<f64>> = (0..n)
            .map(|j| Vector2::new(dx[j] / speed[j], dy[j] / speed[j]))
            .collect();
        let normal: Vec<Vector2<f64>> = tangent
            .iter()
            .map(|t| Vector2::new(orientation * t.y, -orientation * t.x))
            .collect();
        let curvature: Vec<f64> = (0..n)
            .map(|j| orientation * (dx[j] * ddy[j] - dy[j] * ddx[j]) / speed[j].powi(3))
            .collect();
        let length: f64 = speed.iter().map(|s| s * two_pi_over_n).sum();

        let max_mode = n / 2 - 1;
        let curve = Self {
            n,
            max_mode,
            resolved: Self::resolution_ok(&xs, &ys),
            interp_x: TrigInterp::new(&xs),
            interp_y: TrigInterp::new(&ys),
            canon_x: fft::real_coefficients(&xs, max_mode),
            canon_y: fft::real_coefficients(&ys, max_mode),
            nodes: points,
            speed,
            tangent,
            normal,
            curvature,
            orientation,
            length,
            area,
            arclength_map: OnceCell::new(),
        };
        curve.check_simplicity()?;
        Ok(curve)
    }

    /// Builds the curve from real Fourier coefficients of both coordinates,
    /// sampled at `n_nodes` nodes. Requires `n_nodes ≥ 2M + 2`.
    pub fn from_spectrum(
        x: (f64, &[(f64, f64)]),
        y: (f64, &[(f64, f64)]),
        n_nodes: usize,
    ) -> Result<Self> {
        let max_mode = x.1.len().max(y.1.len());
        if n_nodes < 2 * max_mode + 2 {
            return Err(GeometryError::BadNodeCount {
                n: n_nodes,
                reason: "need n_nodes >= 2*M + 2 for the requested spectrum",
            }
            .into());
        }
        let xs = fft::sample_real_coefficients(x.0, x.1, n_nodes);
        let ys = fft::sample_real_coefficients(y.0, y.1, n_nodes);
        let mut curve = Self::from_nodes(
            xs.into_iter()
                .zip(ys)
                .map(|(a, b)| Vector2::new(a, b))
                .collect(),
        )?;
        // Keep the caller's coefficients verbatim (zero-padded) so that
        // serialize → parse → serialize is the identity on the text.
        let pad = |(a0, pairs): (f64, &[(f64, f64)])| {
            let mut p = pairs.to_vec();
            p.resize(curve.max_mode, (0.0, 0.0));
            (a0, p)
        };
        curve.canon_x = pad(x);
        curve.canon_y = pad(y);
        Ok(curve)
    }

    pub fn circle(center: Vector2<f64>, radius: f64, n: usize) -> Self {
        let pts = alphas(n)
            .iter()
            .map(|&a| center + radius * Vector2::new(a.cos(), a.sin()))
            .collect();
        Self::from_nodes(pts).expect("circle preset is always valid")
    }

    pub fn ellipse(center: Vector2<f64>, a: f64, b: f64, n: usize) -> Self {
        let pts = alphas(n)
            .iter()
            .map(|&t| center + Vector2::new(a * t.cos(), b * t.sin()))
            .collect();
        Self::from_nodes(pts).expect("ellipse preset is always valid")
    }

    /// Circle of radius `r` with a single radial cosine ripple
    /// `r (1 + eps cos(m θ))`.
    pub fn perturbed_circle(radius: f64, eps: f64, mode: usize, n: usize) -> Result<Self> {
        let pts = alphas(n)
            .iter()
            .map(|&t| {
                let r = radius * (1.0 + eps * (mode as f64 * t).cos());
                Vector2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        Self::from_nodes(pts)
    }

    fn resolution_ok(xs: &[f64], ys: &[f64]) -> bool {
        let n = xs.len();
        let cx = fft::forward(xs);
        let cy = fft::forward(ys);
        let cutoff = (n / 3) as i64;
        let mut tail = 0.0;
        let mut total = 0.0;
        for k in 1..n {
            let m = fft::wavenumber(k, n).abs();
            let e = cx[k].norm_sqr() + cy[k].norm_sqr();
            total += e;
            if m > cutoff {
                tail += e;
            }
        }
        total == 0.0 || tail <= RESOLUTION_RATIO * total
    }

    fn check_simplicity(&self) -> Result<()> {
        let n = self.n;
        let h: Vec<f64> = self.speed.iter().map(|s| s * 2.0 * PI / n as f64).collect();
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue; // adjacent through the seam
                }
                let limit = SIMPLICITY_FRACTION * h[i].max(h[j]);
                let d = (self.nodes[i] - self.nodes[j]).norm();
                if d < limit {
                    return Err(GeometryError::SelfIntersection {
                        i,
                        j,
                        distance: d,
                        limit,
                    }
                    .into());
                }
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    pub fn is_resolved(&self) -> bool {
        self.resolved
    }

    pub fn nodes(&self) -> &[Vector2<f64>] {
        &self.nodes
    }

    pub fn alphas(&self) -> Vec<f64> {
        alphas(self.n)
    }

    pub fn speed(&self) -> &[f64] {
        &self.speed
    }

    /// Orientation of the stored parametrization: `+1` counterclockwise.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Area enclosed by the curve (always positive).
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn frame(&self) -> CurveFrame {
        CurveFrame {
            tangent: self.tangent.clone(),
            normal: self.normal.clone(),
        }
    }

    pub fn tangent(&self) -> &[Vector2<f64>] {
        &self.tangent
    }

    /// Outward normal of the interior domain at each node.
    pub fn outward_normal(&self) -> &[Vector2<f64>] {
        &self.normal
    }

    pub fn curvature(&self) -> BoundaryField {
        let mut f = BoundaryField::scalar(self.curvature.clone());
        f.set_resolution_warning(!self.resolved);
        f
    }

    pub fn curvature_values(&self) -> &[f64] {
        &self.curvature
    }

    /// Quadrature weights for `∫ · dS` at the collocation nodes.
    pub fn ds_weights(&self) -> Vec<f64> {
        let h = 2.0 * PI / self.n as f64;
        self.speed.iter().map(|s| s * h).collect()
    }

    pub fn surface_integral(&self, f: &BoundaryField) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        f.as_slice()
            .iter()
            .zip(&self.speed)
            .map(|(v, s)| v * s * h)
            .sum()
    }

    /// `∫ f g dS` over the curve.
    pub fn inner_product(&self, f: &BoundaryField, g: &BoundaryField) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        f.as_slice()
            .iter()
            .zip(g.as_slice())
            .zip(&self.speed)
            .map(|((a, b), s)| a * b * s * h)
            .sum()
    }

    pub fn l2_norm(&self, f: &BoundaryField) -> f64 {
        self.inner_product(f, f).sqrt()
    }

    /// Mean value `∫ f dS / L`.
    pub fn mean(&self, f: &BoundaryField) -> f64 {
        self.surface_integral(f) / self.length
    }

    /// Subtracts the dS-mean and sets the mean-zero flag.
    pub fn project_mean_zero(&self, f: &BoundaryField) -> BoundaryField {
        let m = self.mean(f);
        let mut out = f.map(|v| v - m);
        out.set_mean_zero(true);
        out
    }

    /// Verifies `|∫ f dS| < 1e-12 ‖f‖` and returns the flagged field.
    pub fn mark_mean_zero(&self, f: &BoundaryField) -> Result<BoundaryField> {
        let defect = self.surface_integral(f).abs();
        let limit = 1e-12 * self.l2_norm(f).max(f64::MIN_POSITIVE);
        if defect > limit {
            return Err(SolverError::NotMeanZero { defect, limit }.into());
        }
        let mut out = f.clone();
        out.set_mean_zero(true);
        Ok(out)
    }

    /// Derivative along arclength, `df/ds = (1/|z'|) df/dα`.
    pub fn arclength_derivative(&self, f: &BoundaryField) -> BoundaryField {
        let df = fft::derivative(f.as_slice(), 1);
        BoundaryField::new(
            df.iter().zip(&self.speed).map(|(v, s)| v / s).collect(),
            f.kind(),
        )
    }

    /// Surface divergence of a tangent field `g·τ`, which in 2D is `dg/ds`.
    pub fn surface_divergence(&self, f: &BoundaryField) -> Result<BoundaryField> {
        f.expect_kind(FieldKind::TangentVector)?;
        let mut out = self
            .arclength_derivative(&f.reinterpret(FieldKind::Scalar))
            .reinterpret(FieldKind::Scalar);
        out.set_mean_zero(true);
        Ok(out)
    }

    /// Surface Laplacian `Δ_S f = d²f/ds²` in the factored form
    /// `(1/|z'|) ∂_α ((1/|z'|) ∂_α f)`, which is exactly self-adjoint and
    /// negative semidefinite in the discrete dS inner product.
    pub fn surface_laplacian(&self, f: &BoundaryField) -> BoundaryField {
        let df = fft::derivative(f.as_slice(), 1);
        let inner: Vec<f64> = df.iter().zip(&self.speed).map(|(v, s)| v / s).collect();
        let ddf = fft::derivative(&inner, 1);
        let mut out = BoundaryField::new(
            ddf.iter().zip(&self.speed).map(|(v, s)| v / s).collect(),
            f.kind(),
        );
        out.set_mean_zero(true);
        out.set_resolution_warning(!self.resolved || f.resolution_warning());
        out
    }

    /// Dense matrix of `-Δ_S` on nodal values.
    pub fn minus_surface_laplacian_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n;
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.surface_laplacian(&BoundaryField::scalar(e));
            for i in 0..n {
                m[(i, j)] = -col.as_slice()[i];
            }
        }
        m
    }

    /// Node values of the map `θ ↦ α` where `θ` is normalized arclength
    /// `2π s / L`; computed once per curve by Newton on the spectral
    /// arclength function.
    fn alpha_at_uniform_arclength(&self) -> &[f64] {
        self.arclength_map.get_or_init(|| {
            let (mean_speed, periodic) = fft::antiderivative(&self.speed);
            let p = TrigInterp::new(&periodic);
            let p0 = p.eval(0.0);
            // s(α) = mean_speed·α + P(α) - P(0); solve s(α_k) = k L / n.
            let n = self.n;
            let mut out = Vec::with_capacity(n);
            let mut alpha = 0.0;
            for k in 0..n {
                let target = self.length * k as f64 / n as f64;
                for _ in 0..50 {
                    let s = mean_speed * alpha + p.eval(alpha) - p0;
                    let ds = mean_speed + p.eval_deriv(alpha, 1);
                    let step = (s - target) / ds;
                    alpha -= step;
                    if step.abs() < 1e-14 {
                        break;
                    }
                }
                out.push(alpha);
                alpha += 2.0 * PI / n as f64;
            }
            out
        })
    }

    /// Resamples a scalar field to the uniform-arclength grid.
    pub fn to_arclength_grid(&self, f: &BoundaryField) -> Vec<f64> {
        let interp = TrigInterp::new(f.as_slice());
        self.alpha_at_uniform_arclength()
            .iter()
            .map(|&a| interp.eval(a))
            .collect()
    }

    /// Sobolev norm of order `s ∈ [-4, 8]` in the arclength Fourier basis:
    /// `(Σ_m (1+m²)^s |f̂_m|²)^{1/2}`.
    ///
    /// High positive orders weight the unresolved tail steeply; callers
    /// should heed the field's resolution warning before trusting orders
    /// much above the decay rate of the data.
    pub fn sobolev_norm(&self, f: &BoundaryField, s: f64) -> f64 {
        assert!(
            (-4.0..=8.0).contains(&s),
            "sobolev order {s} outside supported range [-4, 8]"
        );
        let g = self.to_arclength_grid(f);
        let coeffs = fft::forward(&g);
        let n = g.len();
        let mut acc = 0.0;
        for (k, c) in coeffs.iter().enumerate() {
            let m = fft::wavenumber(k, n) as f64;
            acc += (1.0 + m * m).powf(s) * c.norm_sqr();
        }
        acc.sqrt()
    }

    /// Position at an arbitrary parameter value.
    pub fn point_at(&self, alpha: f64) -> Vector2<f64> {
        Vector2::new(self.interp_x.eval(alpha), self.interp_y.eval(alpha))
    }

    pub fn derivative_at(&self, alpha: f64) -> Vector2<f64> {
        Vector2::new(
            self.interp_x.eval_deriv(alpha, 1),
            self.interp_y.eval_deriv(alpha, 1),
        )
    }

    /// Resamples the curve at new parameter values (a reparametrization:
    /// the image is unchanged up to interpolation accuracy).
    pub fn resample_at(&self, new_alphas: &[f64]) -> Result<Self> {
        Self::from_nodes(new_alphas.iter().map(|&a| self.point_at(a)).collect())
    }

    /// Returns the same geometric curve parametrized by uniform arclength.
    pub fn resample_uniform_arclength(&self) -> Result<Self> {
        let alphas = self.alpha_at_uniform_arclength().to_vec();
        self.resample_at(&alphas)
    }

    /// Re-samples onto a different node count by spectral interpolation.
    pub fn with_node_count(&self, n_new: usize) -> Result<Self> {
        let pts = alphas(n_new).iter().map(|&a| self.point_at(a)).collect();
        Self::from_nodes(pts)
    }

    /// Maximum node-wise deviation of `s_α` from the uniform value `L/2π`.
    pub fn arclength_spacing_defect(&self) -> f64 {
        let target = self.length / (2.0 * PI);
        self.speed
            .iter()
            .fold(0.0f64, |m, &s| m.max((s - target).abs()))
            / target
    }

    /// Residual of the 2D reduction of the Simons-type identity for the
    /// second fundamental form. On a curve the tangent space is a line, so
    /// `Π = κ τ⊗τ` acts as the scalar `κ`, `|Π|² = κ²`, and the assembled
    /// combination `-Δ_S Π + 𝒟²κ - (|Π|² I - κ Π) Π` collapses to `0 = 0`.
    /// The witness assembles each term honestly (`Δ_S` in factored form,
    /// `𝒟²` as two arclength derivatives, the cubic term from the tensor
    /// contractions) and returns the max-norm of the sum, which should be
    /// pure roundoff.
    pub fn simons_residual(&self) -> f64 {
        let kappa = self.curvature();
        let lap = self.surface_laplacian(&kappa);
        let d2 = self.arclength_derivative(&self.arclength_derivative(&kappa));
        let n = self.n;
        let scale = self
            .curvature
            .iter()
            .fold(1.0f64, |m, &k| m.max(k.abs()))
            .powi(3)
            .max(lap.max_abs());
        let mut max = 0.0f64;
        for j in 0..n {
            let k = self.curvature[j];
            let pi_sq = k * k; // |Π|² with Π = κ τ⊗τ
            let cubic = (pi_sq - k * k) * k; // (|Π|² I - κΠ)Π on the tangent line
            let r = -lap.as_slice()[j] + d2.as_slice()[j] - cubic;
            max = max.max(r.abs());
        }
        max / scale
    }

    /// Stable 64-bit hash of the retained spectrum (used as a cache key).
    pub fn spectrum_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u64(self.n as u64);
        h.write_u64(self.max_mode as u64);
        for (a0, pairs) in [&self.canon_x, &self.canon_y] {
            h.write_f64(*a0);
            for (a, b) in pairs {
                h.write_f64(*a);
                h.write_f64(*b);
            }
        }
        h.finish()
    }

    /// Serializes to the `curve-spec v1` plain-text format: a header line,
    /// the retained mode count `M`, then `2(2M+1)` coefficient lines
    /// (`a₀, a₁, b₁, …` for x, then the same block for y).
    pub fn to_curve_spec(&self) -> String {
        let mut out = String::new();
        writeln!(out, "curve-spec v1").unwrap();
        writeln!(out, "{}", self.max_mode).unwrap();
        for (a0, pairs) in [&self.canon_x, &self.canon_y] {
            writeln!(out, "{a0}").unwrap();
            for (a, b) in pairs {
                writeln!(out, "{a}").unwrap();
                writeln!(out, "{b}").unwrap();
            }
        }
        out
    }

    /// Parses the `curve-spec v1` format, sampling at `n_nodes` if given
    /// (defaults to the smallest even count holding the spectrum).
    pub fn from_curve_spec(text: &str, n_nodes: Option<usize>) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header.trim() != "curve-spec v1" {
            return Err(GeometryError::BadFormat(format!(
                "expected header `curve-spec v1`, found `{header}`"
            ))
            .into());
        }
        let m: usize = lines
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| GeometryError::BadFormat(format!("bad mode count: {e}")))?;
        let mut values = Vec::with_capacity(2 * (2 * m + 1));
        for line in lines {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: f64 = t
                .parse()
                .map_err(|e| GeometryError::BadFormat(format!("bad coefficient `{t}`: {e}")))?;
            if !v.is_finite() {
                return Err(
                    GeometryError::BadFormat(format!("non-finite coefficient `{t}`")).into(),
                );
            }
            values.push(v);
        }
        if values.len() != 2 * (2 * m + 1) {
            return Err(GeometryError::BadFormat(format!(
                "expected {} coefficients for M = {m}, found {}",
                2 * (2 * m + 1),
                values.len()
            ))
            .into());
        }
        let n = n_nodes.unwrap_or(2 * m + 2);
        let (xblock, yblock) = values.split_at(2 * m + 1);
        let unpack = |block: &[f64]| {
            let a0 = block[0];
            let pairs: Vec<(f64, f64)> =
                block[1..].chunks(2).map(|c| (c[0], c[1])).collect();
            (a0, pairs)
        };
        let (ax0, axm) = unpack(xblock);
        let (ay0, aym) = unpack(yblock);
        Self::from_spectrum((ax0, &axm), (ay0, &aym), n)
    }
}

pub fn alphas(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }
    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BoundaryField;

    #[test]
    fn circle_geometry_is_exact() {
        let r = 1.7;
        let c = ClosedCurve::circle(Vector2::new(0.3, -0.2), r, 64);
        assert!((c.length() - 2.0 * PI * r).abs() < 1e-10 * r);
        assert!((c.area() - PI * r * r).abs() < 1e-10);
        for &k in c.curvature_values() {
            assert!((k - 1.0 / r).abs() < 1e-11);
        }
        for (j, nrm) in c.outward_normal().iter().enumerate() {
            let p = c.nodes()[j] - Vector2::new(0.3, -0.2);
            let radial = p / p.norm();
            assert!((nrm - radial).norm() < 1e-11);
        }
    }

    #[test]
    fn ellipse_curvature_matches_closed_form() {
        // For z = (a cos t, b sin t) the curvature is
        // a b / (a² sin² t + b² cos² t)^{3/2}.
        let (a, b) = (2.0, 1.0);
        let c = ClosedCurve::ellipse(Vector2::zeros(), a, b, 128);
        for (j, &t) in c.alphas().iter().enumerate() {
            let expect = a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5);
            let got = c.curvature_values()[j];
            assert!(
                (got - expect).abs() < 1e-10 * expect,
                "t={t}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn clockwise_parametrization_keeps_outward_normal() {
        let n = 64;
        let pts: Vec<Vector2<f64>> = alphas(n)
            .iter()
            .map(|&a| Vector2::new(a.cos(), -a.sin()))
            .collect();
        let c = ClosedCurve::from_nodes(pts).unwrap();
        assert_eq!(c.orientation(), -1.0);
        for (j, nrm) in c.outward_normal().iter().enumerate() {
            let radial = c.nodes()[j] / c.nodes()[j].norm();
            assert!((nrm - radial).norm() < 1e-11);
        }
        for &k in c.curvature_values() {
            assert!((k - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn gauss_bonnet_on_wavy_curve() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.15, 5, 128).unwrap();
        let total = c.surface_integral(&c.curvature());
        assert!((total - 2.0 * PI).abs() < 1e-8, "got {total}");
    }

    #[test]
    fn geometry_is_parametrization_invariant() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.1, 3, 128).unwrap();
        // Smooth orientation-preserving reparametrization.
        let new_alphas: Vec<f64> = alphas(128)
            .iter()
            .map(|&a| a + 0.2 * a.sin() - 0.07 * (2.0 * a).cos())
            .collect();
        let c2 = c.resample_at(&new_alphas).unwrap();
        assert!((c.length() - c2.length()).abs() < 1e-8 * c.length());
        assert!((c.area() - c2.area()).abs() < 1e-8 * c.area());
        // Compare curvature as a function of position, not node index.
        for (j, &a) in c2.alphas().iter().enumerate() {
            let p = c2.nodes()[j];
            let theta = p.y.atan2(p.x);
            let r = p.norm();
            let _ = (a, theta, r);
        }
        let total = c2.surface_integral(&c2.curvature());
        assert!((total - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn self_intersecting_curve_is_rejected() {
        let n = 64;
        // Figure-eight-like: large mode-2 radial ripple pinches the curve.
        let pts: Vec<Vector2<f64>> = alphas(n)
            .iter()
            .map(|&t| {
                let r = 1.0 + 0.999 * (2.0 * t).cos();
                Vector2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        match ClosedCurve::from_nodes(pts) {
            Err(crate::error::Error::Geometry(GeometryError::SelfIntersection { .. })) => {}
            other => panic!("expected self-intersection, got {other:?}"),
        }
    }

    #[test]
    fn surface_laplacian_is_self_adjoint_and_negative() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.12, 4, 96).unwrap();
        let w = c.ds_weights();
        let minus_lap = c.minus_surface_laplacian_matrix();
        let n = c.n_nodes();
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let wij = w[i] * minus_lap[(i, j)];
                let wji = w[j] * minus_lap[(j, i)];
                defect = defect.max((wij - wji).abs());
                scale = scale.max(wij.abs());
            }
        }
        assert!(defect / scale < 1e-10, "symmetry defect {}", defect / scale);

        // Negative semidefinite: quadratic form of Δ_S on random data.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bf = BoundaryField::scalar(f);
            let lap = c.surface_laplacian(&bf);
            let q = c.inner_product(&bf, &lap);
            assert!(q < 1e-8 * c.l2_norm(&bf).powi(2).max(1.0), "q = {q}");
        }
    }

    #[test]
    fn surface_laplacian_matches_arclength_second_derivative() {
        // On a circle of radius R, Δ_S cos(mθ) = -(m/R)² cos(mθ).
        let r = 2.0;
        let c = ClosedCurve::circle(Vector2::zeros(), r, 64);
        let f = BoundaryField::scalar(c.alphas().iter().map(|&a| (3.0 * a).cos()).collect());
        let lap = c.surface_laplacian(&f);
        for (j, &a) in c.alphas().iter().enumerate() {
            let expect = -(3.0f64 / r).powi(2) * (3.0 * a).cos();
            assert!((lap.as_slice()[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn sobolev_norm_closed_forms() {
        let c = ClosedCurve::circle(Vector2::zeros(), 1.0, 64);
        let f = BoundaryField::scalar(c.alphas().iter().map(|&a| a.cos()).collect());
        // Single mode m = 1, coefficients ±1/2: Σ (1+m²)^s |c_m|² = 2^s · 1/2 · 2.
        let h1 = c.sobolev_norm(&f, 1.0);
        assert!((h1 - 1.0).abs() < 1e-12, "H1 norm {h1}");
        let l2 = c.sobolev_norm(&f, 0.0);
        assert!((l2 - (0.5f64).sqrt()).abs() < 1e-12);
        // s = 0 matches L²/√L.
        let direct = c.l2_norm(&f) / c.length().sqrt();
        assert!((l2 - direct).abs() < 1e-12);
        let hm1 = c.sobolev_norm(&f, -1.0);
        assert!((hm1 - (0.25f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sobolev_norm_is_monotone_in_order() {
        let c = ClosedCurve::perturbed_circle(1.0, 0.1, 3, 96).unwrap();
        let f = BoundaryField::scalar(
            c.alphas()
                .iter()
                .map(|&a| (2.0 * a).sin() + 0.3 * (5.0 * a).cos())
                .collect(),
        );
        let mut last = 0.0;
        for i in 0..=12 {
            let s = -2.0 + i as f64 * 0.5;
            let v = c.sobolev_norm(&f, s);
            assert!(v >= last, "norm must grow with s: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn uniform_arclength_resampling() {
        // n = 256 keeps the aliasing error of the composed map z(α(t))
        // for the 2:1 ellipse far below the tolerance.
        let c = ClosedCurve::ellipse(Vector2::zeros(), 2.0, 1.0, 256);
        assert!(c.arclength_spacing_defect() > 0.1);
        let u = c.resample_uniform_arclength().unwrap();
        assert!(u.arclength_spacing_defect() < 1e-10);
        assert!((u.length() - c.length()).abs() < 1e-9 * c.length());
        assert!((u.area() - c.area()).abs() < 1e-9 * c.area());
    }

    #[test]
    fn curve_spec_round_trip_is_exact() {
        let c = ClosedCurve::perturbed_circle(1.3, 0.08, 4, 64).unwrap();
        let text = c.to_curve_spec();
        assert!(text.starts_with("curve-spec v1\n31\n"));
        let back = ClosedCurve::from_curve_spec(&text, Some(64)).unwrap();
        for (p, q) in c.nodes().iter().zip(back.nodes()) {
            assert!((p - q).norm() < 1e-13);
        }
        assert_eq!(c.spectrum_hash(), back.spectrum_hash());
    }

    #[test]
    fn curve_spec_rejects_bad_input() {
        assert!(ClosedCurve::from_curve_spec("curve-spec v2\n1\n", None).is_err());
        assert!(ClosedCurve::from_curve_spec("curve-spec v1\n2\n1\n0\n0\n", None).is_err());
        let nan = "curve-spec v1\n0\nNaN\n0\n";
        assert!(ClosedCurve::from_curve_spec(nan, None).is_err());
    }

    #[test]
    fn under_resolved_curve_is_flagged() {
        // A sharp radial ripple at the grid limit leaves energy in the tail.
        let n = 32;
        let pts: Vec<Vector2<f64>> = alphas(n)
            .iter()
            .map(|&t| {
                let r = 1.0 + 0.05 * (13.0 * t).cos();
                Vector2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let c = ClosedCurve::from_nodes(pts).unwrap();
        assert!(!c.is_resolved());
        assert!(c.curvature().resolution_warning());
        let fine = c.with_node_count(128).unwrap();
        assert!(fine.is_resolved());
    }

    #[test]
    fn simons_identity_collapses_in_2d() {
        for curve in [
            ClosedCurve::circle(Vector2::zeros(), 1.0, 64),
            ClosedCurve::ellipse(Vector2::zeros(), 2.0, 1.0, 128),
            ClosedCurve::perturbed_circle(1.0, 0.2, 3, 128).unwrap(),
        ] {
            let r = curve.simons_residual();
            assert!(r < 1e-11, "residual {r} should be roundoff only");
        }
    }
}
