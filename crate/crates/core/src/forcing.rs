//! External and velocity-dependent forcing: turning-angle ocean drag, Coriolis
//! rotation, the body load `h = τ_atm − m g ∇H + f`, and time-indexed nodal fields.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vector::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    /// Ice mass per unit area, kg m⁻².
    pub m: f64,
    /// Coriolis parameter, s⁻¹.
    pub omega: f64,
    /// Gravitational acceleration, m s⁻².
    pub g: f64,
}

impl PhysParams {
    pub fn new(m: f64, omega: f64, g: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParameter(format!("mass m must be positive, got {m}")));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("omega must be finite, got {omega}")));
        }
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidParameter(format!("gravity g must be positive, got {g}")));
        }
        Ok(Self { m, omega, g })
    }
}

/// `v⊥ = (−v_y, v_x)`.
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// `v_θ = cos θ v + sin θ v⊥`.
pub fn rotate_theta(v: Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    c * v + s * perp(v)
}

/// Quadratic ocean drag `c |U − u| (U − u)_θ`.
pub fn ocean_drag_pointwise(current: Vec2, u: Vec2, c_ocean: f64, theta: f64) -> Vec2 {
    let rel = current - u;
    (c_ocean * rel.norm()) * rotate_theta(rel, theta)
}

/// Pointwise integrand of `⟨G u − G v, u − v⟩ / c_ocean` written in the relative
/// velocities `a = U − u`, `b = U − v`:
/// `cos θ (|a|³ + |b|³) − |a| a_θ·b − |b| b_θ·a`.
pub fn drag_monotone_integrand(a: Vec2, b: Vec2, theta: f64) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    theta.cos() * (na * na * na + nb * nb * nb)
        - na * rotate_theta(a, theta).dot(b)
        - nb * rotate_theta(b, theta).dot(a)
}

/// The same integrand as a polynomial in `α = |a|`, `β = |b|`:
/// `cos θ (α³ + β³ − cos φ αβ(α+β) − tan θ sin φ αβ(α−β))`,
/// with φ the signed angle from `a` to `b`.
pub fn drag_polynomial(alpha: f64, beta: f64, cos_phi: f64, sin_phi: f64, theta: f64) -> f64 {
    let ab = alpha * beta;
    theta.cos()
        * (alpha.powi(3) + beta.powi(3) - cos_phi * ab * (alpha + beta) - theta.tan() * sin_phi * ab * (alpha - beta))
}

/// Discriminant of the rescaled cubic in `S = cos φ`, `T = tan² θ`.
pub fn discriminant_d(s: f64, t: f64) -> f64 {
    let one_m_s2 = 1.0 - s * s;
    one_m_s2 * one_m_s2 * t * t
        + (-2.0 * s * s + 24.0 * s - 18.0) * one_m_s2 * t
        + (s.powi(4) + 8.0 * s.powi(3) + 18.0 * s * s - 27.0)
}

/// Rescaled cubic `p(γ) = γ³ − (S + tan θ sin φ) γ² + (−S + tan θ sin φ) γ + 1`
/// with `sin φ = √(1 − S²)`.
pub fn rescaled_p(gamma: f64, s: f64, theta: f64) -> f64 {
    let tsin = theta.tan() * (1.0 - s * s).max(0.0).sqrt();
    ((gamma - (s + tsin)) * gamma + (tsin - s)) * gamma + 1.0
}

/// Values that can be linearly interpolated between time slices.
pub trait Lerp: Copy {
    fn lerp(a: Self, b: Self, w: f64) -> Self;
}

impl Lerp for f64 {
    fn lerp(a: f64, b: f64, w: f64) -> f64 {
        a + w * (b - a)
    }
}

impl Lerp for Vec2 {
    fn lerp(a: Vec2, b: Vec2, w: f64) -> Vec2 {
        a + w * (b - a)
    }
}

/// A nodal field that is either constant in time or sampled at ascending times
/// and interpolated linearly in between. No extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub enum NodalSeries<T> {
    Steady(Vec<T>),
    Sampled { times: Vec<f64>, slices: Vec<Vec<T>> },
}

impl<T: Lerp> NodalSeries<T> {
    pub fn uniform(value: T, n_nodes: usize) -> Self {
        NodalSeries::Steady(vec![value; n_nodes])
    }

    pub fn sampled(times: Vec<f64>, slices: Vec<Vec<T>>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::InvalidParameter(
                "sampled series needs one slice per time and at least one time".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("times must be strictly ascending".into()));
        }
        let n = slices[0].len();
        if slices.iter().any(|s| s.len() != n) {
            return Err(Error::InvalidParameter("all time slices must have equal length".into()));
        }
        Ok(NodalSeries::Sampled { times, slices })
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            NodalSeries::Steady(v) => v.len(),
            NodalSeries::Sampled { slices, .. } => slices[0].len(),
        }
    }

    pub fn at(&self, t: f64) -> Result<Cow<'_, [T]>> {
        match self {
            NodalSeries::Steady(v) => Ok(Cow::Borrowed(v)),
            NodalSeries::Sampled { times, slices } => {
                let (start, end) = (times[0], *times.last().unwrap());
                let slack = 1e-12 * (end - start).abs().max(start.abs()).max(end.abs()).max(1.0);
                if !(t >= start - slack && t <= end + slack) {
                    return Err(Error::TimeOutOfRange { t, start, end });
                }
                let t = t.clamp(start, end);
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    return Ok(Cow::Borrowed(&slices[0]));
                }
                if k == times.len() || times[k - 1] == t {
                    return Ok(Cow::Borrowed(&slices[k - 1]));
                }
                let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                Ok(Cow::Owned(
                    slices[k - 1]
                        .iter()
                        .zip(&slices[k])
                        .map(|(&a, &b)| T::lerp(a, b, w))
                        .collect(),
                ))
            }
        }
    }

    /// Applies `f` to every nodal value of every slice.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        match self {
            NodalSeries::Steady(v) => NodalSeries::Steady(v.iter().map(|&x| f(x)).collect()),
            NodalSeries::Sampled { times, slices } => NodalSeries::Sampled {
                times: times.clone(),
                slices: slices.iter().map(|s| s.iter().map(|&x| f(x)).collect()).collect(),
            },
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        let slices: Box<dyn Iterator<Item = &Vec<T>>> = match self {
            NodalSeries::Steady(v) => Box::new(std::iter::once(v)),
            NodalSeries::Sampled { slices, .. } => Box::new(slices.iter()),
        };
        slices.flat_map(|s| s.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OceanForcing {
    /// Drag coefficient ρ_w C_w, kg m⁻³.
    pub c_ocean: f64,
    /// Water turning angle in [0, π/4].
    pub theta: f64,
    /// Geostrophic current, m s⁻¹.
    pub current: NodalSeries<Vec2>,
}

impl OceanForcing {
    pub fn new(c_ocean: f64, theta: f64, current: NodalSeries<Vec2>) -> Result<Self> {
        if !(c_ocean.is_finite() && c_ocean >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c_ocean must be nonnegative, got {c_ocean}"
            )));
        }
        if !(0.0..=FRAC_PI_4).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "turning angle theta = {theta} must lie in [0, pi/4] for the drag to be monotone"
            )));
        }
        Ok(Self {
            c_ocean,
            theta,
            current,
        })
    }

    pub fn none(n_nodes: usize) -> Self {
        Self {
            c_ocean: 0.0,
            theta: 0.0,
            current: NodalSeries::uniform(Vec2::ZERO, n_nodes),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyForcing {
    pub tau_atm: NodalSeries<Vec2>,
    /// Sea-surface slope ∇H, ingested directly as a gradient field.
    pub grad_h: NodalSeries<Vec2>,
    pub f_extra: NodalSeries<Vec2>,
}

impl BodyForcing {
    pub fn zero(n_nodes: usize) -> Self {
        let z = NodalSeries::uniform(Vec2::ZERO, n_nodes);
        Self {
            tau_atm: z.clone(),
            grad_h: z.clone(),
            f_extra: z,
        }
    }
}

/// Nodal body load `τ_atm(t) − m g ∇H(t) + f(t)`.
pub fn body_load(t: f64, body: &BodyForcing, phys: &PhysParams) -> Result<Vec<Vec2>> {
    let tau = body.tau_atm.at(t)?;
    let gh = body.grad_h.at(t)?;
    let f = body.f_extra.at(t)?;
    if tau.len() != gh.len() || tau.len() != f.len() {
        return Err(Error::MeshMismatch("body forcing fields differ in node count".into()));
    }
    let mg = phys.m * phys.g;
    Ok(tau
        .iter()
        .zip(gh.iter())
        .zip(f.iter())
        .map(|((&a, &h), &e)| a - mg * h + e)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IceStrengthField {
    pub p: NodalSeries<f64>,
    pub p_floor: f64,
}

impl IceStrengthField {
    pub fn new(p: NodalSeries<f64>, p_floor: f64) -> Result<Self> {
        if !(p_floor.is_finite() && p_floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ice strength floor P_floor must be positive, got {p_floor}"
            )));
        }
        if let Some(bad) = p.values().find(|&&v| !(v >= p_floor) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ice strength {bad} below the floor P_floor = {p_floor}"
            )));
        }
        Ok(Self { p, p_floor })
    }

    /// Spatially and temporally constant strength, which is also its own floor.
    pub fn constant(value: f64, n_nodes: usize) -> Result<Self> {
        Self::new(NodalSeries::uniform(value, n_nodes), value)
    }
}

fn read_series_rows(path: &Path, value_cols: &[&str]) -> Result<BTreeMap<u64, (f64, BTreeMap<usize, Vec<f64>>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::parse(path, e.to_string()))?.clone();
    let expected: Vec<&str> = ["t", "node_id"].iter().chain(value_cols).copied().collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(
            path,
            format!(
                "header must be `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    // keyed by the bit pattern of t so that identical times group together
    let mut out: BTreeMap<u64, (f64, BTreeMap<usize, Vec<f64>>)> = BTreeMap::new();
    let mut last_t = f64::NEG_INFINITY;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let ctx = |msg: String| Error::parse(path, format!("line {}: {msg}", line + 2));
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| ctx(format!("missing column {}", expected[i])))?
                .parse::<f64>()
                .map_err(|e| ctx(format!("column {}: {e}", expected[i])))
        };
        let t = num(0)?;
        if t < last_t {
            return Err(ctx(format!("times must be sorted ascending ({t} after {last_t})")));
        }
        last_t = t;
        let node: usize = rec[1].parse().map_err(|e| ctx(format!("node_id: {e}")))?;
        let vals = (2..expected.len()).map(num).collect::<Result<Vec<_>>>()?;
        let entry = out.entry(t.to_bits()).or_insert_with(|| (t, BTreeMap::new()));
        if entry.1.insert(node, vals).is_some() {
            return Err(ctx(format!("duplicate node {node} at t = {t}")));
        }
    }
    Ok(out)
}

fn assemble_series<T: Lerp>(
    path: &Path,
    rows: BTreeMap<u64, (f64, BTreeMap<usize, Vec<f64>>)>,
    n_nodes: usize,
    make: impl Fn(&[f64]) -> T,
) -> Result<NodalSeries<T>> {
    let mut entries: Vec<_> = rows.into_values().collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    if entries.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }
    let mut times = Vec::with_capacity(entries.len());
    let mut slices = Vec::with_capacity(entries.len());
    for (t, nodes) in entries {
        if nodes.len() != n_nodes || nodes.keys().next_back() != Some(&(n_nodes - 1)) {
            return Err(Error::parse(
                path,
                format!(
                    "time {t}: expected values for node ids 0..{n_nodes}, found {}",
                    nodes.len()
                ),
            ));
        }
        times.push(t);
        slices.push(nodes.values().map(|v| make(v)).collect());
    }
    NodalSeries::sampled(times, slices).map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads a `t,node_id,vx,vy` CSV file into a vector series over `n_nodes` mesh vertices.
pub fn read_vector_series(path: &Path, n_nodes: usize) -> Result<NodalSeries<Vec2>> {
    let rows = read_series_rows(path, &["vx", "vy"])?;
    assemble_series(path, rows, n_nodes, |v| Vec2::new(v[0], v[1]))
}

/// Reads a `t,node_id,val` CSV file into a scalar series.
pub fn read_scalar_series(path: &Path, n_nodes: usize) -> Result<NodalSeries<f64>> {
    let rows = read_series_rows(path, &["val"])?;
    assemble_series(path, rows, n_nodes, |v| v[0])
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
    use std::io::Write;

    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn perp_examples() {
        assert_eq!(perp(Vec2::new(1.0, 0.0)), Vec2::new(0.0, 1.0));
        assert_eq!(perp(Vec2::new(1.0, 2.0)), Vec2::new(-2.0, 1.0));
        assert_eq!(perp(perp(Vec2::new(3.0, 4.0))), Vec2::new(-3.0, -4.0));
        let v = Vec2::new(0.37, -1.9);
        assert_eq!(perp(v).dot(v), 0.0);
    }

    #[test]
    fn rotate_examples() {
        assert_eq!(rotate_theta(Vec2::new(2.5, -1.0), 0.0), Vec2::new(2.5, -1.0));
        let r = rotate_theta(Vec2::new(1.0, 0.0), FRAC_PI_4);
        assert_abs_diff_eq!(r.x, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rotate_theta(Vec2::new(3.0, 4.0), FRAC_PI_4).norm(),
            5.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn drag_examples() {
        let u = Vec2::new(0.3, -0.2);
        assert_eq!(ocean_drag_pointwise(u, u, 5.0, 0.3), Vec2::ZERO);
        assert_eq!(
            ocean_drag_pointwise(Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0), 1.0, 0.0),
            Vec2::new(1.0, 0.0)
        );
        let d = ocean_drag_pointwise(Vec2::new(1.0, 0.0), Vec2::ZERO, 1.0, FRAC_PI_4);
        assert_abs_diff_eq!(d.x, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(d.y, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn monotone_integrand_examples() {
        let a = Vec2::new(0.4, 1.1);
        assert_abs_diff_eq!(drag_monotone_integrand(a, a, 0.5), 0.0, epsilon = 1e-15);
        assert_eq!(
            drag_monotone_integrand(Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), 0.0),
            4.0
        );
        let v = drag_monotone_integrand(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), FRAC_PI_4);
        assert_abs_diff_eq!(v, SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(drag_polynomial(1.0, 1.0, 0.0, 1.0, FRAC_PI_4), SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(discriminant_d(0.0, 1.0), -44.0);
        assert_eq!(discriminant_d(0.0, 0.5), -35.75);
        for t in [0.0, 0.25, 0.5, 1.0, 3.0] {
            assert_eq!(discriminant_d(1.0, t), 0.0);
        }
        // closed form on the T = 1 edge
        for s in [-0.9f64, -0.3, 0.2, 0.7] {
            let edge = 4.0 * s.powi(4) - 16.0 * s.powi(3) + 32.0 * s * s + 24.0 * s - 44.0;
            assert_abs_diff_eq!(discriminant_d(s, 1.0), edge, epsilon = 1e-12);
        }
    }

    #[test]
    fn rescaled_cubic_examples() {
        for (s, th) in [(0.0, 0.0), (0.5, 0.3), (-1.0, FRAC_PI_4)] {
            assert_eq!(rescaled_p(0.0, s, th), 1.0);
        }
        for g in [0.0, 0.5, 1.0, 2.0, 3.7] {
            assert_abs_diff_eq!(
                rescaled_p(g, 1.0, 0.0),
                (g - 1.0) * (g - 1.0) * (g + 1.0),
                epsilon = 1e-12
            );
        }
        assert_eq!(rescaled_p(1.0, 0.0, 0.0), 2.0);
    }

    #[test]
    fn body_load_examples() {
        let phys = PhysParams::new(1.0, 0.0, 1.0).unwrap();
        let mut body = BodyForcing::zero(3);
        assert!(body_load(0.0, &body, &phys).unwrap().iter().all(|&v| v == Vec2::ZERO));
        body.grad_h = NodalSeries::uniform(Vec2::new(0.2, -0.1), 3);
        assert!(body_load(0.0, &body, &phys)
            .unwrap()
            .iter()
            .all(|&v| v == Vec2::new(-0.2, 0.1)));
        let mut body = BodyForcing::zero(3);
        body.tau_atm = NodalSeries::uniform(Vec2::new(1.0, 0.0), 3);
        assert!(body_load(7.0, &body, &phys)
            .unwrap()
            .iter()
            .all(|&v| v == Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn sampled_series_interpolates_and_refuses_extrapolation() {
        let s = NodalSeries::sampled(vec![0.0, 2.0], vec![vec![0.0, 10.0], vec![2.0, 30.0]]).unwrap();
        assert_eq!(&*s.at(1.0).unwrap(), &[1.0, 20.0]);
        assert_eq!(&*s.at(2.0).unwrap(), &[2.0, 30.0]);
        assert!(matches!(s.at(2.5), Err(Error::TimeOutOfRange { .. })));
        assert!(s.at(-0.1).is_err());
        assert!(NodalSeries::sampled(vec![1.0, 0.0], vec![vec![0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn ocean_forcing_rejects_large_turning_angle() {
        let cur = NodalSeries::uniform(Vec2::ZERO, 2);
        assert!(OceanForcing::new(1.0, 1.0, cur.clone()).is_err());
        assert!(OceanForcing::new(1.0, FRAC_PI_4, cur.clone()).is_ok());
        assert!(OceanForcing::new(-1.0, 0.0, cur).is_err());
    }

    #[test]
    fn ice_strength_floor_is_enforced() {
        assert!(IceStrengthField::new(NodalSeries::uniform(1.0, 4), 0.0).is_err());
        assert!(IceStrengthField::new(NodalSeries::uniform(0.5, 4), 1.0).is_err());
        assert!(IceStrengthField::new(NodalSeries::uniform(2.0, 4), 1.0).is_ok());
    }

    #[test]
    fn csv_series_round_trip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "t,node_id,vx,vy").unwrap();
        for t in [0.0, 1.0] {
            for n in 0..3 {
                writeln!(f, "{t},{n},{},{}", t + n as f64, -(n as f64)).unwrap();
            }
        }
        let s = read_vector_series(f.path(), 3).unwrap();
        assert_eq!(s.at(0.5).unwrap()[2], Vec2::new(2.5, -2.0));
        assert!(read_vector_series(f.path(), 4).is_err());
        assert!(read_scalar_series(f.path(), 3).is_err());

        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "t,node_id,val\n1.0,0,3\n0.0,0,4").unwrap();
        assert!(
            read_scalar_series(g.path(), 1).is_err(),
            "unsorted times must be rejected"
        );
    }
}
