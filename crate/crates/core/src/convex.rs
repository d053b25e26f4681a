//! Convex sets with exact metric projections.
//!
//! Besides the basic sets (half-spaces, balls, boxes) this module builds the
//! three half-spaces the hybrid method needs at every iteration and projects
//! onto the intersection of two of them in closed form.

use crate::error::{invalid, Error, Result};
use crate::hilbert::Vector;

/// Relative tolerance for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Relative distance tolerance for the feasibility checks inside [`project_two_halfspaces`].
const PROJECTION_TOL: f64 = 1e-13;
/// Relative threshold below which a half-space normal counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// `{v : <normal, v> <= offset}` with a nonzero normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
    normal_sq: f64,
}

impl HalfSpace {
    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `<normal, x> - offset`; positive outside.
    pub fn violation(&self, x: &Vector) -> f64 {
        self.normal.inner_unchecked(x) - self.offset
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.holds(x, MEMBERSHIP_TOL)
    }

    /// Membership up to a distance of `rel * (1 + ||x||)` from the boundary.
    fn holds(&self, x: &Vector, rel: f64) -> bool {
        self.violation(x) <= rel * self.normal_sq.sqrt() * (1.0 + x.norm())
    }

    fn project(&self, x: &Vector) -> Vector {
        let v = self.violation(x);
        if v <= 0.0 {
            x.clone()
        } else {
            Vector::combine_unchecked(1.0, x, -v / self.normal_sq, &self.normal)
        }
    }
}

/// Closed ball `{v : ||v - center|| <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vector,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Coordinate box `lower <= v <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vector,
    upper: Vector,
}

impl BoxSet {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        lower.space().check(&upper.space())?;
        if let Some(k) = (0..lower.len()).find(|&k| lower.coords()[k] > upper.coords()[k]) {
            return Err(invalid(format!("box bound {k}: lower exceeds upper")));
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }
}

/// A closed convex set with an exact projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    HalfSpace(HalfSpace),
    Ball(Ball),
    Box(BoxSet),
    WholeSpace,
    /// Only produced by a degenerate half-space with a negative offset.
    Empty,
}

impl ConvexSet {
    /// `{v : <normal, v> <= offset}`, degrading to [`ConvexSet::WholeSpace`] or
    /// [`ConvexSet::Empty`] when `||normal|| <= 1e-14 * scale`. An offset
    /// within `2e-14 * scale²` of zero counts as nonnegative in that case.
    pub fn half_space_scaled(normal: Vector, offset: f64, scale: f64) -> ConvexSet {
        let normal_sq = normal.norm_sq();
        if normal_sq.sqrt() <= DEGENERACY_TOL * scale {
            if offset >= -2.0 * DEGENERACY_TOL * scale * scale {
                ConvexSet::WholeSpace
            } else {
                ConvexSet::Empty
            }
        } else {
            ConvexSet::HalfSpace(HalfSpace {
                normal,
                offset,
                normal_sq,
            })
        }
    }

    pub fn half_space(normal: Vector, offset: f64) -> ConvexSet {
        Self::half_space_scaled(normal, offset, 1.0)
    }

    pub fn ball(center: Vector, radius: f64) -> Result<ConvexSet> {
        Ok(ConvexSet::Ball(Ball::new(center, radius)?))
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<ConvexSet> {
        Ok(ConvexSet::Box(BoxSet::new(lower, upper)?))
    }

    pub fn as_half_space(&self) -> Option<&HalfSpace> {
        match self {
            ConvexSet::HalfSpace(h) => Some(h),
            _ => None,
        }
    }

    fn check_space(&self, x: &Vector) -> Result<()> {
        match self {
            ConvexSet::HalfSpace(h) => h.normal.space().check(&x.space()),
            ConvexSet::Ball(b) => b.center.space().check(&x.space()),
            ConvexSet::Box(b) => b.lower.space().check(&x.space()),
            ConvexSet::WholeSpace | ConvexSet::Empty => Ok(()),
        }
    }

    /// Membership with relative tolerance `1e-9`.
    pub fn contains(&self, x: &Vector) -> Result<bool> {
        self.check_space(x)?;
        Ok(match self {
            ConvexSet::HalfSpace(h) => h.contains(x),
            ConvexSet::Ball(b) => {
                let d = Vector::combine_unchecked(1.0, x, -1.0, &b.center).norm();
                d <= b.radius * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL
            }
            ConvexSet::Box(b) => x.coords().iter().enumerate().all(|(k, &c)| {
                let (lo, hi) = (b.lower.coords()[k], b.upper.coords()[k]);
                c >= lo - MEMBERSHIP_TOL * (1.0 + lo.abs()) && c <= hi + MEMBERSHIP_TOL * (1.0 + hi.abs())
            }),
            ConvexSet::WholeSpace => true,
            ConvexSet::Empty => false,
        })
    }

    /// Metric projection `P_set(x)`.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.check_space(x)?;
        Ok(match self {
            ConvexSet::HalfSpace(h) => h.project(x),
            ConvexSet::Ball(b) => {
                let diff = Vector::combine_unchecked(1.0, x, -1.0, &b.center);
                let d = diff.norm();
                if d <= b.radius {
                    x.clone()
                } else {
                    Vector::combine_unchecked(1.0, &b.center, b.radius / d, &diff)
                }
            }
            ConvexSet::Box(b) => {
                let coords = x
                    .coords()
                    .iter()
                    .zip(b.lower.coords().iter().zip(b.upper.coords()))
                    .map(|(&c, (&lo, &hi))| c.clamp(lo, hi))
                    .collect();
                Vector::from_parts(x.space(), coords)
            }
            ConvexSet::WholeSpace => x.clone(),
            ConvexSet::Empty => return Err(Error::Infeasible("projection onto the empty set".into())),
        })
    }
}

/// The half-space `T = {v : <(x - lambda*Ax) - y, v - y> <= 0}` of the
/// subextragradient step, where `y = P_K(x - lambda*Ax)`.
///
/// `K` is contained in `T`; the set is the whole space iff `x - lambda*Ax` lies in `K`.
pub fn build_t(x: &Vector, lambda: f64, ax: &Vector, y: &Vector) -> Result<ConvexSet> {
    let shifted = x.axpy(-lambda, ax)?;
    let normal = shifted.sub(y)?;
    let offset = normal.inner_unchecked(y);
    let scale = 1.0 + shifted.norm() + y.norm();
    Ok(ConvexSet::half_space_scaled(normal, offset, scale))
}

/// `C = {v : ||u_bar - v||^2 <= ||x - v||^2 + eps}` written as
/// `<2(x - u_bar), v> <= ||x||^2 - ||u_bar||^2 + eps`.
pub fn build_c(x: &Vector, u_bar: &Vector, eps: f64) -> Result<ConvexSet> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps must be nonnegative, got {eps}")));
    }
    let diff = x.sub(u_bar)?;
    // <x - u, x + u> avoids cancellation when u is close to x
    let offset = diff.inner_unchecked(&x.add(u_bar)?) + eps;
    let normal = diff.scale(2.0);
    let scale = 1.0 + x.norm() + u_bar.norm();
    Ok(ConvexSet::half_space_scaled(normal, offset, scale))
}

/// `Q = {v : <v - x, x - x0> >= 0}` written as `<x0 - x, v> <= <x0 - x, x>`.
pub fn build_q(x0: &Vector, x: &Vector) -> Result<ConvexSet> {
    let normal = x0.sub(x)?;
    let offset = normal.inner_unchecked(x);
    let scale = 1.0 + x0.norm() + x.norm();
    Ok(ConvexSet::half_space_scaled(normal, offset, scale))
}

/// Exact projection of `x` onto the intersection of two half-spaces (either
/// of which may be the whole space).
///
/// Candidates are tried cheapest first: `x` itself, the single projections,
/// and finally the projection onto the intersection of both boundary
/// hyperplanes via the 2x2 Gram system. The feasible candidate closest to `x`
/// wins; ties favor the earlier candidate.
pub fn project_two_halfspaces(x: &Vector, first: &ConvexSet, second: &ConvexSet) -> Result<Vector> {
    for set in [first, second] {
        match set {
            ConvexSet::HalfSpace(_) | ConvexSet::WholeSpace => set.check_space(x)?,
            ConvexSet::Empty => return Err(Error::Infeasible("half-space intersection is empty".into())),
            _ => return Err(invalid("project_two_halfspaces expects half-spaces")),
        }
    }
    let (h1, h2) = match (first.as_half_space(), second.as_half_space()) {
        (None, None) => return Ok(x.clone()),
        (Some(h), None) | (None, Some(h)) => return Ok(h.project(x)),
        (Some(h1), Some(h2)) => (h1, h2),
    };

    let inside1 = h1.holds(x, PROJECTION_TOL);
    let inside2 = h2.holds(x, PROJECTION_TOL);
    if inside1 && inside2 {
        return Ok(x.clone());
    }

    let mut best: Option<(f64, Vector)> = None;
    // (relative violation of the other constraint, candidate)
    let mut nearest: Option<(f64, Vector)> = None;
    for (active, other, inside) in [(h1, h2, inside1), (h2, h1, inside2)] {
        if inside {
            continue;
        }
        let p = active.project(x);
        if other.holds(&p, PROJECTION_TOL) {
            let d = Vector::combine_unchecked(1.0, &p, -1.0, x).norm_sq();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, p));
            }
        } else {
            let v = other.violation(&p) / (other.normal_sq.sqrt() * (1.0 + p.norm()));
            if nearest.as_ref().is_none_or(|(bv, _)| v < *bv) {
                nearest = Some((v, p));
            }
        }
    }
    if let Some((_, p)) = best {
        return Ok(p);
    }

    // Both constraints active. Orthogonalize a2 against a1 so that nearly
    // parallel normals lose accuracy like 1/sin(angle), not 1/sin(angle)^2.
    let n1 = h1.normal_sq.sqrt();
    let u1 = h1.normal.scale(1.0 / n1);
    let c = u1.inner_unchecked(&h2.normal);
    let w = Vector::combine_unchecked(1.0, &h2.normal, -c, &u1);
    let wn = w.norm();
    if wn <= 1e-7 * h2.normal_sq.sqrt() {
        // nearly parallel normals: accept a single projection that misses
        // the other constraint only by roundoff
        return match nearest {
            Some((v, p)) if v <= MEMBERSHIP_TOL => Ok(p),
            _ => Err(Error::Infeasible(
                "half-spaces with parallel normals do not intersect".into(),
            )),
        };
    }
    let s1 = h1.violation(x) / n1;
    let s2 = (h2.violation(x) - s1 * c) / wn;
    let p = Vector::combine_unchecked(1.0, x, -s1, &u1);
    Ok(Vector::combine_unchecked(1.0, &p, -s2 / wn, &w))
}

/// Dykstra's alternating projections for `sweeps` passes over `sets`.
///
/// Converges to the metric projection of `x` onto the intersection of the
/// sets. Slow; meant as an independent reference for tests.
pub fn project_oracle(x: &Vector, sets: &[ConvexSet], sweeps: usize) -> Result<Vector> {
    let mut current = x.clone();
    let mut increments: Vec<Vector> = sets.iter().map(|_| x.space().zeros()).collect();
    for _ in 0..sweeps {
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let shifted = current.add(inc)?;
            let next = set.project(&shifted)?;
            *inc = shifted.sub(&next)?;
            current = next;
        }
    }
    Ok(current)
}
