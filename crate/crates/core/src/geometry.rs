//! Hyperbolic structures from gluing data: Newton in log coordinates, Dehn
//! filling by continuation, cusp coordinates, volumes, core lengths and the
//! potential function.

use std::num::NonZeroUsize;

use num_bigint::BigInt;
use num_complex::Complex;

use crate::dense::lu_solve;
use crate::dilogarithm::{bloch_wigner, LoggedPoint};
use crate::error::{NzError, Result};
use crate::scalar::{default_tolerance, Real};
use crate::triangulation::{GluingData, LogRow};
use crate::zlinalg::IntMatrix;

const MAX_ITER: usize = 100;
const MAX_HALVINGS: u32 = 8;
const CONTINUATION_STEPS: i32 = 8;

fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn two_pi_i<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::TAU())
}

/// Shapes with explicitly chosen logarithms.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeAssignment<T> {
    pub z: Vec<Complex<T>>,
    pub logs: Vec<LoggedPoint<T>>,
    /// The complete structure this one was deformed from.
    pub base: Option<Vec<Complex<T>>>,
    /// Newton steps taken by the last solve.
    pub steps: usize,
}

impl<T: Real> ShapeAssignment<T> {
    /// Principal logs.
    pub fn from_shapes(z: Vec<Complex<T>>) -> Result<Self> {
        let logs = z.iter().map(|&w| LoggedPoint::from_z(w)).collect::<Result<Vec<_>>>()?;
        Ok(ShapeAssignment { z, logs, base: None, steps: 0 })
    }

    /// All shapes equal to i.
    pub fn default_init(n: usize) -> Self {
        Self::from_shapes(vec![cx(T::zero(), T::one()); n]).expect("i is not degenerate")
    }

    pub fn from_logs(logs: Vec<LoggedPoint<T>>) -> Self {
        let z = logs.iter().map(|p| p.z()).collect();
        ShapeAssignment { z, logs, base: None, steps: 0 }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn u(&self) -> Vec<Complex<T>> {
        self.logs.iter().map(|p| p.u).collect()
    }

    pub fn v(&self) -> Vec<Complex<T>> {
        self.logs.iter().map(|p| p.v).collect()
    }

    /// Largest |e^u − z| + |e^v − (1 − z)|.
    pub fn consistency(&self) -> T {
        let one = cx(T::one(), T::zero());
        self.z
            .iter()
            .zip(&self.logs)
            .map(|(&z, p)| (p.u.exp() - z).norm() + (p.v.exp() - (one - z)).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Same structure with u_j shifted by 2πi·k on tetrahedron j.
    pub fn shift_branch(&self, j: usize, du: i64, dv: i64) -> Self {
        let mut s = self.clone();
        let t = two_pi_i::<T>();
        s.logs[j].u += t * T::from_int(du);
        s.logs[j].v += t * T::from_int(dv);
        s
    }
}

/// What to impose at a cusp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CuspCondition<T> {
    /// Meridian holonomy log is zero.
    Complete,
    /// p·u + q·v = 2πi (p, q may be real).
    Slope(T, T),
    /// Meridian holonomy log equal to the given value.
    Holonomy(Complex<T>),
}

/// Per-cusp slopes, `None` meaning ∞ (unfilled).
#[derive(Clone, Debug, PartialEq)]
pub struct DehnFilling<T> {
    pub slopes: Vec<Option<(T, T)>>,
}

impl<T: Real> DehnFilling<T> {
    pub fn complete(h: usize) -> Self {
        DehnFilling { slopes: vec![None; h] }
    }

    /// Integer slopes; each pair must be coprime.
    pub fn integral(slopes: &[Option<(i64, i64)>]) -> Result<Self> {
        let mut out = Vec::with_capacity(slopes.len());
        for s in slopes {
            match *s {
                None => out.push(None),
                Some((p, q)) => {
                    if num_integer::gcd(p, q) != 1 {
                        return Err(NzError::Invalid(format!("slope ({p},{q}) is not primitive")));
                    }
                    out.push(Some((T::from_int(p), T::from_int(q))));
                }
            }
        }
        Ok(DehnFilling { slopes: out })
    }

    /// Real slopes, for deformations that are not fillings.
    pub fn real(slopes: Vec<Option<(T, T)>>) -> Self {
        DehnFilling { slopes }
    }

    fn conditions(&self) -> Vec<CuspCondition<T>> {
        self.slopes
            .iter()
            .map(|s| match *s {
                None => CuspCondition::Complete,
                Some((p, q)) => CuspCondition::Slope(p, q),
            })
            .collect()
    }
}

// Σ a·u + b·v + k = 0
#[derive(Clone, Debug)]
struct Eqn<T> {
    a: Vec<T>,
    b: Vec<T>,
    k: Complex<T>,
}

impl<T: Real> Eqn<T> {
    fn from_row(r: &LogRow, target: Complex<T>) -> Self {
        Eqn {
            a: r.a.iter().map(|&x| T::from_int(x)).collect(),
            b: r.b.iter().map(|&x| T::from_int(x)).collect(),
            k: cx(T::zero(), T::PI() * T::from_int(r.c)) - target,
        }
    }

    fn combine(p: T, m: &LogRow, q: T, l: &LogRow, target: Complex<T>) -> Self {
        let a = m.a.iter().zip(&l.a).map(|(&x, &y)| p * T::from_int(x) + q * T::from_int(y)).collect();
        let b = m.b.iter().zip(&l.b).map(|(&x, &y)| p * T::from_int(x) + q * T::from_int(y)).collect();
        let c = p * T::from_int(m.c) + q * T::from_int(l.c);
        Eqn { a, b, k: cx(T::zero(), T::PI() * c) - target }
    }

    fn eval(&self, u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
        let mut s = self.k;
        for j in 0..u.len() {
            s = s + u[j] * self.a[j] + v[j] * self.b[j];
        }
        s
    }
}

/// Edge rows forming a basis of the rational row space of the edge equations.
pub fn independent_edge_rows(g: &GluingData) -> Vec<usize> {
    let mut chosen: Vec<Vec<BigInt>> = Vec::new();
    let mut idx = Vec::new();
    for i in 0..g.n {
        let mut trial = chosen.clone();
        trial.push(g.edge_row(i).coeffs());
        let m = IntMatrix::from_big_rows(trial.clone(), 2 * g.n).expect("row width");
        if m.rank() == trial.len() {
            chosen = trial;
            idx.push(i);
        }
    }
    idx
}

fn system<T: Real>(g: &GluingData, conds: &[CuspCondition<T>], t: T) -> Result<Vec<Eqn<T>>> {
    if conds.len() != g.h {
        return Err(NzError::Shape(format!("{} cusp conditions for {} cusps", conds.len(), g.h)));
    }
    let mut eqs: Vec<Eqn<T>> = independent_edge_rows(g)
        .into_iter()
        .map(|i| Eqn::from_row(&g.edge_row(i), two_pi_i()))
        .collect();
    for (k, c) in conds.iter().enumerate() {
        let m = g.meridian_row(k);
        eqs.push(match *c {
            CuspCondition::Complete => Eqn::from_row(&m, czero()),
            CuspCondition::Holonomy(w) => Eqn::from_row(&m, w * t),
            CuspCondition::Slope(p, q) => Eqn::combine(p, &m, q, &g.longitude_row(k), two_pi_i::<T>() * t),
        });
    }
    if eqs.len() != g.n {
        return Err(NzError::Triangulation(format!(
            "edge equations have rank {}, expected {}",
            eqs.len() - g.h,
            g.n - g.h
        )));
    }
    Ok(eqs)
}

fn max_norm<T: Real>(r: &[Complex<T>]) -> T {
    r.iter().map(|x| x.norm()).fold(T::zero(), |a, b| a.max(b))
}

// v = log(1 − e^u) on the branch nearest the previous value
fn track_v<T: Real>(u: Complex<T>, v_prev: Complex<T>) -> Option<Complex<T>> {
    let w = cx(T::one(), T::zero()) - u.exp();
    let tiny = T::from_f(1e-12);
    let z = u.exp();
    if !(w.norm() > tiny) || !(z.norm() > tiny) || !(z.norm() < T::one() / tiny) || !w.re.is_finite() {
        return None;
    }
    let p = w.ln();
    let k = ((v_prev.im - p.im) / T::TAU()).round();
    Some(cx(p.re, p.im + T::TAU() * k))
}

fn newton<T: Real>(eqs: &[Eqn<T>], init: &ShapeAssignment<T>) -> Result<ShapeAssignment<T>> {
    let n = init.len();
    let tol = default_tolerance::<T>();
    let mut u = init.u();
    let mut v = init.v();
    let mut f: Vec<Complex<T>> = eqs.iter().map(|e| e.eval(&u, &v)).collect();
    let mut res = max_norm(&f);
    let mut steps = 0;
    while !(res < tol) {
        if steps == MAX_ITER {
            return Err(NzError::NoConvergence(format!(
                "residual {:e} after {MAX_ITER} Newton steps",
                res.as_f64()
            )));
        }
        let jac: Vec<Vec<Complex<T>>> = eqs
            .iter()
            .map(|e| {
                (0..n)
                    .map(|j| {
                        // dv/du = −z/(1 − z) = −e^{u−v}
                        let dvdu = -(u[j] - v[j]).exp();
                        cx(e.a[j], T::zero()) + dvdu * e.b[j]
                    })
                    .collect()
            })
            .collect();
        let rhs: Vec<Complex<T>> = f.iter().map(|x| -*x).collect();
        let delta = lu_solve(jac, rhs, |x: &Complex<T>| x.norm().as_f64())?;
        let mut lambda = T::one();
        let mut accepted = None;
        let mut degenerate = true;
        for _ in 0..=MAX_HALVINGS {
            let un: Vec<Complex<T>> = u.iter().zip(&delta).map(|(&a, &d)| a + d * lambda).collect();
            let vn: Option<Vec<Complex<T>>> = un.iter().zip(&v).map(|(&a, &b)| track_v(a, b)).collect();
            if let Some(vn) = vn {
                degenerate = false;
                let fnew: Vec<Complex<T>> = eqs.iter().map(|e| e.eval(&un, &vn)).collect();
                let rn = max_norm(&fnew);
                if rn < res {
                    accepted = Some((un, vn, fnew, rn));
                    break;
                }
            }
            lambda /= T::from_int(2);
        }
        match accepted {
            Some((un, vn, fnew, rn)) => {
                u = un;
                v = vn;
                f = fnew;
                res = rn;
            }
            None if degenerate => {
                return Err(NzError::Degenerate("a shape approaches 0, 1 or ∞ along the Newton path".into()))
            }
            None => {
                return Err(NzError::NoConvergence(format!(
                    "damped Newton stalled at residual {:e}",
                    res.as_f64()
                )))
            }
        }
        steps += 1;
    }
    let logs: Vec<LoggedPoint<T>> = u.iter().zip(&v).map(|(&u, &v)| LoggedPoint { u, v }).collect();
    let mut s = ShapeAssignment::from_logs(logs);
    s.base = init.base.clone();
    s.steps = steps;
    Ok(s)
}

/// Complete structure: independent edge equations plus meridian equations.
pub fn solve_complete<T: Real>(g: &GluingData, init: Option<&ShapeAssignment<T>>) -> Result<ShapeAssignment<T>> {
    let start = match init {
        Some(s) => s.clone(),
        None => ShapeAssignment::default_init(g.n),
    };
    if start.len() != g.n {
        return Err(NzError::Shape(format!("{} shapes for {} tetrahedra", start.len(), g.n)));
    }
    let eqs = system(g, &vec![CuspCondition::Complete; g.h], T::one())?;
    let mut s = newton(&eqs, &start)?;
    s.base = Some(s.z.clone());
    Ok(s)
}

/// Solves under arbitrary cusp conditions, continuing in the right-hand side
/// from the seed (taken to be complete) in `CONTINUATION_STEPS` doublings.
pub fn solve_conditions<T: Real>(
    g: &GluingData,
    conds: &[CuspCondition<T>],
    seed: &ShapeAssignment<T>,
) -> Result<ShapeAssignment<T>> {
    if conds.iter().all(|c| *c == CuspCondition::Complete) {
        return newton(&system(g, conds, T::one())?, seed);
    }
    let mut cur = seed.clone();
    for k in 0..=CONTINUATION_STEPS {
        let t = T::from_int(2).powi(k - CONTINUATION_STEPS);
        let eqs = system(g, conds, t)?;
        cur = newton(&eqs, &cur).map_err(|e| {
            NzError::SlopeTooSmall(format!("continuation failed at t = 2^{}: {e}", k - CONTINUATION_STEPS))
        })?;
    }
    Ok(cur)
}

/// Dehn-filled (or real-slope deformed) structure near the complete one.
pub fn solve_filled<T: Real>(g: &GluingData, kappa: &DehnFilling<T>, seed: &ShapeAssignment<T>) -> Result<ShapeAssignment<T>> {
    let mut s = solve_conditions(g, &kappa.conditions(), seed)?;
    if s.base.is_none() {
        s.base = seed.base.clone();
    }
    Ok(s)
}

/// Structure with prescribed meridian holonomy logs u.
pub fn solve_at_u<T: Real>(g: &GluingData, u: &[Complex<T>], seed: &ShapeAssignment<T>) -> Result<ShapeAssignment<T>> {
    let conds: Vec<CuspCondition<T>> = u.iter().map(|&w| CuspCondition::Holonomy(w)).collect();
    let eqs = system(g, &conds, T::one())?;
    newton(&eqs, seed).or_else(|_| solve_conditions(g, &conds, seed))
}

fn eval_row<T: Real>(r: &LogRow, s: &ShapeAssignment<T>) -> Complex<T> {
    Eqn::from_row(r, czero()).eval(&s.u(), &s.v())
}

/// Log-holonomies (meridian, longitude) of every cusp, on the tracked branches.
pub fn holonomy_logs<T: Real>(s: &ShapeAssignment<T>, g: &GluingData) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let m = (0..g.h).map(|k| eval_row(&g.meridian_row(k), s)).collect();
    let l = (0..g.h).map(|k| eval_row(&g.longitude_row(k), s)).collect();
    (m, l)
}

/// Log-form residuals of all N edge equations (a·u + b·v + iπc − 2πi).
pub fn edge_residuals<T: Real>(s: &ShapeAssignment<T>, g: &GluingData) -> Vec<Complex<T>> {
    (0..g.n).map(|i| eval_row(&g.edge_row(i), s) - two_pi_i::<T>()).collect()
}

/// Σ D(z_j).
pub fn volume<T: Real>(s: &ShapeAssignment<T>) -> T {
    s.z.iter().map(|&z| bloch_wigner(z)).fold(T::zero(), |a, b| a + b)
}

/// Extended regulator of the element of (H, s), mod 4π²; its imaginary part is the volume.
pub fn complex_volume<T: Real>(s: &ShapeAssignment<T>, h: &IntMatrix) -> Result<Complex<T>> {
    let p = crate::bloch::HalfSymplecticPair::new(h.clone(), s.logs.iter().map(|p| Some(*p)).collect())?;
    crate::bloch::pair_regulator(&p)
}

/// `complex_volume` over the certified basis of the gluing data.
pub fn complex_volume_of<T: Real>(g: &GluingData, s: &ShapeAssignment<T>) -> Result<Complex<T>> {
    let (_, basis) = g.certified_basis()?;
    complex_volume(s, &basis.h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CuspCoordinates<T> {
    pub u: Vec<Complex<T>>,
    pub v: Vec<Complex<T>>,
    /// Cusp modulus, −∂v/∂u at the complete structure (Im τ > 0).
    pub tau: Vec<Complex<T>>,
}

/// u, v from principal logs of z/z⁰ and (1−z)/(1−z⁰), and the cusp moduli.
pub fn cusp_coordinates<T: Real>(s: &ShapeAssignment<T>, g: &GluingData) -> Result<CuspCoordinates<T>> {
    let base = s.base.as_ref().ok_or_else(|| NzError::Invalid("shape assignment has no base structure".into()))?;
    let one = cx(T::one(), T::zero());
    let mut lz = Vec::with_capacity(g.n);
    let mut lw = Vec::with_capacity(g.n);
    for (z, z0) in s.z.iter().zip(base) {
        let a = (z / z0).ln();
        let b = ((one - z) / (one - z0)).ln();
        if a.norm() > T::one() || b.norm() > T::one() {
            return Err(NzError::Domain("deformation too large for principal logs".into()));
        }
        lz.push(a);
        lw.push(b);
    }
    let row = |r: LogRow| {
        let mut acc = czero::<T>();
        for j in 0..g.n {
            acc = acc + lz[j] * T::from_int(r.a[j]) + lw[j] * T::from_int(r.b[j]);
        }
        acc
    };
    let u = (0..g.h).map(|k| row(g.meridian_row(k))).collect();
    let v = (0..g.h).map(|k| row(g.longitude_row(k))).collect();
    let base_s = ShapeAssignment::from_shapes(base.clone())?;
    let jac = dv_du(g, &base_s, T::from_f(1e-4))?;
    let tau = (0..g.h).map(|k| -jac[k][k]).collect();
    Ok(CuspCoordinates { u, v, tau })
}

/// Matrix ∂v_i/∂u_j at the complete structure, by central differences with
/// one Richardson step.
pub fn dv_du<T: Real>(g: &GluingData, complete: &ShapeAssignment<T>, h: T) -> Result<Vec<Vec<Complex<T>>>> {
    let mut out = vec![vec![czero::<T>(); g.h]; g.h];
    for j in 0..g.h {
        let at = |d: T| -> Result<Vec<Complex<T>>> {
            let mut u = vec![czero::<T>(); g.h];
            u[j] = cx(d, T::zero());
            let s = solve_at_u(g, &u, complete)?;
            Ok(holonomy_logs(&s, g).1)
        };
        let two = T::from_int(2);
        let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(two * h)?, at(-two * h)?);
        for i in 0..g.h {
            let d1 = (p1[i] - m1[i]) / (two * h);
            let d2 = (p2[i] - m2[i]) / (T::from_int(4) * h);
            out[i][j] = (d1 * T::from_int(4) - d2) / T::from_int(3);
        }
    }
    Ok(out)
}

/// Q(p, q) = |pτ + q|² / Im τ.
pub fn quadratic_form<T: Real>(tau: Complex<T>, p: T, q: T) -> Result<T> {
    if !(tau.im > T::zero()) {
        return Err(NzError::Domain("quadratic form needs Im τ > 0".into()));
    }
    Ok((tau * p + q).norm_sqr() / tau.im)
}

/// The value of the cusp quadratic form at the slope p·μ + q·λ, for the modulus
/// τ = −∂v/∂u of `cusp_coordinates`. In the lattice normalisation Zτ′ + Z of
/// `quadratic_form` the meridian sits at τ′ = −1/τ.
pub fn slope_form<T: Real>(tau: Complex<T>, p: T, q: T) -> Result<T> {
    quadratic_form(-tau.inv(), p, q)
}

/// Integer (r, s) with p·s − q·r = 1.
pub fn completion(p: i64, q: i64) -> Result<(i64, i64)> {
    let e = num_integer::Integer::extended_gcd(&p, &q);
    // e.x·p + e.y·q = gcd
    if e.gcd.abs() != 1 {
        return Err(NzError::Invalid(format!("({p},{q}) has no integer completion")));
    }
    let (s, r) = (e.x * e.gcd, -e.y * e.gcd);
    debug_assert_eq!(p * s - q * r, 1);
    Ok((r, s))
}

/// |Re(r·u + s·v)| with a real completion (r, s) = (−q, p)/(p² + q²); any
/// completion gives the same value because p·u + q·v = 2πi.
pub fn core_length_real<T: Real>(u: Complex<T>, v: Complex<T>, p: T, q: T) -> T {
    let d = p * p + q * q;
    (u * (-q / d) + v * (p / d)).re.abs()
}

/// Core geodesic lengths of a filled structure; unfilled cusps give 0.
pub fn core_length<T: Real>(s: &ShapeAssignment<T>, g: &GluingData, kappa: &[Option<(i64, i64)>]) -> Result<Vec<T>> {
    let (u, v) = holonomy_logs(s, g);
    let mut out = Vec::with_capacity(g.h);
    for k in 0..g.h {
        match kappa.get(k).copied().flatten() {
            None => out.push(T::zero()),
            Some((p, q)) => {
                let (r, ss) = completion(p, q)?;
                out.push((u[k] * T::from_int(r) + v[k] * T::from_int(ss)).re.abs());
            }
        }
    }
    Ok(out)
}

/// Real slope (p, q) with p·u + q·v = 2πi, or None at u = v = 0.
pub fn real_slope<T: Real>(u: Complex<T>, v: Complex<T>) -> Option<(T, T)> {
    let det = u.re * v.im - v.re * u.im;
    if det.is_zero() {
        return None;
    }
    Some((-T::TAU() * v.re / det, T::TAU() * u.re / det))
}

/// Core lengths of a deformed structure from its holonomies (0 where u = 0).
pub fn deformation_lengths<T: Real>(s: &ShapeAssignment<T>, g: &GluingData) -> Vec<T> {
    let (u, v) = holonomy_logs(s, g);
    u.iter()
        .zip(&v)
        .map(|(&a, &b)| match real_slope(a, b) {
            Some((p, q)) if !(a.norm().is_zero()) => core_length_real(a, b, p, q),
            _ => T::zero(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FillingRow<T> {
    pub p: i64,
    pub q: i64,
    pub volume: T,
    pub form: T,
    pub length: T,
    /// Vol(M) − Vol(M_κ) − π²/Q.
    pub res_volume_q: T,
    /// Vol(M) − Vol(M_κ) − πL/2.
    pub res_volume_l: T,
    /// L − 2π/Q.
    pub res_length: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FillingReport<T> {
    pub complete_volume: T,
    pub tau: Complex<T>,
    pub rows: Vec<FillingRow<T>>,
    pub failures: Vec<(i64, i64, String)>,
    /// Decay exponents k with residual ~ (p⁴ + q⁴)^(−k/4).
    pub exponent_volume_q: f64,
    pub exponent_volume_l: f64,
    pub exponent_length: f64,
    pub all_below: bool,
    pub monotone: bool,
}

/// −4 × least-squares slope of log|res| against log(p⁴ + q⁴).
pub fn decay_exponent(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, r)| *r != 0.0).map(|&(x, r)| (x.ln(), r.abs().ln())).collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -4.0 * sxy / sxx
}

/// Filling table over slopes on a one-cusp manifold: volume and core-length residuals against the quadratic form.
pub fn filling_asymptotics<T: Real>(
    g: &GluingData,
    complete: &ShapeAssignment<T>,
    slopes: &[(i64, i64)],
) -> Result<FillingReport<T>> {
    if g.h != 1 {
        return Err(NzError::Invalid("filling asymptotics expects a one-cusp manifold".into()));
    }
    let vol_m = volume(complete);
    let tau = cusp_coordinates(complete, g)?.tau[0];
    let pi = T::PI();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &(p, q) in slopes {
        let kappa = DehnFilling::integral(&[Some((p, q))])?;
        match solve_filled(g, &kappa, complete) {
            Ok(s) => {
                let vol = volume(&s);
                let form = slope_form(tau, T::from_int(p), T::from_int(q))?;
                let length = core_length(&s, g, &[Some((p, q))])?[0];
                let dv = vol_m - vol;
                rows.push(FillingRow {
                    p,
                    q,
                    volume: vol,
                    form,
                    length,
                    res_volume_q: dv - pi * pi / form,
                    res_volume_l: dv - pi * length / T::from_int(2),
                    res_length: length - T::TAU() / form,
                });
            }
            Err(e) => failures.push((p, q, e.to_string())),
        }
    }
    let scale = |r: &FillingRow<T>| (r.p as f64).powi(4) + (r.q as f64).powi(4);
    let fit = |f: &dyn Fn(&FillingRow<T>) -> T| {
        decay_exponent(&rows.iter().map(|r| (scale(r), f(r).as_f64())).collect::<Vec<_>>())
    };
    let all_below = rows.iter().all(|r| r.volume < vol_m);
    let mut sorted: Vec<&FillingRow<T>> = rows.iter().collect();
    sorted.sort_by_key(|r| r.p * r.p + r.q * r.q);
    let monotone = sorted.windows(2).all(|w| w[0].volume < w[1].volume);
    Ok(FillingReport {
        complete_volume: vol_m,
        tau,
        exponent_volume_q: fit(&|r| r.res_volume_q),
        exponent_volume_l: fit(&|r| r.res_volume_l),
        exponent_length: fit(&|r| r.res_length),
        rows,
        failures,
        all_below,
        monotone,
    })
}

/// Gauss–Legendre rule on [0, 1]: f64 nodes from `gauss-quad`, refined by
/// Newton on the Legendre recurrence in the working precision.
pub fn gauss_legendre<T: Real>(n: usize) -> Vec<(T, T)> {
    let rule = gauss_quad::GaussLegendre::new(NonZeroUsize::new(n).expect("positive order"));
    let mut out: Vec<(T, T)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x0, _)| {
            let mut x = T::from_f(x0);
            let mut dp = T::one();
            for _ in 0..3 {
                let (p, d) = legendre(n, x);
                dp = d;
                x -= p / d;
            }
            let (_, d) = legendre(n, x);
            if !d.is_zero() {
                dp = d;
            }
            let w = T::from_int(2) / ((T::one() - x * x) * dp * dp);
            let half = T::from_f(0.5);
            ((x + T::one()) * half, w * half)
        })
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    out
}

fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let (mut p0, mut p1) = (T::one(), x);
    for k in 2..=n {
        let kf = T::from_int(k as i64);
        let p2 = ((T::from_int(2) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_int(n as i64);
    (p1, nf * (x * p1 - p0) / (x * x - T::one()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSample<T> {
    pub u: Vec<Complex<T>>,
    pub v: Vec<Complex<T>>,
    pub f: Complex<T>,
    pub eps: T,
    pub volume: T,
    pub lengths: Vec<T>,
    /// Vol(u) − Vol(M) + (π/2)ΣL − Im f.
    pub identity_residual: T,
    /// |f₃₂ − f₆₄|.
    pub quadrature_error: T,
}

/// f(u) = ¼(Φ − u·w) with Φ = 2Σ u_i ∫₀¹ w_i(tu) dt along the ray to u, where
/// w = −v is the longitude log in the positively oriented basis (the one in
/// which −∂v/∂u = τ has Im τ > 0).
fn potential_on_ray<T: Real>(g: &GluingData, complete: &ShapeAssignment<T>, u: &[Complex<T>], nodes: usize) -> Result<(Complex<T>, ShapeAssignment<T>)> {
    let mut seed = complete.clone();
    let mut integral = vec![czero::<T>(); g.h];
    for (t, w) in gauss_legendre::<T>(nodes) {
        let ut: Vec<Complex<T>> = u.iter().map(|&x| x * t).collect();
        let s = solve_at_u(g, &ut, &seed)?;
        let (_, vt) = holonomy_logs(&s, g);
        for i in 0..g.h {
            integral[i] -= vt[i] * w;
        }
        seed = s;
    }
    let end = solve_at_u(g, u, &seed)?;
    let (_, v) = holonomy_logs(&end, g);
    let mut phi = czero::<T>();
    let mut uv = czero::<T>();
    for i in 0..g.h {
        phi += u[i] * integral[i] * T::from_int(2);
        uv -= u[i] * v[i];
    }
    Ok(((phi - uv) / T::from_int(4), end))
}

/// NZ potential f(u).
pub fn potential<T: Real>(g: &GluingData, complete: &ShapeAssignment<T>, u: &[Complex<T>]) -> Result<Complex<T>> {
    Ok(potential_on_ray(g, complete, u, 32)?.0)
}

/// ε(u) := Vol(u) − Vol(M) + (π/2)ΣL(u) from the geometric side alone.
pub fn volume_defect<T: Real>(g: &GluingData, complete: &ShapeAssignment<T>, u: &[Complex<T>]) -> Result<T> {
    let s = solve_at_u(g, u, complete)?;
    let l: T = deformation_lengths(&s, g).into_iter().fold(T::zero(), |a, b| a + b);
    Ok(volume(&s) - volume(complete) + T::PI() / T::from_int(2) * l)
}

pub fn potential_scan<T: Real>(g: &GluingData, complete: &ShapeAssignment<T>, grid: &[Vec<Complex<T>>]) -> Result<Vec<PotentialSample<T>>> {
    let vol_m = volume(complete);
    let mut out = Vec::with_capacity(grid.len());
    for u in grid {
        if u.len() != g.h {
            return Err(NzError::Shape(format!("grid point with {} coordinates for {} cusps", u.len(), g.h)));
        }
        let (f, s) = potential_on_ray(g, complete, u, 32)?;
        let (f64_, _) = potential_on_ray(g, complete, u, 64)?;
        let (_, v) = holonomy_logs(&s, g);
        let lengths = deformation_lengths(&s, g);
        let vol = volume(&s);
        let lsum = lengths.iter().fold(T::zero(), |a, &b| a + b);
        let ident = vol - vol_m + T::PI() / T::from_int(2) * lsum - f.im;
        out.push(PotentialSample {
            u: u.clone(),
            v,
            f,
            eps: f.im,
            volume: vol,
            lengths,
            identity_residual: ident,
            quadrature_error: (f - f64_).norm(),
        });
    }
    Ok(out)
}

/// Five-point Laplacian of ε on the slice u_j = x + iy through `center`.
pub fn defect_laplacian<T: Real>(g: &GluingData, complete: &ShapeAssignment<T>, center: &[Complex<T>], j: usize, h: T) -> Result<T> {
    let at = |d: Complex<T>| -> Result<T> {
        let mut u = center.to_vec();
        u[j] += d;
        volume_defect(g, complete, &u)
    };
    let z = T::zero();
    let c = at(cx(z, z))?;
    let s = at(cx(h, z))? + at(cx(-h, z))? + at(cx(z, h))? + at(cx(z, -h))?;
    Ok((s - c * T::from_int(4)) / (h * h))
}

/// Largest |Σ(angles) − 2π| over edges, using principal arguments.
pub fn angle_sum_defect<T: Real>(s: &ShapeAssignment<T>, g: &GluingData) -> T {
    let ps = ShapeAssignment::from_shapes(s.z.clone());
    match ps {
        Ok(ps) => max_norm(&edge_residuals(&ps, g)),
        Err(_) => T::infinity(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::Dd;
    use crate::triangulation::derive_edge_matrices;
    use num_traits::{Float, One, Zero};

    type C = Complex<f64>;

    fn gd(name: &str) -> GluingData {
        derive_edge_matrices(&fixtures::by_name(name).unwrap()).unwrap()
    }

    #[test]
    fn figure_eight_complete_structure() {
        let g = gd("fig8");
        let s = solve_complete::<f64>(&g, None).unwrap();
        // z² − z + 1 = 0 on the upper half-plane
        let want = C::new(0.5, 3f64.sqrt() / 2.0);
        for z in &s.z {
            assert!((z - want).norm() < 1e-12);
        }
        assert!(angle_sum_defect(&s, &g) < 1e-11);
        assert!(max_norm(&edge_residuals(&s, &g)) < 1e-11);
        let again = solve_complete(&g, Some(&s)).unwrap();
        assert_eq!(again.steps, 0);
        assert_eq!(again.z, s.z);
    }

    #[test]
    fn complete_structures_are_geometric() {
        for (name, vol) in [("fig8", 2.0298832128), ("sister", 2.0298832128), ("whitehead", 3.6638623767)] {
            let g = gd(name);
            let s = solve_complete::<f64>(&g, None).unwrap();
            assert!(s.z.iter().all(|z| z.im > 0.0), "{name}");
            assert!(angle_sum_defect(&s, &g) < 1e-10, "{name}");
            let (m, l) = holonomy_logs(&s, &g);
            assert!(max_norm(&m) < 1e-10 && max_norm(&l) < 1e-10, "{name}");
            assert!((volume(&s) - vol).abs() < 1e-10, "{name}");
        }
    }

    #[test]
    fn whitehead_tetrahedra_are_square() {
        let s = solve_complete::<f64>(&gd("whitehead"), None).unwrap();
        let square = [C::new(0.0, 1.0), C::new(0.5, 0.5), C::new(1.0, 1.0)];
        for z in &s.z {
            assert!(square.iter().any(|w| (z - w).norm() < 1e-12), "{z}");
        }
    }

    #[test]
    fn double_double_solution_reaches_tolerance() {
        let g = gd("fig8");
        let s = solve_complete::<Dd>(&g, None).unwrap();
        let want = Dd::from_int(3).sqrt() / Dd::from_int(2);
        for z in &s.z {
            assert!((z.re - Dd::from_f(0.5)).abs().as_f64() < 1e-28);
            assert!((z.im - want).abs().as_f64() < 1e-28);
        }
        // 2·D(e^{iπ/3}) to 30 digits
        let v = volume(&s) - Dd::new(2.0298832128193074, -1.4199617627498194e-16);
        assert!(v.abs().as_f64() < 1e-28, "{v:?}");
    }

    #[test]
    fn volume_of_real_shapes_is_zero() {
        let s = ShapeAssignment::from_shapes(vec![C::new(0.3, 0.0), C::new(-2.0, 0.0)]).unwrap();
        assert_eq!(volume(&s), 0.0);
    }

    #[test]
    fn unfilled_returns_complete() {
        let g = gd("whitehead");
        let c = solve_complete::<f64>(&g, None).unwrap();
        let s = solve_filled(&g, &DehnFilling::complete(2), &c).unwrap();
        assert_eq!(s.z, c.z);
    }

    #[test]
    fn figure_eight_cusp_modulus() {
        let g = gd("fig8");
        let c = solve_complete::<f64>(&g, None).unwrap();
        let cc = cusp_coordinates(&c, &g).unwrap();
        assert!(cc.u[0].norm() < 1e-14 && cc.v[0].norm() < 1e-14);
        assert!((cc.tau[0] - C::new(0.0, 2.0 * 3f64.sqrt())).norm() < 1e-8, "{}", cc.tau[0]);
    }

    #[test]
    fn filled_structure_satisfies_filling_equation() {
        let g = gd("fig8");
        let c = solve_complete::<f64>(&g, None).unwrap();
        let k = DehnFilling::integral(&[Some((5, 1))]).unwrap();
        let s = solve_filled(&g, &k, &c).unwrap();
        assert!(volume(&s) < volume(&c));
        // (5,1) is too far out for principal logs of z/z⁰; (12,1) is not
        assert!(cusp_coordinates(&s, &g).is_err());
        let k = DehnFilling::integral(&[Some((12, 1))]).unwrap();
        let s = solve_filled(&g, &k, &c).unwrap();
        let cc = cusp_coordinates(&s, &g).unwrap();
        let lhs = cc.u[0] * 12.0 + cc.v[0];
        assert!((lhs - C::new(0.0, std::f64::consts::TAU)).norm() < 1e-10, "{lhs}");
        assert!(volume(&s) < volume(&c));
        assert!(DehnFilling::<f64>::integral(&[Some((4, 2))]).is_err());
    }

    #[test]
    fn real_slopes_are_accepted() {
        let g = gd("fig8");
        let c = solve_complete::<f64>(&g, None).unwrap();
        let s = solve_filled(&g, &DehnFilling::real(vec![Some((10.5, 0.25))]), &c).unwrap();
        let (u, v) = holonomy_logs(&s, &g);
        assert!((u[0] * 10.5 + v[0] * 0.25 - C::new(0.0, std::f64::consts::TAU)).norm() < 1e-10);
        assert!(volume(&s) < volume(&c));
    }

    #[test]
    fn quadratic_form_examples() {
        assert!((quadratic_form(C::new(0.0, 1.0), 3.0, 4.0).unwrap() - 25.0).abs() < 1e-14);
        assert!((quadratic_form(C::new(0.0, 2.0), 1.0, 0.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(quadratic_form(C::new(1.0, 0.0), 1.0, 0.0).is_err());
        // meridian and longitude lengths for τ = 2√3 i
        let t = C::new(0.0, 2.0 * 3f64.sqrt());
        assert!((slope_form(t, 1.0, 0.0).unwrap() - 1.0 / t.im).abs() < 1e-14);
        assert!((slope_form(t, 0.0, 1.0).unwrap() - t.im).abs() < 1e-14);
    }

    #[test]
    fn completions_and_core_lengths() {
        for (p, q) in [(5, 1), (-3, 7), (1, 0), (0, 1), (12, -5)] {
            let (r, s) = completion(p, q).unwrap();
            assert_eq!(p * s - q * r, 1);
        }
        assert!(completion(4, 6).is_err());
        let g = gd("fig8");
        let c = solve_complete::<f64>(&g, None).unwrap();
        assert_eq!(core_length(&c, &g, &[None]).unwrap(), vec![0.0]);
        let s = solve_filled(&g, &DehnFilling::integral(&[Some((7, 2))]).unwrap(), &c).unwrap();
        let l = core_length(&s, &g, &[Some((7, 2))]).unwrap()[0];
        let (u, v) = holonomy_logs(&s, &g);
        let (r, ss) = completion(7, 2).unwrap();
        let other = (u[0] * (r + 7) as f64 + v[0] * (ss + 2) as f64).re.abs();
        assert!((l - other).abs() < 1e-12);
        assert!((l - core_length_real(u[0], v[0], 7.0, 2.0)).abs() < 1e-12);
        assert!(l > 0.0);
    }

    #[test]
    fn gauss_legendre_nodes_integrate_polynomials() {
        let r = gauss_legendre::<Dd>(32);
        let s: Dd = r.iter().map(|&(x, w)| w * x.powi(20)).fold(Dd::zero(), |a, b| a + b);
        assert!((s - Dd::one() / Dd::from_int(21)).abs().as_f64() < 1e-30);
        let r = gauss_legendre::<f64>(32);
        let s: f64 = r.iter().map(|&(x, w)| w * x.exp()).sum();
        assert!((s - (1f64.exp() - 1.0)).abs() < 4e-15);
    }

    #[test]
    fn potential_vanishes_at_origin_and_is_quartic() {
        let g = gd("fig8");
        let c = solve_complete::<f64>(&g, None).unwrap();
        assert_eq!(potential(&g, &c, &[C::new(0.0, 0.0)]).unwrap(), C::new(0.0, 0.0));
        for dir in [C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(0.6, 0.8)] {
            let ratios: Vec<f64> = [0.2, 0.1, 0.05]
                .iter()
                .map(|&r| volume_defect(&g, &c, &[dir * r]).unwrap().abs() / r.powi(4))
                .collect();
            assert!(ratios.iter().all(|&x| x < 1.0), "{ratios:?}");
        }
    }

    #[test]
    fn whitehead_derivative_matrix_is_symmetric() {
        let g = gd("whitehead");
        let c = solve_complete::<f64>(&g, None).unwrap();
        let m = dv_du(&g, &c, 1e-3).unwrap();
        assert!((m[0][1] - m[1][0]).norm() < 1e-6);
        assert!(m[0][0].im < 0.0 && m[1][1].im < 0.0);
    }

    #[test]
    fn complex_volume_imaginary_part_is_volume() {
        for name in ["fig8", "sister", "whitehead"] {
            let g = derive_edge_matrices(&fixtures::by_name(name).unwrap()).unwrap();
            let s = solve_complete::<Dd>(&g, None).unwrap();
            let c = complex_volume_of(&g, &s).unwrap();
            assert!((c.im - volume(&s)).abs() < Dd::from_f(1e-25), "{name}");
        }
        let g = derive_edge_matrices(&fixtures::figure_eight()).unwrap();
        let s = solve_complete::<f64>(&g, None).unwrap();
        let c = complex_volume_of(&g, &s).unwrap();
        let r = crate::arithmetic::recognize_rational(c.re / (std::f64::consts::PI.powi(2)), 8, 1e-9);
        assert!(r.is_some(), "{c}");
    }
}
