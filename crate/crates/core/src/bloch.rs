//! Bloch-group algebra: formal combinations and five-term relations, the
//! generalized gluing equations of a half-symplectic matrix, the extended Bloch
//! element of a pair (H, z) with its regulator, an exact wedge ledger, the
//! equivalence moves on pairs and the 2–3 Pachner move on triangulations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::arithmetic::recognize_rational;
use crate::dense::lu_solve;
use crate::dilogarithm::{bloch_wigner, reduce_mod_4pi2, rogers_l_raw, LoggedPoint};
use crate::error::{NzError, Result};
use crate::geometry::{self, ShapeAssignment};
use crate::scalar::{default_tolerance, Real};
use crate::triangulation::{derive_edge_matrices, edge_type, GluingData, Peripheral, Perm, Triangulation};
use crate::zlinalg::{complete_to_symplectic, is_half_symplectic, rank_and_kernel, split_half, IntMatrix, SymplecticForm};

fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

fn ipi<T: Real>() -> Complex<T> {
    cx(T::zero(), T::PI())
}

fn big(x: &BigInt) -> i64 {
    x.to_i64().expect("small integer entry")
}

// ---------------------------------------------------------------------------

/// A formal combination Σ n_i [x_i] in Z[F].
#[derive(Clone, Debug, PartialEq)]
pub struct BlochCombination<F> {
    pub terms: Vec<(i64, F)>,
}

impl<F> BlochCombination<F>
where
    F: Clone + PartialEq + Zero + One + std::ops::Sub<Output = F> + std::ops::Div<Output = F>,
{
    pub fn new(terms: Vec<(i64, F)>) -> Result<Self> {
        if terms.iter().any(|(c, x)| *c != 0 && (x.is_zero() || x.is_one())) {
            return Err(NzError::Domain("arguments 0 and 1 are not allowed".into()));
        }
        Ok(BlochCombination { terms })
    }

    /// [x] + [y] + [(1−x)/(1−xy)] + [1−xy] + [(1−y)/(1−xy)].
    pub fn five_term(x: F, y: F) -> Result<Self> {
        let one = F::one();
        let w = one.clone() - x.clone() * y.clone();
        if w.is_zero() {
            return Err(NzError::Domain("xy = 1".into()));
        }
        let a = (one.clone() - x.clone()) / w.clone();
        let b = (one - y.clone()) / w.clone();
        BlochCombination::new(vec![(1, x), (1, y), (1, a), (1, w), (1, b)])
    }
}

impl<T: Real> BlochCombination<Complex<T>> {
    /// Σ n_i D(x_i).
    pub fn regulator_d(&self) -> T {
        self.terms.iter().fold(T::zero(), |s, (c, z)| s + T::from_int(*c) * bloch_wigner(*z))
    }
}

/// |D(x) + D(y) + D((1−x)/(1−xy)) + D(1−xy) + D((1−y)/(1−xy))|.
pub fn five_term_numeric<T: Real>(x: Complex<T>, y: Complex<T>) -> Result<T> {
    let one = cx(T::one(), T::zero());
    let w = one - x * y;
    if w.norm() <= T::epsilon() * T::from_int(16) {
        return Err(NzError::Domain("xy = 1".into()));
    }
    let c = BlochCombination { terms: vec![(1, x), (1, y), (1, (one - x) / w), (1, w), (1, (one - y) / w)] };
    Ok(c.regulator_d().abs())
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct GluingReport<T> {
    /// Distance of (Au − Bv)_i − πi·(ABᵗ)_ii to 2πiZ.
    pub residuals: Vec<T>,
    /// (ABᵗ)_ii.
    pub parity: Vec<i64>,
    /// Integers with Au − Bv = πi·m on the chosen logs.
    pub m: Vec<i64>,
    pub failing: Vec<usize>,
    pub tolerance: T,
    pub pass: bool,
}

/// Residuals of ∏ z_j^{A_ij} = (−1)^{(ABᵗ)_ii} ∏ (1 − z_j)^{B_ij} in log form.
/// `None` marks a degenerate shape z = 1 (u = 0; its column of B must vanish).
pub fn verify_gluing<T: Real>(h: &IntMatrix, points: &[Option<LoggedPoint<T>>]) -> Result<GluingReport<T>> {
    let (a, b) = split_half(h)?;
    let n = a.rows();
    if points.len() != n {
        return Err(NzError::Shape(format!("{} shapes for {n} columns", points.len())));
    }
    let abt = &a * &b.transpose();
    let tol = default_tolerance::<T>();
    let mut rep = GluingReport { residuals: vec![], parity: vec![], m: vec![], failing: vec![], tolerance: tol, pass: true };
    for i in 0..n {
        let mut s = cx(T::zero(), T::zero());
        let mut weight = T::one();
        for (j, p) in points.iter().enumerate() {
            let (aij, bij) = (big(&a[(i, j)]), big(&b[(i, j)]));
            match p {
                Some(p) => {
                    s = s + p.u * T::from_int(aij) - p.v * T::from_int(bij);
                    weight += T::from_int(aij.abs() + bij.abs()) * (T::one() + p.u.norm() + p.v.norm());
                }
                None if bij != 0 => {
                    return Err(NzError::Degenerate(format!("row {i} raises 1 − z = 0 to the power {bij}")));
                }
                None => {}
            }
        }
        let par = big(&abt[(i, i)]);
        s -= ipi::<T>() * T::from_int(par);
        let k = (s.im / T::TAU()).round();
        let r = (s - cx(T::zero(), T::TAU() * k)).norm();
        let m = par + 2 * k.to_i64().unwrap_or(0);
        if !(r <= tol * weight) {
            rep.failing.push(i);
            rep.pass = false;
        }
        rep.residuals.push(r);
        rep.parity.push(par);
        rep.m.push(m);
    }
    Ok(rep)
}

/// Principal logs of the given shapes, then `verify_gluing`.
pub fn verify_gluing_shapes<T: Real>(h: &IntMatrix, z: &[Complex<T>]) -> Result<GluingReport<T>> {
    let pts = z.iter().map(|&w| LoggedPoint::from_z(w).map(Some)).collect::<Result<Vec<_>>>()?;
    verify_gluing(h, &pts)
}

/// H = (A | B) half-symplectic, a solution of its generalized gluing equations
/// with chosen logarithms, and a completion (C | D) to an integral symplectic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSymplecticPair<T> {
    h: IntMatrix,
    points: Vec<Option<LoggedPoint<T>>>,
    completion: IntMatrix,
    m: Vec<i64>,
}

impl<T: Real> HalfSymplecticPair<T> {
    pub fn new(h: IntMatrix, points: Vec<Option<LoggedPoint<T>>>) -> Result<Self> {
        let completion = complete_to_symplectic(&h)?;
        Self::with_parts(h, points, completion)
    }

    fn with_parts(h: IntMatrix, points: Vec<Option<LoggedPoint<T>>>, completion: IntMatrix) -> Result<Self> {
        let verdict = is_half_symplectic(&h)?;
        if !verdict.passed() {
            return Err(NzError::NotHalfSymplectic(verdict.reasons().join("; ")));
        }
        if !SymplecticForm::new(h.rows()).is_symplectic(&h.vstack(&completion)) {
            return Err(NzError::NotHalfSymplectic("(H; C D) is not symplectic".into()));
        }
        let rep = verify_gluing(&h, &points)?;
        if !rep.pass {
            let worst = rep.residuals.iter().fold(T::zero(), |a, &b| a.max(b));
            return Err(NzError::Invalid(format!(
                "shapes do not solve the generalized gluing equations on rows {:?} (residual {:e})",
                rep.failing,
                worst.as_f64()
            )));
        }
        Ok(HalfSymplecticPair { h, points, completion, m: rep.m })
    }

    /// Pair from principal logs of the shapes.
    pub fn from_shapes(h: IntMatrix, z: &[Complex<T>]) -> Result<Self> {
        let pts = z.iter().map(|&w| LoggedPoint::from_z(w).map(Some)).collect::<Result<Vec<_>>>()?;
        Self::new(h, pts)
    }

    /// The certified edge-plus-peripheral basis of a triangulation with the
    /// logs of a solved structure.
    pub fn from_gluing(g: &GluingData, s: &ShapeAssignment<T>) -> Result<Self> {
        let (_, basis) = g.certified_basis()?;
        Self::new(basis.h, s.logs.iter().map(|p| Some(*p)).collect())
    }

    /// Same pair with another completion (C | D).
    pub fn with_completion(&self, completion: IntMatrix) -> Result<Self> {
        Self::with_parts(self.h.clone(), self.points.clone(), completion)
    }

    pub fn h(&self) -> &IntMatrix {
        &self.h
    }
    pub fn points(&self) -> &[Option<LoggedPoint<T>>] {
        &self.points
    }
    pub fn completion(&self) -> &IntMatrix {
        &self.completion
    }
    pub fn m(&self) -> &[i64] {
        &self.m
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn gluing_check(&self) -> Result<GluingReport<T>> {
        verify_gluing(&self.h, &self.points)
    }

    /// Σ D(z_j), degenerate shapes contributing 0.
    pub fn volume(&self) -> T {
        self.points.iter().flatten().fold(T::zero(), |s, p| s + bloch_wigner(p.z()))
    }

    /// Same shapes, logs shifted by 2πi·(du, dv) on shape j.
    pub fn shift_branch(&self, j: usize, du: i64, dv: i64) -> Result<Self> {
        let mut pts = self.points.clone();
        let p = pts.get_mut(j).and_then(|p| p.as_mut()).ok_or_else(|| NzError::Invalid(format!("no generic shape {j}")))?;
        p.u += cx(T::zero(), T::TAU() * T::from_int(du));
        p.v += cx(T::zero(), T::TAU() * T::from_int(dv));
        Self::with_parts(self.h.clone(), pts, self.completion.clone())
    }
}

/// Text form: `PAIR`, the matrix H, `COMPLETION` and (C | D), then `SHAPES`
/// with one line "Re u Im u Re v Im v" per shape, or `degenerate`.
pub fn pair_to_text<T: Real>(p: &HalfSymplecticPair<T>) -> String {
    let mut s = String::from("PAIR\n");
    s += &p.h.to_text();
    s += "COMPLETION\n";
    s += &p.completion.to_text();
    s += "SHAPES\n";
    for pt in &p.points {
        match pt {
            Some(q) => s += &format!("{} {} {} {}\n", q.u.re, q.u.im, q.v.re, q.v.im),
            None => s += "degenerate\n",
        }
    }
    s
}

pub fn parse_pair<T: Real + std::str::FromStr>(text: &str) -> Result<HalfSymplecticPair<T>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let expect = |tag: &str, lines: &mut dyn Iterator<Item = &str>| -> Result<()> {
        match lines.next() {
            Some(l) if l == tag => Ok(()),
            other => Err(NzError::Parse(format!("expected {tag}, found {other:?}"))),
        }
    };
    expect("PAIR", &mut lines)?;
    let h = crate::zlinalg::parse_from_lines(&mut lines)?;
    let mut rest: Vec<&str> = lines.collect();
    let completion = if rest.first() == Some(&"COMPLETION") {
        let mut it = rest[1..].iter().copied();
        let cd = crate::zlinalg::parse_from_lines(&mut it)?;
        rest = it.collect();
        Some(cd)
    } else {
        None
    };
    let mut it = rest.into_iter();
    expect("SHAPES", &mut it)?;
    let num = |t: &str| t.parse::<T>().map_err(|_| NzError::Parse(format!("bad number {t:?}")));
    let mut points = Vec::new();
    for line in it {
        if line == "degenerate" {
            points.push(None);
            continue;
        }
        let v: Vec<T> = line.split_whitespace().map(num).collect::<Result<_>>()?;
        let [a, b, c, d] = v[..] else {
            return Err(NzError::Parse(format!("shape line needs 4 numbers: {line:?}")));
        };
        points.push(Some(LoggedPoint::new(cx(a, b), cx(c, d))?));
    }
    match completion {
        Some(cd) => HalfSymplecticPair::with_parts(h, points, cd),
        None => HalfSymplecticPair::new(h, points),
    }
}

// ---------------------------------------------------------------------------

/// Σ n_i [u_i, v_i] over the cover e^u + e^v = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedBlochElement<T> {
    pub terms: Vec<(i64, LoggedPoint<T>)>,
}

impl<T: Real> ExtendedBlochElement<T> {
    /// Σ n_i 𝓛(u_i, v_i) mod 4π².
    pub fn regulator(&self) -> Result<Complex<T>> {
        let mut s = cx(T::zero(), T::zero());
        for (c, p) in &self.terms {
            s += rogers_l_raw(p)? * T::from_int(*c);
        }
        Ok(reduce_mod_4pi2(s))
    }

    /// Σ n_i D(e^{u_i}).
    pub fn volume(&self) -> T {
        self.terms.iter().fold(T::zero(), |s, (c, p)| s + T::from_int(*c) * bloch_wigner(p.z()))
    }

    /// The lifted five-term element Σ (−1)^j [u_j, v_j] built on x = e^{u₁},
    /// y = e^{u₃}, with the free logs u₁, u₃, u₅, v₂, v₄ moved by 2πi·shifts,
    /// together with its ledger over those five logs.
    pub fn lifted_five_term(x: Complex<T>, y: Complex<T>, shifts: [i64; 5]) -> Result<(Self, WedgeLedger<T>)> {
        let one = cx(T::one(), T::zero());
        let w = one - x * y;
        if w.norm() <= T::epsilon() * T::from_int(16) {
            return Err(NzError::Domain("xy = 1".into()));
        }
        let z5 = (one - x) / w;
        let lift = |z: Complex<T>, k: i64| -> Result<Complex<T>> {
            if z.norm().is_zero() {
                return Err(NzError::Domain("degenerate five-term arguments".into()));
            }
            Ok(z.ln() + cx(T::zero(), T::TAU() * T::from_int(k)))
        };
        let u1 = lift(x, shifts[0])?;
        let u3 = lift(y, shifts[1])?;
        let u5 = lift(z5, shifts[2])?;
        let v2 = lift(w, shifts[3])?;
        let v4 = lift(one - y * z5, shifts[4])?;
        let pts = [(u1, u5 + v2), (u1 + u3, v2), (u3, v2 + v4), (u3 + u5, v4), (u5, u1 + v4)];
        let mut terms = Vec::with_capacity(5);
        for (j, &(u, v)) in pts.iter().enumerate() {
            terms.push((if j % 2 == 0 { -1 } else { 1 }, LoggedPoint::new(u, v)?));
        }
        let e = |k: usize| -> Vec<BigInt> { (0..5).map(|i| BigInt::from((i == k) as i64)).collect() };
        let add = |a: Vec<BigInt>, b: Vec<BigInt>| -> Vec<BigInt> { a.into_iter().zip(b).map(|(x, y)| x + y).collect() };
        // basis order: u1, u3, u5, v2, v4
        let coords = vec![
            (e(0), add(e(2), e(3))),
            (add(e(0), e(1)), e(3)),
            (e(1), add(e(3), e(4))),
            (add(e(1), e(2)), e(4)),
            (e(2), add(e(0), e(4))),
        ];
        let ledger = WedgeLedger {
            names: ["u1", "u3", "u5", "v2", "v4"].iter().map(|s| s.to_string()).collect(),
            values: Some(vec![u1, u3, u5, v2, v4]),
            coords,
        };
        Ok((ExtendedBlochElement { terms }, ledger))
    }
}

/// The element of a pair together with the data used to build it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedElement<T> {
    pub element: ExtendedBlochElement<T>,
    /// ξ = mᵗ(Cu − Dv); `None` when m = 0 (ξ = 0 exactly, the two ξ terms cancel).
    pub xi: Option<Complex<T>>,
    /// The principal logarithm of 1 − e^ξ.
    pub xi_prime: Option<Complex<T>>,
    /// ξ = αᵗu + βᵗv.
    pub alpha: Vec<BigInt>,
    pub beta: Vec<BigInt>,
    pub ledger: WedgeLedger<T>,
}

/// Σ [u_j, v_j] + [ξ, ξ′] + [−ξ, ξ′ − ξ + πi] with ξ = (1/πi)(Au − Bv)ᵗ(Cu − Dv).
pub fn extended_element<T: Real>(p: &HalfSymplecticPair<T>) -> Result<ExtendedElement<T>> {
    let n = p.len();
    let cd = &p.completion;
    let m: Vec<BigInt> = p.m.iter().map(|&x| BigInt::from(x)).collect();
    // α = Cᵗm, β = −Dᵗm
    let alpha: Vec<BigInt> = (0..n).map(|j| (0..n).map(|i| &cd[(i, j)] * &m[i]).sum()).collect();
    let beta: Vec<BigInt> = (0..n).map(|j| -(0..n).map(|i| &cd[(i, n + j)] * &m[i]).sum::<BigInt>()).collect();
    let mut terms = Vec::new();
    let mut xi = cx(T::zero(), T::zero());
    for (j, pt) in p.points.iter().enumerate() {
        match pt {
            Some(pt) => {
                terms.push((1, *pt));
                xi = xi + pt.u * T::from_big(&alpha[j]) + pt.v * T::from_big(&beta[j]);
            }
            None if !beta[j].is_zero() => {
                return Err(NzError::Degenerate(format!("ξ involves log(1 − z) of the degenerate shape {j}")));
            }
            None => {}
        }
    }
    let (xi, xi_prime) = if m.iter().all(Zero::is_zero) {
        (None, None)
    } else {
        let w = cx(T::one(), T::zero()) - xi.exp();
        if w.norm() <= default_tolerance::<T>() {
            return Err(NzError::Degenerate("e^ξ = 1 for a non-zero ξ".into()));
        }
        let xp = w.ln();
        terms.push((1, LoggedPoint::new(xi, xp)?));
        terms.push((1, LoggedPoint::new(-xi, xp - xi + ipi::<T>())?));
        (Some(xi), Some(xp))
    };
    let element = ExtendedBlochElement { terms };
    let ledger = pair_ledger(p, &alpha, &beta, xi_prime)?;
    Ok(ExtendedElement { element, xi, xi_prime, alpha, beta, ledger })
}

/// The extended regulator of the pair's element, mod 4π².
pub fn pair_regulator<T: Real>(p: &HalfSymplecticPair<T>) -> Result<Complex<T>> {
    extended_element(p)?.element.regulator()
}

/// r with a − b ≡ r·π² (mod 4π²), r of denominator ≤ 8, if the imaginary parts agree to `tol`.
pub fn torsion_difference<T: Real>(a: Complex<T>, b: Complex<T>, tol: f64) -> Option<BigRational> {
    let d = reduce_mod_4pi2(a - b);
    if !(d.im.abs().as_f64() < tol) {
        return None;
    }
    let x = (d.re / (T::PI() * T::PI())).as_f64();
    let r = recognize_rational(x, 8, tol)?;
    // 4 ≡ 0
    let four = BigRational::from_integer(BigInt::from(4));
    Some(if r >= four { r - four } else { r })
}

// ---------------------------------------------------------------------------

/// Logarithm symbols and the coordinates of every term over them.
#[derive(Clone, Debug, PartialEq)]
pub struct WedgeLedger<T> {
    pub names: Vec<String>,
    /// Numerical values of the basis symbols, used to confirm each coordinate.
    pub values: Option<Vec<Complex<T>>>,
    /// (u, v) coordinates of each term of the element, in term order.
    pub coords: Vec<(Vec<BigInt>, Vec<BigInt>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WedgeVerdict {
    /// Σ n·(u ∧ v) vanishes in the antisymmetric square.
    pub vanishes: bool,
    /// Non-zero coefficients of λ_i ∧ λ_j, i < j.
    pub free: Vec<(usize, usize, BigInt)>,
    /// Symbols λ_i with an odd coefficient on λ_i ∧ λ_i. These are 2-torsion
    /// over a free basis and vanish for complex numbers, since x ∧ x = 4(x/2 ∧ x/2) = 0.
    pub torsion: Vec<usize>,
}

/// Exact value of d̂(E) = Σ n·(u ∧ v) over the ledger basis.
pub fn wedge_check<T: Real>(e: &ExtendedBlochElement<T>, l: &WedgeLedger<T>) -> Result<WedgeVerdict> {
    let r = l.names.len();
    if l.coords.len() != e.terms.len() {
        return Err(NzError::Shape(format!("ledger has {} terms, element {}", l.coords.len(), e.terms.len())));
    }
    for (k, ((_, p), (cu, cv))) in e.terms.iter().zip(&l.coords).enumerate() {
        if cu.len() != r || cv.len() != r {
            return Err(NzError::Shape(format!("term {k}: coordinates of the wrong length")));
        }
        if let Some(vals) = &l.values {
            let eval = |c: &[BigInt]| c.iter().zip(vals).fold(cx(T::zero(), T::zero()), |s, (k, v)| s + *v * T::from_big(k));
            let scale = T::one() + vals.iter().fold(T::zero(), |s, v| s + v.norm()) * T::from_int(cu.iter().chain(cv).map(|x| big(x).abs()).sum::<i64>().max(1));
            let tol = default_tolerance::<T>() * scale;
            if !((eval(cu) - p.u).norm() <= tol && (eval(cv) - p.v).norm() <= tol) {
                return Err(NzError::Invalid(format!("term {k} is not expressible over the ledger basis")));
            }
        }
    }
    let mut w: BTreeMap<(usize, usize), BigInt> = BTreeMap::new();
    for ((c, _), (cu, cv)) in e.terms.iter().zip(&l.coords) {
        for (i, a) in cu.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in cv.iter().enumerate().filter(|(_, b)| !b.is_zero()) {
                let x = a * b * BigInt::from(*c);
                // λ_j ∧ λ_i = −λ_i ∧ λ_j
                let (key, x) = if i <= j { ((i, j), x) } else { ((j, i), -x) };
                *w.entry(key).or_insert_with(BigInt::zero) += x;
            }
        }
    }
    let free: Vec<(usize, usize, BigInt)> = w.iter().filter(|((i, j), x)| i != j && !x.is_zero()).map(|(&(i, j), x)| (i, j, x.clone())).collect();
    let torsion: Vec<usize> = w.iter().filter(|((i, j), x)| i == j && x.is_odd()).map(|(&(i, _), _)| i).collect();
    Ok(WedgeVerdict { vanishes: free.is_empty(), free, torsion })
}

// Symbols u_1..u_N, v_1..v_N, πi modulo the relations Au − Bv = πi·m (and u_j = 0
// on degenerate shapes); the basis is dual to the integer kernel of the relations.
fn pair_ledger<T: Real>(p: &HalfSymplecticPair<T>, alpha: &[BigInt], beta: &[BigInt], xi_prime: Option<Complex<T>>) -> Result<WedgeLedger<T>> {
    let n = p.len();
    let (a, b) = split_half(&p.h)?;
    let mut rel: Vec<Vec<BigInt>> = Vec::new();
    for i in 0..n {
        let mut row = vec![BigInt::zero(); 2 * n + 1];
        for j in 0..n {
            row[j] = a[(i, j)].clone();
            row[n + j] = -&b[(i, j)];
        }
        row[2 * n] = BigInt::from(-p.m[i]);
        rel.push(row);
    }
    for (j, pt) in p.points.iter().enumerate() {
        if pt.is_none() {
            let mut row = vec![BigInt::zero(); 2 * n + 1];
            row[j] = BigInt::one();
            rel.push(row);
        }
    }
    let (_, kernel) = rank_and_kernel(&IntMatrix::from_big_rows(rel, 2 * n + 1)?);
    let r = kernel.len();
    let coord = |s: usize| -> Vec<BigInt> {
        let mut c: Vec<BigInt> = kernel.iter().map(|k| k[s].clone()).collect();
        c.push(BigInt::zero());
        c
    };
    // numerical basis values λ from r independent symbol rows
    let sigma: Vec<Complex<T>> = (0..2 * n + 1)
        .map(|s| {
            if s == 2 * n {
                ipi()
            } else if s < n {
                p.points[s].map_or(cx(T::zero(), T::zero()), |q| q.u)
            } else {
                p.points[s - n].map_or(cx(T::zero(), T::zero()), |q| q.v)
            }
        })
        .collect();
    let mut chosen: Vec<usize> = Vec::new();
    for s in 0..2 * n + 1 {
        let mut trial: Vec<Vec<BigInt>> = chosen.iter().map(|&t| kernel.iter().map(|k| k[t].clone()).collect()).collect();
        trial.push(kernel.iter().map(|k| k[s].clone()).collect());
        if r > 0 && IntMatrix::from_big_rows(trial.clone(), r)?.rank() == trial.len() {
            chosen.push(s);
        }
        if chosen.len() == r {
            break;
        }
    }
    let mat: Vec<Vec<Complex<T>>> = chosen.iter().map(|&s| kernel.iter().map(|k| cx(T::from_big(&k[s]), T::zero())).collect()).collect();
    let rhs: Vec<Complex<T>> = chosen.iter().map(|&s| sigma[s]).collect();
    let mut values = if r > 0 { lu_solve(mat, rhs, |x: &Complex<T>| x.norm().as_f64())? } else { vec![] };
    values.push(xi_prime.unwrap_or(cx(T::zero(), T::zero())));
    let mut names: Vec<String> = (1..=r).map(|k| format!("λ{k}")).collect();
    names.push("ξ′".into());

    let mut coords = Vec::new();
    for (j, pt) in p.points.iter().enumerate() {
        if pt.is_some() {
            coords.push((coord(j), coord(n + j)));
        }
    }
    if xi_prime.is_some() {
        let mut xc = vec![BigInt::zero(); r + 1];
        for j in 0..n {
            for (k, x) in coord(j).iter().enumerate() {
                xc[k] += &alpha[j] * x;
            }
            for (k, x) in coord(n + j).iter().enumerate() {
                xc[k] += &beta[j] * x;
            }
        }
        let mut ep = vec![BigInt::zero(); r + 1];
        ep[r] = BigInt::one();
        let neg: Vec<BigInt> = xc.iter().map(|x| -x).collect();
        let pi = coord(2 * n);
        let second: Vec<BigInt> = (0..=r).map(|k| &ep[k] - &xc[k] + &pi[k]).collect();
        coords.push((xc, ep));
        coords.push((neg, second));
    }
    Ok(WedgeLedger { names, values: Some(values), coords })
}

/// d̂ of the pair's element over the relations of the pair.
pub fn pair_wedge_check<T: Real>(p: &HalfSymplecticPair<T>) -> Result<WedgeVerdict> {
    let e = extended_element(p)?;
    wedge_check(&e.element, &e.ledger)
}

// ---------------------------------------------------------------------------

/// Equivalence moves on pairs.
#[derive(Clone, Debug, PartialEq)]
pub enum Move {
    /// A ⊕ (1), B ⊕ (0), new shape z = 1.
    Stabilize,
    /// Inverse of `Stabilize` on a trailing degenerate shape.
    Unstabilize,
    /// H ↦ G·H for G in GL_N(Z).
    LeftUnimodular(IntMatrix),
    /// New column k is old column σ[k].
    Renumber(Vec<usize>),
    /// Replace z_j by z_j, 1/(1 − z_j) or 1 − 1/z_j for k = 0, 1, 2.
    RotateShape(usize, u8),
}

fn cols(m: &IntMatrix, idx: &[usize]) -> IntMatrix {
    m.select_cols(idx)
}

pub fn apply_move<T: Real>(p: &HalfSymplecticPair<T>, mv: &Move) -> Result<HalfSymplecticPair<T>> {
    let n = p.len();
    let (a, b) = split_half(&p.h)?;
    let (c, d) = split_half(&p.completion)?;
    let out = match mv {
        Move::Stabilize => {
            let grow = |m: &IntMatrix, corner: i64| {
                let mut g = IntMatrix::zeros(n + 1, n + 1);
                for i in 0..n {
                    for j in 0..n {
                        g[(i, j)] = m[(i, j)].clone();
                    }
                }
                g[(n, n)] = BigInt::from(corner);
                g
            };
            let h = grow(&a, 1).hstack(&grow(&b, 0));
            let cd = grow(&c, 0).hstack(&grow(&d, 1));
            let mut pts = p.points.clone();
            pts.push(None);
            HalfSymplecticPair::with_parts(h, pts, cd)?
        }
        Move::Unstabilize => {
            let j = n.checked_sub(1).ok_or_else(|| NzError::Invalid("empty pair".into()))?;
            let standard = p.points[j].is_none()
                && (0..n).all(|k| a[(j, k)] == BigInt::from((k == j) as i64) && a[(k, j)] == BigInt::from((k == j) as i64))
                && (0..n).all(|k| b[(j, k)].is_zero() && b[(k, j)].is_zero());
            if !standard {
                return Err(NzError::Invalid("last shape is not a stabilization".into()));
            }
            let keep: Vec<usize> = (0..j).collect();
            let shrink = |m: &IntMatrix| m.select_rows(&keep).select_cols(&keep);
            let h = shrink(&a).hstack(&shrink(&b));
            let cd = shrink(&c).hstack(&shrink(&d));
            let pts = p.points[..j].to_vec();
            if SymplecticForm::new(j).is_symplectic(&h.vstack(&cd)) {
                HalfSymplecticPair::with_parts(h, pts, cd)?
            } else {
                HalfSymplecticPair::new(h, pts)?
            }
        }
        Move::LeftUnimodular(g) => {
            if g.shape() != (n, n) || !g.is_unimodular() {
                return Err(NzError::Invalid("G must be an N x N unimodular matrix".into()));
            }
            let git = g.unimodular_inverse()?.transpose();
            let h = (g * &a).hstack(&(g * &b));
            let cd = (&git * &c).hstack(&(&git * &d));
            HalfSymplecticPair::with_parts(h, p.points.clone(), cd)?
        }
        Move::Renumber(sigma) => {
            let mut seen = vec![false; n];
            if sigma.len() != n || !sigma.iter().all(|&s| s < n && !std::mem::replace(&mut seen[s], true)) {
                return Err(NzError::Invalid("not a permutation".into()));
            }
            let h = cols(&a, sigma).hstack(&cols(&b, sigma));
            let cd = cols(&c, sigma).hstack(&cols(&d, sigma));
            let pts = sigma.iter().map(|&s| p.points[s]).collect();
            HalfSymplecticPair::with_parts(h, pts, cd)?
        }
        Move::RotateShape(j, k) => {
            let (j, k) = (*j, *k);
            if j >= n || k > 2 {
                return Err(NzError::Invalid(format!("rotate needs j < {n} and k in 0..=2")));
            }
            let mut q = p.clone();
            for _ in 0..k {
                q = rotate_once(&q, j)?;
            }
            q
        }
    };
    Ok(out)
}

// z ↦ 1/(1 − z): (u, v) ↦ (−v, u − v + πi); columns (a, b) ↦ (b − a, −a), likewise (c, d).
fn rotate_once<T: Real>(p: &HalfSymplecticPair<T>, j: usize) -> Result<HalfSymplecticPair<T>> {
    let n = p.len();
    let pt = p.points[j].ok_or_else(|| NzError::Degenerate(format!("shape {j} is degenerate and cannot be rotated")))?;
    let mut h = p.h.clone();
    let mut cd = p.completion.clone();
    for m in [&mut h, &mut cd] {
        for i in 0..n {
            let (x, y) = (m[(i, j)].clone(), m[(i, n + j)].clone());
            m[(i, j)] = &y - &x;
            m[(i, n + j)] = -x;
        }
    }
    let mut pts = p.points.clone();
    pts[j] = Some(LoggedPoint::new(-pt.v, pt.u - pt.v + ipi::<T>())?);
    HalfSymplecticPair::with_parts(h, pts, cd)
}

// ---------------------------------------------------------------------------

/// Labels of the five vertices of the bipyramid: 0 = apex of the first
/// tetrahedron, 1 = apex of the second, 2..5 = the shared face.
struct Bipyramid {
    ta: usize,
    tb: usize,
    /// label of each vertex of ta, tb
    la: [usize; 4],
    lb: [usize; 4],
    /// labels of the vertices of the three new tetrahedra
    new: [[usize; 4]; 3],
}

fn orient(l: &[usize; 4]) -> f64 {
    let pos = |k: usize| -> [f64; 3] {
        match k {
            0 => [0.0, 0.0, 1.0],
            1 => [0.0, 0.0, -1.0],
            _ => {
                let t = std::f64::consts::TAU * (k - 2) as f64 / 3.0;
                [t.cos(), t.sin(), 0.0]
            }
        }
    };
    let p: Vec<[f64; 3]> = l.iter().map(|&k| pos(k)).collect();
    let d = |i: usize, c: usize| p[i][c] - p[0][c];
    d(1, 0) * (d(2, 1) * d(3, 2) - d(2, 2) * d(3, 1)) - d(1, 1) * (d(2, 0) * d(3, 2) - d(2, 2) * d(3, 0))
        + d(1, 2) * (d(2, 0) * d(3, 1) - d(2, 1) * d(3, 0))
}

fn bipyramid(t: &Triangulation, tet: usize, face: usize) -> Result<Bipyramid> {
    if tet >= t.tet_count() || face > 3 {
        return Err(NzError::Invalid(format!("no face {face} on tetrahedron {tet}")));
    }
    let tb = t.neighbour(tet, face);
    if tb == tet {
        return Err(NzError::Invalid("the face is glued to its own tetrahedron; the 2–3 move needs two distinct tetrahedra".into()));
    }
    let g = t.gluing(tet, face);
    let others: Vec<usize> = (0..4).filter(|&v| v != face).collect();
    let mut la = [0; 4];
    let mut lb = [0; 4];
    la[face] = 0;
    lb[g[face]] = 1;
    for (i, &v) in others.iter().enumerate() {
        la[v] = 2 + i;
        lb[g[v]] = 2 + i;
    }
    let sign = orient(&la).signum();
    debug_assert_eq!(orient(&lb).signum(), sign, "glued tetrahedra are coherently oriented");
    let mut new = [[0; 4]; 3];
    for (k, slot) in new.iter_mut().enumerate() {
        let mut l = [0, 1, 2 + k, 2 + (k + 1) % 3];
        if orient(&l).signum() != sign {
            l.swap(2, 3);
        }
        *slot = l;
    }
    Ok(Bipyramid { ta: tet, tb, la, lb, new })
}

fn pos_of(l: &[usize; 4], label: usize) -> usize {
    l.iter().position(|&x| x == label).expect("label present")
}

/// Replaces the two tetrahedra sharing face `face` of `tet` by three around a new
/// edge. Untouched tetrahedra keep their order; the new ones are appended.
/// Peripheral rows are carried over: the shape parameter of an old tetrahedron at
/// an edge through its apex is the product of the two new ones at that edge.
pub fn pachner_23(t: &Triangulation, tet: usize, face: usize) -> Result<Triangulation> {
    let bp = bipyramid(t, tet, face)?;
    let n = t.tet_count();
    let kept: Vec<usize> = (0..n).filter(|&x| x != bp.ta && x != bp.tb).collect();
    let index = |x: usize| kept.iter().position(|&k| k == x);
    let total = kept.len() + 3;
    let mut neighbour = vec![[usize::MAX; 4]; total];
    let mut gluing: Vec<[Perm; 4]> = vec![[[0; 4]; 4]; total];
    for (ni, &old) in kept.iter().enumerate() {
        for f in 0..4 {
            // faces on the bipyramid are overwritten below
            neighbour[ni][f] = index(t.neighbour(old, f)).unwrap_or(usize::MAX);
            gluing[ni][f] = t.gluing(old, f);
        }
    }
    // where an outer face (X, g) of the bipyramid lives now: (new tet, its face)
    let outer = |x: usize, g: usize| -> (usize, usize) {
        let (lx, apex) = if x == bp.ta { (&bp.la, 0) } else { (&bp.lb, 1) };
        let missing = lx[g];
        let k = (0..3).find(|&k| !bp.new[k].contains(&missing) && bp.new[k].contains(&apex)).expect("outer face");
        let other = if apex == 0 { 1 } else { 0 };
        (k, pos_of(&bp.new[k], other))
    };
    for k in 0..3 {
        let lk = bp.new[k];
        let me = kept.len() + k;
        for w in 0..4 {
            let lab = lk[w];
            let mut perm = [usize::MAX; 4];
            if lab >= 2 {
                // inner face {0, 1, x}: shared with the other new tetrahedron containing x
                let k2 = (0..3).find(|&k2| k2 != k && bp.new[k2].iter().filter(|l| lk.contains(l) && **l != lab).count() == 3).expect("inner face");
                for v in (0..4).filter(|&v| v != w) {
                    perm[v] = pos_of(&bp.new[k2], lk[v]);
                }
                let free = (0..4).find(|x| !perm.contains(x)).unwrap();
                perm[w] = free;
                neighbour[me][w] = kept.len() + k2;
                gluing[me][w] = perm;
                continue;
            }
            // outer face: belongs to the first (lab = 1) or second (lab = 0) old tetrahedron
            let (x, lx) = if lab == 1 { (bp.ta, bp.la) } else { (bp.tb, bp.lb) };
            let g = lx.iter().position(|&l| !lk.contains(&l)).expect("one vertex of X lies outside");
            let (y, q) = (t.neighbour(x, g), t.gluing(x, g));
            let (target, map): (usize, Box<dyn Fn(usize) -> usize>) = if y == bp.ta || y == bp.tb {
                let (k2, _) = outer(y, q[g]);
                let ly = if y == bp.ta { bp.la } else { bp.lb };
                let l2 = bp.new[k2];
                (kept.len() + k2, Box::new(move |vy: usize| pos_of(&l2, ly[vy])))
            } else {
                (index(y).unwrap(), Box::new(|vy: usize| vy))
            };
            for v in 0..4 {
                if v != w {
                    perm[v] = map(q[pos_of(&lx, lk[v])]);
                }
            }
            let free = (0..4).find(|x| !perm.contains(x)).unwrap();
            perm[w] = free;
            neighbour[me][w] = target;
            gluing[me][w] = perm;
            if y != bp.ta && y != bp.tb {
                let yi = index(y).unwrap();
                let f2 = perm[w];
                neighbour[yi][f2] = me;
                let mut inv = [0; 4];
                for (i, &x) in perm.iter().enumerate() {
                    inv[x] = i;
                }
                gluing[yi][f2] = inv;
            }
        }
    }
    let peripheral = match &t.peripheral {
        None => None,
        Some(p) => Some(transport_peripheral(p, &bp, &kept)?),
    };
    Triangulation::new(neighbour, gluing, peripheral)
}

fn transport_peripheral(p: &Peripheral, bp: &Bipyramid, kept: &[usize]) -> Result<Peripheral> {
    let h = p.m1.rows();
    let total = kept.len() + 3;
    let mut m1 = IntMatrix::zeros(h, total);
    let mut m2 = IntMatrix::zeros(h, total);
    let mut l1 = IntMatrix::zeros(h, total);
    let mut l2 = IntMatrix::zeros(h, total);
    let mut pi = p.pi_counts.clone();
    for (which, (src1, src2, dst1, dst2)) in [(&p.m1, &p.m2, &mut m1, &mut m2), (&p.l1, &p.l2, &mut l1, &mut l2)].into_iter().enumerate() {
        for r in 0..h {
            for (ni, &old) in kept.iter().enumerate() {
                dst1[(r, ni)] = src1[(r, old)].clone();
                dst2[(r, ni)] = src2[(r, old)].clone();
            }
            let mut c = 0i64;
            for (x, lx, apex) in [(bp.ta, bp.la, 0usize), (bp.tb, bp.lb, 1usize)] {
                let (a, b) = (big(&src1[(r, x)]), big(&src2[(r, x)]));
                // a·log z − b·log z′ in terms of the edge through the apex of each type
                let av = pos_of(&lx, apex);
                for (ty, kappa) in [(0usize, a), (1usize, -b)] {
                    if kappa == 0 {
                        continue;
                    }
                    let y = (0..4).find(|&y| y != av && edge_type(av, y) == ty).unwrap();
                    let ly = lx[y];
                    for k in 0..3 {
                        let lk = bp.new[k];
                        if !(lk.contains(&apex) && lk.contains(&ly)) {
                            continue;
                        }
                        let t2 = edge_type(pos_of(&lk, apex), pos_of(&lk, ly));
                        let col = kept.len() + k;
                        match t2 {
                            0 => dst1[(r, col)] += BigInt::from(kappa),
                            1 => dst2[(r, col)] -= BigInt::from(kappa),
                            _ => {
                                dst1[(r, col)] -= BigInt::from(kappa);
                                dst2[(r, col)] += BigInt::from(kappa);
                                c += kappa;
                            }
                        }
                    }
                }
            }
            pi[which * h + r] += c;
        }
    }
    Ok(Peripheral { m1, m2, l1, l2, pi_counts: pi })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PachnerReport<T> {
    pub triangulation: Triangulation,
    pub old_volume: T,
    pub new_volume: T,
    pub edge_classes: usize,
    /// |D(z_a) + D(z_b) − Σ D(w_k)| over the two removed and three new shapes.
    pub five_term_residual: T,
    pub old_regulator: Complex<T>,
    pub new_regulator: Complex<T>,
    /// Regulator difference as r·π² mod 4π², if recognized.
    pub torsion: Option<BigRational>,
    pub new_shapes: Vec<Complex<T>>,
}

/// Move, re-derive the gluing data, solve both sides and compare.
pub fn pachner_check<T: Real>(t: &Triangulation, tet: usize, face: usize) -> Result<PachnerReport<T>> {
    let bp = bipyramid(t, tet, face)?;
    let g0 = derive_edge_matrices(t)?;
    let s0 = geometry::solve_complete::<T>(&g0, None)?;
    let t1 = pachner_23(t, tet, face)?;
    let g1 = derive_edge_matrices(&t1)?;
    let s1 = geometry::solve_complete::<T>(&g1, None)?;
    let k0 = t.tet_count() - 2;
    let new_shapes = s1.z[k0..].to_vec();
    let flat = T::from_f(1e-8);
    if let Some(k) = new_shapes.iter().position(|z| z.im.abs() < flat) {
        return Err(NzError::Degenerate(format!("new tetrahedron {k} is flat at the complete structure")));
    }
    let d = |z: &Complex<T>| bloch_wigner(*z);
    let resid = (d(&s0.z[bp.ta]) + d(&s0.z[bp.tb]) - new_shapes.iter().map(d).fold(T::zero(), |a, b| a + b)).abs();
    let r0 = pair_regulator(&HalfSymplecticPair::from_gluing(&g0, &s0)?)?;
    let r1 = pair_regulator(&HalfSymplecticPair::from_gluing(&g1, &s1)?)?;
    Ok(PachnerReport {
        old_volume: geometry::volume(&s0),
        new_volume: geometry::volume(&s1),
        edge_classes: t1.edge_classes().len(),
        five_term_residual: resid,
        old_regulator: r0,
        new_regulator: r1,
        torsion: torsion_difference(r1, r0, 1e-8),
        new_shapes,
        triangulation: t1,
    })
}
