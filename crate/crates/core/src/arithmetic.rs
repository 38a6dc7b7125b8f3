//! Exact q-series, Nahm sums and the Nahm equation, ζ_F(2) for imaginary
//! quadratic fields, and rational recognition.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bloch::HalfSymplecticPair;
use crate::dilogarithm::{li2, LoggedPoint};
use crate::error::{NzError, Result};
use crate::scalar::Real;
use crate::zlinalg::IntMatrix;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Truncated series Σ_k coeffs[k]·q^{lead + k/κ}, exact for k ≤ order·κ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    pub lead: BigRational,
    pub kappa: u64,
    pub coeffs: Vec<BigRational>,
}

impl QSeries {
    /// A polynomial-like series with integer exponent step and the given order.
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a series carries at least one coefficient");
        QSeries { lead: BigRational::zero(), kappa: 1, coeffs }
    }

    pub fn one(order: usize) -> Self {
        let mut c = vec![BigRational::zero(); order + 1];
        c[0] = BigRational::one();
        QSeries::from_coeffs(c)
    }

    /// Truncation order, measured from the leading exponent.
    pub fn order(&self) -> BigRational {
        BigRational::new(BigInt::from(self.coeffs.len() as u64 - 1), BigInt::from(self.kappa))
    }

    /// Largest exponent whose coefficient is known.
    pub fn known_up_to(&self) -> BigRational {
        &self.lead + self.order()
    }

    pub fn exponent(&self, k: usize) -> BigRational {
        &self.lead + BigRational::new(BigInt::from(k as u64), BigInt::from(self.kappa))
    }

    /// Coefficient of q^e, `None` beyond the truncation or off the exponent grid.
    pub fn coeff(&self, e: &BigRational) -> Option<BigRational> {
        let k = (e - &self.lead) * rat(self.kappa as i64);
        if !k.is_integer() {
            return if e <= &self.known_up_to() { Some(BigRational::zero()) } else { None };
        }
        let k = k.to_integer();
        if k.is_negative() {
            return Some(BigRational::zero());
        }
        k.to_usize().and_then(|k| self.coeffs.get(k).cloned())
    }

    /// Same series on the finer grid q^{1/κ'} (κ' a multiple of κ).
    pub fn refine(&self, kappa: u64) -> Result<Self> {
        if !kappa.is_multiple_of(self.kappa) {
            return Err(NzError::Invalid(format!("cannot refine step 1/{} to 1/{kappa}", self.kappa)));
        }
        let r = (kappa / self.kappa) as usize;
        let mut c = vec![BigRational::zero(); (self.coeffs.len() - 1) * r + 1];
        for (k, x) in self.coeffs.iter().enumerate() {
            c[k * r] = x.clone();
        }
        Ok(QSeries { lead: self.lead.clone(), kappa, coeffs: c })
    }

    fn common(&self, o: &Self) -> Result<(Self, Self)> {
        let k = self.kappa.lcm(&o.kappa);
        let (a, b) = (self.refine(k)?, o.refine(k)?);
        let d = (&a.lead - &b.lead) * rat(k as i64);
        if !d.is_integer() {
            return Err(NzError::Invalid("leading exponents differ by a non-grid amount".into()));
        }
        Ok((a, b))
    }

    /// q^e · self.
    pub fn shift(&self, e: &BigRational) -> Self {
        QSeries { lead: &self.lead + e, ..self.clone() }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let (a, b) = self.common(o)?;
        let k = a.kappa as i64;
        let lead = if a.lead < b.lead { a.lead.clone() } else { b.lead.clone() };
        let top = if a.known_up_to() < b.known_up_to() { a.known_up_to() } else { b.known_up_to() };
        if top < lead {
            return Err(NzError::Invalid("series share no known coefficients".into()));
        }
        let len = ((&top - &lead) * rat(k)).to_integer().to_usize().expect("small order") + 1;
        let coeffs = (0..len)
            .map(|i| {
                let e = &lead + BigRational::new(BigInt::from(i as u64), BigInt::from(k));
                a.coeff(&e).unwrap() + b.coeff(&e).unwrap()
            })
            .collect();
        Ok(QSeries { lead, kappa: a.kappa, coeffs })
    }

    pub fn neg(&self) -> Self {
        QSeries { coeffs: self.coeffs.iter().map(|x| -x).collect(), ..self.clone() }
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    /// Product; the relative order is the smaller of the two.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        let k = self.kappa.lcm(&o.kappa);
        let (a, b) = (self.refine(k)?, o.refine(k)?);
        let len = a.coeffs.len().min(b.coeffs.len());
        let mut c = vec![BigRational::zero(); len];
        for (i, x) in a.coeffs.iter().enumerate().take(len) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate().take(len - i) {
                c[i + j] += x * y;
            }
        }
        Ok(QSeries { lead: &a.lead + &b.lead, kappa: k, coeffs: c })
    }

    /// Inverse of a series whose leading coefficient is non-zero.
    pub fn invert(&self) -> Result<Self> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(NzError::Domain("series inversion needs a non-zero leading coefficient".into()));
        }
        let n = self.coeffs.len();
        let mut out: Vec<BigRational> = Vec::with_capacity(n);
        out.push(c0.recip());
        for k in 1..n {
            let mut s = BigRational::zero();
            for j in 1..=k {
                s += &self.coeffs[j] * &out[k - j];
            }
            out.push(-s / c0);
        }
        Ok(QSeries { lead: -&self.lead, kappa: self.kappa, coeffs: out })
    }

    /// Non-zero terms as (exponent, coefficient).
    pub fn terms(&self) -> Vec<(BigRational, BigRational)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (self.exponent(k), c.clone())).collect()
    }
}

impl fmt::Display for QSeries {
    /// One "exponent coefficient" pair per line, zero coefficients included.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.coeffs.iter().enumerate() {
            writeln!(f, "{} {}", self.exponent(k), c)?;
        }
        Ok(())
    }
}

/// Integer coefficients of 1/(q)_n up to q^order.
fn inverse_pochhammer_int(n: usize, order: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); order + 1];
    c[0] = BigInt::one();
    for k in 1..=n.min(order) {
        // multiply by 1/(1 − q^k): running sums with stride k
        for i in k..=order {
            let prev = c[i - k].clone();
            c[i] += prev;
        }
    }
    c
}

/// (q)_n = (1 − q)(1 − q²)···(1 − qⁿ), truncated at q^order.
pub fn pochhammer(n: usize, order: usize) -> QSeries {
    let mut c = vec![BigInt::zero(); order + 1];
    c[0] = BigInt::one();
    for k in 1..=n {
        if k > order {
            break;
        }
        for i in (k..=order).rev() {
            let prev = c[i - k].clone();
            c[i] -= prev;
        }
    }
    QSeries::from_coeffs(c.into_iter().map(BigRational::from_integer).collect())
}

/// (A, b, c) of the sum Σ_{n ≥ 0} q^{½nᵗAn + bᵗn + c}/((q)_{n₁}···(q)_{n_N}).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NahmData {
    pub a: Vec<Vec<BigRational>>,
    pub b: Vec<BigRational>,
    pub c: BigRational,
}

/// Leading principal minors of a square rational matrix.
pub fn leading_minors(a: &[Vec<BigRational>]) -> Vec<BigRational> {
    (1..=a.len())
        .map(|k| {
            let m: Vec<Vec<BigRational>> = a[..k].iter().map(|r| r[..k].to_vec()).collect();
            rational_det(m)
        })
        .collect()
}

fn rational_det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !m[i][k].is_zero()) else {
            return BigRational::zero();
        };
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        let piv = m[k][k].clone();
        det *= &piv;
        for i in k + 1..n {
            let f = &m[i][k] / &piv;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let t = &f * &m[k][j];
                m[i][j] -= t;
            }
        }
    }
    det
}

fn rational_inverse(a: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(p, k);
        let piv = m[k][k].clone();
        for x in m[k].iter_mut() {
            *x = &*x / &piv;
        }
        for i in 0..n {
            if i != k && !m[i][k].is_zero() {
                let f = m[i][k].clone();
                for j in 0..2 * n {
                    let t = &f * &m[k][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

impl NahmData {
    pub fn new(a: Vec<Vec<BigRational>>, b: Vec<BigRational>, c: BigRational) -> Result<Self> {
        let n = a.len();
        if n == 0 || a.iter().any(|r| r.len() != n) || b.len() != n {
            return Err(NzError::Shape(format!("Nahm data needs an N x N matrix and length-N vector (N = {n})")));
        }
        for i in 0..n {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(NzError::Invalid(format!("A is not symmetric at ({j},{i})")));
                }
            }
        }
        if let Some(k) = leading_minors(&a).iter().position(|d| !d.is_positive()) {
            return Err(NzError::Invalid(format!("A is not positive definite (leading minor {} ≤ 0)", k + 1)));
        }
        Ok(NahmData { a, b, c })
    }

    /// Integer (A, b, c) convenience constructor.
    pub fn from_ints(a: &[Vec<i64>], b: &[i64], c: BigRational) -> Result<Self> {
        NahmData::new(a.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect(), b.iter().map(|&x| rat(x)).collect(), c)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// ½nᵗAn + bᵗn.
    pub fn exponent(&self, n: &[u64]) -> BigRational {
        let n: Vec<BigRational> = n.iter().map(|&x| rat(x as i64)).collect();
        let mut q = BigRational::zero();
        for i in 0..n.len() {
            for j in 0..n.len() {
                q += &self.a[i][j] * &n[i] * &n[j];
            }
        }
        q / rat(2) + self.b.iter().zip(&n).map(|(b, x)| b * x).sum::<BigRational>()
    }

    /// Exponent grid denominator: lcm of the denominators of ½A_ij n_in_j + b_in_i.
    fn kappa(&self) -> u64 {
        let mut k = BigInt::one();
        for (i, row) in self.a.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let y = if i == j { x / rat(2) } else { x.clone() };
                k = k.lcm(y.denom());
            }
        }
        for x in &self.b {
            k = k.lcm(x.denom());
        }
        k.to_u64().expect("exponent denominators fit in u64")
    }

    /// Radius R with ½nᵗAn + bᵗn > order whenever |n| > R (λ_min ≥ 1/tr A⁻¹).
    fn radius(&self, order: usize) -> f64 {
        let inv = rational_inverse(&self.a).expect("positive definite");
        let tr: f64 = (0..self.dim()).map(|i| inv[i][i].to_f64().unwrap()).sum();
        let lam = 1.0 / tr;
        let bn = self.b.iter().map(|x| x.to_f64().unwrap().powi(2)).sum::<f64>().sqrt();
        (bn + (bn * bn + 2.0 * lam * order as f64).sqrt()) / lam
    }
}

const MAX_LATTICE_POINTS: u64 = 50_000_000;

/// F_{A,b,c}(q) exactly, through all exponents ≤ c + order.
pub fn nahm_sum(d: &NahmData, order: usize) -> Result<QSeries> {
    let n = d.dim();
    let kappa = d.kappa();
    let r = d.radius(order).floor() as u64 + 1;
    if (r + 1).checked_pow(n as u32).is_none_or(|t| t > MAX_LATTICE_POINTS) {
        return Err(NzError::Invalid(format!("lattice box of radius {r} in dimension {n} is too large")));
    }
    let limit = rat(order as i64);
    // collect (exponent, n) with exponent ≤ order
    let mut pts: Vec<(BigRational, Vec<u64>)> = Vec::new();
    let mut idx = vec![0u64; n];
    loop {
        let e = d.exponent(&idx);
        if e <= limit {
            pts.push((e, idx.clone()));
        }
        let mut k = 0;
        loop {
            if k == n {
                break;
            }
            idx[k] += 1;
            if idx[k] <= r {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    let emin = pts.iter().map(|(e, _)| e.clone()).min().expect("n = 0 always qualifies");
    let span = ((&limit - &emin) * rat(kappa as i64)).to_integer().to_usize().expect("small order");
    let top = (&limit - &emin).floor().to_integer().to_usize().expect("small order");
    let maxn = pts.iter().flat_map(|(_, v)| v.iter().copied()).max().unwrap_or(0) as usize;
    let inv: Vec<Vec<BigInt>> = (0..=maxn).map(|k| inverse_pochhammer_int(k, top)).collect();
    let mut acc = vec![BigInt::zero(); span + 1];
    for (e, v) in &pts {
        // product of the 1/(q)_{n_i} up to the remaining order
        let room = (&limit - e).floor().to_integer().to_usize().expect("small order");
        let mut prod = vec![BigInt::zero(); room + 1];
        prod[0] = BigInt::one();
        for &ni in v {
            if ni == 0 {
                continue;
            }
            let f = &inv[ni as usize];
            let mut next = vec![BigInt::zero(); room + 1];
            for (i, x) in prod.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for j in 0..=room - i {
                    next[i + j] += x * &f[j];
                }
            }
            prod = next;
        }
        let base = ((e - &emin) * rat(kappa as i64)).to_integer().to_usize().unwrap();
        for (j, x) in prod.into_iter().enumerate() {
            acc[base + j * kappa as usize] += x;
        }
    }
    // coarsest grid carrying every non-zero term
    let g = acc.iter().enumerate().filter(|(_, x)| !x.is_zero()).fold(kappa as usize, |g, (k, _)| g.gcd(&k));
    let coeffs = acc.into_iter().step_by(g).map(BigRational::from_integer).collect();
    Ok(QSeries { lead: &d.c + emin, kappa: kappa / g as u64, coeffs })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NahmSolution<T> {
    pub z: Vec<T>,
    /// max_i |log(1 − z_i) − Σ_j a_ij log z_j|.
    pub residual: T,
    pub iterations: usize,
}

// Ψ(x) = Σ Li₂(e^{x_i}) + ½xᵗAx is strictly convex on x < 0 and ∇Ψ = 0 is the Nahm equation.
fn nahm_objective<T: Real>(a: &[Vec<T>], x: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..x.len() {
        s += li2(Complex::new(x[i].exp(), T::zero())).re;
        for j in 0..x.len() {
            s += a[i][j] * x[i] * x[j] / T::from_int(2);
        }
    }
    s
}

fn nahm_residual<T: Real>(a: &[Vec<T>], x: &[T]) -> Vec<T> {
    (0..x.len())
        .map(|i| {
            let lhs = (T::one() - x[i].exp()).ln();
            lhs - (0..x.len()).map(|j| a[i][j] * x[j]).fold(T::zero(), |p, q| p + q)
        })
        .collect()
}

/// The solution of 1 − z_i = ∏_j z_j^{a_ij} in (0, 1)^N, by damped Newton on
/// x = log z with an Armijo line search on the convex potential.
pub fn nahm_solve<T: Real>(a: &[Vec<BigRational>]) -> Result<NahmSolution<T>> {
    let start = vec![T::from_f(-0.5); a.len()];
    nahm_solve_from(a, &start)
}

/// As `nahm_solve`, starting from the given logarithms (all negative).
pub fn nahm_solve_from<T: Real>(a: &[Vec<BigRational>], start: &[T]) -> Result<NahmSolution<T>> {
    let data = NahmData::new(a.to_vec(), vec![BigRational::zero(); a.len()], BigRational::zero())?;
    let n = data.dim();
    if start.len() != n || start.iter().any(|x| !(*x < T::zero())) {
        return Err(NzError::Invalid("starting logs must be negative, one per row".into()));
    }
    let at: Vec<Vec<T>> = data.a.iter().map(|r| r.iter().map(T::from_ratio).collect()).collect();
    let tol = T::epsilon() * T::from_int(64);
    let mut x = start.to_vec();
    let mut psi = nahm_objective(&at, &x);
    for it in 0..200 {
        let f = nahm_residual(&at, &x);
        let res = f.iter().fold(T::zero(), |m, r| m.max(r.abs()));
        if res < tol {
            return Ok(NahmSolution { z: x.iter().map(|v| v.exp()).collect(), residual: res, iterations: it });
        }
        // Jacobian of f is −(diag(z/(1−z)) + A); step solves (diag + A)·dx = f
        let jac: Vec<Vec<T>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = if i == j {
                            let z = x[i].exp();
                            z / (T::one() - z)
                        } else {
                            T::zero()
                        };
                        at[i][j] + d
                    })
                    .collect()
            })
            .collect();
        let dx = crate::dense::lu_solve(jac, f.clone(), |v: &T| v.abs().as_f64())?;
        let slope: T = dx.iter().zip(&f).map(|(d, g)| -*d * *g).fold(T::zero(), |p, q| p + q);
        let mut lam = T::one();
        let mut moved = false;
        for _ in 0..60 {
            let xn: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a + d * lam).collect();
            if xn.iter().all(|v| *v < T::zero()) {
                let pn = nahm_objective(&at, &xn);
                if pn <= psi + slope * lam * T::from_f(1e-4) || res < T::from_f(1e-6) {
                    x = xn;
                    psi = pn;
                    moved = true;
                    break;
                }
            }
            lam /= T::from_int(2);
        }
        if !moved {
            return Err(NzError::NoConvergence(format!("Nahm line search stalled at residual {:e}", res.as_f64())));
        }
    }
    Err(NzError::NoConvergence("Nahm Newton did not converge in 200 steps".into()))
}

/// The pair (H, x) with H = (I | A) and x = 1 − z: the generalized gluing
/// equations x_i = (−1)^{a_ii} ∏ (1 − x_j)^{a_ij} are the Nahm equation for z
/// when every a_ii is even. Odd diagonal entries put the sign −1 on a row,
/// which no Nahm solution satisfies; that case is reported with the parity.
pub fn nahm_to_halfsymplectic<T: Real>(a: &IntMatrix, z: &[T]) -> Result<HalfSymplecticPair<T>> {
    let n = a.rows();
    if !a.is_square() || z.len() != n {
        return Err(NzError::Shape(format!("{}x{} matrix with {} shapes", a.rows(), a.cols(), z.len())));
    }
    if !a.is_symmetric() {
        return Err(NzError::NotHalfSymplectic("(I | A) needs A symmetric".into()));
    }
    let odd: Vec<usize> = (0..n).filter(|&i| a[(i, i)].is_odd()).collect();
    if !odd.is_empty() {
        return Err(NzError::Invalid(format!(
            "(ABᵗ)_ii = a_ii is odd on rows {odd:?}: the generalized equation carries the sign −1 there, \
             while the Nahm equation has +1"
        )));
    }
    let h = IntMatrix::identity(n).hstack(a);
    let points = z
        .iter()
        .map(|&zi| {
            if !(zi > T::zero() && zi < T::one()) {
                return Err(NzError::Domain("Nahm shapes must lie in (0, 1)".into()));
            }
            let x = T::one() - zi;
            LoggedPoint::new(Complex::new(x.ln(), T::zero()), Complex::new(zi.ln(), T::zero())).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    HalfSymplecticPair::new(h, points)
}

/// Kronecker symbol (D/n) for n ≥ 1.
pub fn kronecker(d: i64, n: u64) -> i64 {
    let mut n = n;
    let mut out = 1i64;
    while n.is_multiple_of(2) {
        n /= 2;
        if d % 2 == 0 {
            return 0;
        }
        if matches!(d.rem_euclid(8), 3 | 5) {
            out = -out;
        }
    }
    out * jacobi(d.rem_euclid(n as i64), n as i64)
}

fn jacobi(mut a: i64, mut n: i64) -> i64 {
    if n == 1 {
        return 1;
    }
    let mut s = 1;
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                s = -s;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            s = -s;
        }
        a %= n;
    }
    if n == 1 {
        s
    } else {
        0
    }
}

fn squarefree(mut m: u64) -> bool {
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p * p) {
            return false;
        }
        if m.is_multiple_of(p) {
            m /= p;
        }
        p += 1;
    }
    true
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 || d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaValue {
    /// ζ_F(2) = ζ(2)·L(2, χ_D).
    pub value: f64,
    pub l_value: f64,
    /// Bound on the neglected tail of the L-series, times ζ(2).
    pub tail_bound: f64,
    pub terms: u64,
}

/// ζ_F(2) for F = Q(√D), D a negative fundamental discriminant.
pub fn zeta_quadratic(d: i64, terms: u64) -> Result<ZetaValue> {
    if d >= 0 || !is_fundamental_discriminant(d) {
        return Err(NzError::Domain(format!("{d} is not a negative fundamental discriminant")));
    }
    if terms == 0 {
        return Err(NzError::Invalid("need at least one term".into()));
    }
    let period = d.unsigned_abs();
    let chi: Vec<i64> = (0..period).map(|r| if r == 0 { 0 } else { kronecker(d, r) }).collect();
    // sum from the small terms upwards would lose nothing here; go top-down for accuracy
    let mut s = 0.0f64;
    let mut comp = 0.0f64;
    for n in (1..=terms).rev() {
        let c = chi[(n % period) as usize];
        if c != 0 {
            let t = c as f64 / (n as f64 * n as f64) - comp;
            let y = s + t;
            comp = (y - s) - t;
            s = y;
        }
    }
    // partial sums of χ over a period vanish and stay within |D|/2, so by Abel summation
    // the tail is at most |D|/N²
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let tail = period as f64 / (terms as f64 * terms as f64);
    Ok(ZetaValue { value: zeta2 * s, l_value: s, tail_bound: zeta2 * tail, terms })
}

/// First continued-fraction convergent p/q of x with q ≤ max_den and
/// |x − p/q| < tol.
pub fn recognize_rational(x: f64, max_den: u64, tol: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ab = BigInt::from(a as i64);
        let p2 = &ab * &p1 + &p0;
        let q2 = &ab * &q1 + &q0;
        if q2 > BigInt::from(max_den) {
            return None;
        }
        let cand = BigRational::new(p2.clone(), q2.clone());
        if (x - cand.to_f64().unwrap()).abs() < tol {
            return Some(cand);
        }
        let frac = r - a;
        if frac <= 0.0 {
            return None;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ints(s: &QSeries) -> Vec<i64> {
        s.coeffs.iter().map(|c| c.to_integer().to_i64().unwrap()).collect()
    }

    // brute force: expand the product of (1 − q^k) by explicit polynomial multiplication
    fn brute_poch(n: usize, order: usize) -> Vec<i64> {
        let mut p = vec![1i64];
        for k in 1..=n {
            let mut f = vec![0i64; k + 1];
            f[0] = 1;
            f[k] = -1;
            let mut out = vec![0i64; p.len() + k];
            for (i, a) in p.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            p = out;
        }
        p.resize(order + 1, 0);
        p.truncate(order + 1);
        p
    }

    #[test]
    fn pochhammer_small_cases() {
        assert_eq!(ints(&pochhammer(0, 5)), vec![1, 0, 0, 0, 0, 0]);
        assert_eq!(ints(&pochhammer(2, 4)), vec![1, -1, -1, 1, 0]);
        assert_eq!(ints(&pochhammer(5, 12)), brute_poch(5, 12));
        assert_eq!(ints(&pochhammer(5, 12))[7], brute_poch(5, 12)[7]);
    }

    #[test]
    fn pochhammer_times_inverse_is_one() {
        for n in [1, 3, 7, 20] {
            let p = pochhammer(n, 60);
            let prod = p.mul(&p.invert().unwrap()).unwrap();
            assert_eq!(prod, QSeries::one(60));
        }
    }

    #[test]
    fn first_rogers_ramanujan_coefficients() {
        let d = NahmData::from_ints(&[vec![2]], &[0], BigRational::zero()).unwrap();
        let s = nahm_sum(&d, 10).unwrap();
        assert_eq!(ints(&s), vec![1, 1, 1, 1, 2, 2, 3, 3, 4, 5, 6]);
    }

    // oracle: Σ_n q^{an²/2 + bn}/(q)_n with the series built from scratch
    fn one_dim_oracle(a: i64, b: i64, order: usize) -> Vec<i64> {
        let mut acc = vec![0i64; order + 1];
        for n in 0..=order as i64 {
            let e = a * n * n / 2 + b * n;
            if e > order as i64 {
                break;
            }
            let mut inv = vec![0i64; order + 1];
            inv[0] = 1;
            for k in 1..=n as usize {
                for i in k..=order {
                    inv[i] += inv[i - k];
                }
            }
            for i in 0..=order - e as usize {
                acc[i + e as usize] += inv[i];
            }
        }
        acc
    }

    #[test]
    fn one_dimensional_sums_match_oracle() {
        for (a, b) in [(2, 0), (2, 1), (4, 0), (4, -1), (6, 2)] {
            let d = NahmData::from_ints(&[vec![a]], &[b], BigRational::zero()).unwrap();
            let s = nahm_sum(&d, 100).unwrap();
            assert!(s.lead.is_zero());
            assert_eq!(ints(&s), one_dim_oracle(a, b, 100), "a={a} b={b}");
        }
    }

    #[test]
    fn c_shifts_only_the_exponent() {
        let c = BigRational::new(BigInt::from(-1), BigInt::from(60));
        let d0 = NahmData::from_ints(&[vec![2]], &[0], BigRational::zero()).unwrap();
        let d1 = NahmData::from_ints(&[vec![2]], &[0], c.clone()).unwrap();
        let (s0, s1) = (nahm_sum(&d0, 20).unwrap(), nahm_sum(&d1, 20).unwrap());
        assert_eq!(s1, s0.shift(&c));
    }

    #[test]
    fn rational_matrix_uses_fine_grid() {
        // A = (1), b = 1/2: exponents n²/2 + n/2 are integers, step stays 1
        let h = BigRational::new(BigInt::one(), BigInt::from(2));
        let d = NahmData::new(vec![vec![rat(1)]], vec![h], BigRational::zero()).unwrap();
        assert_eq!(nahm_sum(&d, 10).unwrap().kappa, 1);
        // A = (1/2): exponents n²/4 on a quarter grid
        let d = NahmData::new(vec![vec![BigRational::new(BigInt::one(), BigInt::from(2))]], vec![rat(0)], rat(0)).unwrap();
        let s = nahm_sum(&d, 4).unwrap();
        assert_eq!(s.kappa, 4);
        assert_eq!(s.coeff(&BigRational::new(BigInt::one(), BigInt::from(4))), Some(rat(1)));
    }

    #[test]
    fn non_positive_definite_rejected() {
        assert!(NahmData::from_ints(&[vec![1, 2], vec![2, 1]], &[0, 0], rat(0)).is_err());
        assert!(NahmData::from_ints(&[vec![1, 2], vec![3, 1]], &[0, 0], rat(0)).is_err());
    }

    #[test]
    fn nahm_solutions() {
        let s = nahm_solve::<f64>(&[vec![rat(1)]]).unwrap();
        assert!((s.z[0] - 0.5).abs() < 1e-15);
        let s = nahm_solve::<f64>(&[vec![rat(2)]]).unwrap();
        assert!((s.z[0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        let s = nahm_solve::<f64>(&[vec![rat(1), rat(0)], vec![rat(0), rat(1)]]).unwrap();
        assert!(s.z.iter().all(|z| (z - 0.5).abs() < 1e-15));
    }

    #[test]
    fn nahm_solution_is_unique_from_random_starts() {
        let a = vec![vec![rat(3), rat(1)], vec![rat(1), rat(2)]];
        let base = nahm_solve::<f64>(&a).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let st = vec![-rng.gen_range(0.01..6.0), -rng.gen_range(0.01..6.0)];
            let s = nahm_solve_from::<f64>(&a, &st).unwrap();
            for (x, y) in s.z.iter().zip(&base.z) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn nahm_pairs() {
        let z = nahm_solve::<f64>(&[vec![rat(2)]]).unwrap().z;
        let p = nahm_to_halfsymplectic(&IntMatrix::from_rows(&[[2]]), &z).unwrap();
        assert!(p.gluing_check().unwrap().pass);
        let z = nahm_solve::<f64>(&[vec![rat(1)]]).unwrap().z;
        let err = nahm_to_halfsymplectic(&IntMatrix::from_rows(&[[1]]), &z).unwrap_err();
        assert!(err.to_string().contains("odd"));
    }

    #[test]
    fn kronecker_characters() {
        let c: Vec<i64> = (1..=6).map(|n| kronecker(-3, n)).collect();
        assert_eq!(c, vec![1, -1, 0, 1, -1, 0]);
        let c: Vec<i64> = (1..=4).map(|n| kronecker(-4, n)).collect();
        assert_eq!(c, vec![1, 0, -1, 0]);
        assert_eq!(kronecker(-7, 2), 1);
        assert!(is_fundamental_discriminant(-3) && is_fundamental_discriminant(-4) && is_fundamental_discriminant(-8));
        assert!(!is_fundamental_discriminant(-12) && !is_fundamental_discriminant(-16) && !is_fundamental_discriminant(5 * 4));
    }

    #[test]
    fn zeta_values() {
        // Catalan's constant and L(2, χ₋₃) from their own series (alternating / period 3)
        let catalan: f64 = (0..2_000_000u64).map(|k| (if k % 2 == 0 { 1.0 } else { -1.0 }) / ((2 * k + 1) as f64).powi(2)).sum();
        let z4 = zeta_quadratic(-4, 1_000_000).unwrap();
        assert!((z4.l_value - catalan).abs() < 1e-11);
        assert!((z4.value - 1.5067030099).abs() < 1e-9);
        let z3 = zeta_quadratic(-3, 1_000_000).unwrap();
        assert!((z3.value - 1.2851910).abs() < 1e-6);
        assert!(z3.tail_bound < 1e-11);
        assert!(zeta_quadratic(-12, 10).is_err());
        assert!(zeta_quadratic(5, 10).is_err());
    }

    #[test]
    fn rational_recognition() {
        assert_eq!(recognize_rational(3.0000004, 10, 1e-6), Some(rat(3)));
        assert_eq!(recognize_rational(0.33333331, 10, 1e-6), Some(BigRational::new(BigInt::one(), BigInt::from(3))));
        assert_eq!(recognize_rational(std::f64::consts::PI, 10, 1e-6), None);
        assert_eq!(recognize_rational(-2.25, 8, 1e-9), Some(BigRational::new(BigInt::from(-9), BigInt::from(4))));
    }

    proptest! {
        #[test]
        fn series_product_is_commutative(a in proptest::collection::vec(-5i64..5, 1..12), b in proptest::collection::vec(-5i64..5, 1..12)) {
            let sa = QSeries::from_coeffs(a.iter().map(|&x| rat(x)).collect());
            let sb = QSeries::from_coeffs(b.iter().map(|&x| rat(x)).collect());
            prop_assert_eq!(sa.mul(&sb).unwrap(), sb.mul(&sa).unwrap());
        }

        #[test]
        fn recognizes_small_fractions(p in -50i64..50, q in 1i64..9) {
            let x = p as f64 / q as f64 + 1e-9;
            let r = recognize_rational(x, 8, 1e-7).unwrap();
            prop_assert_eq!(r, BigRational::new(BigInt::from(p), BigInt::from(q)));
        }
    }
}
