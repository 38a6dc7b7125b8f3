//! Ideal triangulations: face pairings, edge and cusp classes, gluing matrices,
//! the Neumann chain complex and the exact symplectic checks.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{NzError, Result};
use crate::zlinalg::{parse_from_lines, rank_and_kernel, IntMatrix, SymplecticForm};

pub type Perm = [usize; 4];

/// The six edges of a tetrahedron as vertex pairs.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Shape type of the edge (a, b): 0 → z, 1 → z′, 2 → z″.
pub fn edge_type(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 1) | (2, 3) => 0,
        (0, 2) | (1, 3) => 1,
        _ => 2,
    }
}

fn edge_index(a: usize, b: usize) -> usize {
    let key = (a.min(b), a.max(b));
    EDGES.iter().position(|&e| e == key).expect("distinct vertices")
}

pub fn perm_parity(p: &Perm) -> usize {
    let mut s = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                s ^= 1;
            }
        }
    }
    s
}

pub fn perm_inverse(p: &Perm) -> Perm {
    let mut q = [0; 4];
    for (i, &x) in p.iter().enumerate() {
        q[x] = i;
    }
    q
}

fn is_perm(p: &Perm) -> bool {
    let mut seen = [false; 4];
    p.iter().all(|&x| x < 4 && !std::mem::replace(&mut seen[x], true))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Fixture-supplied peripheral rows (h × N each) and their πi counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Peripheral {
    pub m1: IntMatrix,
    pub m2: IntMatrix,
    pub l1: IntMatrix,
    pub l2: IntMatrix,
    /// πi counts: h meridian values then h longitude values.
    pub pi_counts: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    n: usize,
    /// neighbour[t][f] = tetrahedron glued to face f of t.
    neighbour: Vec<[usize; 4]>,
    /// gluing[t][f] maps vertices of t to vertices of the neighbour.
    gluing: Vec<[Perm; 4]>,
    pub peripheral: Option<Peripheral>,
    edge_classes: Vec<Vec<(usize, usize, usize)>>,
    cusp_classes: Vec<Vec<(usize, usize)>>,
}

impl Triangulation {
    /// Validates the face pairing and computes edge and cusp classes.
    pub fn new(neighbour: Vec<[usize; 4]>, gluing: Vec<[Perm; 4]>, peripheral: Option<Peripheral>) -> Result<Self> {
        let n = neighbour.len();
        if n == 0 || gluing.len() != n {
            return Err(NzError::Triangulation("no tetrahedra".into()));
        }
        for t in 0..n {
            for f in 0..4 {
                let (t2, p) = (neighbour[t][f], gluing[t][f]);
                if t2 >= n {
                    return Err(NzError::Triangulation(format!("tet {t} face {f}: target tet {t2} out of range")));
                }
                if !is_perm(&p) {
                    return Err(NzError::Triangulation(format!("tet {t} face {f}: bad permutation {p:?}")));
                }
                let f2 = p[f];
                if t2 == t && f2 == f {
                    return Err(NzError::Triangulation(format!("tet {t} face {f} glued to itself")));
                }
                if neighbour[t2][f2] != t || gluing[t2][f2] != perm_inverse(&p) {
                    return Err(NzError::Triangulation(format!(
                        "gluing of tet {t} face {f} is not involutive"
                    )));
                }
                if perm_parity(&p) != 1 {
                    return Err(NzError::Triangulation(format!(
                        "tet {t} face {f}: orientation-reversing gluing {p:?}"
                    )));
                }
            }
        }
        let mut tri = Triangulation { n, neighbour, gluing, peripheral, edge_classes: vec![], cusp_classes: vec![] };
        tri.edge_classes = tri.compute_edge_classes();
        tri.cusp_classes = tri.compute_cusp_classes();
        if tri.edge_classes.len() != n {
            return Err(NzError::Triangulation(format!(
                "{} edge classes for {} tetrahedra",
                tri.edge_classes.len(),
                n
            )));
        }
        for (k, cusp) in tri.cusp_classes.iter().enumerate() {
            // Euler characteristic of the cusp link: V − E + F with E = 3F/2
            let f = cusp.len();
            let v = tri.edge_ends_at_cusp(k);
            if 2 * v != f {
                return Err(NzError::Triangulation(format!("cusp {k} is not a torus")));
            }
        }
        if let Some(p) = &tri.peripheral {
            let h = tri.cusp_classes.len();
            for m in [&p.m1, &p.m2, &p.l1, &p.l2] {
                if m.shape() != (h, n) {
                    return Err(NzError::Triangulation(format!(
                        "peripheral matrix is {}x{}, expected {h}x{n}",
                        m.rows(),
                        m.cols()
                    )));
                }
            }
            if p.pi_counts.len() != 2 * h {
                return Err(NzError::Triangulation("peripheral sign line needs 2h entries".into()));
            }
        }
        Ok(tri)
    }

    pub fn tet_count(&self) -> usize {
        self.n
    }
    pub fn cusp_count(&self) -> usize {
        self.cusp_classes.len()
    }
    pub fn neighbour(&self, t: usize, f: usize) -> usize {
        self.neighbour[t][f]
    }
    pub fn gluing(&self, t: usize, f: usize) -> Perm {
        self.gluing[t][f]
    }
    pub fn edge_classes(&self) -> &[Vec<(usize, usize, usize)>] {
        &self.edge_classes
    }
    pub fn cusp_classes(&self) -> &[Vec<(usize, usize)>] {
        &self.cusp_classes
    }

    pub fn edge_class_of(&self, t: usize, a: usize, b: usize) -> usize {
        let key = (t, a.min(b), a.max(b));
        self.edge_classes.iter().position(|c| c.contains(&key)).expect("edge belongs to a class")
    }

    pub fn cusp_of(&self, t: usize, v: usize) -> usize {
        self.cusp_classes.iter().position(|c| c.contains(&(t, v))).expect("vertex belongs to a cusp")
    }

    fn compute_edge_classes(&self) -> Vec<Vec<(usize, usize, usize)>> {
        let mut uf = UnionFind::new(6 * self.n);
        for t in 0..self.n {
            for f in 0..4 {
                let (t2, p) = (self.neighbour[t][f], self.gluing[t][f]);
                for &(a, b) in EDGES.iter().filter(|&&(a, b)| a != f && b != f) {
                    uf.union(6 * t + edge_index(a, b), 6 * t2 + edge_index(p[a], p[b]));
                }
            }
        }
        let mut classes: Vec<(usize, Vec<(usize, usize, usize)>)> = Vec::new();
        for t in 0..self.n {
            for (k, &(a, b)) in EDGES.iter().enumerate() {
                let r = uf.find(6 * t + k);
                match classes.iter_mut().find(|(root, _)| *root == r) {
                    Some((_, v)) => v.push((t, a, b)),
                    None => classes.push((r, vec![(t, a, b)])),
                }
            }
        }
        classes.into_iter().map(|(_, v)| v).collect()
    }

    fn compute_cusp_classes(&self) -> Vec<Vec<(usize, usize)>> {
        let mut uf = UnionFind::new(4 * self.n);
        for t in 0..self.n {
            for f in 0..4 {
                let (t2, p) = (self.neighbour[t][f], self.gluing[t][f]);
                for v in (0..4).filter(|&v| v != f) {
                    uf.union(4 * t + v, 4 * t2 + p[v]);
                }
            }
        }
        let mut classes: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
        for t in 0..self.n {
            for v in 0..4 {
                let r = uf.find(4 * t + v);
                match classes.iter_mut().find(|(root, _)| *root == r) {
                    Some((_, c)) => c.push((t, v)),
                    None => classes.push((r, vec![(t, v)])),
                }
            }
        }
        classes.into_iter().map(|(_, v)| v).collect()
    }

    /// Endpoints (cusp indices) of an edge class.
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let (t, a, b) = self.edge_classes[e][0];
        (self.cusp_of(t, a), self.cusp_of(t, b))
    }

    fn edge_ends_at_cusp(&self, k: usize) -> usize {
        (0..self.n)
            .map(|e| {
                let (a, b) = self.edge_endpoints(e);
                (a == k) as usize + (b == k) as usize
            })
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.cusp_count());
        for t in 0..self.n {
            for f in 0..4 {
                let p = self.gluing[t][f];
                let _ = writeln!(
                    s,
                    "face {f} -> tet {} face {} perm {}{}{}{}",
                    self.neighbour[t][f], p[f], p[0], p[1], p[2], p[3]
                );
            }
        }
        if let Some(p) = &self.peripheral {
            s.push_str("PERIPHERAL\n");
            for m in [&p.m1, &p.m2, &p.l1, &p.l2] {
                s.push_str(&m.to_text());
            }
            let c: Vec<String> = p.pi_counts.iter().map(|x| x.to_string()).collect();
            s.push_str(&c.join(" "));
            s.push('\n');
        }
        s
    }
}

fn parse_face_line(line: &str) -> Result<(usize, usize, usize, Perm)> {
    let bad = || NzError::Parse(format!("bad face line {line:?}"));
    let tok: Vec<&str> = line.split_whitespace().collect();
    if tok.len() != 9 || tok[0] != "face" || tok[2] != "->" || tok[3] != "tet" || tok[5] != "face" || tok[7] != "perm" {
        return Err(bad());
    }
    let k: usize = tok[1].parse().map_err(|_| bad())?;
    let t: usize = tok[4].parse().map_err(|_| bad())?;
    let f: usize = tok[6].parse().map_err(|_| bad())?;
    let digits: Vec<usize> = tok[8].chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<_>>().ok_or_else(bad)?;
    let p: Perm = digits.try_into().map_err(|_| bad())?;
    if k > 3 || f > 3 {
        return Err(bad());
    }
    if p[k] != f {
        return Err(NzError::Triangulation(format!("face line {line:?}: permutation does not send face {k} to face {f}")));
    }
    Ok((k, t, f, p))
}

/// Parses the `.tri` text format.
pub fn parse_triangulation(text: &str) -> Result<Triangulation> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).peekable();
    let head = lines.next().ok_or_else(|| NzError::Parse("empty input".into()))?;
    let hv: Vec<usize> = head
        .split_whitespace()
        .map(|x| x.parse().map_err(|_| NzError::Parse(format!("bad header {head:?}"))))
        .collect::<Result<_>>()?;
    let [n, h] = hv[..] else {
        return Err(NzError::Parse(format!("header must be \"N h\", got {head:?}")));
    };
    if n == 0 {
        return Err(NzError::Parse("N must be positive".into()));
    }
    let mut neighbour = vec![[usize::MAX; 4]; n];
    let mut gluing = vec![[[0; 4]; 4]; n];
    for t in 0..n {
        for _ in 0..4 {
            match lines.peek() {
                Some(l) if l.starts_with("face") => {}
                _ => return Err(NzError::Triangulation(format!("unglued face on tet {t}"))),
            }
            let (k, t2, _, p) = parse_face_line(lines.next().unwrap())?;
            if neighbour[t][k] != usize::MAX {
                return Err(NzError::Parse(format!("tet {t} face {k} given twice")));
            }
            neighbour[t][k] = t2;
            gluing[t][k] = p;
        }
    }
    let peripheral = match lines.next() {
        None => None,
        Some("PERIPHERAL") => {
            let mut ms = Vec::new();
            for _ in 0..4 {
                ms.push(parse_from_lines(&mut lines)?);
            }
            let sign = lines.next().ok_or_else(|| NzError::Parse("missing peripheral sign line".into()))?;
            let pi_counts: Vec<i64> = sign
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| NzError::Parse(format!("bad sign line {sign:?}"))))
                .collect::<Result<_>>()?;
            let l2 = ms.pop().unwrap();
            let l1 = ms.pop().unwrap();
            let m2 = ms.pop().unwrap();
            let m1 = ms.pop().unwrap();
            Some(Peripheral { m1, m2, l1, l2, pi_counts })
        }
        Some(other) => {
            if other.starts_with("face") {
                return Err(NzError::Parse(format!("more face lines than 4N: {other:?}")));
            }
            return Err(NzError::Parse(format!("unexpected line {other:?}")));
        }
    };
    if let Some(extra) = lines.next() {
        return Err(NzError::Parse(format!("trailing content {extra:?}")));
    }
    let tri = Triangulation::new(neighbour, gluing, peripheral)?;
    if tri.cusp_count() != h {
        return Err(NzError::Triangulation(format!("header declares {h} cusps, found {}", tri.cusp_count())));
    }
    Ok(tri)
}

// ---------------------------------------------------------------------------

/// One gluing equation in log form: a·u + b·v + iπ·c = 2πi·target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogRow {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub c: i64,
}

impl LogRow {
    pub fn zeros(n: usize) -> Self {
        LogRow { a: vec![0; n], b: vec![0; n], c: 0 }
    }

    /// Adds one tetrahedron-edge of the given shape type.
    pub fn add_incidence(&mut self, tet: usize, ty: usize, k: i64) {
        match ty {
            0 => self.a[tet] += k,
            1 => self.b[tet] -= k,
            _ => {
                self.a[tet] -= k;
                self.b[tet] += k;
                self.c += k;
            }
        }
    }

    pub fn combine(&self, k: i64, o: &LogRow, l: i64) -> LogRow {
        LogRow {
            a: self.a.iter().zip(&o.a).map(|(x, y)| k * x + l * y).collect(),
            b: self.b.iter().zip(&o.b).map(|(x, y)| k * x + l * y).collect(),
            c: k * self.c + l * o.c,
        }
    }

    /// (a | b) as a length-2N integer vector.
    pub fn coeffs(&self) -> Vec<BigInt> {
        self.a.iter().chain(&self.b).map(|&x| BigInt::from(x)).collect()
    }

    pub fn sign(&self) -> i64 {
        if self.c.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }
}

/// Log-form row of an edge meeting the listed (tetrahedron, shape type) pairs.
pub fn edge_row_from_incidences(n: usize, incidences: &[(usize, usize)]) -> LogRow {
    let mut r = LogRow::zeros(n);
    for &(t, ty) in incidences {
        r.add_incidence(t, ty, 1);
    }
    r
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingData {
    pub n: usize,
    pub h: usize,
    pub r1: IntMatrix,
    pub r2: IntMatrix,
    pub m1: IntMatrix,
    pub m2: IntMatrix,
    pub l1: IntMatrix,
    pub l2: IntMatrix,
    /// πi counts of the N edge rows, then h meridians, then h longitudes.
    pub pi_counts: Vec<i64>,
}

fn log_row(m1: &IntMatrix, m2: &IntMatrix, i: usize, c: i64) -> LogRow {
    let conv = |x: &BigInt| x.to_i64().expect("small exponent");
    LogRow { a: m1.row(i).iter().map(conv).collect(), b: m2.row(i).iter().map(conv).collect(), c }
}

impl GluingData {
    pub fn edge_row(&self, i: usize) -> LogRow {
        log_row(&self.r1, &self.r2, i, self.pi_counts[i])
    }
    pub fn meridian_row(&self, k: usize) -> LogRow {
        log_row(&self.m1, &self.m2, k, self.pi_counts[self.n + k])
    }
    pub fn longitude_row(&self, k: usize) -> LogRow {
        log_row(&self.l1, &self.l2, k, self.pi_counts[self.n + self.h + k])
    }

    /// Sign of each of the N + 2h equations: (−1)^c.
    pub fn signs(&self) -> Vec<i64> {
        self.pi_counts.iter().map(|c| if c.rem_euclid(2) == 0 { 1 } else { -1 }).collect()
    }

    pub fn r_matrix(&self) -> IntMatrix {
        self.r1.hstack(&self.r2)
    }

    /// U = (R′ R″; M′ M″; L′ L″).
    pub fn u_matrix(&self) -> IntMatrix {
        self.r_matrix().vstack(&self.m1.hstack(&self.m2)).vstack(&self.l1.hstack(&self.l2))
    }

    /// The block matrix U·J·Uᵗ must equal.
    pub fn expected_gram(&self) -> IntMatrix {
        let (n, h) = (self.n, self.h);
        let mut e = IntMatrix::zeros(n + 2 * h, n + 2 * h);
        for k in 0..h {
            e[(n + k, n + h + k)] = BigInt::from(-2);
            e[(n + h + k, n + k)] = BigInt::from(2);
        }
        e
    }

    /// Lattice basis of the edge rows plus one peripheral combination p·M + q·L
    /// per cusp, in the (A | B) convention of the generalized gluing equations:
    /// A = a, B = −b. Each basis row satisfies A·u − B·v = πi·m at a structure
    /// where the peripheral combination has zero log-holonomy.
    pub fn half_symplectic_basis(&self, combos: &[(i64, i64)]) -> Result<NzBasis> {
        if combos.len() != self.h {
            return Err(NzError::Shape(format!("need {} peripheral combinations", self.h)));
        }
        let mut rows: Vec<LogRow> = (0..self.n).map(|i| self.edge_row(i)).collect();
        let mut targets: Vec<i64> = vec![1; self.n];
        for (k, &(p, q)) in combos.iter().enumerate() {
            rows.push(self.meridian_row(k).combine(p, &self.longitude_row(k), q));
            targets.push(0);
        }
        let x = IntMatrix::from_big_rows(rows.iter().map(|r| r.coeffs()).collect(), 2 * self.n)?;
        let s = crate::zlinalg::smith_normal_form(&x);
        let rank = s.rank();
        if rank != self.n {
            return Err(NzError::NotHalfSymplectic(format!("row lattice has rank {rank}, expected {}", self.n)));
        }
        // basis rows are (U·X)_i for the nonzero invariants
        let ux = &s.u * &x;
        let n = self.n;
        let mut h = IntMatrix::zeros(n, 2 * n);
        let mut m = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = ux[(i, j)].clone();
                h[(i, n + j)] = -&ux[(i, n + j)];
            }
            let mut mi = BigInt::zero();
            for (r, row) in rows.iter().enumerate() {
                mi += &s.u[(i, r)] * BigInt::from(2 * targets[r] - row.c);
            }
            m.push(mi);
        }
        Ok(NzBasis { h, m })
    }
}

/// Small coprime (p, q) in a fixed order: (1,0), (0,1), (1,1), (1,−1), (2,1), …
pub fn small_slopes(bound: i64) -> Vec<(i64, i64)> {
    let mut out = vec![(1, 0), (0, 1)];
    for m in 1..=bound {
        for p in -m..=m {
            for q in -m..=m {
                if p.abs().max(q.abs()) == m && num_integer::gcd(p, q) == 1 && !out.contains(&(p, q)) && !out.contains(&(-p, -q)) {
                    out.push((p, q));
                }
            }
        }
    }
    out
}

impl GluingData {
    /// First choice of peripheral combinations (in `small_slopes` order, varying
    /// the last cusp fastest) whose basis certifies half-symplectic.
    pub fn certified_basis(&self) -> Result<(Vec<(i64, i64)>, NzBasis)> {
        let slopes = small_slopes(2);
        let total = slopes.len().pow(self.h as u32);
        for code in 0..total {
            let mut c = code;
            let mut combos = vec![(0, 0); self.h];
            for k in (0..self.h).rev() {
                combos[k] = slopes[c % slopes.len()];
                c /= slopes.len();
            }
            if let Ok(b) = self.half_symplectic_basis(&combos) {
                if crate::zlinalg::is_half_symplectic(&b.h)?.passed() {
                    return Ok((combos, b));
                }
            }
        }
        Err(NzError::NotHalfSymplectic("no small peripheral combination spans a primitive lattice".into()))
    }
}

/// Half-symplectic basis H = (A | B) with the integer vector m (A·u − B·v = πi·m).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NzBasis {
    pub h: IntMatrix,
    pub m: Vec<BigInt>,
}

/// Assembles R′, R″ from the edge classes; peripheral rows come from the fixture.
pub fn derive_edge_matrices(t: &Triangulation) -> Result<GluingData> {
    let p = t
        .peripheral
        .as_ref()
        .ok_or_else(|| NzError::Triangulation("no PERIPHERAL block; peripheral rows are fixture data".into()))?;
    let n = t.tet_count();
    let h = t.cusp_count();
    let mut r1 = IntMatrix::zeros(n, n);
    let mut r2 = IntMatrix::zeros(n, n);
    let mut pi_counts = Vec::with_capacity(n + 2 * h);
    for (i, class) in t.edge_classes().iter().enumerate() {
        let inc: Vec<(usize, usize)> = class.iter().map(|&(tt, a, b)| (tt, edge_type(a, b))).collect();
        let row = edge_row_from_incidences(n, &inc);
        for j in 0..n {
            r1[(i, j)] = BigInt::from(row.a[j]);
            r2[(i, j)] = BigInt::from(row.b[j]);
        }
        pi_counts.push(row.c);
    }
    pi_counts.extend_from_slice(&p.pi_counts);
    Ok(GluingData {
        n,
        h,
        r1,
        r2,
        m1: p.m1.clone(),
        m2: p.m2.clone(),
        l1: p.l1.clone(),
        l2: p.l2.clone(),
        pi_counts,
    })
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeumannComplex {
    /// C₀ → C₁ (N × h).
    pub alpha: IntMatrix,
    /// C₁ → J (2N × N) in the (e₁…, e₂…) basis.
    pub beta: IntMatrix,
    /// Gram matrix of the symplectic form on J.
    pub omega: IntMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexReport {
    pub rank_c0: usize,
    pub rank_c1: usize,
    pub rank_j: usize,
    pub beta_alpha_zero: bool,
    pub dual_zero: bool,
    pub alpha_dual_zero: bool,
    pub rank_alpha: usize,
    pub rank_beta: usize,
    pub rank_beta_dual: usize,
    pub rank_alpha_dual: usize,
    pub middle_homology_rank: usize,
    pub beta_matches_r: bool,
}

impl ComplexReport {
    pub fn end_exact(&self) -> bool {
        self.rank_alpha == self.rank_c0
            && self.rank_beta == self.rank_c1 - self.rank_alpha
            && self.rank_beta_dual == self.rank_beta
            && self.rank_alpha_dual == self.rank_c0
    }
}

impl NeumannComplex {
    pub fn beta_dual(&self) -> IntMatrix {
        &self.beta.transpose() * &self.omega
    }
    pub fn alpha_dual(&self) -> IntMatrix {
        self.alpha.transpose()
    }

    pub fn report(&self, r: Option<&IntMatrix>) -> ComplexReport {
        let (n, h) = (self.alpha.rows(), self.alpha.cols());
        let bd = self.beta_dual();
        let ad = self.alpha_dual();
        let rank_beta = self.beta.rank();
        let rank_beta_dual = bd.rank();
        let beta_matches_r = r.is_none_or(|r| {
            // β in the (e₁, e₂) basis is (R′ | −R″)ᵗ
            let rr = r.block(0, 0, n, n).hstack(&r.block(0, n, n, n).neg());
            rr.transpose() == self.beta
        });
        ComplexReport {
            rank_c0: h,
            rank_c1: n,
            rank_j: self.omega.rank(),
            beta_alpha_zero: (&self.beta * &self.alpha).is_zero(),
            dual_zero: (&bd * &self.beta).is_zero(),
            alpha_dual_zero: (&ad * &bd).is_zero(),
            rank_alpha: self.alpha.rank(),
            rank_beta,
            rank_beta_dual,
            rank_alpha_dual: ad.rank(),
            middle_homology_rank: (2 * n - rank_beta_dual) - rank_beta,
            beta_matches_r,
        }
    }
}

pub fn neumann_complex(t: &Triangulation) -> NeumannComplex {
    let n = t.tet_count();
    let h = t.cusp_count();
    let mut alpha = IntMatrix::zeros(n, h);
    for e in 0..n {
        let (a, b) = t.edge_endpoints(e);
        alpha[(e, a)] += 1;
        alpha[(e, b)] += 1;
    }
    let mut beta = IntMatrix::zeros(2 * n, n);
    for (e, class) in t.edge_classes().iter().enumerate() {
        for &(tt, a, b) in class {
            match edge_type(a, b) {
                0 => beta[(tt, e)] += 1,
                1 => beta[(n + tt, e)] += 1,
                _ => {
                    // e₃ = −e₁ − e₂
                    beta[(tt, e)] -= 1;
                    beta[(n + tt, e)] -= 1;
                }
            }
        }
    }
    // ⟨e₁, e₂⟩ = 1 in every tetrahedron
    let omega = SymplecticForm::new(n).matrix.neg();
    NeumannComplex { alpha, beta, omega }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticReport {
    pub gram_ok: bool,
    /// Row pairs (i, j), i ≤ j, where U·J·Uᵗ differs from the expected block matrix.
    pub gram_mismatches: Vec<(usize, usize)>,
    pub rank_r: usize,
    pub rank_r_ok: bool,
    pub rank_u: usize,
    pub rank_u_ok: bool,
    pub orthocomplement_ok: bool,
}

impl SymplecticReport {
    pub fn all_pass(&self) -> bool {
        self.gram_ok && self.rank_r_ok && self.rank_u_ok && self.orthocomplement_ok
    }
}

pub fn verify_nz_symplectic(g: &GluingData) -> SymplecticReport {
    let (n, h) = (g.n, g.h);
    let j = SymplecticForm::new(n);
    let u = g.u_matrix();
    let gram = j.gram(&u);
    let want = g.expected_gram();
    let mut mism = Vec::new();
    for a in 0..u.rows() {
        for b in a..u.rows() {
            if gram[(a, b)] != want[(a, b)] {
                mism.push((a, b));
            }
        }
    }
    let r = g.r_matrix();
    let rank_r = r.rank();
    let rank_u = u.rank();
    // J-orthogonal complement of row(R) = ker(R·J), computed independently
    let (_, ker) = rank_and_kernel(&(&r * &j.matrix));
    let orth = if ker.is_empty() {
        rank_u == 0
    } else {
        let k = IntMatrix::from_big_rows(ker, 2 * n).expect("kernel vectors");
        let both = u.vstack(&k);
        let rk = k.rank();
        rk == rank_u && both.rank() == rank_u
    };
    SymplecticReport {
        gram_ok: mism.is_empty(),
        gram_mismatches: mism,
        rank_r,
        rank_r_ok: rank_r + h == n,
        rank_u,
        rank_u_ok: rank_u == n + h,
        orthocomplement_ok: orth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn edge_types() {
        assert_eq!(edge_type(0, 1), 0);
        assert_eq!(edge_type(3, 2), 0);
        assert_eq!(edge_type(2, 0), 1);
        assert_eq!(edge_type(1, 3), 1);
        assert_eq!(edge_type(0, 3), 2);
        assert_eq!(edge_type(2, 1), 2);
    }

    #[test]
    fn degree_six_edge_cancels() {
        let r = edge_row_from_incidences(1, &[(0, 0), (0, 0), (0, 1), (0, 1), (0, 2), (0, 2)]);
        assert_eq!(r.a, vec![0]);
        assert_eq!(r.b, vec![0]);
        assert_eq!(r.sign(), 1);
    }

    #[test]
    fn figure_eight_classes() {
        let t = fixtures::figure_eight();
        assert_eq!(t.tet_count(), 2);
        assert_eq!(t.edge_classes().len(), 2);
        assert_eq!(t.cusp_count(), 1);
        // V − E + F − T of the end compactification equals the number of torus cusps
        let (v, e, f, tt) = (t.cusp_count() as i64, 2, 4, 2);
        assert_eq!(v - e + f - tt, t.cusp_count() as i64);
        // every edge class has degree 6 in the figure-eight
        assert!(t.edge_classes().iter().all(|c| c.len() == 6));
    }

    #[test]
    fn whitehead_classes() {
        let t = fixtures::whitehead();
        assert_eq!((t.tet_count(), t.cusp_count()), (4, 2));
        let total: usize = t.edge_classes().iter().map(Vec::len).sum();
        assert_eq!(total, 24);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_triangulation("1 0\n"), Err(NzError::Triangulation(_))));
        let fig8 = fixtures::FIG8;
        // drop the last face line
        let cut: Vec<&str> = fig8.lines().collect();
        let i = cut.iter().position(|l| *l == "PERIPHERAL").unwrap();
        let broken = [&cut[..i - 1], &cut[i..]].concat().join("\n");
        assert!(parse_triangulation(&broken).is_err());
        // orientation-reversing: swap two entries of a permutation on both sides
        let rev = fig8.replacen("perm 0213", "perm 0123", 1);
        assert!(parse_triangulation(&rev).is_err());
        assert!(parse_triangulation("2 1\nface 0 -> tet 9 face 0 perm 0213\n").is_err());
    }

    #[test]
    fn text_roundtrip() {
        for src in [fixtures::FIG8, fixtures::SISTER, fixtures::WHITEHEAD] {
            let t = parse_triangulation(src).unwrap();
            let again = parse_triangulation(&t.to_text()).unwrap();
            assert_eq!(t, again);
        }
    }

    #[test]
    fn figure_eight_rows() {
        let g = derive_edge_matrices(&fixtures::figure_eight()).unwrap();
        // the edge rows sum to zero: the product of all edge equations is trivial
        let s = g.r_matrix().row_vecs();
        for j in 0..4 {
            assert!((&s[0][j] + &s[1][j]).is_zero());
        }
        assert_eq!(g.edge_row(0).c + g.edge_row(1).c, 4);
    }

    #[test]
    fn symplectic_reports() {
        for t in [fixtures::figure_eight(), fixtures::sister(), fixtures::whitehead()] {
            let g = derive_edge_matrices(&t).unwrap();
            let r = verify_nz_symplectic(&g);
            assert!(r.all_pass(), "{r:?}");
        }
    }

    #[test]
    fn corrupted_row_is_pinpointed() {
        let mut g = derive_edge_matrices(&fixtures::figure_eight()).unwrap();
        g.l1[(0, 0)] += 1;
        let r = verify_nz_symplectic(&g);
        assert!(!r.gram_ok);
        // row 3 is the longitude; it pairs wrongly with the edge rows or the meridian
        assert!(r.gram_mismatches.iter().all(|&(a, b)| a == 3 || b == 3));
        assert!(!r.gram_mismatches.is_empty());
    }

    #[test]
    fn chain_complex() {
        for (t, h) in [(fixtures::figure_eight(), 1), (fixtures::whitehead(), 2), (fixtures::sister(), 1)] {
            let g = derive_edge_matrices(&t).unwrap();
            let c = neumann_complex(&t);
            let r = c.report(Some(&g.r_matrix()));
            assert!(r.beta_alpha_zero && r.dual_zero && r.alpha_dual_zero);
            assert!(r.end_exact(), "{r:?}");
            assert_eq!(r.middle_homology_rank, 2 * h);
            assert_eq!(r.rank_j, 2 * t.tet_count());
            assert!(r.beta_matches_r);
        }
    }

    #[test]
    fn sister_meridian_lattice_has_index_two() {
        let g = derive_edge_matrices(&fixtures::sister()).unwrap();
        let b = g.half_symplectic_basis(&[(1, 0)]).unwrap();
        let v = crate::zlinalg::is_half_symplectic(&b.h).unwrap();
        assert!(v.symmetric && !v.full_lattice);
        assert_eq!(g.certified_basis().unwrap().0, vec![(0, 1)]);
    }

    #[test]
    fn basis_is_half_symplectic() {
        for t in [fixtures::figure_eight(), fixtures::sister(), fixtures::whitehead()] {
            let g = derive_edge_matrices(&t).unwrap();
            let (_, b) = g.certified_basis().unwrap();
            let v = crate::zlinalg::is_half_symplectic(&b.h).unwrap();
            assert!(v.passed(), "{:?}", v.reasons());
        }
    }
}
