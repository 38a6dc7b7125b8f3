use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use nz_core::arithmetic::{is_fundamental_discriminant, nahm_solve, nahm_sum, nahm_to_halfsymplectic, recognize_rational, zeta_quadratic, NahmData};
use nz_core::bloch::{apply_move, extended_element, pair_regulator, pair_to_text, parse_pair, torsion_difference, wedge_check, HalfSymplecticPair, Move};
use nz_core::dilogarithm::{bloch_wigner, li2, lobachevsky};
use nz_core::geometry::{angle_sum_defect, complex_volume_of, core_length, cusp_coordinates, edge_residuals, filling_asymptotics, potential_scan, slope_form, solve_complete, solve_filled, volume, DehnFilling, ShapeAssignment};
use nz_core::scalar::ScalarKind;
use nz_core::triangulation::{derive_edge_matrices, neumann_complex, parse_triangulation, verify_nz_symplectic, GluingData, Triangulation};
use nz_core::zlinalg::{complete_to_symplectic, is_half_symplectic, IntMatrix};
use nz_core::{fixtures, Dd, NzError, PrecisionContext, Real, Result};

use crate::report::{digest, fc, fe, fx, Item, Report};
use crate::{BlochCmd, Cli, Cmd};

macro_rules! at_prec {
    ($ctx:expr, $f:ident ( $($arg:expr),* )) => {
        match $ctx.kind() {
            ScalarKind::F64 => $f::<f64>($($arg),*),
            ScalarKind::DoubleDouble => $f::<Dd>($($arg),*),
        }
    };
}

pub fn run(cli: &Cli, argv: &[String]) -> Result<Report> {
    let ctx = PrecisionContext::new(cli.prec)?;
    let command = normalized(argv);
    let mut rep = match &cli.cmd {
        Cmd::Validate { file } => validate(&load_tri(file)?)?,
        Cmd::Matrices { file } => matrices(&load_tri(file)?)?,
        Cmd::Complex { file } => chain_complex(&load_tri(file)?),
        Cmd::Solve { file } => at_prec!(ctx, solve(&load_tri(file)?, &ctx))?,
        Cmd::Volume { file } => at_prec!(ctx, volume_cmd(&load_tri(file)?))?,
        Cmd::Fill { file, slope, sweep } => at_prec!(ctx, fill(&load_tri(file)?, slope.as_deref(), sweep.as_deref()))?,
        Cmd::Potential { file, grid } => at_prec!(ctx, potential(&load_tri(file)?, grid))?,
        Cmd::Cvol { file } => at_prec!(ctx, cvol(&load_tri(file)?))?,
        Cmd::Bloch { action } => at_prec!(ctx, bloch(action))?,
        Cmd::Nahm { a, b, c } => nahm(a, b.as_deref(), c, cli.order)?,
        Cmd::NahmSolve { a } => at_prec!(ctx, nahm_solve_cmd(a))?,
        Cmd::Zeta { disc, terms } => zeta(*disc, *terms)?,
        Cmd::Dilog { z } => at_prec!(ctx, dilog(z))?,
        Cmd::Check { report_file } => check(report_file)?,
    };
    let files = input_files(&cli.cmd);
    let mut parts: Vec<Vec<u8>> = command.iter().map(|a| a.as_bytes().to_vec()).collect();
    let mut provenance = Vec::new();
    for f in files {
        let bytes = std::fs::read(f).map_err(|e| NzError::Invalid(format!("cannot read {}: {e}", f.display())))?;
        provenance.extend(provenance_of(&String::from_utf8_lossy(&bytes)));
        parts.push(bytes);
    }
    rep.command = command;
    rep.inputs_digest = digest(&parts.iter().map(Vec::as_slice).collect::<Vec<_>>());
    rep.precision = match ctx.kind() {
        ScalarKind::F64 => format!("{} digits (f64)", ctx.digits),
        ScalarKind::DoubleDouble => format!("{} digits (double-double)", ctx.digits),
    };
    rep.provenance = provenance;
    Ok(rep)
}

// argv without the program name and the output-only flags
fn normalized(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--json" || a.starts_with("--report=") {
            continue;
        }
        if a == "--report" {
            it.next();
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn input_files(cmd: &Cmd) -> Vec<&Path> {
    match cmd {
        Cmd::Validate { file }
        | Cmd::Matrices { file }
        | Cmd::Complex { file }
        | Cmd::Solve { file }
        | Cmd::Volume { file }
        | Cmd::Fill { file, .. }
        | Cmd::Potential { file, .. }
        | Cmd::Cvol { file } => vec![file.as_path()],
        Cmd::Bloch { action } => match action {
            BlochCmd::Export { file } | BlochCmd::Verify { file } | BlochCmd::Element { file } | BlochCmd::Regulator { file } | BlochCmd::Move { file, .. } => {
                vec![file.as_path()]
            }
        },
        Cmd::Check { report_file } => vec![report_file.as_path()],
        _ => vec![],
    }
}

fn provenance_of(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (name, src) in fixtures::NAMES.iter().zip([fixtures::FIG8, fixtures::SISTER, fixtures::WHITEHEAD]) {
        if text == src {
            out.push(format!("fixture:{name}"));
        }
    }
    out.extend(text.lines().map(str::trim).filter_map(|l| l.strip_prefix('#')).map(|l| l.trim().to_string()).filter(|l| !l.is_empty()));
    out
}

fn read(file: &Path) -> Result<String> {
    std::fs::read_to_string(file).map_err(|e| NzError::Invalid(format!("cannot read {}: {e}", file.display())))
}

fn load_tri(file: &Path) -> Result<Triangulation> {
    parse_triangulation(&read(file)?)
}

fn solved<T: Real>(t: &Triangulation) -> Result<(GluingData, ShapeAssignment<T>)> {
    let g = derive_edge_matrices(t)?;
    let s = solve_complete::<T>(&g, None)?;
    Ok((g, s))
}

fn tol<T: Real>() -> T {
    nz_core::scalar::default_tolerance::<T>()
}

// ---------------------------------------------------------------------------

fn validate(t: &Triangulation) -> Result<Report> {
    let g = derive_edge_matrices(t)?;
    let s = verify_nz_symplectic(&g);
    let r = neumann_complex(t).report(Some(&g.r_matrix()));
    let mut items = vec![
        Item::new("tetrahedra", true).with("value", t.tet_count().to_string()),
        Item::new("cusps", true).with("value", t.cusp_count().to_string()),
        Item::new("edge classes", t.edge_classes().len() == t.tet_count()).with("value", t.edge_classes().len().to_string()),
        Item::new("U J Uᵗ block form", s.gram_ok).with("value", s.gram_ok.to_string()),
        Item::new("rank R = N − h", s.rank_r_ok).with("value", s.rank_r.to_string()),
        Item::new("rank U = N + h", s.rank_u_ok).with("value", s.rank_u.to_string()),
        Item::new("orthocomplement", s.orthocomplement_ok).with("value", s.orthocomplement_ok.to_string()),
        Item::new("βα = 0", r.beta_alpha_zero).with("value", r.beta_alpha_zero.to_string()),
        Item::new("end exactness", r.end_exact()).with("value", r.end_exact().to_string()),
        Item::new("middle homology = 2h", r.middle_homology_rank == 2 * t.cusp_count()).with("value", r.middle_homology_rank.to_string()),
    ];
    let basis = g.certified_basis().and_then(|(combos, b)| Ok((combos, is_half_symplectic(&b.h)?.passed())));
    items.push(match basis {
        Ok((combos, ok)) => Item::new("half-symplectic basis", ok).with("value", format!("{combos:?}")),
        Err(e) => Item::new("half-symplectic basis", false).with("value", e.to_string()),
    });
    Ok(Report::new(items, None))
}

fn matrices(t: &Triangulation) -> Result<Report> {
    let g = derive_edge_matrices(t)?;
    let mut out = String::new();
    let mut block = |name: &str, m: &IntMatrix| {
        out += &format!("{name}\n{}", m.to_text());
    };
    block("R'", &g.r1);
    block("R''", &g.r2);
    block("M'", &g.m1);
    block("M''", &g.m2);
    block("L'", &g.l1);
    block("L''", &g.l2);
    out += &format!("pi counts\n{}\n", g.pi_counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    let (combos, basis) = g.certified_basis()?;
    out += &format!("H (peripheral combinations {combos:?})\n{}", basis.h.to_text());
    out += &format!("m\n{}\n", basis.m.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    out += &format!("completion (C D)\n{}", complete_to_symplectic(&basis.h)?.to_text());
    Ok(Report::new(vec![], Some(out)))
}

fn chain_complex(t: &Triangulation) -> Report {
    let r = neumann_complex(t).report(None);
    let h = t.cusp_count();
    let items = vec![
        Item::new("ranks C0, C1, J", true).with("value", format!("{} {} {}", r.rank_c0, r.rank_c1, r.rank_j)),
        Item::new("rank α, β", true).with("value", format!("{} {}", r.rank_alpha, r.rank_beta)),
        Item::new("rank β*, α*", true).with("value", format!("{} {}", r.rank_beta_dual, r.rank_alpha_dual)),
        Item::new("βα = 0", r.beta_alpha_zero).with("value", r.beta_alpha_zero.to_string()),
        Item::new("α*β* = 0", r.dual_zero).with("value", r.dual_zero.to_string()),
        Item::new("end exactness", r.end_exact()).with("value", r.end_exact().to_string()),
        Item::new("middle homology", r.middle_homology_rank == 2 * h).with("value", format!("{} (2h = {})", r.middle_homology_rank, 2 * h)),
    ];
    Report::new(items, None)
}

fn solve<T: Real>(t: &Triangulation, ctx: &PrecisionContext) -> Result<Report> {
    let (g, s) = solved::<T>(t)?;
    let mut items: Vec<Item> = s
        .z
        .iter()
        .zip(&s.logs)
        .enumerate()
        .map(|(j, (z, p))| Item::new(format!("z{j}"), z.im > T::zero()).with("z", fc(*z)).with("log z", fc(p.u)).with("log(1-z)", fc(p.v)).with("D(z)", fx(bloch_wigner(*z))))
        .collect();
    let res = edge_residuals(&s, &g).iter().fold(T::zero(), |a, r| a.max(r.norm()));
    let angles = angle_sum_defect(&s, &g);
    let t4 = T::from_f(ctx.tolerance());
    items.push(Item::new("edge equations", res < t4).with("value", fe(res)));
    items.push(Item::new("angle sums 2π", angles < t4).with("value", fe(angles)));
    items.push(Item::new("newton steps", true).with("value", s.steps.to_string()));
    items.push(Item::new("volume", true).with("value", fx(volume(&s))));
    Ok(Report::new(items, None))
}

fn volume_cmd<T: Real>(t: &Triangulation) -> Result<Report> {
    let (_, s) = solved::<T>(t)?;
    Ok(Report::new(vec![Item::new("volume", true).with("value", fx(volume(&s)))], None))
}

fn pair_of(text: &str, sep: char) -> Result<(i64, i64)> {
    let v: Vec<i64> = text.split(sep).map(|x| x.trim().parse().map_err(|_| NzError::Parse(format!("bad pair {text:?}")))).collect::<Result<_>>()?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(NzError::Parse(format!("expected two integers: {text:?}"))),
    }
}

fn fill<T: Real>(t: &Triangulation, slope: Option<&str>, sweep: Option<&str>) -> Result<Report> {
    let (g, c) = solved::<T>(t)?;
    match (slope, sweep) {
        (Some(sl), None) => {
            let (p, q) = pair_of(sl, ',')?;
            let mut kappa = vec![None; g.h];
            kappa[0] = Some((p, q));
            let s = solve_filled(&g, &DehnFilling::integral(&kappa)?, &c)?;
            let tau = cusp_coordinates(&c, &g)?.tau[0];
            let form = slope_form(tau, T::from_int(p), T::from_int(q))?;
            let l = core_length(&s, &g, &kappa)?[0];
            let vol = volume(&s);
            let vm = volume(&c);
            let item = Item::new(format!("({p},{q})"), vol < vm)
                .with("volume", fx(vol))
                .with("Q", fx(form))
                .with("length", fx(l))
                .with("Vol(M)-Vol-pi^2/Q", fe(vm - vol - T::PI() * T::PI() / form))
                .with("L-2pi/Q", fe(l - T::TAU() / form));
            Ok(Report::new(vec![item], None))
        }
        (None, Some(sw)) => {
            let (a, b) = sw.split_once("..").ok_or_else(|| NzError::Parse(format!("sweep must be a..b: {sw:?}"))).and_then(|(a, b)| {
                let p = |x: &str| x.trim().parse::<i64>().map_err(|_| NzError::Parse(format!("bad sweep bound {x:?}")));
                Ok((p(a)?, p(b)?))
            })?;
            if a > b {
                return Err(NzError::Invalid(format!("empty sweep {a}..{b}")));
            }
            let slopes: Vec<(i64, i64)> = (a..=b).map(|n| (n, 1)).collect();
            let rep = filling_asymptotics(&g, &c, &slopes)?;
            let mut items: Vec<Item> = rep
                .rows
                .iter()
                .map(|r| {
                    Item::new(format!("({},{})", r.p, r.q), r.volume < rep.complete_volume)
                        .with("volume", fx(r.volume))
                        .with("Q", fx(r.form))
                        .with("length", fx(r.length))
                        .with("Vol(M)-Vol-pi^2/Q", fe(r.res_volume_q))
                        .with("Vol(M)-Vol-pi*L/2", fe(r.res_volume_l))
                        .with("L-2pi/Q", fe(r.res_length))
                })
                .collect();
            for (p, q, e) in &rep.failures {
                items.push(Item::new(format!("({p},{q})"), false).with("value", e.clone()));
            }
            items.push(Item::new("monotone increasing", rep.monotone).with("value", rep.monotone.to_string()));
            items.push(Item::new("decay exponents", true).with("value", format!("{:.2} {:.2} {:.2}", rep.exponent_volume_q, rep.exponent_volume_l, rep.exponent_length)));
            Ok(Report::new(items, None))
        }
        _ => Err(NzError::Invalid("give exactly one of --slope p,q or --sweep a..b".into())),
    }
}

fn potential<T: Real>(t: &Triangulation, grid: &str) -> Result<Report> {
    let (g, c) = solved::<T>(t)?;
    let bad = || NzError::Parse(format!("grid must be a..b/n: {grid:?}"));
    let (range, n) = grid.split_once('/').ok_or_else(bad)?;
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || n > 50 {
        return Err(NzError::Invalid("grid needs 1..=50 points per axis".into()));
    }
    let axis: Vec<f64> = (0..n).map(|k| if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect();
    let mut grid_pts: Vec<Vec<Complex<T>>> = vec![vec![]];
    for _ in 0..g.h {
        grid_pts = grid_pts.into_iter().flat_map(|p| axis.iter().map(move |&x| [p.clone(), vec![Complex::new(T::from_f(x), T::zero())]].concat())).collect();
    }
    let samples = potential_scan(&g, &c, &grid_pts)?;
    let items = samples
        .iter()
        .map(|s| {
            let u = s.u.iter().map(|x| fx(x.re)).collect::<Vec<_>>().join(",");
            Item::new(format!("u=({u})"), s.identity_residual.abs() < T::from_f(1e-6))
                .with("f", fc(s.f))
                .with("eps", fx(s.eps))
                .with("volume", fx(s.volume))
                .with("residual", fe(s.identity_residual))
                .with("quadrature", fe(s.quadrature_error))
        })
        .collect();
    Ok(Report::new(items, None))
}

fn cvol<T: Real>(t: &Triangulation) -> Result<Report> {
    let (g, s) = solved::<T>(t)?;
    let c = complex_volume_of(&g, &s)?;
    let vol = volume(&s);
    let pi2 = T::PI() * T::PI();
    let r = recognize_rational((c.re / pi2).as_f64(), 8, 1e-9);
    let items = vec![
        Item::new("complex volume", (c.im - vol).abs() < T::from_f(1e-9)).with("value", fc(c)),
        Item::new("volume", true).with("value", fx(vol)),
        Item::new("Re/pi^2", true).with("value", r.map_or_else(|| fx(c.re / pi2), |r| r.to_string())),
    ];
    Ok(Report::new(items, None))
}

// ---------------------------------------------------------------------------

fn load_pair<T: Real + FromStr>(file: &Path) -> Result<HalfSymplecticPair<T>> {
    let text = read(file)?;
    if text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')) == Some("PAIR") {
        return parse_pair(&text);
    }
    let (g, s) = solved::<T>(&parse_triangulation(&text)?)?;
    HalfSymplecticPair::from_gluing(&g, &s)
}

fn parse_move(spec: &str) -> Result<Move> {
    let bad = || NzError::Parse(format!("unknown move {spec:?}"));
    let ints = |t: &str| -> Result<Vec<i64>> { t.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect() };
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "stabilize" => Move::Stabilize,
        "unstabilize" => Move::Unstabilize,
        "left" => {
            let rows: Vec<Vec<i64>> = arg.split(';').map(ints).collect::<Result<_>>()?;
            Move::LeftUnimodular(IntMatrix::from_rows(&rows))
        }
        "renumber" => Move::Renumber(ints(arg)?.into_iter().map(|x| usize::try_from(x).map_err(|_| bad())).collect::<Result<_>>()?),
        "rotate" => match ints(arg)?[..] {
            [j, k] if j >= 0 && (0..=2).contains(&k) => Move::RotateShape(j as usize, k as u8),
            _ => return Err(bad()),
        },
        _ => return Err(bad()),
    })
}

fn bloch<T: Real + FromStr>(action: &BlochCmd) -> Result<Report> {
    match action {
        BlochCmd::Export { file } => Ok(Report::new(vec![], Some(pair_to_text(&load_pair::<T>(file)?)))),
        BlochCmd::Verify { file } => {
            let p = load_pair::<T>(file)?;
            let r = p.gluing_check()?;
            let items = (0..r.residuals.len())
                .map(|i| {
                    Item::new(format!("row {i}"), !r.failing.contains(&i))
                        .with("residual", fe(r.residuals[i]))
                        .with("(AB^t)_ii", r.parity[i].to_string())
                        .with("m", r.m[i].to_string())
                })
                .collect();
            Ok(Report::new(items, None))
        }
        BlochCmd::Element { file } => {
            let p = load_pair::<T>(file)?;
            let e = extended_element(&p)?;
            let mut items: Vec<Item> = e.element.terms.iter().enumerate().map(|(k, (c, q))| Item::new(format!("term {k}"), true).with("coefficient", c.to_string()).with("u", fc(q.u)).with("v", fc(q.v))).collect();
            let xi = match (e.xi, e.xi_prime) {
                (Some(x), Some(xp)) => Item::new("xi", true).with("u", fc(x)).with("v", format!("{} (principal log of 1 - e^xi)", fc(xp))),
                _ => Item::new("xi", true).with("u", "0 (m = 0, terms omitted)").with("v", "-"),
            };
            items.push(xi);
            let w = wedge_check(&e.element, &e.ledger)?;
            items.push(
                Item::new("wedge", w.vanishes)
                    .with("u", format!("free part {}", if w.vanishes { "zero".to_string() } else { format!("{:?}", w.free) }))
                    .with("v", format!("diagonal 2-torsion on {:?}", w.torsion)),
            );
            Ok(Report::new(items, None))
        }
        BlochCmd::Regulator { file } => {
            let p = load_pair::<T>(file)?;
            let r = pair_regulator(&p)?;
            let vol = p.volume();
            let items = vec![
                Item::new("regulator", (r.im - vol).abs() < T::from_f(1e-9)).with("value", fc(r)),
                Item::new("sum D(z)", true).with("value", fx(vol)),
            ];
            Ok(Report::new(items, None))
        }
        BlochCmd::Move { file, mv } => {
            let p = load_pair::<T>(file)?;
            let q = apply_move(&p, &parse_move(mv)?)?;
            let (r0, r1) = (pair_regulator(&p), pair_regulator(&q));
            let tors = match (&r0, &r1) {
                (Ok(a), Ok(b)) => torsion_difference(*b, *a, 1e-8).map_or("not torsion".to_string(), |t| format!("{t}·pi^2")),
                (Err(e), _) | (_, Err(e)) => e.to_string(),
            };
            let ok_tors = !tors.starts_with("not");
            let items = vec![
                Item::new("gluing equations", q.gluing_check()?.pass).with("value", "pass"),
                Item::new("volume change", (q.volume() - p.volume()).abs() < tol::<T>()).with("value", fe(q.volume() - p.volume())),
                Item::new("regulator change", ok_tors).with("value", tors),
            ];
            Ok(Report { output: Some(pair_to_text(&q)), ..Report::new(items, None) })
        }
    }
}

// ---------------------------------------------------------------------------

fn rationals(text: &str) -> Result<Vec<BigRational>> {
    text.split(',')
        .map(|x| BigRational::from_str(x.trim()).map_err(|_| NzError::Parse(format!("bad rational {x:?}"))))
        .collect()
}

fn matrix(text: &str) -> Result<Vec<Vec<BigRational>>> {
    text.split(';').map(rationals).collect()
}

fn nahm(a: &str, b: Option<&str>, c: &str, order: usize) -> Result<Report> {
    let a = matrix(a)?;
    let b = match b {
        Some(b) => rationals(b)?,
        None => vec![BigRational::from_integer(BigInt::from(0)); a.len()],
    };
    let c = BigRational::from_str(c.trim()).map_err(|_| NzError::Parse(format!("bad rational {c:?}")))?;
    let s = nahm_sum(&NahmData::new(a, b, c)?, order)?;
    Ok(Report::new(vec![], Some(s.to_string())))
}

fn nahm_solve_cmd<T: Real>(a: &str) -> Result<Report> {
    let a = matrix(a)?;
    let sol = nahm_solve::<T>(&a)?;
    let mut items: Vec<Item> = sol.z.iter().enumerate().map(|(i, z)| Item::new(format!("z{i}"), *z > T::zero() && *z < T::one()).with("value", fx(*z))).collect();
    items.push(Item::new("residual", sol.residual < T::from_f(1e-12).max(tol::<T>())).with("value", fe(sol.residual)));
    let integral: Option<Vec<Vec<i64>>> = a.iter().map(|r| r.iter().map(|x| if x.is_integer() { i64::try_from(x.to_integer()).ok() } else { None }).collect()).collect();
    match integral {
        Some(rows) => match nahm_to_halfsymplectic(&IntMatrix::from_rows(&rows), &sol.z) {
            Ok(p) => {
                let e = extended_element(&p)?;
                let w = wedge_check(&e.element, &e.ledger)?;
                let r = e.element.regulator()?;
                items.push(Item::new("pair (I | A)", p.gluing_check()?.pass).with("value", "gluing equations pass"));
                items.push(Item::new("wedge", w.vanishes).with("value", if w.vanishes { "vanishes" } else { "does not vanish" }));
                items.push(Item::new("regulator", r.im.abs() < T::from_f(1e-9)).with("value", fc(r)));
            }
            Err(e) => items.push(Item::new("pair (I | A)", true).with("value", format!("not formed: {e}"))),
        },
        None => items.push(Item::new("pair (I | A)", true).with("value", "not formed: A is not integral")),
    }
    Ok(Report::new(items, None))
}

fn zeta(d: i64, terms: u64) -> Result<Report> {
    if d >= 0 || !is_fundamental_discriminant(d) {
        return Err(NzError::Invalid(format!("{d} is not a negative fundamental discriminant")));
    }
    let z = zeta_quadratic(d, terms)?;
    let items = vec![
        Item::new("zeta_F(2)", true).with("value", fx(z.value)),
        Item::new("L(2, chi)", true).with("value", fx(z.l_value)),
        Item::new("tail bound", true).with("value", fe(z.tail_bound)),
        Item::new("terms", true).with("value", z.terms.to_string()),
    ];
    Ok(Report::new(items, None))
}

fn dilog<T: Real>(z: &str) -> Result<Report> {
    let v: Vec<T> = z
        .split(',')
        .map(|x| x.trim().parse::<f64>().map(T::from_f).map_err(|_| NzError::Parse(format!("z must be re,im: {z:?}"))))
        .collect::<Result<_>>()?;
    let [re, im] = v[..] else {
        return Err(NzError::Parse(format!("z must be re,im: {z:?}")));
    };
    let z = Complex::new(re, im);
    let one = Complex::new(T::one(), T::zero());
    if z.norm().is_zero() || (z - one).norm().is_zero() {
        return Err(NzError::Invalid("z must avoid 0 and 1".into()));
    }
    let d = bloch_wigner(z);
    let (a, b) = (z.arg(), (one / (one - z)).arg());
    let kummer = lobachevsky(a) + lobachevsky(b) + lobachevsky(T::PI() - a - b);
    let mut items = vec![Item::new("Li2(z)", true).with("value", fc(li2(z))), Item::new("D(z)", true).with("value", fx(d))];
    if im > T::zero() {
        items.push(Item::new("sum of Lobachevsky", (kummer - d).abs() < T::from_f(1e-12)).with("value", fx(kummer)));
    }
    Ok(Report::new(items, None))
}

// ---------------------------------------------------------------------------

fn check(file: &Path) -> Result<Report> {
    let stored: Report = serde_json::from_str(&read(file)?).map_err(|e| NzError::Parse(format!("not a report: {e}")))?;
    if stored.command.first().map(String::as_str) == Some("check") {
        return Err(NzError::Invalid("refusing to re-check a check report".into()));
    }
    let argv: Vec<String> = std::iter::once("nz".to_string()).chain(stored.command.iter().cloned()).collect();
    let cli = <Cli as clap::Parser>::try_parse_from(&argv).map_err(|e| NzError::Parse(format!("recorded command: {e}")))?;
    let fresh = run(&cli, &argv)?;
    let differing: Vec<String> = stored.items.iter().zip(&fresh.items).filter(|(a, b)| a != b).map(|(a, _)| a.name.clone()).collect();
    let items = vec![
        Item::new("inputs digest", stored.inputs_digest == fresh.inputs_digest).with("value", fresh.inputs_digest.clone()),
        Item::new("precision", stored.precision == fresh.precision).with("value", fresh.precision.clone()),
        Item::new("items", stored.items.len() == fresh.items.len() && differing.is_empty()).with("value", if differing.is_empty() { format!("{} identical", fresh.items.len()) } else { format!("differ: {}", differing.join(", ")) }),
        Item::new("output", stored.output == fresh.output).with("value", if stored.output == fresh.output { "identical" } else { "differs" }),
        Item::new("recorded verdict", stored.pass && fresh.pass).with("value", format!("{} / {}", stored.pass, fresh.pass)),
    ];
    Ok(Report::new(items, None))
}
