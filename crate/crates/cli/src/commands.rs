use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crnash::blowup::{
    cr_fiber_sample, cr_linear_model, curve_fiber, curve_singularities, default_curve_ladder, fiber_surjectivity_check,
    linearization_remainder, BlowupFiber, CurveSpec, FiberPoint, DEFAULT_CR_LADDER,
};
use crnash::chern::{evaluate, obstruction_class, SymPoly};
use crnash::crcore::{
    find_jumps, levi_form, levi_on_blowup, mizner_poly, nondegenerate, transversality, JumpPoint, JumpSearch, LeviPair,
};
use crnash::linalg::{CMat, RMat};
use crnash::manifold::{project_to_x, validate, ManifoldSpec, Tolerances, NEWTON_MAX_ITER};
use crnash::specfile::{normalized_text, parse_spec_file, SpecFile};
use crnash::C64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{parse_complex_list, render_report, sha256_hex, Cli, CliError, Command, GlobalOpts, Outcome, SpecEcho};

/// Phase timer; prints to stderr only when asked, never into the report.
struct Timer {
    enabled: bool,
    start: Instant,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Timer {
            enabled,
            start: Instant::now(),
        }
    }

    fn lap(&mut self, phase: &str) {
        if self.enabled {
            eprintln!("[timing] {phase}: {:.3} ms", self.start.elapsed().as_secs_f64() * 1e3);
        }
        self.start = Instant::now();
    }
}

struct Loaded {
    spec: SpecFile,
    echo: SpecEcho,
}

fn load(path: &Path, global: &GlobalOpts) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let normalized = normalized_text(&text)?;
    let mut spec = parse_spec_file(&text)?;
    if let SpecFile::Manifold(m) = &mut spec {
        let mut tol = m.tol;
        for (flag, slot) in [
            (global.tol_surface, &mut tol.on_surface),
            (global.tol_rank, &mut tol.rank),
        ] {
            if let Some(x) = flag {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(CliError::Input("tolerances must be positive".into()));
                }
                *slot = x;
            }
        }
        m.tol = tol;
    }
    let kind = match spec {
        SpecFile::Manifold(_) => "manifold",
        SpecFile::Curve(_) => "curve",
    };
    Ok(Loaded {
        spec,
        echo: SpecEcho {
            kind,
            sha256: sha256_hex(&normalized),
            normalized_text: normalized,
        },
    })
}

fn settings(global: &GlobalOpts, tol: Option<Tolerances>) -> Value {
    json!({
        "seed": global.seed,
        "tol_surface": tol.map(|t| t.on_surface),
        "tol_rank": tol.map(|t| t.rank),
    })
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn cvec_json(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|z| cjson(*z)).collect())
}

fn cmat_json(m: &CMat) -> Value {
    Value::Array((0..m.rows()).map(|i| cvec_json(m.row(i))).collect())
}

fn rmat_json(m: &RMat) -> Value {
    Value::Array((0..m.rows()).map(|i| json!(m.row(i))).collect())
}

fn fmt_c(z: C64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

fn fmt_point(v: &[C64]) -> String {
    v.iter().map(|z| fmt_c(*z)).collect::<Vec<_>>().join(", ")
}

fn fmt_fiber(p: &FiberPoint) -> String {
    let coords: Vec<String> = p
        .coords
        .iter()
        .map(|z| {
            if z.im.abs() < 1e-12 {
                format!("{:.6}", z.re)
            } else {
                fmt_c(*z)
            }
        })
        .collect();
    format!("({})", coords.join(" : "))
}

fn jump_json(index: usize, j: &JumpPoint) -> Value {
    json!({
        "index": index,
        "point": cvec_json(&j.point.coords.0),
        "residual": j.point.residual,
        "wedge_norm": j.wedge_norm,
        "transverse": j.transverse,
        "det": j.det,
        "signed_index": j.index,
        "condition": j.condition,
        "jacobian": rmat_json(&j.jacobian),
    })
}

fn fiber_point_json(p: &FiberPoint) -> Value {
    cvec_json(&p.coords)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Analyze { spec } => analyze(g, spec),
        Command::Levi {
            spec,
            point,
            jump_index,
            fiber,
        } => levi(g, spec, point.as_deref(), *jump_index, fiber.as_deref()),
        Command::Blowup {
            spec,
            rays,
            eps,
            jump_index,
        } => blowup(g, spec, *rays, eps.as_deref(), *jump_index),
        Command::Chern { n, eval } => chern(g, *n, eval.as_deref()),
        Command::Validate { spec } => validate_cmd(g, spec),
    }
}

fn require_valid(m: &ManifoldSpec) -> Result<(), CliError> {
    let report = validate(m);
    if report.accepted() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "spec failed validation: {}",
            report.failures.join("; ")
        )))
    }
}

fn analyze(g: &GlobalOpts, path: &Path) -> Result<Outcome, CliError> {
    let mut timer = Timer::new(g.timings);
    let loaded = load(path, g)?;
    timer.lap("load");
    match &loaded.spec {
        SpecFile::Curve(c) => {
            let failures = c.validate();
            if !failures.is_empty() {
                return Err(CliError::Input(format!(
                    "curve failed validation: {}",
                    failures.join("; ")
                )));
            }
            let sing = curve_singularities(c)?;
            timer.lap("singularities");
            let results = json!({ "singular_points": sing.iter().map(|p| json!(p)).collect::<Vec<_>>() });
            let mut summary = format!("{} singular point(s)\n", sing.len());
            for p in &sing {
                writeln!(summary, "  ({:.6}, {:.6})", p[0], p[1]).expect("String write");
            }
            Ok(Outcome {
                report: render_report("analyze", Some(&loaded.echo), settings(g, None), results, json!({})),
                summary,
                csv: None,
                exit_code: 0,
            })
        }
        SpecFile::Manifold(m) => {
            require_valid(m)?;
            timer.lap("validate");
            let search = JumpSearch::default();
            let jumps = find_jumps(m, &search)?;
            timer.lap("find_jumps");
            let transverse = jumps.iter().filter(|j| j.transverse).count();
            let index_sum: i32 = jumps.iter().map(|j| j.index).sum();
            let results = json!({
                "n": m.n,
                "variables": m.vars.names(),
                "jumps": jumps.iter().enumerate().map(|(i, j)| jump_json(i, j)).collect::<Vec<_>>(),
                "summary": { "count": jumps.len(), "transverse": transverse, "index_sum": index_sum },
            });
            let real_dims = 2 * m.dim();
            let diagnostics = json!({
                "search": {
                    "grid_per_dim": search.effective_grid(real_dims),
                    "max_seeds": search.max_seeds,
                    "wedge_tol": search.tol,
                }
            });
            let mut summary = format!(
                "{} jump point(s), {} transverse, index sum {}\n",
                jumps.len(),
                transverse,
                index_sum
            );
            for (i, j) in jumps.iter().enumerate() {
                writeln!(
                    summary,
                    "  [{i}] ({}) transverse={} index={:+} det={:.6e}",
                    fmt_point(&j.point.coords.0),
                    j.transverse,
                    j.index,
                    j.det
                )
                .expect("String write");
            }
            Ok(Outcome {
                report: render_report(
                    "analyze",
                    Some(&loaded.echo),
                    settings(g, Some(m.tol)),
                    results,
                    diagnostics,
                ),
                summary,
                csv: None,
                exit_code: 0,
            })
        }
    }
}

fn manifold_of(loaded: &Loaded, command: &str) -> Result<ManifoldSpec, CliError> {
    match &loaded.spec {
        SpecFile::Manifold(m) => Ok(m.clone()),
        SpecFile::Curve(_) => Err(CliError::Input(format!("{command} needs a manifold spec, not a curve"))),
    }
}

fn levi_json(l: &LeviPair) -> Result<(Value, String), CliError> {
    let p = mizner_poly(l)?;
    let flags = nondegenerate(l, 1e-8)?;
    let v = json!({
        "size": l.size(),
        "l1": cmat_json(l.l[0].matrix()),
        "l2": cmat_json(l.l[1].matrix()),
        "h_frame": l.h_frame.iter().map(|v| cvec_json(&v.0)).collect::<Vec<_>>(),
        "normal_frame": l.normal_frame.iter().map(|v| cvec_json(&v.0)).collect::<Vec<_>>(),
        "mizner": {
            "coefficients": p.coeffs,
            "normalized": p.normalized(),
            "imag_residue": p.imag_residue,
        },
        "independent": flags.independent,
        "common_kernel": flags.common_kernel,
        "nondegenerate": flags.nondegenerate,
    });
    let coeffs: Vec<String> = p
        .normalized()
        .unwrap_or_else(|| p.coeffs.clone())
        .iter()
        .map(|c| format!("{c:.6}"))
        .collect();
    let text = format!(
        "Levi pair of size {}; Mizner coefficients (normalized) [{}]; nondegenerate={}\n",
        l.size(),
        coeffs.join(", "),
        flags.nondegenerate
    );
    Ok((v, text))
}

fn levi(
    g: &GlobalOpts,
    path: &Path,
    point: Option<&str>,
    jump_index: Option<usize>,
    fiber: Option<&str>,
) -> Result<Outcome, CliError> {
    let mut timer = Timer::new(g.timings);
    let loaded = load(path, g)?;
    let m = manifold_of(&loaded, "levi")?;
    require_valid(&m)?;
    let fiber = fiber.map(|f| parse_complex_list(f, ':')).transpose()?;
    let jump_hint = "the point is a complex jump point; pass --fiber a:b:… to evaluate levi_on_blowup there";

    let (base, pair) = match (point, jump_index) {
        (None, None) => return Err(CliError::Input("levi needs --point or --jump-index".into())),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
        (None, Some(k)) => {
            let jumps = find_jumps(&m, &JumpSearch::default())?;
            timer.lap("find_jumps");
            let j = jumps
                .get(k)
                .ok_or_else(|| CliError::Input(format!("jump index {k} out of range ({} jumps)", jumps.len())))?;
            let d = fiber.ok_or_else(|| CliError::Input(jump_hint.into()))?;
            let pair = levi_on_blowup(&m, j, &d)?;
            (
                json!({ "jump_index": k, "point": cvec_json(&j.point.coords.0), "fiber": cvec_json(&d) }),
                pair,
            )
        }
        (Some(p), None) => {
            let q = parse_complex_list(p, ',')?;
            if q.len() != m.dim() {
                return Err(CliError::Input(format!(
                    "--point needs {} coordinates, got {}",
                    m.dim(),
                    q.len()
                )));
            }
            let p = project_to_x(&m, &q, NEWTON_MAX_ITER)?;
            timer.lap("project");
            let at_jump = m.pair_jet(&p.coords.0, 1)?.wedge_sine() <= m.tol.rank;
            let pair = match (at_jump, &fiber) {
                (false, _) => levi_form(&m, &p)?,
                (true, None) => return Err(CliError::Input(jump_hint.into())),
                (true, Some(d)) => {
                    let j = transversality(&m, &JumpPoint::new(&m, p.clone())?)?;
                    levi_on_blowup(&m, &j, d)?
                }
            };
            let mut base = json!({ "point": cvec_json(&p.coords.0), "residual": p.residual, "jump": at_jump });
            if let (true, Some(d)) = (at_jump, &fiber) {
                base["fiber"] = cvec_json(d);
            }
            (base, pair)
        }
    };
    timer.lap("levi");
    let (levi, text) = levi_json(&pair)?;
    let results = json!({ "base": base, "levi": levi });
    Ok(Outcome {
        report: render_report("levi", Some(&loaded.echo), settings(g, Some(m.tol)), results, json!({})),
        summary: text,
        csv: None,
        exit_code: 0,
    })
}

fn parse_ladder(eps: Option<&str>) -> Result<Option<Vec<f64>>, CliError> {
    let Some(s) = eps else { return Ok(None) };
    let ladder: Vec<f64> = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad ladder value {x:?}")))
        })
        .collect::<Result<_, _>>()?;
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] >= w[0]) || ladder.iter().any(|x| x.is_nan() || *x <= 0.0) {
        return Err(CliError::Input("--eps must be positive and strictly decreasing".into()));
    }
    Ok(Some(ladder))
}

fn unit_vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn curve_fiber_json(f: &BlowupFiber) -> Value {
    json!({
        "base": [f.base[0].re, f.base[1].re],
        "points": f.points.iter().map(|p| json!([p.coords[0].re, p.coords[1].re])).collect::<Vec<_>>(),
        "diagnostics": {
            "ladder": f.diagnostics.ladder,
            "roots_per_level": f.diagnostics.roots_per_level,
            "warnings": f.diagnostics.warnings,
            "chains": f.diagnostics.chains.iter().map(|c| json!({
                "levels": c.levels,
                "order": c.order,
                "correction": c.correction,
                "limit": [c.limit.coords[0].re, c.limit.coords[1].re],
            })).collect::<Vec<_>>(),
        },
    })
}

fn blowup(
    g: &GlobalOpts,
    path: &Path,
    rays: usize,
    eps: Option<&str>,
    jump_index: Option<usize>,
) -> Result<Outcome, CliError> {
    let mut timer = Timer::new(g.timings);
    let loaded = load(path, g)?;
    let ladder = parse_ladder(eps)?;
    match &loaded.spec {
        SpecFile::Curve(c) => blowup_curve(g, &loaded.echo, c, ladder, &mut timer),
        SpecFile::Manifold(m) => blowup_cr(g, &loaded.echo, m, rays, ladder, jump_index, &mut timer),
    }
}

fn blowup_curve(
    g: &GlobalOpts,
    echo: &SpecEcho,
    c: &CurveSpec,
    ladder: Option<Vec<f64>>,
    timer: &mut Timer,
) -> Result<Outcome, CliError> {
    let failures = c.validate();
    if !failures.is_empty() {
        return Err(CliError::Input(format!(
            "curve failed validation: {}",
            failures.join("; ")
        )));
    }
    let ladder = ladder.unwrap_or_else(default_curve_ladder);
    let sing = curve_singularities(c)?;
    timer.lap("singularities");
    let mut fibers = Vec::new();
    let mut summary = format!("{} singular point(s)\n", sing.len());
    let mut csv = String::from("base,branch,t,dir_1,dir_2,limit_1,limit_2\n");
    for (b, s) in sing.iter().enumerate() {
        let f = curve_fiber(c, *s, &ladder, crnash::par::Execution::default())?;
        let pts: Vec<String> = f.points.iter().map(fmt_fiber).collect();
        writeln!(summary, "  ({:.6}, {:.6}): fiber {{{}}}", s[0], s[1], pts.join(", ")).expect("String write");
        for w in &f.diagnostics.warnings {
            writeln!(summary, "    warning: {w}").expect("String write");
        }
        for (k, ch) in f.diagnostics.chains.iter().enumerate() {
            for (eps, angle, v) in &ch.samples {
                writeln!(csv, "{b},{k},{eps:e},{},{},{},{}", angle.cos(), angle.sin(), v[0], v[1])
                    .expect("String write");
            }
            let l = &ch.limit.coords;
            writeln!(csv, "{b},{k},0,,,{},{}", l[0].re, l[1].re).expect("String write");
        }
        fibers.push(curve_fiber_json(&f));
    }
    timer.lap("fibers");
    let results = json!({ "kind": "curve", "singular_points": sing, "fibers": fibers });
    Ok(Outcome {
        report: render_report(
            "blowup",
            Some(echo),
            settings(g, None),
            results,
            json!({ "ladder": ladder }),
        ),
        summary,
        csv: Some(csv),
        exit_code: 0,
    })
}

fn blowup_cr(
    g: &GlobalOpts,
    echo: &SpecEcho,
    m: &ManifoldSpec,
    rays: usize,
    ladder: Option<Vec<f64>>,
    jump_index: Option<usize>,
    timer: &mut Timer,
) -> Result<Outcome, CliError> {
    require_valid(m)?;
    let ladder = ladder.unwrap_or_else(|| DEFAULT_CR_LADDER.to_vec());
    let jumps = find_jumps(m, &JumpSearch::default())?;
    timer.lap("find_jumps");
    let selected: Vec<(usize, &JumpPoint)> = match jump_index {
        Some(k) => vec![(
            k,
            jumps
                .get(k)
                .ok_or_else(|| CliError::Input(format!("jump index {k} out of range ({} jumps)", jumps.len())))?,
        )],
        None => jumps.iter().enumerate().collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let real_dim = 2 * m.n + 2;
    let mut csv = String::from("jump,ray,t");
    for k in 0..real_dim {
        write!(csv, ",dir_{}", k + 1).expect("String write");
    }
    for k in 0..m.n + 1 {
        write!(csv, ",limit_re_{0},limit_im_{0}", k + 1).expect("String write");
    }
    csv.push('\n');
    let mut summary = format!("{} jump point(s)\n", jumps.len());
    let mut out = Vec::new();
    for (idx, j) in selected {
        let model = cr_linear_model(m, j)?;
        let mut entry = json!({
            "jump": jump_json(idx, j),
            "linear_model": { "a": rmat_json(&model.a), "det": model.det, "smooth": model.smooth },
        });
        writeln!(
            summary,
            "  [{idx}] ({}) smooth={}",
            fmt_point(&j.point.coords.0),
            model.smooth
        )
        .expect("String write");
        if !model.smooth {
            entry["rays"] = json!([]);
            entry["note"] = json!("linearization is singular: no smoothness certificate, fiber not sampled");
            out.push(entry);
            continue;
        }
        let mut ray_results = Vec::new();
        let mut worst: f64 = 0.0;
        for r in 0..rays {
            let dir = unit_vector(&mut rng, real_dim);
            let sample = cr_fiber_sample(m, j, &dir, &ladder)?;
            let predicted = model
                .fiber(&dir)
                .ok_or_else(|| CliError::Internal("A·dir vanished for an invertible A".into()))?;
            let distance = sample.point.distance(&predicted);
            worst = worst.max(distance);
            let remainder = linearization_remainder(m, j, &dir, &ladder)?;
            for (t, p) in sample
                .ladder
                .iter()
                .zip(&sample.samples)
                .chain(std::iter::once((&0.0, &sample.point)))
            {
                write!(csv, "{idx},{r},{t:e}").expect("String write");
                for x in &dir {
                    write!(csv, ",{x}").expect("String write");
                }
                for z in &p.coords {
                    write!(csv, ",{},{}", z.re, z.im).expect("String write");
                }
                csv.push('\n');
            }
            ray_results.push(json!({
                "direction": dir,
                "limit": fiber_point_json(&sample.point),
                "predicted": fiber_point_json(&predicted),
                "distance": distance,
                "correction": sample.correction,
                "remainder_constant": remainder,
            }));
        }
        let targets: Vec<FiberPoint> = (0..rays)
            .map(|_| {
                let v = unit_vector(&mut rng, real_dim);
                let coords: Vec<C64> = (0..m.n + 1).map(|k| C64::new(v[k], v[m.n + 1 + k])).collect();
                FiberPoint::new(&coords).expect("unit vector")
            })
            .collect();
        let surjective = fiber_surjectivity_check(&model.a, &targets)?;
        writeln!(
            summary,
            "      {rays} ray(s): max distance to linear model {worst:.3e}; surjectivity on {} target(s): {surjective}",
            targets.len()
        )
        .expect("String write");
        entry["rays"] = Value::Array(ray_results);
        entry["surjectivity"] = json!({
            "targets": targets.iter().map(fiber_point_json).collect::<Vec<_>>(),
            "all_hit": surjective,
        });
        entry["max_model_distance"] = json!(worst);
        out.push(entry);
    }
    timer.lap("fibers");
    let results = json!({ "kind": "manifold", "n": m.n, "jumps": out });
    Ok(Outcome {
        report: render_report(
            "blowup",
            Some(echo),
            settings(g, Some(m.tol)),
            results,
            json!({ "ladder": ladder, "rays": rays }),
        ),
        summary,
        csv: Some(csv),
        exit_code: 0,
    })
}

fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let s = s.trim();
    let bad = || CliError::Input(format!("cannot parse rational {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (i64, i64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            );
            if b == 0 {
                return Err(bad());
            }
            Ok(BigRational::new(a.into(), b.into()))
        }
        None => Ok(BigRational::from_integer(s.parse::<i64>().map_err(|_| bad())?.into())),
    }
}

fn chern_terms(p: &SymPoly) -> Value {
    Value::Array(
        p.terms
            .iter()
            .rev()
            .map(|(m, c)| json!({ "h": m[0], "e1": m[1], "e2": m[2], "coefficient": c.to_string() }))
            .collect(),
    )
}

fn chern(g: &GlobalOpts, n: usize, eval: Option<&str>) -> Result<Outcome, CliError> {
    let p = obstruction_class(n)?;
    let mut results = json!({
        "n": n,
        "polynomial": p.to_string(),
        "terms": chern_terms(&p),
    });
    let mut summary = format!("c_{}: {p}\n", n + 1);
    if let Some(e) = eval {
        let vals: Vec<BigRational> = e.split(',').map(parse_rational).collect::<Result<_, _>>()?;
        let [h, e1, e2] = vals.as_slice() else {
            return Err(CliError::Input("--eval needs three values h,e1,e2".into()));
        };
        let v = evaluate(&p, h, e1, e2);
        results["evaluation"] =
            json!({ "at": [h.to_string(), e1.to_string(), e2.to_string()], "value": v.to_string() });
        writeln!(summary, "value at (h, e1, e2) = ({h}, {e1}, {e2}): {v}").expect("String write");
    }
    Ok(Outcome {
        report: render_report("chern", None, json!({ "seed": g.seed }), results, json!({})),
        summary,
        csv: None,
        exit_code: 0,
    })
}

fn validate_cmd(g: &GlobalOpts, path: &Path) -> Result<Outcome, CliError> {
    let loaded = load(path, g)?;
    let (failures, tol) = match &loaded.spec {
        SpecFile::Manifold(m) => (validate(m).failures, Some(m.tol)),
        SpecFile::Curve(c) => (c.validate(), None),
    };
    let accepted = failures.is_empty();
    let results = json!({ "accepted": accepted, "failures": failures });
    let summary = if accepted {
        "spec accepted\n".to_string()
    } else {
        format!("spec rejected:\n  {}\n", failures.join("\n  "))
    };
    Ok(Outcome {
        report: render_report("validate", Some(&loaded.echo), settings(g, tol), results, json!({})),
        summary,
        csv: None,
        exit_code: if accepted { 0 } else { 2 },
    })
}
