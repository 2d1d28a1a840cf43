use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use expbrush::address::ExternalAddress;
use expbrush::brush::{classify as classify_point, tip as tip_value, tip_upper, ModelPoint, SubBrush};
use expbrush::complex::{render as render_image, ExpParameter, Thresholds, Viewport};
use expbrush::curve::{
    build_curve, build_localized, curve_from_families, escape_soundness, path_between, validate_family, BoxFamily,
    BrushBox, CurveBuild, PathPoint, ValidationReport,
};
use expbrush::rational::parse_rational;
use expbrush::tower::inv_square_terms;
use serde::{Deserialize, Serialize};

use crate::config::{resolve, BrushFlags, CurveFlags, Problems};
use crate::output::{emit, sidecar_path, to_json, write_atomic};
use crate::{BrushArgs, CliError, CurveArgs};

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn brush_flags(b: &BrushArgs) -> BrushFlags {
    BrushFlags {
        address: b.address.clone(),
        addresses: b.addresses.clone(),
        config: b.config.clone(),
        depth: b.depth,
    }
}

fn curve_flags(c: &CurveArgs) -> CurveFlags {
    CurveFlags {
        kmax: c.kmax,
        offset: c.offset,
        seed: c.seed.clone(),
    }
}

fn parse_one_address(s: &str) -> Result<ExternalAddress, CliError> {
    s.parse::<ExternalAddress>().map_err(|e| CliError::usage(e.to_string()))
}

pub fn verify(nmax: u64, partial_sums: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let mut csv = String::new();
    let mut failures = 0usize;
    if let Some(kmax) = partial_sums {
        if kmax == 0 {
            return Err(CliError::usage("--partial-sums must be at least 1"));
        }
        let half_pi_sq = std::f64::consts::PI.powi(2) / 2.0;
        csv.push_str("k,partial_sum,pi^2/2,pass\n");
        let mut sum = 0.0;
        let mut prev = 0.0;
        for (k, term) in inv_square_terms(kmax).into_iter().enumerate() {
            sum += term;
            let pass = sum < half_pi_sq && sum >= prev;
            failures += usize::from(!pass);
            let _ = writeln!(csv, "{},{},{},{}", k + 1, sum, half_pi_sq, pass);
            prev = sum;
        }
    } else {
        if nmax == 0 {
            return Err(CliError::usage("--nmax must be at least 1"));
        }
        csv.push_str("n,F^-n(1),3/n,pass\n");
        let mut v = 1.0_f64;
        for n in 1..=nmax {
            v = v.ln_1p();
            let bound = 3.0 / n as f64;
            let pass = v < bound;
            failures += usize::from(!pass);
            let _ = writeln!(csv, "{n},{v},{bound},{pass}");
        }
    }
    emit(out, csv.as_bytes())?;
    if failures > 0 {
        return Err(CliError::Domain(format!("{failures} rows failed")));
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckRow {
    k: u32,
    pass: bool,
}

#[derive(Serialize)]
struct TipOutput {
    address: String,
    depth: usize,
    tip: f64,
    /// Potential of the point the certificate is about, at or just above the tip.
    point: f64,
    verdict: String,
    certificate: Vec<CheckRow>,
}

pub fn tip(address: &str, depth: usize, kmax: u32, out: Option<&Path>) -> Result<(), CliError> {
    let mut problems = Problems::default();
    if depth == 0 {
        problems.push("--depth must be at least 1");
    }
    if kmax < 5 {
        problems.push("--kmax must be at least 5");
    }
    let s = crate::config::parse_address(address, &mut problems);
    let s = problems.finish(|| s.expect("parsed"))?;
    let t = tip_value(&s, depth);
    let point = tip_upper(&s, depth);
    let x = ModelPoint::new(point, s.clone()).map_err(domain)?;
    let (verdict, cert) = classify_point(&x, kmax).map_err(domain)?;
    let report = TipOutput {
        address: s.to_string(),
        depth,
        tip: t,
        point,
        verdict: verdict.to_string(),
        certificate: cert
            .map(|c| c.checks.iter().map(|ch| CheckRow { k: ch.k, pass: ch.pass }).collect())
            .unwrap_or_default(),
    };
    emit(out, &to_json(&report)?)
}

pub fn classify(address: &str, t: f64, kmax: u32, json: bool) -> Result<(), CliError> {
    let mut problems = Problems::default();
    if !(t.is_finite() && t >= 0.0) {
        problems.push(format!("--t must be a finite potential >= 0, got {t}"));
    }
    if kmax < 5 {
        problems.push("--kmax must be at least 5");
    }
    let s = crate::config::parse_address(address, &mut problems);
    let s = problems.finish(|| s.expect("parsed"))?;
    let x = ModelPoint::new(t, s).map_err(domain)?;
    let (verdict, cert) = classify_point(&x, kmax).map_err(domain)?;
    if json {
        #[derive(Serialize)]
        struct Out {
            verdict: String,
            certificate: Vec<CheckRow>,
        }
        let out = Out {
            verdict: verdict.to_string(),
            certificate: cert
                .map(|c| c.checks.iter().map(|ch| CheckRow { k: ch.k, pass: ch.pass }).collect())
                .unwrap_or_default(),
        };
        emit(None, &to_json(&out)?)
    } else {
        emit(None, format!("{verdict}\n").as_bytes())
    }
}

#[derive(Deserialize)]
struct BoxInput {
    a: f64,
    b: f64,
    c: String,
    d: String,
    level: u32,
}

#[derive(Deserialize)]
struct FamilyInput {
    level: u32,
    offset: u32,
    boxes: Vec<BoxInput>,
    parent_right_edge: f64,
    right_edge: f64,
}

#[derive(Deserialize)]
struct FamiliesFile {
    families: Vec<FamilyInput>,
}

fn load_families(path: &Path) -> Result<Vec<BoxFamily>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let file: FamiliesFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut problems = Problems::default();
    let mut out = Vec::new();
    for f in file.families {
        let mut boxes = Vec::new();
        for b in f.boxes {
            match (parse_rational(&b.c), parse_rational(&b.d)) {
                (Ok(c), Ok(d)) => boxes.push(BrushBox {
                    a: b.a,
                    b: b.b,
                    c,
                    d,
                    level: b.level,
                }),
                _ => problems.push(format!(
                    "level {}: box sides {:?}, {:?} are not rational",
                    f.level, b.c, b.d
                )),
            }
        }
        out.push(BoxFamily {
            level: f.level,
            offset: f.offset,
            boxes,
            parent_right_edge: f.parent_right_edge,
            right_edge: f.right_edge,
        });
    }
    if out.is_empty() || out[0].boxes.len() != 1 {
        problems.push("the first family must hold exactly the seed box");
    }
    problems.finish(|| out)
}

fn failed_conditions(report: &ValidationReport) -> String {
    let mut parts: Vec<String> = report
        .conditions
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("({}) {}: {}", c.id, c.name, c.witnesses.join("; ")))
        .collect();
    for extra in [&report.top_bottom_clear, &report.edge_recurrence] {
        if !extra.passed {
            parts.push(format!("{}: {}", extra.name, extra.witnesses.join("; ")));
        }
    }
    format!(
        "box conditions failed (relative to the sub-brush):\n  {}",
        parts.join("\n  ")
    )
}

#[derive(Serialize)]
struct BoxesOutput<'a> {
    seed: &'a expbrush::curve::Rect,
    offset: u32,
    kmax: u32,
    level_reached: u32,
    terminated_early: bool,
    families: &'a [BoxFamily],
    validation: &'a ValidationReport,
}

pub fn boxes(
    brush: &BrushArgs,
    curve: &CurveArgs,
    families: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = resolve(&brush_flags(brush), &curve_flags(curve))?;
    let sb = cfg.sub_brush()?;
    if let Some(path) = families {
        let fams = load_families(path)?;
        let report = validate_family(&fams, &sb).map_err(domain)?;
        emit(out, &to_json(&report)?)?;
        if !report.all_passed() {
            return Err(CliError::Domain(failed_conditions(&report)));
        }
        return Ok(());
    }
    let build = build_curve(&sb, cfg.kmax, cfg.offset, &cfg.seed).map_err(domain)?;
    let doc = BoxesOutput {
        seed: &build.seed,
        offset: build.offset,
        kmax: build.kmax,
        level_reached: build.level_reached,
        terminated_early: build.terminated_early,
        families: &build.families,
        validation: &build.validation,
    };
    emit(out, &to_json(&doc)?)?;
    if !build.validation.all_passed() {
        return Err(CliError::Domain(failed_conditions(&build.validation)));
    }
    Ok(())
}

pub struct CurveRequest {
    pub brush: BrushArgs,
    pub curve: CurveArgs,
    pub families: Option<PathBuf>,
    pub localize: Option<String>,
    pub eps: f64,
    pub out: PathBuf,
    pub sidecar: Option<PathBuf>,
}

#[derive(Serialize)]
struct JordanSummary {
    simple: bool,
    error: Option<String>,
    winding_seed_center: Option<i32>,
}

#[derive(Serialize)]
struct LocalizedSummary {
    center: (f64, f64),
    eps: f64,
    max_distance: f64,
    winding: i32,
    inside_ball: bool,
    encloses_center: bool,
}

#[derive(Serialize)]
struct CurveOutput<'a> {
    seed: &'a expbrush::curve::Rect,
    offset: u32,
    kmax: u32,
    level_reached: u32,
    terminated_early: bool,
    cauchy: &'a expbrush::curve::CauchyCertificate,
    validation: &'a ValidationReport,
    jordan: JordanSummary,
    contacts: Vec<expbrush::curve::ContactCheck>,
    localized: Option<LocalizedSummary>,
    arc: &'a expbrush::curve::Polyline,
}

pub fn curve(req: &CurveRequest) -> Result<(), CliError> {
    let mut flags = curve_flags(&req.curve);
    if req.localize.is_some() {
        // the seed is chosen around the point
        flags.seed = None;
    }
    let cfg = resolve(&brush_flags(&req.brush), &flags)?;
    let sb = cfg.sub_brush()?;
    let mut localized = None;
    let build: CurveBuild = if let Some(addr) = &req.localize {
        if !(req.eps > 0.0 && req.eps.is_finite()) {
            return Err(CliError::usage("--eps must be positive"));
        }
        let s = parse_one_address(addr)?;
        let cx = tip_value(&s, cfg.depth);
        let cy = s.approx_height();
        let lb = build_localized(cx, cy, req.eps, &sb, cfg.kmax).map_err(domain)?;
        localized = Some(LocalizedSummary {
            center: lb.center,
            eps: lb.eps,
            max_distance: lb.max_distance,
            winding: lb.winding,
            inside_ball: lb.inside_ball(),
            encloses_center: lb.encloses_center(),
        });
        lb.build
    } else if let Some(path) = &req.families {
        let fams = load_families(path)?;
        let report = validate_family(&fams, &sb).map_err(domain)?;
        if !report.all_passed() {
            let _ = emit(None, &to_json(&report)?);
            return Err(CliError::Domain(failed_conditions(&report)));
        }
        curve_from_families(fams, &sb).map_err(domain)?
    } else {
        build_curve(&sb, cfg.kmax, cfg.offset, &cfg.seed).map_err(domain)?
    };

    let jordan = build.jordan();
    let (cx, cy) = build.seed.center();
    let summary = match &jordan {
        Ok(j) => JordanSummary {
            simple: true,
            error: None,
            winding_seed_center: Some(j.winding_number(cx, &cy)),
        },
        Err(e) => JordanSummary {
            simple: false,
            error: Some(e.to_string()),
            winding_seed_center: None,
        },
    };
    let contacts = escape_soundness(&build, &sb).map_err(domain)?;

    let mut problems = Vec::new();
    if !build.validation.all_passed() {
        problems.push(failed_conditions(&build.validation));
    }
    if !build.cauchy.passed() {
        problems.push("measured deviation exceeds the Cauchy bound".to_string());
    }
    if let Some(e) = &summary.error {
        problems.push(format!("closed curve: {e}"));
    } else if summary.winding_seed_center.is_none_or(|w| w.abs() != 1) {
        problems.push("closed curve does not wind once around the seed center".to_string());
    }
    if let Some(c) = contacts.iter().find(|c| !c.pass) {
        problems.push(format!("contact {} at x = {} has no passing witness", c.address, c.x));
    }
    if let Some(l) = &localized {
        if !l.inside_ball || !l.encloses_center {
            problems.push(format!(
                "localized curve: max distance {} (eps {}), winding {}",
                l.max_distance, l.eps, l.winding
            ));
        }
    }

    let doc = CurveOutput {
        seed: &build.seed,
        offset: build.offset,
        kmax: build.kmax,
        level_reached: build.level_reached,
        terminated_early: build.terminated_early,
        cauchy: &build.cauchy,
        validation: &build.validation,
        jordan: summary,
        contacts,
        localized,
        arc: build.arc(),
    };
    write_atomic(&req.out, crate::svg::curve_svg(&build, &sb).as_bytes())?;
    write_atomic(&sidecar_path(&req.out, req.sidecar.as_deref()), &to_json(&doc)?)?;
    if build.terminated_early {
        eprintln!(
            "expbrush: no sub-brush hair reached level {}; construction stopped at level {}",
            build.level_reached + 1,
            build.level_reached
        );
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Domain(problems.join("\n")))
    }
}

/// `x,y` with rational `y`, or `t,h:ADDRESS`.
fn parse_point(s: &str, problems: &mut Problems) -> Option<PathPoint> {
    let Some((x, y)) = s.split_once(',') else {
        problems.push(format!("point {s:?} must be x,y"));
        return None;
    };
    let Some(x) = x.trim().parse::<f64>().ok().filter(|v| v.is_finite()) else {
        problems.push(format!("point {s:?}: x is not a finite number"));
        return None;
    };
    let y = y.trim();
    if let Some(addr) = y.strip_prefix("h:") {
        if x < 0.0 {
            problems.push(format!("point {s:?}: hair points need t >= 0"));
            return None;
        }
        return crate::config::parse_address(addr, problems).map(|a| PathPoint::on_hair(x, a));
    }
    match parse_rational(y) {
        Ok(r) => Some(PathPoint::exact(x, r)),
        Err(e) => {
            problems.push(format!("point {s:?}: y is not rational: {e}"));
            None
        }
    }
}

pub fn path(
    brush: &BrushArgs,
    from: &str,
    to: &str,
    kmax: Option<u32>,
    out: &Path,
    sidecar: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = resolve(
        &brush_flags(brush),
        &CurveFlags {
            kmax,
            ..CurveFlags::default()
        },
    )?;
    let mut problems = Problems::default();
    let p0 = parse_point(from, &mut problems);
    let p1 = parse_point(to, &mut problems);
    let (p0, p1) = problems.finish(|| (p0.expect("parsed"), p1.expect("parsed")))?;
    let sb: SubBrush = cfg.sub_brush()?;
    let route = path_between(&p0, &p1, &sb, cfg.kmax).map_err(domain)?;
    write_atomic(out, crate::svg::path_svg(&route, &sb).as_bytes())?;
    write_atomic(&sidecar_path(out, sidecar), &to_json(&route)?)?;
    if !route.all_certified() {
        return Err(CliError::Domain(
            "route meets a sub-brush point without a passing certificate".into(),
        ));
    }
    Ok(())
}

fn parse_viewport(s: &str, problems: &mut Problems) -> Option<Viewport> {
    let v: Vec<f64> = s.split(',').filter_map(|p| p.trim().parse().ok()).collect();
    if v.len() != 4 {
        problems.push(format!("viewport {s:?} must be re_min,re_max,im_min,im_max"));
        return None;
    }
    Viewport::new(v[0], v[1], v[2], v[3])
        .map_err(|e| problems.push(format!("viewport {s:?}: {e}")))
        .ok()
}

fn parse_size(s: &str, problems: &mut Problems) -> Option<(u32, u32)> {
    let parsed = s
        .split_once(['x', 'X'])
        .and_then(|(w, h)| Some((w.trim().parse::<u32>().ok()?, h.trim().parse::<u32>().ok()?)))
        .filter(|&(w, h)| w >= 1 && h >= 1);
    if parsed.is_none() {
        problems.push(format!("size {s:?} must be WxH with W, H >= 1"));
    }
    parsed
}

pub fn render(
    a: f64,
    viewport: &str,
    size: &str,
    max_steps: u32,
    escape_radius: f64,
    eps_attract: f64,
    out: &Path,
) -> Result<(), CliError> {
    let mut problems = Problems::default();
    let p = ExpParameter::new(a).map_err(|e| problems.push(e.to_string())).ok();
    let vp = parse_viewport(viewport, &mut problems);
    let wh = parse_size(size, &mut problems);
    if !(escape_radius > 0.0) {
        problems.push("--escape-radius must be positive");
    }
    if !(eps_attract > 0.0) {
        problems.push("--eps-attract must be positive");
    }
    let (p, vp, (w, h)) = problems.finish(|| (p.expect("parsed"), vp.expect("parsed"), wh.expect("parsed")))?;
    let th = Thresholds {
        max_steps,
        escape_radius,
        eps_attract,
    };
    let img = render_image(p, vp, w, h, &th).map_err(domain)?;
    write_atomic(out, &img.png_bytes().map_err(domain)?)?;
    let mut summary = String::new();
    for (class, n) in img.tally() {
        let _ = writeln!(summary, "{class} {n}");
    }
    emit(None, summary.as_bytes())
}
