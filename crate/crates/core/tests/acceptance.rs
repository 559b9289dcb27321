//! Acceptance suite: each test checks one numbered criterion at its stated
//! tolerance and prints a PASS/FAIL line.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use solitonscope::classifier::{classify, ClassifyConfig, VerdictTag};
use solitonscope::cli;
use solitonscope::expr::{eval_jet, parse, EvalContext, Expr};
use solitonscope::gallery::{self, EntryKind, Instance};
use solitonscope::soliton::{self, Flavor, Geometry, SolitonProblem};
use solitonscope::tensor::MetricField;
use solitonscope::Immersion;

fn report(criterion: &str, description: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} ({description}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

fn default_instance(id: &str) -> Instance {
    gallery::instantiate(id, &BTreeMap::new()).unwrap()
}

fn immersion_of(inst: &Instance) -> &Immersion {
    match &inst.geometry {
        Geometry::Surface(s) => s,
        Geometry::Intrinsic { .. } => panic!("{} is not an immersion", inst.id),
    }
}

fn gallery_immersions() -> Vec<Instance> {
    gallery::list_entries()
        .into_iter()
        .filter(|e| e.kind == EntryKind::Immersion)
        .map(|e| default_instance(e.id))
        .collect()
}

#[test]
fn criterion_01_universal_lie_identity() {
    // two computation routes of the Lie derivative agree componentwise to
    // relative 1e-8 on >= 6 gallery immersions x ~100 grid points
    let mut worst: f64 = 0.0;
    let mut surfaces = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for inst in gallery_immersions() {
        let s = immersion_of(&inst);
        let points = inst.sample_points();
        assert!(points.len() >= 90, "{}: {} points", inst.id, points.len());
        let rep = soliton::identity_s3(s, &points, 1e-8).unwrap();
        worst = worst.max(rep.sup_defect);
        assert!(
            rep.sup_defect <= 1e-8,
            "{}: s3 defect {}",
            inst.id,
            rep.sup_defect
        );
        // and again at 100 random chart points
        let random: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                s.domain()
                    .iter()
                    .map(|b| rng.random_range(b.min..=b.max))
                    .collect()
            })
            .filter(|p: &Vec<f64>| s.check_point(p).is_ok())
            .collect();
        let rep = soliton::identity_s3(s, &random, 1e-8).unwrap();
        worst = worst.max(rep.sup_defect);
        assert!(
            rep.sup_defect <= 1e-8,
            "{} (random): {}",
            inst.id,
            rep.sup_defect
        );
        surfaces += 1;
    }
    report(
        "01",
        "universal Lie identity, two routes",
        surfaces >= 6 && worst <= 1e-8,
        &format!("{surfaces} immersions, worst defect {worst:.3e} <= 1e-8"),
    );
}

#[test]
fn criterion_02_trace_identity() {
    // phi = 1 + lambda alpha to 1e-9, including non-solitons
    let mut worst: f64 = 0.0;
    for inst in gallery_immersions() {
        let s = immersion_of(&inst);
        for p in inst.sample_points() {
            let check = soliton::surface_point_check(s, &p).unwrap();
            let defect = (check.phi - 1.0 - check.frame.lambda * check.frame.alpha).abs();
            worst = worst.max(defect);
            assert!(defect <= 1e-9, "{} at {p:?}: {defect}", inst.id);
        }
    }
    report(
        "02",
        "trace identity phi = 1 + lambda alpha",
        worst <= 1e-9,
        &format!("worst defect {worst:.3e} <= 1e-9"),
    );
}

#[test]
fn criterion_03_gauss_codazzi() {
    let mut worst: f64 = 0.0;
    for inst in gallery_immersions() {
        let s = immersion_of(&inst);
        let points = inst.sample_points();
        assert!(points.len() >= 90);
        for p in &points {
            let r = s.compatibility_at(p).unwrap();
            worst = worst.max(r.gauss).max(r.codazzi);
            assert!(
                r.gauss <= 1e-8 && r.codazzi <= 1e-8,
                "{} at {p:?}: gauss {} codazzi {}",
                inst.id,
                r.gauss,
                r.codazzi
            );
        }
    }
    report(
        "03",
        "Gauss and Codazzi residuals",
        worst <= 1e-8,
        &format!("worst residual {worst:.3e} <= 1e-8"),
    );
}

#[test]
fn criterion_04_curvature_closed_forms() {
    // sphere S^2(r = 2) induced metric: R = 0.5
    let mut params = BTreeMap::new();
    params.insert("r".to_string(), 2.0);
    let sphere = gallery::instantiate("sphere", &params).unwrap();
    let metric = immersion_of(&sphere).induced_metric();
    let mut worst: f64 = 0.0;
    for p in [[0.7, 1.1], [1.4, 3.0], [2.2, 5.5]] {
        let c = metric.curvature_at(&p).unwrap();
        worst = worst.max((c.r_scalar - 0.5).abs());
    }

    // intrinsic unit S^3: R = 6, sigma_1 = 1.5, sigma_2 = 0.75
    let s3 = MetricField::from_lower_triangular(
        3,
        vec![
            parse("1").unwrap(),
            parse("0").unwrap(),
            parse("sin(u1)^2").unwrap(),
            parse("0").unwrap(),
            parse("0").unwrap(),
            parse("sin(u1)^2*sin(u2)^2").unwrap(),
        ],
    )
    .unwrap();
    let c = s3.curvature_at(&[0.8, 1.2, 0.5]).unwrap();
    worst = worst.max((c.r_scalar - 6.0).abs());
    worst = worst.max((c.sigma_k(1).unwrap() - 1.5).abs());
    worst = worst.max((c.sigma_k(2).unwrap() - 0.75).abs());

    // hyperbolic half-plane: R = -2
    let hyp = MetricField::from_lower_triangular(
        2,
        vec![
            parse("1/u2^2").unwrap(),
            parse("0").unwrap(),
            parse("1/u2^2").unwrap(),
        ],
    )
    .unwrap();
    let c = hyp.curvature_at(&[0.0, 1.0]).unwrap();
    worst = worst.max((c.r_scalar + 2.0).abs());

    report(
        "04",
        "curvature closed forms",
        worst <= 1e-9,
        &format!("worst deviation {worst:.3e} <= 1e-9"),
    );
}

#[test]
fn criterion_05_sigma1_equals_scaled_scalar_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let monomials = ["u1^2", "u2^2", "u3^2", "u1*u2", "u1*u3", "u2*u3"];
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut lower = Vec::new();
        for i in 0..3 {
            for j in 0..=i {
                let mut entry = if i == j {
                    "1".to_string()
                } else {
                    "0".to_string()
                };
                for m in monomials {
                    let c: f64 = rng.random_range(-0.04..0.04);
                    entry.push_str(&format!("+({c})*{m}"));
                }
                lower.push(parse(&entry).unwrap());
            }
        }
        let metric = MetricField::from_lower_triangular(3, lower).unwrap();
        for _ in 0..50 {
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c = metric.curvature_at(&p).unwrap();
            let expect = c.r_scalar / 4.0;
            let defect = (c.sigma_k(1).unwrap() - expect).abs() / (1.0 + expect.abs());
            worst = worst.max(defect);
            assert!(defect <= 1e-10, "at {p:?}: {defect}");
        }
    }
    report(
        "05",
        "sigma_1 = R / (2(n-1)) on random metrics",
        worst <= 1e-10,
        &format!("10 metrics x 50 points, worst relative defect {worst:.3e}"),
    );
}

#[test]
fn criterion_06_classification() {
    let cfg = ClassifyConfig::default();

    // sphere center (1,0,0), radius 2
    let mut params = BTreeMap::new();
    params.insert("r".to_string(), 2.0);
    params.insert("cx".to_string(), 1.0);
    let sphere = gallery::instantiate("sphere", &params).unwrap();
    let v = classify(immersion_of(&sphere), &sphere.sample_points(), &cfg).unwrap();
    let sphere_ok = match &v.tag {
        VerdictTag::Hypersphere { center, radius } => {
            (center[0] - 1.0).abs() <= 1e-6
                && center[1].abs() <= 1e-6
                && center[2].abs() <= 1e-6
                && (radius - 2.0).abs() <= 1e-6
        }
        _ => false,
    };
    assert!(sphere_ok, "sphere verdict: {v:?}");

    // plane offset 5
    let plane = default_instance("hyperplane");
    let v = classify(immersion_of(&plane), &plane.sample_points(), &cfg).unwrap();
    let plane_ok = match &v.tag {
        VerdictTag::Hyperplane { normal, offset } => {
            normal[0].abs() <= 1e-8
                && normal[1].abs() <= 1e-8
                && (normal[2].abs() - 1.0).abs() <= 1e-8
                && (offset.abs() - 5.0).abs() <= 1e-8
                && (normal[2] * 5.0 - offset).abs() <= 1e-8
        }
        _ => false,
    };
    assert!(plane_ok, "plane verdict: {v:?}");

    // cone and torus
    let cone = default_instance("circular_cone");
    let v = classify(immersion_of(&cone), &cone.sample_points(), &cfg).unwrap();
    let cone_ok = v.tag == VerdictTag::Cone {};
    assert!(cone_ok, "cone verdict: {v:?}");
    let torus = default_instance("torus");
    let v = classify(immersion_of(&torus), &torus.sample_points(), &cfg).unwrap();
    let torus_ok = v.tag == VerdictTag::NotSoliton {};
    assert!(torus_ok, "torus verdict: {v:?}");

    // rotation invariance of the sphere verdict
    let (c1, s1) = (0.5f64.cos(), 0.5f64.sin());
    let (c2, s2) = (0.9f64.cos(), 0.9f64.sin());
    let rot = [
        [c1, -s1, 0.0],
        [c2 * s1, c2 * c1, -s2],
        [s2 * s1, s2 * c1, c2],
    ];
    let base = immersion_of(&sphere).components();
    let comps: Vec<Expr> = rot
        .iter()
        .map(|row| {
            let mut acc = Expr::Num(0.0);
            for (coef, comp) in row.iter().zip(base) {
                acc = Expr::add(acc, Expr::mul(Expr::num(*coef), comp.clone()));
            }
            acc
        })
        .collect();
    let rotated = Immersion::new(2, comps, immersion_of(&sphere).domain().to_vec(), None).unwrap();
    let vr = classify(&rotated, &sphere.sample_points(), &cfg).unwrap();
    let rot_ok = match &vr.tag {
        VerdictTag::Hypersphere { center, radius } => {
            let mut ok = (radius - 2.0).abs() <= 1e-6;
            for i in 0..3 {
                let expect = rot[i][0]; // rotated (1,0,0)
                ok &= (center[i] - expect).abs() <= 1e-6;
            }
            ok
        }
        _ => false,
    };
    assert!(rot_ok, "rotated sphere verdict: {vr:?}");

    report(
        "06",
        "classification with recovered parameters",
        sphere_ok && plane_ok && cone_ok && torus_ok && rot_ok,
        "sphere (1e-6), plane (1e-8), cone, torus, rotation invariance (1e-6)",
    );
}

#[test]
fn criterion_07_concurrent_field_phi_one() {
    let inst = default_instance("flat_quadratic");
    let Geometry::Intrinsic { metric, vector, .. } = &inst.geometry else {
        panic!("flat_quadratic is intrinsic");
    };
    let v = vector.as_ref().unwrap();
    let points = inst.sample_points();
    let concurrent = soliton::check_concurrent(metric, v, &points, 1e-12).unwrap();
    let prob = SolitonProblem {
        geometry: Geometry::Intrinsic {
            metric: metric.clone(),
            potential: None,
            vector: Some(v.clone()),
        },
        flavor: Flavor::Conformal,
        h_function: None,
        points,
        tol: 1e-7,
    };
    let rep = soliton::check_conformal(&prob).unwrap();
    let phi_worst = rep
        .points
        .iter()
        .fold(0.0f64, |a, p| a.max((p.phi - 1.0).abs()));
    report(
        "07",
        "concurrent field forces phi = 1",
        concurrent.sup_defect <= 1e-12 && phi_worst <= 1e-10,
        &format!(
            "nabla-v defect {:.3e} <= 1e-12, |phi - 1| {:.3e} <= 1e-10",
            concurrent.sup_defect, phi_worst
        ),
    );
}

#[test]
fn criterion_08_minimal_surfaces_phi_one() {
    let mut worst_alpha: f64 = 0.0;
    let mut worst_phi: f64 = 0.0;
    for id in ["catenoid", "helicoid"] {
        let inst = default_instance(id);
        let s = immersion_of(&inst);
        let points = inst.sample_points();
        assert!(points.len() >= 90);
        for p in &points {
            let check = soliton::surface_point_check(s, p).unwrap();
            worst_alpha = worst_alpha.max(check.frame.alpha.abs());
            worst_phi = worst_phi.max((check.phi - 1.0).abs());
        }
    }
    report(
        "08",
        "minimal surfaces have phi = 1",
        worst_alpha <= 1e-9 && worst_phi <= 1e-8,
        &format!("|alpha| {worst_alpha:.3e} <= 1e-9, |phi - 1| {worst_phi:.3e} <= 1e-8"),
    );
}

#[test]
fn criterion_09_f1_identity() {
    // flat R^3 with a quadratic potential
    let flat = default_instance("flat_quadratic");
    let Geometry::Intrinsic {
        metric, potential, ..
    } = &flat.geometry
    else {
        panic!()
    };
    let rep_flat = soliton::identity_f1(
        metric,
        potential.as_ref().unwrap(),
        &flat.sample_points(),
        1e-6,
    )
    .unwrap();

    // warped cosh cylinder, precondition hess f = sinh t * g at 1e-8 first
    let warped = default_instance("warped_cosh_cylinder");
    let Geometry::Intrinsic {
        metric, potential, ..
    } = &warped.geometry
    else {
        panic!()
    };
    let f = potential.as_ref().unwrap();
    let mut precondition: f64 = 0.0;
    for p in warped.sample_points() {
        let sf = metric.scalar_field_at(f, &p).unwrap();
        let c = metric.curvature_at(&p).unwrap();
        let phi = p[0].sinh();
        for i in 0..3 {
            for j in 0..3 {
                precondition = precondition.max((sf.hess[i][j] - phi * c.g[i][j]).abs());
            }
        }
    }
    assert!(precondition <= 1e-8, "precondition {precondition}");
    let rep_warped = soliton::identity_f1(metric, f, &warped.sample_points(), 1e-6).unwrap();

    let worst = rep_flat.sup_defect.max(rep_warped.sup_defect);
    report(
        "09",
        "conformal-gradient identity lemma",
        precondition <= 1e-8 && worst <= 1e-6,
        &format!("precondition {precondition:.3e} <= 1e-8, worst defect {worst:.3e} <= 1e-6"),
    );
}

#[test]
fn criterion_10_gradient_structure() {
    // V^T equals the induced-metric gradient of |F|^2/2 componentwise
    let mut worst: f64 = 0.0;
    for inst in gallery_immersions() {
        let s = immersion_of(&inst);
        let metric = s.induced_metric();
        let f = soliton::half_norm_squared(s);
        let points = inst.sample_points();
        assert!(points.len() >= 90);
        for p in &points {
            let frame = s.frame_at(p).unwrap();
            let sf = metric.scalar_field_at(&f, p).unwrap();
            for i in 0..s.dim() {
                worst = worst.max((frame.vt_chart[i] - sf.grad[i]).abs());
            }
        }
    }
    report(
        "10",
        "tangential position is the gradient of |F|^2/2",
        worst <= 1e-9,
        &format!("worst componentwise defect {worst:.3e} <= 1e-9"),
    );
}

#[test]
fn criterion_11_jet_engine() {
    // collect the gallery expression corpus
    let mut corpus: Vec<(Expr, Vec<Vec<f64>>)> = Vec::new();
    for entry in gallery::list_entries() {
        let inst = default_instance(entry.id);
        let points = inst.sample_points();
        let picks = vec![
            points[0].clone(),
            points[points.len() / 2].clone(),
            points[points.len() - 1].clone(),
        ];
        let mut exprs: Vec<Expr> = Vec::new();
        match &inst.geometry {
            Geometry::Surface(s) => exprs.extend(s.components().iter().cloned()),
            Geometry::Intrinsic {
                metric,
                potential,
                vector,
            } => {
                for i in 0..metric.dim() {
                    for j in 0..=i {
                        exprs.push(metric.component(i, j).clone());
                    }
                }
                if let Some(f) = potential {
                    exprs.push(f.clone());
                }
                if let Some(v) = vector {
                    exprs.extend(v.iter().cloned());
                }
            }
        }
        if let Some(h) = &inst.h_function {
            exprs.push(h.clone());
        }
        for e in exprs {
            corpus.push((e, picks.clone()));
        }
    }
    assert!(corpus.len() >= 30, "corpus size {}", corpus.len());

    // finite-difference consistency: each order-m partial against central
    // differences of the order-(m-1) jet partials
    let mut worst: f64 = 0.0;
    let mut checks = 0usize;
    for (e, points) in &corpus {
        let vars: Vec<String> = e.free_vars().into_iter().collect();
        if vars.is_empty() {
            continue;
        }
        let nv = vars.len();
        for point in points {
            let coords = &point[..nv.min(point.len())];
            if coords.len() < nv {
                continue;
            }
            let bind = |p: &[f64], order: usize| {
                EvalContext::new(vars.iter().cloned().zip(p.iter().copied()).collect(), order)
            };
            for axis in 0..nv {
                let step = 1e-4 * coords[axis].abs().max(1.0);
                // multi-indices of the base jet, up to order 3
                let base = match eval_jet(e, &bind(coords, 3)) {
                    Ok(j) => j,
                    Err(_) => continue, // outside a function domain: skip
                };
                let _ = base;
                for total in 0..=3usize {
                    let full = eval_jet(e, &bind(coords, total + 1)).unwrap();
                    let mut plus = coords.to_vec();
                    plus[axis] += step;
                    let mut minus = coords.to_vec();
                    minus[axis] -= step;
                    let (jp, jm) = match (
                        eval_jet(e, &bind(&plus, total)),
                        eval_jet(e, &bind(&minus, total)),
                    ) {
                        (Ok(a), Ok(b)) => (a, b),
                        _ => continue,
                    };
                    // iterate all indices of degree == total
                    for (idx, _) in full.partials() {
                        let degree: usize = idx.iter().map(|&x| x as usize).sum();
                        if degree != total {
                            continue;
                        }
                        let gamma: Vec<usize> = idx.iter().map(|&x| x as usize).collect();
                        let mut bumped = gamma.clone();
                        bumped[axis] += 1;
                        let jet_val = full.partial(&bumped);
                        let fd = (jp.partial(&gamma) - jm.partial(&gamma)) / (2.0 * step);
                        let defect = (jet_val - fd).abs() / jet_val.abs().max(1.0);
                        worst = worst.max(defect);
                        checks += 1;
                        assert!(
                            defect <= 1e-5,
                            "expr `{e}` at {coords:?}, d{gamma:?} along {axis}: jet {jet_val} vs fd {fd}"
                        );
                    }
                }
            }
        }
    }

    // polynomial jets are exact against the symbolic-derivative oracle
    let mut rng = ChaCha8Rng::seed_from_u64(1101);
    let mut poly_worst: f64 = 0.0;
    for _ in 0..40 {
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let text = format!(
            "({})*u1^4+({})*u1^2*u2+({})*u2^3+({})*u1*u2*u3+({})*u3^2+({})",
            c[0], c[1], c[2], c[3], c[4], c[5]
        );
        let e = parse(&text).unwrap();
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
        let vars = ["u1", "u2", "u3"];
        let ctx = EvalContext::new(
            vars.iter()
                .map(|v| v.to_string())
                .zip(p.iter().copied())
                .collect(),
            4,
        );
        let jet = eval_jet(&e, &ctx).unwrap();
        let binds: Vec<(String, f64)> = vars
            .iter()
            .map(|v| v.to_string())
            .zip(p.iter().copied())
            .collect();
        for (idx, val) in jet.partials() {
            // symbolic oracle: repeated diff then plain evaluation
            let mut oracle = e.clone();
            for (axis, &count) in idx.iter().enumerate() {
                for _ in 0..count {
                    oracle = oracle.diff(vars[axis]);
                }
            }
            let expect = solitonscope::eval_scalar(&oracle, &binds).unwrap();
            let defect = (val - expect).abs() / expect.abs().max(1.0);
            poly_worst = poly_worst.max(defect);
            assert!(defect <= 1e-12, "poly partial {idx:?}: {val} vs {expect}");
        }
    }

    report(
        "11",
        "jet engine against finite differences and symbolic oracle",
        worst <= 1e-5 && poly_worst <= 1e-12,
        &format!(
            "{checks} fd checks, worst {worst:.3e} <= 1e-5; polynomial worst {poly_worst:.3e} <= 1e-12"
        ),
    );
}

#[test]
fn criterion_12_deterministic_reports() {
    let mut compared = 0;
    for entry in gallery::list_entries() {
        let cfg = cli::gallery_config(entry.id).unwrap();
        let r1 = cli::execute(cli::Command::Verify, &cfg, None).unwrap();
        let r2 = cli::execute(cli::Command::Verify, &cfg, None).unwrap();
        let j1 = cli::render(&r1.report, cli::OutputFormat::Json).unwrap();
        let j2 = cli::render(&r2.report, cli::OutputFormat::Json).unwrap();
        assert_eq!(j1, j2, "verify report for {} not byte-identical", entry.id);
        if entry.kind == EntryKind::Immersion {
            let c1 = cli::execute(cli::Command::Classify, &cfg, None).unwrap();
            let c2 = cli::execute(cli::Command::Classify, &cfg, None).unwrap();
            let j1 = cli::render(&c1.report, cli::OutputFormat::Json).unwrap();
            let j2 = cli::render(&c2.report, cli::OutputFormat::Json).unwrap();
            assert_eq!(
                j1, j2,
                "classify report for {} not byte-identical",
                entry.id
            );
        }
        compared += 1;
    }
    report(
        "12",
        "byte-identical JSON reports",
        compared == gallery::list_entries().len(),
        &format!("{compared} gallery configs, verify (+classify) run twice each"),
    );
}
