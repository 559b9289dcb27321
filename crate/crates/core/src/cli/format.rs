//! Report rendering: byte-stable JSON with fixed 17-significant-digit
//! floats, CSV with the documented column set, and a human-readable text
//! summary.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use super::{Payload, RunReport};
use crate::classifier::VerdictTag;

/// JSON formatter that renders every float as 17-significant-digit
/// scientific notation, so equal values always produce equal bytes.
struct Sci17;

impl Formatter for Sci17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize any report value to deterministic JSON (fixed float format,
/// fixed field order, trailing newline).
pub fn to_json(value: &impl Serialize) -> Result<String, serde_json::Error> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sci17);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV rendering. Verify and classify emit the documented per-point table
/// (u1..un, lambda, alpha, kappa_min, kappa_max, phi, residual for
/// hypersurfaces; u1..un, phi, residual for intrinsic problems). Identities
/// emit (identity, u1..un, defect); sweeps emit the parameter columns plus
/// sup_residual and verdict. Dropped points follow as '#'-prefixed comment
/// lines.
pub fn to_csv(report: &RunReport) -> String {
    let mut out = String::new();
    match &report.payload {
        Payload::Verify(rep) => {
            let dim = rep.points.first().map(|p| p.point.len()).unwrap_or(0);
            let extrinsic = rep
                .points
                .first()
                .map(|p| p.lambda.is_some())
                .unwrap_or(false);
            let mut header: Vec<String> = (1..=dim).map(|i| format!("u{i}")).collect();
            if extrinsic {
                header.extend(
                    ["lambda", "alpha", "kappa_min", "kappa_max"]
                        .iter()
                        .map(|s| s.to_string()),
                );
            }
            header.push("phi".into());
            header.push("residual".into());
            out.push_str(&header.join(","));
            out.push('\n');
            for p in &rep.points {
                let mut row: Vec<String> = p.point.iter().map(|x| fmt_float(*x)).collect();
                if extrinsic {
                    for v in [p.lambda, p.alpha, p.kappa_min, p.kappa_max] {
                        row.push(fmt_float(v.unwrap_or(f64::NAN)));
                    }
                }
                row.push(fmt_float(p.phi));
                row.push(fmt_float(p.residual));
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Payload::Classify { points, .. } => {
            let dim = points.first().map(|p| p.point.len()).unwrap_or(0);
            let mut header: Vec<String> = (1..=dim).map(|i| format!("u{i}")).collect();
            header.extend(
                [
                    "lambda",
                    "alpha",
                    "kappa_min",
                    "kappa_max",
                    "phi",
                    "residual",
                ]
                .iter()
                .map(|s| s.to_string()),
            );
            out.push_str(&header.join(","));
            out.push('\n');
            for p in points {
                let mut row: Vec<String> = p.point.iter().map(|x| fmt_float(*x)).collect();
                for v in [p.lambda, p.alpha, p.kappa_min, p.kappa_max] {
                    row.push(fmt_float(v.unwrap_or(f64::NAN)));
                }
                row.push(fmt_float(p.phi));
                row.push(fmt_float(p.residual));
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Payload::Identities { reports, .. } => {
            let dim = reports
                .first()
                .and_then(|r| r.points.first())
                .map(|p| p.point.len())
                .unwrap_or(0);
            let mut header = vec!["identity".to_string()];
            header.extend((1..=dim).map(|i| format!("u{i}")));
            header.push("defect".into());
            out.push_str(&header.join(","));
            out.push('\n');
            for rep in reports {
                for p in &rep.points {
                    let mut row = vec![rep.id.clone()];
                    row.extend(p.point.iter().map(|x| fmt_float(*x)));
                    row.push(fmt_float(p.defect));
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
        }
        Payload::Sweep { rows } => {
            let names: Vec<String> = rows
                .first()
                .map(|r| r.params.keys().cloned().collect())
                .unwrap_or_default();
            let mut header = names.clone();
            header.push("sup_residual".into());
            header.push("verdict".into());
            out.push_str(&header.join(","));
            out.push('\n');
            for r in rows {
                let mut row: Vec<String> = names.iter().map(|n| fmt_float(r.params[n])).collect();
                row.push(r.sup_residual.map(fmt_float).unwrap_or_else(String::new));
                row.push(r.verdict.clone());
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Payload::GalleryListing { entries } => {
            out.push_str("id,kind,description\n");
            for e in entries {
                out.push_str(&format!(
                    "{},{},{}\n",
                    e.id,
                    match e.kind {
                        crate::gallery::EntryKind::Immersion => "immersion",
                        crate::gallery::EntryKind::Intrinsic => "intrinsic",
                    },
                    e.description
                ));
            }
        }
        Payload::GalleryInstance { .. } => {
            out.push_str("# gallery instance configs are JSON documents; use --format json\n");
        }
    }
    if !report.dropped.is_empty() {
        out.push_str("# dropped points\n");
        for d in &report.dropped {
            let coords: Vec<String> = d.point.iter().map(|x| fmt_float(*x)).collect();
            out.push_str(&format!("# {} : {}\n", coords.join(","), d.reason));
        }
    }
    out
}

/// Human-readable summary.
pub fn to_text(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} {} — command: {}\nconfig hash: {}\n",
        report.tool, report.version, report.command, report.config_hash
    ));
    match &report.payload {
        Payload::Verify(rep) => {
            out.push_str(&format!(
                "flavor: {}\nsamples: {}\nsup residual: {:.6e} (tolerance {:.1e})\n",
                rep.flavor,
                rep.points.len(),
                rep.sup_residual,
                rep.tol
            ));
            if let Some(rho) = rep.rho {
                out.push_str(&format!("fitted rho (constant): {rho:.12}\n"));
            }
            let phis: Vec<f64> = rep.points.iter().map(|p| p.phi).collect();
            if !phis.is_empty() {
                let mean = phis.iter().sum::<f64>() / phis.len() as f64;
                out.push_str(&format!("phi: mean {mean:.12}\n"));
            }
            out.push_str(&format!("verdict: {:?}\n", rep.verdict));
        }
        Payload::Identities { reports, skipped } => {
            for rep in reports {
                out.push_str(&format!(
                    "identity {:<14} sup defect {:.6e}  (tol {:.1e})  {}\n",
                    rep.id,
                    rep.sup_defect,
                    rep.tol,
                    if rep.pass { "PASS" } else { "FAIL" }
                ));
                if let Some(note) = &rep.note {
                    out.push_str(&format!("  note: {note}\n"));
                }
            }
            for s in skipped {
                out.push_str(&format!("identity {:<14} skipped: {}\n", s.id, s.reason));
            }
        }
        Payload::Classify { verdict, points } => {
            out.push_str(&format!("samples: {}\n", points.len()));
            match &verdict.tag {
                VerdictTag::Hyperplane { normal, offset } => {
                    out.push_str(&format!(
                        "verdict: hyperplane\n  normal: {normal:?}\n  offset: {offset:.12}\n"
                    ));
                }
                VerdictTag::Cone {} => out.push_str("verdict: cone (vertex at the origin)\n"),
                VerdictTag::Hypersphere { center, radius } => {
                    out.push_str(&format!(
                        "verdict: hypersphere\n  center: {center:?}\n  radius: {radius:.12}\n"
                    ));
                }
                VerdictTag::NotSoliton {} => out.push_str("verdict: not a soliton\n"),
                VerdictTag::Undetermined {} => out.push_str("verdict: undetermined\n"),
            }
            let d = &verdict.diagnostics;
            out.push_str(&format!(
                "diagnostics:\n  sup residual: {:.6e}\n  |lambda| range: [{:.6e}, {:.6e}]\n  umbilic spread max: {:.6e}\n  alpha: mean {:.6e}, stddev {:.6e}\n",
                d.sup_residual, d.min_abs_lambda, d.max_abs_lambda, d.umbilic_spread_max, d.alpha_mean, d.alpha_stddev
            ));
            if let Some(v) = d.center_stddev {
                out.push_str(&format!("  center stddev: {v:.6e}\n"));
            }
            if let Some(v) = d.normal_stddev {
                out.push_str(&format!("  normal stddev: {v:.6e}\n"));
            }
            if let Some(v) = d.lambda_stddev {
                out.push_str(&format!("  lambda stddev: {v:.6e}\n"));
            }
            for n in &d.notes {
                out.push_str(&format!("  note: {n}\n"));
            }
            out.push_str(&format!("  dropped: {} of {}\n", d.dropped, d.total));
        }
        Payload::Sweep { rows } => {
            out.push_str(&format!("sweep over {} cells (best first):\n", rows.len()));
            for r in rows.iter().take(20) {
                let params: Vec<String> = r
                    .params
                    .iter()
                    .map(|(k, v)| format!("{k}={v:.6}"))
                    .collect();
                match r.sup_residual {
                    Some(res) => out.push_str(&format!(
                        "  {:<30} residual {:.6e}  {}\n",
                        params.join(", "),
                        res,
                        r.verdict
                    )),
                    None => out.push_str(&format!("  {:<30} {}\n", params.join(", "), r.verdict)),
                }
            }
            if rows.len() > 20 {
                out.push_str(&format!(
                    "  ... {} more rows (use json/csv)\n",
                    rows.len() - 20
                ));
            }
        }
        Payload::GalleryListing { entries } => {
            for e in entries {
                let params: Vec<String> = e
                    .params
                    .iter()
                    .map(|p| format!("{}={}", p.name, p.default))
                    .collect();
                out.push_str(&format!(
                    "{:<22} {:<10} {}\n",
                    e.id,
                    match e.kind {
                        crate::gallery::EntryKind::Immersion => "immersion",
                        crate::gallery::EntryKind::Intrinsic => "intrinsic",
                    },
                    e.description
                ));
                if !params.is_empty() {
                    out.push_str(&format!("{:<22} params: {}\n", "", params.join(", ")));
                }
            }
        }
        Payload::GalleryInstance { config } => {
            out.push_str("instantiated config:\n");
            out.push_str(&to_json(config).unwrap_or_default());
        }
    }
    if !report.dropped.is_empty() {
        out.push_str(&format!("dropped points: {}\n", report.dropped.len()));
        for d in report.dropped.iter().take(5) {
            out.push_str(&format!("  {:?}: {}\n", d.point, d.reason));
        }
    }
    out.push_str(&format!("wall clock: {:.1} ms\n", report.wall_ms));
    out
}
