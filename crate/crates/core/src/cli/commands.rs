use serde::Serialize;
use serde_json::json;

use crate::chaos::{cumulant_report, ChaosElement, ElementKind};
use crate::charlier::{self as ch, chaos_identity_check, parse_rational, scale_classifier, Scale};
use crate::measure::KernelFile;
use crate::partitions::{
    count_with_guard, enumerate_with_guard, lower_bound_family, verify_upper_bound, DiagramShape,
    PartitionClass,
};

use super::{CharlierCmd, CliError, CumulantsArgs, Globals, PartitionsCmd, Report, Table};

fn shape_and_class(shape: &str, class: &str) -> Result<(DiagramShape, PartitionClass), CliError> {
    Ok((shape.parse()?, class.parse()?))
}

#[derive(Serialize)]
struct ShapeSpec<'a> {
    shape: &'a [usize],
    class: PartitionClass,
}

pub(super) fn partitions(action: &PartitionsCmd, g: &Globals) -> Result<Report, CliError> {
    let guard = g.guard();
    let guard_n = guard.max_elements;
    match action {
        PartitionsCmd::Count { shape, class } => {
            let (shape, class) = shape_and_class(shape, class)?;
            let count = count_with_guard(&shape, class, guard)?;
            let spec = ShapeSpec { shape: shape.rows(), class };
            let mut table = Table::new(&["shape", "class", "count"]);
            table.push(vec![shape.to_string(), class.to_string(), count.to_string()]);
            let summary = json!({
                "spec": { "command": "partitions count", "guard_n": guard_n, "config": spec },
                "count": count,
            });
            Report::new(summary, table, "table.csv")
        }
        PartitionsCmd::Enumerate { shape, class, ascii } => {
            let (shape, class) = shape_and_class(shape, class)?;
            let parts = enumerate_with_guard(&shape, class, guard)?;
            let mut table = Table::new(&["index", "partition", "blocks"]);
            for (i, p) in parts.iter().enumerate() {
                table.push(vec![i.to_string(), p.to_string(), p.num_blocks().to_string()]);
            }
            let listed: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
            let mut summary = json!({
                "spec": {
                    "command": "partitions enumerate",
                    "guard_n": guard_n,
                    "config": { "shape": shape.rows(), "class": class, "ascii": ascii },
                },
                "count": parts.len(),
                "partitions": listed,
            });
            if *ascii {
                let drawings: Vec<String> = parts.iter().map(|p| p.render_ascii()).collect();
                summary["ascii"] = json!(drawings);
            }
            Report::new(summary, table, "table.csv")
        }
        PartitionsCmd::VerifyBound { q, m } => {
            let report = verify_upper_bound(*q, *m, guard)?;
            let mut table = Table::new(&["q", "m", "count", "bound", "holds"]);
            table.push(vec![
                q.to_string(),
                m.to_string(),
                report.count.to_string(),
                report.bound.to_string(),
                report.holds.to_string(),
            ]);
            let holds = report.holds;
            let summary = json!({
                "spec": { "command": "partitions verify-bound", "guard_n": guard_n, "config": { "q": q, "m": m } },
                "report": report,
            });
            Ok(Report::new(summary, table, "table.csv")?.fail_unless(holds, "partition count exceeds the bound"))
        }
        PartitionsCmd::LowerFamily { q, u, k } => {
            let family = lower_bound_family(*q, *u, *k, guard)?;
            let all_in_class = family
                .partitions
                .iter()
                .all(|p| PartitionClass::ConnectedNoSingletons.contains(p.classify()));
            let mut sorted = family.partitions.clone();
            sorted.sort();
            sorted.dedup();
            let distinct = sorted.len() == family.partitions.len();
            let size = family.partitions.len() as u128;
            let meets = size >= family.certificate;
            let mut table = Table::new(&["index", "partition"]);
            for (i, p) in family.partitions.iter().enumerate() {
                table.push(vec![i.to_string(), p.to_string()]);
            }
            let listed: Vec<String> = family.partitions.iter().map(|p| p.to_string()).collect();
            let summary = json!({
                "spec": {
                    "command": "partitions lower-family",
                    "guard_n": guard_n,
                    "config": { "q": q, "u": u, "k": k },
                },
                "shape": family.shape.rows(),
                "size": size,
                "certificate": family.certificate,
                "all_connected_no_singletons": all_in_class,
                "distinct": distinct,
                "partitions": listed,
            });
            Ok(Report::new(summary, table, "table.csv")?
                .fail_unless(all_in_class, "family member outside the connected no-singleton class")
                .fail_unless(distinct, "family has repeated members")
                .fail_unless(meets, "family is smaller than its certificate"))
        }
    }
}

pub(super) fn cumulants(args: &CumulantsArgs, g: &Globals) -> Result<Report, CliError> {
    let file = KernelFile::load(&args.kernels)?;
    let kind: ElementKind = args.kind.parse()?;
    let (space, kernels) = file.resolve()?;
    let chosen: Vec<_> = if args.names.is_empty() {
        kernels.iter().collect()
    } else {
        args.names
            .iter()
            .map(|n| {
                kernels
                    .iter()
                    .find(|k| &k.name == n)
                    .ok_or_else(|| CliError::Input(format!("no kernel named {n:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    if chosen.is_empty() {
        return Err(CliError::Input("kernel file has no kernels".into()));
    }
    let intensity = space.scaled(args.t)?;
    let terms = chosen.iter().map(|k| (1.0, k.kernel.clone())).collect();
    let element = ChaosElement::new(kind, intensity, terms)?;
    let report = cumulant_report(&element, args.m_max, g.guard())?;
    let mut table = Table::new(&["order", "cumulant", "normalized"]);
    for ((m, c), n) in report.orders.iter().zip(&report.cumulants).zip(&report.normalized) {
        table.push(vec![m.to_string(), c.to_string(), n.to_string()]);
    }
    let names: Vec<&str> = chosen.iter().map(|k| k.name.as_str()).collect();
    let summary = json!({
        "spec": {
            "command": "cumulants",
            "guard_n": g.guard().max_elements,
            "config": { "model": file, "kind": kind, "m_max": args.m_max, "t": args.t, "kernels": names },
        },
        "report": report,
    });
    Report::new(summary, table, "table.csv")
}

pub(super) fn charlier(action: &CharlierCmd, g: &Globals) -> Result<Report, CliError> {
    match action {
        CharlierCmd::Poly { q } => {
            let h = ch::charlier(*q);
            let coeffs: Vec<String> = h.coeffs().iter().map(|c| c.to_string()).collect();
            let mut table = Table::new(&["power", "coefficient"]);
            for (i, c) in coeffs.iter().enumerate() {
                table.push(vec![i.to_string(), c.clone()]);
            }
            let summary = json!({
                "spec": { "command": "charlier poly", "config": { "q": q } },
                "polynomial": h.to_string(),
                "coefficients_ascending": coeffs,
            });
            Report::new(summary, table, "table.csv")
        }
        CharlierCmd::Check { q, m, tol, threshold } => {
            let check = chaos_identity_check(*q, *m, *tol, g.guard())?;
            let ok = check.residual <= *threshold;
            let mut table = Table::new(&["q", "m", "series", "diagram", "residual"]);
            table.push(vec![
                q.to_string(),
                m.to_string(),
                check.series.to_string(),
                check.diagram.to_string(),
                check.residual.to_string(),
            ]);
            let summary = json!({
                "spec": {
                    "command": "charlier check",
                    "guard_n": g.guard().max_elements,
                    "config": { "q": q, "m": m, "tol": tol, "threshold": threshold },
                },
                "check": check,
                "passed": ok,
            });
            Ok(Report::new(summary, table, "table.csv")?.fail_unless(ok, "residual above threshold"))
        }
        CharlierCmd::Classify { q, c, theta, rho } => {
            let scale = Scale { c: *c, theta: parse_rational(theta)?, rho: parse_rational(rho)? };
            let regime = scale_classifier(*q, &scale)?;
            let mut table = Table::new(&["q", "c", "theta", "rho", "regime"]);
            table.push(vec![
                q.to_string(),
                c.to_string(),
                scale.theta.to_string(),
                scale.rho.to_string(),
                regime.name().to_string(),
            ]);
            let summary = json!({
                "spec": {
                    "command": "charlier classify",
                    "config": { "q": q, "c": c, "theta": scale.theta.to_string(), "rho": scale.rho.to_string() },
                },
                "regime": regime,
            });
            Report::new(summary, table, "table.csv")
        }
        CharlierCmd::Simulate { .. } => unreachable!("dispatched to experiments"),
    }
}
