use rdme_core::rates::{self, Flags, PhysicalParams};
use serde_json::json;

use super::{finite_or_null, pair_points, summary_head, Point};
use crate::config::{Axis, ExperimentConfig};
use crate::error::CliError;
use crate::output::{num, opt, Bundle, Table};

/// Closed-form quantities of one pair at one width.
#[derive(Debug, Clone, Copy)]
struct Report {
    h: f64,
    rho: Option<f64>,
    kd_meso_ratio: Option<f64>,
    k_ck: Option<f64>,
    h_star_kr: f64,
    h_star_inf: f64,
    mesh_bound: f64,
    eps_max: Option<f64>,
    flags: Flags,
    no_valid_rate: bool,
}

fn report(p: &PhysicalParams<f64>, h: f64, eps: f64) -> Result<Report, CliError> {
    let crit = rates::h_star(p);
    let rho = rates::rho_meso(h, p);
    let ratio = rates::kd_meso(h, &PhysicalParams { k_d: 1.0, ..*p }).ok().map(|r| r.value);
    let bound = rates::mesh_bound_f(p, eps).map_err(|e| CliError::Config(e.to_string()))?;
    let mut flags = rho.as_ref().map(|r| r.flags).unwrap_or_default();
    flags.eps_at_or_above_max |= bound.flags.eps_at_or_above_max;
    Ok(Report {
        h,
        rho: rho.as_ref().ok().map(|r| r.value),
        kd_meso_ratio: ratio,
        k_ck: rates::collins_kimball(p).ok(),
        h_star_kr: crit.h_star_kr,
        h_star_inf: crit.h_star_inf,
        mesh_bound: bound.value.to_f64(),
        eps_max: rates::eps_max(p).ok(),
        flags,
        no_valid_rate: rho.is_err(),
    })
}

fn flag_text(r: &Report) -> String {
    let mut f = Vec::new();
    if r.no_valid_rate {
        f.push("no_valid_rate");
    }
    if r.flags.below_h_star_inf {
        f.push("below_h_star_inf");
    }
    if r.flags.below_ten_sigma {
        f.push("below_ten_sigma");
    }
    if r.flags.eps_at_or_above_max {
        f.push("eps_at_or_above_max");
    }
    f.join(";")
}

pub fn run(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let axis = cfg.sweep.as_ref().map(|s| s.axis);
    // Sweeps over D or k_r need no voxel width.
    let points: Vec<Point> = match axis {
        Some(Axis::Diffusion) | Some(Axis::Rate) if cfg.mesh.is_none() => {
            let with_mesh = ExperimentConfig {
                mesh: Some(crate::config::MeshConfig {
                    n: 1,
                    width: crate::config::Width::HFactor(1.0),
                    boundary: Default::default(),
                }),
                ..cfg.clone()
            };
            pair_points(&with_mesh)?
        }
        _ => pair_points(cfg)?,
    };
    let mut table = match axis {
        None | Some(Axis::H) => Table::new("rates-report.csv", &["h", "rho", "h_d_rho", "k_ck", "kd_meso_ratio", "flags"]),
        Some(Axis::Diffusion) => {
            Table::new("rates-report.csv", &["D", "mesh_bound", "eps_max", "h_star_kr", "h_star_inf"])
        }
        Some(Axis::Rate) => {
            Table::new("rates-report.csv", &["k_r", "h_star_kr", "h_star_inf", "mesh_bound"])
        }
    };
    let mut rows = Vec::new();
    for pt in &points {
        let p = pt.params();
        let r = report(&p, pt.h, cfg.eps)?;
        let d = p.dim.get() as i32;
        match axis {
            None | Some(Axis::H) => table.push(vec![
                num(r.h),
                opt(r.rho),
                opt(r.rho.map(|rho| rho * r.h.powi(d))),
                opt(r.k_ck),
                opt(r.kd_meso_ratio),
                flag_text(&r),
            ]),
            Some(Axis::Diffusion) => table.push(vec![
                num(pt.pair.diffusion),
                num(r.mesh_bound),
                opt(r.eps_max),
                num(r.h_star_kr),
                num(r.h_star_inf),
            ]),
            Some(Axis::Rate) => table.push(vec![
                num(pt.pair.k_r.to_f64()),
                num(r.h_star_kr),
                num(r.h_star_inf),
                num(r.mesh_bound),
            ]),
        }
        rows.push(json!({
            "label": pt.label,
            "value": pt.value,
            "h": r.h,
            "rho": r.rho,
            "h_d_rho": r.rho.map(|rho| rho * r.h.powi(d)),
            "k_d_meso": r.kd_meso_ratio.map(|x| x * pt.pair.k_d),
            "kd_meso_ratio": r.kd_meso_ratio,
            "k_ck": r.k_ck,
            "h_star_kr": r.h_star_kr,
            "h_star_inf": r.h_star_inf,
            "mesh_bound": finite_or_null(r.mesh_bound),
            "eps": cfg.eps,
            "eps_max": r.eps_max,
            "flags": r.flags,
            "no_valid_rate": r.no_valid_rate,
        }));
    }
    let mut summary = summary_head(cfg);
    summary["points"] = json!(rows);
    let tables = if points.is_empty() { vec![] } else { vec![table] };
    Ok(Bundle {
        tables,
        extras: vec![],
        summary,
        unreliable: false,
    })
}
