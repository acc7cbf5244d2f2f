//! Builds the three separation-experiment panels: accuracy vs k, accuracy
//! vs k/log2(n), and bucket diagnostics.

use lapnode::identify::{Method, SeparationConfig, SeparationResult};

use crate::svg::{render, Curve, Panel};

const WL_SHADES: [&str; 6] = ["#9ecae1", "#4292c6", "#08519c", "#6baed6", "#2171b5", "#084594"];
const LAP_SHADES: [&str; 6] = ["#fcae91", "#fb6a4a", "#a50f15", "#fc9272", "#de2d26", "#67000d"];
const BUCKET_SHADES: [&str; 6] = ["#a1d99b", "#41ab5d", "#006d2c", "#74c476", "#238b45", "#00441b"];

fn accuracy_curves(
    result: &SeparationResult,
    cfg: &SeparationConfig,
    rescale: bool,
) -> Vec<Curve> {
    let mut curves = Vec::new();
    for (ni, &n) in cfg.n_values.iter().enumerate() {
        for (method, shades) in [(Method::Wl, WL_SHADES), (Method::Lap, LAP_SHADES)] {
            let points: Vec<(f64, f64)> = cfg
                .k_grid
                .iter()
                .filter_map(|&k| result.row(method, n, k))
                .map(|row| {
                    let x = if rescale {
                        row.k as f64 / (n as f64).log2()
                    } else {
                        row.k as f64
                    };
                    (x, row.accuracy)
                })
                .collect();
            curves.push(Curve {
                label: format!("{} n={n}", method.as_str()),
                color: shades[ni % shades.len()],
                dashed: false,
                points,
            });
        }
    }
    curves
}

fn bucket_curves(result: &SeparationResult, cfg: &SeparationConfig) -> Vec<Curve> {
    let mut curves = Vec::new();
    for (ni, &n) in cfg.n_values.iter().enumerate() {
        let rows: Vec<_> = cfg
            .k_grid
            .iter()
            .filter_map(|&k| result.row(Method::Wl, n, k))
            .collect();
        curves.push(Curve {
            label: format!("E[1/|B|] n={n}"),
            color: BUCKET_SHADES[ni % BUCKET_SHADES.len()],
            dashed: false,
            points: rows.iter().map(|r| (r.k as f64, r.exp_inv_bucket)).collect(),
        });
        curves.push(Curve {
            label: format!("P(single) n={n}"),
            color: BUCKET_SHADES[ni % BUCKET_SHADES.len()],
            dashed: true,
            points: rows.iter().map(|r| (r.k as f64, r.singleton_prob)).collect(),
        });
    }
    curves
}

/// Three-panel figure for a finished separation run.
pub fn separation_svg(result: &SeparationResult, cfg: &SeparationConfig) -> String {
    let panels = [
        Panel {
            title: "(a) top-1 accuracy vs k".into(),
            x_label: "context points k".into(),
            y_label: "accuracy".into(),
            y_range: (0.0, 1.05),
            curves: accuracy_curves(result, cfg, false),
        },
        Panel {
            title: "(b) accuracy vs k / log2 n".into(),
            x_label: "k / log2 n".into(),
            y_label: "accuracy".into(),
            y_range: (0.0, 1.05),
            curves: accuracy_curves(result, cfg, true),
        },
        Panel {
            title: "(c) bucket diagnostics".into(),
            x_label: "context points k".into(),
            y_label: "probability".into(),
            y_range: (0.0, 1.05),
            curves: bucket_curves(result, cfg),
        },
    ];
    render(&panels)
}
