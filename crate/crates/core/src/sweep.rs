//! Parameter-plane classification sweeps.
//!
//! A sweep scans a homogeneous two-route configuration over a grid in the
//! plane spanned by the easy route's cost-risk product `c_o * delta_1^2`
//! (x axis) and the territory gap `E_1 - E_2` (y axis), classifying each
//! cell's equilibria. The resulting region map carries two boundary
//! families: analytic curves computed from the case thresholds, and
//! empirical curves detected from where neighboring cells change their
//! equilibrium pattern. Grids export as CSV (one row per cell, row-major
//! with x varying fastest) or JSON; both outputs are deterministic byte for
//! byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{classify_case, solve_two_route, InteractionKind};
use crate::game::{validate_config, CostSpec, GameConfig, RawGameConfig};

/// Errors raised while sweeping or exporting.
#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep range: {0}")]
    InvalidRange(&'static str),
    #[error("region sweeps require a valid homogeneous two-route base configuration")]
    UnsupportedBase,
    #[error("failed to write sweep output")]
    Io(#[from] std::io::Error),
}

/// What to sweep: a base configuration and the plane window to scan.
///
/// Each cell overrides the base's marginal cost with `x / delta_1^2` and its
/// worse territory with `E_1 - y`, so the axes read directly as the
/// cost-risk product and the territory gap.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub base: RawGameConfig,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub x_resolution: usize,
    pub y_resolution: usize,
}

/// Classification of one grid cell; boundary cells list every tied
/// equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCell {
    pub x_value: f64,
    pub y_value: f64,
    pub case: u8,
    pub kinds: Vec<InteractionKind>,
    pub routes: Vec<usize>,
}

/// Whether a boundary curve came from the case thresholds or from scanning
/// the classified cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSource {
    Analytic,
    Empirical,
}

/// A polyline in the sweep plane separating equilibrium regions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub label: String,
    pub source: CurveSource,
    pub points: Vec<(f64, f64)>,
}

/// A classified sweep: `cells[iy][ix]` covers the point
/// `(x values[ix], y values[iy])`.
#[derive(Debug, Clone, Serialize)]
pub struct RegionGrid {
    pub spec: SweepSpec,
    pub cells: Vec<Vec<RegionCell>>,
    pub boundaries: Vec<BoundaryCurve>,
}

/// Output encodings for [`export_regions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

fn validate_ranges(spec: &SweepSpec) -> Result<(), SweepError> {
    let (x_lo, x_hi) = spec.x_range;
    let (y_lo, y_hi) = spec.y_range;
    if ![x_lo, x_hi, y_lo, y_hi].iter().all(|v| v.is_finite()) {
        return Err(SweepError::InvalidRange("range endpoints must be finite"));
    }
    if spec.x_resolution < 2 || spec.y_resolution < 2 {
        return Err(SweepError::InvalidRange("resolutions must be at least 2"));
    }
    if !(x_lo < x_hi) || !(y_lo < y_hi) {
        return Err(SweepError::InvalidRange("range minimum must be below maximum"));
    }
    if !(x_lo > 0.0) {
        return Err(SweepError::InvalidRange("cost-risk values must be positive"));
    }
    if !(y_lo > 0.0) {
        return Err(SweepError::InvalidRange("territory gaps must be positive"));
    }
    if !(y_hi < spec.base.territory_values[0]) {
        return Err(SweepError::InvalidRange(
            "territory gaps must stay below the better territory value",
        ));
    }
    Ok(())
}

/// Validates the base shape and returns a template configuration evaluated
/// at the window corner.
fn base_template(spec: &SweepSpec) -> Result<GameConfig, SweepError> {
    let raw = &spec.base;
    if raw.delta.len() != 2 {
        return Err(SweepError::UnsupportedBase);
    }
    let homogeneous = match raw.c_o {
        CostSpec::Shared(_) => true,
        CostSpec::PerAgent([a, b]) => a == b,
    };
    if !homogeneous {
        return Err(SweepError::UnsupportedBase);
    }
    let mut probe = raw.clone();
    probe.c_o = CostSpec::Shared(spec.x_range.0 / (raw.delta[0] * raw.delta[0]));
    probe.territory_values = [
        raw.territory_values[0],
        raw.territory_values[0] - spec.y_range.0,
    ];
    validate_config(&probe).map_err(|_| SweepError::UnsupportedBase)
}

fn cell_config(template: &GameConfig, x: f64, y: f64) -> GameConfig {
    let mut config = template.clone();
    let delta1 = config.routes.deltas[0];
    let cost = x / (delta1 * delta1);
    config.leader.marginal_cost = cost;
    config.follower.marginal_cost = cost;
    config.territories.worse = config.territories.better - y;
    config
}

fn classify_cell(template: &GameConfig, x: f64, y: f64) -> RegionCell {
    let config = cell_config(template, x, y);
    let classification =
        classify_case(&config).expect("template is a homogeneous two-route configuration");
    let equilibria =
        solve_two_route(&config).expect("template is a homogeneous two-route configuration");
    let mut kinds = Vec::new();
    let mut routes = Vec::new();
    for eq in &equilibria {
        if !kinds.contains(&eq.kind) {
            kinds.push(eq.kind);
        }
        routes.push(eq.profile.x1.0);
    }
    RegionCell {
        x_value: x,
        y_value: y,
        case: classification.case_id,
        kinds,
        routes,
    }
}

/// Classifies the whole window and extracts its boundary curves.
pub fn sweep(spec: &SweepSpec) -> Result<RegionGrid, SweepError> {
    validate_ranges(spec)?;
    let template = base_template(spec)?;
    let xs = linspace(spec.x_range.0, spec.x_range.1, spec.x_resolution);
    let ys = linspace(spec.y_range.0, spec.y_range.1, spec.y_resolution);
    let cells: Vec<Vec<RegionCell>> = ys
        .par_iter()
        .map(|&y| xs.iter().map(|&x| classify_cell(&template, x, y)).collect())
        .collect();
    let boundaries = extract_boundaries(spec, &cells);
    Ok(RegionGrid {
        spec: spec.clone(),
        cells,
        boundaries,
    })
}

const LOWER_LABEL: &str = "r/(2*lambda)";
const UPPER_LABEL: &str = "r/lambda";
const FRONTIER_LABEL: &str = "gap-threshold";

fn vertical_curve(label: &str, source: CurveSource, x: f64, spec: &SweepSpec) -> BoundaryCurve {
    BoundaryCurve {
        label: label.to_string(),
        source,
        points: vec![(x, spec.y_range.0), (x, spec.y_range.1)],
    }
}

fn is_cooperative(cell: &RegionCell) -> bool {
    cell.kinds == [InteractionKind::Cooperation]
}

/// Boundary curves for a classified window, in a fixed deterministic order:
/// the analytic verticals and cooperation frontier that intersect the
/// window, then their empirically detected counterparts.
///
/// Empirical verticals come from adjacent columns whose route sets differ
/// while their interaction kind agrees (placed at the midpoint), except
/// where a column classifies as a boundary case outright, which pins the
/// curve to that column exactly. The empirical frontier is the midpoint
/// between the last cooperative and first competitive row of each column.
pub fn extract_boundaries(spec: &SweepSpec, cells: &[Vec<RegionCell>]) -> Vec<BoundaryCurve> {
    let template = match base_template(spec) {
        Ok(template) => template,
        Err(_) => return Vec::new(),
    };
    let delta1 = template.routes.deltas[0];
    let lambda = template.routes.deltas[1] / delta1;
    let r = template.nominal_risk;
    let (x_lo, x_hi) = spec.x_range;
    let (y_lo, y_hi) = spec.y_range;
    let lower = r / (2.0 * lambda);
    let upper = r / lambda;
    let mut curves = Vec::new();

    if (x_lo..=x_hi).contains(&lower) {
        curves.push(vertical_curve(LOWER_LABEL, CurveSource::Analytic, lower, spec));
    }
    if (x_lo..=x_hi).contains(&upper) {
        curves.push(vertical_curve(UPPER_LABEL, CurveSource::Analytic, upper, spec));
    }

    let row = &cells[0];
    let frontier: Vec<(f64, f64)> = row
        .iter()
        .map(|cell| {
            let config = cell_config(&template, cell.x_value, y_lo);
            let threshold = classify_case(&config)
                .expect("template is a homogeneous two-route configuration")
                .gap_threshold;
            (cell.x_value, threshold)
        })
        .filter(|&(_, threshold)| (y_lo..=y_hi).contains(&threshold))
        .collect();
    if !frontier.is_empty() {
        curves.push(BoundaryCurve {
            label: FRONTIER_LABEL.to_string(),
            source: CurveSource::Analytic,
            points: frontier,
        });
    }

    // Columns that classify as a boundary case carry both tied equilibria;
    // the vertical runs through them exactly.
    let nx = cells[0].len();
    let ny = cells.len();
    let mut lower_empirical: Option<f64> = None;
    let mut upper_empirical: Option<f64> = None;
    let mut band = vec![false; nx];
    for ix in 0..nx {
        for iy in 0..ny {
            let cell = &cells[iy][ix];
            if cell.routes.len() == 2 {
                band[ix] = true;
                if cell.case == 2 && lower_empirical.is_none() {
                    lower_empirical = Some(cell.x_value);
                }
                if cell.case == 5 && upper_empirical.is_none() {
                    upper_empirical = Some(cell.x_value);
                }
            }
        }
    }
    for ix in 0..nx.saturating_sub(1) {
        if band[ix] || band[ix + 1] {
            continue;
        }
        let midpoint = 0.5 * (cells[0][ix].x_value + cells[0][ix + 1].x_value);
        for iy in 0..ny {
            let (left, right) = (&cells[iy][ix], &cells[iy][ix + 1]);
            if left.routes == right.routes || left.kinds != right.kinds {
                continue;
            }
            // The cooperative route changes at the lower threshold, the
            // competitive route at the upper one.
            if is_cooperative(left) {
                lower_empirical.get_or_insert(midpoint);
            } else {
                upper_empirical.get_or_insert(midpoint);
            }
        }
    }
    if let Some(x) = lower_empirical {
        curves.push(vertical_curve(LOWER_LABEL, CurveSource::Empirical, x, spec));
    }
    if let Some(x) = upper_empirical {
        curves.push(vertical_curve(UPPER_LABEL, CurveSource::Empirical, x, spec));
    }

    let mut frontier = Vec::new();
    for ix in 0..nx {
        let mut crossing = None;
        for iy in 1..ny {
            if is_cooperative(&cells[iy - 1][ix]) && !is_cooperative(&cells[iy][ix]) {
                crossing = Some(0.5 * (cells[iy - 1][ix].y_value + cells[iy][ix].y_value));
                break;
            }
        }
        if let Some(y) = crossing {
            frontier.push((cells[0][ix].x_value, y));
        }
    }
    if !frontier.is_empty() {
        curves.push(BoundaryCurve {
            label: FRONTIER_LABEL.to_string(),
            source: CurveSource::Empirical,
            points: frontier,
        });
    }
    curves
}

/// Writes a classified grid to `path` in the chosen format.
///
/// CSV rows are `x_value,y_value,case,kind,route`, row-major with x varying
/// fastest; tied values join with `|`. JSON serializes the full grid with
/// its spec and boundaries. Both encodings are deterministic.
pub fn export_regions(
    grid: &RegionGrid,
    format: ExportFormat,
    path: &Path,
) -> Result<(), SweepError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    match format {
        ExportFormat::Csv => {
            writeln!(writer, "x_value,y_value,case,kind,route")?;
            for row in &grid.cells {
                for cell in row {
                    let kinds = cell
                        .kinds
                        .iter()
                        .map(|kind| kind.as_str().to_string())
                        .collect::<Vec<_>>()
                        .join("|");
                    let routes = cell
                        .routes
                        .iter()
                        .map(|route| route.to_string())
                        .collect::<Vec<_>>()
                        .join("|");
                    writeln!(
                        writer,
                        "{},{},{},{},{}",
                        cell.x_value, cell.y_value, cell.case, kinds, routes
                    )?;
                }
            }
        }
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut writer, grid)
                .map_err(|e| SweepError::Io(std::io::Error::other(e)))?;
            writeln!(writer)?;
        }
    }
    writer.flush()?;
    Ok(())
}
