use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{EngineCurveParams, VehicleParams};
use crate::objective::Dataset;

/// Where a map cell's torque came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Fitted,
    Dyno,
    Interpolated,
}

impl Provenance {
    pub fn code(self) -> char {
        match self {
            Provenance::Fitted => 'F',
            Provenance::Dyno => 'D',
            Provenance::Interpolated => 'I',
        }
    }

    pub fn from_code(c: &str) -> Result<Self> {
        match c {
            "F" => Ok(Provenance::Fitted),
            "D" => Ok(Provenance::Dyno),
            "I" => Ok(Provenance::Interpolated),
            other => Err(Error::data(format!("unknown provenance code `{other}`"))),
        }
    }
}

/// Torque table over (throttle, engine speed). `torque[t][w]` is the torque at
/// `throttle_grid[t]` and `speed_grid[w]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineTorqueMap {
    pub throttle_grid: Vec<f64>,
    /// Engine speed, rpm.
    pub speed_grid: Vec<f64>,
    pub torque: Vec<Vec<f64>>,
    pub provenance: Vec<Vec<Provenance>>,
}

/// Speed nodes used when no dyno grid fixes them.
const DEFAULT_SPEED_NODES: usize = 31;

fn strictly_ascending(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Index `i` and weight `t` with `x = grid[i] + t (grid[i+1] - grid[i])`;
/// `x` is clamped to the grid.
fn bracket(grid: &[f64], x: f64) -> (usize, f64) {
    if grid.len() == 1 || x <= grid[0] {
        return (0, 0.0);
    }
    let last = grid.len() - 1;
    if x >= grid[last] {
        return (last - 1, 1.0);
    }
    let i = grid.partition_point(|g| *g <= x) - 1;
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
fn isotonic(y: &mut [f64]) -> bool {
    if y.windows(2).all(|w| w[0] <= w[1]) {
        return false;
    }
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (v2, n2) = blocks.pop().unwrap();
            let (v1, n1) = blocks.pop().unwrap();
            blocks.push(((v1 * n1 as f64 + v2 * n2 as f64) / (n1 + n2) as f64, n1 + n2));
        }
    }
    let mut i = 0;
    for (v, n) in blocks {
        y[i..i + n].fill(v);
        i += n;
    }
    true
}

impl EngineTorqueMap {
    pub fn validate(&self) -> Result<()> {
        if self.throttle_grid.is_empty() || self.speed_grid.len() < 2 {
            return Err(Error::data("engine map needs at least one throttle row and two speed nodes"));
        }
        if !strictly_ascending(&self.throttle_grid) || !strictly_ascending(&self.speed_grid) {
            return Err(Error::data("engine map grids must be strictly ascending"));
        }
        let rows_ok = |rows: usize, cols: &dyn Fn(usize) -> usize| {
            rows == self.throttle_grid.len() && (0..rows).all(|r| cols(r) == self.speed_grid.len())
        };
        if !rows_ok(self.torque.len(), &|r| self.torque[r].len())
            || !rows_ok(self.provenance.len(), &|r| self.provenance[r].len())
        {
            return Err(Error::data("engine map table does not match its grids"));
        }
        if self.torque.iter().flatten().any(|t| !t.is_finite()) {
            return Err(Error::data("engine map has non-finite torque"));
        }
        Ok(())
    }

    fn check_speed(&self, rpm: f64) -> Result<()> {
        let (lo, hi) = (self.speed_grid[0], *self.speed_grid.last().unwrap());
        if !(rpm >= lo && rpm <= hi) {
            return Err(Error::invalid(format!("engine speed {rpm} rpm outside map range [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Torque of throttle row `t` at `rpm`, linear in speed.
    fn row_at(&self, t: usize, rpm: f64) -> f64 {
        let (i, w) = bracket(&self.speed_grid, rpm);
        let row = &self.torque[t];
        row[i] + w * (row[i + 1] - row[i])
    }

    /// Bilinear torque lookup. Throttle is clamped to the grid; speed must lie
    /// inside it.
    pub fn torque_at(&self, rpm: f64, throttle: f64) -> Result<f64> {
        self.check_speed(rpm)?;
        if self.throttle_grid.len() == 1 {
            return Ok(self.row_at(0, rpm));
        }
        let (t, w) = bracket(&self.throttle_grid, throttle);
        let lo = self.row_at(t, rpm);
        let hi = self.row_at(t + 1, rpm);
        Ok(lo + w * (hi - lo))
    }

    /// Writes the torque table and the provenance mask.
    ///
    /// Both files put the throttle grid on the first row and the speed grid in
    /// the first column.
    pub fn write_csv(&self, torque_path: &Path, mask_path: &Path) -> Result<()> {
        let write = |path: &Path, cell: &dyn Fn(usize, usize) -> String| -> Result<()> {
            let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
            let mut header = vec!["rpm\\throttle".to_string()];
            header.extend(self.throttle_grid.iter().map(|t| t.to_string()));
            w.write_record(&header).map_err(|e| Error::csv(path, e))?;
            for (j, s) in self.speed_grid.iter().enumerate() {
                let mut rec = vec![s.to_string()];
                rec.extend((0..self.throttle_grid.len()).map(|t| cell(t, j)));
                w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        };
        write(torque_path, &|t, j| self.torque[t][j].to_string())?;
        write(mask_path, &|t, j| self.provenance[t][j].code().to_string())
    }

    pub fn read_csv(torque_path: &Path, mask_path: &Path) -> Result<Self> {
        let read = |path: &Path| -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<String>>)> {
            let mut r = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_path(path)
                .map_err(|e| Error::csv(path, e))?;
            let mut rows = r.records();
            let header = rows
                .next()
                .ok_or_else(|| Error::data(format!("{} is empty", path.display())))?
                .map_err(|e| Error::csv(path, e))?;
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::data(format!("{}: bad number `{s}`", path.display())))
            };
            let throttles = header.iter().skip(1).map(num).collect::<Result<Vec<_>>>()?;
            let mut speeds = Vec::new();
            let mut cells = Vec::new();
            for rec in rows {
                let rec = rec.map_err(|e| Error::csv(path, e))?;
                speeds.push(num(&rec[0])?);
                cells.push(rec.iter().skip(1).map(str::to_string).collect::<Vec<_>>());
            }
            Ok((throttles, speeds, cells))
        };
        let (throttle_grid, speed_grid, cells) = read(torque_path)?;
        let (mt, ms, mask) = read(mask_path)?;
        if mt != throttle_grid || ms != speed_grid {
            return Err(Error::data("torque table and provenance mask grids differ"));
        }
        let nt = throttle_grid.len();
        let transpose = |cells: &Vec<Vec<String>>| -> Result<Vec<Vec<String>>> {
            if cells.iter().any(|r| r.len() != nt) {
                return Err(Error::data("engine map row length does not match throttle grid"));
            }
            Ok((0..nt).map(|t| cells.iter().map(|r| r[t].clone()).collect()).collect())
        };
        let torque = transpose(&cells)?
            .into_iter()
            .map(|row| {
                row.iter()
                    .map(|s| s.parse::<f64>().map_err(|_| Error::data(format!("bad torque `{s}`"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let provenance = transpose(&mask)?
            .into_iter()
            .map(|row| row.iter().map(|s| Provenance::from_code(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let map = EngineTorqueMap {
            throttle_grid,
            speed_grid,
            torque,
            provenance,
        };
        map.validate()?;
        Ok(map)
    }
}

/// Merges fitted throttle curves with dyno measurements into one map.
///
/// `dyno` holds `(engine_rpm, throttle_pct) -> torque_nm` samples on a grid;
/// missing grid cells are filled by interpolating along throttle. Fitted curves
/// win where both cover the same throttle. With no dyno data the speed grid is
/// evenly spaced up to the vehicle's maximum engine speed.
pub fn build_engine_map(
    fitted: &[EngineCurveParams],
    dyno: Option<&Dataset>,
    vp: &VehicleParams,
) -> Result<EngineTorqueMap> {
    let dyno = dyno.filter(|d| !d.is_empty());
    if fitted.is_empty() && dyno.is_none() {
        return Err(Error::data("engine map needs fitted curves or dyno data"));
    }
    if let Some(d) = dyno {
        if d.input_dim() != 2 {
            return Err(Error::data("dyno data must have (engine_rpm, throttle_pct) inputs"));
        }
    }
    let unique = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };

    let speed_grid = match dyno {
        Some(d) => unique(d.column(0)),
        None => (0..DEFAULT_SPEED_NODES)
            .map(|i| vp.max_engine_rpm * i as f64 / (DEFAULT_SPEED_NODES - 1) as f64)
            .collect(),
    };
    if speed_grid.len() < 2 {
        return Err(Error::data("dyno data needs at least two engine speeds"));
    }
    if speed_grid[0] < 0.0 || *speed_grid.last().unwrap() > vp.max_engine_rpm {
        return Err(Error::data("dyno engine speeds must lie in [0, max_engine_rpm]"));
    }
    let dyno_throttles = dyno.map(|d| unique(d.column(1))).unwrap_or_default();
    let mut all: Vec<f64> = fitted.iter().map(|f| f.throttle).collect();
    all.extend(&dyno_throttles);
    let throttle_grid = unique(all);

    let nt = throttle_grid.len();
    let nw = speed_grid.len();
    let mut torque = vec![vec![f64::NAN; nw]; nt];
    let mut provenance = vec![vec![Provenance::Interpolated; nw]; nt];
    let index = |grid: &[f64], x: f64| grid.iter().position(|g| *g == x).expect("value from grid");

    if let Some(d) = dyno {
        for (x, y) in d.iter() {
            let (t, w) = (index(&throttle_grid, x[1]), index(&speed_grid, x[0]));
            torque[t][w] = y;
            provenance[t][w] = Provenance::Dyno;
        }
    }
    for f in fitted {
        f.validate()?;
        let t = index(&throttle_grid, f.throttle);
        for (w, rpm) in speed_grid.iter().enumerate() {
            torque[t][w] = f.eval(rpm / vp.max_engine_rpm);
            provenance[t][w] = Provenance::Fitted;
        }
    }

    // fill holes column by column along the throttle axis
    for w in 0..nw {
        let known: Vec<usize> = (0..nt).filter(|&t| torque[t][w].is_finite()).collect();
        if known.is_empty() {
            return Err(Error::data(format!("no torque data at {} rpm", speed_grid[w])));
        }
        for t in 0..nt {
            if torque[t][w].is_finite() {
                continue;
            }
            let above = known.iter().copied().find(|&k| k > t);
            let below = known.iter().copied().rev().find(|&k| k < t);
            torque[t][w] = match (below, above) {
                (Some(b), Some(a)) => {
                    let s = (throttle_grid[t] - throttle_grid[b]) / (throttle_grid[a] - throttle_grid[b]);
                    torque[b][w] + s * (torque[a][w] - torque[b][w])
                }
                (Some(k), None) | (None, Some(k)) => torque[k][w],
                (None, None) => unreachable!(),
            };
        }
    }

    let mut repaired = 0;
    for w in 0..nw {
        let mut col: Vec<f64> = (0..nt).map(|t| torque[t][w]).collect();
        if isotonic(&mut col) {
            repaired += 1;
            for t in 0..nt {
                torque[t][w] = col[t];
            }
        }
    }
    if repaired > 0 {
        log::warn!("engine map torque decreased with throttle at {repaired} speed nodes; projected to monotone");
    }

    let map = EngineTorqueMap {
        throttle_grid,
        speed_grid,
        torque,
        provenance,
    };
    map.validate()?;
    Ok(map)
}

/// Smallest throttle whose torque at `rpm` reaches `t_des`.
///
/// Interpolates linearly between the two bracketing throttle rows. Demand above
/// the top row saturates at 100; demand below the lowest row returns 0.
pub fn inverse_throttle(map: &EngineTorqueMap, rpm: f64, t_des: f64) -> Result<f64> {
    map.check_speed(rpm)?;
    let col: Vec<f64> = (0..map.throttle_grid.len()).map(|t| map.row_at(t, rpm)).collect();
    if t_des < col[0] || map.throttle_grid[0] == 0.0 && t_des <= col[0] {
        return Ok(0.0);
    }
    let Some(i) = col.iter().position(|&c| c >= t_des) else {
        return Ok(100.0);
    };
    if i == 0 {
        return Ok(map.throttle_grid[0]);
    }
    let (lo, hi) = (col[i - 1], col[i]);
    let (tlo, thi) = (map.throttle_grid[i - 1], map.throttle_grid[i]);
    Ok(tlo + (t_des - lo) / (hi - lo) * (thi - tlo))
}
