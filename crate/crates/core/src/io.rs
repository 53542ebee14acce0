//! Text formats: trajectory and series CSV, word CSV, state snapshots, JSON.
//!
//! Floats are written in their shortest round-trip form, so parsing a written
//! file recovers every value bit for bit.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dynamics::{TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::quantum::{FockSpace, QuantumState};
use crate::verbalization::{Partition, WordSequence, Words};

/// Relative tolerance on the spacing of the time column.
pub const STEP_TOLERANCE: f64 = 1e-9;

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn write_csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fill = || -> csv::Result<()> {
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        Ok(())
    };
    fill().expect("writing CSV to memory cannot fail");
    let bytes = w.into_inner().expect("flushing to memory cannot fail");
    String::from_utf8(bytes).expect("CSV fields are UTF-8")
}

fn numbered_header(first: &str, prefix: &str, n: usize) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((1..=n).map(|i| format!("{prefix}_{i}")))
        .collect()
}

/// Header `t,phi_1,...,phi_d[,u_1,...,u_k]`, one row per node.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut header = numbered_header("t", "phi", traj.state_dim());
    header.extend((1..=traj.control_dim()).map(|j| format!("u_{j}")));
    let rows = traj.states.iter().enumerate().map(|(k, x)| {
        let u = traj.controls.as_ref().map(|c| c[k].as_slice()).unwrap_or(&[]);
        std::iter::once(traj.grid.time(k))
            .chain(x.iter().chain(u).copied())
            .map(fmt)
            .collect()
    });
    write_csv(&header, rows)
}

/// Header `t,{prefix}_1,...`; used for ε, desire and pure-control series.
pub fn series_to_csv(grid: &TimeGrid, prefix: &str, values: &[Vec<f64>]) -> String {
    let header = numbered_header("t", prefix, values.first().map_or(0, Vec::len));
    let rows = values.iter().enumerate().map(|(k, row)| {
        std::iter::once(grid.time(k)).chain(row.iter().copied()).map(fmt).collect()
    });
    write_csv(&header, rows)
}

/// Rows of a numeric table with the time column split off.
struct Table {
    columns: Vec<String>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    Error::parse(line, e.to_string())
}

fn parse_table(text: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let cols: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if cols.is_empty() || (cols.len() == 1 && cols[0].is_empty()) {
        return Err(Error::parse(None, "empty file"));
    }
    if cols[0] != "t" {
        return Err(Error::parse(Some(1), "first column must be `t`"));
    }
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut nums = Vec::with_capacity(record.len());
        for (f, name) in record.iter().zip(&cols) {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(Some(line), format!("column `{name}`: `{f}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(Some(line), format!("column `{name}` is not finite")));
            }
            nums.push(v);
        }
        times.push((line, nums[0]));
        rows.push(nums[1..].to_vec());
    }
    Ok(Table {
        columns: cols[1..].to_vec(),
        times: check_times(&times)?,
        rows,
    })
}

fn check_times(times: &[(usize, f64)]) -> Result<Vec<f64>> {
    if times.len() < 2 {
        return Err(Error::parse(None, "need at least two rows"));
    }
    for w in times.windows(2) {
        if w[1].1 <= w[0].1 {
            return Err(Error::parse(Some(w[1].0), "t is not strictly increasing"));
        }
    }
    let dt = times[1].1 - times[0].1;
    for (k, w) in times.windows(2).enumerate() {
        let step = w[1].1 - w[0].1;
        if (step - dt).abs() > STEP_TOLERANCE * dt.max(f64::MIN_POSITIVE) + 4.0 * f64::EPSILON * w[1].1.abs() {
            return Err(Error::parse(
                Some(w[1].0),
                format!("step {step:e} after node {k} differs from the first step {dt:e}"),
            ));
        }
    }
    Ok(times.iter().map(|&(_, t)| t).collect())
}

fn table_grid(table: &Table) -> Result<TimeGrid> {
    let n = table.times.len() - 1;
    let t0 = table.times[0];
    TimeGrid::new(t0, (table.times[n] - t0) / n as f64, n).map_err(|e| Error::parse(None, e.to_string()))
}

fn numbered(columns: &[String], prefix: &str) -> usize {
    columns
        .iter()
        .enumerate()
        .take_while(|(i, c)| **c == format!("{prefix}_{}", i + 1))
        .count()
}

/// Parses the trajectory format; the header decides the state and control dimensions.
pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let table = parse_table(text)?;
    let d = numbered(&table.columns, "phi");
    if d == 0 {
        return Err(Error::parse(Some(1), "no `phi_1` column"));
    }
    let rest = &table.columns[d..];
    let k = numbered(rest, "u");
    if k != rest.len() {
        return Err(Error::parse(
            Some(1),
            format!("unexpected column `{}`", rest[k]),
        ));
    }
    let grid = table_grid(&table)?;
    let states = table.rows.iter().map(|r| r[..d].to_vec()).collect();
    let controls = (k > 0).then(|| table.rows.iter().map(|r| r[d..].to_vec()).collect());
    Trajectory::new(grid, states, controls).map_err(|e| Error::parse(None, e.to_string()))
}

/// Parses a `t,{prefix}_1,...` series.
pub fn series_from_csv(text: &str, prefix: &str) -> Result<(TimeGrid, Vec<Vec<f64>>)> {
    let table = parse_table(text)?;
    let dim = numbered(&table.columns, prefix);
    if dim != table.columns.len() || dim == 0 {
        return Err(Error::parse(
            Some(1),
            format!("header must be t,{prefix}_1,...,{prefix}_n"),
        ));
    }
    Ok((table_grid(&table)?, table.rows))
}

/// `segment,start_t,end_t,w_1,...` or `segment,start_t,end_t,code`.
pub fn words_to_csv(words: &WordSequence, partition: &Partition, grid: &TimeGrid) -> Result<String> {
    if words.len() != partition.n_segments() {
        return Err(Error::LengthMismatch(format!(
            "{} words for {} segments",
            words.len(),
            partition.n_segments()
        )));
    }
    let mut header: Vec<String> = ["segment", "start_t", "end_t"].map(String::from).to_vec();
    match &words.words {
        Words::Continuous(w) => header.extend((1..=w.first().map_or(0, Vec::len)).map(|i| format!("w_{i}"))),
        Words::Quantized(_) => header.push("code".into()),
    }
    let rows = partition.segments().enumerate().map(|(j, (a, b))| {
        let mut r = vec![(j + 1).to_string(), fmt(grid.time(a)), fmt(grid.time(b))];
        match &words.words {
            Words::Continuous(w) => r.extend(w[j].iter().map(|&v| fmt(v))),
            Words::Quantized(c) => r.push(c[j].to_string()),
        }
        r
    });
    Ok(write_csv(&header, rows))
}

/// `basis_index,occupations,re,im`, occupations joined by `;`.
pub fn state_to_csv(state: &QuantumState, space: &FockSpace) -> Result<String> {
    if state.dim() != space.dim() {
        return Err(Error::dims(format!(
            "state of dimension {} in a space of dimension {}",
            state.dim(),
            space.dim()
        )));
    }
    let header = ["basis_index", "occupations", "re", "im"].map(String::from);
    let rows = state.coefficients.iter().enumerate().map(|(i, c)| {
        let occ: Vec<String> = space.occupations(i).iter().map(u32::to_string).collect();
        vec![i.to_string(), occ.join(";"), fmt(c.re), fmt(c.im)]
    });
    Ok(write_csv(&header, rows))
}

/// Two-column `{x_name},{name}` table for plotting tools.
pub fn plot_series_to_csv(x_name: &str, name: &str, xs: &[f64], ys: &[f64]) -> Result<String> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(format!("{} abscissae for {} values", xs.len(), ys.len())));
    }
    let header = [x_name.to_string(), name.to_string()];
    Ok(write_csv(&header, xs.iter().zip(ys).map(|(&x, &y)| vec![fmt(x), fmt(y)])))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let line = (e.line() > 0).then_some(e.line());
        Error::parse(line, e.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj() -> Trajectory {
        let grid = TimeGrid::new(0.0, 0.1, 4).unwrap();
        let states = (0..5).map(|k| vec![k as f64 * 0.1, 1.0 / 3.0]).collect();
        let controls = (0..5).map(|k| vec![(k as f64).sin()]).collect();
        Trajectory::new(grid, states, Some(controls)).unwrap()
    }

    #[test]
    fn trajectory_round_trip_is_exact() {
        let t = traj();
        let text = trajectory_to_csv(&t);
        assert!(text.starts_with("t,phi_1,phi_2,u_1\n"));
        let back = trajectory_from_csv(&text).unwrap();
        assert_eq!(back.states, t.states);
        assert_eq!(back.controls, t.controls);
        assert_eq!(back.grid.n_steps, 4);
        assert!((back.grid.dt - 0.1).abs() < 1e-15);
    }

    #[test]
    fn non_monotone_time_reports_row() {
        let text = "t,phi_1\n0,1\n0.1,1\n0.05,1\n";
        match trajectory_from_csv(text) {
            Err(Error::Parse { line: Some(4), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uneven_step_and_bad_numbers_are_rejected() {
        assert!(matches!(
            trajectory_from_csv("t,phi_1\n0,1\n0.1,1\n0.3,1\n"),
            Err(Error::Parse { line: Some(4), .. })
        ));
        assert!(matches!(
            trajectory_from_csv("t,phi_1\n0,1\n0.1,x\n"),
            Err(Error::Parse { line: Some(3), .. })
        ));
        assert!(matches!(
            trajectory_from_csv("t,phi_1,v_1\n0,1,2\n0.1,1,2\n"),
            Err(Error::Parse { line: Some(1), .. })
        ));
        assert!(matches!(
            trajectory_from_csv("t,phi_1\n0,1\n0.1,1,2\n"),
            Err(Error::Parse { line: Some(3), .. })
        ));
    }

    #[test]
    fn series_round_trip() {
        let grid = TimeGrid::new(1.0, 0.5, 2).unwrap();
        let v = vec![vec![0.1, -2.0], vec![1e-300, 3.5], vec![7.0, 0.0]];
        let text = series_to_csv(&grid, "eps", &v);
        let (g, back) = series_from_csv(&text, "eps").unwrap();
        assert_eq!(back, v);
        assert_eq!(g, grid);
        assert!(series_from_csv(&text, "v").is_err());
    }

    #[test]
    fn words_and_snapshots_have_declared_headers() {
        let grid = TimeGrid::new(0.0, 1.0, 6).unwrap();
        let p = Partition::new(vec![0, 3, 6], 2, 6).unwrap();
        let w = WordSequence::continuous(vec![vec![1.0], vec![2.0]], crate::verbalization::PictureTag::S);
        let text = words_to_csv(&w, &p, &grid).unwrap();
        assert_eq!(text, "segment,start_t,end_t,w_1\n1,0.0,3.0,1.0\n2,3.0,6.0,2.0\n");

        let space = FockSpace::new(2, 1).unwrap();
        let state = QuantumState::basis(&space, &[1, 0]).unwrap();
        let csv = state_to_csv(&state, &space).unwrap();
        assert_eq!(csv.lines().nth(3).unwrap(), "2,1;0,1.0,0.0");
    }

    #[test]
    fn json_errors_carry_the_line() {
        let e = from_json::<TimeGrid>("{\n  \"t0\": 0.0,\n  \"dt\": oops\n}").unwrap_err();
        assert!(matches!(e, Error::Parse { line: Some(3), .. }));
    }
}
