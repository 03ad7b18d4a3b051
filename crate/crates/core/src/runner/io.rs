//! Text artifacts: field grids, boundary polylines, decision logs and
//! grayscale renders.

use std::fmt::Write as _;
use std::path::Path;

use crate::boundary::RelocationDecision;
use crate::error::{Error, Result};
use crate::grid::{Field, MacroGrid, Node};

fn artifact_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Artifact {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// `nx,ny,h` header, one values line, then one row per `j` with 17
/// significant digits per value, so reading back reproduces the field bit
/// for bit.
pub fn field_to_csv(field: &Field, grid: &MacroGrid) -> String {
    let n = field.n();
    let mut out = String::with_capacity(n * n * 24 + 32);
    let _ = writeln!(out, "nx,ny,h");
    let _ = writeln!(out, "{n},{n},{:?}", grid.h());
    for j in 0..n {
        for (i, x) in field.row(j).iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Parses a field written by [`field_to_csv`]; returns the field and its `h`.
pub fn field_from_csv(text: &str, path: &Path) -> Result<(Field, f64)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("nx,ny,h") {
        return Err(artifact_error(path, "missing `nx,ny,h` header"));
    }
    let dims = lines
        .next()
        .ok_or_else(|| artifact_error(path, "missing dimensions line"))?;
    let parts: Vec<&str> = dims.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(artifact_error(path, format!("bad dimensions line `{dims}`")));
    }
    let nx: usize = parts[0].parse().map_err(|_| artifact_error(path, "bad nx"))?;
    let ny: usize = parts[1].parse().map_err(|_| artifact_error(path, "bad ny"))?;
    let h: f64 = parts[2].parse().map_err(|_| artifact_error(path, "bad h"))?;
    if nx != ny {
        return Err(artifact_error(path, format!("grid is {nx}x{ny}, expected square")));
    }
    let mut values = Vec::with_capacity(nx * ny);
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            let x: f64 = tok
                .trim()
                .parse()
                .map_err(|_| artifact_error(path, format!("row {row}: bad value `{tok}`")))?;
            values.push(x);
        }
        if values.len() - before != nx {
            return Err(artifact_error(
                path,
                format!("row {row} has {} values, expected {nx}", values.len() - before),
            ));
        }
    }
    if values.len() != nx * ny {
        return Err(artifact_error(
            path,
            format!("{} rows, expected {ny}", values.len() / nx.max(1)),
        ));
    }
    Ok((Field::from_values(nx, values)?, h))
}

pub fn boundary_to_csv(nodes: &[Node], grid: &MacroGrid) -> String {
    let mut out = String::from("i,j,x,y\n");
    for &(i, j) in nodes {
        let p = grid.point(i, j);
        let _ = writeln!(out, "{i},{j},{:?},{:?}", p.x, p.y);
    }
    out
}

pub fn boundary_from_csv(text: &str, path: &Path) -> Result<Vec<Node>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("i,j,x,y") {
        return Err(artifact_error(path, "missing `i,j,x,y` header"));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(row, line)| {
            let mut it = line.split(',');
            let mut index = || -> Option<usize> { it.next()?.trim().parse().ok() };
            match (index(), index()) {
                (Some(i), Some(j)) => Ok((i, j)),
                _ => Err(artifact_error(path, format!("row {row}: bad node `{line}`"))),
            }
        })
        .collect()
}

pub fn decisions_to_csv(decisions: &[RelocationDecision]) -> String {
    let mut out = String::from("tile,i,j,x,y,q_star,omega,ratio,moved,xi,eta_x,eta_y,new_i,new_j,reason\n");
    for d in decisions {
        let (ex, ey) = match d.direction {
            Some(e) => (format!("{:?}", e.x), format!("{:?}", e.y)),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{},{:?},{},{},{},{},{}",
            d.boundary_index,
            d.center_node.0,
            d.center_node.1,
            d.x_star.x,
            d.x_star.y,
            d.q_star,
            d.omega,
            d.ratio,
            u8::from(d.moved),
            d.magnitude,
            ex,
            ey,
            d.new_node.0,
            d.new_node.1,
            d.reason
        );
    }
    out
}

/// Binary 8-bit PGM, top row first, values scaled from `[0, max(field)]`.
pub fn field_to_pgm(field: &Field) -> Vec<u8> {
    let n = field.n();
    let top = field.max();
    let scale = if top > 0.0 { 255.0 / top } else { 0.0 };
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for j in (0..n).rev() {
        for &x in field.row(j) {
            out.push((x.max(0.0) * scale).round().min(255.0) as u8);
        }
    }
    out
}
