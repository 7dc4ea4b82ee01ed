use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::trajectory::Trajectory;

use super::graph::RoadGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    X,
    Y,
    Z,
    T,
    /// Ignored column.
    Skip,
}

/// Column order of a trace file, e.g. `x y t` or `t,x,y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFormat {
    columns: Vec<Column>,
}

impl Default for TraceFormat {
    fn default() -> Self {
        Self {
            columns: vec![Column::X, Column::Y, Column::T],
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let columns = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| match t.to_ascii_lowercase().as_str() {
                "x" => Ok(Column::X),
                "y" => Ok(Column::Y),
                "z" => Ok(Column::Z),
                "t" => Ok(Column::T),
                "_" | "-" | "skip" => Ok(Column::Skip),
                o => Err(Error::Parameter(format!("unknown trace column {o:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let has = |c| columns.iter().filter(|&&x| x == c).count();
        if has(Column::X) != 1 || has(Column::Y) != 1 || has(Column::T) != 1 || has(Column::Z) > 1 {
            return Err(Error::Parameter(format!(
                "trace format {s:?} needs exactly one each of x, y, t"
            )));
        }
        Ok(Self { columns })
    }
}

impl TraceFormat {
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    fn dim(&self) -> usize {
        if self.columns.contains(&Column::Z) {
            3
        } else {
            2
        }
    }

    fn is_header(&self, tokens: &[&str]) -> bool {
        tokens.len() == self.columns.len() && tokens.iter().all(|t| t.parse::<f64>().is_err())
    }
}

fn split_row(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Reads one trip; rows whose time does not exceed the previous kept row
/// are dropped with a warning. Returns `None` for files with fewer than
/// two usable rows.
pub fn load_trace_file(path: &Path, format: &TraceFormat) -> Result<Option<Trajectory>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dim = format.dim();
    let mut times = Vec::new();
    let mut points = Vec::new();
    let mut dropped = 0usize;
    let mut first_row = true;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = split_row(line);
        if first_row && format.is_header(&tokens) {
            first_row = false;
            continue;
        }
        first_row = false;
        if tokens.len() != format.columns.len() {
            return Err(Error::parse(
                path,
                ln + 1,
                format!(
                    "expected {} columns, found {}",
                    format.columns.len(),
                    tokens.len()
                ),
            ));
        }
        let mut c = [0.0; 3];
        let mut t = 0.0;
        for (tok, col) in tokens.iter().zip(&format.columns) {
            if *col == Column::Skip {
                continue;
            }
            let v: f64 = tok
                .parse()
                .map_err(|e| Error::parse(path, ln + 1, format!("bad number {tok:?}: {e}")))?;
            match col {
                Column::X => c[0] = v,
                Column::Y => c[1] = v,
                Column::Z => c[2] = v,
                Column::T => t = v,
                Column::Skip => {}
            }
        }
        if times.last().is_some_and(|&last| t <= last) {
            dropped += 1;
            continue;
        }
        times.push(t);
        points.push(Point::from_slice(&c[..dim]));
    }
    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} rows with non-increasing timestamps",
            path.display()
        );
    }
    if times.len() < 2 {
        log::warn!("{}: fewer than two usable rows, skipped", path.display());
        return Ok(None);
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Trajectory::new(id, times, points)
        .map(Some)
        .map_err(|e| Error::parse(path, 0, e.to_string()))
}

/// One trajectory per trip file. A directory is read in file-name order,
/// skipping hidden files; a plain file yields a single trip.
pub fn load_traces(path: &Path, format: &TraceFormat) -> Result<Vec<Trajectory>> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let files: Vec<PathBuf> = if meta.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
            .collect::<Result<_>>()?;
        v.retain(|p| {
            p.is_file()
                && !p
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with('.'))
        });
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::with_capacity(files.len());
    for f in files {
        if let Some(t) = load_trace_file(&f, format)? {
            out.push(t);
        }
    }
    Ok(out)
}

fn graph_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}_vertices.txt")),
        dir.join(format!("{name}_edges.txt")),
    )
}

/// Writes `<name>_vertices.txt` (`id x y`) and `<name>_edges.txt`
/// (`id from to`). Interior edge geometry becomes extra vertices joined by
/// straight edges.
pub fn write_graph(g: &RoadGraph, dir: &Path, name: &str) -> Result<()> {
    let (vpath, epath) = graph_paths(dir, name);
    let mut vs = String::new();
    let mut es = String::new();
    let mut next_v = g.vertex_count();
    let mut next_e = 0usize;
    for (i, p) in g.vertices().iter().enumerate() {
        let _ = writeln!(vs, "{i} {} {}", p.x(), p.y());
    }
    for e in g.edges() {
        let pts = e.geometry.points();
        let mut prev = e.from;
        for (k, p) in pts.iter().enumerate().skip(1) {
            let cur = if k + 1 == pts.len() {
                e.to
            } else {
                let _ = writeln!(vs, "{next_v} {} {}", p.x(), p.y());
                next_v += 1;
                next_v - 1
            };
            let _ = writeln!(es, "{next_e} {prev} {cur}");
            next_e += 1;
            prev = cur;
        }
    }
    std::fs::write(&vpath, vs).map_err(|e| Error::io(&vpath, e))?;
    std::fs::write(&epath, es).map_err(|e| Error::io(&epath, e))
}

/// Reads the two-file graph layout. Vertex ids may be arbitrary integers.
pub fn read_graph(dir: &Path, name: &str) -> Result<RoadGraph> {
    let (vpath, epath) = graph_paths(dir, name);
    read_graph_files(&vpath, &epath)
}

pub fn read_graph_files(vpath: &Path, epath: &Path) -> Result<RoadGraph> {
    let vtext = std::fs::read_to_string(vpath).map_err(|e| Error::io(vpath, e))?;
    let etext = std::fs::read_to_string(epath).map_err(|e| Error::io(epath, e))?;
    let mut g = RoadGraph::new();
    let mut ids: HashMap<i64, usize> = HashMap::new();
    for (ln, line) in vtext.lines().enumerate() {
        let tok = split_row(line);
        if tok.is_empty() || tok[0].starts_with('#') {
            continue;
        }
        if tok.len() < 3 {
            return Err(Error::parse(vpath, ln + 1, "expected `id x y`"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::parse(vpath, ln + 1, format!("bad number {s:?}: {e}")))
        };
        let id: i64 = tok[0]
            .parse()
            .map_err(|e| Error::parse(vpath, ln + 1, format!("bad id {:?}: {e}", tok[0])))?;
        let v = g.add_vertex(Point::new2(num(tok[1])?, num(tok[2])?));
        if ids.insert(id, v).is_some() {
            return Err(Error::parse(
                vpath,
                ln + 1,
                format!("duplicate vertex id {id}"),
            ));
        }
    }
    for (ln, line) in etext.lines().enumerate() {
        let tok = split_row(line);
        if tok.is_empty() || tok[0].starts_with('#') {
            continue;
        }
        if tok.len() < 3 {
            return Err(Error::parse(epath, ln + 1, "expected `id from to`"));
        }
        let vertex = |s: &str| -> Result<usize> {
            let id: i64 = s
                .parse()
                .map_err(|e| Error::parse(epath, ln + 1, format!("bad vertex id {s:?}: {e}")))?;
            ids.get(&id)
                .copied()
                .ok_or_else(|| Error::parse(epath, ln + 1, format!("unknown vertex id {id}")))
        };
        let (a, b) = (vertex(tok[1])?, vertex(tok[2])?);
        if g.vertices()[a] == g.vertices()[b] {
            log::warn!("{}:{}: zero-length edge skipped", epath.display(), ln + 1);
            continue;
        }
        g.add_edge(a, b, None)
            .map_err(|e| Error::parse(epath, ln + 1, e.to_string()))?;
    }
    Ok(g)
}
