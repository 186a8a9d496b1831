//! Plain-text matrix and system files, trajectory CSV.
//!
//! Matrix text: a `rows cols` line followed by the entries in row-major order,
//! whitespace separated. A system file holds five such blocks, each preceded
//! by its label `E:`, `A:`, `B:`, `C:` or `D:`.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::simulate::Trajectory;
use crate::system::DescriptorSystem;
use crate::Scalar;

fn parse_num<T: Scalar>(tok: &str, line: usize) -> Result<T> {
    let v = f64::from_str(tok).map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value {tok:?}"),
        });
    }
    Ok(T::lit(v))
}

/// Writes `m` with 17 significant digits per entry.
pub fn write_matrix<T: Scalar>(m: &DMatrix<T>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e}", m[(i, j)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

// Token stream carrying source line numbers for error messages.
struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("");
                l.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect();
        Self { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn last_line(&self) -> usize {
        self.items.last().map_or(0, |t| t.0)
    }

    fn matrix<T: Scalar>(&mut self) -> Result<DMatrix<T>> {
        let end = self.last_line();
        let mut dim = || -> Result<usize> {
            let (line, tok) = self.next().ok_or(Error::Parse {
                line: end,
                msg: "missing dimensions".into(),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad dimension {tok:?}"),
            })
        };
        let rows = dim()?;
        let cols = dim()?;
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let (line, tok) = self.next().ok_or(Error::Parse {
                    line: end,
                    msg: format!("expected {} entries", rows * cols),
                })?;
                m[(i, j)] = parse_num(tok, line)?;
            }
        }
        Ok(m)
    }
}

/// Parses one matrix in text form; trailing tokens are an error.
pub fn read_matrix<T: Scalar>(text: &str) -> Result<DMatrix<T>> {
    let mut toks = Tokens::new(text);
    let m = toks.matrix()?;
    if let Some((line, tok)) = toks.next() {
        return Err(Error::Parse {
            line,
            msg: format!("trailing token {tok:?}"),
        });
    }
    Ok(m)
}

pub fn write_system<T: Scalar>(sys: &DescriptorSystem<T>) -> String {
    let mut out = String::new();
    for (label, m) in [
        ("E", sys.e()),
        ("A", sys.a()),
        ("B", sys.b()),
        ("C", sys.c()),
        ("D", sys.d()),
    ] {
        let _ = writeln!(out, "{label}:");
        out.push_str(&write_matrix(m));
    }
    out
}

/// Parses a system file. Blocks may come in any order; all five are required.
pub fn read_system<T: Scalar>(text: &str) -> Result<DescriptorSystem<T>> {
    let mut toks = Tokens::new(text);
    let mut blocks: [Option<DMatrix<T>>; 5] = Default::default();
    while let Some((line, tok)) = toks.next() {
        let idx = match tok {
            "E:" => 0,
            "A:" => 1,
            "B:" => 2,
            "C:" => 3,
            "D:" => 4,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected a block label, found {tok:?}"),
                })
            }
        };
        if blocks[idx].is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate block {tok}"),
            });
        }
        blocks[idx] = Some(toks.matrix()?);
    }
    let line = toks.last_line();
    let [e, a, b, c, d] = blocks;
    let get = |m: Option<DMatrix<T>>, name: &str| {
        m.ok_or(Error::Parse {
            line,
            msg: format!("missing block {name}:"),
        })
    };
    DescriptorSystem::new(
        get(e, "E")?,
        get(a, "A")?,
        get(b, "B")?,
        get(c, "C")?,
        get(d, "D")?,
    )
}

/// Input-output (and optionally state) samples read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData<T: Scalar> {
    /// Every input row, including those past the validity window.
    pub u: Vec<DVector<T>>,
    /// Outputs over the validity window.
    pub y: Vec<DVector<T>>,
    pub x: Option<Vec<DVector<T>>>,
}

fn push_row<T: Scalar>(
    out: &mut String,
    k: usize,
    parts: &[Option<&DVector<T>>],
    widths: &[usize],
) {
    let _ = write!(out, "{k}");
    for (part, &w) in parts.iter().zip(widths) {
        match part {
            Some(v) => v.iter().for_each(|x| {
                let _ = write!(out, ",{x}");
            }),
            None => (0..w).for_each(|_| out.push(',')),
        }
    }
    out.push('\n');
}

/// CSV with header `k,u_1..u_m,y_1..y_p[,x_1..x_n]`; rows past the validity
/// window carry the input and empty output cells.
pub fn trajectory_csv<T: Scalar>(traj: &Trajectory<T>) -> String {
    let m = traj.u.first().map_or(0, |v| v.len());
    let p = traj.y.first().map_or(0, |v| v.len());
    let n = traj
        .x
        .as_ref()
        .and_then(|x| x.first())
        .map_or(0, |v| v.len());
    let mut cols = vec!["k".to_string()];
    cols.extend((1..=m).map(|i| format!("u_{i}")));
    cols.extend((1..=p).map(|i| format!("y_{i}")));
    if traj.x.is_some() {
        cols.extend((1..=n).map(|i| format!("x_{i}")));
    }
    let mut out = cols.join(",");
    out.push('\n');
    let widths = [m, p, n];
    for (k, u) in traj.u.iter().enumerate() {
        let y = traj.y.get(k);
        let x = traj.x.as_ref().map(|x| x.get(k));
        let mut parts = vec![Some(u), y];
        if let Some(x) = x {
            parts.push(x);
        }
        push_row(&mut out, k, &parts, &widths);
    }
    out
}

/// Parses a trajectory CSV. Unknown columns are ignored; a file without
/// `y_` columns reads as an input sequence.
pub fn read_trajectory_csv<T: Scalar>(text: &str) -> Result<TrajectoryData<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let pick = |prefix: &str| -> Vec<usize> {
        let mut idx: Vec<(usize, usize)> = names
            .iter()
            .enumerate()
            .filter_map(|(c, n)| {
                n.strip_prefix(prefix)
                    .and_then(|s| s.parse::<usize>().ok())
                    .map(|i| (i, c))
            })
            .collect();
        idx.sort();
        idx.into_iter().map(|(_, c)| c).collect()
    };
    let (ui, yi, xi) = (pick("u_"), pick("y_"), pick("x_"));
    if ui.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "header needs u_ columns".into(),
        });
    }

    let mut data = TrajectoryData {
        u: Vec::new(),
        y: Vec::new(),
        x: (!xi.is_empty()).then(Vec::new),
    };
    for (i, line) in lines {
        let lineno = i + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} cells", names.len()),
            });
        }
        let read = |cols: &[usize]| -> Result<Option<DVector<T>>> {
            if cols.iter().all(|&c| cells[c].is_empty()) {
                return Ok(None);
            }
            let vals = cols
                .iter()
                .map(|&c| parse_num(cells[c], lineno))
                .collect::<Result<Vec<T>>>()?;
            Ok(Some(DVector::from_vec(vals)))
        };
        let u = read(&ui)?.ok_or(Error::Parse {
            line: lineno,
            msg: "missing input".into(),
        })?;
        data.u.push(u);
        match read(&yi)? {
            Some(y) if data.y.len() + 1 == data.u.len() => data.y.push(y),
            Some(_) => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "output after the validity window".into(),
                })
            }
            None => {}
        }
        if let Some(xs) = data.x.as_mut() {
            if let Some(x) = read(&xi)? {
                xs.push(x);
            }
        }
    }
    Ok(data)
}
