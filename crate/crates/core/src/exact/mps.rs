//! The scheduling integer program and its MPS serialisation.
//!
//! Node numbering in names is 1-based: missions are `1..=n` in instance
//! order and bases `n+1..=n+k`. The third index of `x_i_j_k` is the base
//! ordinal `1..=k`. Rows:
//!
//! | row        | meaning                                               |
//! |------------|-------------------------------------------------------|
//! | `A_j`      | mission `j` entered exactly once                      |
//! | `B_i`      | mission `i` left exactly once                         |
//! | `F_v_k`    | flow conservation at node `v` in route `k`            |
//! | `I_j_k`    | at most one arc into `j` in route `k`                 |
//! | `O_i_k`    | at most one arc out of `i` in route `k`               |
//! | `L_k`      | daily flight limit of base `k`                        |
//! | `T_i_j_k`  | time window of arc `i -> j` in route `k`              |
//! | `M_i_j_k`  | Miller-Tucker-Zemlin ordering between missions        |
//!
//! Time windows use the waiting rule: a vehicle leaves mission `i` at its
//! deadline `w_i`, and leaves its base at 0. Arc `i -> j` is therefore
//! allowed iff `w_i + d_ij <= w_j` (with `w_base = 0` as origin and
//! `w_base = day length` as destination); each `T` row carries that constant
//! as the coefficient of its single variable. Self-loops, arcs touching a
//! base other than the route's own, and helicopter-only missions on plane
//! routes are fixed to zero in `BOUNDS`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::TravelTimeMatrix;
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MpsFormat {
    /// Positional fields, names limited to 8 characters.
    #[default]
    Fixed,
    /// Whitespace separated, full-precision numbers.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

impl RowSense {
    fn code(self) -> &'static str {
        match self {
            RowSense::Eq => "E",
            RowSense::Le => "L",
            RowSense::Ge => "G",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpRow {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub lower: f64,
    pub upper: f64,
    pub fixed_zero: bool,
    pub objective: f64,
    /// `(row index, coefficient)`, in row order.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpExport {
    pub name: String,
    pub rows: Vec<IlpRow>,
    pub columns: Vec<IlpColumn>,
    pub missions: usize,
    pub bases: usize,
}

impl IlpExport {
    pub fn binaries(&self) -> usize {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Binary).count()
    }

    pub fn integers(&self) -> usize {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Integer).count()
    }

    pub fn column(&self, name: &str) -> Option<&IlpColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.name == name)
    }
}

struct RowBook {
    rows: Vec<IlpRow>,
}

impl RowBook {
    fn add(&mut self, name: String, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(IlpRow { name, sense, rhs });
        self.rows.len() - 1
    }
}

/// Builds the full model: `(n+k)^2 * k` binaries `x_i_j_k` and `n` integers `u_i`.
#[allow(clippy::needless_range_loop)]
pub fn build_ilp(instance: &Instance, matrix: &TravelTimeMatrix) -> IlpExport {
    let n = instance.missions.len();
    let k = instance.bases.len();
    let nodes = n + k;
    let is_base = |v: usize| v >= n;
    let deadline = |v: usize| instance.missions[v].deadline_h;
    let name1 = |v: usize| v + 1;

    let mut book = RowBook { rows: Vec::new() };
    let assign_in: Vec<usize> = (0..n)
        .map(|j| book.add(format!("A_{}", name1(j)), RowSense::Eq, 1.0))
        .collect();
    let assign_out: Vec<usize> = (0..n)
        .map(|i| book.add(format!("B_{}", name1(i)), RowSense::Eq, 1.0))
        .collect();
    let mut flow = vec![vec![0; k]; nodes];
    let mut indeg = vec![vec![0; k]; nodes];
    let mut outdeg = vec![vec![0; k]; nodes];
    for kk in 0..k {
        for v in 0..nodes {
            flow[v][kk] = book.add(format!("F_{}_{}", name1(v), kk + 1), RowSense::Eq, 0.0);
        }
        for v in 0..nodes {
            indeg[v][kk] = book.add(format!("I_{}_{}", name1(v), kk + 1), RowSense::Le, 1.0);
        }
        for v in 0..nodes {
            outdeg[v][kk] = book.add(format!("O_{}_{}", name1(v), kk + 1), RowSense::Le, 1.0);
        }
    }
    let limit: Vec<usize> = (0..k)
        .map(|kk| book.add(format!("L_{}", kk + 1), RowSense::Le, instance.flight_limit_h))
        .collect();

    let mut columns = Vec::with_capacity(nodes * nodes * k + n);
    let mut mtz: Vec<(usize, usize, usize, usize)> = Vec::new();
    for kk in 0..k {
        let class = instance.bases[kk].vehicle;
        let home = matrix.base_node(kk);
        for i in 0..nodes {
            for j in 0..nodes {
                let d = matrix.hours(i, j, class);
                let foreign = (is_base(i) && i != home) || (is_base(j) && j != home);
                let incompatible = (!is_base(i) && !class.can_serve(instance.missions[i].heli_only))
                    || (!is_base(j) && !class.can_serve(instance.missions[j].heli_only));
                let fixed_zero = i == j || foreign || incompatible;

                let mut entries = Vec::new();
                if !is_base(j) {
                    entries.push((assign_in[j], 1.0));
                }
                if !is_base(i) {
                    entries.push((assign_out[i], 1.0));
                }
                if i != j {
                    entries.push((flow[j][kk], 1.0));
                    entries.push((flow[i][kk], -1.0));
                }
                entries.push((indeg[j][kk], 1.0));
                entries.push((outdeg[i][kk], 1.0));
                entries.push((limit[kk], d));
                if !fixed_zero {
                    let depart = if is_base(i) { 0.0 } else { deadline(i) };
                    let due = if is_base(j) { instance.day_length_h } else { deadline(j) };
                    let row = book.add(
                        format!("T_{}_{}_{}", name1(i), name1(j), kk + 1),
                        RowSense::Le,
                        0.0,
                    );
                    entries.push((row, depart + d - due));
                }
                if !is_base(i) && !is_base(j) && i != j {
                    let row = book.add(
                        format!("M_{}_{}_{}", name1(i), name1(j), kk + 1),
                        RowSense::Le,
                        n as f64 - 1.0,
                    );
                    entries.push((row, n as f64));
                    mtz.push((row, i, j, kk));
                }
                entries.sort_by_key(|e| e.0);
                columns.push(IlpColumn {
                    name: format!("x_{}_{}_{}", name1(i), name1(j), kk + 1),
                    kind: ColumnKind::Binary,
                    lower: 0.0,
                    upper: if fixed_zero { 0.0 } else { 1.0 },
                    fixed_zero,
                    objective: d,
                    entries,
                });
            }
        }
    }

    let mut u_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(row, i, j, _) in &mtz {
        u_entries[i].push((row, 1.0));
        u_entries[j].push((row, -1.0));
    }
    for (i, mut entries) in u_entries.into_iter().enumerate() {
        entries.sort_by_key(|e| e.0);
        columns.push(IlpColumn {
            name: format!("u_{}", name1(i)),
            kind: ColumnKind::Integer,
            lower: 1.0,
            upper: n as f64,
            fixed_zero: false,
            objective: 0.0,
            entries,
        });
    }

    IlpExport {
        name: "AIRFLEET".into(),
        rows: book.rows,
        columns,
        missions: n,
        bases: k,
    }
}

/// Shortest decimal rendering that fits a 12-character MPS number field.
fn fixed_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.fract() == 0.0 && v.abs() < 1e11 {
        return format!("{}", v as i64);
    }
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (1..=11).rev() {
        let s = format!("{v:.prec$}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.len() <= 12 && s.parse::<f64>().is_ok_and(|x| x != 0.0 || v.abs() < 5e-12) {
            return s;
        }
    }
    for prec in (0..=6).rev() {
        let s = format!("{v:.prec$E}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0E}")
}

fn number(v: f64, format: MpsFormat) -> String {
    match format {
        MpsFormat::Fixed => fixed_number(v),
        MpsFormat::Free => format!("{v}"),
    }
}

/// `(field 2, field 3, field 4)` line, positional in fixed format.
fn entry_line(out: &mut String, format: MpsFormat, f2: &str, f3: &str, f4: &str) {
    match format {
        MpsFormat::Fixed => writeln!(out, "    {f2:<8}  {f3:<8}  {f4}"),
        MpsFormat::Free => writeln!(out, " {f2} {f3} {f4}"),
    }
    .expect("writing to a String");
}

fn check_names(ilp: &IlpExport) -> Result<()> {
    let too_long = ilp
        .rows
        .iter()
        .map(|r| r.name.as_str())
        .chain(ilp.columns.iter().map(|c| c.name.as_str()))
        .find(|name| name.len() > 8);
    match too_long {
        Some(name) => Err(Error::InvalidArgument(format!(
            "name '{name}' exceeds the 8 characters of fixed-format MPS; use the free format"
        ))),
        None => Ok(()),
    }
}

/// Serialises a model. Fixed format fails when a name is longer than 8 characters.
pub fn write_mps(ilp: &IlpExport, mut out: impl Write, format: MpsFormat) -> Result<()> {
    if format == MpsFormat::Fixed {
        check_names(ilp)?;
    }
    let mut s = String::new();
    match format {
        MpsFormat::Fixed => writeln!(s, "NAME          {}", ilp.name),
        MpsFormat::Free => writeln!(s, "NAME {}", ilp.name),
    }
    .unwrap();
    s.push_str("ROWS\n");
    s.push_str(" N  OBJ\n");
    for row in &ilp.rows {
        writeln!(s, " {}  {}", row.sense.code(), row.name).unwrap();
    }

    s.push_str("COLUMNS\n");
    let marker = |s: &mut String, tag: &str| match format {
        MpsFormat::Fixed => writeln!(s, "    MARKER    'MARKER'                 '{tag}'").unwrap(),
        MpsFormat::Free => writeln!(s, " MARKER 'MARKER' '{tag}'").unwrap(),
    };
    marker(&mut s, "INTORG");
    for col in &ilp.columns {
        entry_line(&mut s, format, &col.name, "OBJ", &number(col.objective, format));
        for &(row, coef) in &col.entries {
            if coef != 0.0 {
                entry_line(&mut s, format, &col.name, &ilp.rows[row].name, &number(coef, format));
            }
        }
    }
    marker(&mut s, "INTEND");

    s.push_str("RHS\n");
    for row in ilp.rows.iter().filter(|r| r.rhs != 0.0) {
        entry_line(&mut s, format, "RHS", &row.name, &number(row.rhs, format));
    }

    s.push_str("BOUNDS\n");
    for col in &ilp.columns {
        let bound = |s: &mut String, code: &str, value: Option<f64>| {
            let v = value.map(|v| number(v, format)).unwrap_or_default();
            match format {
                MpsFormat::Fixed => writeln!(s, " {code:<2} BND       {:<8}  {v}", col.name),
                MpsFormat::Free => writeln!(s, " {code} BND {} {v}", col.name),
            }
            .unwrap();
        };
        match (col.kind, col.fixed_zero) {
            (_, true) => bound(&mut s, "FX", Some(0.0)),
            (ColumnKind::Binary, false) => bound(&mut s, "BV", None),
            (ColumnKind::Integer, false) => {
                bound(&mut s, "LI", Some(col.lower));
                bound(&mut s, "UI", Some(col.upper));
            }
        }
    }
    s.push_str("ENDATA\n");

    out.write_all(s.as_bytes())
        .map_err(|e| Error::io("<mps writer>", e))
}

/// Writes the model of `instance` to `path`.
pub fn export_mps(
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    path: impl AsRef<Path>,
    format: MpsFormat,
) -> Result<IlpExport> {
    let path = path.as_ref();
    let ilp = build_ilp(instance, matrix);
    let mut buf = Vec::new();
    write_mps(&ilp, &mut buf, format)?;
    fs::write(path, buf).map_err(|e: io::Error| Error::io(path, e))?;
    Ok(ilp)
}
