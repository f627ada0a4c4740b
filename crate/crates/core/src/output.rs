//! CSV artifacts. One header row, LF endings, floats in shortest round-trip
//! form (`{:?}`), so identical runs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hamiltonian::{Derivatives, LegendreTable};
use crate::hj::MacroField;
use crate::kinetic::{BoundsReport, ConvergenceRow, PhaseField};

/// Buffers a CSV in memory; [`CsvTable::write`] commits it atomically.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: usize,
    text: String,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        CsvTable {
            columns: header.len(),
            text,
        }
    }

    pub fn row(&mut self, fields: &[Field]) {
        assert_eq!(fields.len(), self.columns, "row width must match header");
        for (k, f) in fields.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            match f {
                Field::F(x) => write!(self.text, "{x:?}"),
                Field::U(n) => write!(self.text, "{n}"),
                Field::Empty => Ok(()),
            }
            .expect("writing to a String");
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Writes via a sibling temporary file and a rename, so a failed run never
    /// leaves a truncated CSV behind.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("csv.partial");
        let result = fs::write(&tmp, &self.text).and_then(|_| fs::rename(&tmp, path));
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(Error::Io(format!("{}: {e}", path.display())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Field {
    F(f64),
    U(usize),
    Empty,
}

/// Collects the files of one experiment; on failure every file already
/// written is removed.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::Io(format!("{}: {e}", root.display())))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf> {
        let path = self.path(name);
        table.write(&path)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

/// `p,H,dH,d2H`, one row per p in input order.
pub fn h_table(ps: &[f64], rows: &[Derivatives]) -> CsvTable {
    let mut t = CsvTable::new(&["p", "H", "dH", "d2H"]);
    for (p, d) in ps.iter().zip(rows) {
        t.row(&[Field::F(*p), Field::F(d.value), Field::F(d.grad[0]), Field::F(d.hess[0])]);
    }
    t
}

/// `q,L`, q ascending.
pub fn legendre_table(table: &LegendreTable) -> CsvTable {
    let mut t = CsvTable::new(&["q", "L"]);
    for (q, l) in table.q_grid.iter().zip(&table.l_values) {
        t.row(&[Field::F(*q), Field::F(*l)]);
    }
    t
}

fn macro_series(series: &[MacroField], value_name: &str) -> CsvTable {
    let mut t = CsvTable::new(&["t", "x", value_name]);
    for field in series {
        for (j, &v) in field.values.iter().enumerate() {
            t.row(&[Field::F(field.time), Field::F(field.x(j)), Field::F(v)]);
        }
    }
    t
}

/// `t,x,phi`, t-major then x ascending.
pub fn hj_series(series: &[MacroField]) -> CsvTable {
    macro_series(series, "phi")
}

/// `t,x,phi_macro`, t-major then x ascending.
pub fn macro_phase_series(series: &[MacroField]) -> CsvTable {
    macro_series(series, "phi_macro")
}

/// `x,v,phi`, x-major then v ascending.
pub fn kinetic_final(field: &PhaseField) -> CsvTable {
    let mut t = CsvTable::new(&["x", "v", "phi"]);
    let nodes = field.velocity.nodes();
    for j in 0..field.n_x {
        for (i, &v) in nodes.iter().enumerate() {
            t.row(&[Field::F(field.x(j)), Field::F(v), Field::F(field.at(j, i))]);
        }
    }
    t
}

/// `eps,sup_error`, in study order (eps decreasing).
pub fn converge(rows: &[ConvergenceRow]) -> CsvTable {
    let mut t = CsvTable::new(&["eps", "sup_error"]);
    for r in rows {
        t.row(&[Field::F(r.epsilon), Field::F(r.sup_error)]);
    }
    t
}

/// `t,min_phi,max_phi,lip_x,rate_t,lip_v,violations`, t ascending; `lip_v`
/// is empty for atomic velocity models.
pub fn bounds(report: &BoundsReport) -> CsvTable {
    let mut t = CsvTable::new(&["t", "min_phi", "max_phi", "lip_x", "rate_t", "lip_v", "violations"]);
    for r in &report.rows {
        t.row(&[
            Field::F(r.t),
            Field::F(r.min_phi),
            Field::F(r.max_phi),
            Field::F(r.lip_x),
            Field::F(r.rate_t),
            r.lip_v.map_or(Field::Empty, Field::F),
            Field::U(r.violations),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_formatting() {
        let mut t = CsvTable::new(&["a", "b", "c"]);
        let x = 0.1 + 0.2;
        t.row(&[Field::F(x), Field::U(3), Field::Empty]);
        t.row(&[Field::F(0.0), Field::F(-2.5e-300), Field::F(1.0)]);
        assert_eq!(t.as_str(), "a,b,c\n0.30000000000000004,3,\n0.0,-2.5e-300,1.0\n");
        let back: f64 = t.as_str().lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn writes_and_discards() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("nested")).unwrap();
        let mut t = CsvTable::new(&["x"]);
        t.row(&[Field::F(1.5)]);
        let p = out.write("a.csv", &t).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x\n1.5\n");
        assert!(!p.with_extension("csv.partial").exists());
        out.discard();
        assert!(!p.exists());
    }

    #[test]
    fn unwritable_target_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let t = CsvTable::new(&["x"]);
        let err = t.write(&dir.path().join("missing").join("a.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
