//! The numeric design matrix handed to selection and estimation.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Outcome vector, covariates and the bookkeeping that travels with them.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    /// Respondent id per row (synthetic rows get a derived id).
    pub row_ids: Vec<String>,
    /// Ordinal 1..=10 rating or 0/1 indicator.
    pub y: Vec<i64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    pub penalized: Vec<bool>,
    /// Terminal × survey date.
    pub cluster_id: Vec<String>,
    pub synthetic: Vec<bool>,
    /// Non-regressor columns carried row-aligned (e.g. `BSNFLIER`).
    pub aux: BTreeMap<String, Vec<f64>>,
    pub reference_levels: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl DesignMatrix {
    pub fn new(
        y: Vec<i64>,
        x: DMatrix<f64>,
        names: Vec<String>,
        penalized: Vec<bool>,
        cluster_id: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n || cluster_id.len() != n {
            return Err(Error::Contract(format!(
                "row count mismatch: y {n}, X {}, clusters {}",
                x.nrows(),
                cluster_id.len()
            )));
        }
        if names.len() != x.ncols() || penalized.len() != x.ncols() {
            return Err(Error::Contract("column metadata length mismatch".into()));
        }
        if cluster_id.iter().any(|c| c.is_empty()) {
            return Err(Error::Contract("empty cluster id".into()));
        }
        Ok(Self {
            row_ids: (0..n).map(|i| i.to_string()).collect(),
            y,
            x,
            names,
            penalized,
            cluster_id,
            synthetic: vec![false; n],
            aux: BTreeMap::new(),
            reference_levels: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// A regressor or auxiliary column by name.
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        if let Ok(j) = self.column_index(name) {
            return Ok(self.x.column(j).iter().copied().collect());
        }
        self.aux
            .get(name)
            .cloned()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, keep: &[String]) -> Result<Self> {
        let idx = keep
            .iter()
            .map(|k| self.column_index(k))
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.x = self.x.select_columns(&idx);
        out.names = idx.iter().map(|&j| self.names[j].clone()).collect();
        out.penalized = idx.iter().map(|&j| self.penalized[j]).collect();
        Ok(out)
    }

    pub fn drop_columns(&self, drop: &[String]) -> Result<Self> {
        let keep: Vec<String> = self
            .names
            .iter()
            .filter(|n| !drop.contains(n))
            .cloned()
            .collect();
        self.select(&keep)
    }

    pub fn push_column(&mut self, name: &str, values: &[f64], penalized: bool) -> Result<()> {
        if values.len() != self.nrows() {
            return Err(Error::Contract(format!("column `{name}` has wrong length")));
        }
        if self.has_column(name) {
            return Err(Error::Contract(format!("column `{name}` already present")));
        }
        let j = self.ncols();
        self.x = self.x.clone().insert_column(j, 0.0);
        for (i, v) in values.iter().enumerate() {
            self.x[(i, j)] = *v;
        }
        self.names.push(name.to_string());
        self.penalized.push(penalized);
        Ok(())
    }

    /// Keeps the given rows, in order.
    pub fn take_rows(&self, rows: &[usize]) -> Self {
        let mut out = self.clone();
        out.x = self.x.select_rows(rows);
        out.y = rows.iter().map(|&i| self.y[i]).collect();
        out.row_ids = rows.iter().map(|&i| self.row_ids[i].clone()).collect();
        out.cluster_id = rows.iter().map(|&i| self.cluster_id[i].clone()).collect();
        out.synthetic = rows.iter().map(|&i| self.synthetic[i]).collect();
        for (k, v) in self.aux.iter() {
            out.aux.insert(k.clone(), rows.iter().map(|&i| v[i]).collect());
        }
        out
    }

    /// Integer codes for the cluster labels, numbered by first appearance.
    pub fn cluster_codes(&self) -> (Vec<usize>, usize) {
        group_codes(&self.cluster_id)
    }

    /// Writes `row_id,y,<columns>,cluster_id[,synthetic][,aux:<name>...]`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let with_synth = self.synthetic.iter().any(|s| *s);
        let mut header = vec!["row_id".to_string(), "y".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("cluster_id".into());
        if with_synth {
            header.push("synthetic".into());
        }
        header.extend(self.aux.keys().map(|k| format!("aux:{k}")));
        w.write_record(&header)?;
        for i in 0..self.nrows() {
            let mut rec = vec![self.row_ids[i].clone(), self.y[i].to_string()];
            rec.extend((0..self.ncols()).map(|j| self.x[(i, j)].to_string()));
            rec.push(self.cluster_id[i].clone());
            if with_synth {
                rec.push(u8::from(self.synthetic[i]).to_string());
            }
            rec.extend(self.aux.values().map(|v| v[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar metadata: one `column<TAB>penalized` line per column, then
    /// reference levels and notes.
    pub fn write_meta(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        writeln!(f, "[columns]")?;
        for (n, p) in self.names.iter().zip(&self.penalized) {
            writeln!(f, "{n}\t{}", if *p { "penalized" } else { "unpenalized" })?;
        }
        writeln!(f, "[reference_levels]")?;
        for (k, v) in &self.reference_levels {
            writeln!(f, "{k}\t{v}")?;
        }
        writeln!(f, "[notes]")?;
        for n in &self.notes {
            writeln!(f, "{n}")?;
        }
        Ok(())
    }

    /// Reads a matrix written by [`write_csv`](Self::write_csv) and
    /// [`write_meta`](Self::write_meta).
    pub fn read(csv_path: &Path, meta_path: &Path) -> Result<Self> {
        let meta = fs::read_to_string(meta_path)?;
        let mut section = "";
        let mut penal = BTreeMap::new();
        let mut refs = BTreeMap::new();
        let mut notes = Vec::new();
        for line in meta.lines() {
            if line.starts_with('[') {
                section = line;
                continue;
            }
            match section {
                "[columns]" => {
                    let (n, p) = line.split_once('\t').unwrap_or((line, "unpenalized"));
                    penal.insert(n.to_string(), p == "penalized");
                }
                "[reference_levels]" => {
                    if let Some((k, v)) = line.split_once('\t') {
                        refs.insert(k.to_string(), v.to_string());
                    }
                }
                "[notes]" => notes.push(line.to_string()),
                _ => {}
            }
        }
        let file = csv_path.display().to_string();
        let mut r = csv::Reader::from_path(csv_path)?;
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let cid = header
            .iter()
            .position(|h| h == "cluster_id")
            .ok_or_else(|| Error::MissingColumn("cluster_id".into()))?;
        let names: Vec<String> = header[2..cid].to_vec();
        let synth_col = header.iter().position(|h| h == "synthetic");
        let aux_cols: Vec<(usize, String)> = header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix("aux:").map(|n| (i, n.to_string())))
            .collect();
        let mut row_ids = Vec::new();
        let mut y = Vec::new();
        let mut data = Vec::new();
        let mut clusters = Vec::new();
        let mut synthetic = Vec::new();
        let mut aux: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |col: usize| -> Result<f64> {
                rec[col].parse::<f64>().map_err(|e| Error::Schema {
                    file: file.clone(),
                    row: row + 1,
                    column: header[col].clone(),
                    message: e.to_string(),
                })
            };
            row_ids.push(rec[0].to_string());
            y.push(parse(1)? as i64);
            for j in 2..cid {
                data.push(parse(j)?);
            }
            clusters.push(rec[cid].to_string());
            synthetic.push(synth_col.map(|c| &rec[c] == "1").unwrap_or(false));
            for (c, n) in &aux_cols {
                aux.entry(n.clone()).or_default().push(parse(*c)?);
            }
        }
        let n = y.len();
        let x = DMatrix::from_row_slice(n, names.len(), &data);
        let penalized = names
            .iter()
            .map(|n| penal.get(n).copied().unwrap_or(false))
            .collect();
        let mut m = DesignMatrix::new(y, x, names, penalized, clusters)?;
        m.row_ids = row_ids;
        m.synthetic = synthetic;
        m.aux = aux;
        m.reference_levels = refs;
        m.notes = notes;
        Ok(m)
    }
}

/// Integer codes for labels, numbered by first appearance.
pub fn group_codes<S: AsRef<str>>(labels: &[S]) -> (Vec<usize>, usize) {
    let mut map: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let codes = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(l.as_ref()).or_insert(next)
        })
        .collect();
    (codes, map.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DesignMatrix {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.0, 1.5, 1.0, -2.0]);
        DesignMatrix::new(
            vec![3, 1, 2],
            x,
            vec!["A".into(), "B".into()],
            vec![false, true],
            vec!["T2|2019-01-01".into(), "T2|2019-01-01".into(), "T3|2019-01-02".into()],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = small();
        m.aux.insert("BSNFLIER".into(), vec![1.0, 0.0, 1.0]);
        m.reference_levels.insert("terminal".into(), "T2".into());
        m.notes.push("dropped X".into());
        let c = dir.path().join("d.csv");
        let meta = dir.path().join("d.meta");
        m.write_csv(&c).unwrap();
        m.write_meta(&meta).unwrap();
        let back = DesignMatrix::read(&c, &meta).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn select_and_push() {
        let mut m = small();
        m.push_column("C", &[1.0, 2.0, 3.0], true).unwrap();
        let s = m.select(&["C".into(), "A".into()]).unwrap();
        assert_eq!(s.names, vec!["C", "A"]);
        assert_eq!(s.x[(2, 0)], 3.0);
        assert!(s.penalized[0] && !s.penalized[1]);
        assert!(matches!(m.select(&["Z".into()]), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn codes_follow_first_appearance() {
        let (codes, g) = group_codes(&["b", "a", "b", "c"]);
        assert_eq!(codes, vec![0, 1, 0, 2]);
        assert_eq!(g, 3);
    }
}
