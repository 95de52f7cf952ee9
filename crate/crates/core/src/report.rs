//! Run artifacts: `report.json`, CSV tables and a gnuplot script.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// One plot per table: first column against each of the others.
#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub logscale_y: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub result: Value,
    pub tables: Vec<String>,
    #[serde(skip)]
    csv: Vec<CsvTable>,
    #[serde(skip)]
    plot: PlotSpec,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: &impl Serialize, result: &impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config)?,
            result: serde_json::to_value(result)?,
            tables: vec![],
            csv: vec![],
            plot: PlotSpec::default(),
        })
    }

    pub fn with_table(mut self, table: CsvTable) -> Self {
        self.tables.push(table.file_name());
        self.csv.push(table);
        self
    }

    pub fn with_log_y(mut self, table: &str) -> Self {
        self.plot.logscale_y.push(table.to_string());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn gnuplot_script(&self) -> String {
        let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
        for t in &self.csv {
            s.push_str(&format!("\nset output '{}.png'\n", t.name));
            s.push_str(&format!("set title '{}'\n", t.name));
            if self.plot.logscale_y.contains(&t.name) {
                s.push_str("set logscale y\n");
            } else {
                s.push_str("unset logscale y\n");
            }
            let parts: Vec<String> = (2..=t.header.len())
                .map(|c| format!("'{}' using 1:{c} with linespoints", t.file_name()))
                .collect();
            if !parts.is_empty() {
                s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
            }
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        for t in &self.csv {
            t.write(dir)?;
        }
        fs::write(dir.join("plot.gp"), self.gnuplot_script())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_all_artifacts() {
        let dir = std::env::temp_dir().join(format!("poincare-report-{}", std::process::id()));
        let mut t = CsvTable::new("slope", &["r", "log_norm"]);
        t.push(vec![1.0, -0.5]);
        t.push(vec![2.0, 0.1 + 0.2]);
        let r = Report::new("series", 3, &serde_json::json!({"k": 2}), &serde_json::json!({"x": 1.5}))
            .unwrap()
            .with_table(t);
        r.write(&dir).unwrap();
        let csv = fs::read_to_string(dir.join("slope.csv")).unwrap();
        assert_eq!(csv, "r,log_norm\n1,-0.5\n2,0.30000000000000004\n");
        let plot = fs::read_to_string(dir.join("plot.gp")).unwrap();
        assert!(plot.contains("'slope.csv' using 1:2"));
        let json: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(json["tables"][0], "slope.csv");
        fs::remove_dir_all(dir).unwrap();
    }
}
