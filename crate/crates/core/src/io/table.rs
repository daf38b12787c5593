//! Delimiter-separated numeric tables.
//!
//! ```text
//! # format_version = 1
//! # kind = rabi
//! # x_us	shots	upper
//! 0	200	1
//! ```
//!
//! Comment lines holding `key = value` are metadata; the last other comment
//! line before the data names the columns. Fields may be separated by tabs,
//! commas or spaces.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{Histogram, Series};
use crate::sequence::{PopulationPoint, ReadoutShot, WaveplateScan};

pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Table {
            meta: vec![
                ("format_version".into(), TABLE_FORMAT_VERSION.to_string()),
                ("kind".into(), kind.into()),
            ],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn kind(&self) -> Option<&str> {
        self.meta("kind")
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MalformedTable {
                line: 0,
                message: format!("missing column {name:?}"),
            })?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                let c = c.trim();
                if let Some((k, v)) = c.split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                } else if rows.is_empty() {
                    columns = Some(fields(c).map(str::to_string).collect());
                }
                continue;
            }
            let cols = columns.as_ref().ok_or_else(|| Error::MalformedTable {
                line: i + 1,
                message: "data before the column header".into(),
            })?;
            let row = fields(line)
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::MalformedTable {
                        line: i + 1,
                        message: format!("not a number: {f:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != cols.len() {
                return Err(Error::MalformedTable {
                    line: i + 1,
                    message: format!("{} fields, expected {}", row.len(), cols.len()),
                });
            }
            rows.push(row);
        }
        let columns = columns.ok_or_else(|| Error::MalformedTable {
            line: 0,
            message: "no column header".into(),
        })?;
        if let Some((_, v)) = meta.iter().find(|(k, _)| k == "format_version") {
            if v.parse::<u32>().ok() != Some(TABLE_FORMAT_VERSION) {
                return Err(Error::MalformedTable {
                    line: 0,
                    message: format!("unsupported format version {v}"),
                });
            }
        }
        Ok(Table { meta, columns, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn from_points(kind: &str, points: &[PopulationPoint]) -> Self {
        let mut t = Table::new(kind, &["x_us", "shots", "upper"]);
        for p in points {
            t.push(vec![p.x_us, p.shots as f64, p.upper as f64]);
        }
        t
    }

    pub fn to_points(&self) -> Result<Vec<PopulationPoint>> {
        let (x, n, k) = (self.column("x_us")?, self.column("shots")?, self.column("upper")?);
        x.iter()
            .zip(&n)
            .zip(&k)
            .map(|((&x_us, &n), &k)| {
                if n < 1.0 || k < 0.0 || k > n || n.fract() != 0.0 || k.fract() != 0.0 {
                    return Err(Error::MalformedTable {
                        line: 0,
                        message: format!("bad counts {k}/{n}"),
                    });
                }
                Ok(PopulationPoint {
                    x_us,
                    shots: n as u64,
                    upper: k as u64,
                })
            })
            .collect()
    }

    pub fn from_histogram(h: &Histogram) -> Self {
        let mut t = Table::new("decay", &["t_lo_ns", "t_hi_ns", "counts"]);
        for (i, &c) in h.counts.iter().enumerate() {
            let lo = h.lo + i as f64 * h.width;
            t.push(vec![lo, lo + h.width, c as f64]);
        }
        t
    }

    pub fn to_histogram(&self) -> Result<Histogram> {
        let (lo, hi, c) = (self.column("t_lo_ns")?, self.column("t_hi_ns")?, self.column("counts")?);
        if lo.is_empty() {
            return Err(Error::MalformedTable {
                line: 0,
                message: "empty histogram".into(),
            });
        }
        let width = hi[0] - lo[0];
        let uniform = lo.iter().zip(&hi).enumerate().all(|(i, (a, b))| {
            let e = lo[0] + i as f64 * width;
            (a - e).abs() <= 1e-9 * width.max(1.0) && (b - a - width).abs() <= 1e-9 * width.max(1.0)
        });
        if !(width > 0.0) || !uniform {
            return Err(Error::MalformedTable {
                line: 0,
                message: "histogram bins must be contiguous and of equal width".into(),
            });
        }
        if c.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
            return Err(Error::MalformedTable {
                line: 0,
                message: "histogram counts must be non-negative integers".into(),
            });
        }
        Ok(Histogram {
            lo: lo[0],
            width,
            counts: c.iter().map(|&v| v as u64).collect(),
        })
    }

    pub fn from_scan(scan: &WaveplateScan) -> Self {
        let mut t = Table::new(
            "parity",
            &["beta_deg", "up_h", "up_v", "down_h", "down_v", "even"],
        );
        t.meta.push(("basis".into(), scan.basis.to_string()));
        t.meta.push(("alpha_deg".into(), scan.alpha_deg.to_string()));
        for r in &scan.rows {
            let c = r.counts.map(|v| v as f64);
            t.push(vec![r.beta_deg, c[0], c[1], c[2], c[3], r.even_parity()]);
        }
        t
    }

    /// Even parity versus HWP angle, weighted by its binomial error when the
    /// joint counts are present.
    pub fn to_parity_series(&self) -> Result<Series> {
        let beta = self.column("beta_deg")?;
        let even = self.column("even")?;
        let s = Series::new(beta, even.clone())?;
        let counts: Result<Vec<Vec<f64>>> = ["up_h", "up_v", "down_h", "down_v"]
            .iter()
            .map(|c| self.column(c))
            .collect();
        match counts {
            Ok(c) => {
                let sigma = (0..even.len())
                    .map(|i| {
                        let n: f64 = c.iter().map(|col| col[i]).sum();
                        let p = even[i].clamp(0.5 / n.max(1.0), 1.0 - 0.5 / n.max(1.0));
                        (p * (1.0 - p) / n.max(1.0)).sqrt()
                    })
                    .collect();
                s.with_sigma(sigma)
            }
            Err(_) => Ok(s),
        }
    }

    /// Occurrences of each summed count, split by whether an atom was loaded.
    pub fn from_readout(shots: &[ReadoutShot]) -> Self {
        let max = shots.iter().map(|s| s.counts[0] + s.counts[1]).max().unwrap_or(0) as usize;
        let mut atom = vec![0u64; max + 1];
        let mut empty = vec![0u64; max + 1];
        for s in shots {
            let n = (s.counts[0] + s.counts[1]) as usize;
            if s.atom_present {
                atom[n] += 1;
            } else {
                empty[n] += 1;
            }
        }
        let mut t = Table::new("readout", &["counts", "total", "atom", "empty"]);
        for n in 0..=max {
            t.push(vec![n as f64, (atom[n] + empty[n]) as f64, atom[n] as f64, empty[n] as f64]);
        }
        t
    }
}

fn fields(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

impl std::fmt::Display for Table {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        for (k, v) in &self.meta {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "# {}", self.columns.join("\t"))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join("\t"))?;
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let mut t = Table::new("test", &["a", "b"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![-2.5e-17, 1e300]);
        let back = Table::parse(&t.to_string()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn accepts_other_delimiters() {
        let t = Table::parse("# x, y\n1,2\n3 4\n").unwrap();
        assert_eq!(t.column("y").unwrap(), vec![2.0, 4.0]);
        assert_eq!(t.kind(), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Table::parse("# a b\n1 2\n3\n").unwrap_err();
        assert!(matches!(e, Error::MalformedTable { line: 3, .. }), "{e}");
        let e = Table::parse("1 2\n").unwrap_err();
        assert!(matches!(e, Error::MalformedTable { line: 1, .. }));
        let e = Table::parse("# a\nx\n").unwrap_err();
        assert!(matches!(e, Error::MalformedTable { line: 2, .. }));
        assert!(Table::parse("# format_version = 9\n# a\n1\n").is_err());
    }

    #[test]
    fn histogram_round_trip() {
        let h = Histogram {
            lo: 0.0,
            width: 2.0,
            counts: vec![1, 5, 0, 7],
        };
        let t = Table::parse(&Table::from_histogram(&h).to_string()).unwrap();
        assert_eq!(t.to_histogram().unwrap(), h);
    }

    #[test]
    fn points_round_trip() {
        let p = vec![
            PopulationPoint { x_us: 0.0, shots: 200, upper: 3 },
            PopulationPoint { x_us: 12.5, shots: 200, upper: 190 },
        ];
        let t = Table::parse(&Table::from_points("rabi", &p).to_string()).unwrap();
        assert_eq!(t.kind(), Some("rabi"));
        assert_eq!(t.to_points().unwrap(), p);
    }
}
