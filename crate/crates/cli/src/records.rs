//! CSV record formats. Every file starts with `# key = value` provenance
//! lines followed by a fixed header row.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ionkick::synth::{FringeScan, RingSample};
use ionkick::tomography::ChiGrid;

use crate::error::{CliError, CliResult};

pub const FRINGE_HEADER: [&str; 6] = ["delta_rad_per_s", "T_s", "N", "theta_rad", "shots", "count"];
pub const RING_HEADER: [&str; 5] = ["n_kicks", "theta_rad", "phi_rad", "shots", "count"];
pub const GRID_HEADER: [&str; 5] = ["re_alpha", "im_alpha", "chi_re", "chi_im", "mask"];

pub const FRINGE_SCHEMA: &str = "ionkick-fringe/1";
pub const RING_SCHEMA: &str = "ionkick-ring/1";
pub const GRID_SCHEMA: &str = "ionkick-grid/1";

/// Ordered `# key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(schema: &str, config_sha256: &str, seed: u64) -> Self {
        let mut p = Self::default();
        p.push("schema", schema);
        p.push("config_sha256", config_sha256);
        p.push("seed", seed);
        p.push("version", env!("CARGO_PKG_VERSION"));
        p
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(())
    }

    fn parse(text: &str) -> Self {
        let mut p = Self::default();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line[1..].split_once('=') {
                p.push(k.trim(), v.trim());
            }
        }
        p
    }
}

fn write_file(path: &Path, prov: &Provenance, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    let mut buf = Vec::new();
    prov.write(&mut buf)?;
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    std::fs::write(path, buf).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path, header: &[&str]) -> CliResult<(Provenance, Vec<csv::StringRecord>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let prov = Provenance::parse(&text);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let schema_err = |m: String| CliError::Validation(format!("{}: {m}", path.display()));
    let found = match records.next() {
        Some(rec) => rec?,
        None => return Err(schema_err("empty file, expected a header row".into())),
    };
    if found.iter().collect::<Vec<_>>() != header {
        return Err(schema_err(format!(
            "header {:?} does not match {:?}",
            found.iter().collect::<Vec<_>>(),
            header
        )));
    }
    let rows = records.collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(schema_err("no data rows".into()));
    }
    Ok((prov, rows))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: usize) -> CliResult<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::Validation(format!("row {line}: bad {name} {:?}", rec.get(i).unwrap_or(""))))
}

pub fn write_fringe_csv(path: &Path, prov: &Provenance, scans: &[FringeScan]) -> CliResult<()> {
    let rows = scans
        .iter()
        .flat_map(|s| {
            s.detunings.iter().zip(&s.counts).map(move |(d, c)| {
                vec![
                    d.to_string(),
                    s.ramsey_time.to_string(),
                    s.n_kicks.to_string(),
                    s.theta.to_string(),
                    s.shots.to_string(),
                    c.to_string(),
                ]
            })
        })
        .collect();
    write_file(path, prov, &FRINGE_HEADER, rows)
}

/// Rows grouped into scans by (N, θ, T) in order of first appearance.
pub fn read_fringe_csv(path: &Path) -> CliResult<(Provenance, Vec<FringeScan>)> {
    let (prov, rows) = read_file(path, &FRINGE_HEADER)?;
    let mut scans: Vec<FringeScan> = Vec::new();
    let mut index: BTreeMap<(i32, u64, u64), usize> = BTreeMap::new();
    for (line, rec) in rows.iter().enumerate() {
        let line = line + 1;
        let delta: f64 = field(rec, 0, "delta_rad_per_s", line)?;
        let t: f64 = field(rec, 1, "T_s", line)?;
        let n: i32 = field(rec, 2, "N", line)?;
        let theta: f64 = field(rec, 3, "theta_rad", line)?;
        let shots: u64 = field(rec, 4, "shots", line)?;
        let count: u64 = field(rec, 5, "count", line)?;
        let key = (n, theta.to_bits(), t.to_bits());
        let i = *index.entry(key).or_insert_with(|| {
            scans.push(FringeScan {
                n_kicks: n,
                theta,
                ramsey_time: t,
                detunings: Vec::new(),
                shots,
                counts: Vec::new(),
            });
            scans.len() - 1
        });
        if scans[i].shots != shots {
            return Err(CliError::Validation(format!(
                "row {line}: shots {shots} differs from {} earlier in the same scan",
                scans[i].shots
            )));
        }
        scans[i].detunings.push(delta);
        scans[i].counts.push(count);
    }
    for s in &scans {
        s.validate()?;
    }
    Ok((prov, scans))
}

pub fn write_ring_csv(path: &Path, prov: &Provenance, samples: &[RingSample]) -> CliResult<()> {
    let rows = samples
        .iter()
        .map(|s| {
            vec![
                s.n_kicks.to_string(),
                s.theta.to_string(),
                s.phi.to_string(),
                s.shots.to_string(),
                s.count.to_string(),
            ]
        })
        .collect();
    write_file(path, prov, &RING_HEADER, rows)
}

pub fn read_ring_csv(path: &Path) -> CliResult<(Provenance, Vec<RingSample>)> {
    let (prov, rows) = read_file(path, &RING_HEADER)?;
    let samples = rows
        .iter()
        .enumerate()
        .map(|(line, rec)| {
            let line = line + 1;
            let s = RingSample {
                n_kicks: field(rec, 0, "n_kicks", line)?,
                theta: field(rec, 1, "theta_rad", line)?,
                phi: field(rec, 2, "phi_rad", line)?,
                shots: field(rec, 3, "shots", line)?,
                count: field(rec, 4, "count", line)?,
            };
            if s.shots == 0 || s.count > s.shots {
                return Err(CliError::Validation(format!("row {line}: count {} of {} shots", s.count, s.shots)));
            }
            Ok(s)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((prov, samples))
}

/// Masked cells and a missing imaginary part are written as empty fields.
pub fn write_grid_csv(path: &Path, prov: &Provenance, grid: &ChiGrid) -> CliResult<()> {
    let value = |v: f64, m: bool| if m { v.to_string() } else { String::new() };
    let rows = (0..grid.len())
        .map(|i| {
            let a = grid.alpha(i);
            let m = grid.mask[i];
            vec![
                a.re.to_string(),
                a.im.to_string(),
                value(grid.re[i], m),
                grid.im.as_ref().map(|im| value(im[i], m)).unwrap_or_default(),
                u8::from(m).to_string(),
            ]
        })
        .collect();
    write_file(path, prov, &GRID_HEADER, rows)
}
