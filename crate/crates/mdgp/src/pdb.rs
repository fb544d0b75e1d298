//! Protein Data Bank ingestion and the on-disk instance format.
//!
//! Coordinates come out of the fixed-column PDB layout (v3.3): record name in
//! columns 1-6, x/y/z in 31-38, 39-46, 47-54. Only the first model is read
//! and alternate locations other than blank or 'A' are dropped.

use crate::mdgp::{Conformation, MdgpInstance};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PdbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: malformed coordinate field {field:?}: {text:?}")]
    BadCoordinate {
        line: usize,
        field: &'static str,
        text: String,
    },
    #[error("line {line}: record too short for coordinate fields")]
    ShortRecord { line: usize },
    #[error("no atoms found")]
    Empty,
    #[error("line {line}: {message}")]
    BadInstanceLine { line: usize, message: String },
    #[error(transparent)]
    Instance(#[from] crate::mdgp::MdgpError),
}

/// One coordinate row from an ATOM or HETATM record.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomRecord {
    pub serial_line: usize,
    pub hetatm: bool,
    pub name: String,
    pub alt_loc: char,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Include HETATM records alongside ATOM.
    pub include_hetatm: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            include_hetatm: false,
        }
    }
}

fn parse_coord(
    line_text: &str,
    line: usize,
    lo: usize,
    hi: usize,
    field: &'static str,
) -> Result<f64, PdbError> {
    let bytes = line_text.as_bytes();
    if bytes.len() < hi {
        return Err(PdbError::ShortRecord { line });
    }
    let text = line_text[lo..hi].trim();
    text.parse::<f64>().map_err(|_| PdbError::BadCoordinate {
        line,
        field,
        text: text.to_string(),
    })
}

/// Atom records of the first model, filtered by altLoc and record type.
pub fn parse_pdb(text: &str, options: &IngestOptions) -> Result<Vec<AtomRecord>, PdbError> {
    let mut atoms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let record = if raw.len() >= 6 { &raw[..6] } else { raw };
        let record = record.trim_end();
        if record == "ENDMDL" {
            break;
        }
        let hetatm = record == "HETATM";
        if record != "ATOM" && !(hetatm && options.include_hetatm) {
            continue;
        }
        let alt_loc = raw.as_bytes().get(16).copied().unwrap_or(b' ') as char;
        if alt_loc != ' ' && alt_loc != 'A' {
            continue;
        }
        let x = parse_coord(raw, line, 30, 38, "x")?;
        let y = parse_coord(raw, line, 38, 46, "y")?;
        let z = parse_coord(raw, line, 46, 54, "z")?;
        let name = raw.get(12..16).unwrap_or("").trim().to_string();
        atoms.push(AtomRecord {
            serial_line: line,
            hetatm,
            name,
            alt_loc,
            position: [x, y, z],
        });
    }
    if atoms.is_empty() {
        return Err(PdbError::Empty);
    }
    Ok(atoms)
}

pub fn parse_pdb_file(path: &Path, options: &IngestOptions) -> Result<Vec<AtomRecord>, PdbError> {
    let text = fs::read_to_string(path).map_err(|source| PdbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pdb(&text, options)
}

/// Distance-geometry instance from atom coordinates: every pair within
/// `cutoff` (inclusive) contributes its exact distance, and the coordinates
/// are kept as ground truth.
pub fn build_instance(atoms: &[AtomRecord], cutoff: f64) -> Result<MdgpInstance, PdbError> {
    let n = atoms.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut d2 = 0.0;
            for k in 0..3 {
                let diff = atoms[i].position[k] - atoms[j].position[k];
                d2 += diff * diff;
            }
            let d = d2.sqrt();
            if d <= cutoff {
                pairs.push((i, j, d));
            }
        }
    }
    let coords: Vec<f64> = atoms.iter().flat_map(|a| a.position).collect();
    let truth = Conformation::new(3, coords)?;
    Ok(MdgpInstance::new(3, n, pairs, Some(truth))?)
}

/// Plain-text serialization:
///
/// ```text
/// MDGP d n_p m
/// i j d_ij        (m lines, 1-based, i < j)
/// TRUTH           (optional)
/// x_1 ... x_d     (n_p lines)
/// ```
pub fn write_instance(instance: &MdgpInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "MDGP {} {} {}",
        instance.dim(),
        instance.atom_count(),
        instance.pairs().len()
    );
    for &(i, j, d) in instance.pairs() {
        let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, d);
    }
    if let Some(truth) = instance.ground_truth() {
        out.push_str("TRUTH\n");
        for a in 0..instance.atom_count() {
            let row = truth.atom(a);
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v:.17e}");
                first = false;
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_instance_file(instance: &MdgpInstance, path: &Path) -> Result<(), PdbError> {
    fs::write(path, write_instance(instance)).map_err(|source| PdbError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_instance(text: &str) -> Result<MdgpInstance, PdbError> {
    let mut lines = text.lines().enumerate();
    let (first_idx, header) = lines
        .next()
        .ok_or_else(|| PdbError::BadInstanceLine {
            line: 1,
            message: "empty file".into(),
        })?;
    let mut parts = header.split_whitespace();
    let bad = |line: usize, message: &str| PdbError::BadInstanceLine {
        line,
        message: message.to_string(),
    };
    if parts.next() != Some("MDGP") {
        return Err(bad(first_idx + 1, "expected header starting with MDGP"));
    }
    let d: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(first_idx + 1, "bad dimension"))?;
    let n_p: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(first_idx + 1, "bad atom count"))?;
    let m: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(first_idx + 1, "bad pair count"))?;
    let mut pairs = Vec::with_capacity(m);
    let mut truth_rows: Option<Vec<f64>> = None;
    for _ in 0..m {
        let (idx, row) = lines
            .next()
            .ok_or_else(|| bad(0, "unexpected end of file in pair list"))?;
        let line = idx + 1;
        let mut f = row.split_whitespace();
        let i: usize = f
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(line, "bad first index"))?;
        let j: usize = f
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(line, "bad second index"))?;
        let dist: f64 = f
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(line, "bad distance"))?;
        if i == 0 || j == 0 || i > n_p || j > n_p {
            return Err(bad(line, "pair index out of range"));
        }
        pairs.push((i - 1, j - 1, dist));
    }
    if let Some((idx, marker)) = lines.next() {
        if marker.trim() != "TRUTH" {
            return Err(bad(idx + 1, "expected TRUTH marker or end of file"));
        }
        let mut coords = Vec::with_capacity(n_p * d);
        for _ in 0..n_p {
            let (cidx, row) = lines
                .next()
                .ok_or_else(|| bad(0, "unexpected end of file in TRUTH block"))?;
            let line = cidx + 1;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(line, "bad coordinate"))?;
            if vals.len() != d {
                return Err(bad(line, "wrong number of coordinates"));
            }
            coords.extend(vals);
        }
        truth_rows = Some(coords);
    }
    let truth = truth_rows
        .map(|c| Conformation::new(d, c))
        .transpose()?;
    Ok(MdgpInstance::new(d, n_p, pairs, truth)?)
}

pub fn read_instance_file(path: &Path) -> Result<MdgpInstance, PdbError> {
    let text = fs::read_to_string(path).map_err(|source| PdbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_instance(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom_line(record: &str, alt: char, x: f64, y: f64, z: f64) -> String {
        format!(
            "{record:<6}{serial:>5} {name:<4}{alt}{res:<3} {chain}{seq:>4}    {x:>8.3}{y:>8.3}{z:>8.3}{occ:>6.2}{b:>6.2}          {el:>2}",
            record = record,
            serial = 1,
            name = " CA ",
            alt = alt,
            res = "ALA",
            chain = 'A',
            seq = 1,
            x = x,
            y = y,
            z = z,
            occ = 1.0,
            b = 0.0,
            el = "C"
        )
    }

    #[test]
    fn parses_atom_records() {
        let text = format!(
            "{}\n{}\n",
            atom_line("ATOM", ' ', 1.0, 2.0, 3.0),
            atom_line("ATOM", ' ', -1.5, 0.0, 4.25)
        );
        let atoms = parse_pdb(&text, &IngestOptions::default()).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].position, [1.0, 2.0, 3.0]);
        assert_eq!(atoms[1].position, [-1.5, 0.0, 4.25]);
    }

    #[test]
    fn hetatm_filtering() {
        let text = format!(
            "{}\n{}\n",
            atom_line("ATOM", ' ', 0.0, 0.0, 0.0),
            atom_line("HETATM", ' ', 1.0, 1.0, 1.0)
        );
        let only_atom = parse_pdb(&text, &IngestOptions::default()).unwrap();
        assert_eq!(only_atom.len(), 1);
        let both = parse_pdb(
            &text,
            &IngestOptions {
                include_hetatm: true,
            },
        )
        .unwrap();
        assert_eq!(both.len(), 2);
        assert!(both[1].hetatm);
    }

    #[test]
    fn alt_loc_filtering() {
        let text = format!(
            "{}\n{}\n{}\n",
            atom_line("ATOM", 'A', 0.0, 0.0, 0.0),
            atom_line("ATOM", 'B', 9.0, 9.0, 9.0),
            atom_line("ATOM", ' ', 1.0, 0.0, 0.0),
        );
        let atoms = parse_pdb(&text, &IngestOptions::default()).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].position, [0.0, 0.0, 0.0]);
        assert_eq!(atoms[1].position, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn first_model_only() {
        let text = format!(
            "MODEL     1\n{}\nENDMDL\nMODEL     2\n{}\nENDMDL\n",
            atom_line("ATOM", ' ', 0.0, 0.0, 0.0),
            atom_line("ATOM", ' ', 5.0, 5.0, 5.0),
        );
        let atoms = parse_pdb(&text, &IngestOptions::default()).unwrap();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].position, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn bad_coordinate_reports_line() {
        let mut line = atom_line("ATOM", ' ', 0.0, 0.0, 0.0);
        line.replace_range(30..38, "  xx.yyy");
        let text = format!("REMARK\n{line}\n");
        match parse_pdb(&text, &IngestOptions::default()) {
            Err(PdbError::BadCoordinate { line: 2, field: "x", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_record_rejected() {
        let text = "ATOM      1  CA AALA A   1\n";
        match parse_pdb(text, &IngestOptions::default()) {
            Err(PdbError::ShortRecord { line: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cutoff_is_inclusive() {
        let atoms = vec![
            AtomRecord {
                serial_line: 1,
                hetatm: false,
                name: "CA".into(),
                alt_loc: ' ',
                position: [0.0, 0.0, 0.0],
            },
            AtomRecord {
                serial_line: 2,
                hetatm: false,
                name: "CA".into(),
                alt_loc: ' ',
                position: [6.0, 0.0, 0.0],
            },
            AtomRecord {
                serial_line: 3,
                hetatm: false,
                name: "CA".into(),
                alt_loc: ' ',
                position: [0.0, 6.0 + 1e-9, 0.0],
            },
        ];
        let inst = build_instance(&atoms, 6.0).unwrap();
        // exactly at cutoff kept, just over dropped; (1,2) distance ~8.49
        assert_eq!(inst.pairs().len(), 1);
        assert_eq!(inst.pairs()[0].0, 0);
        assert_eq!(inst.pairs()[0].1, 1);
    }

    #[test]
    fn instance_roundtrip() {
        let atoms: Vec<AtomRecord> = [
            [0.0, 0.0, 0.0],
            [1.5, 0.25, -0.75],
            [3.0, -1.0, 2.0],
            [0.5, 2.5, 1.0],
        ]
        .iter()
        .enumerate()
        .map(|(i, p)| AtomRecord {
            serial_line: i + 1,
            hetatm: false,
            name: "CA".into(),
            alt_loc: ' ',
            position: *p,
        })
        .collect();
        let inst = build_instance(&atoms, 6.0).unwrap();
        let text = write_instance(&inst);
        let back = read_instance(&text).unwrap();
        assert_eq!(back.dim(), inst.dim());
        assert_eq!(back.atom_count(), inst.atom_count());
        assert_eq!(back.pairs().len(), inst.pairs().len());
        for (a, b) in back.pairs().iter().zip(inst.pairs()) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
            assert_eq!(a.2, b.2, "distances must survive exactly");
        }
        let t0 = inst.ground_truth().unwrap();
        let t1 = back.ground_truth().unwrap();
        assert_eq!(t0.coords(), t1.coords());
    }

    #[test]
    fn roundtrip_without_truth() {
        let inst = MdgpInstance::new(3, 3, vec![(0, 1, 1.0), (1, 2, 2.0)], None).unwrap();
        let back = read_instance(&write_instance(&inst)).unwrap();
        assert!(back.ground_truth().is_none());
        assert_eq!(back.pairs(), inst.pairs());
    }

    #[test]
    fn malformed_instances_rejected() {
        assert!(matches!(
            read_instance("NOPE 3 2 1\n1 2 1.0\n"),
            Err(PdbError::BadInstanceLine { line: 1, .. })
        ));
        assert!(matches!(
            read_instance("MDGP 3 2 1\n1 5 1.0\n"),
            Err(PdbError::BadInstanceLine { line: 2, .. })
        ));
        assert!(matches!(
            read_instance("MDGP 3 2 2\n1 2 1.0\n"),
            Err(PdbError::BadInstanceLine { .. })
        ));
        // duplicate pair caught by instance validation
        assert!(matches!(
            read_instance("MDGP 3 2 2\n1 2 1.0\n2 1 1.0\n"),
            Err(PdbError::Instance(_))
        ));
        assert!(matches!(
            read_instance("MDGP 3 2 1\n1 2 1.0\nTRUTH\n0 0 0\n"),
            Err(PdbError::BadInstanceLine { .. })
        ));
    }
}
