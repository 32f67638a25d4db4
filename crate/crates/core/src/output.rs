//! Result persistence: atomic file writes, the probe time-series CSV, and
//! the machine-readable run manifest.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Writes `bytes` to `path` via a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// One accepted quasi-static step of a run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub t_s: f64,
    pub w_bar_m: f64,
    pub r_n: f64,
    pub sigma_mid_pa: f64,
    pub sigma_quarter_top_pa: f64,
    pub max_d: f64,
    pub staggered_iters: usize,
}

/// Shortest round-trip decimal form of an f64 (plain Rust formatting).
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Writes the probe series as RFC-4180 CSV (CRLF records, header row).
pub fn write_probe_csv(path: &Path, records: &[ProbeRecord]) -> Result<()> {
    let mut s = String::new();
    s.push_str("t_s,w_bar_m,R_N,sigma_mid_Pa,sigma_quarter_top_Pa,max_d,staggered_iters\r\n");
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\r\n",
            fmt(r.t_s),
            fmt(r.w_bar_m),
            fmt(r.r_n),
            fmt(r.sigma_mid_pa),
            fmt(r.sigma_quarter_top_pa),
            fmt(r.max_d),
            r.staggered_iters
        ));
    }
    write_atomic(path, s.as_bytes())
}

/// SHA-256 of a file, lower-case hex.
pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    let digest = h.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Machine-readable run record written next to the result files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Full parsed configuration, echoed back.
    pub config: serde_json::Value,
    /// Every defaulted assumption that affects physics or reporting.
    pub assumptions: BTreeMap<String, serde_json::Value>,
    /// Probe positions after snapping to mesh nodes, in meters.
    pub snapped_probes: BTreeMap<String, f64>,
    pub termination: String,
    pub accepted_steps: usize,
    pub peak_reaction_n: f64,
    /// Bottom-fiber midspan stress at the peak-reaction step.
    pub failure_stress_pa: f64,
    pub wall_time_s: f64,
    /// SHA-256 checksums of the emitted result files, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }
}

/// JSON Schema the manifest is published against; shipped in the repo at
/// `schemas/manifest.schema.json` and embedded here so the binary can
/// re-emit it next to results.
pub const MANIFEST_SCHEMA: &str = include_str!("../schemas/manifest.schema.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_round_trip_and_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"first").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"first");
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        // no stray temp files left behind
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(leftovers, vec![std::ffi::OsString::from("a.txt")]);
    }

    #[test]
    fn probe_csv_is_rfc4180_with_roundtrip_floats() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("probes.csv");
        let records = vec![
            ProbeRecord {
                t_s: 0.1,
                w_bar_m: 3e-6,
                r_n: 123.456,
                sigma_mid_pa: 1.0 / 3.0,
                sigma_quarter_top_pa: -2.5e7,
                max_d: 0.0,
                staggered_iters: 3,
            },
            ProbeRecord {
                t_s: 0.2,
                w_bar_m: 6e-6,
                r_n: 246.9,
                sigma_mid_pa: 2.0 / 3.0,
                sigma_quarter_top_pa: -5e7,
                max_d: 1e-9,
                staggered_iters: 2,
            },
        ];
        write_probe_csv(&p, &records).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.split("\r\n").collect();
        assert_eq!(lines.len(), 4); // header + 2 records + trailing empty
        assert_eq!(
            lines[0],
            "t_s,w_bar_m,R_N,sigma_mid_Pa,sigma_quarter_top_Pa,max_d,staggered_iters"
        );
        assert!(lines[3].is_empty());
        // full round-trip precision
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[3].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields.len(), 7);
    }

    #[test]
    fn checksum_matches_reference_vector() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        write_atomic(&p, b"abc").unwrap();
        // SHA-256("abc"), FIPS 180-2 appendix B.1
        assert_eq!(
            file_checksum(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trips_and_matches_schema_requirements() {
        let manifest = Manifest {
            config: serde_json::json!({"scenario": {"rate_m_per_s": 3e-5}}),
            assumptions: BTreeMap::from([(
                "support_offset_m".to_string(),
                serde_json::json!(0.05),
            )]),
            snapped_probes: BTreeMap::from([("sigma_mid".to_string(), 0.55)]),
            termination: "localization".to_string(),
            accepted_steps: 120,
            peak_reaction_n: 950.0,
            failure_stress_pa: 4.4e7,
            wall_time_s: 12.5,
            checksums: BTreeMap::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        manifest.write(&p).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();

        // check the written document against the shipped schema's
        // `required` + property-type declarations (the subset it uses)
        let schema: serde_json::Value = serde_json::from_str(MANIFEST_SCHEMA).unwrap();
        let required = schema["required"].as_array().unwrap();
        assert!(!required.is_empty());
        for key in required {
            let key = key.as_str().unwrap();
            assert!(value.get(key).is_some(), "missing required key {key}");
        }
        for (key, decl) in schema["properties"].as_object().unwrap() {
            let Some(v) = value.get(key) else { continue };
            let ok = match decl["type"].as_str().unwrap() {
                "object" => v.is_object(),
                "string" => v.is_string(),
                "number" => v.is_number(),
                "integer" => v.is_u64() || v.is_i64(),
                other => panic!("unhandled declared type {other}"),
            };
            assert!(ok, "key {key} violates declared type");
        }
    }
}
