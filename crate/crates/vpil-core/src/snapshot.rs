//! Snapshot persistence.
//!
//! A snapshot is one UTF-8 JSON header line (terminated by `\n`) followed by
//! the raw sample values as little-endian 64-bit floats. Full phase-space
//! states store nx^3 * nv^3 values in x-major order (the in-memory layout);
//! space-free states store the nv radial node values with `nx = 0` and
//! `Lx = 0.0`. Writing the same state twice produces identical bytes, and a
//! write/read round trip reproduces every bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VpilError};
use crate::fields::{InteractionSign, PhaseField, RadialField};
use crate::grid::{Grid3, PhaseGrid, RadialGrid};
use crate::sim::{KineticState, RadialState};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub mode: String,
    pub sign: String,
    pub t: f64,
    pub step_index: u64,
    pub clipped_mass_total: f64,
    pub nx: usize,
    pub nv: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Lv")]
    pub lv: f64,
}

fn write_payload(path: &Path, header: &SnapshotHeader, values: &[f64]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let line = serde_json::to_string(header)
        .map_err(|e| VpilError::Snapshot(format!("header serialization failed: {e}")))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_payload(path: &Path) -> Result<(SnapshotHeader, Vec<f64>)> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match r.read(&mut byte)? {
            0 => {
                return Err(VpilError::Snapshot(
                    "file ended before the header line terminator".into(),
                ))
            }
            _ => {
                if byte[0] == b'\n' {
                    break;
                }
                line.push(byte[0]);
                if line.len() > 4096 {
                    return Err(VpilError::Snapshot("header line exceeds 4096 bytes".into()));
                }
            }
        }
    }
    let header: SnapshotHeader = serde_json::from_slice(&line)
        .map_err(|e| VpilError::Snapshot(format!("header is not valid JSON: {e}")))?;
    if header.version != SNAPSHOT_VERSION {
        return Err(VpilError::Snapshot(format!(
            "unsupported version {}, expected {SNAPSHOT_VERSION}",
            header.version
        )));
    }
    let count = match header.mode.as_str() {
        "vpil" => header.nx * header.nx * header.nx * header.nv * header.nv * header.nv,
        "homogeneous" => {
            if header.nx != 0 || header.lx != 0.0 {
                return Err(VpilError::Snapshot(
                    "homogeneous snapshot must carry nx = 0 and Lx = 0.0".into(),
                ));
            }
            header.nv
        }
        other => return Err(VpilError::Snapshot(format!("unknown mode {other:?}"))),
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * count {
        return Err(VpilError::Snapshot(format!(
            "payload holds {} bytes, header promises {}",
            bytes.len(),
            8 * count
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}

pub fn write_phase_snapshot(
    path: &Path,
    state: &KineticState,
    sign: InteractionSign,
) -> Result<()> {
    let grid = state.f.grid();
    let header = SnapshotHeader {
        version: SNAPSHOT_VERSION,
        mode: "vpil".into(),
        sign: sign.as_str().into(),
        t: state.t,
        step_index: state.step_index,
        clipped_mass_total: state.clipped_mass_total,
        nx: grid.space.points_per_axis(),
        nv: grid.velocity.points_per_axis(),
        lx: grid.space.extent_half(),
        lv: grid.velocity.extent_half(),
    };
    write_payload(path, &header, state.f.values())
}

pub fn read_phase_snapshot(path: &Path) -> Result<(KineticState, InteractionSign)> {
    let (header, values) = read_payload(path)?;
    if header.mode != "vpil" {
        return Err(VpilError::Snapshot(format!(
            "expected a phase-space snapshot, found mode {:?}",
            header.mode
        )));
    }
    let sign = InteractionSign::parse(&header.sign)?;
    let grid = PhaseGrid::new(
        Grid3::new(header.lx, header.nx)?,
        Grid3::new(header.lv, header.nv)?,
    );
    let f = PhaseField::from_values(grid, values)?;
    Ok((
        KineticState {
            f,
            t: header.t,
            step_index: header.step_index,
            clipped_mass_total: header.clipped_mass_total,
        },
        sign,
    ))
}

pub fn write_radial_snapshot(
    path: &Path,
    state: &RadialState,
    sign: InteractionSign,
) -> Result<()> {
    let grid = state.f.grid();
    let header = SnapshotHeader {
        version: SNAPSHOT_VERSION,
        mode: "homogeneous".into(),
        sign: sign.as_str().into(),
        t: state.t,
        step_index: state.step_index,
        clipped_mass_total: state.clipped_mass_total,
        nx: 0,
        nv: grid.len(),
        lx: 0.0,
        lv: grid.r_max(),
    };
    write_payload(path, &header, state.f.values())
}

pub fn read_radial_snapshot(path: &Path) -> Result<(RadialState, InteractionSign)> {
    let (header, values) = read_payload(path)?;
    if header.mode != "homogeneous" {
        return Err(VpilError::Snapshot(format!(
            "expected a space-free snapshot, found mode {:?}",
            header.mode
        )));
    }
    let sign = InteractionSign::parse(&header.sign)?;
    let grid = RadialGrid::new(header.lv, header.nv)?;
    let f = RadialField::from_values(grid, values)?;
    Ok((
        RadialState {
            f,
            t: header.t,
            step_index: header.step_index,
            clipped_mass_total: header.clipped_mass_total,
        },
        sign,
    ))
}

/// Header of any snapshot without loading its payload values.
pub fn read_snapshot_header(path: &Path) -> Result<SnapshotHeader> {
    let (header, _) = read_payload(path)?;
    Ok(header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn phase_state() -> KineticState {
        let grid = PhaseGrid::new(Grid3::new(2.0, 4).unwrap(), Grid3::new(3.0, 4).unwrap());
        let mut rng = SplitMix64::new(11);
        let mut f = PhaseField::zeros(grid);
        for v in f.values_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        // A few awkward but finite values.
        f.values_mut()[0] = 1.0e-300;
        f.values_mut()[1] = -0.0;
        f.values_mut()[2] = f64::MIN_POSITIVE;
        KineticState {
            f,
            t: 0.1 + 0.2,
            step_index: 17,
            clipped_mass_total: 3.0e-13,
        }
    }

    #[test]
    fn phase_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phase.bin");
        let state = phase_state();
        write_phase_snapshot(&path, &state, InteractionSign::Plasma).unwrap();
        let (back, sign) = read_phase_snapshot(&path).unwrap();
        assert_eq!(sign, InteractionSign::Plasma);
        assert_eq!(back.t.to_bits(), state.t.to_bits());
        assert_eq!(back.step_index, 17);
        assert_eq!(
            back.clipped_mass_total.to_bits(),
            state.clipped_mass_total.to_bits()
        );
        assert_eq!(back.f.grid(), state.f.grid());
        for (a, b) in back.f.values().iter().zip(state.f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn radial_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("radial.bin");
        let grid = RadialGrid::new(5.0, 32).unwrap();
        let state = RadialState {
            f: RadialField::from_fn(grid, |r| (-r * r).exp()),
            t: 1.5,
            step_index: 3,
            clipped_mass_total: 0.0,
        };
        write_radial_snapshot(&path, &state, InteractionSign::Gravitational).unwrap();
        let (back, sign) = read_radial_snapshot(&path).unwrap();
        assert_eq!(sign, InteractionSign::Gravitational);
        assert_eq!(back.f.grid(), grid);
        for (a, b) in back.f.values().iter().zip(state.f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_is_one_json_line_with_the_documented_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phase.bin");
        write_phase_snapshot(&path, &phase_state(), InteractionSign::Gravitational).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        let value: serde_json::Value = serde_json::from_slice(&bytes[..nl]).unwrap();
        for key in [
            "version",
            "mode",
            "sign",
            "t",
            "step_index",
            "clipped_mass_total",
            "nx",
            "nv",
            "Lx",
            "Lv",
        ] {
            assert!(value.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(value["version"], 1);
        assert_eq!(value["mode"], "vpil");
        assert_eq!(bytes.len(), nl + 1 + 8 * 4usize.pow(3) * 4usize.pow(3));
    }

    #[test]
    fn writes_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        let state = phase_state();
        write_phase_snapshot(&a, &state, InteractionSign::Plasma).unwrap();
        write_phase_snapshot(&b, &state, InteractionSign::Plasma).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phase.bin");
        write_phase_snapshot(&path, &phase_state(), InteractionSign::Plasma).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 5);
        std::fs::write(&path, &bytes).unwrap();
        match read_phase_snapshot(&path) {
            Err(VpilError::Snapshot(msg)) => assert!(msg.contains("payload"), "{msg}"),
            other => panic!("unexpected result: {other:?}"),
        }
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weird.bin");
        std::fs::write(
            &path,
            b"{\"version\":1,\"mode\":\"banana\",\"sign\":\"plasma\",\"t\":0.0,\"step_index\":0,\"clipped_mass_total\":0.0,\"nx\":0,\"nv\":0,\"Lx\":0.0,\"Lv\":1.0}\n",
        )
        .unwrap();
        match read_snapshot_header(&path) {
            Err(VpilError::Snapshot(msg)) => assert!(msg.contains("banana"), "{msg}"),
            other => panic!("unexpected result: {other:?}"),
        }
    }
}
