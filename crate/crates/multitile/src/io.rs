//! Interchange formats: the patch binary format, JSON exports with `"p/q"`
//! rationals, and the CSV layouts used by the command-line tools. Binary and
//! JSON round-trip patches losslessly.

use crate::exact::{format_rational, parse_rational, Rational};
use crate::flow::{Patch, PatchMeta, PlacedTile};
use crate::stats::{ComplexityProfile, DiscrepancySeries, TileCensus};
use num_bigint::BigInt;
use serde_json::{json, Value};
use std::io::{self, Read, Write};

const MAGIC: &[u8; 6] = b"MSTP1\0";
pub const JSON_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a patch file (bad magic)")]
    BadMagic,
    #[error("malformed patch file: {0}")]
    Malformed(String),
    #[error("malformed JSON document: {0}")]
    Json(String),
}

fn write_bigint(w: &mut impl Write, v: &BigInt) -> io::Result<()> {
    let bytes = v.to_signed_bytes_le();
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(&bytes)
}

fn read_bigint(r: &mut impl Read) -> Result<BigInt, FormatError> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    if len > 1 << 24 {
        return Err(FormatError::Malformed("oversized integer".into()));
    }
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes)?;
    Ok(BigInt::from_signed_bytes_le(&bytes))
}

fn write_rational(w: &mut impl Write, v: &Rational) -> io::Result<()> {
    write_bigint(w, v.numer())?;
    write_bigint(w, v.denom())
}

fn read_rational(r: &mut impl Read) -> Result<Rational, FormatError> {
    let num = read_bigint(r)?;
    let den = read_bigint(r)?;
    if den <= BigInt::from(0) {
        return Err(FormatError::Malformed("nonpositive denominator".into()));
    }
    Ok(Rational::new(num, den))
}

fn write_varint(w: &mut impl Write, mut v: u64) -> io::Result<()> {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            return w.write_all(&[byte]);
        }
        w.write_all(&[byte | 0x80])?;
    }
}

fn read_varint(r: &mut impl Read) -> Result<u64, FormatError> {
    let mut out: u64 = 0;
    let mut shift = 0;
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)?;
        out |= ((byte[0] & 0x7f) as u64) << shift;
        if byte[0] & 0x80 == 0 {
            return Ok(out);
        }
        shift += 7;
        if shift > 63 {
            return Err(FormatError::Malformed("varint overflow".into()));
        }
    }
}

/// Writes a patch in the binary interchange format: a header carrying the
/// scheme hash, root, time and frame, then one record per tile (type u16,
/// scale and offset as length-prefixed big integers, path as varints).
pub fn write_patch(w: &mut impl Write, patch: &Patch) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[patch.meta.dim as u8])?;
    w.write_all(&(patch.meta.root_type as u16).to_le_bytes())?;
    w.write_all(&patch.meta.scheme_hash)?;
    let name = patch.meta.scheme_name.as_bytes();
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name)?;
    write_rational(w, &patch.meta.time_u)?;
    for k in 0..patch.meta.dim {
        write_rational(w, &patch.meta.frame_offset[k])?;
    }
    w.write_all(&(patch.tiles.len() as u64).to_le_bytes())?;
    for tile in &patch.tiles {
        w.write_all(&(tile.ptype as u16).to_le_bytes())?;
        write_rational(w, &tile.scale)?;
        for k in 0..patch.meta.dim {
            write_rational(w, &tile.offset[k])?;
        }
        write_varint(w, tile.path.len() as u64)?;
        for &c in &tile.path {
            write_varint(w, c as u64)?;
        }
    }
    Ok(())
}

pub fn read_patch(r: &mut impl Read) -> Result<Patch, FormatError> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let mut dim_b = [0u8; 1];
    r.read_exact(&mut dim_b)?;
    let dim = dim_b[0] as usize;
    if dim != 1 && dim != 2 {
        return Err(FormatError::Malformed(format!("dimension {dim}")));
    }
    let mut root_b = [0u8; 2];
    r.read_exact(&mut root_b)?;
    let root_type = u16::from_le_bytes(root_b) as usize;
    let mut scheme_hash = [0u8; 32];
    r.read_exact(&mut scheme_hash)?;
    let mut name_len = [0u8; 4];
    r.read_exact(&mut name_len)?;
    let mut name = vec![0u8; u32::from_le_bytes(name_len) as usize];
    r.read_exact(&mut name)?;
    let scheme_name =
        String::from_utf8(name).map_err(|_| FormatError::Malformed("scheme name".into()))?;
    let time_u = read_rational(r)?;
    let mut frame_offset = Vec::with_capacity(dim);
    for _ in 0..dim {
        frame_offset.push(read_rational(r)?);
    }
    let mut count_b = [0u8; 8];
    r.read_exact(&mut count_b)?;
    let count = u64::from_le_bytes(count_b);
    let mut tiles = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let mut t_b = [0u8; 2];
        r.read_exact(&mut t_b)?;
        let ptype = u16::from_le_bytes(t_b) as usize;
        let scale = read_rational(r)?;
        let mut offset = Vec::with_capacity(dim);
        for _ in 0..dim {
            offset.push(read_rational(r)?);
        }
        let path_len = read_varint(r)? as usize;
        if path_len > 10_000 {
            return Err(FormatError::Malformed("path too long".into()));
        }
        let mut path = Vec::with_capacity(path_len);
        for _ in 0..path_len {
            path.push(read_varint(r)? as u32);
        }
        tiles.push(PlacedTile {
            ptype,
            scale,
            offset,
            path,
        });
    }
    Ok(Patch {
        meta: PatchMeta {
            scheme_name,
            scheme_hash,
            dim,
            root_type,
            time_u,
            frame_offset,
        },
        tiles,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<[u8; 32], FormatError> {
    if s.len() != 64 {
        return Err(FormatError::Json("scheme hash must be 64 hex chars".into()));
    }
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
            .map_err(|_| FormatError::Json("bad hex".into()))?;
    }
    Ok(out)
}

/// Schema-versioned JSON export of a patch; rationals are `"p/q"` strings.
pub fn patch_to_json(patch: &Patch) -> Value {
    json!({
        "schema_version": JSON_SCHEMA_VERSION,
        "kind": "patch",
        "scheme_name": patch.meta.scheme_name,
        "scheme_hash": hex(&patch.meta.scheme_hash),
        "dimension": patch.meta.dim,
        "root": patch.meta.root_type,
        "time_u": format_rational(&patch.meta.time_u),
        "frame_offset": patch.meta.frame_offset.iter().map(format_rational).collect::<Vec<_>>(),
        "tiles": patch.tiles.iter().map(|t| json!({
            "type": t.ptype,
            "scale": format_rational(&t.scale),
            "offset": t.offset.iter().map(format_rational).collect::<Vec<_>>(),
            "path": t.path,
        })).collect::<Vec<_>>(),
    })
}

pub fn patch_from_json(value: &Value) -> Result<Patch, FormatError> {
    let get_str = |v: &Value, k: &str| -> Result<String, FormatError> {
        v.get(k)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| FormatError::Json(format!("missing string {k}")))
    };
    let rat = |s: &str| parse_rational(s).map_err(|e| FormatError::Json(e.to_string()));
    let dim = value
        .get("dimension")
        .and_then(Value::as_u64)
        .ok_or_else(|| FormatError::Json("missing dimension".into()))? as usize;
    let rat_vec = |v: &Value| -> Result<Vec<Rational>, FormatError> {
        v.as_array()
            .ok_or_else(|| FormatError::Json("expected array".into()))?
            .iter()
            .map(|x| {
                rat(x
                    .as_str()
                    .ok_or_else(|| FormatError::Json("expected rational string".into()))?)
            })
            .collect()
    };
    let tiles = value
        .get("tiles")
        .and_then(Value::as_array)
        .ok_or_else(|| FormatError::Json("missing tiles".into()))?
        .iter()
        .map(|t| {
            Ok(PlacedTile {
                ptype: t
                    .get("type")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| FormatError::Json("missing tile type".into()))?
                    as usize,
                scale: rat(&get_str(t, "scale")?)?,
                offset: rat_vec(
                    t.get("offset")
                        .ok_or_else(|| FormatError::Json("missing offset".into()))?,
                )?,
                path: t
                    .get("path")
                    .and_then(Value::as_array)
                    .ok_or_else(|| FormatError::Json("missing path".into()))?
                    .iter()
                    .map(|c| c.as_u64().unwrap_or(0) as u32)
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    Ok(Patch {
        meta: PatchMeta {
            scheme_name: get_str(value, "scheme_name")?,
            scheme_hash: unhex(&get_str(value, "scheme_hash")?)?,
            dim,
            root_type: value
                .get("root")
                .and_then(Value::as_u64)
                .ok_or_else(|| FormatError::Json("missing root".into()))? as usize,
            time_u: rat(&get_str(value, "time_u")?)?,
            frame_offset: rat_vec(
                value
                    .get("frame_offset")
                    .ok_or_else(|| FormatError::Json("missing frame_offset".into()))?,
            )?,
        },
        tiles,
    })
}

/// Census as JSON with canonical key order.
pub fn census_to_json(census: &TileCensus) -> Value {
    json!({
        "schema_version": JSON_SCHEMA_VERSION,
        "kind": "census",
        "volume": format_rational(&census.volume),
        "total": census.total,
        "per_type_total": census.per_type_total,
        "cells": census.cells.iter().map(|c| json!({
            "type": c.ptype,
            "interval": format!("{}", c.interval),
            "count": c.count,
        })).collect::<Vec<_>>(),
    })
}

pub fn profile_to_json(profile: &ComplexityProfile) -> Value {
    json!({
        "schema_version": JSON_SCHEMA_VERSION,
        "kind": "complexity",
        "root": profile.anchor.root_type,
        "period_u": format_rational(&profile.anchor.period_u),
        "counts": profile.counts,
        "scales": profile.scales.iter().map(|per_k| {
            per_k.iter().map(|(t, s)| json!([t, format_rational(s)])).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
    })
}

/// CSV of a patch: `type,scale_num,scale_den,offset_x,offset_y,depth`.
pub fn patch_to_csv(patch: &Patch) -> String {
    let mut out = String::from("type,scale_num,scale_den,offset_x,offset_y,depth\n");
    for t in &patch.tiles {
        let ox = t.offset[0].to_string();
        let oy = if patch.meta.dim == 2 {
            t.offset[1].to_string()
        } else {
            String::from("0")
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.ptype,
            t.scale.numer(),
            t.scale.denom(),
            ox,
            oy,
            t.path.len()
        ));
    }
    out
}

/// CSV of a complexity profile: `k,c_k`.
pub fn profile_to_csv(profile: &ComplexityProfile) -> String {
    let mut out = String::from("k,c_k\n");
    for (k, c) in profile.counts.iter().enumerate() {
        out.push_str(&format!("{k},{c}\n"));
    }
    out
}

/// CSV of a discrepancy series: `t_num,t_den,count,expected,discrepancy`
/// (t columns carry u = e^t as an exact rational).
pub fn discrepancy_to_csv(series: &DiscrepancySeries) -> String {
    let mut out = String::from("t_num,t_den,count,expected,discrepancy\n");
    for p in &series.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.time_u.numer(),
            p.time_u.denom(),
            p.count,
            crate::render::fmt_sig12(p.expected),
            crate::render::fmt_sig12(p.discrepancy),
        ));
    }
    out
}

/// CSV of a census: `type,interval,count,rate`.
pub fn census_to_csv(census: &TileCensus) -> String {
    let mut out = String::from("type,interval,count,rate\n");
    for (i, c) in census.cells.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.ptype,
            c.interval,
            c.count,
            crate::render::fmt_sig12(census.rate_f64(i))
        ));
    }
    out
}
