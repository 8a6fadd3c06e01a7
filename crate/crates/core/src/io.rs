//! File formats.
//!
//! Every file starts with a single-line JSON header followed by CSV:
//!
//! * radial profiles: header `{kind: "radial-profile", n, p, Lambda,
//!   normalization, grid_size, radius, ...}`, then `r,phi` rows;
//! * volume profiles: header `{kind: "volume-profile", ..., profile_kind}`,
//!   then `s,value` rows (for step profiles the last row closes the final
//!   cell with value 0);
//! * gridded fields: header `{kind: "gridded-field", nx, ny, h, origin, p,
//!   cp, domain}`, then `ny` rows of `nx` values each, row `j` holding the
//!   nodes `(origin[0] + i h, origin[1] + j h)`; `NaN` marks nodes outside
//!   the domain.
//!
//! Headers carry `format_version` and an opaque `config` object with the
//! settings that produced the file. Floats are written in shortest
//! round-trip form, so reading a file back reproduces the values exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::DomainSpec;
use crate::elliptic::GriddedField;
use crate::error::{Error, Result};
use crate::profile::{ProfileKind, VolumeProfile};
use crate::radial::RadialProfile;
use crate::FORMAT_VERSION;

pub const NORMALIZATION: &str = "L^p norm 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub format_version: u32,
    pub kind: String,
    pub n: usize,
    pub p: f64,
    #[serde(rename = "Lambda", default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub normalization: String,
    pub grid_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_kind: Option<ProfileKind>,
    #[serde(default)]
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format_version: u32,
    pub kind: String,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub p: f64,
    pub cp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub config: Value,
}

fn write_header<W: Write, H: Serialize>(w: &mut W, header: &H) -> Result<()> {
    serde_json::to_writer(&mut *w, header)?;
    writeln!(w)?;
    Ok(())
}

fn write_pairs<W: Write>(w: &mut W, columns: &str, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "{columns}")?;
    for (a, b) in rows {
        writeln!(w, "{a},{b}")?;
    }
    Ok(())
}

pub fn write_radial_profile<W: Write>(mut w: W, profile: &RadialProfile, config: &Value) -> Result<()> {
    let header = ProfileHeader {
        format_version: FORMAT_VERSION,
        kind: "radial-profile".into(),
        n: profile.n,
        p: profile.p,
        lambda: Some(profile.lambda),
        normalization: NORMALIZATION.into(),
        grid_size: profile.phi.len(),
        radius: Some(profile.radius),
        profile_kind: None,
        config: config.clone(),
    };
    write_header(&mut w, &header)?;
    write_pairs(&mut w, "r,phi", &profile.rows())
}

pub fn write_volume_profile<W: Write>(
    mut w: W,
    profile: &VolumeProfile,
    n: usize,
    p: f64,
    lambda: Option<f64>,
    config: &Value,
) -> Result<()> {
    let rows = profile.rows();
    let header = ProfileHeader {
        format_version: FORMAT_VERSION,
        kind: "volume-profile".into(),
        n,
        p,
        lambda,
        normalization: NORMALIZATION.into(),
        grid_size: rows.len(),
        radius: None,
        profile_kind: Some(profile.kind()),
        config: config.clone(),
    };
    write_header(&mut w, &header)?;
    write_pairs(&mut w, "s,value", &rows)
}

fn read_header<R: BufRead, H: for<'de> Deserialize<'de>>(r: &mut R, kind: &str) -> Result<H> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let value: Value = serde_json::from_str(line.trim())
        .map_err(|e| Error::Format(format!("header is not JSON: {e}")))?;
    match value.get("format_version").and_then(Value::as_u64) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(Error::Format(format!("unsupported format version {v}"))),
        None => return Err(Error::Format("header lacks format_version".into())),
    }
    if value.get("kind").and_then(Value::as_str) != Some(kind) {
        return Err(Error::Format(format!("expected a {kind} file")));
    }
    Ok(serde_json::from_value(value)?)
}

fn parse_number(tok: &str, line_no: usize) -> Result<f64> {
    tok.trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line_no}: bad number {tok:?}")))
}

fn read_pairs<R: BufRead>(r: R, columns: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = r.lines();
    let head = lines.next().transpose()?.unwrap_or_default();
    if head.trim() != columns {
        return Err(Error::Format(format!("expected column line {columns:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {}: expected two columns", i + 3)))?;
        rows.push((parse_number(a, i + 3)?, parse_number(b, i + 3)?));
    }
    Ok(rows)
}

/// Header and `(r, φ)` rows of a radial profile file.
pub fn read_radial_profile<R: BufRead>(mut r: R) -> Result<(ProfileHeader, Vec<(f64, f64)>)> {
    let header: ProfileHeader = read_header(&mut r, "radial-profile")?;
    let rows = read_pairs(r, "r,phi")?;
    if rows.len() != header.grid_size {
        return Err(Error::Format(format!(
            "header announces {} rows, found {}",
            header.grid_size,
            rows.len()
        )));
    }
    Ok((header, rows))
}

pub fn read_volume_profile<R: BufRead>(mut r: R) -> Result<(ProfileHeader, VolumeProfile)> {
    let header: ProfileHeader = read_header(&mut r, "volume-profile")?;
    let rows = read_pairs(r, "s,value")?;
    let kind = header
        .profile_kind
        .ok_or_else(|| Error::Format("header lacks profile_kind".into()))?;
    let profile = VolumeProfile::from_rows(kind, &rows)?;
    Ok((header, profile))
}

pub fn write_field<W: Write>(mut w: W, field: &GriddedField, p: f64, cp: f64, config: &Value) -> Result<()> {
    let header = FieldHeader {
        format_version: FORMAT_VERSION,
        kind: "gridded-field".into(),
        nx: field.nx,
        ny: field.ny,
        h: field.h,
        origin: field.origin,
        p,
        cp,
        domain: field.domain.clone(),
        config: config.clone(),
    };
    write_header(&mut w, &header)?;
    let mut line = String::new();
    for j in 0..field.ny {
        line.clear();
        for i in 0..field.nx {
            if i > 0 {
                line.push(',');
            }
            let k = field.index(i, j);
            if field.mask[k] {
                line.push_str(&field.values[k].to_string());
            } else {
                line.push_str("NaN");
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<(FieldHeader, GriddedField)> {
    let header: FieldHeader = read_header(&mut r, "gridded-field")?;
    let (nx, ny) = (header.nx, header.ny);
    let mut values = Vec::with_capacity(nx * ny);
    let mut mask = Vec::with_capacity(nx * ny);
    let mut rows = 0;
    for (j, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            let v = parse_number(tok, j + 2)?;
            mask.push(!v.is_nan());
            values.push(if v.is_nan() { 0.0 } else { v });
        }
        if values.len() - before != nx {
            return Err(Error::Format(format!("line {}: expected {nx} values", j + 2)));
        }
        rows += 1;
    }
    if rows != ny {
        return Err(Error::Format(format!("expected {ny} rows, found {rows}")));
    }
    let field = GriddedField {
        nx,
        ny,
        h: header.h,
        origin: header.origin,
        mask,
        values,
        domain: header.domain.clone(),
    };
    Ok((header, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::build_grid;
    use crate::radial::{unit_ball_profile, volume_profile, ShootOptions};
    use serde_json::json;

    #[test]
    fn field_round_trip() {
        let g = build_grid(&DomainSpec::l_shape(1.0, 0.5), 1.0 / 8.0).unwrap();
        let f = g.map_inside(|x, y| 1.0 / 3.0 + x * y);
        let mut buf = Vec::new();
        write_field(&mut buf, &f, 1.5, 12.25, &json!({"h": 0.125})).unwrap();
        let (header, back) = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        assert_eq!(header.cp, 12.25);
        assert_eq!(header.config["h"], 0.125);
        let first = std::str::from_utf8(&buf).unwrap().lines().next().unwrap();
        assert!(first.contains("\"format_version\":1"));
    }

    #[test]
    fn profile_round_trips() {
        let ball = unit_ball_profile(2, 1.5, &ShootOptions { samples: 65, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_radial_profile(&mut buf, &ball, &Value::Null).unwrap();
        let (header, rows) = read_radial_profile(buf.as_slice()).unwrap();
        assert_eq!(header.lambda, Some(ball.lambda));
        assert_eq!(rows, ball.rows());

        let vp = volume_profile(&ball, 1.0, 33).unwrap();
        let mut buf = Vec::new();
        write_volume_profile(&mut buf, &vp, 2, 1.5, None, &Value::Null).unwrap();
        let (_, back) = read_volume_profile(buf.as_slice()).unwrap();
        assert_eq!(back, vp);

        let step = VolumeProfile::uniform_step(vec![3.0, 2.0, 0.5], 0.25).unwrap();
        let mut buf = Vec::new();
        write_volume_profile(&mut buf, &step, 2, 2.0, None, &Value::Null).unwrap();
        assert_eq!(read_volume_profile(buf.as_slice()).unwrap().1, step);
    }

    #[test]
    fn rejects_wrong_kind_and_version() {
        let text = "{\"format_version\":1,\"kind\":\"radial-profile\"}\nr,phi\n";
        assert!(matches!(read_field(text.as_bytes()), Err(Error::Format(_))));
        let text = "{\"format_version\":99,\"kind\":\"gridded-field\"}\n";
        assert!(matches!(read_field(text.as_bytes()), Err(Error::Format(_))));
        assert!(read_field("not json\n".as_bytes()).is_err());
    }
}
