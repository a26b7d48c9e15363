//! Binary field snapshots, trajectory CSVs and study output files.
//!
//! A snapshot is one JSON header line followed by little-endian f64
//! values: sphere grids row-major in (λ, φ), tangent fields λ-component
//! then φ-component, shell fields with the radial axis slowest and vector
//! components in the order r, λ, φ.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::study::{ErrorRow, StudyOutput};
use crate::error::{config, Error, Result};
use crate::shell::{ShellGeometry, ShellScalarField, ShellVectorField};
use crate::shell_solver::ShellSample;
use crate::sphere::{ScalarFieldS2, SpectralScalar, SphereGrid, TangentFieldS2};
use crate::sphere_solver::SphereSample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Spectral,
    Scalar,
    Tangent,
    ShellScalar,
    ShellVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub lmax: usize,
    pub nlat: usize,
    pub nlon: usize,
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nr: Option<usize>,
}

impl FieldHeader {
    fn payload_len(&self) -> usize {
        let n = self.nlat * self.nlon;
        let nr = self.nr.unwrap_or(1);
        match self.kind {
            FieldKind::Spectral => (self.lmax + 1) * (self.lmax + 1),
            FieldKind::Scalar => n,
            FieldKind::Tangent => 2 * n,
            FieldKind::ShellScalar => nr * n,
            FieldKind::ShellVector => 3 * nr * n,
        }
    }
}

fn encode<'a>(header: &FieldHeader, values: impl Iterator<Item = &'a f64>) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(header)?;
    out.push(b'\n');
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn grid_header(grid: &SphereGrid, kind: FieldKind) -> FieldHeader {
    FieldHeader { lmax: grid.lmax(), nlat: grid.nlat(), nlon: grid.nlon(), kind, eps: None, nr: None }
}

fn shell_header(geom: &ShellGeometry, kind: FieldKind) -> FieldHeader {
    FieldHeader { eps: Some(geom.eps()), nr: Some(geom.nr()), ..grid_header(geom.sphere_grid(), kind) }
}

pub fn encode_spectral(a: &SpectralScalar) -> Result<Vec<u8>> {
    let h = FieldHeader { lmax: a.lmax(), nlat: 0, nlon: 0, kind: FieldKind::Spectral, eps: None, nr: None };
    encode(&h, a.coeffs().iter())
}

pub fn encode_scalar(grid: &SphereGrid, f: &ScalarFieldS2) -> Result<Vec<u8>> {
    if f.shape() != grid.shape() {
        return config("field shape does not match grid");
    }
    encode(&grid_header(grid, FieldKind::Scalar), f.values.iter())
}

pub fn encode_tangent(grid: &SphereGrid, v: &TangentFieldS2) -> Result<Vec<u8>> {
    if v.shape() != grid.shape() {
        return config("field shape does not match grid");
    }
    encode(&grid_header(grid, FieldKind::Tangent), v.lambda.iter().chain(v.phi.iter()))
}

pub fn encode_shell_scalar(f: &ShellScalarField) -> Result<Vec<u8>> {
    encode(&shell_header(f.geometry(), FieldKind::ShellScalar), f.values.iter())
}

pub fn encode_shell_vector(u: &ShellVectorField) -> Result<Vec<u8>> {
    encode(&shell_header(u.geometry(), FieldKind::ShellVector), u.r.iter().chain(u.lambda.iter()).chain(u.phi.iter()))
}

/// Split a snapshot into header and values.
pub fn decode(bytes: &[u8]) -> Result<(FieldHeader, Vec<f64>)> {
    let nl = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| Error::Config("missing header line".into()))?;
    let header: FieldHeader = serde_json::from_slice(&bytes[..nl])?;
    let body = &bytes[nl + 1..];
    if body.len() != 8 * header.payload_len() {
        return config(format!("payload has {} bytes, header implies {}", body.len(), 8 * header.payload_len()));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((header, values))
}

fn expect_kind(h: &FieldHeader, kind: FieldKind) -> Result<()> {
    if h.kind != kind {
        return config(format!("snapshot holds {:?}, expected {kind:?}", h.kind));
    }
    Ok(())
}

fn expect_grid(h: &FieldHeader, grid: &SphereGrid) -> Result<()> {
    if (h.lmax, h.nlat, h.nlon) != (grid.lmax(), grid.nlat(), grid.nlon()) {
        return config("snapshot grid does not match");
    }
    Ok(())
}

pub fn decode_spectral(bytes: &[u8]) -> Result<SpectralScalar> {
    let (h, v) = decode(bytes)?;
    expect_kind(&h, FieldKind::Spectral)?;
    SpectralScalar::from_coeffs(h.lmax, v)
}

pub fn decode_tangent(bytes: &[u8], grid: &SphereGrid) -> Result<TangentFieldS2> {
    let (h, v) = decode(bytes)?;
    expect_kind(&h, FieldKind::Tangent)?;
    expect_grid(&h, grid)?;
    let n = grid.nlat() * grid.nlon();
    let shape = grid.shape();
    Ok(TangentFieldS2 {
        lambda: Array2::from_shape_vec(shape, v[..n].to_vec()).expect("length checked"),
        phi: Array2::from_shape_vec(shape, v[n..].to_vec()).expect("length checked"),
    })
}

pub fn decode_shell_vector(bytes: &[u8], geom: &Arc<ShellGeometry>) -> Result<ShellVectorField> {
    let (h, v) = decode(bytes)?;
    expect_kind(&h, FieldKind::ShellVector)?;
    expect_grid(&h, geom.sphere_grid())?;
    if h.eps != Some(geom.eps()) || h.nr != Some(geom.nr()) {
        return config("snapshot shell geometry does not match");
    }
    let shape = geom.shape();
    let n = shape.0 * shape.1 * shape.2;
    let part = |k: usize| Array3::from_shape_vec(shape, v[k * n..(k + 1) * n].to_vec()).expect("length checked");
    ShellVectorField::new(geom.clone(), part(0), part(1), part(2))
}

/// t, ‖u‖, ‖curl′u‖ and the ledger terms of a sphere run.
pub fn sphere_csv(samples: &[SphereSample]) -> String {
    let mut s = String::from("t,norm_l2,norm_curl,dissipation,forcing_work,forcing_dual,noise_qv,martingale\n");
    for x in samples {
        let l = &x.ledger;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            x.t,
            x.energy.sqrt(),
            x.enstrophy.sqrt(),
            l.dissipation,
            l.forcing_work,
            l.forcing_dual,
            l.noise_qv,
            l.martingale
        ));
    }
    s
}

/// Shell run columns, adding ‖α_ε‖ (as ε^{-1/2}‖M̃u‖), ‖β̃_ε‖, ‖curl β̃_ε‖.
pub fn shell_csv(samples: &[ShellSample], eps: f64) -> String {
    let mut s = String::from(
        "t,norm_l2,norm_curl,norm_alpha,norm_fluct,norm_curl_fluct,dissipation,forcing_work,forcing_dual,noise_qv,martingale\n",
    );
    for x in samples {
        let l = &x.ledger;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            x.t,
            x.energy.sqrt(),
            x.curl_energy.sqrt(),
            (x.mean_energy / eps).sqrt(),
            x.fluct_energy.sqrt(),
            x.fluct_curl_energy.sqrt(),
            l.dissipation,
            l.forcing_work,
            l.forcing_dual,
            l.noise_qv,
            l.martingale
        ));
    }
    s
}

pub fn errors_csv(rows: &[ErrorRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    if rows.is_empty() {
        w.write_record(["eps", "path_id", "t", "err_l2", "err_dainv", "energy_sphere", "energy_mean", "energy_fluct"])
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Write report.json and errors.csv into `dir`.
pub fn write_study(dir: &Path, out: &StudyOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), out.report.to_json()?)?;
    fs::write(dir.join("errors.csv"), errors_csv(&out.rows)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::DivFreeSpectral;

    #[test]
    fn spectral_round_trip() {
        let a = DivFreeSpectral::mode(4, 3, -2, 0.7).unwrap();
        let bytes = encode_spectral(a.stream()).unwrap();
        assert!(bytes.starts_with(br#"{"lmax":4,"nlat":0,"nlon":0,"kind":"spectral"}"#));
        assert_eq!(&decode_spectral(&bytes).unwrap(), a.stream());
    }

    #[test]
    fn shell_round_trip_and_layout() {
        let grid = Arc::new(SphereGrid::new(3));
        let geom = Arc::new(ShellGeometry::new(0.2, 4, grid).unwrap());
        let u = ShellVectorField::from_cartesian(geom.clone(), |y| [y[0], y[1] * y[2], 1.0]);
        let bytes = encode_shell_vector(&u).unwrap();
        let back = decode_shell_vector(&bytes, &geom).unwrap();
        assert_eq!(back.r, u.r);
        assert_eq!(back.phi, u.phi);
        let (h, v) = decode(&bytes).unwrap();
        assert_eq!(h.nr, Some(4));
        // the first value is u_r at the innermost radius, first colatitude, φ = 0
        assert_eq!(v[0], u.r[[0, 0, 0]]);
        assert_eq!(v[1], u.r[[0, 0, 1]]);
    }

    #[test]
    fn truncated_payload_rejected() {
        let a = DivFreeSpectral::mode(2, 1, 0, 1.0).unwrap();
        let bytes = encode_spectral(a.stream()).unwrap();
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
    }
}
