//! Dataset archive: `PGDS` magic, little-endian u32 header length, JSON
//! header, then packed little-endian arrays in header order.
//!
//! Per object: vertices `f64 [n, 3]`, faces `u32 [m, 3]`, cloud `f64 [k, 3]`.
//! Per grasp: parameters `f64 [61]`, vertices `f64 [V, 3]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::objects::{ObjectShape, SyntheticObject};
use super::{Dataset, GraspRecord, TemplateKind};
use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};
use crate::hand::{HandParams, PARAM_DIM};

pub const MAGIC: &[u8; 4] = b"PGDS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    template: TemplateKind,
    hand_vertices: usize,
    objects: Vec<ObjectEntry>,
    grasps: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    shape: ObjectShape,
    vertices: usize,
    faces: usize,
    points: usize,
}

fn corrupt(what: &str) -> Error {
    Error::Version { found: format!("unreadable header ({what})"), expected: FORMAT_VERSION.to_string() }
}

fn write_points<W: Write>(w: &mut W, points: &[Vec3]) -> Result<()> {
    for p in points {
        for &x in p {
            w.write_f64::<LittleEndian>(x)?;
        }
    }
    Ok(())
}

fn read_points<R: Read>(r: &mut R, n: usize) -> Result<Vec<Vec3>> {
    let mut flat = vec![0.0; n * 3];
    r.read_f64_into::<LittleEndian>(&mut flat)?;
    Ok(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut w: W) -> Result<()> {
    dataset.validate()?;
    let header = Header {
        version: FORMAT_VERSION,
        template: dataset.template,
        hand_vertices: dataset.grasps[0].vertices.len(),
        objects: dataset
            .objects
            .iter()
            .map(|o| ObjectEntry {
                shape: o.shape,
                vertices: o.mesh.vertices.len(),
                faces: o.mesh.faces.len(),
                points: o.cloud.len(),
            })
            .collect(),
        grasps: dataset.grasps.iter().map(|g| g.object).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(json.len() as u32)?;
    w.write_all(&json)?;
    for o in &dataset.objects {
        write_points(&mut w, &o.mesh.vertices)?;
        for f in &o.mesh.faces {
            for &i in f {
                w.write_u32::<LittleEndian>(i)?;
            }
        }
        write_points(&mut w, &o.cloud)?;
    }
    for g in &dataset.grasps {
        for x in g.params.to_vec() {
            w.write_f64::<LittleEndian>(x)?;
        }
        write_points(&mut w, &g.vertices)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| corrupt("missing magic"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let len = r.read_u32::<LittleEndian>().map_err(|_| corrupt("missing length"))? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(|_| corrupt("truncated"))?;
    let value: serde_json::Value = serde_json::from_slice(&json).map_err(|_| corrupt("not JSON"))?;
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(FORMAT_VERSION as u64) {
        return Err(Error::Version {
            found: version.map_or_else(|| "none".into(), |v| v.to_string()),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let header: Header = serde_json::from_value(value).map_err(|e| Error::Format(format!("dataset header: {e}")))?;
    let body = |e: std::io::Error| Error::Format(format!("dataset body: {e}"));

    let mut objects = Vec::with_capacity(header.objects.len());
    for entry in &header.objects {
        let vertices = read_points(&mut r, entry.vertices).map_err(|_| Error::Format("truncated object".into()))?;
        let mut flat = vec![0u32; entry.faces * 3];
        r.read_u32_into::<LittleEndian>(&mut flat).map_err(body)?;
        let faces = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let cloud = read_points(&mut r, entry.points).map_err(|_| Error::Format("truncated cloud".into()))?;
        objects.push(SyntheticObject { shape: entry.shape, mesh: TriMesh::new(vertices, faces)?, cloud });
    }
    let mut grasps = Vec::with_capacity(header.grasps.len());
    for &object in &header.grasps {
        let mut flat = vec![0.0; PARAM_DIM];
        r.read_f64_into::<LittleEndian>(&mut flat).map_err(body)?;
        let params = HandParams::from_slice(&flat)?;
        let vertices = read_points(&mut r, header.hand_vertices).map_err(|_| Error::Format("truncated grasp".into()))?;
        grasps.push(GraspRecord { object, params, vertices });
    }
    let dataset = Dataset { template: header.template, objects, grasps };
    dataset.validate()?;
    Ok(dataset)
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    write_dataset(dataset, BufWriter::new(File::create(path)?))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}
