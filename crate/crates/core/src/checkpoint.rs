//! Field checkpoints.
//!
//! Binary layout, little endian: magic `THL1`, `nx: u32`, `nz: u32` (0 on a
//! limit mesh), `n_nodes: u64`, `eps: f64`, `p: f64`, then `n_nodes` node
//! coordinate pairs `(x, y)` and `n_nodes` values, all `f64`.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};

const MAGIC: &[u8; 4] = b"THL1";

/// Decoded checkpoint contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nx: u32,
    pub nz: u32,
    pub epsilon: f64,
    pub p: f64,
    pub coords: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

impl Checkpoint {
    /// Attach the stored values to `mesh`, checking that the grids agree.
    pub fn into_field(self, mesh: &Mesh) -> Result<Field> {
        let nz = mesh.as_thin().map_or(0, |t| t.nz()) as u32;
        if self.nx as usize != mesh.nx() || self.nz != nz || self.epsilon != mesh.epsilon() {
            return Err(Error::Checkpoint(format!(
                "checkpoint grid (nx {}, nz {}, eps {}) does not match the mesh (nx {}, nz {}, eps {})",
                self.nx,
                self.nz,
                self.epsilon,
                mesh.nx(),
                nz,
                mesh.epsilon()
            )));
        }
        let coords = mesh.node_coords();
        let off = self
            .coords
            .iter()
            .zip(&coords)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max);
        if off > 1e-12 * (1.0 + mesh.x_max()) {
            return Err(Error::Checkpoint(format!(
                "node coordinates differ from the mesh by {off:e}"
            )));
        }
        Field::new(mesh, self.values)
    }
}

pub fn write_checkpoint<W: Write>(mut out: W, mesh: &Mesh, p: f64, u: &Field) -> Result<()> {
    mesh.check(u)?;
    out.write_all(MAGIC)?;
    out.write_u32::<LittleEndian>(mesh.nx() as u32)?;
    out.write_u32::<LittleEndian>(mesh.as_thin().map_or(0, |t| t.nz()) as u32)?;
    out.write_u64::<LittleEndian>(mesh.node_count() as u64)?;
    out.write_f64::<LittleEndian>(mesh.epsilon())?;
    out.write_f64::<LittleEndian>(p)?;
    for [x, y] in mesh.node_coords() {
        out.write_f64::<LittleEndian>(x)?;
        out.write_f64::<LittleEndian>(y)?;
    }
    for &v in u.values() {
        out.write_f64::<LittleEndian>(v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint> {
    let truncated = |e: std::io::Error| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Checkpoint("truncated checkpoint".into()),
        _ => Error::Io(e),
    };
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let nx = input.read_u32::<LittleEndian>().map_err(truncated)?;
    let nz = input.read_u32::<LittleEndian>().map_err(truncated)?;
    let n = input.read_u64::<LittleEndian>().map_err(truncated)? as usize;
    let expected = (nx as usize + 1) * (nz as usize + 1);
    if n != expected {
        return Err(Error::Checkpoint(format!(
            "node count {n} inconsistent with nx {nx}, nz {nz}"
        )));
    }
    let epsilon = input.read_f64::<LittleEndian>().map_err(truncated)?;
    let p = input.read_f64::<LittleEndian>().map_err(truncated)?;
    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        let x = input.read_f64::<LittleEndian>().map_err(truncated)?;
        let y = input.read_f64::<LittleEndian>().map_err(truncated)?;
        coords.push([x, y]);
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(input.read_f64::<LittleEndian>().map_err(truncated)?);
    }
    Ok(Checkpoint {
        nx,
        nz,
        epsilon,
        p,
        coords,
        values,
    })
}

/// Nodal values as CSV with header `node_index,x,y,value`.
pub fn write_field_csv<W: Write>(out: W, mesh: &Mesh, u: &Field) -> Result<()> {
    mesh.check(u)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_index", "x", "y", "value"])?;
    for (i, ([x, y], v)) in mesh.node_coords().into_iter().zip(u.values()).enumerate() {
        w.write_record([
            i.to_string(),
            format!("{x:?}"),
            format!("{y:?}"),
            format!("{v:?}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin_problem, validate_config, ProblemConfig};

    fn mesh(eps: f64) -> Mesh {
        let cfg = ProblemConfig {
            nx: 8,
            nz: 2,
            ..builtin_problem("bump").unwrap().with_epsilon(eps)
        };
        Mesh::for_problem(&validate_config(&cfg).unwrap()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for eps in [0.0, 0.3] {
            let m = mesh(eps);
            let u = Field::from_fn(&m, |x, y| x.sin() / 3.0 + y);
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, &m, 3.0, &u).unwrap();
            let ck = read_checkpoint(buf.as_slice()).unwrap();
            assert_eq!(ck.p, 3.0);
            assert_eq!(ck.into_field(&m).unwrap(), u);
        }
    }

    #[test]
    fn mismatches_and_corruption_are_rejected() {
        let m = mesh(0.3);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &m, 3.0, &Field::zeros(&m)).unwrap();
        let ck = read_checkpoint(buf.as_slice()).unwrap();
        assert!(matches!(
            ck.into_field(&mesh(0.2)),
            Err(Error::Checkpoint(_))
        ));
        assert!(matches!(
            read_checkpoint(&buf[..buf.len() - 3]),
            Err(Error::Checkpoint(_))
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn csv_lists_every_node() {
        let m = mesh(0.0);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &m, &Field::constant(&m, 2.0)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + m.node_count());
        assert!(text.starts_with("node_index,x,y,value\n0,"));
    }
}
