use std::collections::HashMap;
use std::io::{self, BufRead, Read, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Aabb3, Vec3};

/// Indexed triangle mesh. Closed solids are outward oriented.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    fn corners(&self, t: &[usize; 3]) -> (Vec3, Vec3, Vec3) {
        (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
    }

    /// Signed enclosed volume; positive when outward oriented.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, c) = self.corners(t);
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let (a, b, c) = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Every directed edge occurs once and its reverse occurs once.
    pub fn is_watertight(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *count.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        count.iter().all(|(&(a, b), &n)| n == 1 && count.get(&(b, a)) == Some(&1))
    }

    pub fn flip(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    /// Adds `other` as a separate shell.
    pub fn append(&mut self, other: &Mesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
    }

    pub fn bounds(&self) -> Aabb3 {
        let mut b = Aabb3::empty();
        for &v in &self.vertices {
            b.include(v);
        }
        b
    }

    /// `n` points uniform over the surface: triangles drawn by area, then a
    /// uniform barycentric point inside.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Vec<Vec3> {
        let weights: Vec<f64> = self.triangles.iter().map(|t| self.triangle_area(t)).collect();
        let Ok(dist) = WeightedIndex::new(&weights) else { return Vec::new() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let (a, b, c) = self.corners(&self.triangles[dist.sample(&mut rng)]);
                let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }

    /// Binary little-endian STL with an 80-byte header.
    pub fn write_stl<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = [0u8; 80];
        let tag = b"histcad binary stl";
        header[..tag.len()].copy_from_slice(tag);
        w.write_all(&header)?;
        w.write_all(&(self.triangles.len() as u32).to_le_bytes())?;
        for t in &self.triangles {
            let (a, b, c) = self.corners(t);
            let n = (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros);
            for p in [n, a, b, c] {
                for k in 0..3 {
                    w.write_all(&(p[k] as f32).to_le_bytes())?;
                }
            }
            w.write_all(&0u16.to_le_bytes())?;
        }
        Ok(())
    }
}

impl Mesh {
    /// Reads a binary STL. Vertices are not welded, so only per-triangle
    /// quantities such as volume and area are meaningful.
    pub fn read_stl<R: Read>(mut r: R) -> io::Result<Mesh> {
        let mut header = [0u8; 80];
        r.read_exact(&mut header)?;
        let mut count = [0u8; 4];
        r.read_exact(&mut count)?;
        let count = u32::from_le_bytes(count) as usize;
        let mut mesh = Mesh::default();
        let mut rec = [0u8; 50];
        for t in 0..count {
            r.read_exact(&mut rec)?;
            let f = |i: usize| f32::from_le_bytes([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]]) as f64;
            for k in 1..4 {
                mesh.vertices.push(Vec3::new(f(12 * k), f(12 * k + 4), f(12 * k + 8)));
            }
            mesh.triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
        }
        Ok(mesh)
    }
}

/// Reads `x y z` lines; blank lines and `#` comments are skipped.
pub fn read_xyz<R: BufRead>(r: R) -> io::Result<Vec<Vec3>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: Vec<f64> = body.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1))
        })?;
        if v.len() != 3 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("line {}: expected 3 coordinates", n + 1)));
        }
        out.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok(out)
}

/// One `x y z` line per point.
pub fn write_xyz<W: Write>(points: &[Vec3], mut w: W) -> io::Result<()> {
    for p in points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}
