//! Binary index file.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        7 bytes  "SKJIDX1"
//! mode         u8       0 = exact, 1 = approximate
//! trees        u32      approximate tree count (0 for exact)
//! checks       u64      approximate check budget (0 for exact)
//! seed         u64      approximate seed (0 for exact)
//! dim          u32
//! images       u32
//! entries      u64
//! image_offsets (images + 1) x u64
//! entry refs   entries x (image u32, keypoint u32)
//! descriptors  entries x dim x f32
//! tree count   u32
//! per tree:    perm_len u64, perm x u32, node_count u64,
//!              nodes: tag u8 (0 leaf: start u32, end u32;
//!                             1 split: dim u32, value f32, left u32, right u32)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::kdtree::{KdTree, Node};
use super::{DescriptorIndex, EntryRef, IndexMode};
use crate::error::{Error, Result};

const MAGIC: &[u8; 7] = b"SKJIDX1";

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.0.write_all(b)
    }
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.bytes(&[v])
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn f32(&mut self, v: f32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|e| Error::BadIndexFile(format!("truncated: {e}")))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn len(&mut self, limit: u64) -> Result<usize> {
        let v = self.u64()?;
        if v > limit {
            return Err(Error::BadIndexFile(format!("length {v} exceeds {limit}")));
        }
        Ok(v as usize)
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }
}

impl DescriptorIndex {
    pub fn write_to(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = Writer(out);
        w.bytes(MAGIC)?;
        match self.mode {
            IndexMode::Exact => {
                w.u8(0)?;
                w.u32(0)?;
                w.u64(0)?;
                w.u64(0)?;
            }
            IndexMode::Approximate { trees, checks, seed } => {
                w.u8(1)?;
                w.u32(trees as u32)?;
                w.u64(checks as u64)?;
                w.u64(seed)?;
            }
        }
        w.u32(self.dim as u32)?;
        w.u32(self.image_count() as u32)?;
        w.u64(self.entries.len() as u64)?;
        for &o in &self.image_offsets {
            w.u64(o as u64)?;
        }
        for e in &self.entries {
            w.u32(e.image)?;
            w.u32(e.keypoint)?;
        }
        for &v in &self.data {
            w.f32(v)?;
        }
        w.u32(self.trees.len() as u32)?;
        for tree in &self.trees {
            w.u64(tree.perm.len() as u64)?;
            for &p in &tree.perm {
                w.u32(p)?;
            }
            w.u64(tree.nodes.len() as u64)?;
            for node in &tree.nodes {
                match *node {
                    Node::Leaf { start, end } => {
                        w.u8(0)?;
                        w.u32(start)?;
                        w.u32(end)?;
                    }
                    Node::Split {
                        dim,
                        value,
                        left,
                        right,
                    } => {
                        w.u8(1)?;
                        w.u32(dim)?;
                        w.f32(value)?;
                        w.u32(left)?;
                        w.u32(right)?;
                    }
                }
            }
        }
        w.0.flush()
    }

    pub fn read_from(input: impl Read) -> Result<Self> {
        let mut r = Reader(input);
        if &r.array::<7>()? != MAGIC {
            return Err(Error::BadIndexFile("bad magic".into()));
        }
        let tag = r.u8()?;
        let trees = r.u32()? as usize;
        let checks = r.u64()? as usize;
        let seed = r.u64()?;
        let mode = match tag {
            0 => IndexMode::Exact,
            1 => IndexMode::Approximate { trees, checks, seed },
            t => return Err(Error::BadIndexFile(format!("unknown mode tag {t}"))),
        };
        let dim = r.u32()? as usize;
        let images = r.u32()? as usize;
        let n = r.len(u32::MAX as u64)?;
        let mut image_offsets = Vec::with_capacity(images + 1);
        for _ in 0..=images {
            image_offsets.push(r.len(n as u64)?);
        }
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let image = r.u32()?;
            let keypoint = r.u32()?;
            if image as usize >= images {
                return Err(Error::BadIndexFile("entry image out of range".into()));
            }
            entries.push(EntryRef { image, keypoint });
        }
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n * dim {
            data.push(r.f32()?);
        }
        let tree_count = r.u32()? as usize;
        let mut forest = Vec::with_capacity(tree_count);
        for _ in 0..tree_count {
            let perm_len = r.len(n as u64)?;
            let mut perm = Vec::with_capacity(perm_len);
            for _ in 0..perm_len {
                let p = r.u32()?;
                if p as usize >= n {
                    return Err(Error::BadIndexFile("permutation entry out of range".into()));
                }
                perm.push(p);
            }
            let node_count = r.len(2 * n as u64 + 1)?;
            let mut nodes = Vec::with_capacity(node_count);
            for _ in 0..node_count {
                let node = match r.u8()? {
                    0 => Node::Leaf {
                        start: r.u32()?,
                        end: r.u32()?,
                    },
                    1 => Node::Split {
                        dim: r.u32()?,
                        value: r.f32()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    t => return Err(Error::BadIndexFile(format!("unknown node tag {t}"))),
                };
                match node {
                    Node::Leaf { start, end } if start > end || end as usize > perm_len => {
                        return Err(Error::BadIndexFile("leaf range out of bounds".into()))
                    }
                    Node::Split { dim: d, left, right, .. }
                        if d as usize >= dim || left as usize >= node_count || right as usize >= node_count =>
                    {
                        return Err(Error::BadIndexFile("split node out of bounds".into()))
                    }
                    _ => {}
                }
                nodes.push(node);
            }
            forest.push(KdTree { nodes, perm });
        }
        Ok(DescriptorIndex {
            dim,
            mode,
            entries,
            image_offsets,
            data,
            trees: forest,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        DescriptorIndex::read_from(BufReader::new(file))
    }
}
