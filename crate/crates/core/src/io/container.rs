//! Little-endian binary containers for datasets, representations, and
//! encoder checkpoints.
//!
//! All three formats share one scheme: a 4-byte magic, a u16 format
//! version, a key-value metadata block, then length-prefixed payload
//! records. Values are IEEE-754 64-bit, so a write/read round trip is
//! exact and re-running a pipeline stage reproduces its output byte for
//! byte.
//!
//! Dataset container (`.atsc`): magic `ATSC`, version, flags (bit 0 =
//! per-flight segment ids present), metadata, state column count, flight
//! count, then per flight: id, valid length `T`, `T × cols` states
//! row-major (padding is never stored), the `T` segment ids when present,
//! and an i32 label with −1 meaning unlabeled.
//!
//! Representation container (`.atrp`): magic `ATRP`, version, metadata,
//! representation width `K`, instance count, then per instance: id,
//! label, valid length `T`, `T × K` values row-major.
//!
//! Checkpoint (`.atck`): magic `ATCK`, version, the encoder dimensions,
//! then every parameter tensor in the encoder's canonical name order as
//! (name, rows, cols, values).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{EncoderConfig, EncoderParams, ReprSeq};
use crate::error::{Error, Result};
use crate::traj::{pad_dataset, Dataset, Trajectory};
use crate::Scalar;

const DATASET_MAGIC: &[u8; 4] = b"ATSC";
const REPR_MAGIC: &[u8; 4] = b"ATRP";
const CHECKPOINT_MAGIC: &[u8; 4] = b"ATCK";
const FORMAT_VERSION: u16 = 1;
const FLAG_SEGMENT_IDS: u16 = 1;

// --- primitive readers/writers -----------------------------------------

fn write_u16(w: &mut impl Write, v: u16) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::format("container field exceeds u32"))?;
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn write_i32(w: &mut impl Write, v: i32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn write_f64s(w: &mut impl Write, vs: &[Scalar]) -> Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_str(w: &mut impl Write, s: &str) -> Result<()> {
    write_u32(w, s.len())?;
    Ok(w.write_all(s.as_bytes())?)
}

fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn read_i32(r: &mut impl Read) -> Result<i32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(i32::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<Scalar>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(Scalar::from_le_bytes(b));
    }
    Ok(out)
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let n = read_u32(r)?;
    let mut b = vec![0u8; n];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|_| Error::format("container holds a non-UTF-8 string"))
}

fn check_header(r: &mut impl Read, magic: &[u8; 4], what: &str) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::format(format!(
            "not a {what} container (magic {:?}, expected {:?})",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u16(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!(
            "{what} container has format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

fn write_meta(w: &mut impl Write, meta: &[(String, String)]) -> Result<()> {
    write_u32(w, meta.len())?;
    for (k, v) in meta {
        write_str(w, k)?;
        write_str(w, v)?;
    }
    Ok(())
}

fn read_meta(r: &mut impl Read) -> Result<Vec<(String, String)>> {
    let n = read_u32(r)?;
    let mut meta = Vec::with_capacity(n);
    for _ in 0..n {
        let k = read_str(r)?;
        let v = read_str(r)?;
        meta.push((k, v));
    }
    Ok(meta)
}

// --- dataset container --------------------------------------------------

/// Serializes a dataset; only valid rows are stored, never padding.
pub fn write_dataset(w: &mut impl Write, ds: &Dataset) -> Result<()> {
    w.write_all(DATASET_MAGIC)?;
    write_u16(w, FORMAT_VERSION)?;
    let flags = if ds.segment_ids.is_some() {
        FLAG_SEGMENT_IDS
    } else {
        0
    };
    write_u16(w, flags)?;
    write_meta(w, &ds.meta)?;
    write_u32(w, ds.cols)?;
    write_u32(w, ds.len())?;
    for i in 0..ds.len() {
        write_str(w, &ds.ids[i])?;
        let t = ds.lengths[i];
        write_u32(w, t)?;
        write_f64s(w, &ds.rows[i][..t * ds.cols])?;
        if let Some(seg) = &ds.segment_ids {
            for &id in &seg[i] {
                w.write_all(&id.to_le_bytes())?;
            }
        }
        write_i32(w, ds.labels[i].unwrap_or(-1))?;
    }
    Ok(())
}

/// Reads a dataset container and re-pads it.
pub fn read_dataset(r: &mut impl Read) -> Result<Dataset> {
    check_header(r, DATASET_MAGIC, "dataset")?;
    let flags = read_u16(r)?;
    let meta = read_meta(r)?;
    let cols = read_u32(r)?;
    if cols != 3 {
        return Err(Error::format(format!(
            "dataset container has {cols} state columns, expected 3"
        )));
    }
    let count = read_u32(r)?;
    let mut trajs = Vec::with_capacity(count);
    let mut segments = Vec::with_capacity(count);
    for _ in 0..count {
        let id = read_str(r)?;
        let t = read_u32(r)?;
        let flat = read_f64s(r, t * cols)?;
        let states: Vec<[Scalar; 3]> = flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        if flags & FLAG_SEGMENT_IDS != 0 {
            let mut seg = Vec::with_capacity(t);
            let mut b = [0u8; 4];
            for _ in 0..t {
                r.read_exact(&mut b)?;
                seg.push(u32::from_le_bytes(b));
            }
            segments.push(seg);
        }
        let label = read_i32(r)?;
        let mut traj = Trajectory::new(id, states);
        traj.label = (label >= 0).then_some(label);
        trajs.push(traj);
    }
    let mut ds = pad_dataset(trajs)?;
    if flags & FLAG_SEGMENT_IDS != 0 {
        ds.segment_ids = Some(segments);
    }
    ds.meta = meta;
    Ok(ds)
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, ds)?;
    Ok(w.flush()?)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(&mut BufReader::new(File::open(path)?))
}

// --- representation container --------------------------------------------

/// Encoded sequences with the identity and label of each instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReprFile {
    pub meta: Vec<(String, String)>,
    /// Representation width K.
    pub dim: usize,
    pub ids: Vec<String>,
    /// −1 marks an unlabeled instance.
    pub labels: Vec<i32>,
    pub seqs: Vec<ReprSeq<Scalar>>,
}

impl ReprFile {
    pub fn new(
        ids: Vec<String>,
        labels: Vec<i32>,
        seqs: Vec<ReprSeq<Scalar>>,
    ) -> Result<Self> {
        if ids.len() != seqs.len() || labels.len() != seqs.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: seqs.len(),
            });
        }
        let dim = seqs.first().map_or(0, |s| s.dim);
        if seqs.iter().any(|s| s.dim != dim) {
            return Err(Error::format("representation sequences differ in width"));
        }
        Ok(ReprFile {
            meta: Vec::new(),
            dim,
            ids,
            labels,
            seqs,
        })
    }
}

pub fn write_reprs(w: &mut impl Write, rf: &ReprFile) -> Result<()> {
    w.write_all(REPR_MAGIC)?;
    write_u16(w, FORMAT_VERSION)?;
    write_meta(w, &rf.meta)?;
    write_u32(w, rf.dim)?;
    write_u32(w, rf.seqs.len())?;
    for i in 0..rf.seqs.len() {
        write_str(w, &rf.ids[i])?;
        write_i32(w, rf.labels[i])?;
        write_u32(w, rf.seqs[i].len)?;
        write_f64s(w, &rf.seqs[i].rows)?;
    }
    Ok(())
}

pub fn read_reprs(r: &mut impl Read) -> Result<ReprFile> {
    check_header(r, REPR_MAGIC, "representation")?;
    let meta = read_meta(r)?;
    let dim = read_u32(r)?;
    let count = read_u32(r)?;
    let mut ids = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let mut seqs = Vec::with_capacity(count);
    for _ in 0..count {
        ids.push(read_str(r)?);
        labels.push(read_i32(r)?);
        let len = read_u32(r)?;
        let rows = read_f64s(r, len * dim)?;
        seqs.push(ReprSeq { len, dim, rows });
    }
    let mut rf = ReprFile::new(ids, labels, seqs)?;
    rf.dim = dim;
    rf.meta = meta;
    Ok(rf)
}

pub fn save_reprs(path: impl AsRef<Path>, rf: &ReprFile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_reprs(&mut w, rf)?;
    Ok(w.flush()?)
}

pub fn load_reprs(path: impl AsRef<Path>) -> Result<ReprFile> {
    read_reprs(&mut BufReader::new(File::open(path)?))
}

// --- checkpoint -----------------------------------------------------------

pub fn write_checkpoint(w: &mut impl Write, params: &EncoderParams<Scalar>) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    write_u16(w, FORMAT_VERSION)?;
    let c = &params.config;
    for dim in [
        c.input_dim,
        c.model_dim,
        c.ff_dim,
        c.layers,
        c.heads,
        c.repr_dim,
    ] {
        write_u32(w, dim)?;
    }
    write_f64s(w, &[c.attn_dropout, c.mask_prob])?;
    let named = params.named();
    write_u32(w, named.len())?;
    for (name, p) in named {
        write_str(w, &name)?;
        write_u32(w, p.shape[0])?;
        write_u32(w, p.shape[1])?;
        write_f64s(w, &p.data)?;
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<EncoderParams<Scalar>> {
    check_header(r, CHECKPOINT_MAGIC, "checkpoint")?;
    let config = EncoderConfig {
        input_dim: read_u32(r)?,
        model_dim: read_u32(r)?,
        ff_dim: read_u32(r)?,
        layers: read_u32(r)?,
        heads: read_u32(r)?,
        repr_dim: read_u32(r)?,
        attn_dropout: {
            let v = read_f64s(r, 1)?;
            v[0]
        },
        mask_prob: {
            let v = read_f64s(r, 1)?;
            v[0]
        },
    };
    // Shape the parameter tree from the config, then overwrite every value.
    let mut params = EncoderParams::init(config, &mut ChaCha8Rng::seed_from_u64(0))?;
    let count = read_u32(r)?;
    let mut named = params.named_mut();
    if count != named.len() {
        return Err(Error::format(format!(
            "checkpoint holds {count} tensors, the config implies {}",
            named.len()
        )));
    }
    for (expected_name, p) in named.iter_mut() {
        let name = read_str(r)?;
        if &name != expected_name {
            return Err(Error::format(format!(
                "checkpoint tensor `{name}` out of order, expected `{expected_name}`"
            )));
        }
        let rows = read_u32(r)?;
        let cols = read_u32(r)?;
        if [rows, cols] != p.shape {
            return Err(Error::format(format!(
                "checkpoint tensor `{name}` has shape {rows}x{cols}, expected {}x{}",
                p.shape[0], p.shape[1]
            )));
        }
        p.data = read_f64s(r, rows * cols)?;
    }
    drop(named);
    Ok(params)
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &EncoderParams<Scalar>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, params)?;
    Ok(w.flush()?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<EncoderParams<Scalar>> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdp::segment_dataset;
    use crate::synth::{scenario_dataset, Scenario};
    use std::io::Cursor;

    fn sample_dataset() -> Dataset {
        let mut ds = scenario_dataset(&Scenario::default(), 2, 3).unwrap();
        segment_dataset(&mut ds, 0.01).unwrap();
        ds.push_meta("note", "container test");
        ds
    }

    #[test]
    fn dataset_round_trips_bit_exactly() {
        let ds = sample_dataset();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = read_dataset(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(back.ids, ds.ids);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.lengths, ds.lengths);
        assert_eq!(back.segment_ids, ds.segment_ids);
        assert_eq!(back.meta, ds.meta);
        for i in 0..ds.len() {
            let n = ds.lengths[i] * ds.cols;
            for (a, b) in ds.rows[i][..n].iter().zip(&back.rows[i][..n]) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        // Writing the reread dataset reproduces the bytes exactly.
        let mut again = Vec::new();
        write_dataset(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn dataset_without_segments_round_trips() {
        let mut ds = sample_dataset();
        ds.segment_ids = None;
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = read_dataset(&mut Cursor::new(&buf)).unwrap();
        assert!(back.segment_ids.is_none());
        assert_eq!(back.ids, ds.ids);
    }

    #[test]
    fn unlabeled_flights_survive_the_trip() {
        let mut ds = sample_dataset();
        ds.labels[1] = None;
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = read_dataset(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(back.labels[1], None);
        assert!(back.labels[0].is_some());
    }

    #[test]
    fn wrong_magic_and_version_are_named_errors() {
        let err = read_dataset(&mut Cursor::new(b"NOPE....".to_vec())).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");

        let mut buf = Vec::new();
        write_dataset(&mut buf, &sample_dataset()).unwrap();
        buf[4] = 9; // bump the version field
        let err = read_dataset(&mut Cursor::new(&buf)).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        // Truncation surfaces as an I/O error rather than a panic.
        let cut = buf.len() / 2;
        assert!(read_dataset(&mut Cursor::new(&buf[..cut])).is_err());
    }

    #[test]
    fn representations_round_trip() {
        let rf = ReprFile::new(
            vec!["a".into(), "b".into()],
            vec![0, -1],
            vec![
                ReprSeq {
                    len: 3,
                    dim: 4,
                    rows: (0..12).map(|v| v as Scalar * 0.25).collect(),
                },
                ReprSeq {
                    len: 2,
                    dim: 4,
                    rows: (0..8).map(|v| -(v as Scalar)).collect(),
                },
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_reprs(&mut buf, &rf).unwrap();
        let back = read_reprs(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(back, rf);
    }

    #[test]
    fn repr_file_rejects_ragged_input() {
        assert!(ReprFile::new(vec!["a".into()], vec![0, 1], vec![]).is_err());
        let seqs = vec![
            ReprSeq {
                len: 1,
                dim: 2,
                rows: vec![0.0; 2],
            },
            ReprSeq {
                len: 1,
                dim: 3,
                rows: vec![0.0; 3],
            },
        ];
        assert!(ReprFile::new(vec!["a".into(), "b".into()], vec![0, 1], seqs).is_err());
    }

    #[test]
    fn checkpoint_round_trips_every_parameter() {
        let cfg = EncoderConfig::desk(9);
        let params =
            EncoderParams::<Scalar>::init(cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &params).unwrap();
        let back = read_checkpoint(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(back.config, params.config);
        for ((an, a), (bn, b)) in params.named().iter().zip(back.named().iter()) {
            assert_eq!(an, bn);
            assert_eq!(a.shape, b.shape);
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn checkpoint_rejects_other_containers() {
        let mut buf = Vec::new();
        write_dataset(&mut buf, &sample_dataset()).unwrap();
        assert!(read_checkpoint(&mut Cursor::new(&buf)).is_err());
    }

    #[test]
    fn files_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample_dataset();
        let p = dir.path().join("data.atsc");
        save_dataset(&p, &ds).unwrap();
        let back = load_dataset(&p).unwrap();
        assert_eq!(back.ids, ds.ids);

        let cfg = EncoderConfig::desk(9);
        let params =
            EncoderParams::<Scalar>::init(cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let cp = dir.path().join("model.atck");
        save_checkpoint(&cp, &params).unwrap();
        assert_eq!(load_checkpoint(&cp).unwrap().config, params.config);
    }
}
