//! Versioned binary files for trained heads.
//!
//! Layout (little-endian): magic `PRBH`, `u32` version, `u32` head kind
//! (0 linear_ta, 1 linear_twa, 2 esn, 3 bilstm), a kind-specific block of
//! `u32` integers, then the parameter tensors. Each tensor is a `u32` rank,
//! `rank` `u32` extents and the `f64` values in row-major order.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::head::{HeadKind, Scorer};
use crate::pooling::AttentionPoolParams;
use crate::probe::{LinearProbeParams, ProbeHead};
use crate::recurrent::{EsnModel, EsnReadout, EsnReservoir, LstmCellParams, LstmParams, LstmReadout};

pub const SIDECAR_MAGIC: &[u8; 4] = b"PRBH";
pub const SIDECAR_VERSION: u32 = 1;

/// Any trained head the toolkit can save and score with.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedHead {
    Probe(ProbeHead),
    Esn(EsnModel),
    Bilstm(LstmParams),
}

impl SavedHead {
    pub fn kind(&self) -> HeadKind {
        match self {
            SavedHead::Probe(p) if p.attention.is_some() => HeadKind::LinearTwa,
            SavedHead::Probe(_) => HeadKind::LinearTa,
            SavedHead::Esn(_) => HeadKind::Esn,
            SavedHead::Bilstm(_) => HeadKind::Bilstm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            SavedHead::Probe(p) => p.linear.dim(),
            SavedHead::Esn(m) => m.reservoir.input_dim(),
            SavedHead::Bilstm(p) => p.input_dim(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes.extend_from_slice(SIDECAR_MAGIC);
        w.u32(SIDECAR_VERSION);
        w.u32(kind_code(self.kind()));
        match self {
            SavedHead::Probe(p) => {
                w.matrix(&p.linear.weights);
                w.vector(&p.linear.bias);
                if let Some(a) = &p.attention {
                    w.vector(&a.w_alpha);
                    w.vector(&Array1::from(vec![a.b_alpha]));
                }
            }
            SavedHead::Esn(m) => {
                w.vector(&Array1::from(vec![m.reservoir.leak_rate]));
                w.matrix(&m.reservoir.input_weights);
                w.matrix(&m.reservoir.recurrent_weights);
                w.matrix(&m.readout.weights);
                w.vector(&m.readout.bias);
            }
            SavedHead::Bilstm(p) => {
                w.u32(p.hidden_size as u32);
                w.u32(p.num_layers() as u32);
                w.u32(match p.readout {
                    LstmReadout::Mean => 0,
                    LstmReadout::Final => 1,
                });
                for pair in &p.layers {
                    for cell in pair {
                        w.matrix(&cell.weights);
                        w.vector(&cell.bias);
                    }
                }
                w.matrix(&p.output_weights);
                w.vector(&p.output_bias);
            }
        }
        w.bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != SIDECAR_MAGIC {
            return Err(Error::Format("not a head sidecar (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != SIDECAR_VERSION {
            return Err(Error::Version {
                found: version,
                expected: SIDECAR_VERSION,
            });
        }
        let head = match kind_from_code(r.u32()?)? {
            kind @ (HeadKind::LinearTa | HeadKind::LinearTwa) => {
                let weights = r.matrix()?;
                let bias = r.vector()?;
                let attention = if kind == HeadKind::LinearTwa {
                    let w_alpha = r.vector()?;
                    let b = r.vector()?;
                    if b.len() != 1 || w_alpha.len() != weights.ncols() {
                        return Err(Error::Corruption("attention tensor shapes disagree".into()));
                    }
                    Some(AttentionPoolParams {
                        w_alpha,
                        b_alpha: b[0],
                    })
                } else {
                    None
                };
                if bias.len() != weights.nrows() {
                    return Err(Error::Corruption("probe bias length disagrees with weights".into()));
                }
                SavedHead::Probe(ProbeHead {
                    linear: LinearProbeParams { weights, bias },
                    attention,
                })
            }
            HeadKind::Esn => {
                let leak = r.vector()?;
                let input_weights = r.matrix()?;
                let recurrent_weights = r.matrix()?;
                let weights = r.matrix()?;
                let bias = r.vector()?;
                let n = input_weights.nrows();
                if leak.len() != 1
                    || recurrent_weights.dim() != (n, n)
                    || weights.ncols() != n
                    || bias.len() != weights.nrows()
                {
                    return Err(Error::Corruption("ESN tensor shapes disagree".into()));
                }
                SavedHead::Esn(EsnModel {
                    reservoir: EsnReservoir {
                        input_weights,
                        recurrent_weights,
                        leak_rate: leak[0],
                    },
                    readout: EsnReadout { weights, bias },
                })
            }
            HeadKind::Bilstm => {
                let hidden_size = r.u32()? as usize;
                let num_layers = r.u32()? as usize;
                let readout = match r.u32()? {
                    0 => LstmReadout::Mean,
                    1 => LstmReadout::Final,
                    other => return Err(Error::Corruption(format!("unknown LSTM readout code {other}"))),
                };
                if !(1..=2).contains(&num_layers) || hidden_size == 0 {
                    return Err(Error::Corruption("implausible LSTM shape".into()));
                }
                let mut layers = Vec::with_capacity(num_layers);
                for l in 0..num_layers {
                    let mut cell = || -> Result<LstmCellParams> {
                        let weights = r.matrix()?;
                        let bias = r.vector()?;
                        let input_ok = l == 0 || weights.ncols() == 3 * hidden_size;
                        if weights.nrows() != 4 * hidden_size
                            || bias.len() != 4 * hidden_size
                            || weights.ncols() <= hidden_size
                            || !input_ok
                        {
                            return Err(Error::Corruption("LSTM cell shapes disagree".into()));
                        }
                        Ok(LstmCellParams { weights, bias })
                    };
                    let f = cell()?;
                    let b = cell()?;
                    if f.weights.dim() != b.weights.dim() {
                        return Err(Error::Corruption("LSTM directions disagree".into()));
                    }
                    layers.push([f, b]);
                }
                let output_weights = r.matrix()?;
                let output_bias = r.vector()?;
                if output_weights.ncols() != 2 * hidden_size || output_bias.len() != output_weights.nrows() {
                    return Err(Error::Corruption("LSTM output layer shapes disagree".into()));
                }
                SavedHead::Bilstm(LstmParams {
                    hidden_size,
                    layers,
                    output_weights,
                    output_bias,
                    readout,
                })
            }
        };
        if r.pos != bytes.len() {
            return Err(Error::Corruption(format!(
                "{} trailing bytes after head parameters",
                bytes.len() - r.pos
            )));
        }
        Ok(head)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io_at(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io_at(path, e))?;
        Self::from_bytes(&bytes)
    }
}

impl Scorer for SavedHead {
    fn num_classes(&self) -> usize {
        match self {
            SavedHead::Probe(p) => p.num_classes(),
            SavedHead::Esn(m) => m.num_classes(),
            SavedHead::Bilstm(p) => p.num_classes(),
        }
    }

    fn logits(&self, frames: ArrayView2<'_, f32>) -> Result<Array1<f64>> {
        match self {
            SavedHead::Probe(p) => p.logits(frames),
            SavedHead::Esn(m) => m.logits(frames),
            SavedHead::Bilstm(p) => p.logits(frames),
        }
    }
}

fn kind_code(kind: HeadKind) -> u32 {
    match kind {
        HeadKind::LinearTa => 0,
        HeadKind::LinearTwa => 1,
        HeadKind::Esn => 2,
        HeadKind::Bilstm => 3,
    }
}

fn kind_from_code(code: u32) -> Result<HeadKind> {
    Ok(match code {
        0 => HeadKind::LinearTa,
        1 => HeadKind::LinearTwa,
        2 => HeadKind::Esn,
        3 => HeadKind::Bilstm,
        other => return Err(Error::Unsupported(format!("unknown head kind code {other}"))),
    })
}

#[derive(Default)]
struct Writer {
    bytes: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }

    fn values<'a>(&mut self, it: impl Iterator<Item = &'a f64>) {
        for v in it {
            self.bytes.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn vector(&mut self, v: &Array1<f64>) {
        self.u32(1);
        self.u32(v.len() as u32);
        self.values(v.iter());
    }

    fn matrix(&mut self, m: &Array2<f64>) {
        self.u32(2);
        self.u32(m.nrows() as u32);
        self.u32(m.ncols() as u32);
        self.values(m.iter());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corruption("head sidecar is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Corruption("tensor too large".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn rank(&mut self, expected: u32) -> Result<()> {
        let rank = self.u32()?;
        if rank != expected {
            return Err(Error::Corruption(format!("expected a rank-{expected} tensor, found rank {rank}")));
        }
        Ok(())
    }

    fn vector(&mut self) -> Result<Array1<f64>> {
        self.rank(1)?;
        let n = self.u32()? as usize;
        Ok(Array1::from(self.values(n)?))
    }

    fn matrix(&mut self) -> Result<Array2<f64>> {
        self.rank(2)?;
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Corruption("tensor too large".into()))?;
        Ok(Array2::from_shape_vec((rows, cols), self.values(n)?).expect("length checked"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pooling::Pooling;
    use crate::recurrent::{esn_init, BiLstmConfig, EsnConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn heads() -> Vec<SavedHead> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut twa = ProbeHead::init(Pooling::TimeWeighted, 3, 4, &mut rng);
        twa.attention.as_mut().unwrap().b_alpha = -0.25;
        let cfg = EsnConfig {
            reservoir_size: 6,
            ..Default::default()
        };
        let esn = EsnModel {
            reservoir: esn_init(&cfg, 4).unwrap(),
            readout: EsnReadout {
                weights: Array2::from_shape_fn((3, 6), |_| rng.gen_range(-1.0..1.0)),
                bias: Array1::from(vec![0.1, 0.2, 0.3]),
            },
        };
        let lstm_cfg = BiLstmConfig {
            hidden_size: 2,
            num_layers: 2,
            readout: LstmReadout::Final,
        };
        vec![
            SavedHead::Probe(ProbeHead::init(Pooling::TimeAveraged, 3, 4, &mut rng)),
            SavedHead::Probe(twa),
            SavedHead::Esn(esn),
            SavedHead::Bilstm(LstmParams::init(&lstm_cfg, 4, 3, &mut rng).unwrap()),
        ]
    }

    #[test]
    fn roundtrip_every_kind() {
        let frames = Array2::from_shape_fn((5, 4), |(t, k)| (t as f32 - k as f32) * 0.3);
        for head in heads() {
            let back = SavedHead::from_bytes(&head.to_bytes()).unwrap();
            assert_eq!(back, head);
            assert_eq!(back.kind(), head.kind());
            assert_eq!(back.logits(frames.view()).unwrap(), head.logits(frames.view()).unwrap());
        }
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.prbh");
        let head = heads().pop().unwrap();
        head.save(&path).unwrap();
        assert_eq!(SavedHead::load(&path).unwrap(), head);
    }

    #[test]
    fn damaged_files_rejected() {
        for head in heads() {
            let bytes = head.to_bytes();
            for cut in [0, 3, 8, 11, bytes.len() / 2, bytes.len() - 1] {
                assert!(SavedHead::from_bytes(&bytes[..cut]).is_err(), "cut {cut}");
            }
            let mut extra = bytes.clone();
            extra.push(0);
            assert!(matches!(SavedHead::from_bytes(&extra), Err(Error::Corruption(_))));
            let mut magic = bytes.clone();
            magic[0] = b'X';
            assert!(matches!(SavedHead::from_bytes(&magic), Err(Error::Format(_))));
            let mut version = bytes.clone();
            version[4] = 9;
            assert!(matches!(SavedHead::from_bytes(&version), Err(Error::Version { found: 9, .. })));
        }
    }
}
