//! CRT file format: UTF-8 JSON with a strict field set.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Crt, CrtDims, CrtEntry, NoiseModel, PufKind};
use crate::classical_puf::ClassicalNoise;
use crate::error::{Error, Result};
use crate::fuzzy::{Code, FeParams, HelperData, ToeplitzHash};
use crate::mathcore::BitString;
use crate::qrpuf::{ChallengeEncoding, NoiseInsertion, QuantumNoise, W_BITS_PER_QUBIT};

pub const CRT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrtFile {
    version: u64,
    puf_kind: PufKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    out_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    fe: FeFile,
    noise_model: NoiseFile,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeFile {
    l: usize,
    m: usize,
    t: usize,
    epsilon: f64,
    code: String,
    hash_seed: String,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum NoiseKind {
    Depolarizing,
    Bitflip,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    kind: NoiseKind,
    p: f64,
    insertion: NoiseInsertion,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HelperFile {
    sketch: String,
    seed: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    id: u64,
    x: String,
    w: String,
    h: HelperFile,
    r: String,
    used: bool,
}

fn field_err(context: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        context: context.into(),
        message: e.to_string(),
    }
}

impl Crt {
    pub fn to_json(&self) -> String {
        let (lambda, out_len, phi) = match &self.dims {
            CrtDims::Qr(enc) => (Some(enc.lambda()), None, Some(enc.phi())),
            CrtDims::Classical { out_len, .. } => (None, Some(*out_len), None),
        };
        let noise_model = match self.noise {
            NoiseModel::Depolarizing(q) => NoiseFile {
                kind: NoiseKind::Depolarizing,
                p: q.p,
                insertion: q.insertion,
            },
            NoiseModel::BitFlip(c) => NoiseFile {
                kind: NoiseKind::Bitflip,
                p: c.flip_p(),
                insertion: NoiseInsertion::Outcome,
            },
        };
        let file = CrtFile {
            version: CRT_VERSION,
            puf_kind: self.kind(),
            lambda,
            out_len,
            phi,
            fe: FeFile {
                l: self.fe.l(),
                m: self.fe.m(),
                t: self.fe.t(),
                epsilon: self.fe.epsilon(),
                code: self.fe.code().to_string(),
                hash_seed: self.fe.hash_seed().to_hex(),
            },
            noise_model,
            entries: self
                .entries
                .iter()
                .map(|e| EntryFile {
                    id: e.id,
                    x: e.x.to_string(),
                    w: e.w.to_hex(),
                    h: HelperFile {
                        sketch: e.h.sketch.to_hex(),
                        seed: e.h.seed.to_hex(),
                    },
                    r: e.r.to_hex(),
                    used: e.used,
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("CRT serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            field_err(format!("line {}, column {}", e.line(), e.column()), e)
        })?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(CRT_VERSION) => {}
            Some(v) => return Err(Error::UnsupportedVersion(v)),
            None => return Err(field_err("version", "missing or not an unsigned integer")),
        }
        let file: CrtFile = serde_json::from_str(text).map_err(|e| {
            field_err(format!("line {}, column {}", e.line(), e.column()), e)
        })?;
        from_file(file)
    }
}

fn from_file(file: CrtFile) -> Result<Crt> {
    let dims = match (file.puf_kind, file.lambda, file.out_len, file.phi) {
        (PufKind::Qr, Some(lambda), None, Some(phi)) => {
            CrtDims::Qr(ChallengeEncoding::new(phi, lambda).map_err(|e| field_err("phi", e))?)
        }
        (PufKind::Classical, None, Some(out_len), None) => {
            let challenge_len = file
                .entries
                .first()
                .map(|e| e.x.len())
                .ok_or_else(|| field_err("entries", "a classical table needs at least one entry"))?;
            CrtDims::Classical {
                challenge_len,
                out_len,
            }
        }
        (PufKind::Qr, ..) => return Err(field_err("puf_kind", "qr tables carry lambda and phi only")),
        (PufKind::Classical, ..) => {
            return Err(field_err("puf_kind", "classical tables carry out_len only"))
        }
    };

    let l_o = dims.outcome_len();
    let l_w = match &dims {
        CrtDims::Qr(enc) => W_BITS_PER_QUBIT * enc.lambda(),
        CrtDims::Classical { out_len, .. } => *out_len,
    };
    if file.fe.l != l_w + l_o {
        return Err(field_err(
            "fe.l",
            format!("expected {} for this table kind, got {}", l_w + l_o, file.fe.l),
        ));
    }
    let code: Code = file.fe.code.parse().map_err(|e| field_err("fe.code", e))?;
    let seed_len = ToeplitzHash::seed_len(file.fe.l, file.fe.m);
    let hash_seed =
        BitString::from_hex(&file.fe.hash_seed, seed_len).map_err(|e| field_err("fe.hash_seed", e))?;
    let s = (file.entries.len().max(1) as f64).log2();
    let fe = FeParams::new(file.fe.l, file.fe.m, file.fe.t, file.fe.epsilon, s, code, &hash_seed)
        .map_err(|e| field_err("fe", e))?;

    let noise = match (file.noise_model.kind, file.puf_kind) {
        (NoiseKind::Depolarizing, PufKind::Qr) => NoiseModel::Depolarizing(
            QuantumNoise::new(file.noise_model.p, file.noise_model.insertion)
                .map_err(|e| field_err("noise_model.p", e))?,
        ),
        (NoiseKind::Bitflip, PufKind::Classical) => {
            if file.noise_model.insertion != NoiseInsertion::Outcome {
                return Err(field_err("noise_model.insertion", "bitflip noise acts on the outcome"));
            }
            NoiseModel::BitFlip(
                ClassicalNoise::new(file.noise_model.p).map_err(|e| field_err("noise_model.p", e))?,
            )
        }
        _ => return Err(field_err("noise_model.kind", "does not match puf_kind")),
    };

    let entries = file
        .entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let ctx = |f: &str| format!("entries[{i}].{f}");
            Ok(CrtEntry {
                id: e.id,
                x: e.x.parse().map_err(|err| field_err(ctx("x"), err))?,
                w: BitString::from_hex(&e.w, l_w).map_err(|err| field_err(ctx("w"), err))?,
                h: HelperData {
                    sketch: BitString::from_hex(&e.h.sketch, l_o)
                        .map_err(|err| field_err(ctx("h.sketch"), err))?,
                    seed: BitString::from_hex(&e.h.seed, seed_len)
                        .map_err(|err| field_err(ctx("h.seed"), err))?,
                },
                r: BitString::from_hex(&e.r, file.fe.m).map_err(|err| field_err(ctx("r"), err))?,
                used: e.used,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let crt = Crt {
        dims,
        fe,
        noise,
        entries,
    };
    crt.validate().map_err(|e| field_err("entries", e))?;
    Ok(crt)
}

pub fn crt_save(crt: &Crt, path: &Path) -> Result<()> {
    fs::write(path, crt.to_json())?;
    Ok(())
}

pub fn crt_load(path: &Path) -> Result<Crt> {
    Crt::from_json(&fs::read_to_string(path)?)
}
