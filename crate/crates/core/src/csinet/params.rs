//! Parameter initialization, naming, and the checkpoint byte format.

use std::io::{Read, Write};

use crate::autodiff::{Arr, ParamStore};
use crate::error::{Error, Result};
use crate::rng::Rng;

use super::config::ModelConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CSIN";
pub const CHECKPOINT_VERSION: u32 = 1;

fn xavier(rng: &mut Rng, rows: usize, cols: usize) -> Arr {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Arr::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform_in(-a, a)).collect())
}

/// Builds the full named parameter set for a configuration. Scale-indexed
/// names are zero-padded so lexicographic order equals scale order.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<ParamStore> {
    cfg.validate()?;
    let mut store = ParamStore::new();
    let d = cfg.embed_dim;
    let mut rng = Rng::new(crate::rng::derive_seed(seed, 0x7061_7261_6d73));

    for (m, &w) in cfg.windows.iter().enumerate() {
        let f = cfg.feature_dim(w);
        let p = |suffix: &str| format!("s{m:02}.{suffix}");
        store.insert(p("imu_proj.w"), xavier(&mut rng, f, d));
        store.insert(p("imu_proj.b"), Arr::zeros(1, d));
        store.insert(p("flow_proj.w"), xavier(&mut rng, f, d));
        store.insert(p("flow_proj.b"), Arr::zeros(1, d));
    }

    // Modulation and attention blocks: one set per scale, or a single
    // shared set (input projections stay per-scale; widths differ by w).
    let scale_tags: Vec<String> = if cfg.share_scale_weights {
        vec!["shared".to_string()]
    } else {
        (0..cfg.windows.len()).map(|m| format!("s{m:02}")).collect()
    };
    for tag in &scale_tags {
        if cfg.film_enabled {
            let p = |suffix: &str| format!("{tag}.{suffix}");
            store.insert(p("film.w1"), xavier(&mut rng, d, d));
            store.insert(p("film.b1"), Arr::zeros(1, d));
            // Zero output weights plus a γ-bias of 1: the modulation starts
            // as the exact identity and departs from it only where the loss
            // asks it to.
            store.insert(p("film.w2"), Arr::zeros(d, 2 * d));
            let mut b2 = Arr::zeros(1, 2 * d);
            for v in b2.data.iter_mut().take(d) {
                *v = 1.0;
            }
            store.insert(p("film.b2"), b2);
        }
        for l in 0..cfg.attn_layers {
            let q = |suffix: &str| format!("{tag}.attn{l}.{suffix}");
            store.insert(q("wq"), xavier(&mut rng, d, d));
            store.insert(q("wk"), xavier(&mut rng, d, d));
            if !cfg.shared_kv_projection {
                store.insert(q("wv"), xavier(&mut rng, d, d));
            }
            store.insert(q("wo"), xavier(&mut rng, d, d));
            store.insert(q("ln_g"), Arr::from_vec(1, d, vec![1.0; d]));
            store.insert(q("ln_b"), Arr::zeros(1, d));
        }
    }

    if cfg.fusion_enabled {
        let fin = cfg.fusion_input_dim();
        let h = cfg.fusion_hidden;
        store.insert("fusion.w1".into(), xavier(&mut rng, fin, h));
        store.insert("fusion.b1".into(), Arr::zeros(1, h));
        store.insert("fusion.w2".into(), xavier(&mut rng, h, cfg.n_scales()));
        store.insert("fusion.b2".into(), Arr::zeros(1, cfg.n_scales()));
    }

    Ok(store)
}

/// Serializes parameters: magic, version u32 LE, param count u32 LE, then
/// per parameter (names in lexicographic order): name length u16 LE, UTF-8
/// name, ndim u8, dims u32[] LE, f64 LE values row-major.
pub fn write_checkpoint<W: Write>(mut out: W, params: &ParamStore) -> Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, arr) in params {
        let bytes = name.as_bytes();
        if bytes.len() > u16::MAX as usize {
            return Err(Error::InvalidData("parameter name too long".into()));
        }
        out.write_all(&(bytes.len() as u16).to_le_bytes())?;
        out.write_all(bytes)?;
        out.write_all(&[2u8])?;
        out.write_all(&(arr.rows as u32).to_le_bytes())?;
        out.write_all(&(arr.cols as u32).to_le_bytes())?;
        for v in &arr.data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn checkpoint_bytes(params: &ParamStore) -> Vec<u8> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, params).expect("in-memory serialization cannot fail");
    buf
}

/// Reads a checkpoint and verifies every shape against the configuration.
pub fn read_checkpoint<R: Read>(mut input: R, cfg: &ModelConfig) -> Result<ParamStore> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::InvalidData("bad checkpoint magic".into()));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(Error::InvalidData(format!("unsupported checkpoint version {version}")));
    }
    input.read_exact(&mut u32buf)?;
    let count = u32::from_le_bytes(u32buf);

    let mut store = ParamStore::new();
    for _ in 0..count {
        let mut u16buf = [0u8; 2];
        input.read_exact(&mut u16buf)?;
        let name_len = u16::from_le_bytes(u16buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        input.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::InvalidData("non-UTF-8 parameter name".into()))?;
        let mut ndim = [0u8; 1];
        input.read_exact(&mut ndim)?;
        let mut dims = Vec::with_capacity(ndim[0] as usize);
        for _ in 0..ndim[0] {
            input.read_exact(&mut u32buf)?;
            dims.push(u32::from_le_bytes(u32buf) as usize);
        }
        let (rows, cols) = match dims.len() {
            1 => (1, dims[0]),
            2 => (dims[0], dims[1]),
            n => return Err(Error::InvalidData(format!("unsupported ndim {n}"))),
        };
        let total = rows * cols;
        let mut data = Vec::with_capacity(total);
        let mut f64buf = [0u8; 8];
        for _ in 0..total {
            input.read_exact(&mut f64buf)?;
            data.push(f64::from_le_bytes(f64buf));
        }
        store.insert(name, Arr::from_vec(rows, cols, data));
    }

    let expected = init_params(cfg, 0)?;
    if expected.len() != store.len() {
        return Err(Error::Shape(format!(
            "checkpoint has {} parameters, config expects {}",
            store.len(),
            expected.len()
        )));
    }
    for (name, arr) in &expected {
        match store.get(name) {
            Some(loaded) if loaded.rows == arr.rows && loaded.cols == arr.cols => {}
            Some(loaded) => {
                return Err(Error::Shape(format!(
                    "{name}: checkpoint [{},{}] vs config [{},{}]",
                    loaded.rows, loaded.cols, arr.rows, arr.cols
                )))
            }
            None => return Err(Error::Shape(format!("checkpoint missing parameter {name}"))),
        }
    }
    Ok(store)
}
