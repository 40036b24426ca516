use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gated::GateActivation;
use crate::network::{BlockKind, BlockSpec, Network, NetworkOptions, ParamView};
use crate::trainer::adam::{AdamParams, AdamState};

pub const MAGIC: [u8; 4] = *b"CDN1";
pub const FORMAT_VERSION: u32 = 1;

/// One named tensor in the checkpoint container.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl Entry {
    pub fn scalar(name: &str, value: f32) -> Entry {
        Entry {
            name: name.to_string(),
            dims: vec![1],
            data: vec![value],
        }
    }

    /// Serialized size: name length prefix (2) + name + rank (1) + dims + data.
    pub fn byte_len(&self) -> usize {
        2 + self.name.len() + 1 + 4 * self.dims.len() + 4 * self.data.len()
    }
}

/// Writes the container: magic, format version (u32 LE), entry count
/// (u32 LE), then each entry as name length (u16 LE), UTF-8 name, rank (u8),
/// dims (u32 LE each), raw f32 LE data.
pub fn write_entries(path: &Path, entries: &[Entry]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for e in entries {
        if !seen.insert(&e.name) {
            return Err(Error::Checkpoint(format!("duplicate entry name '{}'", e.name)));
        }
        if e.name.len() > u16::MAX as usize {
            return Err(Error::Checkpoint(format!(
                "entry name too long ({} bytes)",
                e.name.len()
            )));
        }
        if e.dims.len() > u8::MAX as usize {
            return Err(Error::Checkpoint(format!(
                "entry '{}' rank {} exceeds format limit",
                e.name,
                e.dims.len()
            )));
        }
        let numel: u64 = e.dims.iter().map(|&d| d as u64).product();
        if numel != e.data.len() as u64 {
            return Err(Error::Checkpoint(format!(
                "entry '{}' dims {:?} do not match {} data elements",
                e.name,
                e.dims,
                e.data.len()
            )));
        }
    }

    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(entries.len() as u32).to_le_bytes()).map_err(io_err)?;
    for e in entries {
        w.write_all(&(e.name.len() as u16).to_le_bytes()).map_err(io_err)?;
        w.write_all(e.name.as_bytes()).map_err(io_err)?;
        w.write_all(&[e.dims.len() as u8]).map_err(io_err)?;
        for &d in &e.dims {
            w.write_all(&d.to_le_bytes()).map_err(io_err)?;
        }
        for &v in &e.data {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Reads a container written by [`write_entries`], rejecting bad magic, an
/// unknown format version, truncation, malformed entries, duplicate names,
/// and trailing bytes.
pub fn read_entries(path: &Path) -> Result<Vec<Entry>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    fn take<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf)
            .map_err(|_| Error::Checkpoint(format!("truncated while reading {what}")))?;
        Ok(buf)
    }

    let magic: [u8; 4] = take(&mut r, "magic")?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = u32::from_le_bytes(take(&mut r, "format version")?);
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let count = u32::from_le_bytes(take(&mut r, "entry count")?) as usize;

    let mut entries = Vec::with_capacity(count.min(4096));
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..count {
        let name_len = u16::from_le_bytes(take(&mut r, "entry name length")?) as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf)
            .map_err(|_| Error::Checkpoint(format!("truncated in entry {i} name")))?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| Error::Checkpoint(format!("entry {i} name is not UTF-8")))?;
        if !seen.insert(name.clone()) {
            return Err(Error::Checkpoint(format!("duplicate entry name '{name}'")));
        }
        let rank = take::<1>(&mut r, "entry rank")?[0] as usize;
        let mut dims = Vec::with_capacity(rank);
        let mut numel: u64 = 1;
        for _ in 0..rank {
            let d = u32::from_le_bytes(take(&mut r, "entry dims")?);
            numel = numel.saturating_mul(d as u64);
            dims.push(d);
        }
        if numel > (u32::MAX as u64) {
            return Err(Error::Checkpoint(format!(
                "entry '{name}' claims {numel} elements, refusing"
            )));
        }
        let mut data = vec![0f32; numel as usize];
        for v in data.iter_mut() {
            *v = f32::from_le_bytes(take(&mut r, "entry data")?);
        }
        entries.push(Entry { name, dims, data });
    }

    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(entries),
        Ok(_) => Err(Error::Checkpoint("trailing bytes after last entry".into())),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn kind_code(kind: BlockKind) -> f32 {
    match kind {
        BlockKind::Residual => 0.0,
        BlockKind::ConvStack => 1.0,
        BlockKind::Mapping => 2.0,
    }
}

fn kind_from_code(code: f32) -> Result<BlockKind> {
    match code as i64 {
        0 => Ok(BlockKind::Residual),
        1 => Ok(BlockKind::ConvStack),
        2 => Ok(BlockKind::Mapping),
        other => Err(Error::Checkpoint(format!("unknown block kind code {other}"))),
    }
}

/// Saves the network (architecture, parameters, batch-norm running stats)
/// and, when given, the optimizer state, as one container file.
pub fn save_network(path: &Path, net: &Network, opt: Option<&AdamState>) -> Result<()> {
    let mut entries = Vec::new();

    let gate_code = match net.options().gate_activation {
        GateActivation::Sigmoid => 0.0,
        GateActivation::Identity => 1.0,
    };
    entries.push(Entry::scalar("arch.gate_mode", gate_code));
    entries.push(Entry::scalar("arch.leaky_slope", net.options().leaky_slope));
    for (i, spec) in net.specs().iter().enumerate() {
        entries.push(Entry {
            name: format!("arch.block.{i}.{}", spec.name),
            dims: vec![5],
            data: vec![
                kind_code(spec.kind),
                spec.kernel as f32,
                spec.channels as f32,
                spec.stride as f32,
                spec.count as f32,
            ],
        });
    }

    let mut push_param = |name: &str, dims: &[u32], data: &[f32]| {
        entries.push(Entry {
            name: format!("param.{name}"),
            dims: dims.to_vec(),
            data: data.to_vec(),
        });
    };
    net.visit_params(&mut push_param);
    net.visit_running_stats(&mut push_param);

    if let Some(state) = opt {
        let h = state.hyper();
        entries.push(Entry::scalar("optim.t", state.t() as f32));
        entries.push(Entry::scalar("optim.lr", h.lr));
        entries.push(Entry::scalar("optim.beta1", h.beta1));
        entries.push(Entry::scalar("optim.beta2", h.beta2));
        entries.push(Entry::scalar("optim.epsilon", h.epsilon));
        state.visit_slots(&mut |name, m, v| {
            entries.push(Entry {
                name: format!("optim.m.{name}"),
                dims: vec![m.len() as u32],
                data: m.to_vec(),
            });
            entries.push(Entry {
                name: format!("optim.v.{name}"),
                dims: vec![v.len() as u32],
                data: v.to_vec(),
            });
        });
    }

    write_entries(path, &entries)
}

fn scalar_of(map: &BTreeMap<String, Entry>, name: &str) -> Result<f32> {
    let e = map
        .get(name)
        .ok_or_else(|| Error::Checkpoint(format!("missing entry '{name}'")))?;
    if e.data.len() != 1 {
        return Err(Error::Checkpoint(format!(
            "entry '{name}' should be a scalar, has {} elements",
            e.data.len()
        )));
    }
    Ok(e.data[0])
}

/// Loads a network (and optimizer state, when present) saved by
/// [`save_network`]. The architecture is rebuilt from the stored block table,
/// so no prior knowledge of the layout is needed. Unknown `param.*` entries
/// and missing parameters are rejected by name.
pub fn load_network(path: &Path) -> Result<(Network, Option<AdamState>)> {
    let entries = read_entries(path)?;
    let mut map: BTreeMap<String, Entry> = BTreeMap::new();
    for e in entries {
        map.insert(e.name.clone(), e);
    }

    // Architecture.
    let gate_activation = match scalar_of(&map, "arch.gate_mode")? as i64 {
        0 => GateActivation::Sigmoid,
        1 => GateActivation::Identity,
        other => {
            return Err(Error::Checkpoint(format!("unknown gate mode code {other}")));
        }
    };
    let leaky_slope = scalar_of(&map, "arch.leaky_slope")?;
    let mut blocks: Vec<(usize, BlockSpec)> = Vec::new();
    for (name, e) in map.iter() {
        let Some(rest) = name.strip_prefix("arch.block.") else {
            continue;
        };
        let (idx_str, block_name) = rest.split_once('.').ok_or_else(|| {
            Error::Checkpoint(format!("malformed architecture entry '{name}'"))
        })?;
        let idx: usize = idx_str
            .parse()
            .map_err(|_| Error::Checkpoint(format!("malformed architecture entry '{name}'")))?;
        if e.data.len() != 5 {
            return Err(Error::Checkpoint(format!(
                "architecture entry '{name}' should have 5 values"
            )));
        }
        blocks.push((
            idx,
            BlockSpec {
                name: block_name.to_string(),
                kind: kind_from_code(e.data[0])?,
                kernel: e.data[1] as usize,
                channels: e.data[2] as usize,
                stride: e.data[3] as usize,
                count: e.data[4] as usize,
            },
        ));
    }
    blocks.sort_by_key(|(i, _)| *i);
    for (pos, (i, _)) in blocks.iter().enumerate() {
        if pos != *i {
            return Err(Error::Checkpoint(format!(
                "architecture block indices are not contiguous at {i}"
            )));
        }
    }
    let specs: Vec<BlockSpec> = blocks.into_iter().map(|(_, b)| b).collect();
    let mut net = Network::build(
        &specs,
        NetworkOptions {
            gate_activation,
            leaky_slope,
        },
    )?;

    // Parameters and running statistics.
    let mut consumed: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    let mut missing: Vec<String> = Vec::new();
    let mut mismatched: Vec<String> = Vec::new();
    {
        let mut fill = |view: ParamView| {
            let key = format!("param.{}", view.name);
            match map.get(&key) {
                None => missing.push(view.name.clone()),
                Some(e) => {
                    if e.data.len() != view.data.len() {
                        mismatched.push(format!(
                            "{} (file {} elements, network {})",
                            view.name,
                            e.data.len(),
                            view.data.len()
                        ));
                    } else {
                        view.data.copy_from_slice(&e.data);
                        consumed.insert(key);
                    }
                }
            }
        };
        net.visit_params_mut(&mut fill);
        net.visit_running_stats_mut(&mut fill);
    }
    if !missing.is_empty() {
        return Err(Error::Checkpoint(format!(
            "checkpoint is missing parameters: {missing:?}"
        )));
    }
    if !mismatched.is_empty() {
        return Err(Error::Checkpoint(format!(
            "checkpoint parameter shapes do not match: {mismatched:?}"
        )));
    }
    for name in map.keys() {
        if name.starts_with("param.") && !consumed.contains(name) {
            return Err(Error::Checkpoint(format!(
                "checkpoint contains unknown parameter '{}'",
                &name["param.".len()..]
            )));
        }
    }

    // Optimizer state, if saved.
    let opt = if map.contains_key("optim.t") {
        let hyper = AdamParams {
            lr: scalar_of(&map, "optim.lr")?,
            beta1: scalar_of(&map, "optim.beta1")?,
            beta2: scalar_of(&map, "optim.beta2")?,
            epsilon: scalar_of(&map, "optim.epsilon")?,
        };
        let t = scalar_of(&map, "optim.t")? as u64;
        let mut slots: BTreeMap<String, (Vec<f32>, Vec<f32>)> = BTreeMap::new();
        for (name, e) in map.iter() {
            if let Some(pname) = name.strip_prefix("optim.m.") {
                let v_entry = map
                    .get(&format!("optim.v.{pname}"))
                    .ok_or_else(|| {
                        Error::Checkpoint(format!("optimizer slot '{pname}' missing v"))
                    })?;
                if v_entry.data.len() != e.data.len() {
                    return Err(Error::Checkpoint(format!(
                        "optimizer slot '{pname}' m/v size mismatch"
                    )));
                }
                slots.insert(pname.to_string(), (e.data.clone(), v_entry.data.clone()));
            }
        }
        Some(AdamState::from_parts(hyper, t, slots))
    } else {
        None
    };

    Ok((net, opt))
}
