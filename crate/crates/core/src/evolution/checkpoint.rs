//! Checkpoint files: a plain-text header followed by little-endian `f64`
//! blocks (value then time derivative for each channel).
//!
//! ```text
//! wkglab-checkpoint 1
//! mode cartesian
//! time 2.5 0x4004000000000000
//! grid 0.01 0x3f847ae147ae147b 501
//! model {"kind":"wkg",...}
//! channels u phi
//! endheader
//! ```
//!
//! Floats are stored with their bit patterns so a round trip is exact.

use std::fs;
use std::path::Path;

use crate::foliation::RadialGrid;
use crate::models::ModelSystem;

use super::{EvolutionError, EvolutionState, Field, Mode};

pub const SCHEMA: &str = "wkglab-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: EvolutionState,
    pub model: ModelSystem,
}

fn bits(x: f64) -> String {
    format!("{x:?} {:#018x}", x.to_bits())
}

pub fn encode(state: &EvolutionState, model: &ModelSystem) -> Vec<u8> {
    let model_json = serde_json::to_string(model).expect("model serializes");
    let names = if state.rho.is_some() { "u phi rho" } else { "u phi" };
    let header = format!(
        "{SCHEMA}\nmode {}\ntime {}\ngrid {} {}\nmodel {model_json}\nchannels {names}\nendheader\n",
        state.mode.name(),
        bits(state.time),
        bits(state.grid.dr()),
        state.grid.len(),
    );
    let mut out = header.into_bytes();
    for f in state.fields() {
        for v in f.value.iter().chain(&f.dt) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> EvolutionError {
    EvolutionError::Checkpoint(msg.into())
}

fn parse_bits(tokens: &[&str], what: &str) -> Result<f64, EvolutionError> {
    let hex = tokens
        .get(1)
        .and_then(|h| h.strip_prefix("0x"))
        .ok_or_else(|| bad(format!("{what}: missing bit pattern")))?;
    let b = u64::from_str_radix(hex, 16).map_err(|e| bad(format!("{what}: {e}")))?;
    Ok(f64::from_bits(b))
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, EvolutionError> {
    const END: &[u8] = b"endheader\n";
    let split = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| bad("no endheader line"))?;
    let header = std::str::from_utf8(&bytes[..split]).map_err(|_| bad("header is not UTF-8"))?;
    let body = &bytes[split + END.len()..];
    let mut lines = header.lines();
    if lines.next() != Some(SCHEMA) {
        return Err(bad(format!("expected schema line `{SCHEMA}`")));
    }
    let (mut mode, mut time, mut grid, mut model, mut channels) = (None, None, None, None, None);
    for line in lines {
        let (key, rest) = line.split_once(' ').ok_or_else(|| bad(format!("bad line `{line}`")))?;
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        match key {
            "mode" => {
                mode = Some(match rest {
                    "cartesian" => Mode::Cartesian,
                    "hyperboloidal" => Mode::Hyperboloidal,
                    other => return Err(bad(format!("unknown mode `{other}`"))),
                })
            }
            "time" => time = Some(parse_bits(&tokens, "time")?),
            "grid" => {
                let dr = parse_bits(&tokens, "grid")?;
                let n: usize = tokens
                    .get(2)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("grid: missing node count"))?;
                grid = Some(RadialGrid::new(dr, n).map_err(|e| bad(e.to_string()))?);
            }
            "model" => {
                model = Some(
                    serde_json::from_str::<ModelSystem>(rest).map_err(|e| bad(format!("model: {e}")))?,
                )
            }
            "channels" => channels = Some(tokens.len()),
            other => return Err(bad(format!("unknown header key `{other}`"))),
        }
    }
    let (mode, time, grid, model, channels) = match (mode, time, grid, model, channels) {
        (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
        _ => return Err(bad("incomplete header")),
    };
    if channels != 2 + model.has_rho() as usize {
        return Err(bad("channel list does not match the model"));
    }
    let n = grid.len();
    if body.len() != channels * 2 * n * 8 {
        return Err(bad(format!(
            "body holds {} bytes, expected {}",
            body.len(),
            channels * 2 * n * 8
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = || -> Vec<f64> { (&mut values).take(n).collect() };
    let mut next_field = || Field {
        value: take(),
        dt: take(),
    };
    let u = next_field();
    let phi = next_field();
    let rho = (channels == 3).then(next_field);
    Ok(Checkpoint {
        state: EvolutionState {
            mode,
            time,
            grid,
            u,
            phi,
            rho,
        },
        model,
    })
}

pub fn write(path: &Path, state: &EvolutionState, model: &ModelSystem) -> Result<(), EvolutionError> {
    fs::write(path, encode(state, model)).map_err(|source| EvolutionError::Io {
        context: format!("writing checkpoint {}", path.display()),
        source,
    })
}

pub fn read(path: &Path) -> Result<Checkpoint, EvolutionError> {
    let bytes = fs::read(path).map_err(|source| EvolutionError::Io {
        context: format!("reading checkpoint {}", path.display()),
        source,
    })?;
    decode(&bytes)
}
