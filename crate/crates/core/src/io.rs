//! File formats.
//!
//! * Scenes: binary PGM (`P5`, 8 or 16 bit) or QISF.
//! * QISF: `b"QISF"`, `u32` width, `u32` height, then `width·height` `f64`
//!   values row-major, all little-endian. Used for flux maps and for
//!   per-exposure sums; sums carry a `<file>.cfg` sidecar with their
//!   [`ExposureConfig`].
//! * Display images: 8-bit `P5`.
//! * Curves: CSV with a `theta,<label>…` header, `%g`-style values with 9
//!   significant digits, `nan` for undefined points and `\n` line endings.
//! * Run configs: flat `key = value` text, see [`RunConfig`].

use crate::display::GrayImage;
use crate::hdr::{FusionConfig, HdrEstimate, Weighting};
use crate::metrics::SnrCurve;
use crate::sensor::{derive_seed, ExposureConfig, PhotonFluxMap, SumImage};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const QISF_MAGIC: &[u8; 4] = b"QISF";
/// Photons per second assigned to the brightest PGM pixel unless overridden.
pub const DEFAULT_C_MAX: f64 = 6e6;
pub const DEFAULT_GAMMA: f64 = 2.2;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: byte {offset}: {msg}")]
    Parse { path: PathBuf, offset: usize, msg: String },
    #[error("{path}: line {line}: {msg}")]
    Config { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, offset: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        offset,
        msg: msg.into(),
    }
}

fn invalid(path: &Path, msg: impl ToString) -> IoError {
    IoError::Invalid {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

// ---------------------------------------------------------------- PGM

/// Decoded binary PGM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub values: Vec<u16>,
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    /// Skips whitespace and `#` comments up to the next token.
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, path: &Path, what: &str) -> Result<u64, IoError> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(path, start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(path, start, format!("{what} out of range")))
    }
}

fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<Pgm, IoError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(parse_err(path, 0, "not a binary PGM (missing P5 magic)"));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(parse_err(path, 2, "expected whitespace after magic"));
    }
    let width = cur.number(path, "width")?;
    let height = cur.number(path, "height")?;
    let maxval_at = cur.pos;
    let maxval = cur.number(path, "maxval")?;
    if width == 0 || height == 0 {
        return Err(parse_err(path, maxval_at, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(path, maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(parse_err(path, cur.pos, "expected whitespace before raster"));
    }
    let start = cur.pos + 1;
    let n = usize::try_from(width * height).map_err(|_| parse_err(path, 0, "image too large"))?;
    let depth = if maxval < 256 { 1 } else { 2 };
    let need = n
        .checked_mul(depth)
        .and_then(|b| b.checked_add(start))
        .ok_or_else(|| parse_err(path, 0, "image too large"))?;
    if bytes.len() < need {
        return Err(parse_err(
            path,
            bytes.len(),
            format!("truncated raster: need {need} bytes, file has {}", bytes.len()),
        ));
    }
    if bytes.len() > need {
        return Err(parse_err(path, need, "trailing bytes after raster"));
    }
    let raster = &bytes[start..need];
    let values: Vec<u16> = if depth == 1 {
        raster.iter().map(|&b| u16::from(b)).collect()
    } else {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    if let Some(i) = values.iter().position(|&v| u64::from(v) > maxval) {
        return Err(parse_err(path, start + i * depth, format!("sample exceeds maxval {maxval}")));
    }
    Ok(Pgm {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u16,
        values,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Pgm, IoError> {
    let path = path.as_ref();
    decode_pgm(path, &read_bytes(path)?)
}

/// Reads an 8-bit PGM as a display image.
pub fn read_display(path: impl AsRef<Path>) -> Result<GrayImage, IoError> {
    let path = path.as_ref();
    let pgm = read_pgm(path)?;
    if pgm.maxval > 255 {
        return Err(invalid(path, format!("expected an 8-bit PGM, maxval is {}", pgm.maxval)));
    }
    let pixels = pgm.values.iter().map(|&v| v as u8).collect();
    GrayImage::new(pgm.width, pgm.height, pixels).map_err(|e| invalid(path, e))
}

pub fn encode_display(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

pub fn write_display(path: impl AsRef<Path>, image: &GrayImage) -> Result<(), IoError> {
    write_bytes(path.as_ref(), &encode_display(image))
}

/// Maps PGM samples linearly so the brightest pixel becomes `c_max`.
pub fn pgm_to_flux(pgm: &Pgm, c_max: f64) -> Result<PhotonFluxMap, String> {
    if !(c_max > 0.0 && c_max.is_finite()) {
        return Err(format!("c_max must be finite and > 0, got {c_max}"));
    }
    let peak = pgm.values.iter().copied().max().unwrap_or(0);
    let flux = if peak == 0 {
        vec![0.0; pgm.values.len()]
    } else {
        let peak = f64::from(peak);
        pgm.values.iter().map(|&v| f64::from(v) / peak * c_max).collect()
    };
    PhotonFluxMap::new(pgm.width, pgm.height, flux).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- QISF

pub fn encode_qisf(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    assert_eq!(values.len(), width * height, "QISF payload does not match dimensions");
    let w = u32::try_from(width).expect("width fits in u32");
    let h = u32::try_from(height).expect("height fits in u32");
    let mut out = Vec::with_capacity(12 + 8 * values.len());
    out.extend_from_slice(QISF_MAGIC);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_qisf(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), IoError> {
    if bytes.len() < 4 || &bytes[..4] != QISF_MAGIC {
        return Err(parse_err(path, 0, "missing QISF magic"));
    }
    if bytes.len() < 12 {
        return Err(parse_err(path, bytes.len(), "truncated QISF header"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(parse_err(path, 4, "zero image dimension"));
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| parse_err(path, 4, "image too large"))?;
    if bytes.len() < need {
        return Err(parse_err(
            path,
            bytes.len(),
            format!("truncated payload: need {need} bytes, file has {}", bytes.len()),
        ));
    }
    if bytes.len() > need {
        return Err(parse_err(path, need, "trailing bytes after payload"));
    }
    let mut values = Vec::with_capacity(width * height);
    for (i, chunk) in bytes[12..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(parse_err(path, 12 + 8 * i, "non-finite value"));
        }
        values.push(v);
    }
    Ok((width, height, values))
}

/// Reads a QISF file as `(width, height, values)`.
pub fn read_qisf(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>), IoError> {
    let path = path.as_ref();
    decode_qisf(path, &read_bytes(path)?)
}

pub fn write_flux(path: impl AsRef<Path>, estimate: &HdrEstimate) -> Result<(), IoError> {
    write_bytes(
        path.as_ref(),
        &encode_qisf(estimate.width(), estimate.height(), estimate.flux_hat()),
    )
}

pub fn write_flux_map(path: impl AsRef<Path>, scene: &PhotonFluxMap) -> Result<(), IoError> {
    write_bytes(path.as_ref(), &encode_qisf(scene.width(), scene.height(), scene.flux()))
}

/// Reads a scene: PGM samples are scaled to `c_max`, QISF values are used as is.
pub fn read_scene(path: impl AsRef<Path>, c_max: f64) -> Result<PhotonFluxMap, IoError> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if bytes.starts_with(QISF_MAGIC) {
        let (w, h, values) = decode_qisf(path, &bytes)?;
        PhotonFluxMap::new(w, h, values).map_err(|e| invalid(path, e))
    } else if bytes.starts_with(b"P5") {
        pgm_to_flux(&decode_pgm(path, &bytes)?, c_max).map_err(|e| invalid(path, e))
    } else {
        Err(parse_err(path, 0, "unrecognised scene format (expected P5 or QISF)"))
    }
}

/// Path of the config sidecar written next to a sum file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".cfg");
    PathBuf::from(s)
}

pub fn encode_exposure_config(cfg: &ExposureConfig) -> String {
    format!(
        "tau = {}\ncapacity = {}\nframes = {}\noversample = {}\nseed = {}\n",
        cfg.tau, cfg.capacity, cfg.frames, cfg.oversample, cfg.seed
    )
}

fn parse_exposure_config(path: &Path, text: &str) -> Result<ExposureConfig, IoError> {
    let mut tau = None;
    let mut capacity = None;
    let mut frames = None;
    let mut oversample = None;
    let mut seed = None;
    for (line, key, value) in key_values(path, text)? {
        let err = |msg: String| IoError::Config {
            path: path.to_path_buf(),
            line,
            msg,
        };
        match key {
            "tau" => tau = Some(parse_value::<f64>(value).map_err(err)?),
            "capacity" => capacity = Some(parse_value::<u32>(value).map_err(err)?),
            "frames" => frames = Some(parse_value::<u32>(value).map_err(err)?),
            "oversample" => oversample = Some(parse_value::<u32>(value).map_err(err)?),
            "seed" => seed = Some(parse_value::<u64>(value).map_err(err)?),
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }
    let missing = |k: &str| invalid(path, format!("missing key '{k}'"));
    ExposureConfig::new(
        tau.ok_or_else(|| missing("tau"))?,
        capacity.ok_or_else(|| missing("capacity"))?,
        frames.ok_or_else(|| missing("frames"))?,
        oversample.unwrap_or(1),
        seed.ok_or_else(|| missing("seed"))?,
    )
    .map_err(|e| invalid(path, e))
}

/// Writes sums as QISF plus the `<path>.cfg` sidecar.
pub fn write_sum(path: impl AsRef<Path>, image: &SumImage) -> Result<(), IoError> {
    let path = path.as_ref();
    let values: Vec<f64> = image.sum().iter().map(|&s| s as f64).collect();
    write_bytes(path, &encode_qisf(image.width(), image.height(), &values))?;
    write_bytes(&sidecar_path(path), encode_exposure_config(image.config()).as_bytes())
}

pub fn read_sum(path: impl AsRef<Path>) -> Result<SumImage, IoError> {
    let path = path.as_ref();
    let (w, h, values) = read_qisf(path)?;
    let side = sidecar_path(path);
    let text = String::from_utf8(read_bytes(&side)?).map_err(|e| invalid(&side, e))?;
    let cfg = parse_exposure_config(&side, &text)?;
    let mut sums = Vec::with_capacity(values.len());
    for (i, v) in values.into_iter().enumerate() {
        // f64 holds integers exactly up to 2^53, far beyond any T·K²·L.
        if v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(53) {
            return Err(parse_err(path, 12 + 8 * i, format!("sum {v} is not a non-negative integer")));
        }
        sums.push(v as u64);
    }
    SumImage::new(w, h, sums, cfg).map_err(|e| invalid(path, e))
}

// ---------------------------------------------------------------- CSV

/// C `%.{digits}g` formatting.
pub fn format_g(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn encode_csv(curve: &SnrCurve) -> String {
    let mut out = String::from("theta");
    for label in curve.labels() {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (i, theta) in curve.theta_axis().iter().enumerate() {
        out.push_str(&format_g(*theta, 9));
        for row in curve.rows() {
            out.push(',');
            match row[i] {
                Some(v) => out.push_str(&format_g(v, 9)),
                None => out.push_str("nan"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, curve: &SnrCurve) -> Result<(), IoError> {
    write_bytes(path.as_ref(), encode_csv(curve).as_bytes())
}

// ---------------------------------------------------------------- run configs

/// Parameters of an end-to-end capture and reconstruction.
///
/// ```text
/// # comment
/// scene = scene.pgm
/// cmax = 6e6
/// gamma = 2.2
/// seed = 7
/// exposure = 1e-3 4000 1        # tau capacity frames [oversample]
/// exposure = 0.25e-6 1 4000
/// denoise_sigma = 0
/// weight = snr2                 # or snr
/// max_iters = 10
/// rel_tol = 1e-4
/// saturation_margin = 0.995
/// out_flux = hdr.qisf
/// out_display = hdr.pgm
/// out_reference = reference.pgm # optional
/// ```
///
/// Relative paths are resolved against the config file's directory. The
/// exposure at position `i` is seeded with `derive_seed(seed, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scene: PathBuf,
    pub c_max: f64,
    pub gamma: f64,
    pub seed: u64,
    pub exposures: Vec<ExposureConfig>,
    pub fusion: FusionConfig,
    pub out_flux: PathBuf,
    pub out_display: PathBuf,
    pub out_reference: Option<PathBuf>,
}

type KeyValue<'a> = (usize, &'a str, &'a str);

fn key_values<'a>(path: &Path, text: &'a str) -> Result<Vec<KeyValue<'a>>, IoError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IoError::Config {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        out.push((i + 1, key.trim(), value.trim()));
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse '{value}' as {}", std::any::type_name::<T>()))
}

impl RunConfig {
    pub fn parse(path: &Path, text: &str) -> Result<Self, IoError> {
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let resolve = |v: &str| -> PathBuf {
            let p = Path::new(v);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let mut scene = None;
        let mut c_max = DEFAULT_C_MAX;
        let mut gamma = DEFAULT_GAMMA;
        let mut seed = 0u64;
        let mut raw_exposures: Vec<(usize, f64, u32, u32, u32)> = Vec::new();
        let mut fusion = FusionConfig::default();
        let mut out_flux = None;
        let mut out_display = None;
        let mut out_reference = None;

        for (line, key, value) in key_values(path, text)? {
            let err = |msg: String| IoError::Config {
                path: path.to_path_buf(),
                line,
                msg,
            };
            let nonempty = |v: &str| -> Result<PathBuf, IoError> {
                if v.is_empty() {
                    Err(err(format!("'{key}' needs a path")))
                } else {
                    Ok(resolve(v))
                }
            };
            match key {
                "scene" => scene = Some(nonempty(value)?),
                "cmax" => c_max = parse_value(value).map_err(err)?,
                "gamma" => gamma = parse_value(value).map_err(err)?,
                "seed" => seed = parse_value(value).map_err(err)?,
                "denoise_sigma" => fusion.denoise_sigma = parse_value(value).map_err(err)?,
                "max_iters" => fusion.max_iters = parse_value(value).map_err(err)?,
                "rel_tol" => fusion.rel_tol = parse_value(value).map_err(err)?,
                "saturation_margin" => fusion.saturation_margin = parse_value(value).map_err(err)?,
                "weight" => {
                    fusion.weighting = match value {
                        "snr2" => Weighting::SnrSquared,
                        "snr" => Weighting::Snr,
                        other => return Err(err(format!("weight must be snr2 or snr, got '{other}'"))),
                    }
                }
                "exposure" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if !(3..=4).contains(&parts.len()) {
                        return Err(err("exposure needs: tau capacity frames [oversample]".into()));
                    }
                    let tau = parse_value(parts[0]).map_err(err)?;
                    let cap = parse_value(parts[1]).map_err(err)?;
                    let frames = parse_value(parts[2]).map_err(err)?;
                    let k = match parts.get(3) {
                        Some(v) => parse_value(v).map_err(err)?,
                        None => 1,
                    };
                    raw_exposures.push((line, tau, cap, frames, k));
                }
                "out_flux" => out_flux = Some(nonempty(value)?),
                "out_display" => out_display = Some(nonempty(value)?),
                "out_reference" => out_reference = Some(nonempty(value)?),
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }

        let missing = |k: &str| invalid(path, format!("missing key '{k}'"));
        if raw_exposures.is_empty() {
            return Err(missing("exposure"));
        }
        let mut exposures = Vec::with_capacity(raw_exposures.len());
        for (i, (line, tau, cap, frames, k)) in raw_exposures.into_iter().enumerate() {
            let cfg = ExposureConfig::new(tau, cap, frames, k, derive_seed(seed, i as u64)).map_err(|e| {
                IoError::Config {
                    path: path.to_path_buf(),
                    line,
                    msg: e.to_string(),
                }
            })?;
            exposures.push(cfg);
        }
        fusion.validate().map_err(|e| invalid(path, e))?;
        if !(c_max > 0.0 && c_max.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(path, "cmax and gamma must be finite and > 0"));
        }
        Ok(Self {
            scene: scene.ok_or_else(|| missing("scene"))?,
            c_max,
            gamma,
            seed,
            exposures,
            fusion,
            out_flux: out_flux.ok_or_else(|| missing("out_flux"))?,
            out_display: out_display.ok_or_else(|| missing("out_display"))?,
            out_reference,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref();
        let text = String::from_utf8(read_bytes(path)?).map_err(|e| invalid(path, e))?;
        Self::parse(path, &text)
    }
}
