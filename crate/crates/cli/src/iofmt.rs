//! File formats and provenance stamping shared by the subcommands.
//!
//! CSV outputs start with `# config_hash=<hex> seed=<n>`; readers of our
//! own formats skip leading `#` lines. Floats are written with the
//! shortest round-trip representation, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use statarb_core::backtest::{TradeAction, TradeList};

/// Output-directory override: the one environment knob the CLI honors.
pub const OUT_DIR_ENV: &str = "STATARB_OUT_DIR";

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

/// First 16 hex chars of the SHA-256 of the raw config bytes.
pub fn hash_config(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Resolve the run's output directory, honoring the env override, and
/// create it.
pub fn prepare_out_dir(configured: &Path) -> Result<PathBuf> {
    let dir = match std::env::var_os(OUT_DIR_ENV) {
        Some(v) => PathBuf::from(v),
        None => configured.to_path_buf(),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating output dir {}", dir.display()))?;
    Ok(dir)
}

/// Two-column series CSV: `<label>,<value>` rows under any two-field
/// header. Labels (dates or step numbers) pass through untouched.
pub fn read_series_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let content =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = content.lines().enumerate().skip_while(|(_, l)| l.starts_with('#'));
    let Some((_, header)) = lines.next() else { bail!("{}: empty file", path.display()) };
    if header.split(',').count() != 2 {
        bail!("{}: expected a two-column header, got `{header}`", path.display());
    }
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (label, value) = line
            .split_once(',')
            .with_context(|| format!("{} line {}: not two fields", path.display(), i + 1))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("{} line {}: bad value `{value}`", path.display(), i + 1))?;
        labels.push(label.to_string());
        values.push(value);
    }
    if values.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok((labels, values))
}

pub fn write_series_csv(
    path: &Path,
    header: (&str, &str),
    rows: impl Iterator<Item = (String, f64)>,
    prov: &Provenance,
) -> Result<()> {
    let mut out = prov.comment();
    out.push_str(&format!("{},{}\n", header.0, header.1));
    for (label, value) in rows {
        out.push_str(&format!("{label},{value}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Trade-list CSV: `index,action` with action ∈ {−1, +1}.
pub fn write_trades_csv(path: &Path, trades: &TradeList, prov: &Provenance) -> Result<()> {
    let mut out = prov.comment();
    out.push_str("index,action\n");
    for ev in &trades.events {
        out.push_str(&format!("{},{}\n", ev.index, ev.action.signed()));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_trades_csv(path: &Path, source: &str) -> Result<TradeList> {
    let content =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = content.lines().enumerate().skip_while(|(_, l)| l.starts_with('#'));
    match lines.next() {
        Some((_, "index,action")) => {}
        other => bail!("{}: expected `index,action` header, got {:?}", path.display(), other),
    }
    let mut trades = TradeList::new(source);
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (index, action) = line
            .split_once(',')
            .with_context(|| format!("{} line {}: not two fields", path.display(), i + 1))?;
        let index: usize = index
            .trim()
            .parse()
            .with_context(|| format!("{} line {}: bad index", path.display(), i + 1))?;
        let action: i8 = action
            .trim()
            .parse()
            .with_context(|| format!("{} line {}: bad action", path.display(), i + 1))?;
        let action = TradeAction::from_signed(action)
            .with_context(|| format!("{} line {}: action must be -1 or +1", path.display(), i + 1))?;
        trades.push(index, action);
    }
    trades.validate()?;
    Ok(trades)
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let body = serde_json::to_string_pretty(value)?;
    fs::write(path, body + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
