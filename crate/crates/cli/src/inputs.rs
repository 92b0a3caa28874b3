//! Parsing of ranges, systems and spaces given on the command line.

use std::path::Path;

use condlab_core::spaces::SpaceSpec;
use condlab_core::systems::SystemSpec;
use condlab_core::weight::Arrangement;

use crate::config::ExperimentConfig;

/// `a..b` (every integer), `a..b*2` (doubling), or a comma list.
pub fn parse_range(text: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("invalid range {text:?}: use a..b, a..b*2, or a comma list");
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let out: Vec<usize> = if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once('*') {
            Some((h, f)) => (num(h)?, Some(num(f)?)),
            None => (num(rest)?, None),
        };
        let lo = num(lo)?;
        match step {
            None => (lo..=hi).collect(),
            Some(f) if f >= 2 && lo >= 1 => std::iter::successors(Some(lo), |&m| m.checked_mul(f)).take_while(|&m| m <= hi).collect(),
            Some(_) => return Err(bad()),
        }
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn floats(text: &str, n: usize, what: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = text.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| format!("{what}: expected {n} numbers"))?;
    if v.len() < n {
        return Err(format!("{what}: expected {n} numbers"));
    }
    Ok(v)
}

fn arrangement(s: &str) -> Result<Arrangement, String> {
    match s {
        "raw" => Ok(Arrangement::RawInteger),
        "complex" => Ok(Arrangement::ComplexNatural),
        "real" => Ok(Arrangement::RealNatural),
        _ => Err(format!("arrangement {s:?}: use raw, complex or real")),
    }
}

/// A system from a JSON constructor tree, a short form, or a file holding either
/// (a config file contributes its `system` key).
pub fn parse_system(text: &str) -> Result<SystemSpec, String> {
    let t = text.trim();
    if !t.starts_with('{') && !t.contains(':') && Path::new(t).is_file() {
        let body = std::fs::read_to_string(t).map_err(|e| format!("reading {t}: {e}"))?;
        let b = body.trim();
        if b.starts_with('{') {
            return parse_system(b);
        }
        let cfg = ExperimentConfig::parse(b)?;
        let sys = cfg.entries.get("system").ok_or_else(|| format!("{t}: no system key"))?;
        return parse_system(sys);
    }
    if t.starts_with('{') {
        return SystemSpec::from_json(t).map_err(|e| e.to_string());
    }
    let (kind, args) = t.split_once(':').ok_or_else(|| format!("system {t:?}: expected JSON, a file, or kind:args"))?;
    let usize_at = |v: &[f64], i: usize| -> Result<usize, String> {
        let x = v[i];
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(format!("system {t:?}: argument {} must be a positive integer", i + 1))
        }
    };
    match kind {
        "orthonormal" => Ok(SystemSpec::Orthonormal { dim: usize_at(&floats(args, 1, t)?, 0)? }),
        "trig" => {
            let mut parts = args.splitn(3, ',');
            let lambda = parts.next().unwrap_or("").trim().parse::<f64>().map_err(|_| format!("system {t:?}: lambda"))?;
            let dim = parts.next().unwrap_or("").trim().parse::<usize>().map_err(|_| format!("system {t:?}: dim"))?;
            let arrangement = arrangement(parts.next().unwrap_or("real").trim())?;
            Ok(SystemSpec::Trig { lambda, dim, arrangement })
        }
        "aa_diamond" => {
            let v = floats(args, 3, t)?;
            Ok(SystemSpec::aa_diamond(v[0], v[1], usize_at(&v, 2)?))
        }
        "almost_greedy" => {
            let v = floats(args, 4, t)?;
            Ok(SystemSpec::AlmostGreedy { inner: Box::new(SystemSpec::aa_diamond(v[0], v[1], usize_at(&v, 2)?)), space: SpaceSpec::lp(2.0), blocks: usize_at(&v, 3)? })
        }
        _ => Err(format!("system kind {kind:?}: use JSON or orthonormal:N, trig:λ,N[,raw|complex|real], aa_diamond:β,α,N, almost_greedy:β,α,N,K")),
    }
}

pub fn parse_space(text: &str) -> Result<SpaceSpec, String> {
    SpaceSpec::parse(text).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..4").unwrap(), [1, 2, 3, 4]);
        assert_eq!(parse_range("16..4096*2").unwrap(), [16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);
        assert_eq!(parse_range("3,5,9").unwrap(), [3, 5, 9]);
        for bad in ["", "0..3", "4..1", "1..8*1", "a..b", "1..x"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn systems() {
        assert_eq!(parse_system("orthonormal:5").unwrap(), SystemSpec::Orthonormal { dim: 5 });
        assert_eq!(parse_system("trig:-0.5,9,complex").unwrap(), SystemSpec::Trig { lambda: -0.5, dim: 9, arrangement: Arrangement::ComplexNatural });
        assert_eq!(parse_system("aa_diamond:0.5,0.5,8").unwrap(), SystemSpec::aa_diamond(0.5, 0.5, 8));
        let json = SystemSpec::aa_diamond(0.25, 0.5, 4).to_json();
        assert_eq!(parse_system(&json).unwrap(), SystemSpec::aa_diamond(0.25, 0.5, 4));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.cfg");
        std::fs::write(&p, format!("subcommand=kmeasure\nsystem={json}\n")).unwrap();
        assert_eq!(parse_system(p.to_str().unwrap()).unwrap(), SystemSpec::aa_diamond(0.25, 0.5, 4));
        assert!(parse_system("orthonormal:0").is_err());
        assert!(parse_system("cube:3").is_err());
    }
}
