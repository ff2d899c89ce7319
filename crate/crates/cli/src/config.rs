use std::ffi::OsString;

use anyhow::Result;
use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::UsageError;

fn flag_present(argv: &[OsString], name: &str) -> bool {
    let long = format!("--{name}");
    let with_eq = format!("--{name}=");
    argv.iter().any(|a| {
        let a = a.to_string_lossy();
        a == long || a.starts_with(&with_eq)
    })
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Appends flags from the `--config` file that the command line does not
/// already set.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(sub_name) = argv.get(1).map(|s| s.to_string_lossy().into_owned()) else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(&sub_name) else {
        return Ok(argv);
    };
    let pairs = insilico::ingest::parse_config_file(&path)?;
    let mut out = argv.clone();
    for (key, value) in pairs {
        if key == "config" {
            return Err(UsageError("config files cannot include other config files".into()).into());
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| UsageError(format!("unknown key `{key}` in config file for `{sub_name}`")))?;
        if flag_present(&argv, &key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(UsageError(format!("`{key}` expects true or false, got `{other}`")).into())
                }
            }
        } else {
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("run.conf");
        std::fs::write(&f, "seed = 9\nchains = 2\nno-draws = true\n").unwrap();
        let argv = os(&["insilico", "fit", "--seed", "7", "--config", f.to_str().unwrap()]);
        let merged = merge_config(argv).unwrap();
        let s: Vec<String> = merged.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert!(s.windows(2).any(|w| w == ["--seed", "7"]));
        assert!(!s.iter().any(|a| a == "9"));
        assert!(s.windows(2).any(|w| w == ["--chains", "2"]));
        assert!(s.iter().any(|a| a == "--no-draws"));
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("run.conf");
        std::fs::write(&f, "bogus = 1\n").unwrap();
        let argv = os(&["insilico", "fit", &format!("--config={}", f.display())]);
        let err = merge_config(argv).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
