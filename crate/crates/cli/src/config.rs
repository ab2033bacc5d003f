//! `--config` files.
//!
//! Grammar, one setting per line:
//!
//! ```text
//! # comment
//! key = value
//! fit.key = value      # only applies to `fit`
//! ```
//!
//! Keys are long flag names without the leading dashes. An unscoped key
//! applies to every subcommand that has that flag; a scoped key must name
//! a flag of its subcommand. Values from the file are inserted before the
//! command-line flags, so flags given on the command line win.

use anyhow::{anyhow, bail, Context, Result};
use clap::Command;

pub struct Setting {
    pub scope: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {line}: expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            bail!("config line {line}: empty key");
        }
        let (scope, key) = match key.split_once('.') {
            Some((s, k)) => (Some(s.to_string()), k.to_string()),
            None => (None, key.to_string()),
        };
        out.push(Setting { scope, key, value, line });
    }
    Ok(out)
}

fn long_flags(cmd: &Command) -> Vec<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect()
}

/// Rewrites `argv` so that config settings precede the user's flags.
pub fn merge(argv: Vec<String>, root: &Command) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let settings = parse(&text)?;

    let Some(pos) = argv
        .iter()
        .position(|a| root.get_subcommands().any(|s| s.get_name() == a))
    else {
        return Ok(argv);
    };
    let sub_name = argv[pos].clone();
    let sub = root.find_subcommand(&sub_name).expect("subcommand present");
    let own = long_flags(sub);
    let global = long_flags(root);
    let all: Vec<String> = root.get_subcommands().flat_map(long_flags).chain(global.clone()).collect();

    let mut inserted = Vec::new();
    for s in settings {
        if s.key == "config" {
            bail!("config line {}: `config` cannot be set from a config file", s.line);
        }
        match &s.scope {
            Some(scope) => {
                if root.find_subcommand(scope).is_none() {
                    bail!("config line {}: unknown subcommand `{scope}`", s.line);
                }
                if scope != &sub_name {
                    continue;
                }
                if !own.contains(&s.key) {
                    bail!("config line {}: `{scope}` has no flag `--{}`", s.line, s.key);
                }
            }
            None => {
                if !all.contains(&s.key) {
                    bail!("config line {}: unknown key `{}`", s.line, s.key);
                }
                if !own.contains(&s.key) && !global.contains(&s.key) {
                    continue;
                }
            }
        }
        inserted.push(format!("--{}", s.key));
        inserted.push(s.value);
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, inserted);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let s = parse("# c\n\nseed = 7\nfit.learner = \"gbt\"  # trailing\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].key.as_str(), s[0].value.as_str()), ("seed", "7"));
        assert_eq!(s[1].scope.as_deref(), Some("fit"));
        assert_eq!(s[1].value, "gbt");
        assert!(parse("novalue\n").is_err());
    }
}
