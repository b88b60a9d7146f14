use std::collections::BTreeMap;

use super::IoError;

/// Flat `key = value` settings.
pub type KeyValues = BTreeMap<String, String>;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; a key may appear only once.
pub fn parse_key_values(text: &str) -> Result<KeyValues, IoError> {
    let mut out = KeyValues::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let n = i as u64 + 1;
        let (k, v) = line.split_once('=').ok_or_else(|| IoError::Parse {
            line: n,
            message: format!("expected key = value, found `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(IoError::Parse {
                line: n,
                message: "empty key".into(),
            });
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(IoError::Parse {
                line: n,
                message: format!("duplicate key `{k}`"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_lines() {
        let kv = parse_key_values("# lti\ndim = 2\n\na = -1, 2; 0, -1\n").unwrap();
        assert_eq!(kv["dim"], "2");
        assert_eq!(kv["a"], "-1, 2; 0, -1");
        match parse_key_values("dim = 2\noops\n") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_key_values("a=1\na=2").is_err());
    }
}
