//! Line scanner shared by the plain-text config parsers (robot profiles,
//! joint mappings, pipeline config).
//!
//! The grammar is the same everywhere: `#` starts a comment, blank lines are
//! skipped, and a significant line is a keyword followed by whitespace-
//! separated fields, some of which may be `key=value` pairs.

/// One significant config line: keyword, positional fields, key=value pairs.
#[derive(Debug, Clone)]
pub struct CfgLine {
    pub line_no: usize,
    pub keyword: String,
    pub positional: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

impl CfgLine {
    pub fn value(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn f64_value(&self, key: &str) -> Result<f64, String> {
        let raw = self
            .value(key)
            .ok_or_else(|| format!("missing `{key}=` field"))?;
        raw.parse::<f64>()
            .map_err(|_| format!("`{key}` is not a number: `{raw}`"))
    }
}

/// Split config text into significant lines. Tabs and CRLF are tolerated.
pub fn scan(text: &str) -> Vec<CfgLine> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or_default().to_string();
        let mut positional = Vec::new();
        let mut pairs = Vec::new();
        for tok in tokens {
            match tok.split_once('=') {
                Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
                None => positional.push(tok.to_string()),
            }
        }
        out.push(CfgLine {
            line_no: idx + 1,
            keyword,
            positional,
            pairs,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scans_keywords_positionals_and_pairs() {
        let lines = scan("# header\n\njoint HeadYaw min=-1.0 max=1.0\t vmax=7\r\nneutral LWristYaw 0.5\n");
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].keyword, "joint");
        assert_eq!(lines[0].positional, vec!["HeadYaw"]);
        assert_eq!(lines[0].f64_value("min").unwrap(), -1.0);
        assert_eq!(lines[0].f64_value("vmax").unwrap(), 7.0);
        assert_eq!(lines[0].line_no, 3);
        assert_eq!(lines[1].keyword, "neutral");
        assert_eq!(lines[1].positional, vec!["LWristYaw", "0.5"]);
    }

    #[test]
    fn trailing_comment_is_stripped() {
        let lines = scan("profile demo # twelve upper-body joints");
        assert_eq!(lines[0].positional, vec!["demo"]);
    }

    #[test]
    fn missing_key_reports_name() {
        let lines = scan("joint A min=0");
        let err = lines[0].f64_value("max").unwrap_err();
        assert!(err.contains("max"));
    }
}
