//! Line-oriented BVH reader and writer.
//!
//! Accepts the conventional layout: one declaration per line, braces on
//! their own lines, tabs or spaces for indentation. Errors carry 1-based
//! line numbers. The writer indents with tabs and prints numbers in
//! Rust's shortest round-trip form, so its output re-parses to identical
//! values and re-serializes to identical bytes.

use super::{BvhDocument, BvhError, BvhJoint, Channel};
use std::fmt::Write as _;

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines: Vec<(usize, &'a str)> = text
            .lines()
            .enumerate()
            .map(|(i, raw)| (i + 1, raw.trim()))
            .filter(|(_, s)| !s.is_empty())
            .collect();
        let last_line = lines.last().map(|&(n, _)| n).unwrap_or(0);
        Self {
            lines,
            pos: 0,
            last_line,
        }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.peek();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn expect(&mut self, expected: &str) -> Result<usize, BvhError> {
        match self.next() {
            Some((line, text)) if text == expected => Ok(line),
            Some((line, text)) => Err(BvhError::UnexpectedToken {
                line,
                expected: format!("`{expected}`"),
                found: text.to_string(),
            }),
            None => Err(BvhError::UnexpectedToken {
                line: self.last_line + 1,
                expected: format!("`{expected}`"),
                found: "end of file".to_string(),
            }),
        }
    }

    fn require(&mut self, expected: &str) -> Result<(usize, &'a str), BvhError> {
        self.next().ok_or_else(|| BvhError::UnexpectedToken {
            line: self.last_line + 1,
            expected: expected.to_string(),
            found: "end of file".to_string(),
        })
    }
}

fn parse_f64(line: usize, token: &str) -> Result<f64, BvhError> {
    token.parse().map_err(|_| BvhError::NonNumericValue {
        line,
        token: token.to_string(),
    })
}

fn parse_usize(line: usize, token: &str) -> Result<usize, BvhError> {
    token.parse().map_err(|_| BvhError::NonNumericValue {
        line,
        token: token.to_string(),
    })
}

/// Parse the body of a joint: `{`, OFFSET, optional CHANNELS, children, `}`.
/// `name` is `End Site` for end sites, which take no CHANNELS or children.
fn parse_joint_body(cursor: &mut Cursor, name: String) -> Result<BvhJoint, BvhError> {
    let is_end_site = name == "End Site";
    cursor.expect("{")?;

    let (line, text) = cursor.require("OFFSET")?;
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.first() != Some(&"OFFSET") || tokens.len() != 4 {
        return Err(BvhError::UnexpectedToken {
            line,
            expected: "OFFSET with 3 values".to_string(),
            found: text.to_string(),
        });
    }
    let offset = [
        parse_f64(line, tokens[1])?,
        parse_f64(line, tokens[2])?,
        parse_f64(line, tokens[3])?,
    ];

    let mut channels = Vec::new();
    if !is_end_site {
        let (line, text) = cursor.require("CHANNELS")?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.first() != Some(&"CHANNELS") || tokens.len() < 2 {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "CHANNELS".to_string(),
                found: text.to_string(),
            });
        }
        let declared = parse_usize(line, tokens[1])?;
        let names = &tokens[2..];
        if names.len() != declared {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: format!("{declared} channel names"),
                found: format!("{} names", names.len()),
            });
        }
        for token in names {
            let channel = Channel::parse(token).ok_or_else(|| BvhError::UnknownChannel {
                line,
                joint: name.clone(),
                channel: token.to_string(),
            })?;
            channels.push(channel);
        }
    }

    let mut children = Vec::new();
    loop {
        let (line, text) = cursor.require("`}` or child joint")?;
        if text == "}" {
            break;
        }
        if let Some(child_name) = text.strip_prefix("JOINT ") {
            children.push(parse_joint_body(cursor, child_name.trim().to_string())?);
        } else if text == "End Site" {
            if is_end_site {
                return Err(BvhError::UnexpectedToken {
                    line,
                    expected: "`}`".to_string(),
                    found: text.to_string(),
                });
            }
            children.push(parse_joint_body(cursor, "End Site".to_string())?);
        } else {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "`}`, `JOINT <name>`, or `End Site`".to_string(),
                found: text.to_string(),
            });
        }
    }

    Ok(BvhJoint {
        name,
        offset,
        channels,
        children,
    })
}

pub(super) fn parse(text: &str) -> Result<BvhDocument, BvhError> {
    let mut cursor = Cursor::new(text);

    match cursor.next() {
        Some((_, "HIERARCHY")) => {}
        _ => return Err(BvhError::MissingSection("HIERARCHY")),
    }

    let (line, text_line) = cursor.require("ROOT")?;
    let root_name = text_line
        .strip_prefix("ROOT ")
        .ok_or_else(|| BvhError::UnexpectedToken {
            line,
            expected: "`ROOT <name>`".to_string(),
            found: text_line.to_string(),
        })?
        .trim()
        .to_string();
    let root = parse_joint_body(&mut cursor, root_name)?;

    match cursor.next() {
        Some((_, "MOTION")) => {}
        _ => return Err(BvhError::MissingSection("MOTION")),
    }

    let (line, text_line) = cursor.require("Frames:")?;
    let declared = match text_line.strip_prefix("Frames:") {
        Some(rest) => parse_usize(line, rest.trim())?,
        None => {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "`Frames: <count>`".to_string(),
                found: text_line.to_string(),
            })
        }
    };

    let (line, text_line) = cursor.require("Frame Time:")?;
    let frame_time = match text_line.strip_prefix("Frame Time:") {
        Some(rest) => parse_f64(line, rest.trim())?,
        None => {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "`Frame Time: <seconds>`".to_string(),
                found: text_line.to_string(),
            })
        }
    };
    if !(frame_time > 0.0) || !frame_time.is_finite() {
        return Err(BvhError::InvalidFrameTime(frame_time));
    }

    let doc_shell = BvhDocument {
        root,
        frame_time,
        frames: Vec::new(),
    };
    let width = doc_shell.channel_count();

    let mut frames = Vec::new();
    while let Some((line, text_line)) = cursor.next() {
        let mut row = Vec::with_capacity(width);
        for token in text_line.split_whitespace() {
            row.push(parse_f64(line, token)?);
        }
        if row.len() != width {
            return Err(BvhError::ChannelCountMismatch {
                line,
                frame: frames.len(),
                expected: width,
                actual: row.len(),
            });
        }
        frames.push(row);
    }
    if frames.len() != declared {
        return Err(BvhError::FrameCountMismatch {
            declared,
            actual: frames.len(),
        });
    }

    Ok(BvhDocument { frames, ..doc_shell })
}

fn write_joint(out: &mut String, joint: &BvhJoint, depth: usize, is_root: bool) {
    let tab = "\t".repeat(depth);
    if is_root {
        let _ = writeln!(out, "{tab}ROOT {}", joint.name);
    } else if joint.name == "End Site" {
        let _ = writeln!(out, "{tab}End Site");
    } else {
        let _ = writeln!(out, "{tab}JOINT {}", joint.name);
    }
    let _ = writeln!(out, "{tab}{{");
    let _ = writeln!(
        out,
        "{tab}\tOFFSET {} {} {}",
        joint.offset[0], joint.offset[1], joint.offset[2]
    );
    if joint.name != "End Site" {
        let mut line = format!("{tab}\tCHANNELS {}", joint.channels.len());
        for c in &joint.channels {
            line.push(' ');
            line.push_str(c.name());
        }
        let _ = writeln!(out, "{line}");
    }
    for child in &joint.children {
        write_joint(out, child, depth + 1, false);
    }
    let _ = writeln!(out, "{tab}}}");
}

pub(super) fn serialize(doc: &BvhDocument) -> String {
    let mut out = String::new();
    out.push_str("HIERARCHY\n");
    write_joint(&mut out, &doc.root, 0, true);
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", doc.frames.len());
    let _ = writeln!(out, "Frame Time: {}", doc.frame_time);
    for row in &doc.frames {
        let mut line = String::new();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}
