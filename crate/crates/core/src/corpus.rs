//! OLID/SOLID-style corpora: tweets with the three-level label hierarchy,
//! TSV loading and serialization, weak labels and class distributions.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Level of the annotation hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// Offensive or not.
    A,
    /// Targeted or untargeted insult.
    B,
    /// Target type.
    C,
}

impl Level {
    /// The classes of this level in canonical order.
    pub fn classes(self) -> &'static [Label] {
        match self {
            Level::A => &[Label::Not, Label::Off],
            Level::B => &[Label::Tin, Label::Unt],
            Level::C => &[Label::Ind, Label::Grp, Label::Oth],
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Level::A),
            "B" | "b" => Ok(Level::B),
            "C" | "c" => Ok(Level::C),
            other => Err(Error::Contract(format!("unknown level `{other}`"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::A => "A",
            Level::B => "B",
            Level::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Not,
    Off,
    Tin,
    Unt,
    Ind,
    Grp,
    Oth,
}

impl Label {
    pub const ALL: [Label; 7] = [
        Label::Not,
        Label::Off,
        Label::Tin,
        Label::Unt,
        Label::Ind,
        Label::Grp,
        Label::Oth,
    ];

    pub fn level(self) -> Level {
        match self {
            Label::Not | Label::Off => Level::A,
            Label::Tin | Label::Unt => Level::B,
            Label::Ind | Label::Grp | Label::Oth => Level::C,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Not => "NOT",
            Label::Off => "OFF",
            Label::Tin => "TIN",
            Label::Unt => "UNT",
            Label::Ind => "IND",
            Label::Grp => "GRP",
            Label::Oth => "OTH",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Contract(format!("unknown label `{s}`")))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A desensitized post. Usernames and links appear as `@USER` and `URL`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub label_a: Option<Label>,
    pub label_b: Option<Label>,
    pub label_c: Option<Label>,
}

impl Tweet {
    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>) -> Self {
        Tweet {
            id: id.into(),
            text: text.into(),
            label_a: None,
            label_b: None,
            label_c: None,
        }
    }

    /// Builds a tweet carrying `label` together with the ancestors the
    /// hierarchy implies (`GRP` implies `OFF`/`TIN`, and so on).
    pub fn with_label(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        let mut t = Tweet::unlabeled(id, text);
        t.set_label(label);
        t
    }

    pub fn set_label(&mut self, label: Label) {
        match label.level() {
            Level::A => self.label_a = Some(label),
            Level::B => {
                self.label_a = Some(Label::Off);
                self.label_b = Some(label);
            }
            Level::C => {
                self.label_a = Some(Label::Off);
                self.label_b = Some(Label::Tin);
                self.label_c = Some(label);
            }
        }
    }

    pub fn label(&self, level: Level) -> Option<Label> {
        match level {
            Level::A => self.label_a,
            Level::B => self.label_b,
            Level::C => self.label_c,
        }
    }

    fn hierarchy_ok(&self) -> bool {
        let b_ok = self.label_b.is_none() || self.label_a == Some(Label::Off);
        let c_ok = self.label_c.is_none() || self.label_b == Some(Label::Tin);
        b_ok && c_ok
    }
}

/// Column layout of a corpus TSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `id  tweet  subtask_a  subtask_b  subtask_c`
    OlidLabeled,
    /// `id  tweet`
    TextOnly,
}

impl Schema {
    fn header(self) -> &'static [&'static str] {
        match self {
            Schema::OlidLabeled => &["id", "tweet", "subtask_a", "subtask_b", "subtask_c"],
            Schema::TextOnly => &["id", "tweet"],
        }
    }

    /// Guesses the schema from a header line.
    pub fn detect(header: &str) -> Option<Schema> {
        let header = header.trim_end_matches('\r');
        [Schema::OlidLabeled, Schema::TextOnly]
            .into_iter()
            .find(|s| header == s.header().join("\t"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
    /// Weak-labeled data; never used for evaluation.
    Pool,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "pool" => Ok(Split::Pool),
            other => Err(Error::Contract(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub tweets: Vec<Tweet>,
    pub language: String,
    pub split: Split,
    pub schema: Schema,
}

impl Corpus {
    pub fn new(tweets: Vec<Tweet>, schema: Schema) -> Result<Self> {
        let corpus = Corpus {
            tweets,
            language: "und".to_string(),
            split: Split::Train,
            schema,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Parses a TSV corpus. LF and CRLF line endings are accepted; the
    /// literal `NULL` marks an absent label.
    pub fn load<R: Read>(mut source: R, schema: Schema) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        let text = String::from_utf8(bytes)
            .map_err(|e| Error::parse(0, format!("input is not UTF-8: {e}")))?;

        let mut lines = text.split('\n').enumerate();
        let header = match lines.next() {
            Some((_, h)) if !(h.is_empty() && text.is_empty()) => h.trim_end_matches('\r'),
            _ => return Err(Error::parse(1, "missing header row")),
        };
        let expected = schema.header().join("\t");
        if header != expected {
            return Err(Error::parse(
                1,
                format!("bad header `{header}`, expected `{expected}`"),
            ));
        }

        let ncols = schema.header().len();
        let mut tweets = Vec::new();
        let mut rows = lines.peekable();
        while let Some((idx, raw)) = rows.next() {
            let line_no = idx + 1;
            if raw.is_empty() && rows.peek().is_none() {
                break; // trailing newline
            }
            let row = raw.strip_suffix('\r').unwrap_or(raw);
            let fields: Vec<&str> = row.split('\t').collect();
            if fields.len() != ncols {
                return Err(Error::parse(
                    line_no,
                    format!("expected {ncols} columns, found {}", fields.len()),
                ));
            }
            let mut tweet = Tweet::unlabeled(fields[0], fields[1]);
            if schema == Schema::OlidLabeled {
                tweet.label_a = parse_label(fields[2], Level::A, line_no)?;
                tweet.label_b = parse_label(fields[3], Level::B, line_no)?;
                tweet.label_c = parse_label(fields[4], Level::C, line_no)?;
            }
            tweets.push(tweet);
        }

        Corpus::new(tweets, schema)
    }

    /// Checks id uniqueness, non-empty fields and the label hierarchy.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.tweets.len());
        let mut duplicates = Vec::new();
        let mut empty = Vec::new();
        let mut broken = Vec::new();
        let mut unwritable = Vec::new();
        for (i, t) in self.tweets.iter().enumerate() {
            if t.id.is_empty() || t.text.is_empty() {
                empty.push(format!("row {}", i + 1));
            }
            if [&t.id, &t.text].iter().any(|f| f.contains(['\t', '\n', '\r'])) {
                unwritable.push(format!("row {}", i + 1));
            }
            if !seen.insert(t.id.as_str()) {
                duplicates.push(t.id.clone());
            }
            if !t.hierarchy_ok() {
                broken.push(t.id.clone());
            }
        }
        let mut problems = Vec::new();
        if !empty.is_empty() {
            problems.push(format!("empty id or text: {}", empty.join(", ")));
        }
        if !unwritable.is_empty() {
            problems.push(format!("tab or line break inside a field: {}", unwritable.join(", ")));
        }
        if !duplicates.is_empty() {
            problems.push(format!("duplicate ids: {}", duplicates.join(", ")));
        }
        if !broken.is_empty() {
            problems.push(format!("hierarchy violations: {}", broken.join(", ")));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }

    /// Writes the corpus in its schema's TSV layout with LF line endings.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.schema.header().join("\t"))?;
        for t in &self.tweets {
            match self.schema {
                Schema::TextOnly => writeln!(out, "{}\t{}", t.id, t.text)?,
                Schema::OlidLabeled => writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    t.id,
                    t.text,
                    label_field(t.label_a),
                    label_field(t.label_b),
                    label_field(t.label_c)
                )?,
            }
        }
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("corpus text is UTF-8")
    }

    pub fn class_distribution(&self, level: Level) -> Distribution {
        let mut counts: Vec<(Label, usize)> = level.classes().iter().map(|&l| (l, 0)).collect();
        let mut unlabeled = 0;
        for t in &self.tweets {
            match t.label(level) {
                Some(label) => {
                    if let Some(slot) = counts.iter_mut().find(|(l, _)| *l == label) {
                        slot.1 += 1;
                    }
                }
                None => unlabeled += 1,
            }
        }
        Distribution {
            level,
            counts,
            unlabeled,
        }
    }
}

fn parse_label(field: &str, level: Level, line: usize) -> Result<Option<Label>> {
    match field {
        "NULL" => Ok(None),
        "" => Err(Error::parse(line, "empty label field (use NULL)")),
        s => {
            let label: Label = s.parse().map_err(|_| Error::parse(line, format!("unknown label `{s}`")))?;
            if label.level() != level {
                return Err(Error::parse(
                    line,
                    format!("label `{s}` does not belong to level {level}"),
                ));
            }
            Ok(Some(label))
        }
    }
}

fn label_field(label: Option<Label>) -> &'static str {
    label.map_or("NULL", Label::as_str)
}

/// Per-class counts at one level, in the level's canonical class order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    pub level: Level,
    pub counts: Vec<(Label, usize)>,
    /// Tweets carrying no label at this level.
    pub unlabeled: usize,
}

impl Distribution {
    pub fn get(&self, label: Label) -> usize {
        self.counts
            .iter()
            .find(|(l, _)| *l == label)
            .map_or(0, |(_, n)| *n)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|(_, n)| n).sum()
    }
}

/// Distant-supervision annotation for one pool instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakLabel {
    /// Average model confidence that the instance belongs to its class.
    pub confidence: f64,
    /// Standard deviation of that confidence.
    pub std: f64,
}

/// Reads `id  confidence  std` rows. A leading header row whose first
/// column is `id` is skipped.
pub fn load_weak_labels<R: Read>(mut source: R) -> Result<HashMap<String, WeakLabel>> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(0, format!("unreadable weak-label input: {e}")))?;

    let mut out = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split('\t').collect();
        if idx == 0 && fields.first() == Some(&"id") {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 columns, found {}", fields.len()),
            ));
        }
        let number = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("bad {what} `{s}`")))
        };
        let confidence = number(fields[1], "confidence")?;
        let std = number(fields[2], "std")?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Validation(format!(
                "line {line_no}: confidence {confidence} outside [0, 1] for id {}",
                fields[0]
            )));
        }
        if std < 0.0 {
            return Err(Error::Validation(format!(
                "line {line_no}: negative std {std} for id {}",
                fields[0]
            )));
        }
        let id = fields[0].to_string();
        if out.contains_key(&id) {
            return Err(Error::Validation(format!("duplicate weak-label id {id}")));
        }
        out.insert(id, WeakLabel { confidence, std });
    }
    Ok(out)
}
