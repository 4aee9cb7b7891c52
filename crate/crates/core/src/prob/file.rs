use serde::{Deserialize, Serialize};

use super::{Channel, Pmf};
use crate::error::{Error, Result};

/// On-disk channel description.
///
/// ```json
/// {"name": "bsc", "inputs": 2, "outputs": 2, "rows": [["0.9", "0.1"], ["0.1", "0.9"]]}
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
    pub rows: Vec<Vec<String>>,
}

impl ChannelFile {
    pub fn parse(text: &str) -> Result<Channel> {
        let f: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        f.into_channel()
    }

    pub fn into_channel(self) -> Result<Channel> {
        if self.rows.len() != self.inputs {
            return Err(Error::InvalidChannel(format!("{} rows for {} inputs", self.rows.len(), self.inputs)));
        }
        let mut rows = Vec::with_capacity(self.inputs);
        for row in &self.rows {
            if row.len() != self.outputs {
                return Err(Error::InvalidChannel(format!("row has {} entries, expected {}", row.len(), self.outputs)));
            }
            let parsed = row
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad probability {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(parsed);
        }
        Channel::named(self.name, rows)
    }

    pub fn from_channel(w: &Channel) -> Self {
        ChannelFile {
            name: w.name().to_string(),
            inputs: w.inputs(),
            outputs: w.outputs(),
            rows: w.rows().iter().map(|r| r.probs().iter().map(|p| format!("{p}")).collect()).collect(),
        }
    }
}

/// On-disk pmf: `{"probs": ["0.5", "0.5"]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PmfFile {
    pub probs: Vec<String>,
}

impl PmfFile {
    pub fn parse(text: &str) -> Result<Pmf> {
        let f: PmfFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let p = f
            .probs
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad probability {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Pmf::new(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = r#"{"name":"b","inputs":2,"outputs":2,"rows":[["0.9","0.1"],["0.1","0.9"]]}"#;
        let w = ChannelFile::parse(text).unwrap();
        assert_eq!(w.get(1, 1), 0.9);
        let back = serde_json::to_string(&ChannelFile::from_channel(&w)).unwrap();
        assert_eq!(ChannelFile::parse(&back).unwrap(), w);
    }

    #[test]
    fn rejects_bad_rows() {
        let text = r#"{"name":"b","inputs":2,"outputs":2,"rows":[["0.9","0.2"],["0.1","0.9"]]}"#;
        assert!(matches!(ChannelFile::parse(text), Err(Error::InvalidChannel(_))));
        let text = r#"{"name":"b","inputs":2,"outputs":2,"rows":[["x","0.2"],["0.1","0.9"]]}"#;
        assert!(matches!(ChannelFile::parse(text), Err(Error::Parse(_))));
    }
}
