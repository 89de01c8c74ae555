//! Per-step episode records and their CSV form.
//!
//! Bot traces use the columns `t,mean,std,reward,bot_1..bot_k,user_1..user_N`;
//! advertising traces use `t,mean,std,reward,cost,budget,ad_location,ad_range`.
//! Numbers are written in shortest round-trip form, so loading a written
//! trace reproduces it exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::env::{StepDetail, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub mean: f64,
    pub std: f64,
    pub reward: f64,
    pub detail: StepDetail,
}

impl From<StepResult> for StepRecord {
    fn from(s: StepResult) -> Self {
        Self {
            t: s.t,
            mean: s.mean,
            std: s.std,
            reward: s.reward,
            detail: s.detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub records: Vec<StepRecord>,
}

impl EpisodeTrace {
    pub fn episode_return(&self) -> f64 {
        self.records.iter().map(|r| r.reward).sum()
    }

    pub fn final_mean(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.mean)
    }

    pub fn final_std(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.std)
    }

    /// Final user opinions, available for bot traces only.
    pub fn final_users(&self) -> Option<&[f64]> {
        match &self.records.last()?.detail {
            StepDetail::Bot { users, .. } => Some(users),
            StepDetail::Advertising { .. } => None,
        }
    }

    pub fn total_cost(&self) -> f64 {
        self.records
            .iter()
            .map(|r| match r.detail {
                StepDetail::Advertising { cost, .. } => cost,
                StepDetail::Bot { .. } => 0.0,
            })
            .sum()
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "mean", "std", "reward"].map(String::from).to_vec();
        match self.records.first().map(|r| &r.detail) {
            Some(StepDetail::Bot { bots, users }) => {
                h.extend((1..=bots.len()).map(|i| format!("bot_{i}")));
                h.extend((1..=users.len()).map(|i| format!("user_{i}")));
            }
            _ => h.extend(["cost", "budget", "ad_location", "ad_range"].map(String::from)),
        }
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::TraceParse {
            line: 0,
            message: e.to_string(),
        };
        w.write_record(self.header()).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![
                r.t.to_string(),
                r.mean.to_string(),
                r.std.to_string(),
                r.reward.to_string(),
            ];
            match &r.detail {
                StepDetail::Bot { bots, users } => {
                    row.extend(bots.iter().chain(users).map(f64::to_string));
                }
                StepDetail::Advertising {
                    cost,
                    budget,
                    location,
                    range,
                } => {
                    row.extend([cost, budget, location, range].map(f64::to_string));
                }
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::TraceParse {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(reader);
        let mut rows = rdr.records();
        let header = match rows.next() {
            Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
            None => return Err(parse_err(1, "missing header".into())),
        };
        let layout = Layout::from_header(&header)?;
        let mut records = Vec::new();
        for row in rows {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            if row.len() != header.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", header.len(), row.len()),
                ));
            }
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("invalid number {:?}", &row[i])))
            };
            let t = row[0]
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("invalid time-step {:?}", &row[0])))?;
            let detail = match layout {
                Layout::Bot { bots } => StepDetail::Bot {
                    bots: (4..4 + bots).map(num).collect::<Result<_>>()?,
                    users: (4 + bots..row.len()).map(num).collect::<Result<_>>()?,
                },
                Layout::Advertising => StepDetail::Advertising {
                    cost: num(4)?,
                    budget: num(5)?,
                    location: num(6)?,
                    range: num(7)?,
                },
            };
            records.push(StepRecord {
                t,
                mean: num(1)?,
                std: num(2)?,
                reward: num(3)?,
                detail,
            });
        }
        Ok(Self { records })
    }
}

#[derive(Debug, Clone, Copy)]
enum Layout {
    Bot { bots: usize },
    Advertising,
}

impl Layout {
    fn from_header(h: &csv::StringRecord) -> Result<Self> {
        let cols: Vec<&str> = h.iter().collect();
        if cols.len() < 4 || cols[..4] != ["t", "mean", "std", "reward"] {
            return Err(parse_err(
                1,
                "header must start with t,mean,std,reward".into(),
            ));
        }
        let rest = &cols[4..];
        if rest == ["cost", "budget", "ad_location", "ad_range"] {
            return Ok(Layout::Advertising);
        }
        let bots = rest.iter().take_while(|c| c.starts_with("bot_")).count();
        let numbered = |prefix: &str, cols: &[&str]| {
            cols.iter()
                .enumerate()
                .all(|(i, c)| *c == format!("{prefix}{}", i + 1))
        };
        if rest.is_empty() || !numbered("bot_", &rest[..bots]) || !numbered("user_", &rest[bots..])
        {
            return Err(parse_err(
                1,
                format!("unrecognized trace columns: {}", rest.join(",")),
            ));
        }
        Ok(Layout::Bot { bots })
    }
}

fn parse_err(line: usize, message: String) -> Error {
    Error::TraceParse { line, message }
}

pub fn emit_trace(trace: &EpisodeTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    trace.write_csv(std::io::BufWriter::new(file))
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<EpisodeTrace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    EpisodeTrace::read_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1.0f64..1.0,
            any::<f64>().prop_filter("finite", |x| x.is_finite())
        ]
    }

    fn bot_trace() -> impl Strategy<Value = EpisodeTrace> {
        (1usize..4, 1usize..6, 1usize..8).prop_flat_map(|(k, n, len)| {
            prop::collection::vec(
                (
                    finite(),
                    finite(),
                    finite(),
                    prop::collection::vec(finite(), k),
                    prop::collection::vec(finite(), n),
                ),
                len,
            )
            .prop_map(|rows| EpisodeTrace {
                records: rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (mean, std, reward, bots, users))| StepRecord {
                        t: i + 1,
                        mean,
                        std,
                        reward,
                        detail: StepDetail::Bot { bots, users },
                    })
                    .collect(),
            })
        })
    }

    fn adv_trace() -> impl Strategy<Value = EpisodeTrace> {
        prop::collection::vec(
            (
                finite(),
                finite(),
                finite(),
                finite(),
                finite(),
                finite(),
                finite(),
            ),
            1..10,
        )
        .prop_map(|rows| EpisodeTrace {
            records: rows
                .into_iter()
                .enumerate()
                .map(
                    |(i, (mean, std, reward, cost, budget, location, range))| StepRecord {
                        t: i + 1,
                        mean,
                        std,
                        reward,
                        detail: StepDetail::Advertising {
                            cost,
                            budget,
                            location,
                            range,
                        },
                    },
                )
                .collect(),
        })
    }

    fn round_trip(trace: &EpisodeTrace) -> EpisodeTrace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        EpisodeTrace::read_csv(&buf[..]).unwrap()
    }

    proptest! {
        #[test]
        fn bot_round_trip(trace in bot_trace()) {
            prop_assert_eq!(round_trip(&trace), trace);
        }

        #[test]
        fn adv_round_trip(trace in adv_trace()) {
            prop_assert_eq!(round_trip(&trace), trace);
        }
    }

    #[test]
    fn bot_header_layout() {
        let trace = EpisodeTrace {
            records: vec![StepRecord {
                t: 1,
                mean: 0.5,
                std: 0.25,
                reward: 0.01,
                detail: StepDetail::Bot {
                    bots: vec![1.0, 0.5],
                    users: vec![0.25, 0.75],
                },
            }],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,mean,std,reward,bot_1,bot_2,user_1,user_2\n1,0.5,0.25,0.01,1,0.5,0.25,0.75\n"
        );
    }

    #[test]
    fn adv_header_layout() {
        let trace = EpisodeTrace {
            records: vec![StepRecord {
                t: 3,
                mean: -0.5,
                std: 0.0,
                reward: 0.0,
                detail: StepDetail::Advertising {
                    cost: 0.5,
                    budget: 1.5,
                    location: 0.2,
                    range: 0.0,
                },
            }],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,mean,std,reward,cost,budget,ad_location,ad_range\n3,-0.5,0,0,0.5,1.5,0.2,0\n"
        );
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = "t,mean,std,reward,cost,budget,ad_location,ad_range\n1,0,0,0,0,1,0,0\n2,0,0,oops,0,1,0,0\n";
        match EpisodeTrace::read_csv(text.as_bytes()) {
            Err(Error::TraceParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let short = "t,mean,std,reward,cost,budget,ad_location,ad_range\n1,0,0\n";
        assert!(matches!(
            EpisodeTrace::read_csv(short.as_bytes()),
            Err(Error::TraceParse { line: 2, .. })
        ));
        let bad_header = "t,mean,reward\n";
        assert!(matches!(
            EpisodeTrace::read_csv(bad_header.as_bytes()),
            Err(Error::TraceParse { line: 1, .. })
        ));
        let gap = "t,mean,std,reward,bot_1,bot_3\n";
        assert!(EpisodeTrace::read_csv(gap.as_bytes()).is_err());
        assert!(EpisodeTrace::read_csv("".as_bytes()).is_err());
    }

    #[test]
    fn aggregates() {
        let trace = EpisodeTrace {
            records: (1..=4)
                .map(|t| StepRecord {
                    t,
                    mean: t as f64 / 10.0,
                    std: 0.1,
                    reward: 0.25,
                    detail: StepDetail::Advertising {
                        cost: 0.5,
                        budget: 2.0 - 0.5 * t as f64,
                        location: 0.0,
                        range: 0.0,
                    },
                })
                .collect(),
        };
        assert_eq!(trace.episode_return(), 1.0);
        assert_eq!(trace.final_mean(), 0.4);
        assert_eq!(trace.total_cost(), 2.0);
        assert!(trace.final_users().is_none());
    }
}
