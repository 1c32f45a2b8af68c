use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::decision::{EventFlags, Mode};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "t,d_veh,v_veh,a_veh,d_ped,v_ped,i_raw,i_eff,mode,ped_in_ca,ped_in_nz,ped_gone,ped_crossed,veh_gone";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub d_veh: f64,
    pub v_veh: f64,
    pub a_veh: f64,
    pub d_ped: f64,
    pub v_ped: f64,
    pub i_raw: f64,
    pub i_eff: f64,
    pub mode: Mode,
    pub flags: EventFlags,
}

impl TraceRecord {
    /// Euclidean vehicle–pedestrian separation.
    pub fn separation(&self) -> f64 {
        self.d_ped.hypot(self.d_veh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    /// The interaction loop was still running at `t_max`: potential deadlock.
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dt: f64,
    pub records: Vec<TraceRecord>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn is_timeout(&self) -> bool {
        self.outcome == Outcome::Timeout
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(&self.records, out)
    }
}

fn b(x: bool) -> u8 {
    x as u8
}

pub fn write_csv<W: Write>(records: &[TraceRecord], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let f = &r.flags;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.d_veh,
            r.v_veh,
            r.a_veh,
            r.d_ped,
            r.v_ped,
            r.i_raw,
            r.i_eff,
            r.mode.as_str(),
            b(f.ped_in_collision_area),
            b(f.ped_close_to_road),
            b(f.ped_gone_through),
            b(f.ped_crossed),
            b(f.veh_gone_through),
        )?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected trace header {:?}", header.join(",")),
        });
    }
    let mut records = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("column {i}: {:?} is not a number", &row[i]),
            })
        };
        let flag = |i: usize| -> Result<bool> {
            match &row[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse { line, msg: format!("bad flag {other:?}") }),
            }
        };
        let mode = row[8].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad mode {:?}", &row[8]),
        })?;
        records.push(TraceRecord {
            t: num(0)?,
            d_veh: num(1)?,
            v_veh: num(2)?,
            a_veh: num(3)?,
            d_ped: num(4)?,
            v_ped: num(5)?,
            i_raw: num(6)?,
            i_eff: num(7)?,
            mode,
            flags: EventFlags {
                ped_in_collision_area: flag(9)?,
                ped_close_to_road: flag(10)?,
                ped_gone_through: flag(11)?,
                ped_crossed: flag(12)?,
                veh_gone_through: flag(13)?,
            },
        });
    }
    Ok(records)
}

/// Message shape shared by the live service stream and trace replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub t: f64,
    pub veh: VehPart,
    pub ped: PedPart,
    pub mode: Mode,
    pub flags: FlagPart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehPart {
    pub d: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedPart {
    pub d: f64,
    pub v: f64,
    pub i_raw: f64,
    pub i_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlagPart {
    pub ped_in_ca: bool,
    pub ped_in_nz: bool,
    pub ped_gone: bool,
    pub ped_crossed: bool,
    pub veh_gone: bool,
}

impl From<&TraceRecord> for StateMessage {
    fn from(r: &TraceRecord) -> Self {
        Self {
            kind: "state".into(),
            t: r.t,
            veh: VehPart { d: r.d_veh, v: r.v_veh, a: r.a_veh },
            ped: PedPart { d: r.d_ped, v: r.v_ped, i_raw: r.i_raw, i_eff: r.i_eff },
            mode: r.mode,
            flags: FlagPart {
                ped_in_ca: r.flags.ped_in_collision_area,
                ped_in_nz: r.flags.ped_close_to_road,
                ped_gone: r.flags.ped_gone_through,
                ped_crossed: r.flags.ped_crossed,
                veh_gone: r.flags.veh_gone_through,
            },
        }
    }
}

pub fn write_jsonl<W: Write>(records: &[TraceRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(&StateMessage::from(r)).expect("state serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
