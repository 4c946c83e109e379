use std::io::Write;

use super::integrate::SolutionPath;
use super::race::RaceTranscript;
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::io("<csv>", std::io::Error::other(e.to_string()))
}

/// Writes `time,member_id,y_level,x` rows for every recorded state.
pub fn write_paths_csv<W: Write>(out: W, members: &[SolutionPath]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["time", "member_id", "y_level", "x"]).map_err(csv_err)?;
    for (id, m) in members.iter().enumerate() {
        for (k, x) in m.states.iter().enumerate() {
            w.write_record([
                m.time(k).to_string(),
                id.to_string(),
                m.y_level.to_string(),
                x.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Writes `level,tau,strip_index,I_lo,I_hi`.
pub fn write_transcript_csv<W: Write>(out: W, transcript: &RaceTranscript) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["level", "tau", "strip_index", "I_lo", "I_hi"]).map_err(csv_err)?;
    for l in &transcript.levels {
        w.write_record([
            l.level.to_string(),
            l.tau.to_string(),
            l.strip_index.to_string(),
            l.lo.to_string(),
            l.hi.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
