use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    /// In-place multiply-accumulate on a valid operand pair.
    Mac { product: i64 },
    /// Last in-place accumulate of a tier's slice. `partial` is the tier's
    /// own contribution, before anything from the tier above is added.
    LocalDone { partial: i64 },
    /// Partial sum from the tier above folded into the final accumulate.
    Merge { incoming: i64 },
    /// Stand-alone cross-tier addition (no multiply).
    Reduce { incoming: i64 },
    /// Partial sum handed to the tier below.
    SendDown { value: i64 },
    /// Finished output leaving the bottom tier.
    Drain { value: i64 },
}

impl TraceEvent {
    fn parts(&self) -> (&'static str, i64) {
        match *self {
            TraceEvent::Mac { product } => ("mac", product),
            TraceEvent::LocalDone { partial } => ("local_done", partial),
            TraceEvent::Merge { incoming } => ("merge", incoming),
            TraceEvent::Reduce { incoming } => ("reduce", incoming),
            TraceEvent::SendDown { value } => ("send_down", value),
            TraceEvent::Drain { value } => ("drain", value),
        }
    }
}

/// One simulator event. `row`/`col` are array coordinates; `out_row` and
/// `out_col` locate the output element the cell is working on this fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub fold: u64,
    pub tier: usize,
    pub row: usize,
    pub col: usize,
    pub out_row: usize,
    pub out_col: usize,
    pub event: TraceEvent,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, value) = self.event.parts();
        write!(
            f,
            "{} {} {} {} {} {}",
            self.cycle, self.tier, self.row, self.col, name, value
        )
    }
}

pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);

    /// Cheap check so the engine can skip building records nobody reads.
    fn enabled(&self) -> bool {
        true
    }
}

pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRecord) {}

    fn enabled(&self) -> bool {
        false
    }
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(*rec);
    }
}

/// Line-oriented dump: `cycle tier row col event value`.
pub struct TextTrace<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> TextTrace<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "# cycle tier row col event value")?;
        Ok(Self { out, error: None })
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for TextTrace<W> {
    fn record(&mut self, rec: &TraceRecord) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{rec}") {
                self.error = Some(e);
            }
        }
    }
}
