//! Line-delimited JSON event logs.
//!
//! The first line is the header; every following line is one independent
//! record. Readers verify the format version and the config hash before
//! yielding records, and never hold more than one line in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sequence::{config_hash, EventLog, LogHeader, LogRecord, FORMAT_VERSION};

pub struct LogWriter<W: Write> {
    out: W,
    records: u64,
}

impl<W: Write> LogWriter<W> {
    pub fn new(mut out: W, header: &LogHeader) -> Result<Self> {
        write_line(&mut out, &LogRecord::Header(header.clone()))?;
        Ok(LogWriter { out, records: 0 })
    }

    pub fn write(&mut self, record: &LogRecord) -> Result<()> {
        if matches!(record, LogRecord::Header(_)) {
            return Err(Error::InvalidArgument("a log has exactly one header".into()));
        }
        write_line(&mut self.out, record)?;
        self.records += 1;
        Ok(())
    }

    /// Records written after the header.
    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn write_line<W: Write>(out: &mut W, record: &LogRecord) -> Result<()> {
    serde_json::to_writer(&mut *out, record)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub struct LogReader<R: BufRead> {
    input: R,
    header: LogHeader,
    line: usize,
    buf: String,
}

impl<R: BufRead> LogReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut buf = String::new();
        if input.read_line(&mut buf)? == 0 {
            return Err(Error::MalformedLog {
                line: 1,
                message: "empty log".into(),
            });
        }
        let header = match parse_line(&buf, 1)? {
            LogRecord::Header(h) => h,
            _ => {
                return Err(Error::MalformedLog {
                    line: 1,
                    message: "first record is not a header".into(),
                })
            }
        };
        if header.format_version != FORMAT_VERSION {
            return Err(Error::MalformedLog {
                line: 1,
                message: format!(
                    "unsupported format version {} (expected {FORMAT_VERSION})",
                    header.format_version
                ),
            });
        }
        if config_hash(&header.config) != header.config_hash {
            return Err(Error::MalformedLog {
                line: 1,
                message: "config hash does not match the embedded config".into(),
            });
        }
        Ok(LogReader {
            input,
            header,
            line: 1,
            buf,
        })
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    fn next_record(&mut self) -> Result<Option<LogRecord>> {
        loop {
            self.buf.clear();
            if self.input.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            if self.buf.trim().is_empty() {
                continue;
            }
            let r = parse_line(&self.buf, self.line)?;
            if matches!(r, LogRecord::Header(_)) {
                return Err(Error::MalformedLog {
                    line: self.line,
                    message: "second header".into(),
                });
            }
            return Ok(Some(r));
        }
    }
}

impl<R: BufRead> Iterator for LogReader<R> {
    type Item = Result<LogRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

fn parse_line(text: &str, line: usize) -> Result<LogRecord> {
    serde_json::from_str(text.trim_end()).map_err(|e| Error::MalformedLog {
        line,
        message: e.to_string(),
    })
}

pub fn open_log(path: &Path) -> Result<LogReader<BufReader<File>>> {
    LogReader::new(BufReader::new(File::open(path)?))
}

pub fn read_log(path: &Path) -> Result<EventLog> {
    let reader = open_log(path)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok(EventLog { header, records })
}

pub fn write_log_to<W: Write>(out: W, log: &EventLog) -> Result<W> {
    let mut w = LogWriter::new(out, &log.header)?;
    for r in &log.records {
        w.write(r)?;
    }
    w.finish()
}

pub fn write_log(path: &Path, log: &EventLog) -> Result<()> {
    write_log_to(BufWriter::new(File::create(path)?), log)?;
    Ok(())
}
