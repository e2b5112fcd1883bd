//! MOTChallenge CSV reading and writing.
//!
//! Line layout: `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`.
//! Trailing columns after the box may be omitted on read.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Detection};
use crate::tracker::TrackOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    /// Ids ignored, confidence read and checked to lie in [0, 1].
    Detections,
    /// Ids read, confidence treated as a validity flag (rows with 0 dropped).
    GroundTruth,
}

/// One row of a sequence file. Detections carry id -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub id: i64,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceMeta {
    pub name: String,
    pub frame_count: u32,
    pub image_width: Option<u32>,
    pub image_height: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceData {
    pub frames: BTreeMap<u32, Vec<Record>>,
    pub meta: SequenceMeta,
}

impl SequenceData {
    pub fn push(&mut self, frame: u32, rec: Record) {
        self.frames.entry(frame).or_default().push(rec);
        self.meta.frame_count = self.meta.frame_count.max(frame);
    }

    pub fn is_empty(&self) -> bool {
        self.frames.values().all(Vec::is_empty)
    }

    /// Highest frame index covered, from the metadata or the rows.
    pub fn last_frame(&self) -> u32 {
        let rows = self.frames.keys().next_back().copied().unwrap_or(0);
        rows.max(self.meta.frame_count)
    }

    pub fn records(&self, frame: u32) -> &[Record] {
        self.frames.get(&frame).map_or(&[], Vec::as_slice)
    }

    pub fn detections(&self, frame: u32) -> Vec<Detection> {
        self.records(frame)
            .iter()
            .map(|r| Detection {
                frame,
                bbox: r.bbox,
                confidence: r.confidence,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    /// Distinct ids in ascending order.
    pub fn ids(&self) -> Vec<i64> {
        let mut ids: Vec<i64> = self.frames.values().flatten().map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn from_results(results: &[TrackOutput]) -> Self {
        let mut s = SequenceData::default();
        for r in results {
            s.push(
                r.frame,
                Record {
                    id: r.id as i64,
                    bbox: r.bbox,
                    confidence: 1.0,
                },
            );
        }
        s
    }

    /// Rows as tracker outputs, sorted by frame then id.
    pub fn to_results(&self) -> Vec<TrackOutput> {
        let mut out: Vec<TrackOutput> = self
            .frames
            .iter()
            .flat_map(|(&frame, recs)| {
                recs.iter().map(move |r| TrackOutput {
                    frame,
                    id: r.id.max(0) as u64,
                    bbox: r.bbox,
                })
            })
            .collect();
        out.sort_by_key(|o| (o.frame, o.id));
        out
    }

    /// Same rows with ids replaced by -1.
    pub fn strip_ids(&self) -> Self {
        let mut s = self.clone();
        for r in s.frames.values_mut().flatten() {
            r.id = -1;
        }
        s
    }
}

fn field<'a>(fields: &[&'a str], col: usize) -> Option<&'a str> {
    fields.get(col).map(|s| s.trim())
}

fn number(text: &str, line: usize, col: usize) -> Result<f64> {
    let v: f64 = text.parse().map_err(|_| Error::Parse {
        line,
        column: col + 1,
        msg: format!("`{text}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            column: col + 1,
            msg: format!("`{text}` is not finite"),
        });
    }
    Ok(v)
}

fn integer(text: &str, line: usize, col: usize) -> Result<i64> {
    let v = number(text, line, col)?;
    if v.fract() != 0.0 || v.abs() > 9.0e15 {
        return Err(Error::Parse {
            line,
            column: col + 1,
            msg: format!("`{text}` is not an integer"),
        });
    }
    Ok(v as i64)
}

pub fn parse_mot_file(text: &str, kind: FileKind) -> Result<SequenceData> {
    let mut data = SequenceData::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() < 6 || fields.len() > 10 {
            return Err(Error::Parse {
                line,
                column: fields.len().min(10),
                msg: format!("expected 6 to 10 comma-separated fields, found {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 10];
        for (col, f) in fields.iter().enumerate() {
            vals[col] = number(f.trim(), line, col)?;
        }
        let frame = integer(field(&fields, 0).unwrap_or_default(), line, 0)?;
        if frame < 1 || frame > u32::MAX as i64 {
            return Err(Error::Parse {
                line,
                column: 1,
                msg: format!("frame index {frame} must be at least 1"),
            });
        }
        let frame = frame as u32;
        let id = integer(field(&fields, 1).unwrap_or_default(), line, 1)?;
        let bbox = BoundingBox::new(vals[2], vals[3], vals[4], vals[5]);
        if bbox.w <= 0.0 || bbox.h <= 0.0 {
            return Err(Error::Parse {
                line,
                column: if bbox.w <= 0.0 { 5 } else { 6 },
                msg: "box width and height must be positive".into(),
            });
        }
        let conf = if fields.len() > 6 { vals[6] } else { 1.0 };
        match kind {
            FileKind::Detections => {
                if !(0.0..=1.0).contains(&conf) {
                    return Err(Error::Parse {
                        line,
                        column: 7,
                        msg: format!("confidence {conf} outside [0, 1]"),
                    });
                }
                data.push(
                    frame,
                    Record {
                        id: -1,
                        bbox,
                        confidence: conf,
                    },
                );
            }
            FileKind::GroundTruth => {
                if conf == 0.0 {
                    continue;
                }
                if !seen.insert((frame, id)) {
                    return Err(Error::Parse {
                        line,
                        column: 2,
                        msg: format!("duplicate id {id} in frame {frame}"),
                    });
                }
                data.push(
                    frame,
                    Record {
                        id,
                        bbox,
                        confidence: 1.0,
                    },
                );
            }
        }
    }
    Ok(data)
}

fn write_line(out: &mut impl Write, frame: u32, id: i64, b: &BoundingBox, conf: &str) -> std::io::Result<()> {
    writeln!(
        out,
        "{frame},{id},{:.2},{:.2},{:.2},{:.2},{conf},-1,-1,-1",
        b.x, b.y, b.w, b.h
    )
}

/// Writes tracker output, sorted by frame then id.
pub fn write_results(results: &[TrackOutput], out: &mut impl Write) -> Result<()> {
    let mut sorted: Vec<&TrackOutput> = results.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.id));
    for r in sorted {
        write_line(out, r.frame, r.id as i64, &r.bbox, "1")?;
    }
    Ok(())
}

/// Writes a whole sequence. Ground truth gets its ids and a validity flag of 1;
/// detections get id -1 and their confidence.
pub fn write_sequence(data: &SequenceData, kind: FileKind, out: &mut impl Write) -> Result<()> {
    for (&frame, recs) in &data.frames {
        let mut recs: Vec<&Record> = recs.iter().collect();
        if kind == FileKind::GroundTruth {
            recs.sort_by_key(|r| r.id);
        }
        for r in recs {
            match kind {
                FileKind::GroundTruth => write_line(out, frame, r.id, &r.bbox, "1")?,
                FileKind::Detections => {
                    write_line(out, frame, -1, &r.bbox, &format!("{:.4}", r.confidence))?
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_line() {
        let d = parse_mot_file("1,-1,10,20,5,5,0.9,-1,-1,-1\n", FileKind::Detections).unwrap();
        let dets = d.detections(1);
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].bbox, BoundingBox::new(10.0, 20.0, 5.0, 5.0));
        assert_eq!(dets[0].confidence, 0.9);
        assert_eq!(dets[0].frame, 1);
    }

    #[test]
    fn empty_file() {
        let d = parse_mot_file("", FileKind::Detections).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.last_frame(), 0);
    }

    #[test]
    fn gt_drops_invalid_rows() {
        let text = "1,1,0,0,5,5,1,1,1\n1,2,10,0,5,5,0,1,1\n2,1,1,0,5,5,1,1,1\n";
        let d = parse_mot_file(text, FileKind::GroundTruth).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn tolerates_whitespace_crlf_and_blank_lines() {
        let text = "1,-1,10,20,5,5,0.9,-1,-1,-1  \r\n\r\n  \n2,-1,1,2,3,4,0.5,-1,-1,-1\r\n";
        let d = parse_mot_file(text, FileKind::Detections).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn non_numeric_field_names_line_and_column() {
        let text = "1,-1,10,20,5,5,0.9,-1,-1,-1\n2,-1,abc,20,5,5,0.9,-1,-1,-1\n";
        match parse_mot_file(text, FileKind::Detections) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comma_decimal_is_rejected() {
        let text = "1,-1,10,5,20,5,5,0,9,-1,-1,-1\n";
        assert!(parse_mot_file(text, FileKind::Detections).is_err());
    }

    #[test]
    fn bad_confidence_rejected() {
        assert!(parse_mot_file("1,-1,0,0,5,5,1.5,-1,-1,-1", FileKind::Detections).is_err());
    }

    #[test]
    fn duplicate_gt_id_rejected() {
        let text = "1,3,0,0,5,5,1,-1,-1,-1\n1,3,9,9,5,5,1,-1,-1,-1\n";
        match parse_mot_file(text, FileKind::GroundTruth) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frame_zero_rejected() {
        assert!(parse_mot_file("0,-1,0,0,5,5,1,-1,-1,-1", FileKind::Detections).is_err());
    }

    #[test]
    fn result_format() {
        let r = [TrackOutput {
            frame: 1,
            id: 3,
            bbox: BoundingBox::new(1.0, 2.0, 3.0, 4.0),
        }];
        let mut buf = Vec::new();
        write_results(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,3,1.00,2.00,3.00,4.00,1,-1,-1,-1\n");
        let mut buf = Vec::new();
        write_results(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn results_sorted_by_frame_then_id() {
        let b = BoundingBox::new(0.0, 0.0, 1.0, 1.0);
        let r = [
            TrackOutput { frame: 2, id: 1, bbox: b },
            TrackOutput { frame: 1, id: 5, bbox: b },
            TrackOutput { frame: 1, id: 2, bbox: b },
        ];
        let mut buf = Vec::new();
        write_results(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let keys: Vec<&str> = text.lines().map(|l| &l[..3]).collect();
        assert_eq!(keys, ["1,2", "1,5", "2,1"]);
    }
}
