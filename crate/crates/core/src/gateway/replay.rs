use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::JoinHandle;

use super::{ingest_wire_message, parse_annotation_file, FrameDetections, GatewayError};

/// A replayed frame: detections plus the image they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayFrame {
    pub frame: FrameDetections,
    pub image_path: PathBuf,
}

/// Replays labeled frames from disk in increasing frame id order.
///
/// Two layouts are understood: a dataset directory with `images/NNNNNN.png`
/// and `labels/NNNNNN.txt`, or a flat directory of images each paired with a
/// same-stem `.txt` sidecar. A missing label file means no detections.
#[derive(Debug)]
pub struct ReplaySource {
    entries: std::vec::IntoIter<(u64, PathBuf, PathBuf)>,
    frame_interval: f64,
}

impl ReplaySource {
    pub fn open(dir: &Path, frame_interval: f64) -> Result<Self, GatewayError> {
        Self::open_with_labels(dir, None, frame_interval)
    }

    /// Like [`ReplaySource::open`] but reads detections from `labels_dir`.
    pub fn open_with_labels(
        dir: &Path,
        labels_dir: Option<&Path>,
        frame_interval: f64,
    ) -> Result<Self, GatewayError> {
        let images_dir = dir.join("images");
        let (image_root, default_labels) = if images_dir.is_dir() {
            (images_dir, dir.join("labels"))
        } else {
            (dir.to_path_buf(), dir.to_path_buf())
        };
        let labels_root = labels_dir.map(Path::to_path_buf).unwrap_or(default_labels);

        let mut images: Vec<PathBuf> = std::fs::read_dir(&image_root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .collect();
        images.sort();
        let mut entries: Vec<(u64, PathBuf, PathBuf)> = images
            .into_iter()
            .enumerate()
            .map(|(i, img)| {
                let stem = img.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let id = stem.parse().unwrap_or(i as u64);
                (id, img, labels_root.join(format!("{stem}.txt")))
            })
            .collect();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        Ok(Self {
            entries: entries.into_iter(),
            frame_interval,
        })
    }

    /// Restricts replay to frame ids in `range` (inclusive).
    pub fn with_range(self, range: std::ops::RangeInclusive<u64>) -> Self {
        let entries: Vec<_> = self.entries.filter(|e| range.contains(&e.0)).collect();
        Self {
            entries: entries.into_iter(),
            frame_interval: self.frame_interval,
        }
    }

    pub fn remaining(&self) -> usize {
        self.entries.len()
    }
}

impl Iterator for ReplaySource {
    type Item = Result<ReplayFrame, GatewayError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (frame_id, image_path, label_path) = self.entries.next()?;
        let detections = match std::fs::read_to_string(&label_path) {
            Ok(text) => parse_annotation_file(&text, &label_path.display().to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        };
        Some(detections.map(|detections| ReplayFrame {
            frame: FrameDetections {
                frame_id,
                timestamp: frame_id as f64 * self.frame_interval,
                detections,
            },
            image_path,
        }))
    }
}

/// Reads NDJSON detection frames from any line-oriented reader
/// (standard input, a TCP stream). Blank lines are skipped.
pub struct NdjsonSource<R> {
    reader: R,
    line: String,
}

impl<R: BufRead> NdjsonSource<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            line: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for NdjsonSource<R> {
    type Item = Result<FrameDetections, GatewayError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            match self.reader.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) if self.line.trim().is_empty() => continue,
                Ok(_) => return Some(ingest_wire_message(&self.line)),
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

/// Runs `source` on its own thread, handing items over a bounded queue.
/// A full queue blocks the producer.
pub fn spawn_source<I, T>(source: I, capacity: usize) -> (Receiver<T>, JoinHandle<()>)
where
    I: IntoIterator<Item = T> + Send + 'static,
    T: Send + 'static,
{
    let (tx, rx) = sync_channel(capacity.max(1));
    let handle = std::thread::spawn(move || {
        for item in source {
            if tx.send(item).is_err() {
                break;
            }
        }
    });
    (rx, handle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn ndjson_source_reads_lines() {
        let text = "{\"frame_id\":1,\"timestamp\":0.1,\"detections\":[]}\n\n{\"frame_id\":2,\"timestamp\":0.2,\"detections\":[]}\n";
        let frames: Vec<_> = NdjsonSource::new(Cursor::new(text)).collect::<Result<_, _>>().unwrap();
        assert_eq!(frames.iter().map(|f| f.frame_id).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn ndjson_source_surfaces_protocol_errors() {
        let mut src = NdjsonSource::new(Cursor::new("{\"frame_id\":1\n"));
        assert!(matches!(src.next(), Some(Err(GatewayError::Protocol { .. }))));
        assert!(src.next().is_none());
    }

    #[test]
    fn sidecar_replay_orders_by_frame_id() {
        let dir = tempfile::tempdir().unwrap();
        for id in [3u32, 1, 2] {
            std::fs::write(dir.path().join(format!("{id:06}.png")), b"").unwrap();
        }
        std::fs::write(dir.path().join("000001.txt"), "0 0.5 0.5 0.1 0.1\n0 0.2 0.2 0.1 0.1\n").unwrap();
        let frames: Vec<_> = ReplaySource::open(dir.path(), 0.5).unwrap().collect::<Result<_, _>>().unwrap();
        let ids: Vec<_> = frames.iter().map(|f| f.frame.frame_id).collect();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(frames[0].frame.detections.len(), 2);
        assert!(frames[1].frame.detections.is_empty());
        assert_eq!(frames[2].frame.timestamp, 1.5);
    }

    #[test]
    fn dataset_layout_and_range() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("images")).unwrap();
        std::fs::create_dir_all(dir.path().join("labels")).unwrap();
        for id in 0..12u32 {
            std::fs::write(dir.path().join(format!("images/{id:06}.png")), b"").unwrap();
            std::fs::write(dir.path().join(format!("labels/{id:06}.txt")), "0 0.5 0.5 0.1 0.1\n").unwrap();
        }
        let src = ReplaySource::open(dir.path(), 0.1).unwrap().with_range(0..=10);
        assert_eq!(src.remaining(), 11);
        let frames: Vec<_> = src.collect::<Result<_, _>>().unwrap();
        assert!(frames.windows(2).all(|w| w[0].frame.frame_id < w[1].frame.frame_id));
        assert_eq!(frames.last().unwrap().frame.frame_id, 10);
    }

    #[test]
    fn malformed_label_cites_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("000004.png"), b"").unwrap();
        std::fs::write(dir.path().join("000004.txt"), "0 0.5 0.5 0.1 0.1\n0 bad\n").unwrap();
        let err = ReplaySource::open(dir.path(), 0.1).unwrap().next().unwrap().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("000004.txt:2"), "{msg}");
    }

    #[test]
    fn bounded_queue_preserves_order() {
        let (rx, handle) = spawn_source(0..100u32, 8);
        let got: Vec<_> = rx.iter().collect();
        handle.join().unwrap();
        assert_eq!(got, (0..100).collect::<Vec<_>>());
    }
}
