use super::{Detection, GatewayError};

const RANGE_TOL: f64 = 1e-6;

/// Parses `"class cx cy w h [score]"`; the score defaults to 1.
pub fn parse_annotation_line(text: &str) -> Result<Detection, GatewayError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 5 && fields.len() != 6 {
        return Err(GatewayError::MalformedLine(format!(
            "expected 5 or 6 fields, found {}",
            fields.len()
        )));
    }
    let class_id: u32 = fields[0]
        .parse()
        .map_err(|_| GatewayError::MalformedLine(format!("bad class id {:?}", fields[0])))?;
    let mut values = [0.0f64; 5];
    values[4] = 1.0;
    const NAMES: [&str; 5] = ["cx", "cy", "w", "h", "score"];
    for (i, raw) in fields[1..].iter().enumerate() {
        let v: f64 = raw
            .parse()
            .map_err(|_| GatewayError::MalformedLine(format!("non-numeric {:?}", raw)))?;
        if !v.is_finite() || !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v) {
            return Err(GatewayError::OutOfRange {
                field: NAMES[i],
                value: v,
            });
        }
        values[i] = v.clamp(0.0, 1.0);
    }
    let [cx, cy, w, h, score] = values;
    Ok(Detection::new(class_id, cx, cy, w, h, score))
}

/// Parses a whole sidecar file; `#` comments and blank lines are skipped.
pub fn parse_annotation_file(text: &str, path: &str) -> Result<Vec<Detection>, GatewayError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| {
            parse_annotation_line(l).map_err(|e| GatewayError::Annotation {
                path: path.to_string(),
                line: i + 1,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Canonical line with six decimals; the score is written when requested.
pub fn format_annotation_line(det: &Detection, with_score: bool) -> String {
    let mut s = format!(
        "{} {:.6} {:.6} {:.6} {:.6}",
        det.class_id, det.cx, det.cy, det.w, det.h
    );
    if with_score {
        s.push_str(&format!(" {:.6}", det.score));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_fields() {
        let d = parse_annotation_line("0 0.5 0.5 0.1 0.2").unwrap();
        assert_eq!(d, Detection { class_id: 0, cx: 0.5, cy: 0.5, w: 0.1, h: 0.2, score: 1.0 });
    }

    #[test]
    fn six_fields() {
        let d = parse_annotation_line("2 0.25 0.75 0.1 0.1 0.8").unwrap();
        assert_eq!((d.class_id, d.score), (2, 0.8));
    }

    #[test]
    fn malformed() {
        assert!(matches!(parse_annotation_line("0 0.5 0.5"), Err(GatewayError::MalformedLine(_))));
        assert!(matches!(parse_annotation_line("0 0.5 x 0.1 0.1"), Err(GatewayError::MalformedLine(_))));
        assert!(matches!(parse_annotation_line("a 0.5 0.5 0.1 0.1"), Err(GatewayError::MalformedLine(_))));
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(
            parse_annotation_line("0 1.5 0.5 0.1 0.1"),
            Err(GatewayError::OutOfRange { field: "cx", .. })
        ));
        // Within tolerance is clamped, not rejected.
        let d = parse_annotation_line("0 1.0000005 0.5 0.0 0.1").unwrap();
        assert_eq!(d.cx, 1.0);
    }

    #[test]
    fn file_with_comments_reports_line() {
        let text = "# header\n0 0.5 0.5 0.1 0.1\n\n0 0.5\n";
        let err = parse_annotation_file(text, "labels/000001.txt").unwrap_err();
        match err {
            GatewayError::Annotation { path, line, .. } => {
                assert_eq!(path, "labels/000001.txt");
                assert_eq!(line, 4);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_annotation_file("# only\n0 0.5 0.5 0.1 0.1\n", "x").unwrap().len(), 1);
    }

    #[test]
    fn format_round_trips() {
        let d = Detection::new(1, 0.123456, 0.5, 0.2, 0.1, 0.75);
        let line = format_annotation_line(&d, true);
        assert_eq!(line, "1 0.123456 0.500000 0.200000 0.100000 0.750000");
        assert_eq!(parse_annotation_line(&line).unwrap(), d);
    }
}
