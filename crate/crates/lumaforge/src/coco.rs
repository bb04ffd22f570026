//! COCO-format annotation ingestion.
//!
//! Annotation records are handled *opaquely*: the parser keeps every image,
//! annotation, and category entry as raw JSON and only reads the handful of
//! fields the pipeline needs (ids, file names, dimensions, bboxes for sanity
//! checks). Geometry — `segmentation` in any of its polygon or RLE spellings,
//! `bbox`, `area` — is never interpreted or rewritten, which is what lets the
//! pipeline guarantee that the annotations consumed with a degraded variant
//! are exactly the ones that came in with its clean twin.

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// A parsed COCO file: raw top-level object plus cheap array accessors.
#[derive(Debug, Clone)]
pub struct CocoDocument {
    root: Map<String, Value>,
}

/// The typed subset of an image entry the pipeline needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageEntry {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

impl CocoDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)?;
        let Value::Object(root) = root else {
            return Err(Error::Annotation("top level is not a JSON object".into()));
        };
        let doc = CocoDocument { root };
        for key in ["images", "annotations", "categories"] {
            match doc.root.get(key) {
                Some(Value::Array(_)) => {}
                Some(_) => {
                    return Err(Error::Annotation(format!("`{key}` is not an array")));
                }
                None => {
                    return Err(Error::Annotation(format!(
                        "missing `{key}` array; not a COCO annotation file"
                    )));
                }
            }
        }
        Ok(doc)
    }

    fn array(&self, key: &str) -> &[Value] {
        match self.root.get(key) {
            Some(Value::Array(a)) => a,
            _ => unreachable!("validated in parse"),
        }
    }

    pub fn images(&self) -> &[Value] {
        self.array("images")
    }

    pub fn annotations(&self) -> &[Value] {
        self.array("annotations")
    }

    pub fn categories(&self) -> &[Value] {
        self.array("categories")
    }

    /// Rebuild the document keeping only the images whose ids pass `keep`
    /// (and the annotations referencing them). Every retained entry is the
    /// original JSON value; unknown top-level keys ride along untouched.
    pub fn filtered(&self, keep: &dyn Fn(u64) -> bool) -> Result<Value> {
        let mut root = self.root.clone();
        let images: Vec<Value> = self
            .images()
            .iter()
            .filter(|v| matches!(u64_field(v, "id", "image"), Ok(id) if keep(id)))
            .cloned()
            .collect();
        let annotations: Vec<Value> = self
            .annotations()
            .iter()
            .filter(|v| matches!(u64_field(v, "image_id", "annotation"), Ok(id) if keep(id)))
            .cloned()
            .collect();
        root.insert("images".into(), Value::Array(images));
        root.insert("annotations".into(), Value::Array(annotations));
        Ok(Value::Object(root))
    }
}

/// Read a required non-negative integer field from a raw entry.
pub fn u64_field(entry: &Value, field: &str, what: &str) -> Result<u64> {
    match entry.get(field) {
        Some(Value::Number(n)) => n.as_u64().ok_or_else(|| {
            Error::Annotation(format!("{what} field `{field}` = {n} is not a non-negative integer"))
        }),
        Some(other) => Err(Error::Annotation(format!(
            "{what} field `{field}` has non-integer type: {other}"
        ))),
        None => Err(Error::Annotation(format!("{what} entry missing `{field}`"))),
    }
}

/// Extract the typed subset of an image entry.
pub fn image_entry(v: &Value) -> Result<ImageEntry> {
    let id = u64_field(v, "id", "image")?;
    let file_name = match v.get("file_name") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        _ => {
            return Err(Error::Annotation(format!(
                "image {id} missing a non-empty `file_name`"
            )));
        }
    };
    let width = u64_field(v, "width", "image")?;
    let height = u64_field(v, "height", "image")?;
    if width == 0 || height == 0 || width > u32::MAX as u64 || height > u32::MAX as u64 {
        return Err(Error::Annotation(format!(
            "image {id}: implausible dimensions {width}x{height}"
        )));
    }
    Ok(ImageEntry {
        id,
        file_name,
        width: width as u32,
        height: height as u32,
    })
}

/// Optional `[x, y, w, h]` bbox of an annotation entry.
pub fn ann_bbox(v: &Value) -> Result<Option<[f64; 4]>> {
    match v.get("bbox") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(a)) if a.len() == 4 => {
            let mut out = [0.0; 4];
            for (i, x) in a.iter().enumerate() {
                out[i] = x.as_f64().ok_or_else(|| {
                    Error::Annotation(format!("bbox component {i} is not a number: {x}"))
                })?;
            }
            Ok(Some(out))
        }
        Some(other) => Err(Error::Annotation(format!(
            "bbox must be a 4-element array, got {other}"
        ))),
    }
}

/// Check a bbox against its image bounds, with half-pixel slack for the
/// rounding real exporters produce.
pub fn check_bbox_bounds(ann_id: u64, bbox: [f64; 4], img: &ImageEntry) -> Result<()> {
    let [x, y, w, h] = bbox;
    let slack = 0.5;
    let ok = w >= 0.0
        && h >= 0.0
        && x >= -slack
        && y >= -slack
        && x + w <= img.width as f64 + slack
        && y + h <= img.height as f64 + slack;
    if ok {
        Ok(())
    } else {
        Err(Error::Annotation(format!(
            "annotation {ann_id}: bbox {bbox:?} outside image {} bounds {}x{}",
            img.id, img.width, img.height
        )))
    }
}
