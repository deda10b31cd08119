//! Parser-output ingestion.
//!
//! Every input format is mapped onto [`RawPage`], the canonical page record,
//! which [`normalize_page`] then turns into [`LayoutElement`]s with
//! normalized boxes and non-content regions flagged as excluded.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::IngestError;
use crate::model::{Bbox, LayoutElement};

/// One element as emitted by a parser, before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawElement {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub label: String,
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<String>,
}

/// Canonical page record shared by all adapters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPage {
    pub page_id: String,
    pub width_px: f64,
    pub height_px: f64,
    #[serde(default)]
    pub already_normalized: bool,
    pub elements: Vec<RawElement>,
}

/// Supported input formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Canonical,
    Gt,
    Mineru,
    Docling,
}

impl InputFormat {
    /// Parser name used for TYPE_MAP lookup.
    pub fn parser_name(&self) -> &'static str {
        match self {
            InputFormat::Canonical => "canonical",
            InputFormat::Gt => "gt",
            InputFormat::Mineru => "mineru",
            InputFormat::Docling => "docling",
        }
    }

    /// Labels treated as page furniture (headers, footers, page numbers,
    /// abandoned regions) for this format.
    pub fn default_non_content(&self) -> &'static [&'static str] {
        match self {
            InputFormat::Canonical => &[
                "page_header",
                "page_footer",
                "page_number",
                "abandon",
                "abandoned",
                "discarded",
            ],
            InputFormat::Gt => &["header", "footer", "page_number", "abandon"],
            InputFormat::Mineru => &["discarded", "page_header", "page_footer", "page_number"],
            InputFormat::Docling => &["page_header", "page_footer"],
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.parser_name())
    }
}

impl FromStr for InputFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" => Ok(InputFormat::Canonical),
            "gt" => Ok(InputFormat::Gt),
            "mineru" => Ok(InputFormat::Mineru),
            "docling" => Ok(InputFormat::Docling),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

/// Non-content label table, compared case-insensitively.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub non_content: BTreeSet<String>,
}

impl IngestConfig {
    pub fn for_format(format: InputFormat) -> Self {
        Self {
            non_content: format
                .default_non_content()
                .iter()
                .map(|s| s.to_ascii_lowercase())
                .collect(),
        }
    }

    pub fn is_non_content(&self, label: &str) -> bool {
        self.non_content.contains(&label.to_ascii_lowercase())
    }
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self::for_format(InputFormat::Canonical)
    }
}

fn read_json(path: &Path) -> Result<Value, IngestError> {
    let raw = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&raw).map_err(|e| IngestError::Schema {
        path: path.display().to_string(),
        field: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Loads a file in the given format.
pub fn load_pages(path: &Path, format: InputFormat) -> Result<Vec<RawPage>, IngestError> {
    let value = read_json(path)?;
    let name = path.display().to_string();
    match format {
        InputFormat::Canonical => parse_canonical(&value, &name),
        InputFormat::Gt => parse_gt(&value, &name),
        InputFormat::Mineru => parse_mineru(&value, &name),
        InputFormat::Docling => parse_docling(&value, &name),
    }
}

/// Loads a canonical page file: one page object or an array of them.
pub fn load_canonical(path: &Path) -> Result<Vec<RawPage>, IngestError> {
    load_pages(path, InputFormat::Canonical)
}

struct Ctx<'a> {
    file: &'a str,
}

impl Ctx<'_> {
    fn err(&self, field: impl Into<String>, message: impl Into<String>) -> IngestError {
        IngestError::Schema {
            path: self.file.to_string(),
            field: field.into(),
            message: message.into(),
        }
    }

    fn obj<'v>(&self, v: &'v Value, field: &str) -> Result<&'v Map<String, Value>, IngestError> {
        v.as_object().ok_or_else(|| self.err(field, "expected an object"))
    }

    fn req<'v>(
        &self,
        m: &'v Map<String, Value>,
        key: &str,
        at: &str,
    ) -> Result<&'v Value, IngestError> {
        m.get(key)
            .ok_or_else(|| self.err(format!("{at}.{key}"), "missing required field"))
    }

    fn string(&self, v: &Value, field: &str) -> Result<String, IngestError> {
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| self.err(field, "expected a string"))
    }

    fn number(&self, v: &Value, field: &str) -> Result<f64, IngestError> {
        v.as_f64().ok_or_else(|| self.err(field, "expected a number"))
    }

    fn numbers(&self, v: &Value, field: &str) -> Result<Vec<f64>, IngestError> {
        let arr = v.as_array().ok_or_else(|| self.err(field, "expected an array of numbers"))?;
        arr.iter()
            .enumerate()
            .map(|(i, x)| self.number(x, &format!("{field}[{i}]")))
            .collect()
    }

    fn bbox4(&self, v: &Value, field: &str) -> Result<[f64; 4], IngestError> {
        let n = self.numbers(v, field)?;
        <[f64; 4]>::try_from(n.as_slice())
            .map_err(|_| self.err(field, format!("expected 4 numbers, found {}", n.len())))
    }

    fn order(&self, v: &Value, field: &str) -> Result<u32, IngestError> {
        v.as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| self.err(field, "expected a nonnegative integer"))
    }

    fn check_dims(&self, page_id: &str, w: f64, h: f64) -> Result<(), IngestError> {
        if !(w > 0.0 && h > 0.0) || !w.is_finite() || !h.is_finite() {
            return Err(IngestError::Dimension {
                path: self.file.to_string(),
                page_id: page_id.to_string(),
                width: w,
                height: h,
            });
        }
        Ok(())
    }
}

const PAGE_KEYS: &[&str] = &["page_id", "width_px", "height_px", "already_normalized", "elements"];
const ELEMENT_KEYS: &[&str] = &["id", "label", "bbox", "order", "text", "embedding", "subtype"];

fn parse_canonical(value: &Value, file: &str) -> Result<Vec<RawPage>, IngestError> {
    let ctx = Ctx { file };
    match value {
        Value::Array(pages) => pages
            .iter()
            .enumerate()
            .map(|(i, p)| parse_canonical_page(&ctx, p, &format!("[{i}]")))
            .collect(),
        Value::Object(_) => Ok(vec![parse_canonical_page(&ctx, value, "$")?]),
        _ => Err(ctx.err("$", "expected a page object or an array of pages")),
    }
}

fn parse_canonical_page(ctx: &Ctx, v: &Value, at: &str) -> Result<RawPage, IngestError> {
    let m = ctx.obj(v, at)?;
    if let Some(k) = m.keys().find(|k| !PAGE_KEYS.contains(&k.as_str())) {
        return Err(ctx.err(format!("{at}.{k}"), "unknown field"));
    }
    let page_id = ctx.string(ctx.req(m, "page_id", at)?, &format!("{at}.page_id"))?;
    let width_px = ctx.number(ctx.req(m, "width_px", at)?, &format!("{at}.width_px"))?;
    let height_px = ctx.number(ctx.req(m, "height_px", at)?, &format!("{at}.height_px"))?;
    ctx.check_dims(&page_id, width_px, height_px)?;
    let already_normalized = match m.get("already_normalized") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(ctx.err(format!("{at}.already_normalized"), "expected a boolean")),
    };
    let els_at = format!("{at}.elements");
    let els = ctx
        .req(m, "elements", at)?
        .as_array()
        .ok_or_else(|| ctx.err(&els_at, "expected an array"))?;
    let mut elements = Vec::with_capacity(els.len());
    for (i, e) in els.iter().enumerate() {
        let eat = format!("{els_at}[{i}]");
        let em = ctx.obj(e, &eat)?;
        if let Some(k) = em.keys().find(|k| !ELEMENT_KEYS.contains(&k.as_str())) {
            return Err(ctx.err(format!("{eat}.{k}"), "unknown field"));
        }
        let opt = |k: &str| em.get(k).filter(|v| !v.is_null());
        elements.push(RawElement {
            id: opt("id").map(|v| ctx.string(v, &format!("{eat}.id"))).transpose()?,
            label: ctx.string(ctx.req(em, "label", &eat)?, &format!("{eat}.label"))?,
            bbox: ctx.bbox4(ctx.req(em, "bbox", &eat)?, &format!("{eat}.bbox"))?,
            order: opt("order").map(|v| ctx.order(v, &format!("{eat}.order"))).transpose()?,
            text: opt("text")
                .map(|v| ctx.string(v, &format!("{eat}.text")))
                .transpose()?
                .unwrap_or_default(),
            embedding: opt("embedding")
                .map(|v| ctx.numbers(v, &format!("{eat}.embedding")))
                .transpose()?,
            subtype: opt("subtype").map(|v| ctx.string(v, &format!("{eat}.subtype"))).transpose()?,
        });
    }
    Ok(RawPage {
        page_id,
        width_px,
        height_px,
        already_normalized,
        elements,
    })
}

/// OmniDocBench-style ground truth: one object or an array of
/// `{"page_info": {..}, "layout_dets": [..]}`.
fn parse_gt(value: &Value, file: &str) -> Result<Vec<RawPage>, IngestError> {
    let ctx = Ctx { file };
    let pages: Vec<&Value> = match value {
        Value::Array(a) => a.iter().collect(),
        Value::Object(_) => vec![value],
        _ => return Err(ctx.err("$", "expected a page object or array")),
    };
    pages
        .into_iter()
        .enumerate()
        .map(|(pi, p)| {
            let at = format!("[{pi}]");
            let m = ctx.obj(p, &at)?;
            let info_at = format!("{at}.page_info");
            let info = ctx.obj(ctx.req(m, "page_info", &at)?, &info_at)?;
            let page_id = match info.get("image_path").and_then(Value::as_str) {
                Some(p) => Path::new(p)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.to_string()),
                None => match info.get("page_no") {
                    Some(n) => format!("page{}", n),
                    None => return Err(ctx.err(&info_at, "missing image_path or page_no")),
                },
            };
            let width_px = ctx.number(ctx.req(info, "width", &info_at)?, &format!("{info_at}.width"))?;
            let height_px =
                ctx.number(ctx.req(info, "height", &info_at)?, &format!("{info_at}.height"))?;
            ctx.check_dims(&page_id, width_px, height_px)?;
            let dets_at = format!("{at}.layout_dets");
            let dets = ctx
                .req(m, "layout_dets", &at)?
                .as_array()
                .ok_or_else(|| ctx.err(&dets_at, "expected an array"))?;
            let mut elements = Vec::new();
            for (i, d) in dets.iter().enumerate() {
                let dat = format!("{dets_at}[{i}]");
                let dm = ctx.obj(d, &dat)?;
                let label = ctx.string(ctx.req(dm, "category_type", &dat)?, &format!("{dat}.category_type"))?;
                let poly = ctx.numbers(ctx.req(dm, "poly", &dat)?, &format!("{dat}.poly"))?;
                if poly.len() < 4 || poly.len() % 2 != 0 {
                    return Err(ctx.err(format!("{dat}.poly"), "expected an even number (>= 4) of coordinates"));
                }
                let xs = poly.iter().step_by(2);
                let ys = poly.iter().skip(1).step_by(2);
                let bbox = [
                    xs.clone().copied().fold(f64::INFINITY, f64::min),
                    ys.clone().copied().fold(f64::INFINITY, f64::min),
                    xs.copied().fold(f64::NEG_INFINITY, f64::max),
                    ys.copied().fold(f64::NEG_INFINITY, f64::max),
                ];
                let order = match dm.get("order") {
                    None | Some(Value::Null) => None,
                    Some(v) => Some(ctx.order(v, &format!("{dat}.order"))?),
                };
                let id = dm.get("anno_id").map(|v| match v {
                    Value::String(s) => format!("{page_id}#{s}"),
                    other => format!("{page_id}#a{other}"),
                });
                elements.push(RawElement {
                    id,
                    label,
                    bbox,
                    order,
                    text: dm.get("text").and_then(Value::as_str).unwrap_or_default().to_string(),
                    embedding: None,
                    subtype: None,
                });
            }
            Ok(RawPage {
                page_id,
                width_px,
                height_px,
                already_normalized: false,
                elements,
            })
        })
        .collect()
}

fn mineru_block_text(block: &Map<String, Value>) -> String {
    if let Some(t) = block.get("text").and_then(Value::as_str) {
        return t.to_string();
    }
    let mut parts = Vec::new();
    if let Some(lines) = block.get("lines").and_then(Value::as_array) {
        for line in lines {
            if let Some(spans) = line.get("spans").and_then(Value::as_array) {
                for span in spans {
                    for key in ["content", "html"] {
                        if let Some(c) = span.get(key).and_then(Value::as_str) {
                            parts.push(c.to_string());
                            break;
                        }
                    }
                }
            }
        }
    }
    parts.join(" ")
}

/// MinerU `middle.json` style: `{"pdf_info": [{"page_idx", "page_size",
/// "para_blocks", "discarded_blocks"}]}`. Composite image/table blocks are
/// flattened into their body/caption/footnote sub-blocks.
fn parse_mineru(value: &Value, file: &str) -> Result<Vec<RawPage>, IngestError> {
    let ctx = Ctx { file };
    let root = ctx.obj(value, "$")?;
    let pages = ctx
        .req(root, "pdf_info", "$")?
        .as_array()
        .ok_or_else(|| ctx.err("$.pdf_info", "expected an array"))?;
    let mut out = Vec::new();
    for (pi, p) in pages.iter().enumerate() {
        let at = format!("$.pdf_info[{pi}]");
        let m = ctx.obj(p, &at)?;
        let page_idx = ctx.order(ctx.req(m, "page_idx", &at)?, &format!("{at}.page_idx"))?;
        let page_id = format!("page{page_idx}");
        let size = ctx.numbers(ctx.req(m, "page_size", &at)?, &format!("{at}.page_size"))?;
        if size.len() != 2 {
            return Err(ctx.err(format!("{at}.page_size"), "expected [width, height]"));
        }
        ctx.check_dims(&page_id, size[0], size[1])?;
        let mut elements = Vec::new();
        let mut push_block = |b: &Value, field: &str, discarded: bool| -> Result<(), IngestError> {
            let bm = ctx.obj(b, field)?;
            let mut stack = vec![(bm, field.to_string())];
            while let Some((bm, f)) = stack.pop() {
                if let Some(children) = bm.get("blocks").and_then(Value::as_array) {
                    for (ci, c) in children.iter().enumerate().rev() {
                        stack.push((ctx.obj(c, &format!("{f}.blocks[{ci}]"))?, format!("{f}.blocks[{ci}]")));
                    }
                    continue;
                }
                let ty = ctx.string(ctx.req(bm, "type", &f)?, &format!("{f}.type"))?;
                let label = if discarded {
                    "discarded".to_string()
                } else {
                    match ty.as_str() {
                        "table_body" => "table".to_string(),
                        "image_body" => "image".to_string(),
                        _ => ty,
                    }
                };
                elements.push(RawElement {
                    id: None,
                    label,
                    bbox: ctx.bbox4(ctx.req(bm, "bbox", &f)?, &format!("{f}.bbox"))?,
                    order: None,
                    text: mineru_block_text(bm),
                    embedding: None,
                    subtype: None,
                });
            }
            Ok(())
        };
        if let Some(blocks) = m.get("para_blocks").and_then(Value::as_array) {
            for (bi, b) in blocks.iter().enumerate() {
                push_block(b, &format!("{at}.para_blocks[{bi}]"), false)?;
            }
        }
        if let Some(blocks) = m.get("discarded_blocks").and_then(Value::as_array) {
            for (bi, b) in blocks.iter().enumerate() {
                push_block(b, &format!("{at}.discarded_blocks[{bi}]"), true)?;
            }
        }
        out.push(RawPage {
            page_id,
            width_px: size[0],
            height_px: size[1],
            already_normalized: false,
            elements,
        });
    }
    Ok(out)
}

/// Docling document JSON. Items come from `texts`, `tables` and `pictures`;
/// reading order follows `body.children` references when present. Boxes
/// with `coord_origin: BOTTOMLEFT` are flipped to a top-left origin.
fn parse_docling(value: &Value, file: &str) -> Result<Vec<RawPage>, IngestError> {
    let ctx = Ctx { file };
    let root = ctx.obj(value, "$")?;
    let pages_obj = ctx.obj(ctx.req(root, "pages", "$")?, "$.pages")?;
    let mut pages: Vec<RawPage> = Vec::new();
    let mut page_index = std::collections::BTreeMap::new();
    let mut keys: Vec<(u64, &String)> = pages_obj
        .iter()
        .map(|(k, v)| {
            let no = v.get("page_no").and_then(Value::as_u64).or_else(|| k.parse().ok()).unwrap_or(0);
            (no, k)
        })
        .collect();
    keys.sort();
    for (no, k) in keys {
        let at = format!("$.pages.{k}");
        let pm = ctx.obj(&pages_obj[k], &at)?;
        let size = ctx.obj(ctx.req(pm, "size", &at)?, &format!("{at}.size"))?;
        let w = ctx.number(ctx.req(size, "width", &at)?, &format!("{at}.size.width"))?;
        let h = ctx.number(ctx.req(size, "height", &at)?, &format!("{at}.size.height"))?;
        let page_id = format!("page{no}");
        ctx.check_dims(&page_id, w, h)?;
        page_index.insert(no, pages.len());
        pages.push(RawPage {
            page_id,
            width_px: w,
            height_px: h,
            already_normalized: false,
            elements: Vec::new(),
        });
    }

    // Resolve reading order: body.children refs first, then unreferenced items.
    let mut sequence: Vec<(String, usize)> = Vec::new();
    let mut seen = HashSet::new();
    if let Some(children) = root
        .get("body")
        .and_then(|b| b.get("children"))
        .and_then(Value::as_array)
    {
        for c in children {
            if let Some(r) = c.get("$ref").and_then(Value::as_str) {
                let parts: Vec<&str> = r.trim_start_matches("#/").split('/').collect();
                if let [coll, idx] = parts.as_slice() {
                    if let Ok(i) = idx.parse::<usize>() {
                        if seen.insert((coll.to_string(), i)) {
                            sequence.push((coll.to_string(), i));
                        }
                    }
                }
            }
        }
    }
    for coll in ["texts", "tables", "pictures"] {
        if let Some(items) = root.get(coll).and_then(Value::as_array) {
            for i in 0..items.len() {
                if seen.insert((coll.to_string(), i)) {
                    sequence.push((coll.to_string(), i));
                }
            }
        }
    }

    for (coll, i) in sequence {
        let at = format!("$.{coll}[{i}]");
        let Some(item) = root.get(&coll).and_then(|c| c.get(i)) else {
            return Err(ctx.err(&at, "dangling reference"));
        };
        let im = ctx.obj(item, &at)?;
        let label = match im.get("label").and_then(Value::as_str) {
            Some(l) => l.to_string(),
            None => match coll.as_str() {
                "tables" => "table".to_string(),
                "pictures" => "picture".to_string(),
                _ => return Err(ctx.err(format!("{at}.label"), "missing required field")),
            },
        };
        let mut text = im.get("text").and_then(Value::as_str).unwrap_or_default().to_string();
        if text.is_empty() {
            if let Some(cells) = im
                .get("data")
                .and_then(|d| d.get("table_cells"))
                .and_then(Value::as_array)
            {
                text = cells
                    .iter()
                    .filter_map(|c| c.get("text").and_then(Value::as_str))
                    .collect::<Vec<_>>()
                    .join(" ");
            }
        }
        let provs = ctx
            .req(im, "prov", &at)?
            .as_array()
            .ok_or_else(|| ctx.err(format!("{at}.prov"), "expected an array"))?;
        for (pi, prov) in provs.iter().enumerate() {
            let pat = format!("{at}.prov[{pi}]");
            let pm = ctx.obj(prov, &pat)?;
            let page_no = pm
                .get("page_no")
                .and_then(Value::as_u64)
                .ok_or_else(|| ctx.err(format!("{pat}.page_no"), "expected an integer"))?;
            let Some(&idx) = page_index.get(&page_no) else {
                return Err(ctx.err(format!("{pat}.page_no"), format!("unknown page {page_no}")));
            };
            let bat = format!("{pat}.bbox");
            let bm = ctx.obj(ctx.req(pm, "bbox", &pat)?, &bat)?;
            let get = |k: &str| ctx.number(ctx.req(bm, k, &bat)?, &format!("{bat}.{k}"));
            let (l, t, r, b) = (get("l")?, get("t")?, get("r")?, get("b")?);
            let page = &mut pages[idx];
            let bottom_left = bm
                .get("coord_origin")
                .and_then(Value::as_str)
                .is_some_and(|o| o.eq_ignore_ascii_case("BOTTOMLEFT"));
            let (top, bottom) = if bottom_left {
                (page.height_px - t, page.height_px - b)
            } else {
                (t, b)
            };
            page.elements.push(RawElement {
                id: None,
                label: label.clone(),
                bbox: [l.min(r), top.min(bottom), l.max(r), top.max(bottom)],
                order: None,
                text: text.clone(),
                embedding: None,
                subtype: im
                    .get("subtype")
                    .and_then(Value::as_str)
                    .map(str::to_string),
            });
        }
    }
    Ok(pages)
}

/// Converts a raw page into layout elements with normalized boxes.
///
/// Every input element is returned; non-content regions carry
/// `excluded = true` and are skipped by construction.
pub fn normalize_page(raw: &RawPage, cfg: &IngestConfig) -> Result<Vec<LayoutElement>, IngestError> {
    if !(raw.width_px > 0.0 && raw.height_px > 0.0) {
        return Err(IngestError::Dimension {
            path: String::new(),
            page_id: raw.page_id.clone(),
            width: raw.width_px,
            height: raw.height_px,
        });
    }
    let mut seen_orders = HashSet::new();
    let mut out = Vec::with_capacity(raw.elements.len());
    for (seq, e) in raw.elements.iter().enumerate() {
        let order = e.order.unwrap_or(seq as u32);
        if !seen_orders.insert(order) {
            return Err(IngestError::DuplicateOrder {
                page_id: raw.page_id.clone(),
                order,
            });
        }
        let element_id = e.id.clone().unwrap_or_else(|| format!("{}#{}", raw.page_id, order));
        let scaled = if raw.already_normalized {
            e.bbox
        } else {
            [
                e.bbox[0] / raw.width_px,
                e.bbox[1] / raw.height_px,
                e.bbox[2] / raw.width_px,
                e.bbox[3] / raw.height_px,
            ]
        };
        let malformed = || IngestError::MalformedRegion {
            page_id: raw.page_id.clone(),
            element_id: element_id.clone(),
            bbox: e.bbox,
        };
        if scaled.iter().any(|c| !c.is_finite()) || scaled[2] < scaled[0] || scaled[3] < scaled[1] {
            return Err(malformed());
        }
        let c = scaled.map(|v| v.clamp(0.0, 1.0));
        let bbox = Bbox::new(c[0], c[1], c[2], c[3]).map_err(|_| malformed())?;
        out.push(LayoutElement {
            element_id,
            page_id: raw.page_id.clone(),
            raw_label: e.label.clone(),
            subtype: e.subtype.clone(),
            canon_role: None,
            bbox,
            order,
            text: e.text.clone(),
            embedding: e.embedding.clone(),
            excluded: cfg.is_non_content(&e.label),
        });
    }
    out.sort_by_key(|e| e.order);
    Ok(out)
}

/// Normalizes a run of pages and enforces one embedding dimension across it.
pub fn normalize_pages(
    raws: &[RawPage],
    cfg: &IngestConfig,
) -> Result<Vec<Vec<LayoutElement>>, IngestError> {
    let pages = raws
        .iter()
        .map(|r| normalize_page(r, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    run_embedding_dim(pages.iter().flatten())?;
    Ok(pages)
}

/// The run-level embedding dimension, if any element carries a vector.
/// Mixed dimensions are an error.
pub fn run_embedding_dim<'a, I>(elements: I) -> Result<Option<usize>, IngestError>
where
    I: IntoIterator<Item = &'a LayoutElement>,
{
    let mut dim = None;
    for e in elements {
        if let Some(v) = &e.embedding {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(IngestError::EmbeddingDimension {
                        element_id: e.element_id.clone(),
                        expected: d,
                        found: v.len(),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(dim)
}
