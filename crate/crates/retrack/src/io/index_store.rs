//! On-disk index layout: a directory with a JSON manifest plus one binary
//! file per table. All integers are little-endian 32-bit; activation sets
//! are stored as sorted (word, tau) pairs, fragments and tracks are
//! cross-referenced by their ordinal in the forward tables, which makes
//! re-serialization byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use retrack_core::document::{Flip, FragmentId};
use retrack_core::flow::MagnitudeField;
use retrack_core::geometry::BoundingBox;
use retrack_core::index::{IndexParams, LibraryIndex, Track, VideoMeta};

use crate::error::{AppError, AppResult};

const VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const TABLE_FILES: [&str; 5] = [
    "fragments_fwd.bin",
    "fragments_inv.bin",
    "flow_fields.bin",
    "tracks_fwd.bin",
    "tracks_inv.bin",
];

#[derive(Serialize, Deserialize)]
struct ManifestParams {
    cube_base: u32,
    step: u32,
    window: u32,
    mag_threshold: f32,
    vote_threshold: f32,
}

#[derive(Serialize, Deserialize)]
struct ManifestVideo {
    video_id: String,
    width: u32,
    height: u32,
    frame_count: u32,
    time_steps: u32,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    params: ManifestParams,
    videos: Vec<ManifestVideo>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let slice = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(slice)
    }
    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Option<i32> {
        Some(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Option<f32> {
        Some(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Option<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).ok()
    }
    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn flip_code(flip: Flip) -> u32 {
    match flip {
        Flip::Identity => 0,
        Flip::Horizontal => 1,
        Flip::Vertical => 2,
    }
}

fn flip_from(code: u32) -> Option<Flip> {
    match code {
        0 => Some(Flip::Identity),
        1 => Some(Flip::Horizontal),
        2 => Some(Flip::Vertical),
        _ => None,
    }
}

fn write_fragment_id(w: &mut Writer, id: &FragmentId) {
    w.str(&id.video_id);
    w.u32(id.config_id as u32);
    w.u32(flip_code(id.flip));
    w.u32(id.start);
}

fn read_fragment_id(r: &mut Reader) -> Option<FragmentId> {
    Some(FragmentId {
        video_id: r.str()?,
        config_id: r.u32()? as u8,
        flip: flip_from(r.u32()?)?,
        start: r.u32()?,
    })
}

/// Persists all five tables plus the manifest into `dir`, creating it if
/// needed. Serialization order follows the tables' sorted order, so equal
/// indexes produce byte-identical directories.
pub fn save_index(index: &LibraryIndex, dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::format(dir, e))?;

    let manifest = Manifest {
        version: VERSION,
        params: ManifestParams {
            cube_base: index.params.cube_base,
            step: index.params.step,
            window: index.params.window,
            mag_threshold: index.params.mag_threshold,
            vote_threshold: index.params.vote_threshold,
        },
        videos: index
            .videos
            .values()
            .map(|m| ManifestVideo {
                video_id: m.video_id.clone(),
                width: m.width,
                height: m.height,
                frame_count: m.frame_count,
                time_steps: m.time_steps,
            })
            .collect(),
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    fs::write(dir.join(MANIFEST), manifest_json).map_err(|e| AppError::format(dir, e))?;

    // Ordinals for cross-references.
    let fragment_ord: BTreeMap<&FragmentId, u32> = index
        .fragment_forward
        .keys()
        .enumerate()
        .map(|(i, id)| (id, i as u32))
        .collect();
    let track_ord: BTreeMap<&String, u32> = index
        .track_forward
        .keys()
        .enumerate()
        .map(|(i, k)| (k, i as u32))
        .collect();

    let mut w = Writer::new();
    w.u32(index.fragment_forward.len() as u32);
    for (id, activations) in &index.fragment_forward {
        write_fragment_id(&mut w, id);
        w.u32(activations.len() as u32);
        for &(word, tau) in activations {
            w.u32(word);
            w.u32(tau);
        }
    }
    fs::write(dir.join(TABLE_FILES[0]), &w.buf).map_err(|e| AppError::format(dir, e))?;

    let mut w = Writer::new();
    w.u32(index.fragment_inverse.len() as u32);
    for (&(word, tau), ids) in &index.fragment_inverse {
        w.u32(word);
        w.u32(tau);
        w.u32(ids.len() as u32);
        for id in ids {
            w.u32(fragment_ord[id]);
        }
    }
    fs::write(dir.join(TABLE_FILES[1]), &w.buf).map_err(|e| AppError::format(dir, e))?;

    let mut w = Writer::new();
    w.u32(index.flow_fields.len() as u32);
    for ((video, flip, step), field) in &index.flow_fields {
        w.str(video);
        w.u32(flip_code(*flip));
        w.u32(*step);
        w.u32(field.width);
        w.u32(field.height);
        for &m in &field.mag {
            w.f32(m);
        }
    }
    fs::write(dir.join(TABLE_FILES[2]), &w.buf).map_err(|e| AppError::format(dir, e))?;

    let mut w = Writer::new();
    w.u32(index.track_forward.len() as u32);
    for (key, track) in &index.track_forward {
        w.str(key);
        w.str(&track.track_id);
        w.str(&track.video_id);
        w.u32(flip_code(track.flip));
        w.u32(track.start_frame);
        w.u32(track.boxes.len() as u32);
        for b in &track.boxes {
            w.i32(b.left);
            w.i32(b.top);
            w.i32(b.right);
            w.i32(b.bottom);
        }
    }
    fs::write(dir.join(TABLE_FILES[3]), &w.buf).map_err(|e| AppError::format(dir, e))?;

    let mut w = Writer::new();
    w.u32(index.track_inverse.len() as u32);
    for (id, tracks) in &index.track_inverse {
        w.u32(fragment_ord[id]);
        w.u32(tracks.len() as u32);
        for t in tracks {
            w.u32(track_ord[t]);
        }
    }
    fs::write(dir.join(TABLE_FILES[4]), &w.buf).map_err(|e| AppError::format(dir, e))?;

    Ok(())
}

fn corrupt(dir: &Path, table: &str) -> AppError {
    AppError::format(dir, format!("corrupt table '{table}'"))
}

/// Loads a directory written by [`save_index`].
pub fn load_index(dir: &Path) -> AppResult<LibraryIndex> {
    let manifest_bytes =
        fs::read(dir.join(MANIFEST)).map_err(|e| AppError::format(dir, e))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| AppError::format(dir, format!("bad manifest: {e}")))?;
    if manifest.version != VERSION {
        return Err(AppError::format(
            dir,
            format!("unsupported index version {}", manifest.version),
        ));
    }

    let params = IndexParams {
        cube_base: manifest.params.cube_base,
        step: manifest.params.step,
        window: manifest.params.window,
        mag_threshold: manifest.params.mag_threshold,
        vote_threshold: manifest.params.vote_threshold,
    };
    let mut index = LibraryIndex::empty(params);
    for v in manifest.videos {
        index.videos.insert(
            v.video_id.clone(),
            VideoMeta {
                video_id: v.video_id,
                width: v.width,
                height: v.height,
                frame_count: v.frame_count,
                time_steps: v.time_steps,
            },
        );
    }

    let table = |name: &str| -> AppResult<Vec<u8>> {
        fs::read(dir.join(name)).map_err(|e| AppError::format(dir, e))
    };

    let bytes = table(TABLE_FILES[0])?;
    let mut r = Reader::new(&bytes);
    let count = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[0]))? as usize;
    let mut fragment_ids = Vec::with_capacity(count);
    for _ in 0..count {
        let id = read_fragment_id(&mut r).ok_or_else(|| corrupt(dir, TABLE_FILES[0]))?;
        let n = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[0]))? as usize;
        let mut activations = std::collections::BTreeSet::new();
        for _ in 0..n {
            let word = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[0]))?;
            let tau = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[0]))?;
            activations.insert((word, tau));
        }
        index.fragment_forward.insert(id.clone(), activations);
        fragment_ids.push(id);
    }
    if !r.done() {
        return Err(corrupt(dir, TABLE_FILES[0]));
    }

    let bytes = table(TABLE_FILES[1])?;
    let mut r = Reader::new(&bytes);
    let count = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[1]))? as usize;
    for _ in 0..count {
        let word = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[1]))?;
        let tau = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[1]))?;
        let n = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[1]))? as usize;
        let mut ids = std::collections::BTreeSet::new();
        for _ in 0..n {
            let ord = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[1]))? as usize;
            let id = fragment_ids
                .get(ord)
                .ok_or_else(|| corrupt(dir, TABLE_FILES[1]))?;
            ids.insert(id.clone());
        }
        index.fragment_inverse.insert((word, tau), ids);
    }
    if !r.done() {
        return Err(corrupt(dir, TABLE_FILES[1]));
    }

    let bytes = table(TABLE_FILES[2])?;
    let mut r = Reader::new(&bytes);
    let count = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[2]))? as usize;
    for _ in 0..count {
        let video = r.str().ok_or_else(|| corrupt(dir, TABLE_FILES[2]))?;
        let flip = flip_from(r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[2]))?)
            .ok_or_else(|| corrupt(dir, TABLE_FILES[2]))?;
        let step = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[2]))?;
        let width = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[2]))?;
        let height = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[2]))?;
        let n = width as usize * height as usize;
        let mut mag = Vec::with_capacity(n);
        for _ in 0..n {
            mag.push(r.f32().ok_or_else(|| corrupt(dir, TABLE_FILES[2]))?);
        }
        index.flow_fields.insert(
            (video, flip, step),
            MagnitudeField { width, height, mag },
        );
    }
    if !r.done() {
        return Err(corrupt(dir, TABLE_FILES[2]));
    }

    let bytes = table(TABLE_FILES[3])?;
    let mut r = Reader::new(&bytes);
    let count = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))? as usize;
    let mut track_keys = Vec::with_capacity(count);
    for _ in 0..count {
        let key = r.str().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
        let track_id = r.str().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
        let video_id = r.str().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
        let flip = flip_from(r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?)
            .ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
        let start_frame = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
        let n = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))? as usize;
        let mut boxes = Vec::with_capacity(n);
        for _ in 0..n {
            let left = r.i32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
            let top = r.i32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
            let right = r.i32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
            let bottom = r.i32().ok_or_else(|| corrupt(dir, TABLE_FILES[3]))?;
            boxes.push(
                BoundingBox::new(left, top, right, bottom)
                    .map_err(|_| corrupt(dir, TABLE_FILES[3]))?,
            );
        }
        index.track_forward.insert(
            key.clone(),
            Track {
                track_id,
                video_id,
                flip,
                start_frame,
                boxes,
            },
        );
        track_keys.push(key);
    }
    if !r.done() {
        return Err(corrupt(dir, TABLE_FILES[3]));
    }

    let bytes = table(TABLE_FILES[4])?;
    let mut r = Reader::new(&bytes);
    let count = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[4]))? as usize;
    for _ in 0..count {
        let ord = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[4]))? as usize;
        let id = fragment_ids
            .get(ord)
            .ok_or_else(|| corrupt(dir, TABLE_FILES[4]))?;
        let n = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[4]))? as usize;
        let mut tracks = std::collections::BTreeSet::new();
        for _ in 0..n {
            let t = r.u32().ok_or_else(|| corrupt(dir, TABLE_FILES[4]))? as usize;
            let key = track_keys
                .get(t)
                .ok_or_else(|| corrupt(dir, TABLE_FILES[4]))?;
            tracks.insert(key.clone());
        }
        index.track_inverse.insert(id.clone(), tracks);
    }
    if !r.done() {
        return Err(corrupt(dir, TABLE_FILES[4]));
    }

    Ok(index)
}
