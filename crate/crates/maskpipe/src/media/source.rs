//! Frame sources: a single image, a directory of images, or a Y4M stream.
//! Every source yields frames with strictly increasing, gapless indices.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use crate::frame::Frame;
use crate::geom::FrameDims;
use crate::media::y4m::Y4mReader;
use crate::media::{ppm, MediaError};

/// Default declared rate for sources that carry no timing of their own.
pub const DEFAULT_FPS: f64 = 30.0;

pub struct ImageDirSource {
    files: Vec<PathBuf>,
    next: usize,
    dims: Option<FrameDims>,
    fps: f64,
}

pub enum FrameSource {
    SingleImage(Option<Frame>),
    ImageDir(ImageDirSource),
    Y4m(Y4mReader<Box<dyn BufRead + Send>>),
}

fn is_supported_image(path: &Path) -> bool {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("ppm") => true,
        #[cfg(feature = "png")]
        Some(e) if e.eq_ignore_ascii_case("png") => true,
        _ => false,
    }
}

/// Decodes one image file by extension.
pub fn read_image_file(path: &Path) -> Result<Frame, MediaError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("ppm") {
        return ppm::read_ppm_file(path);
    }
    #[cfg(feature = "png")]
    if ext.eq_ignore_ascii_case("png") {
        let img = image::open(path)
            .map_err(|e| MediaError::Decode {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?
            .to_rgb8();
        let dims = FrameDims::new(img.width(), img.height());
        return Ok(Frame::new(dims, img.into_raw(), 0));
    }
    Err(MediaError::Decode {
        path: path.to_path_buf(),
        reason: format!("unsupported image extension {ext:?}"),
    })
}

/// Lists the readable image files of a dataset directory in byte-wise
/// lexicographic filename order (note: `f_10` sorts before `f_9`).
pub fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>, MediaError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && is_supported_image(p))
        .collect();
    files.sort_by(|a, b| {
        a.file_name()
            .unwrap_or_default()
            .as_encoded_bytes()
            .cmp(b.file_name().unwrap_or_default().as_encoded_bytes())
    });
    Ok(files)
}

/// Source over a directory of images, ordered by filename bytes, indexed
/// `0..n-1`. All frames must share one raster size.
pub fn read_image_dir(dir: &Path) -> Result<FrameSource, MediaError> {
    let files = list_image_files(dir)?;
    if files.is_empty() {
        return Err(MediaError::EmptyDirectory(dir.to_path_buf()));
    }
    Ok(FrameSource::ImageDir(ImageDirSource {
        files,
        next: 0,
        dims: None,
        fps: DEFAULT_FPS,
    }))
}

impl FrameSource {
    pub fn single_image(path: &Path) -> Result<Self, MediaError> {
        let frame = read_image_file(path)?;
        Ok(FrameSource::SingleImage(Some(frame)))
    }

    pub fn from_y4m(reader: Box<dyn BufRead + Send>) -> Result<Self, MediaError> {
        Ok(FrameSource::Y4m(Y4mReader::new(reader)?))
    }

    /// Declared frame rate; Y4M streams carry their own, images default to
    /// 30 FPS.
    pub fn fps(&self) -> f64 {
        match self {
            FrameSource::Y4m(r) => r.fps(),
            FrameSource::ImageDir(d) => d.fps,
            FrameSource::SingleImage(_) => DEFAULT_FPS,
        }
    }

    pub fn set_fps(&mut self, fps: f64) {
        if let FrameSource::ImageDir(d) = self {
            d.fps = fps;
        }
    }

    /// Next frame in order, or `None` when the source is exhausted.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, MediaError> {
        match self {
            FrameSource::SingleImage(slot) => Ok(slot.take()),
            FrameSource::Y4m(r) => r.next_frame(),
            FrameSource::ImageDir(d) => {
                let Some(path) = d.files.get(d.next) else {
                    return Ok(None);
                };
                let mut frame = read_image_file(path)?;
                frame.index = d.next as u64;
                match d.dims {
                    None => d.dims = Some(frame.dims),
                    Some(want) if want != frame.dims => {
                        return Err(MediaError::DimensionMismatch {
                            index: d.next as u64,
                            got: frame.dims,
                            want,
                        });
                    }
                    _ => {}
                }
                d.next += 1;
                Ok(Some(frame))
            }
        }
    }
}

/// Resolves a CLI input argument: `-` reads Y4M from stdin, a directory
/// becomes an image-sequence source, a `.y4m` file streams from disk, and
/// anything else is opened as a single image.
pub fn open_source(input: &str) -> Result<FrameSource, MediaError> {
    if input == "-" {
        let stdin = Box::new(std::io::BufReader::new(std::io::stdin()));
        return FrameSource::from_y4m(stdin);
    }
    let path = Path::new(input);
    if path.is_dir() {
        return read_image_dir(path);
    }
    if path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("y4m"))
    {
        let file = Box::new(std::io::BufReader::new(std::fs::File::open(path)?));
        return FrameSource::from_y4m(file);
    }
    FrameSource::single_image(path)
}
