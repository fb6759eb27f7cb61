//! F-measure and the two object coverage tests.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{load_image, BorderPolicy, LabelImage};

/// Binary object masks on the original (unframed) pixel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    width: usize,
    height: usize,
    masks: Vec<Vec<bool>>,
}

impl GroundTruth {
    pub fn new(width: usize, height: usize, masks: Vec<Vec<bool>>) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::InvalidArgument("ground truth needs at least one object".into()));
        }
        for (i, m) in masks.iter().enumerate() {
            if m.len() != width * height {
                return Err(Error::SizeMismatch {
                    expected: width * height,
                    found: m.len(),
                });
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::InvalidArgument(format!("object mask {i} is empty")));
            }
        }
        Ok(GroundTruth { width, height, masks })
    }

    /// One object per file; nonzero pixels belong to the object.
    pub fn load(paths: &[impl AsRef<Path>]) -> Result<Self> {
        let mut dims = None;
        let mut masks = Vec::new();
        for p in paths {
            let img = load_image(p, BorderPolicy::None)?;
            let d = (img.width(), img.height());
            if *dims.get_or_insert(d) != d {
                return Err(Error::SizeMismatch {
                    expected: dims.map_or(0, |(w, h)| w * h),
                    found: img.len(),
                });
            }
            masks.push(img.data().iter().map(|&v| v > 0.0).collect());
        }
        let (w, h) = dims.ok_or_else(|| Error::InvalidArgument("no ground-truth masks given".into()))?;
        GroundTruth::new(w, h, masks)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Prf {
    fn from_counts(inter: usize, seg: usize, gt: usize) -> Prf {
        let precision = if seg == 0 { 0.0 } else { inter as f64 / seg as f64 };
        let recall = inter as f64 / gt as f64;
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f }
    }
}

pub fn f_measure(seg: &[bool], gt: &[bool]) -> Result<Prf> {
    if seg.len() != gt.len() {
        return Err(Error::SizeMismatch {
            expected: gt.len(),
            found: seg.len(),
        });
    }
    let gt_size = gt.iter().filter(|&&b| b).count();
    if gt_size == 0 {
        return Err(Error::InvalidArgument("empty ground truth".into()));
    }
    let seg_size = seg.iter().filter(|&&b| b).count();
    let inter = seg.iter().zip(gt).filter(|(&s, &g)| s && g).count();
    Ok(Prf::from_counts(inter, seg_size, gt_size))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectScore {
    pub prf: Prf,
    pub fragments: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub objects: Vec<ObjectScore>,
}

impl CoverageReport {
    pub fn mean_f(&self) -> f64 {
        self.objects.iter().map(|o| o.prf.f).sum::<f64>() / self.objects.len() as f64
    }

    pub fn mean_fragments(&self) -> f64 {
        self.objects.iter().map(|o| o.fragments as f64).sum::<f64>() / self.objects.len() as f64
    }
}

/// Region sizes and per-object overlaps on the unframed domain.
struct Overlaps {
    region_size: Vec<usize>,
    /// `inter[object][region]`
    inter: Vec<Vec<usize>>,
    gt_size: Vec<usize>,
}

fn overlaps(partition: &LabelImage, gt: &GroundTruth) -> Result<Overlaps> {
    let labels = if partition.frame() > 0 { partition.crop_frame() } else { partition.clone() };
    if (labels.width(), labels.height()) != (gt.width(), gt.height()) {
        return Err(Error::SizeMismatch {
            expected: gt.width() * gt.height(),
            found: labels.width() * labels.height(),
        });
    }
    let mut region_size = vec![0; labels.count()];
    for &l in labels.labels() {
        region_size[l as usize] += 1;
    }
    let mut inter = vec![vec![0; labels.count()]; gt.masks().len()];
    for (o, mask) in gt.masks().iter().enumerate() {
        for (&l, &m) in labels.labels().iter().zip(mask) {
            if m {
                inter[o][l as usize] += 1;
            }
        }
    }
    let gt_size = gt.masks().iter().map(|m| m.iter().filter(|&&b| b).count()).collect();
    Ok(Overlaps {
        region_size,
        inter,
        gt_size,
    })
}

fn best_single(ov: &Overlaps, o: usize) -> Prf {
    let mut best = Prf::from_counts(0, 0, ov.gt_size[o]);
    for (r, &size) in ov.region_size.iter().enumerate() {
        let prf = Prf::from_counts(ov.inter[o][r], size, ov.gt_size[o]);
        if prf.f > best.f {
            best = prf;
        }
    }
    best
}

/// Per object, the single region with the highest F-measure.
pub fn single_segment_coverage(partition: &LabelImage, gt: &GroundTruth) -> Result<CoverageReport> {
    let ov = overlaps(partition, gt)?;
    let objects = (0..gt.masks().len())
        .map(|o| ObjectScore {
            prf: best_single(&ov, o),
            fragments: 1,
        })
        .collect();
    Ok(CoverageReport { objects })
}

/// Per object, the union of all regions lying at least `overlap_ratio` inside it. When no
/// region qualifies, the best single region stands in so every object reports a segment.
pub fn fragmented_coverage(partition: &LabelImage, gt: &GroundTruth, overlap_ratio: f64) -> Result<CoverageReport> {
    if !(overlap_ratio > 0.0 && overlap_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("overlap ratio {overlap_ratio} outside (0, 1]")));
    }
    let ov = overlaps(partition, gt)?;
    let objects = (0..gt.masks().len())
        .map(|o| {
            let (mut inter, mut size, mut fragments) = (0, 0, 0);
            for (r, &rs) in ov.region_size.iter().enumerate() {
                let i = ov.inter[o][r];
                if rs > 0 && i as f64 >= overlap_ratio * rs as f64 {
                    inter += i;
                    size += rs;
                    fragments += 1;
                }
            }
            if fragments == 0 {
                ObjectScore {
                    prf: best_single(&ov, o),
                    fragments: 1,
                }
            } else {
                ObjectScore {
                    prf: Prf::from_counts(inter, size, ov.gt_size[o]),
                    fragments,
                }
            }
        })
        .collect();
    Ok(CoverageReport { objects })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_measure_cases() {
        let gt = [true, true, false, false];
        assert_eq!(f_measure(&gt, &gt).unwrap().f, 1.0);
        let disjoint = f_measure(&[false, false, true, true], &gt).unwrap();
        assert_eq!((disjoint.precision, disjoint.recall, disjoint.f), (0.0, 0.0, 0.0));
        let half = f_measure(&[true, false, false, false], &gt).unwrap();
        assert_eq!((half.precision, half.recall), (1.0, 0.5));
        assert!((half.f - 2.0 / 3.0).abs() < 1e-15);
        assert!(f_measure(&gt, &[false; 4]).is_err());
    }

    #[test]
    fn singleton_partition_on_object() {
        // k = 5 pixel object in a 4×4 image of singletons
        let mut mask = vec![false; 16];
        for p in [1, 2, 5, 6, 9] {
            mask[p] = true;
        }
        let gt = GroundTruth::new(4, 4, vec![mask]).unwrap();
        let raw: Vec<u32> = (0..16).collect();
        let part = LabelImage::from_raw(4, 4, &raw, 0).unwrap();
        let r = single_segment_coverage(&part, &gt).unwrap();
        assert!((r.objects[0].prf.f - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn fragmented_unions() {
        let mask: Vec<bool> = (0..8).map(|p| p < 6).collect();
        let gt = GroundTruth::new(8, 1, vec![mask]).unwrap();
        let exact = LabelImage::from_raw(8, 1, &[0, 0, 0, 0, 0, 0, 1, 1], 0).unwrap();
        let r = fragmented_coverage(&exact, &gt, 0.5).unwrap();
        assert_eq!((r.objects[0].prf.f, r.objects[0].fragments), (1.0, 1));
        let split = LabelImage::from_raw(8, 1, &[0, 0, 1, 1, 2, 2, 3, 3], 0).unwrap();
        let r = fragmented_coverage(&split, &gt, 0.5).unwrap();
        assert_eq!((r.objects[0].prf.f, r.objects[0].fragments), (1.0, 3));
        let straddling = LabelImage::from_raw(8, 1, &[0, 0, 1, 1, 1, 2, 2, 2], 0).unwrap();
        let strict = fragmented_coverage(&straddling, &gt, 1.0).unwrap();
        assert_eq!(strict.objects[0].prf.precision, 1.0);
        assert_eq!(strict.objects[0].fragments, 2);
        let loose = fragmented_coverage(&straddling, &gt, 0.3).unwrap();
        assert!(loose.objects[0].prf.recall >= strict.objects[0].prf.recall);
    }

    #[test]
    fn frame_is_cropped_before_scoring() {
        let gt = GroundTruth::new(1, 1, vec![vec![true]]).unwrap();
        let framed = LabelImage::from_raw(3, 3, &[0, 0, 0, 0, 1, 0, 0, 0, 0], 1).unwrap();
        assert_eq!(single_segment_coverage(&framed, &gt).unwrap().mean_f(), 1.0);
    }
}
