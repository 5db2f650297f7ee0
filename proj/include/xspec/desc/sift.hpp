#pragma once

#include "xspec/desc/descriptor.hpp"
#include "xspec/image/image.hpp"

namespace xspec::desc {

struct SiftParams {
  int octaves = 4;
  int scales = 3;  // per octave
  double sigma = 1.6;
  double input_sigma = 0.5;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
};

// DoG extrema with sub-pixel refinement, contrast and edge rejection,
// 36-bin dominant orientations and 4x4x8 descriptors. Coordinates are in
// input pixels; an image without structure yields an empty set.
KeypointSet sift_keypoints(const img::SpectralImage& image, const SiftParams& params = {});

}  // namespace xspec::desc
