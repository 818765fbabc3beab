#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "iat/image.hpp"
#include "iat/rng.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat::train {

/// Procedural test card: a colour gradient with soft blobs, hard-edged
/// rectangles and discs, stripes, and band-limited noise texture.
Image synthetic_image(Rng& rng, int width, int height);

/// Source of square training crops drawn uniformly from a fixed image set.
class PatchSampler {
 public:
  /// image_count procedurally generated images of image_size^2 from seed.
  static PatchSampler synthetic(int image_count, int image_size, int patch, std::uint64_t seed);
  /// Every PNG/PPM file in dir (sorted by name). Images with a side below
  /// min_size are skipped and counted; throws IoError when none remain.
  static PatchSampler from_directory(const std::string& dir, int min_size, int patch, std::ostream* log = nullptr);
  static PatchSampler from_images(std::vector<Image> images, int patch);

  Image sample(Rng& rng) const;
  /// N x 3 x P x P batch of crops in [0, 1].
  TensorF sample_batch(Rng& rng, int batch) const;

  std::size_t image_count() const { return images_.size(); }
  std::size_t skipped() const { return skipped_; }
  int patch() const { return patch_; }

 private:
  std::vector<Image> images_;
  std::size_t skipped_ = 0;
  int patch_ = 0;
};

}  // namespace iat::train
