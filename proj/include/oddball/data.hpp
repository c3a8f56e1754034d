#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oddball/linalg.hpp"

namespace oddball {

// Thrown for malformed IDX streams and dataset construction errors.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RawImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count*rows*cols, row-major
};

// IDX unsigned-byte 3-D container (magic 0x00000803).
RawImages parse_idx_images(std::span<const std::uint8_t> bytes);

// IDX unsigned-byte 1-D container (magic 0x00000801); every label must be 0..9.
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

// Reads a file, transparently inflating it when the gzip magic is present.
// Throws DataError if the file cannot be opened or decompressed.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path);

// CRC32 (zlib polynomial) of raw file content, for run manifests.
std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

Vector one_hot(int digit);

struct Dataset {
  std::vector<Vector> inputs;  // normalized, length 784 each
  std::vector<Vector> labels;  // one-hot, length 10 each
  std::vector<int> label_index;

  std::size_t size() const { return inputs.size(); }
};

enum class NormalizationMode { global_mean, per_pixel_mean };

// Raw bytes are divided by `scale`, then the train-derived mean is
// subtracted. offset is the global mean; pixel_offsets is used instead when
// mode is per_pixel_mean.
struct NormalizationSpec {
  double scale = 255.0;
  double offset = 0.0;
  NormalizationMode mode = NormalizationMode::global_mean;
  Vector pixel_offsets;
};

struct DatasetBundle {
  Dataset train;
  Dataset test;
  NormalizationSpec norm;
};

// Takes the first n_train examples in file order, normalizes with the
// train-derived spec, and applies the identical spec to the test set.
DatasetBundle build_datasets(const RawImages& train_images,
                             std::span<const std::uint8_t> train_labels,
                             const RawImages& test_images,
                             std::span<const std::uint8_t> test_labels,
                             std::size_t n_train = 256,
                             NormalizationMode mode = NormalizationMode::global_mean);

}  // namespace oddball
