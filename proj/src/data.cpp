#include "oddball/data.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace oddball {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t off) {
  return (static_cast<std::uint32_t>(bytes[off]) << 24) |
         (static_cast<std::uint32_t>(bytes[off + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[off + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[off + 3]);
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes,
                                 const std::string& what) {
  z_stream strm{};
  // 15+32: accept zlib or gzip wrapper
  if (inflateInit2(&strm, 15 + 32) != Z_OK)
    throw DataError(what + ": inflateInit failed");
  std::vector<std::uint8_t> out;
  out.reserve(bytes.size() * 4);
  std::uint8_t buf[1 << 16];
  strm.next_in = const_cast<std::uint8_t*>(bytes.data());
  strm.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    strm.next_out = buf;
    strm.avail_out = sizeof(buf);
    rc = inflate(&strm, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&strm);
      throw DataError(what + ": corrupt gzip stream");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - strm.avail_out));
  }
  inflateEnd(&strm);
  return out;
}

}  // namespace

RawImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw DataError("idx images: truncated header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000803u)
    throw DataError("idx images: bad magic number (expected 0x00000803)");
  RawImages img;
  img.count = read_be32(bytes, 4);
  img.rows = read_be32(bytes, 8);
  img.cols = read_be32(bytes, 12);
  const auto want = static_cast<unsigned __int128>(img.count) * img.rows * img.cols;
  if (static_cast<unsigned __int128>(bytes.size() - 16) != want)
    throw DataError("idx images: payload length does not match header");
  img.pixels.assign(bytes.begin() + 16, bytes.end());
  return img;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw DataError("idx labels: truncated header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000801u)
    throw DataError("idx labels: bad magic number (expected 0x00000801)");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 != count)
    throw DataError("idx labels: payload length does not match header");
  std::vector<std::uint8_t> labels(bytes.begin() + 8, bytes.end());
  for (std::uint8_t v : labels)
    if (v > 9) throw DataError("idx labels: label value out of range 0..9");
  return labels;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f),
                                  std::istreambuf_iterator<char>()};
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
    return gunzip(bytes, path);
  return bytes;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

Vector one_hot(int digit) {
  Vector v(10, 0.0);
  v[static_cast<std::size_t>(digit)] = 1.0;
  return v;
}

namespace {

Dataset vectorize(const RawImages& images, std::span<const std::uint8_t> labels,
                  std::size_t begin, std::size_t count,
                  const NormalizationSpec& norm) {
  const std::size_t dim = images.rows * images.cols;
  Dataset ds;
  ds.inputs.reserve(count);
  ds.labels.reserve(count);
  ds.label_index.reserve(count);
  for (std::size_t n = begin; n < begin + count; ++n) {
    Vector x(dim);
    const std::uint8_t* px = images.pixels.data() + n * dim;
    if (norm.mode == NormalizationMode::global_mean) {
      for (std::size_t i = 0; i < dim; ++i)
        x[i] = px[i] / norm.scale - norm.offset;
    } else {
      for (std::size_t i = 0; i < dim; ++i)
        x[i] = px[i] / norm.scale - norm.pixel_offsets[i];
    }
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(one_hot(labels[n]));
    ds.label_index.push_back(labels[n]);
  }
  return ds;
}

}  // namespace

DatasetBundle build_datasets(const RawImages& train_images,
                             std::span<const std::uint8_t> train_labels,
                             const RawImages& test_images,
                             std::span<const std::uint8_t> test_labels,
                             std::size_t n_train, NormalizationMode mode) {
  if (train_images.count != train_labels.size())
    throw DataError("train images/labels count mismatch");
  if (test_images.count != test_labels.size())
    throw DataError("test images/labels count mismatch");
  if (n_train > train_images.count)
    throw DataError("n_train exceeds available training examples");
  if (n_train == 0) throw DataError("n_train must be positive");

  const std::size_t dim = train_images.rows * train_images.cols;
  NormalizationSpec norm;
  norm.mode = mode;
  if (mode == NormalizationMode::global_mean) {
    // One scalar mean over every pixel of the n_train subset (after /255).
    double sum = 0.0;
    for (std::size_t n = 0; n < n_train; ++n) {
      const std::uint8_t* px = train_images.pixels.data() + n * dim;
      for (std::size_t i = 0; i < dim; ++i) sum += px[i];
    }
    norm.offset = sum / norm.scale / static_cast<double>(n_train * dim);
  } else {
    norm.pixel_offsets.assign(dim, 0.0);
    for (std::size_t n = 0; n < n_train; ++n) {
      const std::uint8_t* px = train_images.pixels.data() + n * dim;
      for (std::size_t i = 0; i < dim; ++i) norm.pixel_offsets[i] += px[i];
    }
    for (double& v : norm.pixel_offsets)
      v /= norm.scale * static_cast<double>(n_train);
  }

  DatasetBundle bundle;
  bundle.norm = norm;
  bundle.train = vectorize(train_images, train_labels, 0, n_train, norm);
  bundle.test = vectorize(test_images, test_labels, 0, test_images.count, norm);
  return bundle;
}

}  // namespace oddball
