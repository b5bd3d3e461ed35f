#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "delaysnn/error.hpp"

namespace delaysnn {

inline constexpr std::size_t kRawSide = 28;
inline constexpr std::size_t kGridSide = 10;
inline constexpr std::size_t kGridPixels = kGridSide * kGridSide;
inline constexpr std::uint32_t kImageMagic = 2051;
inline constexpr std::uint32_t kLabelMagic = 2049;

/// 28x28 grey-level image, row-major.
struct RawImage {
  std::array<std::uint8_t, kRawSide * kRawSide> pixels{};

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * kRawSide + col]; }
  friend bool operator==(const RawImage&, const RawImage&) = default;
};

/// Downscaled 10x10 image normalised to [0, 1], with its digit label.
struct Instance {
  std::array<double, kGridPixels> pixels{};
  int label = 0;
};

namespace detail {

/// Reads a whole file, inflating it first if it is gzip-compressed.
inline std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("file not found: " + path.string());
  std::unique_ptr<gzFile_s, int (*)(gzFile)> file(gzopen(path.c_str(), "rb"), gzclose);
  if (!file) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::array<std::uint8_t, 1 << 16> chunk;
  for (;;) {
    const int n = gzread(file.get(), chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) throw DataError("read error in " + path.string());
    if (n == 0) break;
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
  }
  return bytes;
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline void put_be32(std::vector<std::uint8_t>& bytes, std::uint32_t value) {
  for (int shift = 24; shift >= 0; shift -= 8) bytes.push_back(static_cast<std::uint8_t>(value >> shift));
}

inline void check_header(const std::vector<std::uint8_t>& bytes, std::size_t header_size,
                         std::uint32_t magic, const std::string& name) {
  if (bytes.size() < 4) throw DataError(name + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
  const std::uint32_t found = read_be32(bytes, 0);
  if (found != magic) {
    throw DataError(name + ": bad magic number " + std::to_string(found) + " at offset 0, expected " +
                    std::to_string(magic));
  }
  if (bytes.size() < header_size) {
    throw DataError(name + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

/// IDX3 image file (magic 2051, big-endian count/rows/cols), optionally gzipped.
inline std::vector<RawImage> read_images(const std::filesystem::path& path) {
  const auto bytes = detail::slurp(path);
  const std::string name = path.filename().string();
  detail::check_header(bytes, 16, kImageMagic, name);
  const std::uint32_t count = detail::read_be32(bytes, 4);
  const std::uint32_t rows = detail::read_be32(bytes, 8);
  const std::uint32_t cols = detail::read_be32(bytes, 12);
  if (rows != kRawSide || cols != kRawSide) {
    throw DataError(name + ": dimension mismatch at offset 8, got " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", expected 28x28");
  }
  constexpr std::size_t item = kRawSide * kRawSide;
  const std::size_t available = (bytes.size() - 16) / item;
  if (count > available) {
    throw DataError(name + ": truncated at item " + std::to_string(available) + " (offset " +
                    std::to_string(16 + available * item) + ")");
  }
  std::vector<RawImage> images(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(16 + i * item), item, images[i].pixels.begin());
  }
  return images;
}

/// IDX1 label file (magic 2049).
inline std::vector<std::uint8_t> read_labels(const std::filesystem::path& path) {
  const auto bytes = detail::slurp(path);
  const std::string name = path.filename().string();
  detail::check_header(bytes, 8, kLabelMagic, name);
  const std::uint32_t count = detail::read_be32(bytes, 4);
  if (8 + std::size_t{count} > bytes.size()) {
    const std::size_t item = bytes.size() - 8;
    throw DataError(name + ": truncated at item " + std::to_string(item) + " (offset " +
                    std::to_string(bytes.size()) + ")");
  }
  return {bytes.begin() + 8, bytes.begin() + 8 + count};
}

inline void write_images(const std::filesystem::path& path, const std::vector<RawImage>& images) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(16 + images.size() * kRawSide * kRawSide);
  detail::put_be32(bytes, kImageMagic);
  detail::put_be32(bytes, static_cast<std::uint32_t>(images.size()));
  detail::put_be32(bytes, kRawSide);
  detail::put_be32(bytes, kRawSide);
  for (const RawImage& image : images) bytes.insert(bytes.end(), image.pixels.begin(), image.pixels.end());
  detail::write_file(path, bytes);
}

inline void write_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> bytes;
  detail::put_be32(bytes, kLabelMagic);
  detail::put_be32(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  detail::write_file(path, bytes);
}

/// Exact area-average pooling from 28x28 to 10x10 (each output cell covers
/// 2.8x2.8 input pixels, partial pixels weighted by coverage), scaled to [0, 1].
/// Cell edges fall on multiples of 1/5 pixel, so coverage is kept as integer
/// fifths and the only rounding is the final division.
inline std::array<double, kGridPixels> downscale(const RawImage& image) {
  constexpr int sub = 5;                                   // subdivisions per input pixel
  constexpr int cell = static_cast<int>(kRawSide) * sub / static_cast<int>(kGridSide);  // 14
  // coverage[o][i]: overlap of input row/col i with output cell o, in fifths.
  std::array<std::array<std::int64_t, kRawSide>, kGridSide> coverage{};
  for (std::size_t o = 0; o < kGridSide; ++o) {
    const int lo = cell * static_cast<int>(o);
    const int hi = lo + cell;
    for (std::size_t i = 0; i < kRawSide; ++i) {
      const int p_lo = sub * static_cast<int>(i);
      coverage[o][i] = std::max(0, std::min(hi, p_lo + sub) - std::max(lo, p_lo));
    }
  }
  constexpr double norm = static_cast<double>(cell) * cell * 255.0;
  std::array<double, kGridPixels> out{};
  for (std::size_t r = 0; r < kGridSide; ++r) {
    for (std::size_t c = 0; c < kGridSide; ++c) {
      std::int64_t sum = 0;
      for (std::size_t i = 0; i < kRawSide; ++i) {
        if (coverage[r][i] == 0) continue;
        std::int64_t row = 0;
        for (std::size_t j = 0; j < kRawSide; ++j) row += coverage[c][j] * image.at(i, j);
        sum += coverage[r][i] * row;
      }
      out[r * kGridSide + c] = static_cast<double>(sum) / norm;
    }
  }
  return out;
}

/// Which classes to sample and how many instances of each.
struct SplitSpec {
  std::vector<int> trained{0, 1};
  std::vector<int> unseen{2};
  std::size_t train_count = 20;
  std::size_t test_count = 25;
  std::uint64_t seed = 0;
};

/// Indices into the source dataset. Train lists trained classes in SplitSpec
/// order; test lists trained classes, then unseen classes.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class: seeded shuffle of that class's indices, then a disjoint prefix
/// split (first train_count to train, next test_count to test).
inline Split build_split(const std::vector<std::uint8_t>& labels, const SplitSpec& spec) {
  auto indices_of = [&](int digit) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == digit) idx.push_back(i);
    }
    std::mt19937_64 rng(spec.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(digit + 1)));
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
  };
  Split split;
  for (int digit : spec.trained) {
    auto idx = indices_of(digit);
    if (idx.size() < spec.train_count + spec.test_count) {
      throw DataError("class " + std::to_string(digit) + " has " + std::to_string(idx.size()) +
                      " instances, need " + std::to_string(spec.train_count + spec.test_count));
    }
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(spec.train_count));
  }
  for (int digit : spec.trained) {
    auto idx = indices_of(digit);
    const auto first = idx.begin() + static_cast<std::ptrdiff_t>(spec.train_count);
    split.test.insert(split.test.end(), first, first + static_cast<std::ptrdiff_t>(spec.test_count));
  }
  for (int digit : spec.unseen) {
    auto idx = indices_of(digit);
    if (idx.size() < spec.test_count) {
      throw DataError("class " + std::to_string(digit) + " has " + std::to_string(idx.size()) +
                      " instances, need " + std::to_string(spec.test_count));
    }
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(spec.test_count));
  }
  return split;
}

/// Images and labels loaded from one directory.
struct Dataset {
  std::vector<RawImage> images;
  std::vector<std::uint8_t> labels;

  Instance instance(std::size_t index) const {
    return {downscale(images.at(index)), static_cast<int>(labels.at(index))};
  }
};

inline constexpr const char* kDataDirEnv = "DELAYSNN_DATA";

/// Finds `stem` or `stem.gz` inside `dir`.
inline std::filesystem::path find_idx(const std::filesystem::path& dir, const std::string& stem) {
  for (const auto& candidate : {dir / stem, dir / (stem + ".gz")}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  throw DataError("no " + stem + "[.gz] in data directory " + dir.string());
}

/// Loads the training images/labels from `dir` (or $DELAYSNN_DATA when empty).
inline Dataset load_dataset(std::filesystem::path dir) {
  if (dir.empty()) {
    if (const char* env = std::getenv(kDataDirEnv)) dir = env;
  }
  if (dir.empty()) throw DataError(std::string("no data directory given and ") + kDataDirEnv + " is unset");
  if (!std::filesystem::is_directory(dir)) throw DataError("data directory not found: " + dir.string());
  Dataset data;
  data.images = read_images(find_idx(dir, "train-images-idx3-ubyte"));
  data.labels = read_labels(find_idx(dir, "train-labels-idx1-ubyte"));
  if (data.images.size() != data.labels.size()) {
    throw DataError("image count " + std::to_string(data.images.size()) + " != label count " +
                    std::to_string(data.labels.size()));
  }
  return data;
}

}  // namespace delaysnn
