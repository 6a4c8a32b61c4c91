#pragma once

#include "hsi/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hsi {

enum class Interleave { Bsq, Bil, Bip };
enum class DataType { F32, F64, U8, I16, U16, I32 };
enum class ByteOrder { Little, Big };

std::size_t byte_size(DataType t);

struct CubeHeader {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::size_t bands = 0;
  Interleave interleave = Interleave::Bsq;
  DataType data_type = DataType::F32;
  ByteOrder byte_order = ByteOrder::Little;

  std::size_t element_count() const { return lines * samples * bands; }
  bool operator==(const CubeHeader&) const = default;
};

// Values are stored (row, col, band) row-major regardless of the on-disk
// interleave, so a pixel's spectrum is contiguous.
struct HyperCube {
  CubeHeader header;
  std::vector<double> values;

  HyperCube() = default;
  HyperCube(CubeHeader h, std::vector<double> v);

  std::size_t lines() const { return header.lines; }
  std::size_t samples() const { return header.samples; }
  std::size_t bands() const { return header.bands; }

  double at(std::size_t row, std::size_t col, std::size_t band) const {
    return values[(row * header.samples + col) * header.bands + band];
  }
  std::span<const double> pixel(std::size_t row, std::size_t col) const {
    return {values.data() + (row * header.samples + col) * header.bands, header.bands};
  }
};

struct LabelMap {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::vector<int> labels;
  int num_classes = 0;

  LabelMap() = default;
  // num_classes < 0 means "infer from the largest label".
  LabelMap(std::size_t lines, std::size_t samples, std::vector<int> labels, int num_classes = -1);

  int at(std::size_t row, std::size_t col) const { return labels[row * samples + col]; }
};

struct PixelCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const PixelCoord&) const = default;
};

struct SampleSet {
  Matrix features;
  std::vector<int> labels;
  std::vector<PixelCoord> coords;
  std::size_t patch_size = 1;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// ENVI

CubeHeader parse_envi_header(std::string_view text);
std::string format_envi_header(const CubeHeader& header);

HyperCube load_cube(const CubeHeader& header, std::span<const std::byte> raw);

// Inverse of load_cube for the layout described by `layout` (its dimensions
// are taken from the cube).
std::vector<std::byte> encode_cube(const HyperCube& cube, Interleave interleave,
                                   DataType data_type = DataType::F64,
                                   ByteOrder byte_order = ByteOrder::Little);

// ---------------------------------------------------------------------------
// NPY v1.0

struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

NpyArray load_npy(std::span<const std::byte> raw);

// Writes little-endian NPY v1.0. Integer labels go out as '<i4', cubes as '<f8'.
std::vector<std::byte> encode_npy_f64(std::span<const std::size_t> shape, std::span<const double> data);
std::vector<std::byte> encode_npy_i32(std::span<const std::size_t> shape, std::span<const int> data);

HyperCube cube_from_npy(const NpyArray& array);
LabelMap labels_from_npy(const NpyArray& array, int num_classes = -1);

// File helpers: .npy by extension, otherwise ENVI (.hdr path or data file
// with a sibling .hdr).
std::vector<std::byte> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::byte> bytes);
HyperCube read_cube_file(const std::string& path);
LabelMap read_labels_file(const std::string& path);

// ---------------------------------------------------------------------------
// Preprocessing

struct NormalizeOptions {
  bool per_band = false;
};

// Min-max scaling to [0, 1]; a constant cube (or band, per_band) maps to 0.
HyperCube normalize_cube(const HyperCube& cube, NormalizeOptions options = {});

// N x N window around (row, col), pixels in row-major window order and bands
// contiguous per pixel. Neighbors outside the image are mirrored about the
// edge pixel (..., 2, 1 | 0, 1, 2, ...).
std::vector<double> extract_patch(const HyperCube& cube, std::size_t row, std::size_t col,
                                  std::size_t patch_size);

// One sample per labeled pixel (label 0 is skipped), scanned row-major. The
// cube is used as given; normalize it first.
SampleSet build_samples(const HyperCube& cube, const LabelMap& labels, std::size_t patch_size);

// Stratified split: each class is shuffled with the seeded generator and its
// first floor(fraction * n_c) members go to train. Classes are visited in
// increasing id order; both index lists come back sorted.
SplitIndices split_samples(const SampleSet& set, double train_fraction, std::uint64_t seed);

// Desk-scale scene: a one-pixel background border (when the image is at
// least 3x3) around C rectangular class regions. Each class has a fixed
// cosine spectral signature; pixels add N(0, noise_sigma^2) noise per band.
std::pair<HyperCube, LabelMap> gen_synthetic_scene(std::size_t lines, std::size_t samples,
                                                   std::size_t bands, int num_classes,
                                                   std::uint64_t seed, double noise_sigma = 0.05);

// Mean spectrum used for class `class_id` (1-based) by gen_synthetic_scene.
std::vector<double> synthetic_class_mean(int class_id, std::size_t bands);

}  // namespace hsi
