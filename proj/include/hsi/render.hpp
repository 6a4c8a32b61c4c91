#pragma once

#include "hsi/data.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace hsi {

using Rgb = std::array<std::uint8_t, 3>;

// Entry 0 is background black; class c sits at index c.
struct Palette {
  std::vector<Rgb> colors;
};

// Golden-angle hue stepping (137.5 deg per class) at fixed saturation/value.
Palette default_palette(int num_classes);

// Applies "<id> <r> <g> <b>" lines over `base`, growing it when an id is
// past the end. Blank lines and '#' comments are ignored.
Palette apply_palette_overrides(Palette base, std::string_view text);

struct ClassGrid {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::vector<int> cells;

  int at(std::size_t row, std::size_t col) const { return cells[row * samples + col]; }
};

using PixelClassifier = std::function<int(std::span<const double>)>;

// Classifies every pixel, background included, from its N x N patch of a
// normalized cube. Rows are distributed over `threads` workers; each cell
// is written by exactly one worker.
ClassGrid predict_scene(const PixelClassifier& classify, const HyperCube& cube, std::size_t patch_size,
                        unsigned threads = 1);

// Zeroes every cell whose ground-truth label is 0.
ClassGrid mask_background(ClassGrid grid, const LabelMap& labels);

ClassGrid grid_from_labels(const LabelMap& labels);

// Binary PPM (P6): "P6\n<samples> <lines>\n255\n" then RGB rows.
std::vector<std::byte> render_ppm(const ClassGrid& grid, const Palette& palette);
std::vector<std::byte> render_ground_truth(const LabelMap& labels, const Palette& palette);

}  // namespace hsi
