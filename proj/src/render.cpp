#include "hsi/render.hpp"

#include "hsi/error.hpp"
#include "hsi/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace hsi {

namespace {

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  auto byte = [](double u) { return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0)); };
  return {byte(r + m), byte(g + m), byte(b + m)};
}

}  // namespace

Palette default_palette(int num_classes) {
  Palette p;
  p.colors.push_back({0, 0, 0});
  for (int c = 1; c <= num_classes; ++c) {
    const double hue = std::fmod(137.5 * (c - 1), 360.0);
    // Alternate value so neighbouring hues stay distinguishable.
    const double value = (c % 2 == 1) ? 0.95 : 0.75;
    p.colors.push_back(hsv_to_rgb(hue, 0.85, value));
  }
  return p;
}

Palette apply_palette_overrides(Palette base, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    long id, r, g, b;
    if (!(fields >> id)) continue;
    if (!(fields >> r >> g >> b) || id < 0 || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
      throw Error(ErrorCode::BadConfig, "palette line " + std::to_string(line_no) + " is not '<id> <r> <g> <b>'");
    if (static_cast<std::size_t>(id) >= base.colors.size()) base.colors.resize(static_cast<std::size_t>(id) + 1, Rgb{0, 0, 0});
    base.colors[static_cast<std::size_t>(id)] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                                 static_cast<std::uint8_t>(b)};
  }
  return base;
}

ClassGrid predict_scene(const PixelClassifier& classify, const HyperCube& cube, std::size_t patch_size,
                        unsigned threads) {
  ClassGrid grid{cube.lines(), cube.samples(), std::vector<int>(cube.lines() * cube.samples(), 0)};
  parallel_for(cube.lines(), [&](std::size_t r) {
    for (std::size_t c = 0; c < cube.samples(); ++c) {
      const auto patch = extract_patch(cube, r, c, patch_size);
      grid.cells[r * cube.samples() + c] = classify(patch);
    }
  }, threads);
  return grid;
}

ClassGrid mask_background(ClassGrid grid, const LabelMap& labels) {
  if (labels.lines != grid.lines || labels.samples != grid.samples)
    throw Error(ErrorCode::DimensionMismatch, "label map and grid differ in size");
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (labels.labels[i] == 0) grid.cells[i] = 0;
  return grid;
}

ClassGrid grid_from_labels(const LabelMap& labels) { return {labels.lines, labels.samples, labels.labels}; }

std::vector<std::byte> render_ppm(const ClassGrid& grid, const Palette& palette) {
  for (int id : grid.cells) {
    if (id < 0 || static_cast<std::size_t>(id) >= palette.colors.size())
      throw Error(ErrorCode::PaletteTooSmall, "class " + std::to_string(id) + " has no colour (palette holds " +
                                                  std::to_string(palette.colors.size()) + ")");
  }
  const std::string header = "P6\n" + std::to_string(grid.samples) + " " + std::to_string(grid.lines) + "\n255\n";
  std::vector<std::byte> out;
  out.reserve(header.size() + 3 * grid.cells.size());
  for (char ch : header) out.push_back(static_cast<std::byte>(ch));
  for (int id : grid.cells)
    for (auto channel : palette.colors[static_cast<std::size_t>(id)]) out.push_back(static_cast<std::byte>(channel));
  return out;
}

std::vector<std::byte> render_ground_truth(const LabelMap& labels, const Palette& palette) {
  return render_ppm(grid_from_labels(labels), palette);
}

}  // namespace hsi
