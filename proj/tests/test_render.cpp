#include "hsi/error.hpp"
#include "hsi/render.hpp"
#include "hsi/rng.hpp"

#include <doctest.h>

#include <string>

using namespace hsi;

namespace {

std::string header_of(std::size_t samples, std::size_t lines) {
  return "P6\n" + std::to_string(samples) + " " + std::to_string(lines) + "\n255\n";
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("one background pixel") {
  const auto bytes = render_ppm({1, 1, {0}}, default_palette(3));
  const auto h = header_of(1, 1);
  REQUIRE(bytes.size() == h.size() + 3);
  CHECK(std::string(reinterpret_cast<const char*>(bytes.data()), h.size()) == h);
  CHECK(bytes[h.size()] == std::byte{0});
  CHECK(bytes[h.size() + 1] == std::byte{0});
  CHECK(bytes[h.size() + 2] == std::byte{0});
}

TEST_CASE("every pixel carries its palette colour") {
  Rng rng(3);
  const auto palette = default_palette(5);
  for (int trial = 0; trial < 20; ++trial) {
    ClassGrid g{1 + rng.below(6), 1 + rng.below(6), {}};
    for (std::size_t i = 0; i < g.lines * g.samples; ++i) g.cells.push_back(static_cast<int>(rng.below(6)));
    const auto bytes = render_ppm(g, palette);
    const auto off = header_of(g.samples, g.lines).size();
    REQUIRE(bytes.size() == off + 3 * g.lines * g.samples);
    for (std::size_t r = 0; r < g.lines; ++r)
      for (std::size_t c = 0; c < g.samples; ++c) {
        const auto& rgb = palette.colors[static_cast<std::size_t>(g.at(r, c))];
        const std::size_t p = off + 3 * (r * g.samples + c);
        for (std::size_t k = 0; k < 3; ++k) CHECK(bytes[p + k] == static_cast<std::byte>(rgb[k]));
      }
  }
}

TEST_CASE("palette too small") {
  CHECK_THROWS_AS(render_ppm({1, 2, {1, 4}}, default_palette(3)), Error);
}

TEST_CASE("default palette is distinct and deterministic") {
  const auto p = default_palette(16);
  REQUIRE(p.colors.size() == 17);
  CHECK(p.colors[0] == Rgb{0, 0, 0});
  for (std::size_t a = 1; a < p.colors.size(); ++a)
    for (std::size_t b = a + 1; b < p.colors.size(); ++b) CHECK(p.colors[a] != p.colors[b]);
  CHECK(default_palette(16).colors == p.colors);
}

TEST_CASE("palette overrides") {
  const auto p = apply_palette_overrides(default_palette(2), "# comment\n1 10 20 30\n\n4 1 2 3  # grows\n");
  CHECK(p.colors[1] == Rgb{10, 20, 30});
  CHECK(p.colors.size() == 5);
  CHECK(p.colors[4] == Rgb{1, 2, 3});
  CHECK_THROWS_AS(apply_palette_overrides(default_palette(2), "1 300 0 0\n"), Error);
  CHECK_THROWS_AS(apply_palette_overrides(default_palette(2), "1 3\n"), Error);
}

TEST_CASE("ground truth image") {
  const LabelMap blank(2, 3, {0, 0, 0, 0, 0, 0}, 2);
  const auto bytes = render_ground_truth(blank, default_palette(2));
  const auto off = header_of(3, 2).size();
  for (std::size_t i = off; i < bytes.size(); ++i) CHECK(bytes[i] == std::byte{0});
  CHECK(bytes == render_ground_truth(blank, default_palette(2)));
}

TEST_CASE("scene prediction covers every pixel") {
  const HyperCube cube(CubeHeader{2, 2, 1, Interleave::Bsq, DataType::F64, ByteOrder::Little}, {0.1, 0.6, 0.9, 0.3});
  const PixelClassifier threshold = [](std::span<const double> x) { return x[0] > 0.5 ? 2 : 1; };
  const auto g = predict_scene(threshold, cube, 1);
  CHECK(g.lines == 2);
  CHECK(g.samples == 2);
  CHECK(g.cells == std::vector<int>{1, 2, 2, 1});

  const HyperCube flat(CubeHeader{3, 4, 2, Interleave::Bsq, DataType::F64, ByteOrder::Little}, std::vector<double>(24, 0.4));
  const PixelClassifier sum = [](std::span<const double> x) { return x[0] + x[1] + x[x.size() - 1] > 1.0 ? 2 : 1; };
  const auto flat_grid = predict_scene(sum, flat, 3, 3);
  CHECK(std::all_of(flat_grid.cells.begin(), flat_grid.cells.end(), [&](int v) { return v == flat_grid.cells[0]; }));

  const LabelMap labels(2, 2, {0, 1, 2, 0}, 2);
  CHECK(mask_background(g, labels).cells == std::vector<int>{0, 2, 2, 0});
}

TEST_CASE("threaded scene prediction matches sequential") {
  Rng rng(1);
  std::vector<double> v(9 * 7 * 3);
  for (auto& x : v) x = rng.uniform();
  const HyperCube cube(CubeHeader{9, 7, 3, Interleave::Bsq, DataType::F64, ByteOrder::Little}, v);
  const PixelClassifier f = [](std::span<const double> x) {
    double s = 0.0;
    for (double e : x) s += e;
    return 1 + static_cast<int>(s) % 4;
  };
  CHECK(predict_scene(f, cube, 3, 1).cells == predict_scene(f, cube, 3, 4).cells);
}

}  // TEST_SUITE
