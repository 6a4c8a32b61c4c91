#include "hsi/data.hpp"

#include "hsi/error.hpp"
#include "hsi/rng.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>

namespace hsi {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error(ErrorCode::BadConfig, "header key '" + key + "' is not an integer: " + value);
  return v;
}

std::size_t positive(const std::string& key, const std::string& value) {
  auto v = parse_int(key, value);
  if (v <= 0) throw Error(ErrorCode::DimensionMismatch, "header key '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

DataType envi_data_type(long long code) {
  switch (code) {
    case 1: return DataType::U8;
    case 2: return DataType::I16;
    case 3: return DataType::I32;
    case 4: return DataType::F32;
    case 5: return DataType::F64;
    case 12: return DataType::U16;
    default: throw Error(ErrorCode::UnsupportedDataType, std::to_string(code));
  }
}

int envi_code(DataType t) {
  switch (t) {
    case DataType::U8: return 1;
    case DataType::I16: return 2;
    case DataType::I32: return 3;
    case DataType::F32: return 4;
    case DataType::F64: return 5;
    case DataType::U16: return 12;
  }
  return 0;
}

// Linear position in the file for element (row, col, band).
std::size_t file_offset(const CubeHeader& h, std::size_t r, std::size_t c, std::size_t b) {
  switch (h.interleave) {
    case Interleave::Bsq: return (b * h.lines + r) * h.samples + c;
    case Interleave::Bil: return (r * h.bands + b) * h.samples + c;
    case Interleave::Bip: return (r * h.samples + c) * h.bands + b;
  }
  return 0;
}

std::uint64_t read_uint(const std::byte* p, std::size_t n, bool big_endian) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto byte = std::to_integer<std::uint64_t>(p[big_endian ? i : n - 1 - i]);
    v = (v << 8) | byte;
  }
  return v;
}

void write_uint(std::byte* p, std::uint64_t v, std::size_t n, bool big_endian) {
  for (std::size_t i = 0; i < n; ++i) {
    p[big_endian ? n - 1 - i : i] = static_cast<std::byte>(v & 0xff);
    v >>= 8;
  }
}

double decode_value(const std::byte* p, DataType t, bool big_endian) {
  const auto bits = read_uint(p, byte_size(t), big_endian);
  switch (t) {
    case DataType::F32: return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
    case DataType::F64: return std::bit_cast<double>(bits);
    case DataType::U8: return static_cast<double>(static_cast<std::uint8_t>(bits));
    case DataType::I16: return static_cast<double>(static_cast<std::int16_t>(bits));
    case DataType::U16: return static_cast<double>(static_cast<std::uint16_t>(bits));
    case DataType::I32: return static_cast<double>(static_cast<std::int32_t>(bits));
  }
  return 0.0;
}

void encode_value(std::byte* p, double v, DataType t, bool big_endian) {
  std::uint64_t bits = 0;
  switch (t) {
    case DataType::F32: bits = std::bit_cast<std::uint32_t>(static_cast<float>(v)); break;
    case DataType::F64: bits = std::bit_cast<std::uint64_t>(v); break;
    case DataType::U8: bits = static_cast<std::uint8_t>(v); break;
    case DataType::I16: bits = static_cast<std::uint16_t>(static_cast<std::int16_t>(v)); break;
    case DataType::U16: bits = static_cast<std::uint16_t>(v); break;
    case DataType::I32: bits = static_cast<std::uint32_t>(static_cast<std::int32_t>(v)); break;
  }
  write_uint(p, bits, byte_size(t), big_endian);
}

std::size_t mirror_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<long long>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

void check_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "cube contains NaN or infinity");
}

}  // namespace

std::size_t byte_size(DataType t) {
  switch (t) {
    case DataType::F32: return 4;
    case DataType::F64: return 8;
    case DataType::U8: return 1;
    case DataType::I16: return 2;
    case DataType::U16: return 2;
    case DataType::I32: return 4;
  }
  return 0;
}

HyperCube::HyperCube(CubeHeader h, std::vector<double> v) : header(h), values(std::move(v)) {
  if (header.element_count() == 0)
    throw Error(ErrorCode::DimensionMismatch, "cube dimensions must be positive");
  if (values.size() != header.element_count())
    throw Error(ErrorCode::SizeMismatch, "expected " + std::to_string(header.element_count()) +
                                             " values, got " + std::to_string(values.size()));
  check_finite(values);
}

LabelMap::LabelMap(std::size_t l, std::size_t s, std::vector<int> v, int c)
    : lines(l), samples(s), labels(std::move(v)), num_classes(c) {
  if (lines == 0 || samples == 0)
    throw Error(ErrorCode::DimensionMismatch, "label map dimensions must be positive");
  if (labels.size() != lines * samples)
    throw Error(ErrorCode::SizeMismatch, "label map has " + std::to_string(labels.size()) +
                                             " cells, expected " + std::to_string(lines * samples));
  const int max_label = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  if (num_classes < 0) num_classes = max_label;
  for (int v : labels) {
    if (v < 0 || v > num_classes)
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(v) + " outside [0, " + std::to_string(num_classes) + "]");
  }
}

// ---------------------------------------------------------------------------
// ENVI

CubeHeader parse_envi_header(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  bool seen_magic = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    seen_magic = trim(line) == "ENVI";
    break;
  }
  if (!seen_magic) throw Error(ErrorCode::BadMagic, "ENVI header must start with 'ENVI'");

  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = lower(trim(std::string_view(line).substr(0, eq)));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    // Brace-delimited values may span lines; consume through the closing brace.
    if (!value.empty() && value.front() == '{') {
      while (value.find('}') == std::string::npos && std::getline(in, line)) value += " " + trim(line);
    }
    fields[key] = value;
  }

  auto require = [&](const char* key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorCode::MissingKey, key);
    return it->second;
  };

  CubeHeader h;
  h.samples = positive("samples", require("samples"));
  h.lines = positive("lines", require("lines"));
  h.bands = positive("bands", require("bands"));
  h.data_type = envi_data_type(parse_int("data type", require("data type")));

  const std::string interleave = lower(require("interleave"));
  if (interleave == "bsq") h.interleave = Interleave::Bsq;
  else if (interleave == "bil") h.interleave = Interleave::Bil;
  else if (interleave == "bip") h.interleave = Interleave::Bip;
  else throw Error(ErrorCode::BadConfig, "unknown interleave '" + interleave + "'");

  const auto order = parse_int("byte order", require("byte order"));
  if (order == 0) h.byte_order = ByteOrder::Little;
  else if (order == 1) h.byte_order = ByteOrder::Big;
  else throw Error(ErrorCode::BadConfig, "byte order must be 0 or 1");
  return h;
}

std::string format_envi_header(const CubeHeader& h) {
  const char* interleave = h.interleave == Interleave::Bsq   ? "bsq"
                           : h.interleave == Interleave::Bil ? "bil"
                                                             : "bip";
  std::ostringstream out;
  out << "ENVI\n"
      << "samples = " << h.samples << "\n"
      << "lines = " << h.lines << "\n"
      << "bands = " << h.bands << "\n"
      << "header offset = 0\n"
      << "file type = ENVI Standard\n"
      << "data type = " << envi_code(h.data_type) << "\n"
      << "interleave = " << interleave << "\n"
      << "byte order = " << (h.byte_order == ByteOrder::Big ? 1 : 0) << "\n";
  return out.str();
}

HyperCube load_cube(const CubeHeader& header, std::span<const std::byte> raw) {
  const std::size_t width = byte_size(header.data_type);
  const std::size_t expected = header.element_count() * width;
  if (raw.size() != expected)
    throw Error(ErrorCode::SizeMismatch,
                "expected " + std::to_string(expected) + " bytes, got " + std::to_string(raw.size()));
  const bool big = header.byte_order == ByteOrder::Big;
  std::vector<double> values(header.element_count());
  std::size_t out = 0;
  for (std::size_t r = 0; r < header.lines; ++r)
    for (std::size_t c = 0; c < header.samples; ++c)
      for (std::size_t b = 0; b < header.bands; ++b)
        values[out++] = decode_value(raw.data() + file_offset(header, r, c, b) * width,
                                     header.data_type, big);
  return HyperCube(header, std::move(values));
}

std::vector<std::byte> encode_cube(const HyperCube& cube, Interleave interleave, DataType data_type,
                                   ByteOrder byte_order) {
  CubeHeader h = cube.header;
  h.interleave = interleave;
  h.data_type = data_type;
  h.byte_order = byte_order;
  const std::size_t width = byte_size(data_type);
  std::vector<std::byte> raw(h.element_count() * width);
  for (std::size_t r = 0; r < h.lines; ++r)
    for (std::size_t c = 0; c < h.samples; ++c)
      for (std::size_t b = 0; b < h.bands; ++b)
        encode_value(raw.data() + file_offset(h, r, c, b) * width, cube.at(r, c, b), data_type,
                     byte_order == ByteOrder::Big);
  return raw;
}

// ---------------------------------------------------------------------------
// NPY

namespace {

constexpr unsigned char kNpyMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

std::string dict_value(const std::string& dict, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  auto k = dict.find(quoted);
  if (k == std::string::npos) throw Error(ErrorCode::BadMagic, "NPY header lacks '" + key + "'");
  auto colon = dict.find(':', k + quoted.size());
  if (colon == std::string::npos) throw Error(ErrorCode::BadMagic, "malformed NPY header");
  std::size_t start = dict.find_first_not_of(' ', colon + 1);
  std::size_t end;
  if (dict[start] == '\'') {
    end = dict.find('\'', start + 1);
    return dict.substr(start + 1, end - start - 1);
  }
  if (dict[start] == '(') {
    end = dict.find(')', start);
    return dict.substr(start + 1, end - start - 1);
  }
  end = dict.find_first_of(",}", start);
  return trim(dict.substr(start, end - start));
}

struct NpyDtype {
  DataType type;
  bool is_i64 = false;
};

NpyDtype parse_dtype(const std::string& descr) {
  if (descr.size() < 3) throw Error(ErrorCode::UnsupportedDtype, descr);
  const char order = descr[0];
  const std::string kind = descr.substr(1);
  const bool single_byte = kind == "u1" || kind == "i1" || kind == "b1";
  if (order == '>' && !single_byte) throw Error(ErrorCode::UnsupportedDtype, descr + " (big-endian)");
  if (kind == "f8") return {DataType::F64};
  if (kind == "f4") return {DataType::F32};
  if (kind == "u1") return {DataType::U8};
  if (kind == "i4") return {DataType::I32};
  if (kind == "u2") return {DataType::U16};
  if (kind == "i2") return {DataType::I16};
  if (kind == "i8") return {DataType::F64, true};
  throw Error(ErrorCode::UnsupportedDtype, descr);
}

std::vector<std::byte> npy_bytes(std::string_view descr, std::span<const std::size_t> shape,
                                 std::size_t payload_size) {
  std::string dict = "{'descr': '" + std::string(descr) + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
    if (i + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  // Pad so magic + version + length + dict + '\n' is a multiple of 64.
  const std::size_t prefix = 10;
  std::size_t total = prefix + dict.size() + 1;
  dict.append((64 - total % 64) % 64, ' ');
  dict += '\n';

  std::vector<std::byte> out;
  out.reserve(prefix + dict.size() + payload_size);
  for (auto c : kNpyMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(std::byte{1});
  out.push_back(std::byte{0});
  out.push_back(static_cast<std::byte>(dict.size() & 0xff));
  out.push_back(static_cast<std::byte>((dict.size() >> 8) & 0xff));
  for (char c : dict) out.push_back(static_cast<std::byte>(c));
  return out;
}

}  // namespace

NpyArray load_npy(std::span<const std::byte> raw) {
  if (raw.size() < 10 || !std::equal(std::begin(kNpyMagic), std::end(kNpyMagic), raw.begin(),
                                     [](unsigned char a, std::byte b) { return std::byte{a} == b; }))
    throw Error(ErrorCode::BadMagic, "missing \\x93NUMPY prefix");
  if (raw[6] != std::byte{1} || raw[7] != std::byte{0})
    throw Error(ErrorCode::BadMagic, "only NPY format version 1.0 is supported");
  const std::size_t header_len = read_uint(raw.data() + 8, 2, false);
  if (raw.size() < 10 + header_len) throw Error(ErrorCode::SizeMismatch, "truncated NPY header");
  std::string dict(reinterpret_cast<const char*>(raw.data() + 10), header_len);

  const NpyDtype dtype = parse_dtype(dict_value(dict, "descr"));
  if (dict_value(dict, "fortran_order") != "False")
    throw Error(ErrorCode::FortranOrderUnsupported, "array is stored in Fortran order");

  NpyArray array;
  std::istringstream shape_in(dict_value(dict, "shape"));
  std::string dim;
  while (std::getline(shape_in, dim, ',')) {
    dim = trim(dim);
    if (!dim.empty()) array.shape.push_back(static_cast<std::size_t>(parse_int("shape", dim)));
  }
  if (array.shape.size() != 2 && array.shape.size() != 3)
    throw Error(ErrorCode::ShapeRankUnsupported, "rank " + std::to_string(array.shape.size()));

  std::size_t count = 1;
  for (auto d : array.shape) count *= d;
  const std::size_t width = dtype.is_i64 ? 8 : byte_size(dtype.type);
  const auto payload = raw.subspan(10 + header_len);
  if (payload.size() != count * width)
    throw Error(ErrorCode::SizeMismatch, "expected " + std::to_string(count * width) +
                                             " data bytes, got " + std::to_string(payload.size()));
  array.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::byte* p = payload.data() + i * width;
    array.data[i] = dtype.is_i64 ? static_cast<double>(static_cast<std::int64_t>(read_uint(p, 8, false)))
                                 : decode_value(p, dtype.type, false);
  }
  return array;
}

std::vector<std::byte> encode_npy_f64(std::span<const std::size_t> shape, std::span<const double> data) {
  auto out = npy_bytes("<f8", shape, data.size() * 8);
  const std::size_t header = out.size();
  out.resize(header + data.size() * 8);
  for (std::size_t i = 0; i < data.size(); ++i) encode_value(out.data() + header + i * 8, data[i], DataType::F64, false);
  return out;
}

std::vector<std::byte> encode_npy_i32(std::span<const std::size_t> shape, std::span<const int> data) {
  auto out = npy_bytes("<i4", shape, data.size() * 4);
  const std::size_t header = out.size();
  out.resize(header + data.size() * 4);
  for (std::size_t i = 0; i < data.size(); ++i) encode_value(out.data() + header + i * 4, data[i], DataType::I32, false);
  return out;
}

HyperCube cube_from_npy(const NpyArray& array) {
  if (array.shape.size() != 3)
    throw Error(ErrorCode::ShapeRankUnsupported, "a cube needs a 3-D array (lines, samples, bands)");
  CubeHeader h;
  h.lines = array.shape[0];
  h.samples = array.shape[1];
  h.bands = array.shape[2];
  h.interleave = Interleave::Bip;
  h.data_type = DataType::F64;
  return HyperCube(h, array.data);
}

LabelMap labels_from_npy(const NpyArray& array, int num_classes) {
  if (array.shape.size() != 2)
    throw Error(ErrorCode::ShapeRankUnsupported, "a label map needs a 2-D array");
  std::vector<int> labels(array.data.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = array.data[i];
    if (v != std::floor(v)) throw Error(ErrorCode::UnsupportedDtype, "label map must be integer-valued");
    labels[i] = static_cast<int>(v);
  }
  return LabelMap(array.shape[0], array.shape[1], std::move(labels), num_classes);
}

std::vector<std::byte> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(buf.size());
  std::memcpy(out.data(), buf.data(), buf.size());
  return out;
}

void write_file(const std::string& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

namespace {

std::pair<std::string, std::string> envi_paths(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.extension() == ".hdr") {
    fs::path data = p;
    data.replace_extension("");
    for (const char* ext : {"", ".raw", ".img", ".dat", ".bsq", ".bil", ".bip"}) {
      fs::path candidate = data;
      candidate += ext;
      if (fs::exists(candidate) && !fs::is_directory(candidate)) return {p.string(), candidate.string()};
    }
    throw Error(ErrorCode::Io, "no data file next to '" + path + "'");
  }
  fs::path hdr = p;
  hdr.replace_extension(".hdr");
  if (!fs::exists(hdr)) {
    hdr = p;
    hdr += ".hdr";
  }
  return {hdr.string(), p.string()};
}

bool is_npy(const std::string& path) { return std::filesystem::path(path).extension() == ".npy"; }

}  // namespace

HyperCube read_cube_file(const std::string& path) {
  if (is_npy(path)) return cube_from_npy(load_npy(read_file(path)));
  auto [hdr, data] = envi_paths(path);
  auto text = read_file(hdr);
  const auto header = parse_envi_header(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
  return load_cube(header, read_file(data));
}

LabelMap read_labels_file(const std::string& path) {
  if (is_npy(path)) return labels_from_npy(load_npy(read_file(path)));
  auto cube = read_cube_file(path);
  if (cube.bands() != 1) throw Error(ErrorCode::DimensionMismatch, "ENVI label file must have one band");
  NpyArray array{{cube.lines(), cube.samples()}, cube.values};
  return labels_from_npy(array);
}

// ---------------------------------------------------------------------------
// Preprocessing

HyperCube normalize_cube(const HyperCube& cube, NormalizeOptions options) {
  HyperCube out = cube;
  const std::size_t bands = cube.bands();
  const std::size_t groups = options.per_band ? bands : 1;
  std::vector<double> lo(groups, std::numeric_limits<double>::infinity());
  std::vector<double> hi(groups, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cube.values.size(); ++i) {
    const std::size_t g = options.per_band ? i % bands : 0;
    lo[g] = std::min(lo[g], cube.values[i]);
    hi[g] = std::max(hi[g], cube.values[i]);
  }
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::size_t g = options.per_band ? i % bands : 0;
    const double range = hi[g] - lo[g];
    out.values[i] = range > 0.0 ? (cube.values[i] - lo[g]) / range : 0.0;
  }
  return out;
}

std::vector<double> extract_patch(const HyperCube& cube, std::size_t row, std::size_t col,
                                  std::size_t patch_size) {
  if (patch_size == 0 || patch_size % 2 == 0)
    throw Error(ErrorCode::EvenPatchSize, "patch size " + std::to_string(patch_size) + " is not odd");
  if (row >= cube.lines() || col >= cube.samples())
    throw Error(ErrorCode::DimensionMismatch, "pixel outside the image");
  const long long half = static_cast<long long>(patch_size / 2);
  std::vector<double> out;
  out.reserve(patch_size * patch_size * cube.bands());
  for (long long dr = -half; dr <= half; ++dr) {
    const std::size_t r = mirror_index(static_cast<long long>(row) + dr, cube.lines());
    for (long long dc = -half; dc <= half; ++dc) {
      const std::size_t c = mirror_index(static_cast<long long>(col) + dc, cube.samples());
      auto px = cube.pixel(r, c);
      out.insert(out.end(), px.begin(), px.end());
    }
  }
  return out;
}

SampleSet build_samples(const HyperCube& cube, const LabelMap& labels, std::size_t patch_size) {
  if (cube.lines() != labels.lines || cube.samples() != labels.samples)
    throw Error(ErrorCode::DimensionMismatch, "cube is " + std::to_string(cube.lines()) + "x" +
                                                  std::to_string(cube.samples()) + ", labels are " +
                                                  std::to_string(labels.lines) + "x" +
                                                  std::to_string(labels.samples));
  if (patch_size == 0 || patch_size % 2 == 0)
    throw Error(ErrorCode::EvenPatchSize, "patch size " + std::to_string(patch_size) + " is not odd");

  SampleSet set;
  set.patch_size = patch_size;
  set.num_classes = labels.num_classes;
  for (std::size_t r = 0; r < labels.lines; ++r)
    for (std::size_t c = 0; c < labels.samples; ++c)
      if (labels.at(r, c) > 0) {
        set.labels.push_back(labels.at(r, c));
        set.coords.push_back({r, c});
      }

  const auto dim = static_cast<Eigen::Index>(patch_size * patch_size * cube.bands());
  set.features.resize(static_cast<Eigen::Index>(set.labels.size()), dim);
  for (std::size_t i = 0; i < set.coords.size(); ++i) {
    auto patch = extract_patch(cube, set.coords[i].row, set.coords[i].col, patch_size);
    set.features.row(static_cast<Eigen::Index>(i)) = as_vector(patch).transpose();
  }
  return set;
}

SplitIndices split_samples(const SampleSet& set, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::BadConfig, "train fraction must lie in (0, 1)");
  int max_class = set.num_classes;
  for (int l : set.labels) max_class = std::max(max_class, l);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_class) + 1);
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    if (set.labels[i] < 1) throw Error(ErrorCode::LabelOutOfRange, "sample with background label");
    by_class[static_cast<std::size_t>(set.labels[i])].push_back(i);
  }

  SplitIndices split;
  split.seed = seed;
  Rng rng(seed);
  for (int c = 1; c <= max_class; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    if (members.empty()) continue;
    if (members.size() < 2)
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has a single sample");
    rng.shuffle(std::span(members));
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(members.size()) + 1e-9));
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<long>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<long>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<double> synthetic_class_mean(int class_id, std::size_t bands) {
  std::vector<double> mean(bands);
  for (std::size_t b = 0; b < bands; ++b)
    mean[b] = 0.5 + 0.35 * std::cos(std::numbers::pi * class_id * (static_cast<double>(b) + 0.5) /
                                    static_cast<double>(bands));
  return mean;
}

std::pair<HyperCube, LabelMap> gen_synthetic_scene(std::size_t lines, std::size_t samples,
                                                   std::size_t bands, int num_classes,
                                                   std::uint64_t seed, double noise_sigma) {
  if (bands < 2) throw Error(ErrorCode::DimensionMismatch, "synthetic scenes need at least 2 bands");
  if (lines == 0 || samples == 0) throw Error(ErrorCode::DimensionMismatch, "empty scene");
  if (num_classes < 1 || static_cast<std::size_t>(num_classes) > lines * samples)
    throw Error(ErrorCode::TooManyClasses, std::to_string(num_classes) + " classes in a " +
                                               std::to_string(lines) + "x" + std::to_string(samples) +
                                               " image");
  // Cosine signatures are pairwise distinct for ids below 2 * bands.
  if (static_cast<std::size_t>(num_classes) >= 2 * bands)
    throw Error(ErrorCode::TooManyClasses, "at most " + std::to_string(2 * bands - 1) +
                                               " distinct signatures with " + std::to_string(bands) +
                                               " bands");

  const std::size_t border = (lines >= 3 && samples >= 3) ? 1 : 0;
  const std::size_t rows = lines - 2 * border;
  const std::size_t cols = samples - 2 * border;
  const auto classes = static_cast<std::size_t>(num_classes);
  const std::size_t bands_of_rows =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(classes)))));
  const std::size_t widest = classes / bands_of_rows + (classes % bands_of_rows ? 1 : 0);
  if (rows < bands_of_rows || cols < widest)
    throw Error(ErrorCode::TooManyClasses, "image interior too small for " + std::to_string(classes) +
                                               " rectangular regions");

  std::vector<int> labels(lines * samples, 0);
  int next_class = 1;
  for (std::size_t band = 0; band < bands_of_rows; ++band) {
    const std::size_t r0 = band * rows / bands_of_rows;
    const std::size_t r1 = (band + 1) * rows / bands_of_rows;
    const std::size_t k = classes / bands_of_rows + (band < classes % bands_of_rows ? 1 : 0);
    for (std::size_t j = 0; j < k; ++j, ++next_class) {
      const std::size_t c0 = j * cols / k;
      const std::size_t c1 = (j + 1) * cols / k;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) labels[(r + border) * samples + c + border] = next_class;
    }
  }

  std::vector<std::vector<double>> means;
  for (int c = 1; c <= num_classes; ++c) means.push_back(synthetic_class_mean(c, bands));

  Rng rng(seed);
  std::vector<double> values(lines * samples * bands);
  for (std::size_t p = 0; p < lines * samples; ++p) {
    const int label = labels[p];
    for (std::size_t b = 0; b < bands; ++b) {
      // Background is unstructured clutter.
      const double base = label > 0 ? means[static_cast<std::size_t>(label - 1)][b] : rng.uniform();
      values[p * bands + b] = base + noise_sigma * rng.normal();
    }
  }

  CubeHeader h{lines, samples, bands, Interleave::Bip, DataType::F64, ByteOrder::Little};
  return {HyperCube(h, std::move(values)), LabelMap(lines, samples, std::move(labels), num_classes)};
}

}  // namespace hsi
