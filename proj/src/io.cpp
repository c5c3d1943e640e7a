#include "adacs/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace adacs {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'C', 'S'};

enum : uint8_t {
  kKindImage = 0,
  kKindField = 1,
  kKindScore = 2,
  kKindMask = 3,
  kKindCheckpoint = 4,
};

[[noreturn]] void parse_fail(const std::string& path, size_t offset, const std::string& what) {
  throw std::runtime_error(path + ": " + what + " at byte " + std::to_string(offset));
}

class ByteWriter {
 public:
  explicit ByteWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error(path + ": cannot open for writing");
  }
  void u8(uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32le(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64le(double v) {
    const uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.put(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void close() {
    out_.flush();
    if (!out_) throw std::runtime_error(path_ + ": write failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error(path + ": cannot open");
  }
  uint8_t u8() {
    const int c = in_.get();
    if (c == EOF) parse_fail(path_, offset_, "unexpected end of file");
    ++offset_;
    return static_cast<uint8_t>(c);
  }
  uint32_t u32le() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  double f64le() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
    return std::bit_cast<double>(v);
  }
  void expect_eof() {
    if (in_.peek() != EOF) parse_fail(path_, offset_, "trailing bytes");
  }
  size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  size_t offset_ = 0;
};

void write_header(ByteWriter& w, uint8_t kind, int width, int height) {
  for (char c : kMagic) w.u8(static_cast<uint8_t>(c));
  w.u8(kind);
  w.u32le(static_cast<uint32_t>(width));
  w.u32le(static_cast<uint32_t>(height));
}

void read_header(ByteReader& r, uint8_t expected_kind, int& width, int& height) {
  for (char c : kMagic) {
    if (r.u8() != static_cast<uint8_t>(c)) parse_fail(r.path(), r.offset() - 1, "bad magic");
  }
  const uint8_t kind = r.u8();
  if (kind != expected_kind) {
    parse_fail(r.path(), r.offset() - 1,
               "kind tag " + std::to_string(kind) + ", expected " + std::to_string(expected_kind));
  }
  const uint32_t w = r.u32le();
  const uint32_t h = r.u32le();
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) {
    parse_fail(r.path(), r.offset() - 8, "implausible dimensions");
  }
  width = static_cast<int>(w);
  height = static_cast<int>(h);
}

}  // namespace

void write_image_grid(const std::string& path, const Image& img) {
  ByteWriter w(path);
  write_header(w, kKindImage, img.width, img.height);
  for (double v : img.data) w.f64le(v);
  w.close();
}

Image read_image_grid(const std::string& path) {
  ByteReader r(path);
  int w, h;
  read_header(r, kKindImage, w, h);
  std::vector<double> data(static_cast<size_t>(w) * h);
  for (double& v : data) v = r.f64le();
  r.expect_eof();
  return Image::from_data(w, h, std::move(data));
}

void write_field_grid(const std::string& path, const DisplacementField& field) {
  ByteWriter w(path);
  write_header(w, kKindField, field.width, field.height);
  for (double v : field.dx) w.f64le(v);
  for (double v : field.dy) w.f64le(v);
  w.close();
}

DisplacementField read_field_grid(const std::string& path) {
  ByteReader r(path);
  int w, h;
  read_header(r, kKindField, w, h);
  std::vector<double> dx(static_cast<size_t>(w) * h), dy(dx.size());
  for (double& v : dx) v = r.f64le();
  for (double& v : dy) v = r.f64le();
  r.expect_eof();
  return DisplacementField::from_data(w, h, std::move(dx), std::move(dy));
}

void write_score_grid(const std::string& path, const ScoreMap& score) {
  ByteWriter w(path);
  write_header(w, kKindScore, score.width, score.height);
  for (double v : score.s) w.f64le(v);
  w.close();
}

ScoreMap read_score_grid(const std::string& path) {
  ByteReader r(path);
  int w, h;
  read_header(r, kKindScore, w, h);
  std::vector<double> s(static_cast<size_t>(w) * h);
  for (double& v : s) v = r.f64le();
  r.expect_eof();
  return ScoreMap::from_data(w, h, std::move(s));
}

void write_mask_grid(const std::string& path, const Mask& mask) {
  ByteWriter w(path);
  write_header(w, kKindMask, mask.width, mask.height);
  for (uint8_t v : mask.m) w.f64le(v ? 1.0 : 0.0);
  w.close();
}

Mask read_mask_grid(const std::string& path) {
  ByteReader r(path);
  int w, h;
  read_header(r, kKindMask, w, h);
  Mask m(w, h);
  for (size_t i = 0; i < m.size(); ++i) {
    const double v = r.f64le();
    if (v != 0.0 && v != 1.0) parse_fail(path, r.offset() - 8, "mask value not 0/1");
    m.m[i] = v != 0.0;
  }
  r.expect_eof();
  return m;
}

void write_checkpoint(const std::string& path, const EstimatorSpec& spec,
                      const ParamVector& params) {
  if (params.values.size() != param_count(spec)) {
    throw std::invalid_argument("write_checkpoint: parameter count does not match spec");
  }
  ByteWriter w(path);
  write_header(w, kKindCheckpoint, spec.width, spec.height);
  w.u32le(static_cast<uint32_t>(spec.kind));
  w.u32le(static_cast<uint32_t>(spec.in_channels));
  w.u32le(static_cast<uint32_t>(spec.base_width));
  w.u32le(static_cast<uint32_t>(spec.depth));
  w.u32le(static_cast<uint32_t>(spec.head));
  for (double v : params.values) w.f64le(v);
  w.close();
}

Checkpoint read_checkpoint(const std::string& path) {
  ByteReader r(path);
  Checkpoint ck;
  read_header(r, kKindCheckpoint, ck.spec.width, ck.spec.height);
  const uint32_t kind = r.u32le();
  if (kind > 1) parse_fail(path, r.offset() - 4, "unknown estimator kind");
  ck.spec.kind = static_cast<EstimatorKind>(kind);
  ck.spec.in_channels = static_cast<int>(r.u32le());
  ck.spec.base_width = static_cast<int>(r.u32le());
  ck.spec.depth = static_cast<int>(r.u32le());
  const uint32_t head = r.u32le();
  if (head > 2) parse_fail(path, r.offset() - 4, "unknown head kind");
  ck.spec.head = static_cast<HeadKind>(head);
  validate_spec(ck.spec);
  ck.params.resize(param_count(ck.spec));
  for (double& v : ck.params) v = r.f64le();
  r.expect_eof();
  return ck;
}

// --- PGM ------------------------------------------------------------------

namespace {

class PgmReader {
 public:
  explicit PgmReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error(path + ": cannot open");
  }

  int get() {
    const int c = in_.get();
    if (c != EOF) ++offset_;
    return c;
  }

  // next header token, skipping whitespace and # comments
  std::string token() {
    std::string t;
    int c = get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
      if (c == '#') {
        while (c != EOF && c != '\n') c = get();
      }
      c = get();
    }
    if (c == EOF) parse_fail(path_, offset_, "unexpected end of header");
    while (c != EOF && !std::isspace(c) && c != '#') {
      t.push_back(static_cast<char>(c));
      c = get();
    }
    if (c == '#') {
      while (c != EOF && c != '\n') c = get();
    }
    return t;
  }

  int int_token(const char* what) {
    const std::string t = token();
    try {
      size_t pos = 0;
      const int v = std::stoi(t, &pos);
      if (pos != t.size() || v < 0) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      parse_fail(path_, offset_, std::string("bad ") + what + " '" + t + "'");
    }
  }

  const std::string& path() const { return path_; }
  size_t offset() const { return offset_; }

 private:
  std::string path_;
  std::ifstream in_;
  size_t offset_ = 0;
};

}  // namespace

Image read_pgm(const std::string& path) {
  PgmReader r(path);
  const std::string magic = r.token();
  if (magic != "P2" && magic != "P5") parse_fail(path, r.offset(), "unsupported magic " + magic);
  const int width = r.int_token("width");
  const int height = r.int_token("height");
  const int maxval = r.int_token("maxval");
  if (width <= 0 || height <= 0) parse_fail(path, r.offset(), "bad dimensions");
  if (maxval != 255 && maxval != 65535) {
    parse_fail(path, r.offset(), "unsupported maxval " + std::to_string(maxval));
  }
  const size_t n = static_cast<size_t>(width) * height;
  std::vector<double> data(n);
  if (magic == "P2") {
    for (size_t i = 0; i < n; ++i) {
      const int v = r.int_token("pixel");
      if (v > maxval) parse_fail(path, r.offset(), "pixel above maxval");
      data[i] = static_cast<double>(v) / maxval;
    }
  } else {
    // single whitespace after maxval already consumed by token()
    for (size_t i = 0; i < n; ++i) {
      int v = r.get();
      if (v == EOF) parse_fail(path, r.offset(), "truncated pixel data");
      if (maxval == 65535) {
        const int lo = r.get();
        if (lo == EOF) parse_fail(path, r.offset(), "truncated pixel data");
        v = v * 256 + lo;  // big-endian per the format
      }
      data[i] = static_cast<double>(v) / maxval;
    }
  }
  return Image::from_data(width, height, std::move(data));
}

namespace {

void write_pgm_grid(const std::string& path, int width, int height,
                    const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  for (double v : values) {
    const int byte = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    out.put(static_cast<char>(byte));
  }
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

void write_pgm(const Image& img, const std::string& path) {
  write_pgm_grid(path, img.width, img.height, img.data);
}

void write_pgm(const ScoreMap& score, const std::string& path) {
  write_pgm_grid(path, score.width, score.height, score.s);
}

Mask read_mask_pgm(const std::string& path, double threshold) {
  const Image img = read_pgm(path);
  Mask m(img.width, img.height);
  for (size_t i = 0; i < img.size(); ++i) m.m[i] = img.data[i] >= threshold;
  return m;
}

}  // namespace adacs
