#pragma once

// Grayscale frames with intensities in [0, 1], plus the two on-disk formats:
// binary PGM (P5, 8 or 16 bit) and raw little-endian float32 with a one-line
// text header "width height count".

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "adaptcd/errors.hpp"

namespace adaptcd {

struct frame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> intensities;  // row-major

  frame() = default;
  frame(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), intensities(w * h, fill) {}
  frame(std::size_t w, std::size_t h, std::vector<double> values)
      : width(w), height(h), intensities(std::move(values)) {
    validate();
  }

  double& at(std::size_t x, std::size_t y) { return intensities[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return intensities[y * width + x]; }
  std::size_t size() const noexcept { return intensities.size(); }
  bool same_shape(const frame& o) const noexcept { return width == o.width && height == o.height; }

  void validate() const {
    if (width == 0 || height == 0) throw data_error("frame has zero extent");
    if (intensities.size() != width * height)
      throw data_error("frame holds " + std::to_string(intensities.size()) + " values, expected " +
                       std::to_string(width * height));
    for (double v : intensities)
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw data_error("frame intensity outside [0, 1]");
  }
};

namespace detail {

inline std::string read_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

inline std::size_t parse_size(const std::string& tok, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    throw data_error("bad " + what + " '" + tok + "'");
  }
  if (pos != tok.size()) throw data_error("bad " + what + " '" + tok + "'");
  return static_cast<std::size_t>(v);
}

inline float load_f32_le(const unsigned char* p) {
  std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                       (std::uint32_t{p[3]} << 24);
  return std::bit_cast<float>(bits);
}

inline void store_f32_le(unsigned char* p, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  p[0] = static_cast<unsigned char>(bits);
  p[1] = static_cast<unsigned char>(bits >> 8);
  p[2] = static_cast<unsigned char>(bits >> 16);
  p[3] = static_cast<unsigned char>(bits >> 24);
}

}  // namespace detail

inline frame read_pgm(std::istream& in) {
  if (detail::read_token(in) != "P5") throw data_error("not a binary PGM (P5)");
  const std::size_t w = detail::parse_size(detail::read_token(in), "PGM width");
  const std::size_t h = detail::parse_size(detail::read_token(in), "PGM height");
  const std::size_t maxval = detail::parse_size(detail::read_token(in), "PGM maxval");
  if (w == 0 || h == 0) throw data_error("PGM has zero extent");
  if (maxval == 0 || maxval > 65535) throw data_error("PGM maxval out of range");
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(w * h * bytes_per);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw data_error("truncated PGM pixel data");
  std::vector<double> values(w * h);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const unsigned v = bytes_per == 2 ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
    values[i] = std::min(1.0, static_cast<double>(v) / static_cast<double>(maxval));
  }
  return frame(w, h, std::move(values));
}

inline frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  try {
    return read_pgm(in);
  } catch (const data_error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

/// Quantizes to maxval levels (255 or 65535).
inline void write_pgm(std::ostream& out, const frame& f, unsigned maxval = 255) {
  if (maxval != 255 && maxval != 65535) throw config_error("PGM maxval must be 255 or 65535");
  out << "P5\n" << f.width << ' ' << f.height << '\n' << maxval << '\n';
  for (double v : f.intensities) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (maxval > 255) out.put(static_cast<char>(q >> 8));
    out.put(static_cast<char>(q & 0xff));
  }
}

inline void write_pgm(const std::filesystem::path& path, const frame& f, unsigned maxval = 255) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  write_pgm(out, f, maxval);
}

struct raw_header {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t count = 0;
};

inline raw_header read_raw_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("missing raw header");
  std::istringstream ls(line);
  raw_header h;
  std::string extra;
  if (!(ls >> h.width >> h.height >> h.count) || (ls >> extra))
    throw data_error("raw header must be 'width height count'");
  if (h.width == 0 || h.height == 0) throw data_error("raw header has zero extent");
  return h;
}

/// Reads count * width * height float32 values following the header.
inline std::vector<float> read_raw_payload(std::istream& in, const raw_header& h) {
  const std::size_t n = h.width * h.height * h.count;
  std::vector<unsigned char> bytes(4 * n);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw data_error("truncated raw float32 payload");
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = detail::load_f32_le(bytes.data() + 4 * i);
  return values;
}

inline void write_raw_payload(std::ostream& out, const raw_header& h, std::span<const float> values) {
  out << h.width << ' ' << h.height << ' ' << h.count << '\n';
  std::vector<unsigned char> bytes(4 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) detail::store_f32_le(bytes.data() + 4 * i, values[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<frame> read_raw_frames(std::istream& in) {
  const raw_header h = read_raw_header(in);
  const std::vector<float> values = read_raw_payload(in, h);
  std::vector<frame> frames;
  frames.reserve(h.count);
  const std::size_t per = h.width * h.height;
  for (std::size_t c = 0; c < h.count; ++c)
    frames.emplace_back(h.width, h.height,
                        std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(c * per),
                                            values.begin() + static_cast<std::ptrdiff_t>((c + 1) * per)));
  return frames;
}

inline std::vector<frame> read_raw_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  try {
    return read_raw_frames(in);
  } catch (const data_error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

/// All frames must share one shape.
inline void write_raw_frames(std::ostream& out, std::span<const frame> frames) {
  if (frames.empty()) throw data_error("no frames to write");
  raw_header h{frames[0].width, frames[0].height, frames.size()};
  std::vector<float> values;
  values.reserve(h.width * h.height * h.count);
  for (const frame& f : frames) {
    if (!f.same_shape(frames[0])) throw data_error("frames differ in shape");
    for (double v : f.intensities) values.push_back(static_cast<float>(v));
  }
  write_raw_payload(out, h, values);
}

inline void write_raw_frames(const std::filesystem::path& path, std::span<const frame> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  write_raw_frames(out, frames);
}

/// Loads every .pgm and .raw/.f32 file of `dir` in lexicographic filename
/// order; a raw file may contribute several frames. Shapes must agree.
inline std::vector<frame> load_frame_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw data_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".raw" || ext == ".f32") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<frame> frames;
  for (const fs::path& p : files) {
    if (p.extension() == ".pgm") {
      frames.push_back(read_pgm(p));
    } else {
      auto more = read_raw_frames(p);
      for (auto& f : more) frames.push_back(std::move(f));
    }
    if (!frames.empty() && !frames.back().same_shape(frames.front()))
      throw data_error("frame shape changes at " + p.filename().string());
  }
  if (frames.empty()) throw data_error("no frames found in " + dir.string());
  return frames;
}

}  // namespace adaptcd
