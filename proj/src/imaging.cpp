#include "blockbgs/imaging.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "blockbgs/error.hpp"

namespace blockbgs {

namespace fs = std::filesystem;

std::size_t MaskGray::count_foreground() const {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != kBackground; }));
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int(const char* field) {
    skip_separators();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) {
        throw DecodeError(DecodeError::Kind::malformed_header,
                          std::string("netpbm header: ") + field + " out of range");
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw DecodeError(DecodeError::Kind::malformed_header,
                        std::string("netpbm header: missing ") + field);
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void expect_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw DecodeError(DecodeError::Kind::malformed_header,
                        "netpbm header: expected whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return std::move(buf).str();
}

void write_netpbm(const fs::path& path, const char* magic, int width, int height,
                  const std::vector<std::uint8_t>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << magic << '\n' << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

FrameRGB decode_netpbm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw DecodeError(DecodeError::Kind::malformed_header, "not a binary PPM/PGM (P6/P5)");
  }
  const bool rgb = bytes[1] == '6';
  HeaderReader header(bytes.substr(2));
  const long width = header.read_int("width");
  const long height = header.read_int("height");
  const long maxval = header.read_int("maxval");
  if (width <= 0 || height <= 0) {
    throw DecodeError(DecodeError::Kind::malformed_header, "netpbm header: zero dimension");
  }
  if (maxval != 255) {
    throw DecodeError(DecodeError::Kind::unsupported_maxval,
                      "unsupported maxval " + std::to_string(maxval) + " (only 255)");
  }
  header.expect_single_whitespace();

  const std::size_t offset = 2 + header.position();
  const std::size_t pixels = std::size_t(width) * std::size_t(height);
  const std::size_t expected = pixels * (rgb ? 3 : 1);
  if (bytes.size() - offset < expected) {
    throw DecodeError(DecodeError::Kind::truncated_payload,
                      "truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size() - offset));
  }

  FrameRGB frame(static_cast<int>(width), static_cast<int>(height));
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + offset);
  if (rgb) {
    std::copy(src, src + expected, frame.data.begin());
  } else {
    for (std::size_t p = 0; p < pixels; ++p) {
      frame.data[3 * p] = frame.data[3 * p + 1] = frame.data[3 * p + 2] = src[p];
    }
  }
  return frame;
}

FrameRGB load_frame(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_netpbm(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(e.kind(), path.string() + ": " + e.what());
  }
}

MaskGray load_mask(const fs::path& path) {
  const FrameRGB frame = load_frame(path);
  MaskGray mask(frame.width, frame.height);
  for (std::size_t p = 0; p < mask.data.size(); ++p) {
    const bool fg = frame.data[3 * p] | frame.data[3 * p + 1] | frame.data[3 * p + 2];
    mask.data[p] = fg ? MaskGray::kForeground : MaskGray::kBackground;
  }
  return mask;
}

void write_mask(const MaskGray& mask, const fs::path& path) {
  if (mask.data.size() != std::size_t(mask.width) * mask.height) {
    throw ValidationError("mask payload does not match its dimensions");
  }
  for (std::uint8_t v : mask.data) {
    if (v != MaskGray::kForeground && v != MaskGray::kBackground) {
      throw ValidationError("mask is not binary");
    }
  }
  write_netpbm(path, "P5", mask.width, mask.height, mask.data);
}

void write_frame(const FrameRGB& frame, const fs::path& path) {
  write_netpbm(path, "P6", frame.width, frame.height, frame.data);
}

std::vector<fs::path> list_sequence(const fs::path& dir, std::string_view pattern) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  const std::string glob(pattern);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(glob.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

std::vector<FrameRGB> load_sequence(const fs::path& dir, std::string_view pattern) {
  const auto files = list_sequence(dir, pattern);
  if (files.empty()) {
    throw SequenceError("no files matching '" + std::string(pattern) + "' in " + dir.string());
  }
  std::vector<FrameRGB> frames;
  frames.reserve(files.size());
  for (const auto& file : files) {
    FrameRGB frame = load_frame(file);
    if (!frames.empty() &&
        (frame.width != frames.front().width || frame.height != frames.front().height)) {
      throw SequenceError("dimension mismatch: " + file.string() + " is " +
                          std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                          ", sequence is " + std::to_string(frames.front().width) + "x" +
                          std::to_string(frames.front().height));
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace blockbgs
