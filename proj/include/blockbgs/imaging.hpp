#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace blockbgs {

/// Row-major interleaved RGB raster, 8 bits per channel.
struct FrameRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width * height * 3

  FrameRGB() = default;
  FrameRGB(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (std::size_t(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (std::size_t(y) * width + x) * 3;
  }

  friend bool operator==(const FrameRGB&, const FrameRGB&) = default;
};

/// Binary foreground mask: 0 background, 255 foreground.
struct MaskGray {
  static constexpr std::uint8_t kForeground = 255;
  static constexpr std::uint8_t kBackground = 0;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // width * height

  MaskGray() = default;
  MaskGray(int w, int h) : width(w), height(h), data(std::size_t(w) * h, kBackground) {}

  std::uint8_t& at(int x, int y) { return data[std::size_t(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[std::size_t(y) * width + x]; }
  bool foreground(int x, int y) const { return at(x, y) != kBackground; }

  std::size_t count_foreground() const;

  friend bool operator==(const MaskGray&, const MaskGray&) = default;
};

/// Decodes a binary P6 (RGB) or P5 (grey, replicated to three channels) file
/// with maxval 255. Throws DecodeError or IoError.
FrameRGB load_frame(const std::filesystem::path& path);

/// Same as load_frame but from an in-memory buffer.
FrameRGB decode_netpbm(std::string_view bytes);

/// Loads a ground-truth or previously written mask. Any nonzero sample is
/// foreground; the result is strictly binary.
MaskGray load_mask(const std::filesystem::path& path);

/// Writes a P5 file whose payload is exactly mask.data.
void write_mask(const MaskGray& mask, const std::filesystem::path& path);

void write_frame(const FrameRGB& frame, const std::filesystem::path& path);

/// Files in `dir` whose names match the shell glob `pattern`, sorted
/// lexicographically by filename.
std::vector<std::filesystem::path> list_sequence(const std::filesystem::path& dir,
                                                 std::string_view pattern);

/// Loads every matching frame in filename order. All frames must share
/// dimensions; the first mismatching file is named in the SequenceError.
std::vector<FrameRGB> load_sequence(const std::filesystem::path& dir, std::string_view pattern);

}  // namespace blockbgs
