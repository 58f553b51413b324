#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "runperf/common.hpp"

namespace runperf {

inline constexpr std::size_t kLogitsDim = 400;
inline constexpr std::size_t kDefaultFeatureDim = 128;

/// One per-frame person candidate.
struct Detection {
  int frame = 0;
  BBox bbox;
  double confidence = 0.0;
  std::vector<double> feature;  // unit norm after loading
};

/// Clip-level embedding of one runner at one recording point.
struct ClipRecord {
  std::string runner;
  int rp = 0;
  ContextMode mode = ContextMode::kRaw;
  std::vector<float> logits;

  bool operator==(const ClipRecord&) const = default;
};

struct SplitRecord {
  std::string runner;
  int rp = 0;
  double seconds = 0.0;

  bool operator==(const SplitRecord&) const = default;
};

/// One row of the recording-point table.
struct RPInfo {
  int rp = 0;
  double km = 0.0;
  std::string start_rec_time;  // "hh:mm" offset from race start
  long long footage_frames = 0;
  int annotated_runners = 0;

  bool operator==(const RPInfo&) const = default;
};

/// The five recording points of the reference race, in track order.
std::vector<RPInfo> reference_recording_points();

/// Interleaved RGB8 image, row-major.
struct FrameBuffer {
  int width = 0;
  int height = 0;
  static constexpr int kChannels = 3;
  std::vector<std::uint8_t> pixels;

  FrameBuffer() = default;
  FrameBuffer(int w, int h, std::uint8_t value = 0);

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  bool operator==(const FrameBuffer&) const = default;
};

// Embeddings: one JSON object per line.
std::vector<ClipRecord> read_embeddings(std::istream& in);
std::vector<ClipRecord> load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const std::vector<ClipRecord>& records);
void save_embeddings(const std::filesystem::path& path, const std::vector<ClipRecord>& records);

// Binary sidecar: "RPEMB\0\0\1", u32 count, then per record u32 name length,
// name bytes, i32 rp, u8 mode, 400 little-endian float32 values.
void save_embeddings_binary(const std::filesystem::path& path, const std::vector<ClipRecord>& records);
std::vector<ClipRecord> load_embeddings_binary(const std::filesystem::path& path);

// Split times: CSV with header runner,rp,seconds.
std::vector<SplitRecord> read_split_times(std::istream& in);
std::vector<SplitRecord> load_split_times(const std::filesystem::path& path);
void write_split_times(std::ostream& out, const std::vector<SplitRecord>& splits);
void save_split_times(const std::filesystem::path& path, const std::vector<SplitRecord>& splits);

// Detections: one JSON object per line. An empty expected_dim accepts any
// dimension as long as every line agrees.
std::vector<Detection> read_detections(std::istream& in, std::size_t expected_dim = 0);
std::vector<Detection> load_detections(const std::filesystem::path& path, std::size_t expected_dim = 0);
void write_detections(std::ostream& out, const std::vector<Detection>& detections);
void save_detections(const std::filesystem::path& path, const std::vector<Detection>& detections);

/// Groups a flat detection list into per-frame lists covering frames
/// [0, max frame]; frames without detections get an empty list.
std::vector<std::vector<Detection>> group_by_frame(const std::vector<Detection>& detections);

// Recording-point table: location,km,start_rec_time,footage_frames,annotated_runners
std::vector<RPInfo> read_rp_info(std::istream& in);
std::vector<RPInfo> load_rp_info(const std::filesystem::path& path);
void write_rp_info(std::ostream& out, const std::vector<RPInfo>& rps);
void save_rp_info(const std::filesystem::path& path, const std::vector<RPInfo>& rps);

/// Keeps the pixels inside the box (clipped to the frame) and paints every
/// other pixel with `fill`. A box with no area yields an all-fill frame.
FrameBuffer mask_context(const FrameBuffer& frame, const BBox& box, std::uint8_t fill = 0);

}  // namespace runperf
