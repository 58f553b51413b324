#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace runperf {

/// Base error for every recoverable failure raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box in pixels, stored as center-x, center-y, width, height.
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const { return cx - w / 2.0; }
  double top() const { return cy - h / 2.0; }
  double right() const { return cx + w / 2.0; }
  double bottom() const { return cy + h / 2.0; }
  double area() const { return w > 0.0 && h > 0.0 ? w * h : 0.0; }

  bool operator==(const BBox&) const = default;
};

/// Intersection over union; 0 when either box is degenerate.
double iou(const BBox& a, const BBox& b);

/// Level of background removal applied to a clip before embedding.
enum class ContextMode { kRaw, kBoundingBox, kVibe };

inline constexpr ContextMode kAllContextModes[] = {ContextMode::kRaw, ContextMode::kBoundingBox,
                                                   ContextMode::kVibe};

std::string_view to_string(ContextMode mode);
ContextMode parse_context_mode(std::string_view text);

/// Which split time an embedding is asked to predict.
enum class Task { kCurrent, kNext };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

}  // namespace runperf
