#include "runperf/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace runperf {

using nlohmann::json;

double iou(const BBox& a, const BBox& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

std::string_view to_string(ContextMode mode) {
  switch (mode) {
    case ContextMode::kRaw: return "raw";
    case ContextMode::kBoundingBox: return "bb";
    case ContextMode::kVibe: return "vibe";
  }
  return "raw";
}

ContextMode parse_context_mode(std::string_view text) {
  if (text == "raw") return ContextMode::kRaw;
  if (text == "bb") return ContextMode::kBoundingBox;
  if (text == "vibe") return ContextMode::kVibe;
  throw Error("unknown context mode '" + std::string(text) + "' (expected raw, bb or vibe)");
}

std::string_view to_string(Task task) { return task == Task::kCurrent ? "current" : "next"; }

Task parse_task(std::string_view text) {
  if (text == "current" || text == "curr") return Task::kCurrent;
  if (text == "next") return Task::kNext;
  throw Error("unknown task '" + std::string(text) + "' (expected current or next)");
}

std::vector<RPInfo> reference_recording_points() {
  return {
      {1, 16.5, "00:06", 140616, 419},  {2, 27.9, "01:08", 432624, 586},
      {3, 84.2, "07:50", 667872, 203},  {4, 110.5, "10:20", 1001208, 139},
      {5, 124.5, "11:20", 1462056, 114},
  };
}

FrameBuffer::FrameBuffer(int w, int h, std::uint8_t value)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * kChannels, value) {
  if (w <= 0 || h <= 0) throw Error("frame dimensions must be positive");
}

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw Error("line " + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, const char* name) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) fail_line(line, std::string("cannot parse ") + name + " '" + text + "'");
  return value;
}

json parse_json_line(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail_line(line, std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& obj, const char* key, std::size_t line) {
  if (!obj.is_object() || !obj.contains(key)) fail_line(line, std::string("missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail_line(line, std::string("field '") + key + "' has the wrong type");
  }
}

std::string fmt_g(double value, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- embeddings

std::vector<ClipRecord> read_embeddings(std::istream& in) {
  std::vector<ClipRecord> records;
  std::set<std::tuple<std::string, int, ContextMode>> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    strip_cr(text);
    if (blank(text)) continue;
    const json obj = parse_json_line(text, line);
    ClipRecord rec;
    rec.runner = field<std::string>(obj, "runner", line);
    rec.rp = field<int>(obj, "rp", line);
    try {
      rec.mode = parse_context_mode(field<std::string>(obj, "mode", line));
    } catch (const Error& e) {
      fail_line(line, e.what());
    }
    const auto logits = field<std::vector<double>>(obj, "logits", line);
    if (logits.size() != kLogitsDim) {
      fail_line(line, "expected " + std::to_string(kLogitsDim) + " logits, got " + std::to_string(logits.size()));
    }
    rec.logits.reserve(kLogitsDim);
    for (double v : logits) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) fail_line(line, "non-finite logit");
      rec.logits.push_back(f);
    }
    if (!seen.emplace(rec.runner, rec.rp, rec.mode).second) {
      fail_line(line, "duplicate record for runner '" + rec.runner + "', rp " + std::to_string(rec.rp) + ", mode " +
                          std::string(to_string(rec.mode)));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ClipRecord> load_embeddings(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_embeddings(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_embeddings(std::ostream& out, const std::vector<ClipRecord>& records) {
  std::string line;
  for (const auto& rec : records) {
    if (rec.logits.size() != kLogitsDim) throw Error("record for '" + rec.runner + "' does not have 400 logits");
    line.clear();
    line += "{\"runner\":" + json(rec.runner).dump() + ",\"rp\":" + std::to_string(rec.rp) + ",\"mode\":\"" +
            std::string(to_string(rec.mode)) + "\",\"logits\":[";
    for (std::size_t i = 0; i < rec.logits.size(); ++i) {
      if (i) line += ',';
      line += fmt_g(rec.logits[i], 9);
    }
    line += "]}\n";
    out << line;
  }
}

void save_embeddings(const std::filesystem::path& path, const std::vector<ClipRecord>& records) {
  auto out = open_out(path);
  write_embeddings(out, records);
}

namespace {

constexpr char kBinaryMagic[8] = {'R', 'P', 'E', 'M', 'B', '\0', '\0', '\1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>(bits & 0xFF));
    bits = static_cast<U>(bits >> 8);
  }
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::make_unsigned_t<T>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw Error("truncated binary embeddings file");
    bits |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(c)) << (8 * i));
  }
  return static_cast<T>(bits);
}

}  // namespace

void save_embeddings_binary(const std::filesystem::path& path, const std::vector<ClipRecord>& records) {
  auto out = open_out(path);
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    if (rec.logits.size() != kLogitsDim) throw Error("record for '" + rec.runner + "' does not have 400 logits");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.runner.size()));
    out.write(rec.runner.data(), static_cast<std::streamsize>(rec.runner.size()));
    put_le<std::int32_t>(out, rec.rp);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(rec.mode));
    for (float v : rec.logits) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
}

std::vector<ClipRecord> load_embeddings_binary(const std::filesystem::path& path) {
  auto in = open_in(path);
  char magic[sizeof kBinaryMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) throw Error(path.string() + ": bad magic");
  const auto count = get_le<std::uint32_t>(in);
  std::vector<ClipRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    ClipRecord rec;
    const auto len = get_le<std::uint32_t>(in);
    rec.runner.resize(len);
    in.read(rec.runner.data(), len);
    if (!in) throw Error("truncated binary embeddings file");
    rec.rp = get_le<std::int32_t>(in);
    const auto mode = get_le<std::uint8_t>(in);
    if (mode > 2) throw Error("bad context mode in binary embeddings");
    rec.mode = static_cast<ContextMode>(mode);
    rec.logits.resize(kLogitsDim);
    for (auto& v : rec.logits) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------- split times

std::vector<SplitRecord> read_split_times(std::istream& in) {
  std::vector<SplitRecord> splits;
  std::string text;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    strip_cr(text);
    if (blank(text)) continue;
    if (!header_seen) {
      if (text != "runner,rp,seconds") fail_line(line, "expected header 'runner,rp,seconds'");
      header_seen = true;
      continue;
    }
    const auto cols = split_csv(text);
    if (cols.size() != 3) fail_line(line, "expected 3 columns");
    SplitRecord rec{cols[0], parse_number<int>(cols[1], line, "rp"), parse_number<double>(cols[2], line, "seconds")};
    if (rec.runner.empty()) fail_line(line, "empty runner id");
    if (!(rec.seconds > 0.0) || !std::isfinite(rec.seconds)) fail_line(line, "split time must be positive");
    splits.push_back(std::move(rec));
  }

  std::map<std::string, std::vector<const SplitRecord*>> by_runner;
  for (const auto& s : splits) by_runner[s.runner].push_back(&s);
  for (auto& [runner, list] : by_runner) {
    std::sort(list.begin(), list.end(), [](const auto* a, const auto* b) { return a->rp < b->rp; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i]->rp == list[i - 1]->rp) {
        throw Error("runner '" + runner + "' has two split times at rp " + std::to_string(list[i]->rp));
      }
      if (!(list[i]->seconds > list[i - 1]->seconds)) {
        throw Error("runner '" + runner + "': split time at rp " + std::to_string(list[i]->rp) +
                    " is not later than at rp " + std::to_string(list[i - 1]->rp));
      }
    }
  }
  return splits;
}

std::vector<SplitRecord> load_split_times(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_split_times(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_split_times(std::ostream& out, const std::vector<SplitRecord>& splits) {
  out << "runner,rp,seconds\n";
  for (const auto& s : splits) out << s.runner << ',' << s.rp << ',' << fmt_g(s.seconds, 17) << '\n';
}

void save_split_times(const std::filesystem::path& path, const std::vector<SplitRecord>& splits) {
  auto out = open_out(path);
  write_split_times(out, splits);
}

// ---------------------------------------------------------------- detections

std::vector<Detection> read_detections(std::istream& in, std::size_t expected_dim) {
  std::vector<Detection> detections;
  std::string text;
  std::size_t line = 0;
  std::size_t dim = expected_dim;
  while (std::getline(in, text)) {
    ++line;
    strip_cr(text);
    if (blank(text)) continue;
    const json obj = parse_json_line(text, line);
    Detection det;
    det.frame = field<int>(obj, "frame", line);
    if (det.frame < 0) fail_line(line, "negative frame index");
    const auto box = field<std::vector<double>>(obj, "bbox", line);
    if (box.size() != 4) fail_line(line, "bbox must have 4 numbers [cx,cy,w,h]");
    det.bbox = {box[0], box[1], box[2], box[3]};
    if (!(det.bbox.w > 0.0) || !(det.bbox.h > 0.0)) fail_line(line, "bbox width and height must be positive");
    det.confidence = field<double>(obj, "conf", line);
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) fail_line(line, "conf must lie in [0,1]");
    det.feature = field<std::vector<double>>(obj, "feat", line);
    if (dim == 0) dim = det.feature.size();
    if (det.feature.size() != dim || dim == 0) {
      fail_line(line, "expected feature dimension " + std::to_string(dim) + ", got " + std::to_string(det.feature.size()));
    }
    double norm = 0.0;
    for (double v : det.feature) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) fail_line(line, "feature vector has zero or non-finite norm");
    for (double& v : det.feature) v /= norm;
    detections.push_back(std::move(det));
  }
  return detections;
}

std::vector<Detection> load_detections(const std::filesystem::path& path, std::size_t expected_dim) {
  auto in = open_in(path);
  try {
    return read_detections(in, expected_dim);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_detections(std::ostream& out, const std::vector<Detection>& detections) {
  for (const auto& d : detections) {
    json obj = {{"frame", d.frame},
                {"bbox", {d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h}},
                {"conf", d.confidence},
                {"feat", d.feature}};
    out << obj.dump() << '\n';
  }
}

void save_detections(const std::filesystem::path& path, const std::vector<Detection>& detections) {
  auto out = open_out(path);
  write_detections(out, detections);
}

std::vector<std::vector<Detection>> group_by_frame(const std::vector<Detection>& detections) {
  int last = -1;
  for (const auto& d : detections) last = std::max(last, d.frame);
  std::vector<std::vector<Detection>> frames(static_cast<std::size_t>(last + 1));
  for (const auto& d : detections) frames[static_cast<std::size_t>(d.frame)].push_back(d);
  return frames;
}

// ---------------------------------------------------------------- rp table

std::vector<RPInfo> read_rp_info(std::istream& in) {
  std::vector<RPInfo> rps;
  std::string text;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    strip_cr(text);
    if (blank(text)) continue;
    if (!header_seen) {
      if (text != "location,km,start_rec_time,footage_frames,annotated_runners") {
        fail_line(line, "expected header 'location,km,start_rec_time,footage_frames,annotated_runners'");
      }
      header_seen = true;
      continue;
    }
    const auto cols = split_csv(text);
    if (cols.size() != 5) fail_line(line, "expected 5 columns");
    if (cols[0].size() < 3 || cols[0].compare(0, 2, "RP") != 0) fail_line(line, "location must look like RP<n>");
    RPInfo info;
    info.rp = parse_number<int>(cols[0].substr(2), line, "location");
    info.km = parse_number<double>(cols[1], line, "km");
    info.start_rec_time = cols[2];
    const auto& t = info.start_rec_time;
    if (t.size() != 5 || t[2] != ':' || !std::isdigit(static_cast<unsigned char>(t[0])) ||
        !std::isdigit(static_cast<unsigned char>(t[1])) || !std::isdigit(static_cast<unsigned char>(t[3])) ||
        !std::isdigit(static_cast<unsigned char>(t[4]))) {
      fail_line(line, "start_rec_time must be hh:mm");
    }
    info.footage_frames = parse_number<long long>(cols[3], line, "footage_frames");
    info.annotated_runners = parse_number<int>(cols[4], line, "annotated_runners");
    rps.push_back(std::move(info));
  }
  std::vector<RPInfo> sorted = rps;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.rp < b.rp; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!(sorted[i].km > sorted[i - 1].km)) throw Error("recording point km must increase with rp id");
  }
  return rps;
}

std::vector<RPInfo> load_rp_info(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_rp_info(in);
}

void write_rp_info(std::ostream& out, const std::vector<RPInfo>& rps) {
  out << "location,km,start_rec_time,footage_frames,annotated_runners\n";
  for (const auto& r : rps) {
    out << "RP" << r.rp << ',' << fmt_g(r.km, 17) << ',' << r.start_rec_time << ',' << r.footage_frames << ','
        << r.annotated_runners << '\n';
  }
}

void save_rp_info(const std::filesystem::path& path, const std::vector<RPInfo>& rps) {
  auto out = open_out(path);
  write_rp_info(out, rps);
}

// ---------------------------------------------------------------- masking

FrameBuffer mask_context(const FrameBuffer& frame, const BBox& box, std::uint8_t fill) {
  FrameBuffer out = frame;
  std::fill(out.pixels.begin(), out.pixels.end(), fill);
  if (!(box.w > 0.0) || !(box.h > 0.0)) return out;

  const auto clamp_to = [](double v, int hi) {
    return static_cast<int>(std::clamp(std::lround(v), 0L, static_cast<long>(hi)));
  };
  const int x0 = clamp_to(box.left(), frame.width);
  const int x1 = clamp_to(box.right(), frame.width);
  const int y0 = clamp_to(box.top(), frame.height);
  const int y1 = clamp_to(box.bottom(), frame.height);
  const auto row_bytes = static_cast<std::size_t>(x1 - x0) * FrameBuffer::kChannels;
  for (int y = y0; y < y1; ++y) {
    if (row_bytes == 0) break;
    const std::size_t offset = (static_cast<std::size_t>(y) * frame.width + x0) * FrameBuffer::kChannels;
    std::memcpy(out.pixels.data() + offset, frame.pixels.data() + offset, row_bytes);
  }
  return out;
}

}  // namespace runperf
