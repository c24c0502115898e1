#include "roadrisk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

#include "roadrisk/rng.hpp"

namespace roadrisk {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  if (name == "unassigned") return Split::unassigned;
  return std::nullopt;
}

void VideoManifest::validate() const {
  if (video_id.empty()) throw std::invalid_argument("manifest has an empty video_id");
  if (!(fps > 0.0)) {
    throw std::invalid_argument("manifest '" + video_id + "': fps must be positive");
  }
  if (crash_time && (*crash_time < 0.0 || *crash_time > duration())) {
    throw std::invalid_argument("manifest '" + video_id +
                                "': crash_time outside [0, duration]");
  }
  if (!frame_path_template.empty() &&
      frame_path_template.find("{frame}") == std::string::npos) {
    throw std::invalid_argument("manifest '" + video_id +
                                "': frame_path_template lacks the {frame} placeholder");
  }
}

std::string frame_id(std::string_view video_id, std::size_t frame_index) {
  return std::string(video_id) + "_" + std::to_string(frame_index);
}

std::vector<std::size_t> sample_frames(std::size_t frame_count) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < frame_count; i += 6) indices.push_back(i);
  return indices;
}

std::optional<CrashClass> crash_window_label(double t, double crash_time) {
  if (t >= crash_time) return CrashClass::crash;
  if (t >= crash_time - 2.0) return CrashClass::pre_crash;
  if (t >= crash_time - 5.0) return CrashClass::no_crash;
  return std::nullopt;
}

std::vector<std::optional<CrashClass>> label_crash_windows(const VideoManifest& manifest) {
  manifest.validate();
  if (!manifest.crash_time) {
    throw std::invalid_argument("manifest '" + manifest.video_id + "' has no crash_time");
  }
  std::vector<std::optional<CrashClass>> labels(manifest.frame_count);
  for (std::size_t i = 0; i < manifest.frame_count; ++i) {
    labels[i] = crash_window_label(static_cast<double>(i) / manifest.fps,
                                   *manifest.crash_time);
  }
  return labels;
}

std::string frame_image_path(const VideoManifest& manifest, std::size_t frame_index) {
  if (manifest.frame_path_template.empty()) return {};
  std::string path = manifest.frame_path_template;
  const std::size_t pos = path.find("{frame}");
  path.replace(pos, 7, std::to_string(frame_index));
  return path;
}

std::vector<FrameRecord> build_records(std::span<const VideoManifest> manifests) {
  std::vector<FrameRecord> records;
  for (const VideoManifest& manifest : manifests) {
    manifest.validate();
    for (std::size_t index : sample_frames(manifest.frame_count)) {
      FrameRecord rec;
      rec.video_id = manifest.video_id;
      rec.frame_index = index;
      rec.timestamp = static_cast<double>(index) / manifest.fps;
      rec.image_path = frame_image_path(manifest, index);
      rec.road = manifest.road_function;
      rec.weather = manifest.weather;
      rec.time = manifest.time_of_day;
      if (manifest.crash_time) {
        rec.crash = crash_window_label(rec.timestamp, *manifest.crash_time);
        if (!rec.crash) continue;  // outside the labeling windows
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

void split_records(std::vector<FrameRecord>& records, const SplitFractions& fractions,
                   std::uint32_t seed) {
  const double f[3] = {fractions.train, fractions.val, fractions.test};
  double sum = 0.0;
  for (double v : f) {
    if (v < 0.0) throw std::invalid_argument("split fractions must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  if (records.empty()) return;

  // Distinct videos in first-appearance order, with record counts.
  std::vector<std::string> videos;
  std::map<std::string, std::size_t> video_records;
  for (const FrameRecord& rec : records) {
    auto [it, inserted] = video_records.try_emplace(rec.video_id, 0);
    if (inserted) videos.push_back(rec.video_id);
    ++it->second;
  }

  // Largest-remainder record targets per split.
  const double total = static_cast<double>(records.size());
  std::size_t target[3];
  double remainder[3];
  std::size_t assigned_total = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = f[s] * total;
    target[s] = static_cast<std::size_t>(std::floor(exact));
    remainder[s] = exact - std::floor(exact);
    assigned_total += target[s];
  }
  std::size_t leftover = records.size() - assigned_total;
  while (leftover > 0) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (remainder[s] > remainder[best]) best = s;
    }
    ++target[best];
    remainder[best] = -1.0;
    --leftover;
  }

  // Greedy: each shuffled video goes to the split with the largest deficit.
  Rng rng(Rng::derive(seed, 0xD5u));
  rng.shuffle(videos);
  std::map<std::string, Split> assignment;
  std::int64_t deficit[3] = {static_cast<std::int64_t>(target[0]),
                             static_cast<std::int64_t>(target[1]),
                             static_cast<std::int64_t>(target[2])};
  constexpr Split kSplits[3] = {Split::train, Split::val, Split::test};
  for (const std::string& video : videos) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (deficit[s] > deficit[best]) best = s;
    }
    assignment[video] = kSplits[best];
    deficit[best] -= static_cast<std::int64_t>(video_records[video]);
  }

  for (FrameRecord& rec : records) rec.split = assignment[rec.video_id];
}

ClassBalance class_balance(std::span<const FrameRecord> records, Task task) {
  ClassBalance balance;
  balance.counts.assign(class_count(task), 0);
  for (const FrameRecord& rec : records) {
    std::optional<std::size_t> label;
    switch (task) {
      case Task::crash_likelihood:
        if (rec.crash) label = static_cast<std::size_t>(*rec.crash);
        break;
      case Task::road_function:
        if (rec.road) label = static_cast<std::size_t>(*rec.road);
        break;
      case Task::weather:
        if (rec.weather) label = static_cast<std::size_t>(*rec.weather);
        break;
      case Task::time_of_day:
        if (rec.time) label = static_cast<std::size_t>(*rec.time);
        break;
    }
    if (label) {
      ++balance.counts[*label];
      ++balance.total;
    }
  }
  if (balance.total == 0) {
    throw std::invalid_argument(std::string("no records carry a '") +
                                std::string(task_name(task)) + "' label");
  }

  std::uint64_t largest = 0;
  std::uint64_t smallest = 0;
  std::size_t populated = 0;
  for (std::uint64_t count : balance.counts) {
    if (count == 0) continue;
    ++populated;
    largest = std::max(largest, count);
    smallest = (populated == 1) ? count : std::min(smallest, count);
  }
  if (populated < 2) {
    throw std::invalid_argument(std::string("balance ratio undefined: only one '") +
                                std::string(task_name(task)) + "' class is populated");
  }
  balance.ratio = static_cast<double>(largest) / static_cast<double>(smallest);
  return balance;
}

namespace {

json record_to_json(const FrameRecord& rec) {
  json labels = json::object();
  if (rec.crash) labels["crash_likelihood"] = std::string(to_string(*rec.crash));
  if (rec.road) labels["road_function"] = std::string(to_string(*rec.road));
  if (rec.weather) labels["weather"] = std::string(to_string(*rec.weather));
  if (rec.time) labels["time_of_day"] = std::string(to_string(*rec.time));
  json j;
  j["video_id"] = rec.video_id;
  j["frame_index"] = rec.frame_index;
  j["timestamp"] = rec.timestamp;
  if (!rec.image_path.empty()) j["image"] = rec.image_path;
  j["labels"] = labels;
  j["split"] = std::string(to_string(rec.split));
  return j;
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

template <typename Enum>
std::optional<Enum> parse_label_field(const json& obj, const char* key,
                                      std::optional<Enum> (*parse)(std::string_view),
                                      const std::filesystem::path& path, std::size_t line) {
  if (!obj.contains(key)) return std::nullopt;
  const auto text = obj[key].get<std::string>();
  const auto value = parse(text);
  if (!value) fail_line(path, line, std::string("unknown ") + key + " '" + text + "'");
  return value;
}

}  // namespace

std::vector<VideoManifest> read_manifests(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest file: " + path.string());

  std::vector<VideoManifest> manifests;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    VideoManifest m;
    try {
      m.video_id = j.at("video_id").get<std::string>();
      m.fps = j.at("fps").get<double>();
      m.frame_count = j.at("frame_count").get<std::size_t>();
      if (j.contains("crash_time")) m.crash_time = j["crash_time"].get<double>();
      if (j.contains("frame_path_template")) {
        m.frame_path_template = j["frame_path_template"].get<std::string>();
      }
    } catch (const json::exception& e) {
      fail_line(path, line_no, std::string("bad manifest fields: ") + e.what());
    }
    m.road_function = parse_label_field(j, "road_function", parse_road_function, path, line_no);
    m.weather = parse_label_field(j, "weather", parse_weather, path, line_no);
    m.time_of_day = parse_label_field(j, "time_of_day", parse_time_of_day, path, line_no);
    try {
      m.validate();
    } catch (const std::invalid_argument& e) {
      fail_line(path, line_no, e.what());
    }
    manifests.push_back(std::move(m));
  }
  return manifests;
}

void write_manifests(std::span<const VideoManifest> manifests,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open manifest file for writing: " + path.string());
  for (const VideoManifest& m : manifests) {
    json j;
    j["video_id"] = m.video_id;
    j["fps"] = m.fps;
    j["frame_count"] = m.frame_count;
    if (m.crash_time) j["crash_time"] = *m.crash_time;
    if (m.road_function) j["road_function"] = std::string(to_string(*m.road_function));
    if (m.weather) j["weather"] = std::string(to_string(*m.weather));
    if (m.time_of_day) j["time_of_day"] = std::string(to_string(*m.time_of_day));
    if (!m.frame_path_template.empty()) j["frame_path_template"] = m.frame_path_template;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing manifest file: " + path.string());
}

namespace {

json summary_json(std::span<const FrameRecord> records) {
  json splits = {{"train", 0}, {"val", 0}, {"test", 0}, {"unassigned", 0}};
  for (const FrameRecord& rec : records) {
    auto& slot = splits[std::string(to_string(rec.split))];
    slot = slot.get<std::uint64_t>() + 1;
  }

  json tasks = json::object();
  for (Task task : {Task::crash_likelihood, Task::road_function, Task::weather,
                    Task::time_of_day}) {
    std::vector<std::uint64_t> counts(class_count(task), 0);
    std::uint64_t total = 0;
    for (const FrameRecord& rec : records) {
      std::optional<std::size_t> label;
      switch (task) {
        case Task::crash_likelihood:
          if (rec.crash) label = static_cast<std::size_t>(*rec.crash);
          break;
        case Task::road_function:
          if (rec.road) label = static_cast<std::size_t>(*rec.road);
          break;
        case Task::weather:
          if (rec.weather) label = static_cast<std::size_t>(*rec.weather);
          break;
        case Task::time_of_day:
          if (rec.time) label = static_cast<std::size_t>(*rec.time);
          break;
      }
      if (label) {
        ++counts[*label];
        ++total;
      }
    }
    json classes = json::object();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      classes[std::string(class_name(task, c))] = counts[c];
    }
    tasks[std::string(task_name(task))] = {{"classes", classes}, {"labeled", total}};
  }

  return {{"summary", {{"total", records.size()}, {"splits", splits}, {"tasks", tasks}}}};
}

}  // namespace

void write_records(std::span<const FrameRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open records file for writing: " + path.string());
  for (const FrameRecord& rec : records) out << record_to_json(rec).dump() << '\n';
  out << summary_json(records).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing records file: " + path.string());
}

std::vector<FrameRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records file: " + path.string());

  std::vector<FrameRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (j.contains("summary")) continue;  // trailing summary block

    FrameRecord rec;
    try {
      rec.video_id = j.at("video_id").get<std::string>();
      rec.frame_index = j.at("frame_index").get<std::size_t>();
      rec.timestamp = j.at("timestamp").get<double>();
      if (j.contains("image")) rec.image_path = j["image"].get<std::string>();
    } catch (const json::exception& e) {
      fail_line(path, line_no, std::string("bad record fields: ") + e.what());
    }
    const json labels = j.value("labels", json::object());
    rec.crash = parse_label_field(labels, "crash_likelihood", parse_crash_class, path, line_no);
    rec.road = parse_label_field(labels, "road_function", parse_road_function, path, line_no);
    rec.weather = parse_label_field(labels, "weather", parse_weather, path, line_no);
    rec.time = parse_label_field(labels, "time_of_day", parse_time_of_day, path, line_no);
    if (j.contains("split")) {
      const auto split_text = j["split"].get<std::string>();
      const auto split = parse_split(split_text);
      if (!split) fail_line(path, line_no, "unknown split '" + split_text + "'");
      rec.split = *split;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace roadrisk
