#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roadrisk {

// Closed label vocabularies for the four scene classification tasks.
// Class order is fixed; indices into these arrays are used everywhere
// (model branches, confusion matrices, record files).

enum class CrashClass { no_crash = 0, pre_crash = 1, crash = 2 };
enum class RoadFunction { arterial = 0, collector = 1, interstate = 2, local = 3 };
enum class Weather { clear = 0, foggy = 1, overcast = 2, rainy = 3, snowy = 4 };
enum class TimeOfDay { dawn_dusk = 0, daytime = 1, night = 2 };

inline constexpr std::array<std::string_view, 3> kCrashClassNames{
    "no_crash", "pre_crash", "crash"};
inline constexpr std::array<std::string_view, 4> kRoadFunctionNames{
    "arterial", "collector", "interstate", "local"};
inline constexpr std::array<std::string_view, 5> kWeatherNames{
    "clear", "foggy", "overcast", "rainy", "snowy"};
inline constexpr std::array<std::string_view, 3> kTimeOfDayNames{
    "dawn_dusk", "daytime", "night"};

enum class Task { crash_likelihood = 0, road_function = 1, weather = 2, time_of_day = 3 };

inline constexpr std::array<std::string_view, 4> kTaskNames{
    "crash_likelihood", "road_function", "weather", "time_of_day"};

constexpr std::size_t class_count(Task task) {
  switch (task) {
    case Task::crash_likelihood: return kCrashClassNames.size();
    case Task::road_function: return kRoadFunctionNames.size();
    case Task::weather: return kWeatherNames.size();
    case Task::time_of_day: return kTimeOfDayNames.size();
  }
  return 0;
}

inline std::span<const std::string_view> class_names(Task task) {
  switch (task) {
    case Task::crash_likelihood: return kCrashClassNames;
    case Task::road_function: return kRoadFunctionNames;
    case Task::weather: return kWeatherNames;
    case Task::time_of_day: return kTimeOfDayNames;
  }
  throw std::invalid_argument("unknown task");
}

inline constexpr std::string_view task_name(Task task) {
  return kTaskNames[static_cast<std::size_t>(task)];
}

inline std::optional<std::size_t> class_index(Task task, std::string_view name) {
  auto names = class_names(task);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

inline std::string_view class_name(Task task, std::size_t index) {
  auto names = class_names(task);
  if (index >= names.size()) throw std::out_of_range("class index out of range");
  return names[index];
}

/// One label per classification task.
struct SceneLabels {
  CrashClass crash = CrashClass::no_crash;
  RoadFunction road = RoadFunction::arterial;
  Weather weather = Weather::clear;
  TimeOfDay time = TimeOfDay::daytime;

  bool operator==(const SceneLabels&) const = default;
};

template <typename E>
std::optional<E> parse_label(Task task, std::string_view name) {
  auto idx = class_index(task, name);
  if (!idx) return std::nullopt;
  return static_cast<E>(*idx);
}

inline std::optional<CrashClass> parse_crash_class(std::string_view s) {
  return parse_label<CrashClass>(Task::crash_likelihood, s);
}
inline std::optional<RoadFunction> parse_road_function(std::string_view s) {
  return parse_label<RoadFunction>(Task::road_function, s);
}
inline std::optional<Weather> parse_weather(std::string_view s) {
  return parse_label<Weather>(Task::weather, s);
}
inline std::optional<TimeOfDay> parse_time_of_day(std::string_view s) {
  return parse_label<TimeOfDay>(Task::time_of_day, s);
}

inline std::string_view to_string(CrashClass c) {
  return kCrashClassNames[static_cast<std::size_t>(c)];
}
inline std::string_view to_string(RoadFunction c) {
  return kRoadFunctionNames[static_cast<std::size_t>(c)];
}
inline std::string_view to_string(Weather c) {
  return kWeatherNames[static_cast<std::size_t>(c)];
}
inline std::string_view to_string(TimeOfDay c) {
  return kTimeOfDayNames[static_cast<std::size_t>(c)];
}

}  // namespace roadrisk
