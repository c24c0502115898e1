#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "roadrisk/dataset.hpp"
#include "test_support.hpp"

using namespace roadrisk;

namespace {

VideoManifest crash_manifest(std::string id, double crash_time, std::size_t frames = 450,
                             double fps = 30.0) {
  VideoManifest m;
  m.video_id = std::move(id);
  m.fps = fps;
  m.frame_count = frames;
  m.crash_time = crash_time;
  m.road_function = RoadFunction::local;
  m.weather = Weather::clear;
  m.time_of_day = TimeOfDay::daytime;
  return m;
}

VideoManifest plain_manifest(std::string id, std::size_t frames = 60, double fps = 30.0) {
  VideoManifest m;
  m.video_id = std::move(id);
  m.fps = fps;
  m.frame_count = frames;
  m.weather = Weather::rainy;
  m.time_of_day = TimeOfDay::night;
  return m;
}

}  // namespace

TEST_CASE("split names round-trip") {
  for (Split s : {Split::train, Split::val, Split::test, Split::unassigned}) {
    CHECK(parse_split(to_string(s)) == s);
  }
  CHECK_FALSE(parse_split("holdout").has_value());
}

TEST_CASE("manifest validation") {
  VideoManifest m = crash_manifest("v1", 10.0);
  CHECK_NOTHROW(m.validate());
  CHECK(m.duration() == doctest::Approx(15.0));

  SUBCASE("empty id") {
    m.video_id.clear();
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("non-positive fps") {
    m.fps = 0.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("crash time outside the video") {
    m.crash_time = 15.5;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m.crash_time = -0.1;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
  SUBCASE("path template must carry the frame placeholder") {
    m.frame_path_template = "frames/img_0001.ppm";
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m.frame_path_template = "frames/img_{frame}.ppm";
    CHECK_NOTHROW(m.validate());
  }
}

TEST_CASE("frame sampling keeps one frame in six") {
  CHECK(sample_frames(30) == std::vector<std::size_t>{0, 6, 12, 18, 24});
  CHECK(sample_frames(0).empty());
  CHECK(sample_frames(1) == std::vector<std::size_t>{0});
  CHECK(sample_frames(7) == std::vector<std::size_t>{0, 6});
  CHECK(sample_frames(6) == std::vector<std::size_t>{0});
}

TEST_CASE("crash windows around the crash moment") {
  const double ct = 10.0;
  CHECK(crash_window_label(10.0, ct) == CrashClass::crash);
  CHECK(crash_window_label(10.2, ct) == CrashClass::crash);
  CHECK(crash_window_label(8.0, ct) == CrashClass::pre_crash);
  CHECK(crash_window_label(9.0, ct) == CrashClass::pre_crash);
  CHECK(crash_window_label(9.999, ct) == CrashClass::pre_crash);
  CHECK(crash_window_label(7.999, ct) == CrashClass::no_crash);
  CHECK(crash_window_label(6.0, ct) == CrashClass::no_crash);
  CHECK(crash_window_label(5.0, ct) == CrashClass::no_crash);
  CHECK_FALSE(crash_window_label(4.999, ct).has_value());
  CHECK_FALSE(crash_window_label(0.0, ct).has_value());

  SUBCASE("whole-video labeling needs a crash time") {
    VideoManifest no_crash = plain_manifest("p1");
    CHECK_THROWS_AS(label_crash_windows(no_crash), std::invalid_argument);
    VideoManifest with_crash = crash_manifest("c1", 10.0);
    auto labels = label_crash_windows(with_crash);
    CHECK(labels.size() == with_crash.frame_count);
    CHECK(labels[300] == CrashClass::crash);   // t = 10.0
    CHECK(labels[270] == CrashClass::pre_crash);  // t = 9.0
    CHECK(labels[200] == CrashClass::no_crash);   // t ~ 6.67
    CHECK_FALSE(labels[0].has_value());
  }
}

TEST_CASE("record building") {
  SUBCASE("crash videos keep only windowed frames") {
    // 450 frames at 30 fps, crash at 10 s: sampled times are 0, 0.2, ...
    // Windowed frames span t in [5, 15) -> indices 150..444.
    std::vector<VideoManifest> manifests{crash_manifest("c1", 10.0)};
    auto records = build_records(manifests);
    REQUIRE(!records.empty());
    for (const FrameRecord& r : records) {
      CHECK(r.timestamp >= 5.0);
      REQUIRE(r.crash.has_value());
      if (r.timestamp >= 10.0) CHECK(*r.crash == CrashClass::crash);
      if (r.timestamp >= 8.0 && r.timestamp < 10.0) {
        CHECK(*r.crash == CrashClass::pre_crash);
      }
      if (r.timestamp < 8.0) CHECK(*r.crash == CrashClass::no_crash);
      CHECK(r.road == RoadFunction::local);
      CHECK(r.split == Split::unassigned);
    }
    // Sampled indices 150, 156, ..., 444 inclusive.
    CHECK(records.size() == 50);
    CHECK(records.front().frame_index == 150);
    CHECK(records.back().frame_index == 444);
  }
  SUBCASE("videos without crash time keep every sampled frame, unlabeled for crash") {
    std::vector<VideoManifest> manifests{plain_manifest("p1", 60)};
    auto records = build_records(manifests);
    CHECK(records.size() == 10);
    for (const FrameRecord& r : records) {
      CHECK_FALSE(r.crash.has_value());
      CHECK(r.weather == Weather::rainy);
      CHECK(r.time == TimeOfDay::night);
      CHECK_FALSE(r.road.has_value());
    }
  }
  SUBCASE("image paths expand the frame placeholder") {
    VideoManifest m = plain_manifest("p2", 12);
    m.frame_path_template = "vids/p2/{frame}.ppm";
    std::vector<VideoManifest> manifests{m};
    auto records = build_records(manifests);
    REQUIRE(records.size() == 2);
    CHECK(records[0].image_path == "vids/p2/0.ppm");
    CHECK(records[1].image_path == "vids/p2/6.ppm");
    CHECK(frame_image_path(m, 42) == "vids/p2/42.ppm");
    VideoManifest no_template = plain_manifest("p3");
    CHECK(frame_image_path(no_template, 3).empty());
  }
  SUBCASE("frame ids combine video and index") {
    CHECK(frame_id("abc", 12) == "abc_12");
  }
  SUBCASE("invalid manifests are rejected") {
    std::vector<VideoManifest> manifests{plain_manifest("", 10)};
    CHECK_THROWS_AS(build_records(manifests), std::invalid_argument);
  }
}

TEST_CASE("whole-video split assignment") {
  // 20 videos x 5 records each.
  std::vector<VideoManifest> manifests;
  for (int i = 0; i < 20; ++i) {
    manifests.push_back(plain_manifest("v" + std::to_string(i), 30));
  }
  auto records = build_records(manifests);
  REQUIRE(records.size() == 100);

  SplitFractions fractions{0.75, 0.20, 0.05};
  split_records(records, fractions, 17);

  SUBCASE("every record is assigned and videos stay together") {
    std::map<std::string, Split> video_split;
    for (const FrameRecord& r : records) {
      CHECK(r.split != Split::unassigned);
      auto [it, inserted] = video_split.emplace(r.video_id, r.split);
      if (!inserted) CHECK(it->second == r.split);
    }
    CHECK(video_split.size() == 20);
  }
  SUBCASE("split sizes follow the fractions") {
    std::map<Split, int> counts;
    std::set<std::string> seen;
    for (const FrameRecord& r : records) {
      if (seen.insert(r.video_id).second) counts[r.split]++;
    }
    CHECK(counts[Split::train] == 15);
    CHECK(counts[Split::val] == 4);
    CHECK(counts[Split::test] == 1);
  }
  SUBCASE("assignment is deterministic in the seed") {
    auto again = build_records(manifests);
    split_records(again, fractions, 17);
    CHECK(again == records);

    auto other = build_records(manifests);
    split_records(other, fractions, 18);
    CHECK(other != records);
  }
  SUBCASE("degenerate fractions send everything to one split") {
    auto all_train = build_records(manifests);
    split_records(all_train, SplitFractions{1.0, 0.0, 0.0}, 3);
    for (const FrameRecord& r : all_train) CHECK(r.split == Split::train);
  }
  SUBCASE("fractions must sum to one") {
    CHECK_THROWS_AS(split_records(records, SplitFractions{0.5, 0.2, 0.2}, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(split_records(records, SplitFractions{-0.1, 0.6, 0.5}, 3),
                    std::invalid_argument);
  }
}

TEST_CASE("corpus-scale split sizes") {
  // 159 equal-length videos, 100 records each. Record targets are exact
  // (11925 / 3180 / 795); the greedy whole-video assignment can only hit
  // them to the nearest whole video: 119 / 32 / 8 videos.
  std::vector<FrameRecord> records;
  for (int v = 0; v < 159; ++v) {
    for (int f = 0; f < 100; ++f) {
      FrameRecord r;
      r.video_id = "vid" + std::to_string(v);
      r.frame_index = static_cast<std::size_t>(f) * 6;
      records.push_back(std::move(r));
    }
  }
  split_records(records, SplitFractions{0.75, 0.20, 0.05}, 99);
  std::map<Split, int> counts;
  for (const FrameRecord& r : records) counts[r.split]++;
  CHECK(counts[Split::train] == 11900);
  CHECK(counts[Split::val] == 3200);
  CHECK(counts[Split::test] == 800);
}

TEST_CASE("class balance") {
  std::vector<FrameRecord> records;
  auto add = [&](std::optional<CrashClass> crash, int n) {
    for (int i = 0; i < n; ++i) {
      FrameRecord r;
      r.video_id = "v";
      r.crash = crash;
      records.push_back(std::move(r));
    }
  };

  SUBCASE("perfectly balanced classes give ratio 1") {
    add(CrashClass::no_crash, 300);
    add(CrashClass::pre_crash, 300);
    add(CrashClass::crash, 300);
    ClassBalance balance = class_balance(records, Task::crash_likelihood);
    CHECK(balance.ratio == doctest::Approx(1.0));
    CHECK(balance.total == 900);
    CHECK(balance.counts == std::vector<std::uint64_t>{300, 300, 300});
  }
  SUBCASE("mild imbalance is the count ratio") {
    add(CrashClass::no_crash, 272);
    add(CrashClass::pre_crash, 322);
    add(CrashClass::crash, 306);
    ClassBalance balance = class_balance(records, Task::crash_likelihood);
    CHECK(balance.ratio == doctest::Approx(322.0 / 272.0));
  }
  SUBCASE("unlabeled records are ignored") {
    add(CrashClass::no_crash, 10);
    add(CrashClass::crash, 20);
    add(std::nullopt, 50);
    ClassBalance balance = class_balance(records, Task::crash_likelihood);
    CHECK(balance.total == 30);
    CHECK(balance.ratio == doctest::Approx(2.0));
  }
  SUBCASE("a single populated class has no meaningful ratio") {
    add(CrashClass::crash, 10);
    CHECK_THROWS_AS(class_balance(records, Task::crash_likelihood),
                    std::invalid_argument);
  }
  SUBCASE("no labels at all is an error") {
    add(std::nullopt, 5);
    CHECK_THROWS_AS(class_balance(records, Task::crash_likelihood),
                    std::invalid_argument);
    CHECK_THROWS_AS(class_balance(records, Task::weather), std::invalid_argument);
  }
}

TEST_CASE("manifest files round-trip") {
  testsupport::TempDir dir("dataset_io");
  std::vector<VideoManifest> manifests{crash_manifest("c1", 10.0),
                                       plain_manifest("p1", 60)};
  manifests[0].frame_path_template = "c1/{frame}.ppm";

  const auto path = dir.file("manifests.jsonl");
  write_manifests(manifests, path);
  auto loaded = read_manifests(path);

  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].video_id == "c1");
  CHECK(loaded[0].fps == doctest::Approx(30.0));
  CHECK(loaded[0].frame_count == 450);
  CHECK(loaded[0].crash_time == doctest::Approx(10.0));
  CHECK(loaded[0].road_function == RoadFunction::local);
  CHECK(loaded[0].frame_path_template == "c1/{frame}.ppm");
  CHECK(loaded[1].video_id == "p1");
  CHECK_FALSE(loaded[1].crash_time.has_value());
  CHECK(loaded[1].weather == Weather::rainy);

  SUBCASE("parse errors carry the line number") {
    std::ofstream out(dir.file("bad.jsonl"));
    out << R"({"video_id": "ok", "fps": 30, "frame_count": 10})" << "\n";
    out << "{this is not json}\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_manifests(dir.file("bad.jsonl")),
                         doctest::Contains(":2"), std::runtime_error);
  }
  SUBCASE("semantic errors carry the line number too") {
    std::ofstream out(dir.file("bad2.jsonl"));
    out << R"({"video_id": "ok", "fps": 30, "frame_count": 10})" << "\n";
    out << R"({"video_id": "", "fps": 30, "frame_count": 10})" << "\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_manifests(dir.file("bad2.jsonl")),
                         doctest::Contains(":2"), std::runtime_error);
  }
  SUBCASE("unknown label values are rejected") {
    std::ofstream out(dir.file("bad3.jsonl"));
    out << R"({"video_id": "x", "fps": 30, "frame_count": 10, "weather": "hail"})"
        << "\n";
    out.close();
    CHECK_THROWS_AS(read_manifests(dir.file("bad3.jsonl")), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_manifests(dir.file("absent.jsonl")), std::runtime_error);
  }
}

TEST_CASE("record files round-trip and summarize") {
  testsupport::TempDir dir("records_io");
  std::vector<VideoManifest> manifests{crash_manifest("c1", 10.0),
                                       plain_manifest("p1", 60)};
  auto records = build_records(manifests);
  split_records(records, SplitFractions{0.5, 0.5, 0.0}, 5);

  const auto path = dir.file("records.jsonl");
  write_records(records, path);
  auto loaded = read_records(path);
  CHECK(loaded == records);

  SUBCASE("the summary line reports totals") {
    std::ifstream in(path);
    std::string line, last;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) {
        last = line;
        ++lines;
      }
    }
    CHECK(lines == records.size() + 1);
    CHECK(last.find("summary") != std::string::npos);
    CHECK(last.find("crash_likelihood") != std::string::npos);
  }
}
