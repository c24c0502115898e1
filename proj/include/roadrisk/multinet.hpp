#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadrisk/labels.hpp"
#include "roadrisk/layers.hpp"

namespace roadrisk {

/// Width profile for the scene classifier. `full` is the production shape;
/// `desk` shrinks hidden widths, channels, kernels and input resolution so
/// full training runs finish in seconds while the layer logic stays the same.
enum class ScaleProfile { full, desk };

std::string_view to_string(ScaleProfile profile);
std::optional<ScaleProfile> parse_scale_profile(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t epochs_network1 = 80;
  std::size_t epochs_network2 = 30;
  std::uint32_t seed = 0;
  double crash_weight = 1.0;
  double road_weight = 1.0;
  double weather_weight = 1.0;
  double time_weight = 1.0;

  void validate() const;  // throws on non-positive rates/sizes/epochs
};

/// One image with whatever task labels it carries (class indices into the
/// task vocabularies). A network only trains on samples labeled for both of
/// its tasks.
struct TrainingSample {
  Tensor image;  // H x W x 3
  std::optional<std::size_t> crash;
  std::optional<std::size_t> road;
  std::optional<std::size_t> weather;
  std::optional<std::size_t> time;
};

struct ClassScores {
  std::vector<float> crash;    // 3
  std::vector<float> road;     // 4
  std::vector<float> weather;  // 5
  std::vector<float> time;     // 3
};

struct Classification {
  SceneLabels labels;
  ClassScores scores;
};

enum class TaskPair { crash_road, weather_time };

std::string_view to_string(TaskPair pair);
std::optional<TaskPair> parse_task_pair(std::string_view name);

struct EpochStats {
  TaskPair network;
  std::size_t epoch = 0;  // zero-based
  double mean_loss = 0.0;
};

/// Return false to stop training the current network after this epoch.
using EpochCallback = std::function<bool(const EpochStats&)>;

struct TrainLog {
  std::vector<double> network1_epoch_loss;
  std::vector<double> network2_epoch_loss;
};

/// One classification network: a shared trunk feeding two task branches.
struct TwoBranchNetwork {
  std::size_t input_h = 0;
  std::size_t input_w = 0;
  Task task_a = Task::crash_likelihood;
  Task task_b = Task::road_function;
  Sequential trunk;
  Sequential branch_a;
  Sequential branch_b;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<Tensor*> gradients();
  void zero_gradients();
};

/// The two parallel multi-task networks. Network 1 flattens a downsampled
/// image and classifies crash likelihood and road function through separate
/// perceptron branches; network 2 runs three conv/pool blocks and classifies
/// weather and time of day. A frozen instance is safe to share across
/// threads for classify(); train() requires exclusive ownership.
class MultiNet {
 public:
  /// Builds and initializes both networks (seeded Glorot-uniform weights,
  /// zero biases).
  static MultiNet make(ScaleProfile profile, std::uint32_t seed);

  ScaleProfile profile() const { return profile_; }
  std::uint32_t seed() const { return seed_; }

  /// Four labels plus the four softmax score vectors for one image. The
  /// image is resized internally to each network's input resolution; it must
  /// be at least 8x8 with finite values.
  Classification classify(const Tensor& image) const;

  /// Trains the selected network(s) with SGD on the summed per-task
  /// cross-entropy. Shuffle order, and therefore the trained weights, are a
  /// pure function of config.seed. Returns per-epoch mean losses.
  TrainLog train(std::span<const TrainingSample> samples, const TrainConfig& config,
                 std::optional<TaskPair> which = std::nullopt,
                 const EpochCallback& on_epoch = {});

  void zero_parameters();
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  TwoBranchNetwork& network1() { return net1_; }
  TwoBranchNetwork& network2() { return net2_; }
  const TwoBranchNetwork& network1() const { return net1_; }
  const TwoBranchNetwork& network2() const { return net2_; }

  /// Rebuilds an (uninitialized) model from serialized structure; used by
  /// the model file loader. Specs must match the given profile's shape.
  static MultiNet from_specs(ScaleProfile profile, std::uint32_t seed,
                             const std::vector<std::vector<LayerSpec>>& network1_specs,
                             const std::vector<std::vector<LayerSpec>>& network2_specs,
                             std::size_t input1, std::size_t input2);

 private:
  MultiNet() = default;

  std::vector<double> train_network(TwoBranchNetwork& net, TaskPair pair,
                                    std::span<const TrainingSample> samples,
                                    const TrainConfig& config,
                                    const EpochCallback& on_epoch);

  ScaleProfile profile_ = ScaleProfile::full;
  std::uint32_t seed_ = 0;
  TwoBranchNetwork net1_;
  TwoBranchNetwork net2_;
};

/// Index of the highest score; first index wins ties.
std::size_t argmax(std::span<const float> scores);

}  // namespace roadrisk
