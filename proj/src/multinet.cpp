#include "roadrisk/multinet.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace roadrisk {

std::string_view to_string(ScaleProfile profile) {
  return profile == ScaleProfile::full ? "full" : "desk";
}

std::optional<ScaleProfile> parse_scale_profile(std::string_view name) {
  if (name == "full") return ScaleProfile::full;
  if (name == "desk") return ScaleProfile::desk;
  return std::nullopt;
}

std::string_view to_string(TaskPair pair) {
  return pair == TaskPair::crash_road ? "crash-road" : "weather-time";
}

std::optional<TaskPair> parse_task_pair(std::string_view name) {
  if (name == "crash-road") return TaskPair::crash_road;
  if (name == "weather-time") return TaskPair::weather_time;
  return std::nullopt;
}

void TrainConfig::validate() const {
  // learning_rate 0 is legal and means "no update"; negatives are not.
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (epochs_network1 == 0 || epochs_network2 == 0) {
    throw std::invalid_argument("epoch counts must be positive");
  }
  if (crash_weight < 0 || road_weight < 0 || weather_weight < 0 || time_weight < 0) {
    throw std::invalid_argument("task loss weights must be non-negative");
  }
}

std::vector<Tensor*> TwoBranchNetwork::parameters() {
  std::vector<Tensor*> out = trunk.parameters();
  for (Tensor* p : branch_a.parameters()) out.push_back(p);
  for (Tensor* p : branch_b.parameters()) out.push_back(p);
  return out;
}

std::vector<const Tensor*> TwoBranchNetwork::parameters() const {
  std::vector<const Tensor*> out = trunk.parameters();
  for (const Tensor* p : branch_a.parameters()) out.push_back(p);
  for (const Tensor* p : branch_b.parameters()) out.push_back(p);
  return out;
}

std::vector<Tensor*> TwoBranchNetwork::gradients() {
  std::vector<Tensor*> out = trunk.gradients();
  for (Tensor* g : branch_a.gradients()) out.push_back(g);
  for (Tensor* g : branch_b.gradients()) out.push_back(g);
  return out;
}

void TwoBranchNetwork::zero_gradients() {
  trunk.zero_gradients();
  branch_a.zero_gradients();
  branch_b.zero_gradients();
}

std::size_t argmax(std::span<const float> scores) {
  return static_cast<std::size_t>(
      std::max_element(scores.begin(), scores.end()) - scores.begin());
}

namespace {

struct NetworkShape {
  std::size_t input = 0;            // square input side
  std::size_t mlp_hidden1 = 0;      // network 1 branch widths
  std::size_t mlp_hidden2 = 0;
  std::size_t conv_kernel = 0;      // network 2 conv stack
  std::size_t conv_channels[3] = {0, 0, 0};
  std::size_t cnn_hidden = 0;       // network 2 branch width
  std::size_t net1_input = 0;
  std::size_t net2_input = 0;
};

// The full-scale conv stack is the unique simple three-block chain taking
// 128x128 down to a 10x10x128 feature map: 128 ->122 ->61 ->55 ->27 ->21 ->10.
NetworkShape shape_for(ScaleProfile profile) {
  NetworkShape s;
  if (profile == ScaleProfile::full) {
    s.mlp_hidden1 = 1024;
    s.mlp_hidden2 = 512;
    s.conv_kernel = 7;
    s.conv_channels[0] = 32;
    s.conv_channels[1] = 64;
    s.conv_channels[2] = 128;
    s.cnn_hidden = 256;
    s.net1_input = 96;
    s.net2_input = 128;
  } else {
    s.mlp_hidden1 = 64;
    s.mlp_hidden2 = 32;
    s.conv_kernel = 3;
    s.conv_channels[0] = 4;
    s.conv_channels[1] = 8;
    s.conv_channels[2] = 16;
    s.cnn_hidden = 16;
    s.net1_input = 32;
    s.net2_input = 32;
  }
  return s;
}

std::size_t conv_stack_flat_size(const NetworkShape& s) {
  std::size_t side = s.net2_input;
  for (int block = 0; block < 3; ++block) {
    side = (side - s.conv_kernel + 1) / 2;  // valid conv then 2x2 pool
  }
  return side * side * s.conv_channels[2];
}

Sequential make_mlp_branch(std::size_t flat_in, std::size_t h1, std::size_t h2,
                           std::size_t classes) {
  Sequential seq;
  seq.add(make_layer(LayerSpec::dense(flat_in, h1)));
  seq.add(make_layer(LayerSpec::relu()));
  seq.add(make_layer(LayerSpec::dense(h1, h2)));
  seq.add(make_layer(LayerSpec::relu()));
  seq.add(make_layer(LayerSpec::dense(h2, classes)));
  return seq;
}

Sequential make_cnn_branch(std::size_t flat_in, std::size_t hidden, std::size_t classes) {
  Sequential seq;
  seq.add(make_layer(LayerSpec::dense(flat_in, hidden)));
  seq.add(make_layer(LayerSpec::relu()));
  seq.add(make_layer(LayerSpec::dense(hidden, classes)));
  return seq;
}

Sequential make_conv_trunk(const NetworkShape& s) {
  Sequential seq;
  std::size_t c_in = 3;
  for (int block = 0; block < 3; ++block) {
    seq.add(make_layer(LayerSpec::conv2d(s.conv_kernel, c_in, s.conv_channels[block])));
    seq.add(make_layer(LayerSpec::relu()));
    seq.add(make_layer(LayerSpec::maxpool2x2()));
    c_in = s.conv_channels[block];
  }
  seq.add(make_layer(LayerSpec::flatten()));
  return seq;
}

Sequential build_from_specs(const std::vector<LayerSpec>& specs) {
  Sequential seq;
  for (const LayerSpec& spec : specs) seq.add(make_layer(spec));
  return seq;
}

}  // namespace

MultiNet MultiNet::make(ScaleProfile profile, std::uint32_t seed) {
  const NetworkShape s = shape_for(profile);
  MultiNet m;
  m.profile_ = profile;
  m.seed_ = seed;

  m.net1_.input_h = m.net1_.input_w = s.net1_input;
  m.net1_.task_a = Task::crash_likelihood;
  m.net1_.task_b = Task::road_function;
  m.net1_.trunk.add(make_layer(LayerSpec::flatten()));
  const std::size_t flat1 = s.net1_input * s.net1_input * 3;
  m.net1_.branch_a = make_mlp_branch(flat1, s.mlp_hidden1, s.mlp_hidden2,
                                     class_count(Task::crash_likelihood));
  m.net1_.branch_b = make_mlp_branch(flat1, s.mlp_hidden1, s.mlp_hidden2,
                                     class_count(Task::road_function));

  m.net2_.input_h = m.net2_.input_w = s.net2_input;
  m.net2_.task_a = Task::weather;
  m.net2_.task_b = Task::time_of_day;
  m.net2_.trunk = make_conv_trunk(s);
  const std::size_t flat2 = conv_stack_flat_size(s);
  m.net2_.branch_a = make_cnn_branch(flat2, s.cnn_hidden, class_count(Task::weather));
  m.net2_.branch_b = make_cnn_branch(flat2, s.cnn_hidden, class_count(Task::time_of_day));

  // One seeded stream, consumed in declaration order, pins every weight.
  Rng rng(seed);
  m.net1_.trunk.init_parameters(rng);
  m.net1_.branch_a.init_parameters(rng);
  m.net1_.branch_b.init_parameters(rng);
  m.net2_.trunk.init_parameters(rng);
  m.net2_.branch_a.init_parameters(rng);
  m.net2_.branch_b.init_parameters(rng);
  return m;
}

MultiNet MultiNet::from_specs(ScaleProfile profile, std::uint32_t seed,
                              const std::vector<std::vector<LayerSpec>>& network1_specs,
                              const std::vector<std::vector<LayerSpec>>& network2_specs,
                              std::size_t input1, std::size_t input2) {
  if (network1_specs.size() != 3 || network2_specs.size() != 3) {
    throw std::invalid_argument("each network needs trunk and two branch spec lists");
  }
  MultiNet m;
  m.profile_ = profile;
  m.seed_ = seed;
  m.net1_.input_h = m.net1_.input_w = input1;
  m.net1_.task_a = Task::crash_likelihood;
  m.net1_.task_b = Task::road_function;
  m.net1_.trunk = build_from_specs(network1_specs[0]);
  m.net1_.branch_a = build_from_specs(network1_specs[1]);
  m.net1_.branch_b = build_from_specs(network1_specs[2]);
  m.net2_.input_h = m.net2_.input_w = input2;
  m.net2_.task_a = Task::weather;
  m.net2_.task_b = Task::time_of_day;
  m.net2_.trunk = build_from_specs(network2_specs[0]);
  m.net2_.branch_a = build_from_specs(network2_specs[1]);
  m.net2_.branch_b = build_from_specs(network2_specs[2]);
  return m;
}

namespace {

void check_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw std::invalid_argument("image must be H x W x 3");
  }
  if (image.dim(0) < 8 || image.dim(1) < 8) {
    throw std::invalid_argument("image must be at least 8x8");
  }
  if (!image.all_finite()) {
    throw std::invalid_argument("image contains non-finite values");
  }
}

std::vector<float> to_vector(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

}  // namespace

Classification MultiNet::classify(const Tensor& image) const {
  check_image(image);

  const Tensor in1 = resize_bilinear(image, net1_.input_h, net1_.input_w);
  const Tensor in2 = resize_bilinear(image, net2_.input_h, net2_.input_w);

  const Tensor t1 = net1_.trunk.forward(in1);
  const Tensor crash_scores = softmax(net1_.branch_a.forward(t1));
  const Tensor road_scores = softmax(net1_.branch_b.forward(t1));

  const Tensor t2 = net2_.trunk.forward(in2);
  const Tensor weather_scores = softmax(net2_.branch_a.forward(t2));
  const Tensor time_scores = softmax(net2_.branch_b.forward(t2));

  Classification out;
  out.scores.crash = to_vector(crash_scores);
  out.scores.road = to_vector(road_scores);
  out.scores.weather = to_vector(weather_scores);
  out.scores.time = to_vector(time_scores);
  out.labels.crash = static_cast<CrashClass>(argmax(out.scores.crash));
  out.labels.road = static_cast<RoadFunction>(argmax(out.scores.road));
  out.labels.weather = static_cast<Weather>(argmax(out.scores.weather));
  out.labels.time = static_cast<TimeOfDay>(argmax(out.scores.time));
  return out;
}

namespace {

struct PairLabels {
  std::size_t a = 0;
  std::size_t b = 0;
};

PairLabels labels_for(const TrainingSample& sample, TaskPair pair, std::size_t index) {
  auto need = [index](const std::optional<std::size_t>& label, Task task) {
    if (!label) {
      throw std::invalid_argument("sample " + std::to_string(index) +
                                  " is missing a required '" +
                                  std::string(task_name(task)) + "' label");
    }
    if (*label >= class_count(task)) {
      throw std::invalid_argument("sample " + std::to_string(index) + " has an out-of-range '" +
                                  std::string(task_name(task)) + "' label");
    }
    return *label;
  };
  if (pair == TaskPair::crash_road) {
    return {need(sample.crash, Task::crash_likelihood),
            need(sample.road, Task::road_function)};
  }
  return {need(sample.weather, Task::weather), need(sample.time, Task::time_of_day)};
}

Tensor scaled_loss_gradient(const Tensor& probs, std::size_t target, double scale) {
  Tensor g({probs.numel()});
  for (std::size_t i = 0; i < probs.numel(); ++i) {
    const double one_hot = (i == target) ? 1.0 : 0.0;
    g[i] = static_cast<float>((static_cast<double>(probs[i]) - one_hot) * scale);
  }
  return g;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
  return out;
}

}  // namespace

std::vector<double> MultiNet::train_network(TwoBranchNetwork& net, TaskPair pair,
                                            std::span<const TrainingSample> samples,
                                            const TrainConfig& config,
                                            const EpochCallback& on_epoch) {
  const double weight_a =
      pair == TaskPair::crash_road ? config.crash_weight : config.weather_weight;
  const double weight_b =
      pair == TaskPair::crash_road ? config.road_weight : config.time_weight;
  const std::size_t epochs =
      pair == TaskPair::crash_road ? config.epochs_network1 : config.epochs_network2;
  const std::uint32_t stream_base = pair == TaskPair::crash_road ? 0x1000u : 0x2000u;

  // Validate labels and resize every image once up front.
  std::vector<Tensor> inputs;
  std::vector<PairLabels> labels;
  inputs.reserve(samples.size());
  labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_image(samples[i].image);
    labels.push_back(labels_for(samples[i], pair, i));
    inputs.push_back(resize_bilinear(samples[i].image, net.input_h, net.input_w));
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const std::vector<Tensor*> params = net.parameters();
  const std::vector<Tensor*> grads = net.gradients();

  std::vector<double> epoch_losses;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(Rng::derive(config.seed, stream_base + static_cast<std::uint32_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      net.zero_gradients();

      for (std::size_t pos = start; pos < end; ++pos) {
        const std::size_t idx = order[pos];
        const Tensor trunk_out = net.trunk.forward_cached(inputs[idx]);
        const Tensor logits_a = net.branch_a.forward_cached(trunk_out);
        const Tensor logits_b = net.branch_b.forward_cached(trunk_out);

        const SoftmaxLoss loss_a = softmax_cross_entropy(logits_a, labels[idx].a);
        const SoftmaxLoss loss_b = softmax_cross_entropy(logits_b, labels[idx].b);
        loss_sum += weight_a * loss_a.loss + weight_b * loss_b.loss;

        const Tensor grad_trunk_a = net.branch_a.backward(
            scaled_loss_gradient(loss_a.probabilities, labels[idx].a, weight_a * inv_batch));
        const Tensor grad_trunk_b = net.branch_b.backward(
            scaled_loss_gradient(loss_b.probabilities, labels[idx].b, weight_b * inv_batch));
        net.trunk.backward(add(grad_trunk_a, grad_trunk_b));
      }

      if (config.learning_rate > 0.0) {
        for (std::size_t i = 0; i < params.size(); ++i) {
          sgd_step(*params[i], *grads[i], config.learning_rate);
        }
      }
    }

    const double mean_loss = loss_sum / static_cast<double>(samples.size());
    epoch_losses.push_back(mean_loss);
    if (on_epoch && !on_epoch({pair, epoch, mean_loss})) break;
  }
  return epoch_losses;
}

TrainLog MultiNet::train(std::span<const TrainingSample> samples, const TrainConfig& config,
                         std::optional<TaskPair> which, const EpochCallback& on_epoch) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("training dataset is empty");

  TrainLog log;
  if (!which || *which == TaskPair::crash_road) {
    log.network1_epoch_loss =
        train_network(net1_, TaskPair::crash_road, samples, config, on_epoch);
  }
  if (!which || *which == TaskPair::weather_time) {
    log.network2_epoch_loss =
        train_network(net2_, TaskPair::weather_time, samples, config, on_epoch);
  }
  return log;
}

void MultiNet::zero_parameters() {
  for (Tensor* p : parameters()) p->fill(0.0f);
}

std::vector<Tensor*> MultiNet::parameters() {
  std::vector<Tensor*> out = net1_.parameters();
  for (Tensor* p : net2_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Tensor*> MultiNet::parameters() const {
  std::vector<const Tensor*> out = net1_.parameters();
  for (const Tensor* p : net2_.parameters()) out.push_back(p);
  return out;
}

}  // namespace roadrisk
