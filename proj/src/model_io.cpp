#include "roadrisk/model_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace roadrisk {

namespace {

using nlohmann::json;

json spec_to_json(const LayerSpec& spec) {
  json j;
  j["kind"] = std::string(to_string(spec.kind));
  if (spec.kind == LayerKind::dense) {
    j["in"] = spec.in_features;
    j["out"] = spec.out_features;
  } else if (spec.kind == LayerKind::conv2d) {
    j["kernel"] = spec.kernel;
    j["in_channels"] = spec.in_channels;
    j["out_channels"] = spec.out_channels;
  }
  return j;
}

LayerSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw std::runtime_error("model header: malformed layer spec");
  }
  const auto kind = parse_layer_kind(j["kind"].get<std::string>());
  if (!kind) {
    throw std::runtime_error("model header: unknown layer kind '" +
                             j["kind"].get<std::string>() + "'");
  }
  LayerSpec spec;
  spec.kind = *kind;
  try {
    if (*kind == LayerKind::dense) {
      spec.in_features = j.at("in").get<std::size_t>();
      spec.out_features = j.at("out").get<std::size_t>();
    } else if (*kind == LayerKind::conv2d) {
      spec.kernel = j.at("kernel").get<std::size_t>();
      spec.in_channels = j.at("in_channels").get<std::size_t>();
      spec.out_channels = j.at("out_channels").get<std::size_t>();
    }
  } catch (const json::exception&) {
    throw std::runtime_error("model header: layer spec is missing shape fields");
  }
  return spec;
}

json specs_to_json(const Sequential& seq) {
  json arr = json::array();
  for (const LayerSpec& spec : seq.specs()) arr.push_back(spec_to_json(spec));
  return arr;
}

std::vector<LayerSpec> specs_from_json(const json& arr) {
  if (!arr.is_array()) throw std::runtime_error("model header: layer list must be an array");
  std::vector<LayerSpec> out;
  out.reserve(arr.size());
  for (const json& j : arr) out.push_back(spec_from_json(j));
  return out;
}

json vocabulary_json(Task task) {
  json arr = json::array();
  for (std::string_view name : class_names(task)) arr.push_back(std::string(name));
  return arr;
}

void check_vocabulary(const json& header, const char* key, Task task) {
  const json& vocab = header.at("vocabularies");
  if (!vocab.contains(key)) {
    throw std::runtime_error(std::string("model header: missing vocabulary '") + key + "'");
  }
  if (vocab[key] != vocabulary_json(task)) {
    throw std::runtime_error(std::string("model header: vocabulary '") + key +
                             "' does not match this build's class list");
  }
}

void write_f32_le(std::ostream& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const char bytes[4] = {
      static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
      static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
  out.write(bytes, 4);
}

float read_f32_le(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (in.gcount() != 4) throw std::runtime_error("model file is truncated mid-tensor");
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                             (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_model(const MultiNet& model, const std::filesystem::path& path) {
  json header;
  header["profile"] = std::string(to_string(model.profile()));
  header["seed"] = model.seed();
  header["input_sides"] = {{"network1", model.network1().input_h},
                           {"network2", model.network2().input_h}};
  header["networks"] = {
      {"network1",
       {{"trunk", specs_to_json(model.network1().trunk)},
        {"branch_a", specs_to_json(model.network1().branch_a)},
        {"branch_b", specs_to_json(model.network1().branch_b)}}},
      {"network2",
       {{"trunk", specs_to_json(model.network2().trunk)},
        {"branch_a", specs_to_json(model.network2().branch_a)},
        {"branch_b", specs_to_json(model.network2().branch_b)}}}};
  header["vocabularies"] = {{"crash_likelihood", vocabulary_json(Task::crash_likelihood)},
                            {"road_function", vocabulary_json(Task::road_function)},
                            {"weather", vocabulary_json(Task::weather)},
                            {"time_of_day", vocabulary_json(Task::time_of_day)}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open model file for writing: " + path.string());
  }
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << header.dump() << '\n';
  for (const Tensor* param : model.parameters()) {
    for (float v : param->values()) write_f32_le(out, v);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing model file: " + path.string());
}

MultiNet load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());

  std::string magic_line;
  if (!std::getline(in, magic_line)) throw std::runtime_error("model file is empty");
  {
    std::istringstream magic(magic_line);
    std::string word;
    int version = -1;
    if (!(magic >> word >> version) || word != kModelMagic) {
      throw std::runtime_error("not a model file (bad magic line)");
    }
    if (version != kModelVersion) {
      throw std::runtime_error("unsupported model format version " + std::to_string(version));
    }
  }

  std::string header_line;
  if (!std::getline(in, header_line)) throw std::runtime_error("model file has no header");
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model header is not valid JSON: ") + e.what());
  }

  try {
    const auto profile = parse_scale_profile(header.at("profile").get<std::string>());
    if (!profile) throw std::runtime_error("model header: unknown profile");
    const auto seed = header.at("seed").get<std::uint32_t>();
    const auto input1 = header.at("input_sides").at("network1").get<std::size_t>();
    const auto input2 = header.at("input_sides").at("network2").get<std::size_t>();

    check_vocabulary(header, "crash_likelihood", Task::crash_likelihood);
    check_vocabulary(header, "road_function", Task::road_function);
    check_vocabulary(header, "weather", Task::weather);
    check_vocabulary(header, "time_of_day", Task::time_of_day);

    const json& nets = header.at("networks");
    std::vector<std::vector<LayerSpec>> n1{specs_from_json(nets.at("network1").at("trunk")),
                                           specs_from_json(nets.at("network1").at("branch_a")),
                                           specs_from_json(nets.at("network1").at("branch_b"))};
    std::vector<std::vector<LayerSpec>> n2{specs_from_json(nets.at("network2").at("trunk")),
                                           specs_from_json(nets.at("network2").at("branch_a")),
                                           specs_from_json(nets.at("network2").at("branch_b"))};

    MultiNet model = MultiNet::from_specs(*profile, seed, n1, n2, input1, input2);

    // The final dense layer of each branch must line up with the (already
    // verified) vocabulary sizes.
    const Task tasks[4] = {Task::crash_likelihood, Task::road_function, Task::weather,
                           Task::time_of_day};
    const std::vector<LayerSpec>* branches[4] = {&n1[1], &n1[2], &n2[1], &n2[2]};
    for (int i = 0; i < 4; ++i) {
      if (branches[i]->empty() || branches[i]->back().kind != LayerKind::dense ||
          branches[i]->back().out_features != class_count(tasks[i])) {
        throw std::runtime_error(
            "model header: branch output size disagrees with its vocabulary");
      }
    }

    for (Tensor* param : model.parameters()) {
      for (float& v : param->values()) v = read_f32_le(in);
    }
    if (in.peek() != std::ifstream::traits_type::eof()) {
      throw std::runtime_error("model file has trailing bytes after the last tensor");
    }
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model header is malformed: ") + e.what());
  }
}

}  // namespace roadrisk
