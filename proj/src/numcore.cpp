#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "dfc/io.hpp"
#include "dfc/num/checkpoint.hpp"
#include "dfc/num/optim.hpp"
#include "dfc/num/schedule.hpp"

namespace dfc::num {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

void to_json(json& j, const AdamWConfig& c) {
  j = json{{"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"weight_decay", c.weight_decay}};
}

void from_json(const json& j, AdamWConfig& c) {
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
}

std::string_view to_string(ScheduleShape s) {
  return s == ScheduleShape::cosine_decay ? "cosine_decay" : "constant_after_warmup";
}

ScheduleShape schedule_shape_from_string(std::string_view s) {
  if (s == "cosine_decay") return ScheduleShape::cosine_decay;
  if (s == "constant_after_warmup") return ScheduleShape::constant_after_warmup;
  fail(ErrorKind::config, "unknown schedule shape: " + std::string(s));
}

std::size_t Schedule::warmup_steps() const {
  if (warmup_fraction <= 0.0) return 0;
  const auto w = static_cast<std::size_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
  return std::clamp<std::size_t>(w, 1, std::max<std::size_t>(total_steps, 1));
}

double Schedule::value(std::size_t step) const {
  if (step > total_steps) {
    fail(ErrorKind::usage, "schedule step " + std::to_string(step) + " outside [0, " +
                               std::to_string(total_steps) + "]");
  }
  const std::size_t w = warmup_steps();
  if (step < w) return base_value * static_cast<double>(step) / static_cast<double>(w);
  if (shape == ScheduleShape::constant_after_warmup || total_steps == w) return base_value;
  const double progress = static_cast<double>(step - w) / static_cast<double>(total_steps - w);
  return base_value * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::filesystem::path manifest_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".json";
  return p;
}

std::filesystem::path blob_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".bin";
  return p;
}

void save_checkpoint(const std::filesystem::path& stem, const ParameterSet<float>& params,
                     const json& model_config, const std::string& vocab_ref) {
  json entries = json::array();
  std::string blob;
  blob.reserve(params.scalar_count() * sizeof(float));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    entries.push_back({{"name", p.name},
                       {"shape", {p.value.rows(), p.value.cols()}},
                       {"offset", blob.size()}});
    blob.append(reinterpret_cast<const char*>(p.value.data()),
                static_cast<std::size_t>(p.value.size()) * sizeof(float));
  }
  json manifest{{"format", "dfc-checkpoint"},
                {"version", 1},
                {"dtype", "float32-le"},
                {"model", model_config},
                {"vocab", vocab_ref},
                {"blob", blob_path(stem).filename().string()},
                {"bytes", blob.size()},
                {"parameters", entries}};
  io::write_bytes_atomic(blob_path(stem), blob);
  io::write_json(manifest_path(stem), manifest);
}

json read_manifest(const std::filesystem::path& stem) {
  json m = io::read_json(manifest_path(stem));
  if (m.value("format", "") != "dfc-checkpoint") {
    fail(ErrorKind::data, manifest_path(stem).string() + " is not a checkpoint manifest");
  }
  return m;
}

json load_checkpoint(const std::filesystem::path& stem, ParameterSet<float>& params) {
  json m = read_manifest(stem);
  const std::string blob = io::read_text(blob_path(stem));
  const auto& entries = m.at("parameters");
  if (entries.size() != params.size()) {
    fail(ErrorKind::shape, "checkpoint has " + std::to_string(entries.size()) + " parameters, model has " +
                               std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& e = entries[i];
    const std::string name = e.at("name");
    const Shape shape{e.at("shape")[0].get<Index>(), e.at("shape")[1].get<Index>()};
    if (name != p.name) fail(ErrorKind::shape, "checkpoint parameter " + name + " where model expects " + p.name);
    if (shape != shape_of(p.value)) shape_mismatch(p.name.c_str(), shape, shape_of(p.value));
    const auto offset = e.at("offset").get<std::size_t>();
    const std::size_t bytes = static_cast<std::size_t>(p.value.size()) * sizeof(float);
    if (offset + bytes > blob.size()) fail(ErrorKind::data, "checkpoint blob truncated at " + p.name);
    std::memcpy(p.value.data(), blob.data() + offset, bytes);
  }
  return m;
}

}  // namespace dfc::num
