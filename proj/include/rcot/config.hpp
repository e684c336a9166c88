#pragma once

// Run configuration: one JSON document fully describes a run (task, data,
// model, cost, training), so any run can be reconstructed from the persisted
// copy of its config plus the seeds inside it.

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "rcot/cost.hpp"
#include "rcot/degrade.hpp"
#include "rcot/errors.hpp"
#include "rcot/nets.hpp"
#include "rcot/oracle.hpp"
#include "rcot/train.hpp"

namespace rcot {

enum class TaskKind { Denoise, Rain, Haze, DownUp, Quantile1d, Gaussian2d };

inline bool is_image_task(TaskKind t) {
  return t == TaskKind::Denoise || t == TaskKind::Rain || t == TaskKind::Haze ||
         t == TaskKind::DownUp;
}

struct DataConfig {
  int image_size = 32;
  int channels = 1;
  int train_count = 64;
  int eval_count = 8;
  std::uint64_t seed = 1;
  // point tasks
  int point_count = 256;
  double source_lo = 0.0, source_hi = 1.0;
  double target_lo = 2.0, target_hi = 3.0;
  GaussianParams source_gauss, target_gauss;
};

struct ModelConfig {
  NetArch arch = NetArch::Conv;
  int base_width = 8;
  ad::Activation act = ad::Activation::Tanh;
  bool use_trc = true;
  bool detach_residual = false;
  std::uint64_t seed = 7;
};

struct RunConfig {
  std::string run_name = "run";
  std::string out_dir = "runs";
  TaskKind task = TaskKind::Denoise;
  DataConfig data;
  DegradationSpec degradation;
  ModelConfig model;
  TrainConfig train;
};

namespace cfgdetail {

using nlohmann::json;

template <typename T>
T field(const json& j, const std::string& name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw usage_error("config field '" + name + "' has the wrong type");
  }
}

inline TaskKind parse_task(const std::string& s) {
  if (s == "denoise") return TaskKind::Denoise;
  if (s == "rain") return TaskKind::Rain;
  if (s == "haze") return TaskKind::Haze;
  if (s == "down_up") return TaskKind::DownUp;
  if (s == "quantile_1d") return TaskKind::Quantile1d;
  if (s == "gaussian_2d") return TaskKind::Gaussian2d;
  throw usage_error("config field 'task': unknown value '" + s +
                    "' (expected denoise|rain|haze|down_up|quantile_1d|gaussian_2d)");
}

inline std::string task_name(TaskKind t) {
  switch (t) {
    case TaskKind::Denoise: return "denoise";
    case TaskKind::Rain: return "rain";
    case TaskKind::Haze: return "haze";
    case TaskKind::DownUp: return "down_up";
    case TaskKind::Quantile1d: return "quantile_1d";
    case TaskKind::Gaussian2d: return "gaussian_2d";
  }
  return "?";
}

inline BaseCost parse_base_cost(const std::string& s) {
  if (s == "l2") return BaseCost::L2;
  if (s == "squared_l2") return BaseCost::SquaredL2;
  throw usage_error("config field 'cost.base': unknown value '" + s + "'");
}

inline PenaltyKind parse_penalty(const std::string& s) {
  if (s == "none") return PenaltyKind::None;
  if (s == "l1") return PenaltyKind::L1;
  if (s == "l2") return PenaltyKind::L2;
  if (s == "l05") return PenaltyKind::L05;
  throw usage_error("config field 'cost.penalty': unknown value '" + s + "'");
}

inline std::string penalty_name(PenaltyKind p) {
  switch (p) {
    case PenaltyKind::None: return "none";
    case PenaltyKind::L1: return "l1";
    case PenaltyKind::L2: return "l2";
    case PenaltyKind::L05: return "l05";
  }
  return "?";
}

inline ad::Activation parse_activation(const std::string& s) {
  if (s == "tanh") return ad::Activation::Tanh;
  if (s == "leaky_relu") return ad::Activation::LeakyRelu;
  throw usage_error("config field 'model.activation': unknown value '" + s + "'");
}

inline DegradationKind degradation_for(TaskKind t) {
  switch (t) {
    case TaskKind::Denoise: return DegradationKind::GaussianNoise;
    case TaskKind::Rain: return DegradationKind::RainStreaks;
    case TaskKind::Haze: return DegradationKind::Haze;
    case TaskKind::DownUp: return DegradationKind::DownUp;
    default: return DegradationKind::GaussianNoise;
  }
}

inline Matrix parse_cov(const json& j, const std::string& name, std::size_t d) {
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m.at(i, i) = 1.0;
  if (!j.contains(name)) return m;
  const auto& rows = j.at(name);
  if (!rows.is_array() || rows.size() != d)
    throw usage_error("config field '" + name + "' must be a " + std::to_string(d) +
                      "x" + std::to_string(d) + " matrix");
  for (std::size_t i = 0; i < d; ++i) {
    if (!rows[i].is_array() || rows[i].size() != d)
      throw usage_error("config field '" + name + "' row " + std::to_string(i) +
                        " has the wrong length");
    for (std::size_t k = 0; k < d; ++k) m.at(i, k) = rows[i][k].get<double>();
  }
  return m;
}

}  // namespace cfgdetail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using cfgdetail::field;
  RunConfig cfg;
  cfg.run_name = field<std::string>(j, "run_name", cfg.run_name);
  cfg.out_dir = field<std::string>(j, "out_dir", cfg.out_dir);
  cfg.task = cfgdetail::parse_task(field<std::string>(j, "task", "denoise"));

  const nlohmann::json data = j.contains("data") ? j.at("data") : nlohmann::json::object();
  cfg.data.image_size = field<int>(data, "image_size", cfg.data.image_size);
  cfg.data.channels = field<int>(data, "channels", cfg.data.channels);
  cfg.data.train_count = field<int>(data, "train_count", cfg.data.train_count);
  cfg.data.eval_count = field<int>(data, "eval_count", cfg.data.eval_count);
  cfg.data.seed = field<std::uint64_t>(data, "seed", cfg.data.seed);
  cfg.data.point_count = field<int>(data, "point_count", cfg.data.point_count);
  cfg.data.source_lo = field<double>(data, "source_lo", cfg.data.source_lo);
  cfg.data.source_hi = field<double>(data, "source_hi", cfg.data.source_hi);
  cfg.data.target_lo = field<double>(data, "target_lo", cfg.data.target_lo);
  cfg.data.target_hi = field<double>(data, "target_hi", cfg.data.target_hi);
  if (cfg.task == TaskKind::Gaussian2d) {
    cfg.data.source_gauss.mean =
        field<std::vector<double>>(data, "source_mean", {0.0, 0.0});
    cfg.data.target_gauss.mean =
        field<std::vector<double>>(data, "target_mean", {1.0, -0.5});
    const std::size_t d = cfg.data.source_gauss.mean.size();
    cfg.data.source_gauss.cov = cfgdetail::parse_cov(data, "source_cov", d);
    cfg.data.target_gauss.cov = cfgdetail::parse_cov(data, "target_cov", d);
  }

  cfg.degradation.kind = cfgdetail::degradation_for(cfg.task);
  cfg.degradation.sigma = field<double>(data, "sigma", cfg.degradation.sigma);
  cfg.degradation.streak_count =
      field<int>(data, "streak_count", cfg.degradation.streak_count);
  cfg.degradation.transmission =
      field<double>(data, "transmission", cfg.degradation.transmission);
  cfg.degradation.airlight = field<double>(data, "airlight", cfg.degradation.airlight);
  cfg.degradation.scale_factor =
      field<int>(data, "scale_factor", cfg.degradation.scale_factor);
  cfg.degradation.seed = field<std::uint64_t>(data, "degradation_seed", 2);

  const nlohmann::json model = j.contains("model") ? j.at("model") : nlohmann::json::object();
  cfg.model.arch = is_image_task(cfg.task) ? NetArch::Conv : NetArch::Mlp;
  if (model.contains("arch")) {
    const auto s = model.at("arch").get<std::string>();
    if (s == "conv") cfg.model.arch = NetArch::Conv;
    else if (s == "mlp") cfg.model.arch = NetArch::Mlp;
    else throw usage_error("config field 'model.arch': unknown value '" + s + "'");
  }
  cfg.model.base_width = field<int>(model, "base_width", cfg.model.base_width);
  cfg.model.act = cfgdetail::parse_activation(
      field<std::string>(model, "activation", "tanh"));
  cfg.model.use_trc = field<bool>(model, "use_trc", cfg.model.use_trc);
  cfg.model.detach_residual =
      field<bool>(model, "detach_residual", cfg.model.detach_residual);
  cfg.model.seed = field<std::uint64_t>(model, "seed", cfg.model.seed);

  const nlohmann::json cost = j.contains("cost") ? j.at("cost") : nlohmann::json::object();
  cfg.train.cost.base = cfgdetail::parse_base_cost(field<std::string>(cost, "base", "l2"));
  cfg.train.cost.penalty =
      cfgdetail::parse_penalty(field<std::string>(cost, "penalty", "none"));
  cfg.train.cost.weight = field<double>(cost, "weight", 1.0);

  const nlohmann::json train = j.contains("train") ? j.at("train") : nlohmann::json::object();
  cfg.train.lr_map = field<double>(train, "lr_map", cfg.train.lr_map);
  cfg.train.lr_potential = field<double>(train, "lr_potential", cfg.train.lr_potential);
  cfg.train.n_t = field<int>(train, "n_t", cfg.train.n_t);
  cfg.train.gamma = field<double>(train, "gamma", cfg.train.gamma);
  cfg.train.batch_size = field<int>(train, "batch_size", cfg.train.batch_size);
  cfg.train.epochs = field<int>(train, "epochs", cfg.train.epochs);
  cfg.train.paired_fraction =
      field<double>(train, "paired_fraction", cfg.train.paired_fraction);
  cfg.train.seed = field<std::uint64_t>(train, "seed", cfg.train.seed);
  cfg.train.rms_decay = field<double>(train, "rms_decay", cfg.train.rms_decay);
  cfg.train.rms_epsilon = field<double>(train, "rms_epsilon", cfg.train.rms_epsilon);
  cfg.train.lr_decay_epoch = field<int>(train, "lr_decay_epoch", cfg.train.lr_decay_epoch);
  cfg.train.lr_decay_factor =
      field<double>(train, "lr_decay_factor", cfg.train.lr_decay_factor);
  cfg.train.grad_clip = field<double>(train, "grad_clip", cfg.train.grad_clip);
  cfg.train.log_wallclock = field<bool>(train, "log_wallclock", cfg.train.log_wallclock);

  // surface invalid values now, with exit-code-2 semantics at the CLI
  cfg.train.validate();
  if (is_image_task(cfg.task)) {
    cfg.degradation.validate();
    if (cfg.data.image_size < 8 || cfg.data.image_size % 4 != 0)
      throw usage_error("config field 'data.image_size' must be >= 8 and divisible by 4");
    if (cfg.data.train_count < 1 || cfg.data.eval_count < 1)
      throw usage_error("config fields 'data.train_count'/'data.eval_count' must be >= 1");
  } else if (cfg.data.point_count < 2) {
    throw usage_error("config field 'data.point_count' must be >= 2");
  }
  if (cfg.model.base_width < 1)
    throw usage_error("config field 'model.base_width' must be >= 1");
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw usage_error(std::string("config parse error: ") + e.what());
  }
  return parse_run_config(j);
}

}  // namespace rcot
