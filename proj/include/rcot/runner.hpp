#pragma once

// Wiring between run configs and the library: dataset assembly per task,
// training execution with artifact emission, checkpoint-backed evaluation,
// the discrete-oracle verification harness, and the ablation studies.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "rcot/config.hpp"
#include "rcot/io.hpp"
#include "rcot/metrics.hpp"
#include "rcot/oracle.hpp"
#include "rcot/train.hpp"

namespace rcot {

struct PreparedRun {
  std::optional<DatasetHandle> train_data;
  std::vector<std::pair<ImageTensor, ImageTensor>> eval_pairs;
  NetSpec gen, enc, pot;
};

namespace rundetail {

inline void data_shape_for(const RunConfig& cfg, int& c, int& h, int& w) {
  if (is_image_task(cfg.task)) {
    c = cfg.data.channels;
    h = w = cfg.data.image_size;
  } else if (cfg.task == TaskKind::Quantile1d) {
    c = 1; h = 1; w = 1;
  } else {
    c = 1; h = 1;
    w = static_cast<int>(cfg.data.source_gauss.mean.size());
  }
}

inline nlohmann::json net_spec_to_json(const NetSpec& s) {
  return nlohmann::json{
      {"arch", s.arch == NetArch::Conv ? "conv" : "mlp"},
      {"channels", s.channels},
      {"height", s.height},
      {"width", s.width},
      {"base_width", s.base_width},
      {"cond_width", s.cond_width},
      {"activation", s.act == ad::Activation::Tanh ? "tanh" : "leaky_relu"}};
}

inline NetSpec net_spec_from_json(const nlohmann::json& j, NetKind kind) {
  NetSpec s;
  s.kind = kind;
  s.arch = j.at("arch").get<std::string>() == "conv" ? NetArch::Conv : NetArch::Mlp;
  s.channels = j.at("channels").get<int>();
  s.height = j.at("height").get<int>();
  s.width = j.at("width").get<int>();
  s.base_width = j.at("base_width").get<int>();
  s.cond_width = j.at("cond_width").get<int>();
  s.act = j.at("activation").get<std::string>() == "tanh" ? ad::Activation::Tanh
                                                          : ad::Activation::LeakyRelu;
  s.validate();
  return s;
}

}  // namespace rundetail

inline PreparedRun prepare_run(const RunConfig& cfg) {
  PreparedRun run;
  int c, h, w;
  rundetail::data_shape_for(cfg, c, h, w);
  run.gen = make_generator_spec(cfg.model.arch, c, h, w, cfg.model.base_width,
                                cfg.model.act);
  run.enc = make_encoder_spec(cfg.model.arch, c, h, w, cfg.model.base_width,
                              run.gen.cond_width, cfg.model.act);
  run.pot = make_potential_spec(cfg.model.arch, c, h, w, cfg.model.base_width,
                                cfg.model.act);

  if (is_image_task(cfg.task)) {
    const std::size_t total =
        static_cast<std::size_t>(cfg.data.train_count + cfg.data.eval_count);
    const auto clean = synth_clean_set(total, c, static_cast<std::size_t>(h),
                                       cfg.data.seed);
    const std::vector<ImageTensor> train_clean(clean.begin(),
                                               clean.begin() + cfg.data.train_count);
    const std::vector<ImageTensor> eval_clean(clean.begin() + cfg.data.train_count,
                                              clean.end());
    run.train_data = build_dataset(train_clean, cfg.degradation,
                                   cfg.train.paired_fraction, cfg.data.seed + 1000);
    DegradationSpec eval_spec = cfg.degradation;
    eval_spec.seed = cfg.degradation.seed + 9999;
    run.eval_pairs =
        paired_view(build_dataset(eval_clean, eval_spec, 1.0, cfg.data.seed + 2000));
  } else if (cfg.task == TaskKind::Quantile1d) {
    run.train_data = make_uniform_1d_dataset(
        static_cast<std::size_t>(cfg.data.point_count), cfg.data.source_lo,
        cfg.data.source_hi, cfg.data.target_lo, cfg.data.target_hi, cfg.data.seed);
  } else {
    run.train_data = make_gaussian_dataset(
        static_cast<std::size_t>(cfg.data.point_count), cfg.data.source_gauss,
        cfg.data.target_gauss, cfg.data.seed);
  }
  return run;
}

inline TrainState make_train_state(const PreparedRun& run, const RunConfig& cfg) {
  RcotMap map(run.gen, run.enc, cfg.model.seed, cfg.model.use_trc,
              cfg.model.detach_residual);
  return TrainState(std::move(map), run.pot, cfg.train);
}

// ------------------------------------------------------------- reports ----

inline std::vector<std::pair<std::string, double>> image_task_report(
    TrainState& st, const std::vector<std::pair<ImageTensor, ImageTensor>>& pairs) {
  double psnr_restored = 0.0, ssim_restored = 0.0, psnr_degraded = 0.0,
         ssim_degraded = 0.0, gini = 0.0, flatness = 0.0;
  const auto n = static_cast<double>(pairs.size());
  const bool ssim_ok = !pairs.empty() && pairs[0].first.height() >= 8 &&
                       pairs[0].first.width() >= 8;
  for (const auto& [y, x] : pairs) {
    const ImageTensor ty = st.map.apply(y);
    psnr_restored += psnr(ty, x, 1.0) / n;
    psnr_degraded += psnr(y, x, 1.0) / n;
    if (ssim_ok) {
      ssim_restored += ssim(ty, x) / n;
      ssim_degraded += ssim(y, x) / n;
    }
    const auto [g, fl] = spectrum_stats(sub(y, ty));
    gini += g / n;
    flatness += fl / n;
  }
  return {{"psnr_restored", psnr_restored},
          {"ssim_restored", ssim_restored},
          {"psnr_degraded", psnr_degraded},
          {"ssim_degraded", ssim_degraded},
          {"spectrum_gini_residual", gini},
          {"spectrum_flatness_residual", flatness}};
}

inline std::vector<std::pair<std::string, double>> quantile_task_report(
    TrainState& st, const RunConfig& cfg) {
  // closed-form OT map between the two uniforms (monotone rearrangement)
  const double src_span = cfg.data.source_hi - cfg.data.source_lo;
  const double tgt_span = cfg.data.target_hi - cfg.data.target_lo;
  auto oracle = [&](double x) {
    return cfg.data.target_lo + (x - cfg.data.source_lo) * tgt_span / src_span;
  };
  double max_err = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double x =
        cfg.data.source_lo + (cfg.data.source_hi - cfg.data.source_lo) * i / 40.0;
    const ImageTensor y(1, 1, 1, {x});
    max_err = std::max(max_err, std::abs(st.map.apply(y).at(0, 0, 0) - oracle(x)));
  }
  std::mt19937_64 rng(cfg.data.seed + 31);
  std::uniform_real_distribution<double> u(cfg.data.source_lo, cfg.data.source_hi);
  double learned_cost = 0.0, oracle_cost = 0.0;
  const int held_out = 512;
  for (int i = 0; i < held_out; ++i) {
    const double x = u(rng);
    const ImageTensor y(1, 1, 1, {x});
    const double ty = st.map.apply(y).at(0, 0, 0);
    learned_cost += (ty - x) * (ty - x) / held_out;
    oracle_cost += (oracle(x) - x) * (oracle(x) - x) / held_out;
  }
  return {{"map_max_grid_error", max_err},
          {"transport_cost_learned", learned_cost},
          {"transport_cost_oracle", oracle_cost},
          {"transport_cost_rel_gap",
           std::abs(learned_cost - oracle_cost) / std::max(1e-12, oracle_cost)}};
}

inline std::vector<std::pair<std::string, double>> gaussian_task_report(
    TrainState& st, const RunConfig& cfg) {
  const AffineMap oracle =
      gaussian_map_affine(cfg.data.source_gauss, cfg.data.target_gauss);
  std::mt19937_64 rng(cfg.data.seed + 77);
  const auto held_out = sample_gaussian(cfg.data.source_gauss, 512, rng);
  const std::size_t d = cfg.data.source_gauss.mean.size();
  double mean_err = 0.0, learned_cost = 0.0, oracle_cost = 0.0;
  for (const auto& xv : held_out) {
    const ImageTensor y(1, 1, d, std::vector<double>(xv));
    const ImageTensor ty = st.map.apply(y);
    const auto tstar = oracle(xv);
    double err = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double delta = ty.at(0, 0, k) - tstar[k];
      err += delta * delta;
      learned_cost += (ty.at(0, 0, k) - xv[k]) * (ty.at(0, 0, k) - xv[k]);
      oracle_cost += (tstar[k] - xv[k]) * (tstar[k] - xv[k]);
    }
    mean_err += std::sqrt(err);
  }
  const auto n = static_cast<double>(held_out.size());
  return {{"map_mean_l2_error", mean_err / n},
          {"transport_cost_learned", learned_cost / n},
          {"transport_cost_oracle", oracle_cost / n},
          {"transport_cost_rel_gap",
           std::abs(learned_cost - oracle_cost) / std::max(1e-12, oracle_cost)}};
}

// ------------------------------------------------------------ training ----

struct TrainRunResult {
  FitResult fit;
  std::vector<std::pair<std::string, double>> report;
  std::filesystem::path run_dir;
};

inline std::string checkpoint_spec_json(const RunConfig& cfg, const PreparedRun& run) {
  nlohmann::json j{{"format", 1},
                   {"task", cfgdetail::task_name(cfg.task)},
                   {"use_trc", cfg.model.use_trc},
                   {"detach_residual", cfg.model.detach_residual},
                   {"gen", rundetail::net_spec_to_json(run.gen)},
                   {"enc", rundetail::net_spec_to_json(run.enc)},
                   {"pot", rundetail::net_spec_to_json(run.pot)}};
  return j.dump();
}

inline void save_state_checkpoint(const std::string& path, const RunConfig& cfg,
                                  const PreparedRun& run, TrainState& st) {
  io::save_checkpoint(path, checkpoint_spec_json(cfg, run),
                      {{"theta1", &st.map.theta1()},
                       {"theta2", &st.map.theta2()},
                       {"fusion", &st.map.fusion()},
                       {"potential", &st.potential}});
}

// Runs the full training workflow and writes config.json, history.csv,
// report.csv and checkpoint.rcot into <out_dir>/<run_name>/.
inline TrainRunResult execute_training(const RunConfig& cfg,
                                       const nlohmann::json& original_config) {
  PreparedRun run = prepare_run(cfg);
  TrainState st = make_train_state(run, cfg);

  const std::filesystem::path run_dir =
      std::filesystem::path(cfg.out_dir) / cfg.run_name;
  std::filesystem::create_directories(run_dir);
  {
    std::ofstream f(run_dir / "config.json");
    f << original_config.dump(2) << '\n';
  }

  FitOptions opts;
  opts.eval_pairs = run.eval_pairs;
  TrainRunResult out;
  out.fit = fit(st, *run.train_data, opts);
  out.run_dir = run_dir;

  io::write_history_csv((run_dir / "history.csv").string(), out.fit.history);
  save_state_checkpoint((run_dir / "checkpoint.rcot").string(), cfg, run, st);

  if (is_image_task(cfg.task)) out.report = image_task_report(st, run.eval_pairs);
  else if (cfg.task == TaskKind::Quantile1d) out.report = quantile_task_report(st, cfg);
  else out.report = gaussian_task_report(st, cfg);
  out.report.emplace_back("diverged", out.fit.diverged ? 1.0 : 0.0);
  out.report.emplace_back("grad_clip_events", static_cast<double>(st.clip_events));
  io::write_report_csv((run_dir / "report.csv").string(), out.report);
  return out;
}

// ----------------------------------------------------------- evaluation ----

// Restores a TrainState from a checkpoint. The stores must structurally match
// the specs recorded in the file.
inline TrainState restore_state(const io::Checkpoint& ck, TrainConfig train_cfg) {
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(ck.spec_json);
  } catch (const nlohmann::json::exception&) {
    throw io_error("checkpoint spec block is not valid JSON");
  }
  const NetSpec gen = rundetail::net_spec_from_json(spec.at("gen"), NetKind::Generator);
  const NetSpec enc = rundetail::net_spec_from_json(spec.at("enc"), NetKind::Encoder);
  const NetSpec pot = rundetail::net_spec_from_json(spec.at("pot"), NetKind::Potential);
  RcotMap map(gen, enc, 0, spec.at("use_trc").get<bool>(),
              spec.at("detach_residual").get<bool>());
  TrainState st(std::move(map), pot, train_cfg);

  auto install = [&](const std::string& name, ParamStore& dst) {
    for (const auto& [sname, store] : ck.stores) {
      if (sname != name) continue;
      if (store.size() != dst.size())
        throw io_error("checkpoint store '" + name + "' does not match the net spec");
      for (std::size_t e = 0; e < store.size(); ++e) {
        if (store.entry(e).name != dst.entry(e).name ||
            store.entry(e).shape != dst.entry(e).shape)
          throw io_error("checkpoint spec mismatch in '" + name + "." +
                         store.entry(e).name + "'");
        dst.entry(e).value = store.entry(e).value;
      }
      return;
    }
    throw io_error("checkpoint is missing store '" + name + "'");
  };
  install("theta1", st.map.theta1());
  if (st.map.use_trc()) {
    install("theta2", st.map.theta2());
    install("fusion", st.map.fusion());
  }
  install("potential", st.potential);
  return st;
}

struct EvalRunResult {
  std::vector<std::pair<std::string, double>> report;
  std::filesystem::path metrics_csv, grid_png;
};

// Evaluates a checkpoint on a freshly assembled dataset; writes the metric
// report and a degraded/restored/target/residual grid.
inline EvalRunResult execute_eval(const std::string& checkpoint_path,
                                  const RunConfig& cfg) {
  const io::Checkpoint ck = io::load_checkpoint(checkpoint_path);
  TrainState st = restore_state(ck, cfg.train);
  int c, h, w;
  rundetail::data_shape_for(cfg, c, h, w);
  if (st.map.gen_spec().channels != c || st.map.gen_spec().height != h ||
      st.map.gen_spec().width != w)
    throw usage_error("checkpoint data shape " +
                      std::to_string(st.map.gen_spec().channels) + "x" +
                      std::to_string(st.map.gen_spec().height) + "x" +
                      std::to_string(st.map.gen_spec().width) +
                      " does not match the dataset config " + std::to_string(c) +
                      "x" + std::to_string(h) + "x" + std::to_string(w));

  PreparedRun run = prepare_run(cfg);
  EvalRunResult out;
  const std::filesystem::path dir =
      std::filesystem::path(cfg.out_dir) / (cfg.run_name + "_eval");
  std::filesystem::create_directories(dir);
  out.metrics_csv = dir / "metrics.csv";
  out.grid_png = dir / "grid.png";

  if (is_image_task(cfg.task)) {
    out.report = image_task_report(st, run.eval_pairs);
    std::vector<std::array<ImageTensor, 4>> rows;
    const std::size_t shown =
        std::min<std::size_t>(run.eval_pairs.size(),
                              static_cast<std::size_t>(cfg.train.batch_size));
    for (std::size_t i = 0; i < shown; ++i) {
      const auto& [y, x] = run.eval_pairs[i];
      const ImageTensor ty = st.map.apply(y);
      ImageTensor residual = sub(y, ty);
      std::vector<double> shifted(residual.data().begin(), residual.data().end());
      for (double& v : shifted) v += 0.5;
      rows.push_back({y, ty, x,
                      ImageTensor(residual.channels(), residual.height(),
                                  residual.width(), std::move(shifted))});
    }
    io::write_png(out.grid_png.string(), io::compose_grid(rows));
  } else if (cfg.task == TaskKind::Quantile1d) {
    out.report = quantile_task_report(st, cfg);
  } else {
    out.report = gaussian_task_report(st, cfg);
  }
  io::write_report_csv(out.metrics_csv.string(), out.report);
  return out;
}

// ------------------------------------------------------ oracle harness ----

// Cross-checks the assignment solver against exhaustive enumeration, the
// duals against the dual gap, and the c-transform against a double loop.
// Prints one table row per check; returns false on the first mismatch (the
// failing instance is serialized for replay).
inline bool oracle_verify(std::size_t size, int trials, std::uint64_t seed,
                          bool inject_fault, std::ostream& os,
                          const std::string& replay_path = "oracle_failure.json") {
  if (size < 1 || size > 8) throw usage_error("oracle-verify: size must be in [1, 8]");
  if (trials < 1) throw usage_error("oracle-verify: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int solver_ok = 0, gap_ok = 0, ctrans_ok = 0;
  bool all_ok = true;

  auto dump_failure = [&](const Matrix& m, const std::string& what) {
    nlohmann::json j{{"check", what}, {"size", m.rows}, {"cost", m.v}, {"seed", seed}};
    std::ofstream f(replay_path);
    f << j.dump(2) << '\n';
    os << "FAIL " << what << " (instance written to " << replay_path << ")\n";
    all_ok = false;
  };

  for (int trial = 0; trial < trials; ++trial) {
    Matrix m(size, size);
    for (double& v : m.v) v = u(rng);

    DiscreteOTSolution fast = solve_assignment(m);
    const DiscreteOTSolution brute = enumerate_assignment(m);
    if (inject_fault && trial == 0) {
      fast.phi[0] += 0.5;  // deliberate dual corruption: the harness must flag it
      fast.phi_c = c_transform_discrete(fast.phi, m);
    }
    if (std::abs(fast.total_cost - brute.total_cost) >
        1e-12 * std::max(1.0, std::abs(brute.total_cost))) {
      dump_failure(m, "solver-vs-enumeration");
      break;
    }
    ++solver_ok;

    const double gap = dual_gap(fast, m);
    if (gap < -1e-9 || gap > 1e-7) {
      dump_failure(m, "dual-gap");
      break;
    }
    ++gap_ok;

    std::vector<double> phi(size);
    for (double& v : phi) v = u(rng) - 0.5;
    const auto ct = c_transform_discrete(phi, m);
    bool ct_match = true;
    for (std::size_t i = 0; i < size && ct_match; ++i) {
      double mn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < size; ++j) mn = std::min(mn, m.at(i, j) - phi[j]);
      ct_match = ct[i] == mn;
    }
    if (!ct_match) {
      dump_failure(m, "c-transform");
      break;
    }
    ++ctrans_ok;
  }

  os << "check                    pass/total\n";
  os << "solver-vs-enumeration    " << solver_ok << "/" << trials << "\n";
  os << "dual-gap<=1e-7           " << gap_ok << "/" << trials << "\n";
  os << "c-transform-bruteforce   " << ctrans_ok << "/" << trials << "\n";
  os << (all_ok && solver_ok == trials ? "RESULT pass\n" : "RESULT fail\n");
  return all_ok && solver_ok == trials && gap_ok == trials && ctrans_ok == trials;
}

// ------------------------------------------------------------ ablation ----

enum class AblationStudy { Trc, Loss, Regularizer, Gamma };

inline AblationStudy parse_study(const std::string& s) {
  if (s == "trc") return AblationStudy::Trc;
  if (s == "loss") return AblationStudy::Loss;
  if (s == "regularizer") return AblationStudy::Regularizer;
  if (s == "gamma") return AblationStudy::Gamma;
  throw usage_error("ablate: unknown study '" + s +
                    "' (expected trc|loss|regularizer|gamma)");
}

struct AblationResult {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, double>> bars;   // bar chart payload
  std::vector<std::pair<double, double>> curve;       // sweep payload (x, psnr)
  bool diverged = false;
};

namespace rundetail {

struct VariantScore {
  double psnr = 0.0, ssim = 0.0;
  bool diverged = false;
};

inline VariantScore run_variant(const RunConfig& cfg) {
  PreparedRun run = prepare_run(cfg);
  TrainState st = make_train_state(run, cfg);
  FitOptions opts;
  opts.eval_pairs = run.eval_pairs;
  const FitResult fr = fit(st, *run.train_data, opts);
  VariantScore score;
  score.diverged = fr.diverged;
  const auto report = image_task_report(st, run.eval_pairs);
  for (const auto& [k, v] : report) {
    if (k == "psnr_restored") score.psnr = v;
    if (k == "ssim_restored") score.ssim = v;
  }
  return score;
}

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace rundetail

// Paired runs with and without the residual-conditioning module, averaged
// over `n_seeds` model/train seeds.
inline AblationResult ablate_trc(const RunConfig& base, int n_seeds = 3) {
  if (!is_image_task(base.task))
    throw usage_error("ablate trc: requires an image task");
  AblationResult out;
  out.header = {"variant", "seed", "psnr", "ssim"};
  double mean_with = 0.0, mean_without = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    for (const bool use_trc : {true, false}) {
      RunConfig cfg = base;
      cfg.model.use_trc = use_trc;
      cfg.model.seed = base.model.seed + static_cast<std::uint64_t>(s);
      cfg.train.seed = base.train.seed + static_cast<std::uint64_t>(s);
      const auto score = rundetail::run_variant(cfg);
      out.diverged |= score.diverged;
      (use_trc ? mean_with : mean_without) += score.psnr / n_seeds;
      out.rows.push_back({use_trc ? "with_trc" : "without_trc", std::to_string(s),
                          rundetail::fmt3(score.psnr), rundetail::fmt3(score.ssim)});
    }
  }
  out.bars = {{"with_trc", mean_with}, {"without_trc", mean_without}};
  return out;
}

// Partially paired objective against the unpaired objective on the same seeds.
inline AblationResult ablate_loss(const RunConfig& base, int n_seeds = 3) {
  if (!is_image_task(base.task))
    throw usage_error("ablate loss: requires an image task");
  AblationResult out;
  out.header = {"variant", "seed", "psnr", "ssim"};
  double mean_paired = 0.0, mean_unpaired = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    for (const bool paired : {true, false}) {
      RunConfig cfg = base;
      if (!paired) {
        cfg.train.paired_fraction = 0.0;
        cfg.train.gamma = 0.0;
      }
      cfg.model.seed = base.model.seed + static_cast<std::uint64_t>(s);
      cfg.train.seed = base.train.seed + static_cast<std::uint64_t>(s);
      const auto score = rundetail::run_variant(cfg);
      out.diverged |= score.diverged;
      (paired ? mean_paired : mean_unpaired) += score.psnr / n_seeds;
      out.rows.push_back({paired ? "frot_plus_l2" : "frot_only", std::to_string(s),
                          rundetail::fmt3(score.psnr), rundetail::fmt3(score.ssim)});
    }
  }
  out.bars = {{"frot_plus_l2", mean_paired}, {"frot_only", mean_unpaired}};
  return out;
}

// Fourier-penalty kinds compared at the config's weight.
inline AblationResult ablate_regularizer(const RunConfig& base) {
  if (!is_image_task(base.task))
    throw usage_error("ablate regularizer: requires an image task");
  AblationResult out;
  out.header = {"regularizer", "psnr", "ssim"};
  for (const PenaltyKind kind :
       {PenaltyKind::L05, PenaltyKind::L2, PenaltyKind::L1}) {
    RunConfig cfg = base;
    cfg.train.cost.penalty = kind;
    const auto score = rundetail::run_variant(cfg);
    out.diverged |= score.diverged;
    out.rows.push_back({cfgdetail::penalty_name(kind), rundetail::fmt3(score.psnr),
                        rundetail::fmt3(score.ssim)});
    out.bars.emplace_back(cfgdetail::penalty_name(kind), score.psnr);
  }
  return out;
}

// Log-grid sweep of the supervision weight; emits the sensitivity curve.
inline AblationResult ablate_gamma(const RunConfig& base,
                                   const std::vector<double>& gammas = {1e2, 1e3,
                                                                        1e4, 1e5}) {
  if (!is_image_task(base.task))
    throw usage_error("ablate gamma: requires an image task");
  if (base.train.paired_fraction <= 0.0)
    throw usage_error("ablate gamma: config must expose paired samples");
  AblationResult out;
  out.header = {"gamma", "psnr", "ssim"};
  for (const double g : gammas) {
    RunConfig cfg = base;
    cfg.train.gamma = g;
    const auto score = rundetail::run_variant(cfg);
    out.diverged |= score.diverged;
    char gbuf[32];
    std::snprintf(gbuf, sizeof gbuf, "%g", g);
    out.rows.push_back({gbuf, rundetail::fmt3(score.psnr), rundetail::fmt3(score.ssim)});
    out.curve.emplace_back(std::log10(g), score.psnr);
  }
  return out;
}

inline AblationResult run_ablation(AblationStudy study, const RunConfig& cfg) {
  switch (study) {
    case AblationStudy::Trc: return ablate_trc(cfg);
    case AblationStudy::Loss: return ablate_loss(cfg);
    case AblationStudy::Regularizer: return ablate_regularizer(cfg);
    case AblationStudy::Gamma: return ablate_gamma(cfg);
  }
  throw usage_error("ablate: unreachable study");
}

}  // namespace rcot
