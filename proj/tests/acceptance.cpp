// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Bounds and tolerances are pinned in the code, not flags.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "prefall/csv.hpp"
#include "prefall/harness.hpp"
#include "prefall/reports.hpp"
#include "prefall/synth.hpp"

using namespace prefall;
namespace ts = testing_support;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<FeatureSequence> synth_features(int n_each, std::uint64_t base_seed,
                                            double onset_lead_s) {
  CorpusSpec corpus;
  corpus.n_fall = n_each;
  corpus.n_nonfall = n_each;
  corpus.base_seed = base_seed;
  corpus.base.deviation_amplitude_deg = 40.0;
  corpus.base.noise_stddev_deg = 2.0;
  corpus.base.onset_lead_s = onset_lead_s;
  auto sequences = gen_corpus_sequences(corpus);
  std::vector<FeatureSequence> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences)
    out.push_back(sequence_features(seq, JointMap::body25(), 0.0));
  return out;
}

double pipeline_macro_f1(const std::vector<FeatureSequence>& sequences, double lead_s,
                         int k, std::uint64_t seed) {
  WindowingOptions wopt{lead_s, k, seed};
  auto windows = build_windows(sequences, wopt);
  auto split = collate_split(std::move(windows), 0.8, seed);
  NetConfig cfg;
  cfg.window_frames = k;
  TrainOptions opt;
  opt.seed = seed;
  opt.epochs = 100;
  TrainRun run = train(split, cfg, opt);
  return evaluate(cfg, run.params, split.test).macro_f1;
}

// --- criterion 1: BPTT gradients vs central finite differences -----------

bool criterion_gradients(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng meta(0xACCE97);
  double worst = 0.0;
  const int instances = 20;
  for (int inst = 0; inst < instances; ++inst) {
    NetConfig cfg;
    cfg.hidden_units = 2 + static_cast<int>(meta.next_index(5));   // 2..6
    cfg.window_frames = 2 + static_cast<int>(meta.next_index(5));  // 2..6
    LstmParams p = init_params(cfg, meta.next_u64());
    auto batch = ts::random_batch(cfg, 2 + meta.next_index(3), meta.next_u64());

    auto analytic = ts::flatten_blocks(backward(cfg, p, batch));
    auto numeric = ts::finite_difference_gradient(cfg, p, batch, 1e-5);
    if (analytic.size() != numeric.size()) {
      detail = "gradient size mismatch";
      return false;
    }
    for (std::size_t i = 0; i < analytic.size(); ++i)
      worst = std::max(worst, ts::gradient_rel_error(analytic[i], numeric[i]));
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << instances << " instances, worst rel err " << worst << ", " << elapsed << " s";
  detail = d.str();
  return worst < 1e-4 && elapsed < 10.0;
}

// --- criterion 2: feature oracle and geometric properties ----------------

bool criterion_features(std::string& detail) {
  auto lines = csv::read_lines((ts::data_dir() / "feature_test_vectors.csv").string());
  int cases = 0;
  double worst = 0.0;
  for (const auto& line : lines) {
    if (line.empty() || line[0] == '#') continue;
    auto f = csv::split(line);
    if (f.size() != 6) {
      detail = "bad vector row";
      return false;
    }
    SevenJointFrame sjf;
    sjf.valid.fill(true);
    sjf.head = {csv::parse_double(f[0], "hx"), csv::parse_double(f[1], "hy"), 1.0};
    for (auto& j : sjf.joints)
      j = {csv::parse_double(f[2], "jx"), csv::parse_double(f[3], "jy"), 1.0};
    auto fv = frame_features(sjf);
    const bool expect_valid = f[5] == "1";
    for (int j = 0; j < 6; ++j) {
      if (fv.valid[static_cast<std::size_t>(j)] != expect_valid) {
        detail = "validity mismatch on vector case";
        return false;
      }
      if (expect_valid)
        worst = std::max(worst,
                         std::abs(fv.theta_deg(j) - csv::parse_double(f[4], "theta")));
    }
    ++cases;
  }
  if (cases < 12) {
    detail = "fewer than 12 vector cases";
    return false;
  }
  if (worst >= 1e-9) {
    detail = "vector worst err " + std::to_string(worst);
    return false;
  }

  Rng rng(0xFEA7);
  double worst_prop = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    SevenJointFrame sjf;
    sjf.valid.fill(true);
    sjf.head = {rng.next_uniform(-200, 200), rng.next_uniform(-200, 200), 1.0};
    for (auto& j : sjf.joints)
      j = {rng.next_uniform(-200, 200), rng.next_uniform(-200, 200), 1.0};
    auto base = frame_features(sjf);

    const double tx = rng.next_uniform(-300, 300), ty = rng.next_uniform(-300, 300);
    const double s = rng.next_uniform(0.2, 5.0);
    SevenJointFrame translated = sjf, scaled = sjf, mirrored = sjf;
    translated.head.x += tx;
    translated.head.y += ty;
    for (auto& j : translated.joints) {
      j.x += tx;
      j.y += ty;
    }
    scaled.head.x *= s;
    scaled.head.y *= s;
    for (auto& j : scaled.joints) {
      j.x *= s;
      j.y *= s;
    }
    for (auto& j : mirrored.joints) j.x = 2.0 * sjf.head.x - j.x;

    auto t = frame_features(translated);
    auto sc = frame_features(scaled);
    auto mi = frame_features(mirrored);
    for (int j = 0; j < 6; ++j) {
      if (!base.valid[static_cast<std::size_t>(j)]) continue;
      worst_prop = std::max({worst_prop, std::abs(t.theta_deg(j) - base.theta_deg(j)),
                             std::abs(sc.theta_deg(j) - base.theta_deg(j)),
                             std::abs(mi.theta_deg(j) + base.theta_deg(j))});
    }
  }
  std::ostringstream d;
  d << cases << " vector cases (worst " << worst << " deg), 1000 property frames (worst "
    << worst_prop << " deg)";
  detail = d.str();
  return worst_prop < 1e-9;
}

// --- criterion 3: synthetic separability ---------------------------------

bool criterion_separability(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  auto sequences = synth_features(30, 42, 1.0);
  int passing = 0;
  std::ostringstream d;
  d << "macro F1:";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double f1 = pipeline_macro_f1(sequences, 0.3, 15, seed);
    d << " " << csv::format_fixed(f1, 3);
    if (f1 >= 0.95) ++passing;
  }
  const double elapsed = seconds_since(t0);
  d << "; " << passing << "/5 seeds >= 0.95, " << csv::format_fixed(elapsed, 2) << " s";
  detail = d.str();
  return passing >= 4 && elapsed < 60.0;
}

// --- criterion 4: lead-time trend -----------------------------------------

bool criterion_lead_trend(std::string& detail) {
  auto sequences = synth_features(30, 43, 0.3);  // deviation onset 0.3 s before impact
  double mean_short = 0.0, mean_long = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    mean_short += pipeline_macro_f1(sequences, 0.1, 15, seed) / 5.0;
    mean_long += pipeline_macro_f1(sequences, 0.7, 15, seed) / 5.0;
  }
  std::ostringstream d;
  d << "mean macro F1 lead 0.1 s = " << csv::format_fixed(mean_short, 3)
    << ", lead 0.7 s = " << csv::format_fixed(mean_long, 3) << ", gap "
    << csv::format_fixed(mean_short - mean_long, 3);
  detail = d.str();
  return mean_short - mean_long >= 0.1;
}

// --- criterion 5: window-size saturation ----------------------------------

bool criterion_window_saturation(std::string& detail) {
  auto sequences = synth_features(60, 42, 1.0);
  double m5 = 0.0, m15 = 0.0, m20 = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    m5 += pipeline_macro_f1(sequences, 0.5, 5, seed) / 5.0;
    m15 += pipeline_macro_f1(sequences, 0.5, 15, seed) / 5.0;
    m20 += pipeline_macro_f1(sequences, 0.5, 20, seed) / 5.0;
  }
  std::ostringstream d;
  d << "mean macro F1 K5 = " << csv::format_fixed(m5, 3) << ", K15 = "
    << csv::format_fixed(m15, 3) << ", K20 = " << csv::format_fixed(m20, 3);
  detail = d.str();
  return std::abs(m15 - m20) <= 0.03 && m15 >= m5 - 0.02;
}

// --- criterion 6: fall-window variance dominance ---------------------------

bool criterion_variance(std::string& detail) {
  auto sequences = synth_features(30, 44, 1.0);
  std::vector<WindowSample> fall, nonfall;
  std::size_t idx = 0;
  for (const auto& fs : sequences) {
    if (fs.label == Label::Fall)
      fall.push_back(extract_fall_window(fs, 0.3, 15));
    else
      nonfall.push_back(extract_nonfall_window(fs, 15, mix_seed(7, idx)));
    ++idx;
  }
  auto fall_stats = feature_stats(fall);
  auto nonfall_stats = feature_stats(nonfall);
  bool all_dominate = true;
  std::ostringstream d;
  d << "fall/nonfall variance ratios:";
  for (int j = 0; j < 6; ++j) {
    const double fv = std::pow(fall_stats.per_feature[static_cast<std::size_t>(j)].stddev, 2);
    const double nv =
        std::pow(nonfall_stats.per_feature[static_cast<std::size_t>(j)].stddev, 2);
    d << " " << csv::format_fixed(nv > 0 ? fv / nv : 0.0, 1);
    all_dominate = all_dominate && fv > nv;
  }
  detail = d.str();
  return all_dominate;
}

// --- criterion 7: metric identities ----------------------------------------

bool criterion_metrics(std::string& detail) {
  Rng rng(0x7E57);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<int, int>> pairs;
    const std::size_t n = 1 + rng.next_index(80);
    for (std::size_t i = 0; i < n; ++i)
      pairs.emplace_back(static_cast<int>(rng.next_index(2)),
                         static_cast<int>(rng.next_index(2)));
    auto rep = metrics_from_predictions(pairs);
    auto ref = ts::naive_metrics(pairs);
    const bool equal =
        rep.nonfall.precision == ref.precision[0] && rep.nonfall.recall == ref.recall[0] &&
        rep.nonfall.f1 == ref.f1[0] && rep.fall.precision == ref.precision[1] &&
        rep.fall.recall == ref.recall[1] && rep.fall.f1 == ref.f1[1] &&
        rep.macro_precision == ref.macro_p && rep.macro_recall == ref.macro_r &&
        rep.macro_f1 == ref.macro_f1 && rep.weighted_precision == ref.weighted_p &&
        rep.weighted_recall == ref.weighted_r && rep.weighted_f1 == ref.weighted_f1 &&
        rep.nonfall.support == ref.support[0] && rep.fall.support == ref.support[1];
    if (!equal) {
      detail = "mismatch at trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "100 random prediction sets, exact equality";
  return true;
}

// --- criterion 8: determinism and round-trips ------------------------------

bool criterion_determinism(std::string& detail) {
  auto dir = ts::scratch_dir("acceptance_determinism");

  // (a) two identical pipeline runs -> bit-identical model files and reports
  auto run_once = [&](const std::filesystem::path& model_path, std::string& report) {
    auto sequences = synth_features(20, 45, 1.0);
    WindowingOptions wopt{0.3, 15, 7};
    auto windows = build_windows(sequences, wopt);
    auto split = collate_split(std::move(windows), 0.8, 7);
    NetConfig cfg;
    TrainOptions opt;
    opt.seed = 7;
    opt.epochs = 40;
    TrainRun run = train(split, cfg, opt);
    save_model(model_path, cfg, run.params);
    report = format_metrics_report(evaluate(cfg, run.params, split.test));
  };
  std::string report_a, report_b;
  run_once(dir / "a.bin", report_a);
  run_once(dir / "b.bin", report_b);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  if (slurp(dir / "a.bin") != slurp(dir / "b.bin")) {
    detail = "model files differ between identical runs";
    return false;
  }
  if (report_a != report_b) {
    detail = "metric reports differ between identical runs";
    return false;
  }

  // (b) save/load round-trips every weight bit-exactly
  auto [cfg2, p2] = load_model(dir / "a.bin");
  save_model(dir / "c.bin", cfg2, p2);
  if (slurp(dir / "a.bin") != slurp(dir / "c.bin")) {
    detail = "save/load round trip altered the model";
    return false;
  }

  // (c) synth corpus write/parse round-trips (frame, x, y) exactly
  CorpusSpec corpus;
  corpus.n_fall = 4;
  corpus.n_nonfall = 4;
  corpus.base_seed = 46;
  corpus.base.noise_stddev_deg = 2.0;
  auto entries = gen_corpus(dir / "corpus", corpus);
  auto expected = gen_corpus_sequences(corpus);
  const auto manifest = dir / "corpus" / "manifest.csv";
  auto loaded_entries = load_manifest(manifest);
  if (loaded_entries.size() != expected.size()) {
    detail = "corpus manifest entry count mismatch";
    return false;
  }
  for (std::size_t i = 0; i < loaded_entries.size(); ++i) {
    auto parsed = parse_keypoint_file(resolve_sequence_path(manifest, loaded_entries[i]),
                                      loaded_entries[i]);
    const auto& want = expected[i];
    if (parsed.frames.size() != want.frames.size()) {
      detail = "frame count changed in round trip";
      return false;
    }
    for (std::size_t f = 0; f < want.frames.size(); ++f) {
      if (parsed.frames[f].frame_index != want.frames[f].frame_index) {
        detail = "frame index changed in round trip";
        return false;
      }
      for (std::size_t j = 0; j < want.frames[f].keypoints.size(); ++j)
        if (parsed.frames[f].keypoints[j].x != want.frames[f].keypoints[j].x ||
            parsed.frames[f].keypoints[j].y != want.frames[f].keypoints[j].y) {
          detail = "coordinates changed in round trip";
          return false;
        }
    }
  }
  detail = "reruns bit-identical; model and corpus round-trips exact";
  return true;
}

// --- criterion 9: parameter footprint --------------------------------------

bool criterion_footprint(std::string& detail) {
  NetConfig cfg;  // I=6, H=5, C=2
  const ParamCount pc = param_count(cfg);
  constexpr std::int64_t kSmallestBaselineBytes = 59557;
  const double ratio =
      static_cast<double>(kSmallestBaselineBytes) / static_cast<double>(pc.bytes_f32);
  std::ostringstream d;
  d << pc.count << " params, " << pc.bytes_f32 << " bytes (f32), "
    << csv::format_fixed(ratio, 1) << "x below the smallest published baseline"
    << " (published 3136-byte figure reported via `info`, not asserted)";
  detail = d.str();
  return pc.count == 252 && pc.bytes_f32 == 1008 &&
         kSmallestBaselineBytes >= 18 * pc.bytes_f32;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness vs finite differences", criterion_gradients},
      {2, "feature oracle and geometric properties", criterion_features},
      {3, "synthetic separability", criterion_separability},
      {4, "lead-time trend", criterion_lead_trend},
      {5, "window-size saturation", criterion_window_saturation},
      {6, "fall-window variance dominance", criterion_variance},
      {7, "metric identities vs naive recount", criterion_metrics},
      {8, "determinism and round-trips", criterion_determinism},
      {9, "parameter footprint", criterion_footprint},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion.id,
                criterion.name, detail.c_str());
  }
  std::printf("criterion 10 (dataset-dependent, real UP-Fall keypoints) is excluded "
              "from the offline suite by design\n");
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
