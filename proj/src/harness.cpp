#include "prefall/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "prefall/error.hpp"
#include "prefall/rng.hpp"

namespace prefall {

int predict(const ClassScores& scores) {
  return scores.log_probs(static_cast<int>(Label::Fall)) >
                 scores.log_probs(static_cast<int>(Label::NonFall))
             ? static_cast<int>(Label::Fall)
             : static_cast<int>(Label::NonFall);
}

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double p, double r) { return safe_div(2.0 * p * r, p + r); }

}  // namespace

MetricsReport metrics_from_predictions(const std::vector<std::pair<int, int>>& pred_truth) {
  MetricsReport rep;
  for (const auto& [pred, truth] : pred_truth) {
    if ((pred != 0 && pred != 1) || (truth != 0 && truth != 1))
      fail(ErrorKind::Config, "class indices must be 0 or 1");
    rep.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)]++;
  }
  rep.total = static_cast<std::int64_t>(pred_truth.size());

  auto class_metrics = [&](int c) {
    const auto ci = static_cast<std::size_t>(c);
    ClassMetrics m;
    const double tp = static_cast<double>(rep.confusion[ci][ci]);
    const double fp = static_cast<double>(rep.confusion[1 - ci][ci]);
    const double fn = static_cast<double>(rep.confusion[ci][1 - ci]);
    m.support = rep.confusion[ci][0] + rep.confusion[ci][1];
    m.precision = safe_div(tp, tp + fp);
    m.recall = safe_div(tp, tp + fn);
    m.f1 = f1_of(m.precision, m.recall);
    return m;
  };
  rep.nonfall = class_metrics(static_cast<int>(Label::NonFall));
  rep.fall = class_metrics(static_cast<int>(Label::Fall));

  rep.macro_precision = 0.5 * (rep.nonfall.precision + rep.fall.precision);
  rep.macro_recall = 0.5 * (rep.nonfall.recall + rep.fall.recall);
  rep.macro_f1 = 0.5 * (rep.nonfall.f1 + rep.fall.f1);

  const double n = static_cast<double>(rep.total);
  const double s0 = static_cast<double>(rep.nonfall.support);
  const double s1 = static_cast<double>(rep.fall.support);
  rep.weighted_precision = safe_div(s0 * rep.nonfall.precision + s1 * rep.fall.precision, n);
  rep.weighted_recall = safe_div(s0 * rep.nonfall.recall + s1 * rep.fall.recall, n);
  rep.weighted_f1 = safe_div(s0 * rep.nonfall.f1 + s1 * rep.fall.f1, n);
  rep.accuracy = safe_div(static_cast<double>(rep.confusion[0][0] + rep.confusion[1][1]), n);
  return rep;
}

TrainRun train(const DatasetSplit& split, const NetConfig& cfg, const TrainOptions& opt) {
  cfg.validate();
  if (split.train.empty()) fail(ErrorKind::Config, "training set is empty");
  if (opt.batch_size < 1) fail(ErrorKind::Config, "batch_size must be >= 1");
  if (opt.epochs < 0) fail(ErrorKind::Config, "epochs must be >= 0");

  bool has_fall = false, has_nonfall = false;
  for (const auto& s : split.train) {
    (s.label == Label::Fall ? has_fall : has_nonfall) = true;
    if (s.features.rows() != cfg.window_frames)
      fail(ErrorKind::Structure,
           s.sequence_id + ": window has " + std::to_string(s.features.rows()) +
               " frames, config expects " + std::to_string(cfg.window_frames));
  }
  if (!has_fall || !has_nonfall)
    fail(ErrorKind::Config, "training set must contain both classes");

  TrainRun run;
  run.cfg = cfg;
  run.options = opt;
  run.params = init_params(cfg, opt.seed);
  AdamState adam = AdamState::fresh(cfg, opt.adam);

  std::vector<std::size_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng(mix_seed(opt.seed, static_cast<std::uint64_t>(epoch) + 2));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::vector<const WindowSample*> batch;
    for (std::size_t i = 0; i < order.size();) {
      batch.clear();
      for (; i < order.size() && batch.size() < static_cast<std::size_t>(opt.batch_size); ++i)
        batch.push_back(&split.train[order[i]]);
      double batch_loss = 0.0;
      Gradients g = backward(cfg, run.params, batch, &batch_loss);
      adam_step(run.params, g, adam);
      loss_sum += batch_loss * static_cast<double>(batch.size());
      seen += batch.size();
    }
    const double epoch_loss = loss_sum / static_cast<double>(seen);
    run.loss_history.push_back(epoch_loss);

    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      since_best = 0;
    } else if (opt.early_stop_patience > 0 && ++since_best >= opt.early_stop_patience) {
      break;
    }
  }
  return run;
}

MetricsReport evaluate(const NetConfig& cfg, const LstmParams& p,
                       const std::vector<WindowSample>& test) {
  if (test.empty()) fail(ErrorKind::Config, "evaluation set is empty");
  std::vector<std::pair<int, int>> pred_truth;
  pred_truth.reserve(test.size());
  for (const auto& s : test)
    pred_truth.emplace_back(predict(forward(cfg, p, s.features)),
                            static_cast<int>(s.label));
  return metrics_from_predictions(pred_truth);
}

std::vector<WindowSample> build_windows(const std::vector<FeatureSequence>& sequences,
                                        const WindowingOptions& opt,
                                        std::size_t* skipped) {
  std::vector<WindowSample> out;
  std::size_t n_skipped = 0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const FeatureSequence& fs = sequences[i];
    try {
      if (fs.label == Label::Fall)
        out.push_back(extract_fall_window(fs, opt.lead_time_s, opt.k));
      else
        out.push_back(extract_nonfall_window(fs, opt.k, mix_seed(opt.seed, i)));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Extraction || e.kind() == ErrorKind::MaskedData)
        ++n_skipped;
      else
        throw;
    }
  }
  if (skipped) *skipped = n_skipped;
  return out;
}

namespace {

// Run fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
// to pre-sized slots so the output order never depends on scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::vector<FeatureSequence> load_feature_sequences(
    const std::filesystem::path& manifest_path, const ActivityMap& activities,
    const JointMap& jm, double conf_threshold, int jobs) {
  const auto entries = load_manifest(manifest_path, activities);
  std::vector<FeatureSequence> out(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto path = resolve_sequence_path(manifest_path, entries[i]);
    out[i] = sequence_features(parse_keypoint_file(path, entries[i]), jm, conf_threshold);
  });
  return out;
}

namespace {

SweepRow run_cell(const std::vector<FeatureSequence>& sequences, double lead_s, int k,
                  std::uint64_t seed, const SweepOptions& opt) {
  SweepRow row;
  row.lead_time_s = lead_s;
  row.k = k;
  row.seed = seed;

  WindowingOptions wopt{lead_s, k, seed};
  std::size_t skipped = 0;
  std::vector<WindowSample> windows = build_windows(sequences, wopt, &skipped);

  bool has_fall = false, has_nonfall = false;
  for (const auto& w : windows) (w.label == Label::Fall ? has_fall : has_nonfall) = true;
  if (windows.size() < 2 || !has_fall || !has_nonfall) return row;  // infeasible

  try {
    DatasetSplit split = collate_split(std::move(windows), opt.ratio, seed);
    if (split.test.empty()) return row;
    NetConfig cfg = opt.cfg;
    cfg.window_frames = k;
    TrainOptions topt = opt.train;
    topt.seed = seed;
    TrainRun run = train(split, cfg, topt);
    row.metrics = evaluate(cfg, run.params, split.test);
    row.feasible = true;
  } catch (const Error&) {
    row.feasible = false;
  }
  return row;
}

SweepResult run_sweep(const std::vector<FeatureSequence>& sequences,
                      const std::vector<std::pair<double, int>>& cells,
                      const SweepOptions& opt) {
  std::vector<std::pair<std::size_t, std::uint64_t>> jobs_list;  // (cell, seed)
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::uint64_t seed : opt.seeds) jobs_list.emplace_back(c, seed);

  SweepResult result;
  result.rows.resize(jobs_list.size());
  parallel_for(jobs_list.size(), opt.jobs, [&](std::size_t i) {
    const auto [c, seed] = jobs_list[i];
    result.rows[i] = run_cell(sequences, cells[c].first, cells[c].second, seed, opt);
  });
  return result;
}

}  // namespace

SweepResult sweep_lead_time(const std::vector<FeatureSequence>& sequences,
                            const std::vector<double>& leads_s, int k,
                            const SweepOptions& opt) {
  if (leads_s.empty()) fail(ErrorKind::Config, "lead-time sweep needs at least one lead");
  if (opt.seeds.empty()) fail(ErrorKind::Config, "sweep needs at least one seed");
  std::vector<std::pair<double, int>> cells;
  for (double lead : leads_s) cells.emplace_back(lead, k);
  return run_sweep(sequences, cells, opt);
}

SweepResult sweep_window(const std::vector<FeatureSequence>& sequences, double lead_s,
                         const std::vector<int>& ks, const SweepOptions& opt) {
  if (ks.empty()) fail(ErrorKind::Config, "window sweep needs at least one window size");
  if (opt.seeds.empty()) fail(ErrorKind::Config, "sweep needs at least one seed");
  std::vector<std::pair<double, int>> cells;
  for (int k : ks) cells.emplace_back(lead_s, k);
  return run_sweep(sequences, cells, opt);
}

StreamResult infer_stream(const NetConfig& cfg, const LstmParams& p,
                          const FeatureSequence& fs, int stride) {
  if (stride < 1) fail(ErrorKind::Config, "stride must be >= 1");
  const int k = cfg.window_frames;
  StreamResult result;
  if (fs.rows.size() < static_cast<std::size_t>(k)) return result;

  for (std::size_t pos = 0; pos + static_cast<std::size_t>(k) <= fs.rows.size();
       pos += static_cast<std::size_t>(stride)) {
    const std::size_t end = pos + static_cast<std::size_t>(k) - 1;
    const bool contiguous =
        fs.frame_indices[end] == fs.frame_indices[pos] + k - 1;
    bool valid = contiguous;
    for (std::size_t r = pos; valid && r <= end; ++r) valid = fs.rows[r].all_valid();
    if (!valid) {
      result.skipped_window_ends.push_back(fs.frame_indices[end]);
      continue;
    }
    Mat window(k, kNumFeatures);
    for (int r = 0; r < k; ++r)
      window.row(r) = fs.rows[pos + static_cast<std::size_t>(r)].theta_deg.transpose();
    ClassScores scores = forward(cfg, p, window);
    result.emissions.push_back({fs.frame_indices[end], predict(scores),
                                scores.log_probs(static_cast<int>(Label::Fall))});
  }
  return result;
}

}  // namespace prefall
