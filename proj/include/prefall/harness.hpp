#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "prefall/ingest.hpp"
#include "prefall/net.hpp"

namespace prefall {

struct TrainOptions {
  int batch_size = 8;
  int epochs = 100;
  int early_stop_patience = 20;  // epochs without train-loss improvement; <= 0 disables
  std::uint64_t seed = 0;
  AdamConfig adam;
};

struct TrainRun {
  NetConfig cfg;
  TrainOptions options;
  std::vector<double> loss_history;  // per-epoch mean NLL, one entry per epoch run
  LstmParams params;
};

struct ClassMetrics {
  double precision = 0, recall = 0, f1 = 0;
  std::int64_t support = 0;
};

struct MetricsReport {
  ClassMetrics nonfall, fall;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
  double accuracy = 0;
  // confusion[truth][pred], class order (nonfall, fall)
  std::array<std::array<std::int64_t, 2>, 2> confusion{};
  std::int64_t total = 0;
};

// argmax over log-probs; an exact tie predicts NonFall.
int predict(const ClassScores& scores);

// Shared metric arithmetic over (predicted, truth) label index pairs.
MetricsReport metrics_from_predictions(const std::vector<std::pair<int, int>>& pred_truth);

// Mini-batch Adam with a seeded reshuffle each epoch (epoch seed derived from
// the base seed and epoch number). Requires both classes in the train set.
TrainRun train(const DatasetSplit& split, const NetConfig& cfg, const TrainOptions& opt);

MetricsReport evaluate(const NetConfig& cfg, const LstmParams& p,
                       const std::vector<WindowSample>& test);

struct WindowingOptions {
  double lead_time_s = 0.5;
  int k = 15;
  std::uint64_t seed = 0;  // base seed for non-fall placements
};

// One window per sequence. Sequences that cannot host a window (too short
// for this lead/K, or masked) are counted in *skipped and left out.
std::vector<WindowSample> build_windows(const std::vector<FeatureSequence>& sequences,
                                        const WindowingOptions& opt,
                                        std::size_t* skipped = nullptr);

// Parse every manifest entry and derive features; `jobs` > 1 parses
// concurrently (order of results always follows the manifest).
std::vector<FeatureSequence> load_feature_sequences(
    const std::filesystem::path& manifest_path, const ActivityMap& activities,
    const JointMap& jm, double conf_threshold = 0.0, int jobs = 1);

struct SweepRow {
  double lead_time_s = 0;
  int k = 0;
  std::uint64_t seed = 0;
  bool feasible = false;
  MetricsReport metrics;  // meaningful only when feasible
};

struct SweepResult {
  std::vector<SweepRow> rows;  // one per (lead, K, seed), request order
};

struct SweepOptions {
  NetConfig cfg;            // window_frames overridden per cell
  TrainOptions train;       // seed overridden per cell
  double ratio = 0.8;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int jobs = 1;
};

// Full pipeline (extract -> split -> train -> evaluate) per lead per seed.
// A cell whose windows cannot be built is marked infeasible and the sweep
// continues.
SweepResult sweep_lead_time(const std::vector<FeatureSequence>& sequences,
                            const std::vector<double>& leads_s, int k,
                            const SweepOptions& opt);

// Same pipeline over window sizes at a fixed lead.
SweepResult sweep_window(const std::vector<FeatureSequence>& sequences, double lead_s,
                         const std::vector<int>& ks, const SweepOptions& opt);

struct StreamEmission {
  std::int64_t window_end_frame = 0;
  int predicted = 0;
  double fall_log_prob = 0;
};

struct StreamResult {
  std::vector<StreamEmission> emissions;
  std::vector<std::int64_t> skipped_window_ends;  // masked or gapped placements
};

// Slides a K-frame window by stride over the sequence, one prediction per
// placement.
StreamResult infer_stream(const NetConfig& cfg, const LstmParams& p,
                          const FeatureSequence& fs, int stride = 1);

}  // namespace prefall
