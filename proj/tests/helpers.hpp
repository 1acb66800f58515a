#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prefall/harness.hpp"
#include "prefall/net.hpp"
#include "prefall/rng.hpp"

// Shared test-side oracles. Everything here is kept independent of the
// library's own computation paths: finite differences instead of BPTT,
// tallying loops instead of the metrics module, a scalar Adam instead of the
// block-wise one.
namespace testing_support {

inline std::filesystem::path data_dir() { return TEST_DATA_DIR; }

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(TEST_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Central finite differences of the mean batch NLL w.r.t. every parameter
// coordinate, visiting the five blocks in serialization order.
inline std::vector<double> finite_difference_gradient(
    const prefall::NetConfig& cfg, prefall::LstmParams params,
    const std::vector<prefall::WindowSample>& batch, double step = 1e-5) {
  auto batch_loss = [&](const prefall::LstmParams& p) {
    double sum = 0.0;
    for (const auto& s : batch)
      sum += prefall::nll_loss(prefall::forward(cfg, p, s.features),
                               static_cast<int>(s.label));
    return sum / static_cast<double>(batch.size());
  };

  std::vector<double> grad;
  auto probe = [&](double& coord) {
    const double original = coord;
    coord = original + step;
    const double hi = batch_loss(params);
    coord = original - step;
    const double lo = batch_loss(params);
    coord = original;
    grad.push_back((hi - lo) / (2.0 * step));
  };
  auto probe_mat = [&](prefall::Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) probe(m(r, c));
  };
  auto probe_vec = [&](prefall::Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) probe(v(i));
  };
  probe_mat(params.w_input);
  probe_mat(params.w_recurrent);
  probe_vec(params.b_gates);
  probe_mat(params.w_head);
  probe_vec(params.b_head);
  return grad;
}

// The analytic gradient flattened in the same order.
inline std::vector<double> flatten_blocks(const prefall::LstmParams& g) {
  std::vector<double> out;
  auto push_mat = [&](const prefall::Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  };
  auto push_vec = [&](const prefall::Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  };
  push_mat(g.w_input);
  push_mat(g.w_recurrent);
  push_vec(g.b_gates);
  push_mat(g.w_head);
  push_vec(g.b_head);
  return out;
}

// Relative error with the usual unit floor so near-zero coordinates compare
// absolutely.
inline double gradient_rel_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

// Random windows/labels for gradient checks.
inline std::vector<prefall::WindowSample> random_batch(const prefall::NetConfig& cfg,
                                                       std::size_t n,
                                                       std::uint64_t seed) {
  prefall::Rng rng(seed);
  std::vector<prefall::WindowSample> batch;
  for (std::size_t s = 0; s < n; ++s) {
    prefall::WindowSample w;
    w.features = prefall::Mat(cfg.window_frames, cfg.input_dim);
    for (Eigen::Index r = 0; r < w.features.rows(); ++r)
      for (Eigen::Index c = 0; c < w.features.cols(); ++c)
        w.features(r, c) = rng.next_uniform(-90.0, 90.0);
    w.label = (rng.next_u64() & 1u) ? prefall::Label::Fall : prefall::Label::NonFall;
    w.sequence_id = "rand" + std::to_string(s);
    batch.push_back(std::move(w));
  }
  return batch;
}

// Naive recount of every metric straight from the prediction pairs.
struct NaiveMetrics {
  double precision[2], recall[2], f1[2];
  double macro_p, macro_r, macro_f1;
  double weighted_p, weighted_r, weighted_f1;
  long support[2];
  long correct, total;
};

inline NaiveMetrics naive_metrics(const std::vector<std::pair<int, int>>& pred_truth) {
  NaiveMetrics m{};
  long tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0};
  for (auto [pred, truth] : pred_truth) {
    ++m.total;
    ++m.support[truth];
    if (pred == truth) {
      ++m.correct;
      ++tp[truth];
    } else {
      ++fp[pred];
      ++fn[truth];
    }
  }
  for (int c = 0; c < 2; ++c) {
    m.precision[c] = tp[c] + fp[c] == 0 ? 0.0
                                        : double(tp[c]) / double(tp[c] + fp[c]);
    m.recall[c] = tp[c] + fn[c] == 0 ? 0.0 : double(tp[c]) / double(tp[c] + fn[c]);
    m.f1[c] = m.precision[c] + m.recall[c] == 0.0
                  ? 0.0
                  : 2.0 * m.precision[c] * m.recall[c] / (m.precision[c] + m.recall[c]);
  }
  m.macro_p = 0.5 * (m.precision[0] + m.precision[1]);
  m.macro_r = 0.5 * (m.recall[0] + m.recall[1]);
  m.macro_f1 = 0.5 * (m.f1[0] + m.f1[1]);
  const double n = double(m.total);
  m.weighted_p = (m.support[0] * m.precision[0] + m.support[1] * m.precision[1]) / n;
  m.weighted_r = (m.support[0] * m.recall[0] + m.support[1] * m.recall[1]) / n;
  m.weighted_f1 = (m.support[0] * m.f1[0] + m.support[1] * m.f1[1]) / n;
  return m;
}

// Scalar Adam, written independently of the library's block update.
struct ScalarAdam {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  long t = 0;

  void step(std::vector<double>& x, const std::vector<double>& g) {
    if (m.empty()) {
      m.assign(x.size(), 0.0);
      v.assign(x.size(), 0.0);
    }
    ++t;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = m[i] / (1.0 - std::pow(beta1, double(t)));
      const double vhat = v[i] / (1.0 - std::pow(beta2, double(t)));
      x[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

}  // namespace testing_support
