#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "prefall/windows.hpp"

namespace prefall {

struct NetConfig {
  int input_dim = 6;
  int hidden_units = 5;
  int num_classes = 2;
  int window_frames = 15;  // K
  // Raw degree features are divided by this before entering the recurrence.
  // Serialized with the model so inference always matches training.
  double input_scale_deg = 90.0;

  void validate() const;  // throws Config
};

// All learnable weights. The 4H gate dimension is ordered
// (input, forget, cell, output); the order is frozen in the file format.
struct LstmParams {
  Mat w_input;      // 4H x I
  Mat w_recurrent;  // 4H x H
  Vec b_gates;      // 4H
  Mat w_head;       // C x H
  Vec b_head;       // C

  static LstmParams zeros(const NetConfig& cfg);
};

using Gradients = LstmParams;  // same shapes

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  LstmParams m;  // first moments
  LstmParams v;  // second moments
  std::int64_t step = 0;
  AdamConfig hyper;

  static AdamState fresh(const NetConfig& cfg, AdamConfig hyper = {});
};

struct ClassScores {
  Eigen::Vector2d log_probs;  // exp sums to 1
};

// Per-step activations kept for backpropagation through time.
struct StepCache {
  Vec x;       // normalized input
  Vec i, f, g, o;
  Vec c, tanh_c, h;
};

struct ForwardCache {
  std::vector<StepCache> steps;
  Eigen::Vector2d probs;  // softmax of the head logits
};

// Weights uniform in [-a, a] with a = 1/sqrt(H); forget-gate bias 1, all
// other biases 0. Bit-deterministic per seed.
LstmParams init_params(const NetConfig& cfg, std::uint64_t seed);

// Standard LSTM recurrence (sigmoid gates, tanh cell/candidate), h0 = c0 = 0;
// head is w_head * h_K + b_head followed by a max-subtracted log-softmax.
// window_deg holds raw degree features, one frame per row; any row count
// >= 1 is accepted. Throws Numeric naming the frame on non-finite input.
ClassScores forward(const NetConfig& cfg, const LstmParams& p,
                    const Eigen::Ref<const Mat>& window_deg,
                    ForwardCache* cache = nullptr);

// loss = -log_probs[label]
double nll_loss(const ClassScores& scores, int label);

// Exact gradient of the mean batch NLL over all K steps and all five
// blocks. Optionally reports the mean loss of the batch it just saw.
Gradients backward(const NetConfig& cfg, const LstmParams& p,
                   std::span<const WindowSample* const> batch,
                   double* mean_loss = nullptr);
Gradients backward(const NetConfig& cfg, const LstmParams& p,
                   const std::vector<WindowSample>& batch,
                   double* mean_loss = nullptr);

// Bias-corrected Adam; increments s.step.
void adam_step(LstmParams& p, const Gradients& g, AdamState& s);

struct ParamCount {
  std::int64_t count = 0;
  std::int64_t bytes_f32 = 0;  // deployable footprint at 4 bytes/weight
};

// count = 4(H(I+H)+H) + (HC + C)
ParamCount param_count(const NetConfig& cfg);

inline constexpr char kModelMagic[8] = {'P', 'F', 'A', 'L', 'L', 'N', 'E', 'T'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

// Binary model file: magic, format version, config integers (I, H, C, K),
// input scale, then W, U, b, V, c row-major as little-endian 8-byte floats.
// Round-trips bit-exactly.
void save_model(const std::filesystem::path& path, const NetConfig& cfg,
                const LstmParams& p);
std::pair<NetConfig, LstmParams> load_model(const std::filesystem::path& path);

}  // namespace prefall
