#include "prefall/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "prefall/error.hpp"
#include "prefall/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

namespace prefall {

void NetConfig::validate() const {
  if (input_dim != 6) fail(ErrorKind::Config, "input_dim must be 6");
  if (num_classes != 2) fail(ErrorKind::Config, "num_classes must be 2");
  if (hidden_units < 1) fail(ErrorKind::Config, "hidden_units must be >= 1");
  if (window_frames < 1) fail(ErrorKind::Config, "window_frames must be >= 1");
  if (!(input_scale_deg > 0.0)) fail(ErrorKind::Config, "input_scale_deg must be > 0");
}

LstmParams LstmParams::zeros(const NetConfig& cfg) {
  const int h = cfg.hidden_units, i = cfg.input_dim, c = cfg.num_classes;
  LstmParams p;
  p.w_input = Mat::Zero(4 * h, i);
  p.w_recurrent = Mat::Zero(4 * h, h);
  p.b_gates = Vec::Zero(4 * h);
  p.w_head = Mat::Zero(c, h);
  p.b_head = Vec::Zero(c);
  return p;
}

AdamState AdamState::fresh(const NetConfig& cfg, AdamConfig hyper) {
  AdamState s;
  s.m = LstmParams::zeros(cfg);
  s.v = LstmParams::zeros(cfg);
  s.step = 0;
  s.hyper = hyper;
  return s;
}

LstmParams init_params(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double a = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_units));
  LstmParams p = LstmParams::zeros(cfg);
  Rng rng(seed);
  auto fill = [&](Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.next_uniform(-a, a);
  };
  fill(p.w_input);
  fill(p.w_recurrent);
  fill(p.w_head);
  // forget-gate block of b_gates starts at H
  p.b_gates.segment(cfg.hidden_units, cfg.hidden_units).setOnes();
  return p;
}

namespace {

inline Vec sigmoid(const Vec& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

Eigen::Vector2d log_softmax2(const Eigen::Vector2d& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

}  // namespace

ClassScores forward(const NetConfig& cfg, const LstmParams& p,
                    const Eigen::Ref<const Mat>& window_deg, ForwardCache* cache) {
  const int h = cfg.hidden_units;
  const auto k = window_deg.rows();
  if (k < 1) fail(ErrorKind::Structure, "forward needs at least one frame");
  if (window_deg.cols() != cfg.input_dim)
    fail(ErrorKind::Structure, "window has " + std::to_string(window_deg.cols()) +
                                   " features per frame, expected " +
                                   std::to_string(cfg.input_dim));

  if (cache) {
    cache->steps.clear();
    cache->steps.reserve(static_cast<std::size_t>(k));
  }

  Vec h_prev = Vec::Zero(h);
  Vec c_prev = Vec::Zero(h);
  for (Eigen::Index t = 0; t < k; ++t) {
    if (!window_deg.row(t).allFinite())
      fail(ErrorKind::Numeric, "non-finite feature at frame " + std::to_string(t));
    Vec x = window_deg.row(t).transpose() / cfg.input_scale_deg;
    Vec a = p.w_input * x + p.w_recurrent * h_prev + p.b_gates;
    Vec gi = sigmoid(a.segment(0, h));
    Vec gf = sigmoid(a.segment(h, h));
    Vec gg = a.segment(2 * h, h).array().tanh().matrix();
    Vec go = sigmoid(a.segment(3 * h, h));
    Vec c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    Vec tanh_c = c.array().tanh().matrix();
    Vec h_cur = go.cwiseProduct(tanh_c);
    if (cache)
      cache->steps.push_back({std::move(x), std::move(gi), std::move(gf),
                              std::move(gg), std::move(go), c, tanh_c, h_cur});
    c_prev = std::move(c);
    h_prev = std::move(h_cur);
  }

  Eigen::Vector2d logits = p.w_head * h_prev + p.b_head;
  ClassScores scores{log_softmax2(logits)};
  if (cache) cache->probs = scores.log_probs.array().exp();
  return scores;
}

double nll_loss(const ClassScores& scores, int label) {
  if (label != 0 && label != 1) fail(ErrorKind::Config, "label must be 0 or 1");
  return -scores.log_probs(label);
}

Gradients backward(const NetConfig& cfg, const LstmParams& p,
                   std::span<const WindowSample* const> batch, double* mean_loss) {
  if (batch.empty()) fail(ErrorKind::Structure, "backward needs a non-empty batch");
  const int h = cfg.hidden_units;
  const auto k = batch.front()->features.rows();
  for (const WindowSample* s : batch)
    if (s->features.rows() != k)
      fail(ErrorKind::Structure, "batch windows must share one window size");

  Gradients grad = LstmParams::zeros(cfg);
  double loss_sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  ForwardCache cache;
  for (const WindowSample* s : batch) {
    ClassScores scores = forward(cfg, p, s->features, &cache);
    const int label = static_cast<int>(s->label);
    loss_sum += nll_loss(scores, label);

    // d loss / d logits for NLL on log-softmax output
    Eigen::Vector2d dlogits = cache.probs;
    dlogits(label) -= 1.0;

    const Vec& h_last = cache.steps.back().h;
    grad.w_head += inv_n * dlogits * h_last.transpose();
    grad.b_head += inv_n * dlogits;

    Vec dh = p.w_head.transpose() * dlogits;
    Vec dc = Vec::Zero(h);
    const Vec zero_state = Vec::Zero(h);
    for (auto t = static_cast<std::ptrdiff_t>(k) - 1; t >= 0; --t) {
      const StepCache& st = cache.steps[static_cast<std::size_t>(t)];
      const Vec& c_prev =
          t > 0 ? cache.steps[static_cast<std::size_t>(t) - 1].c : zero_state;
      const Vec& h_prev =
          t > 0 ? cache.steps[static_cast<std::size_t>(t) - 1].h : zero_state;

      dc += dh.cwiseProduct(st.o).cwiseProduct(
          (1.0 - st.tanh_c.array().square()).matrix());
      Vec do_ = dh.cwiseProduct(st.tanh_c);

      Vec da(4 * h);
      da.segment(0, h) = dc.cwiseProduct(st.g).cwiseProduct(st.i).cwiseProduct(
          (1.0 - st.i.array()).matrix());
      da.segment(h, h) = dc.cwiseProduct(c_prev).cwiseProduct(st.f).cwiseProduct(
          (1.0 - st.f.array()).matrix());
      da.segment(2 * h, h) =
          dc.cwiseProduct(st.i).cwiseProduct((1.0 - st.g.array().square()).matrix());
      da.segment(3 * h, h) =
          do_.cwiseProduct(st.o).cwiseProduct((1.0 - st.o.array()).matrix());

      grad.w_input += inv_n * da * st.x.transpose();
      grad.w_recurrent += inv_n * da * h_prev.transpose();
      grad.b_gates += inv_n * da;

      dh = p.w_recurrent.transpose() * da;
      dc = dc.cwiseProduct(st.f);
    }
  }

  if (mean_loss) *mean_loss = loss_sum * inv_n;
  return grad;
}

Gradients backward(const NetConfig& cfg, const LstmParams& p,
                   const std::vector<WindowSample>& batch, double* mean_loss) {
  std::vector<const WindowSample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return backward(cfg, p, ptrs, mean_loss);
}

void adam_step(LstmParams& p, const Gradients& g, AdamState& s) {
  s.step += 1;
  const auto& hp = s.hyper;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(s.step));

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = hp.beta1 * m + (1.0 - hp.beta1) * grad;
    v = (hp.beta2 * v.array() + (1.0 - hp.beta2) * grad.array().square()).matrix();
    param -= (hp.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + hp.epsilon))
                 .matrix();
  };
  update(p.w_input, g.w_input, s.m.w_input, s.v.w_input);
  update(p.w_recurrent, g.w_recurrent, s.m.w_recurrent, s.v.w_recurrent);
  update(p.b_gates, g.b_gates, s.m.b_gates, s.v.b_gates);
  update(p.w_head, g.w_head, s.m.w_head, s.v.w_head);
  update(p.b_head, g.b_head, s.m.b_head, s.v.b_head);
}

ParamCount param_count(const NetConfig& cfg) {
  cfg.validate();
  const std::int64_t h = cfg.hidden_units, i = cfg.input_dim, c = cfg.num_classes;
  ParamCount pc;
  pc.count = 4 * (h * (i + h) + h) + (h * c + c);
  pc.bytes_f32 = 4 * pc.count;
  return pc;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_i32(std::ostream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_mat(std::ostream& out, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
}

void put_vec(std::ostream& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v(i));
}

template <class T>
T get_raw(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(ErrorKind::Format, path + ": truncated model file");
  return v;
}

void get_mat(std::istream& in, Mat& m, const std::string& path) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_raw<double>(in, path);
}

void get_vec(std::istream& in, Vec& v, const std::string& path) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = get_raw<double>(in, path);
}

}  // namespace

void save_model(const std::filesystem::path& path, const NetConfig& cfg,
                const LstmParams& p) {
  cfg.validate();
  const int h = cfg.hidden_units;
  if (p.w_input.rows() != 4 * h || p.w_input.cols() != cfg.input_dim ||
      p.w_recurrent.rows() != 4 * h || p.w_recurrent.cols() != h ||
      p.b_gates.size() != 4 * h || p.w_head.rows() != cfg.num_classes ||
      p.w_head.cols() != h || p.b_head.size() != cfg.num_classes)
    fail(ErrorKind::Format, "parameter block shapes disagree with the config");

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  put_u32(out, kModelFormatVersion);
  put_i32(out, cfg.input_dim);
  put_i32(out, cfg.hidden_units);
  put_i32(out, cfg.num_classes);
  put_i32(out, cfg.window_frames);
  put_f64(out, cfg.input_scale_deg);
  put_mat(out, p.w_input);
  put_mat(out, p.w_recurrent);
  put_vec(out, p.b_gates);
  put_mat(out, p.w_head);
  put_vec(out, p.b_head);
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::pair<NetConfig, LstmParams> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NoInput, "cannot open " + path.string());
  const std::string where = path.string();

  char magic[sizeof kModelMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
    fail(ErrorKind::Format, where + ": not a model file (bad magic)");

  const auto version = get_raw<std::uint32_t>(in, where);
  if (version > kModelFormatVersion)
    fail(ErrorKind::Version, where + ": format version " + std::to_string(version) +
                                 " is newer than supported " +
                                 std::to_string(kModelFormatVersion));

  NetConfig cfg;
  cfg.input_dim = get_raw<std::int32_t>(in, where);
  cfg.hidden_units = get_raw<std::int32_t>(in, where);
  cfg.num_classes = get_raw<std::int32_t>(in, where);
  cfg.window_frames = get_raw<std::int32_t>(in, where);
  cfg.input_scale_deg = get_raw<double>(in, where);
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Format, where + ": invalid stored config: " + e.what());
  }

  LstmParams p = LstmParams::zeros(cfg);
  get_mat(in, p.w_input, where);
  get_mat(in, p.w_recurrent, where);
  get_vec(in, p.b_gates, where);
  get_mat(in, p.w_head, where);
  get_vec(in, p.b_head, where);

  if (!p.w_input.allFinite() || !p.w_recurrent.allFinite() ||
      !p.b_gates.allFinite() || !p.w_head.allFinite() || !p.b_head.allFinite())
    fail(ErrorKind::Format, where + ": non-finite parameter");

  char extra;
  in.read(&extra, 1);
  if (in) fail(ErrorKind::Format, where + ": trailing bytes after parameter blocks");

  return {cfg, std::move(p)};
}

}  // namespace prefall
