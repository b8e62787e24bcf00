#include "declension/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "declension/error.hpp"
#include "declension/json_io.hpp"

namespace declension {
namespace {

// Forward quantities of one LSTM step kept for backpropagation.
struct StepCache {
  SymbolId x = 0;
  std::vector<double> xh;      // [embedding; h_prev]
  std::vector<double> c_prev;
  std::vector<double> gates;   // activated i, f, g, o blocks
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
};

void check_symbol(const LstmParams& p, SymbolId x) {
  if (x >= p.alphabet_size()) {
    throw Error("symbol index " + std::to_string(x) + " out of range for alphabet of size " +
                std::to_string(p.alphabet_size()));
  }
}

void forward_step(const LstmParams& p, SymbolId x, std::span<const double> h_prev, std::span<const double> c_prev,
                  StepCache& out) {
  check_symbol(p, x);
  const std::size_t de = p.d_e;
  const std::size_t dh = p.d_h;
  out.x = x;
  out.xh.resize(de + dh);
  const auto emb = p.E.row(x);
  std::copy(emb.begin(), emb.end(), out.xh.begin());
  std::copy(h_prev.begin(), h_prev.end(), out.xh.begin() + static_cast<std::ptrdiff_t>(de));
  out.c_prev.assign(c_prev.begin(), c_prev.end());

  out.gates.resize(4 * dh);
  matvec_into(p.W, out.xh, out.gates);
  for (std::size_t r = 0; r < 4 * dh; ++r) out.gates[r] += p.b[r];
  for (std::size_t k = 0; k < dh; ++k) {
    out.gates[k] = sigmoid(out.gates[k]);
    out.gates[dh + k] = sigmoid(out.gates[dh + k]);
    out.gates[2 * dh + k] = std::tanh(out.gates[2 * dh + k]);
    out.gates[3 * dh + k] = sigmoid(out.gates[3 * dh + k]);
  }
  out.c.resize(dh);
  out.tanh_c.resize(dh);
  out.h.resize(dh);
  for (std::size_t k = 0; k < dh; ++k) {
    const double i = out.gates[k];
    const double f = out.gates[dh + k];
    const double g = out.gates[2 * dh + k];
    const double o = out.gates[3 * dh + k];
    out.c[k] = f * c_prev[k] + i * g;
    out.tanh_c[k] = std::tanh(out.c[k]);
    out.h[k] = o * out.tanh_c[k];
  }
}

void output_logits(const Tensor& proj, const Tensor& bias, std::span<const double> h, std::vector<double>& out) {
  out.resize(proj.rows());
  matvec_into(proj, h, out);
  for (std::size_t r = 0; r < out.size(); ++r) out[r] += bias[r];
}

// out += scale * a b^T
void add_outer(Tensor& out, std::span<const double> a, std::span<const double> b) {
  const std::size_t cols = out.cols();
  double* data = out.values().data();
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ar * b[c];
  }
}

// out += m^T v
void add_transposed_matvec(const Tensor& m, std::span<const double> v, std::span<double> out) {
  const std::size_t cols = m.cols();
  const double* data = m.values().data();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double vr = v[r];
    if (vr == 0.0) continue;
    const double* row = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * vr;
  }
}

// Teacher-forced unroll shared by instance_loss and backward.
struct Unroll {
  std::vector<StepCache> steps;          // encoder steps, then decoder steps
  std::size_t encoder_steps = 0;
  std::vector<std::vector<double>> gen_probs;  // one per decoder step
  std::vector<double> case_probs;
  double gen_loss = 0.0;
  double case_loss = 0.0;
};

Unroll run_teacher_forced(const LstmParams& p, const EncodedInstance& enc, std::size_t gold_case) {
  if (enc.input_ids.empty()) throw Error("encoded instance has an empty input sequence");
  if (enc.target_ids.empty() || enc.target_ids.back() != Alphabet::kEos) {
    throw Error("encoded target must end with EOS");
  }
  if (gold_case >= p.n_cases()) throw Error("gold case index out of range");

  Unroll u;
  const std::size_t dh = p.d_h;
  u.steps.resize(enc.input_ids.size() + enc.target_ids.size());
  std::vector<double> zeros(dh, 0.0);
  std::span<const double> h = zeros;
  std::span<const double> c = zeros;
  std::size_t t = 0;
  for (SymbolId x : enc.input_ids) {
    forward_step(p, x, h, c, u.steps[t]);
    h = u.steps[t].h;
    c = u.steps[t].c;
    ++t;
  }
  u.encoder_steps = t;

  output_logits(p.U_case, p.b_case, h, u.case_probs);
  softmax_inplace(u.case_probs);
  u.case_loss = cross_entropy(u.case_probs, gold_case);

  const std::size_t len = enc.target_ids.size();
  u.gen_probs.resize(len);
  double total = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const SymbolId in = k == 0 ? Alphabet::kBos : enc.target_ids[k - 1];
    forward_step(p, in, h, c, u.steps[t]);
    h = u.steps[t].h;
    c = u.steps[t].c;
    ++t;
    auto& probs = u.gen_probs[k];
    output_logits(p.V, p.b_v, h, probs);
    softmax_inplace(probs);
    check_symbol(p, enc.target_ids[k]);
    total += cross_entropy(probs, enc.target_ids[k]);
  }
  u.gen_loss = total / static_cast<double>(len);
  return u;
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t alphabet_size, std::size_t n_cases, std::size_t d_e, std::size_t d_h) {
  LstmParams p;
  p.d_e = d_e;
  p.d_h = d_h;
  p.E = Tensor(alphabet_size, d_e);
  p.W = Tensor(4 * d_h, d_e + d_h);
  p.b = Tensor::vector(4 * d_h);
  p.V = Tensor(alphabet_size, d_h);
  p.b_v = Tensor::vector(alphabet_size);
  p.U_case = Tensor(n_cases, d_h);
  p.b_case = Tensor::vector(n_cases);
  return p;
}

std::size_t LstmParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

std::array<Tensor*, LstmParams::kTensorCount> LstmParams::tensors() noexcept {
  return {&E, &W, &b, &V, &b_v, &U_case, &b_case};
}

std::array<const Tensor*, LstmParams::kTensorCount> LstmParams::tensors() const noexcept {
  return {&E, &W, &b, &V, &b_v, &U_case, &b_case};
}

void LstmParams::validate() const {
  const std::size_t a = alphabet_size();
  const std::size_t k = n_cases();
  const auto expect = [](const Tensor& t, std::size_t rows, std::size_t cols, std::string_view name) {
    if (t.rows() != rows || t.cols() != cols) {
      throw FormatError("tensor " + std::string(name) + " has shape " + t.shape_string() + ", expected (" +
                        std::to_string(rows) + "x" + std::to_string(cols) + ")");
    }
    if (!t.all_finite()) throw FormatError("tensor " + std::string(name) + " contains non-finite values");
  };
  if (d_e == 0 || d_h == 0) throw FormatError("model dimensions must be positive");
  if (a <= Alphabet::kReserved) throw FormatError("model alphabet has no characters");
  if (k == 0) throw FormatError("model has an empty case inventory");
  expect(E, a, d_e, "E");
  expect(W, 4 * d_h, d_e + d_h, "W");
  expect(b, 4 * d_h, 1, "b");
  expect(V, a, d_h, "V");
  expect(b_v, a, 1, "b_v");
  expect(U_case, k, d_h, "U_case");
  expect(b_case, k, 1, "b_case");
}

LstmState lstm_step(const LstmParams& p, SymbolId x, const LstmState& s) {
  StepCache cache;
  forward_step(p, x, s.h, s.c, cache);
  return {std::move(cache.h), std::move(cache.c)};
}

EncoderTrace encode_sequence(const LstmParams& p, std::span<const SymbolId> input_ids) {
  if (input_ids.empty()) throw Error("encode_sequence requires a non-empty input");
  EncoderTrace trace;
  LstmState state = LstmState::zeros(p.d_h);
  trace.states.reserve(input_ids.size());
  for (SymbolId x : input_ids) {
    state = lstm_step(p, x, state);
    trace.states.push_back(state);
  }
  trace.final = std::move(state);
  return trace;
}

std::vector<double> classify_case(const LstmParams& p, std::span<const double> h) {
  if (h.size() != p.d_h) throw Error("classify_case expects a hidden vector of size " + std::to_string(p.d_h));
  std::vector<double> probs;
  output_logits(p.U_case, p.b_case, h, probs);
  softmax_inplace(probs);
  return probs;
}

std::vector<SymbolId> decode_form(const LstmParams& p, const LstmState& start, std::size_t max_len) {
  std::vector<SymbolId> out;
  StepCache cache;
  std::vector<double> logits;
  std::vector<double> h = start.h;
  std::vector<double> c = start.c;
  SymbolId in = Alphabet::kBos;
  while (out.size() < max_len) {
    forward_step(p, in, h, c, cache);
    output_logits(p.V, p.b_v, cache.h, logits);
    SymbolId best = Alphabet::kEos;
    double best_logit = -std::numeric_limits<double>::infinity();
    for (SymbolId s = 0; s < logits.size(); ++s) {
      if (s == Alphabet::kPad || s == Alphabet::kBos || s == Alphabet::kSep) continue;
      if (logits[s] > best_logit) {
        best_logit = logits[s];
        best = s;
      }
    }
    if (best == Alphabet::kEos) break;
    out.push_back(best);
    in = best;
    std::swap(h, cache.h);
    std::swap(c, cache.c);
  }
  return out;
}

double instance_loss(const LstmParams& p, const EncodedInstance& enc, std::size_t gold_case, double lambda_case) {
  const Unroll u = run_teacher_forced(p, enc, gold_case);
  return u.gen_loss + lambda_case * u.case_loss;
}

LossAndGradients backward(const LstmParams& p, const EncodedInstance& enc, std::size_t gold_case,
                          double lambda_case) {
  const Unroll u = run_teacher_forced(p, enc, gold_case);
  const std::size_t de = p.d_e;
  const std::size_t dh = p.d_h;
  const std::size_t total_steps = u.steps.size();

  LossAndGradients out;
  out.loss = u.gen_loss + lambda_case * u.case_loss;
  Gradients& g = out.grads;
  g = LstmParams::zeros(p.alphabet_size(), p.n_cases(), de, dh);

  // Gradient flowing into each step's h from the output heads.
  std::vector<std::vector<double>> dh_out(total_steps);

  {
    std::vector<double> dlogits = u.case_probs;
    dlogits[gold_case] -= 1.0;
    for (double& d : dlogits) d *= lambda_case;
    const auto& h_enc = u.steps[u.encoder_steps - 1].h;
    add_outer(g.U_case, dlogits, h_enc);
    for (std::size_t r = 0; r < dlogits.size(); ++r) g.b_case[r] += dlogits[r];
    auto& dh_enc = dh_out[u.encoder_steps - 1];
    dh_enc.assign(dh, 0.0);
    add_transposed_matvec(p.U_case, dlogits, dh_enc);
  }

  const double inv_len = 1.0 / static_cast<double>(enc.target_ids.size());
  for (std::size_t k = 0; k < enc.target_ids.size(); ++k) {
    const std::size_t t = u.encoder_steps + k;
    std::vector<double> dlogits = u.gen_probs[k];
    dlogits[enc.target_ids[k]] -= 1.0;
    for (double& d : dlogits) d *= inv_len;
    add_outer(g.V, dlogits, u.steps[t].h);
    for (std::size_t r = 0; r < dlogits.size(); ++r) g.b_v[r] += dlogits[r];
    dh_out[t].assign(dh, 0.0);
    add_transposed_matvec(p.V, dlogits, dh_out[t]);
  }

  std::vector<double> dh_next(dh, 0.0);
  std::vector<double> dc_next(dh, 0.0);
  std::vector<double> dz(4 * dh);
  std::vector<double> dxh(de + dh);
  for (std::size_t t = total_steps; t-- > 0;) {
    const StepCache& s = u.steps[t];
    if (!dh_out[t].empty()) {
      for (std::size_t k = 0; k < dh; ++k) dh_next[k] += dh_out[t][k];
    }
    for (std::size_t k = 0; k < dh; ++k) {
      const double i = s.gates[k];
      const double f = s.gates[dh + k];
      const double gg = s.gates[2 * dh + k];
      const double o = s.gates[3 * dh + k];
      const double dhk = dh_next[k];
      const double dc = dc_next[k] + dhk * o * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
      dz[k] = dc * gg * i * (1.0 - i);
      dz[dh + k] = dc * s.c_prev[k] * f * (1.0 - f);
      dz[2 * dh + k] = dc * i * (1.0 - gg * gg);
      dz[3 * dh + k] = dhk * s.tanh_c[k] * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    add_outer(g.W, dz, s.xh);
    for (std::size_t r = 0; r < 4 * dh; ++r) g.b[r] += dz[r];
    std::fill(dxh.begin(), dxh.end(), 0.0);
    add_transposed_matvec(p.W, dz, dxh);
    auto erow = g.E.row(s.x);
    for (std::size_t k = 0; k < de; ++k) erow[k] += dxh[k];
    std::copy(dxh.begin() + static_cast<std::ptrdiff_t>(de), dxh.end(), dh_next.begin());
  }
  return out;
}

AdamState AdamState::for_params(const LstmParams& p) {
  AdamState s;
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    s.m[i] = Tensor(ts[i]->rows(), ts[i]->cols());
    s.v[i] = Tensor(ts[i]->rows(), ts[i]->cols());
  }
  return s;
}

double global_norm(const Gradients& g) {
  double sq = 0.0;
  for (const Tensor* t : g.tensors()) {
    for (double x : t->values()) sq += x * x;
  }
  return std::sqrt(sq);
}

double adam_update(LstmParams& p, Gradients grads, AdamState& state, double lr, double clip_norm) {
  const auto params = p.tensors();
  const auto gs = grads.tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (gs[i]->rows() != params[i]->rows() || gs[i]->cols() != params[i]->cols() ||
        state.m[i].size() != params[i]->size() || state.v[i].size() != params[i]->size()) {
      throw Error("adam_update shape mismatch on tensor " + std::string(LstmParams::kTensorNames[i]));
    }
    if (!gs[i]->all_finite()) {
      throw Error("non-finite gradient in tensor " + std::string(LstmParams::kTensorNames[i]));
    }
  }
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw Error("gradient norm overflowed");
  const double scale = norm > clip_norm ? clip_norm / norm : 1.0;

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double correction2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->values();
    const auto grad = gs[i]->values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double gk = grad[k] * scale;
      m[k] = AdamState::kBeta1 * m[k] + (1.0 - AdamState::kBeta1) * gk;
      v[k] = AdamState::kBeta2 * v[k] + (1.0 - AdamState::kBeta2) * gk * gk;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      theta[k] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw Error("epochs must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (d_e == 0 || d_h == 0) throw Error("embedding and hidden sizes must be positive");
  if (!(clip_norm > 0.0)) throw Error("clip norm must be positive");
  if (!(lambda_case >= 0.0)) throw Error("lambda_case must be non-negative");
  if (patience == 0) throw Error("patience must be at least 1");
  if (decode_scale == 0 && decode_offset == 0) throw Error("decode budget must be positive");
}

std::vector<TrainingExample> prepare_examples(std::span<const NounInstance> instances, const Treebank& treebank,
                                              const Alphabet& alphabet, const CaseInventory& inventory,
                                              std::size_t window) {
  std::vector<TrainingExample> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    const auto case_index = inventory.index_of(inst.morph_case.tag);
    if (!case_index) throw Error("instance case '" + inst.morph_case.tag + "' is not in the model inventory");
    out.push_back({encode_instance(inst, treebank.at(inst.sent_id), alphabet, window), *case_index,
                   inst.lemma_chars.size()});
  }
  return out;
}

LstmParams initialize_params(const TrainConfig& cfg, std::size_t alphabet_size, std::size_t n_cases, Prng& prng) {
  LstmParams p = LstmParams::zeros(alphabet_size, n_cases, cfg.d_e, cfg.d_h);
  p.E = init_uniform(prng, alphabet_size, cfg.d_e, cfg.d_e);
  p.W = init_uniform(prng, 4 * cfg.d_h, cfg.d_e + cfg.d_h, cfg.d_e + cfg.d_h);
  p.V = init_uniform(prng, alphabet_size, cfg.d_h, cfg.d_h);
  p.U_case = init_uniform(prng, n_cases, cfg.d_h, cfg.d_h);
  for (std::size_t k = 0; k < cfg.d_h; ++k) p.b[cfg.d_h + k] = 1.0;
  return p;
}

DevMetrics score_examples(const LstmParams& p, std::span<const TrainingExample> examples, const TrainConfig& cfg) {
  DevMetrics m;
  if (examples.empty()) return m;
  std::size_t exact = 0;
  std::size_t case_hits = 0;
  for (const auto& ex : examples) {
    m.loss += instance_loss(p, ex.encoded, ex.case_index, cfg.lambda_case);
    const EncoderTrace trace = encode_sequence(p, ex.encoded.input_ids);
    const auto decoded = decode_form(p, trace.final, cfg.max_decode_length(ex.lemma_length));
    const std::span<const SymbolId> gold(ex.encoded.target_ids.data(), ex.encoded.target_ids.size() - 1);
    if (std::equal(decoded.begin(), decoded.end(), gold.begin(), gold.end())) ++exact;
    const auto probs = classify_case(p, trace.final.h);
    const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (best == ex.case_index) ++case_hits;
  }
  const auto n = static_cast<double>(examples.size());
  m.loss /= n;
  m.accuracy = static_cast<double>(exact) / n;
  m.case_accuracy = static_cast<double>(case_hits) / n;
  return m;
}

TrainResult train(const TrainConfig& cfg, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> dev, std::size_t alphabet_size, std::size_t n_cases) {
  cfg.validate();
  if (train_set.empty()) throw Error("cannot train on an empty training set");

  Prng prng(cfg.seed);
  TrainResult result;
  LstmParams params = initialize_params(cfg, alphabet_size, n_cases, prng);
  AdamState adam = AdamState::for_params(params);

  result.dev_was_train = dev.empty();
  const std::span<const TrainingExample> selection = dev.empty() ? train_set : dev;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  DevMetrics best{std::numeric_limits<double>::infinity(), -1.0, 0.0};
  std::size_t since_best = 0;
  result.params = params;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, prng);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const auto& ex = train_set[idx];
      LossAndGradients lg = backward(params, ex.encoded, ex.case_index, cfg.lambda_case);
      loss_sum += lg.loss;
      adam_update(params, std::move(lg.grads), adam, cfg.learning_rate, cfg.clip_norm);
    }
    const DevMetrics dm = score_examples(params, selection, cfg);
    result.history.push_back({epoch, loss_sum / static_cast<double>(train_set.size()), dm.loss, dm.accuracy,
                              dm.case_accuracy});

    const bool improved = dm.accuracy > best.accuracy || (dm.accuracy == best.accuracy && dm.loss < best.loss);
    if (improved) {
      best = dm;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    // Exact-match accuracy cannot improve past 1.
    if (dm.accuracy >= 1.0 || since_best >= cfg.patience) {
      result.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  return result;
}

std::string history_to_json(const TrainConfig& cfg, const TrainResult& result) {
  Json j;
  Json epochs = Json::array();
  for (const auto& r : result.history) {
    epochs.push_back({{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"dev_loss", r.dev_loss},
                      {"dev_accuracy", r.dev_accuracy},
                      {"dev_case_accuracy", r.dev_case_accuracy}});
  }
  j["epochs"] = epochs;
  j["best_epoch"] = result.best_epoch;
  j["stopped_early"] = result.stopped_early;
  j["selection_on_train"] = result.dev_was_train;
  j["config"] = {{"seed", cfg.seed},
                 {"epochs", cfg.epochs},
                 {"learning_rate", cfg.learning_rate},
                 {"d_e", cfg.d_e},
                 {"d_h", cfg.d_h},
                 {"window", cfg.window},
                 {"clip_norm", cfg.clip_norm},
                 {"lambda_case", cfg.lambda_case},
                 {"patience", cfg.patience},
                 {"decode_scale", cfg.decode_scale},
                 {"decode_offset", cfg.decode_offset}};
  return dump_canonical(j);
}

namespace {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.append(s);
  }
  void raw(std::string_view s) { bytes_.append(s); }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view raw(std::size_t n, std::string_view what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("model file truncated while reading " + std::string(what) + " at byte " +
                        std::to_string(pos_));
    }
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32(std::string_view what) {
    const auto b = raw(4, what);
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(k)]);
    return v;
  }
  double f64(std::string_view what) {
    const auto b = raw(8, what);
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(k)]);
    return std::bit_cast<double>(v);
  }
  std::string str(std::string_view what) {
    const std::uint32_t n = u32(what);
    return std::string(raw(n, what));
  }
  // Guards allocations driven by counts read from the file.
  void require(std::uint64_t n_bytes, std::string_view what) const {
    if (n_bytes > bytes_.size() - pos_) {
      throw FormatError("model file truncated: " + std::string(what) + " needs " + std::to_string(n_bytes) +
                        " bytes, " + std::to_string(bytes_.size() - pos_) + " left");
    }
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const ModelBundle& model) {
  model.params.validate();
  if (model.params.alphabet_size() != model.alphabet.size()) {
    throw Error("parameter alphabet size does not match the alphabet");
  }
  if (model.params.n_cases() != model.inventory.size()) {
    throw Error("parameter case count does not match the inventory");
  }
  ByteWriter w;
  w.raw(std::string_view(kModelMagic.data(), kModelMagic.size()));
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.alphabet.chars().size()));
  for (char32_t c : model.alphabet.chars()) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(model.inventory.size()));
  for (const auto& c : model.inventory.cases()) w.str(c.tag);
  w.u32(static_cast<std::uint32_t>(model.params.d_e));
  w.u32(static_cast<std::uint32_t>(model.params.d_h));
  const auto tensors = model.params.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Tensor& t = *tensors[i];
    w.str(LstmParams::kTensorNames[i]);
    const bool is_vector = t.cols() == 1;
    w.u32(is_vector ? 1 : 2);
    w.u32(static_cast<std::uint32_t>(t.rows()));
    if (!is_vector) w.u32(static_cast<std::uint32_t>(t.cols()));
    for (double x : t.values()) w.f64(x);
  }
  return w.take();
}

ModelBundle deserialize_model(std::string_view bytes) {
  ByteReader r(bytes);
  const auto magic = r.raw(4, "magic");
  if (magic != std::string_view(kModelMagic.data(), kModelMagic.size())) {
    throw FormatError("not a DCLN model file (bad magic)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kModelVersion) {
    throw FormatError("unsupported model version " + std::to_string(version) + "; supported versions: " +
                      std::to_string(kModelVersion));
  }

  const std::uint32_t n_chars = r.u32("alphabet size");
  r.require(std::uint64_t{n_chars} * 4, "alphabet");
  std::vector<char32_t> chars;
  chars.reserve(n_chars);
  for (std::uint32_t i = 0; i < n_chars; ++i) {
    const std::uint32_t cp = r.u32("alphabet");
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) throw FormatError("alphabet holds an invalid code point");
    chars.push_back(static_cast<char32_t>(cp));
  }
  for (std::size_t i = 1; i < chars.size(); ++i) {
    if (chars[i] <= chars[i - 1]) throw FormatError("alphabet is not strictly sorted");
  }

  const std::uint32_t n_cases = r.u32("inventory size");
  r.require(std::uint64_t{n_cases} * 4, "inventory");
  std::vector<MorphCase> cases;
  for (std::uint32_t i = 0; i < n_cases; ++i) cases.push_back({r.str("inventory")});

  ModelBundle model;
  try {
    model.inventory = CaseInventory(std::move(cases));
  } catch (const Error& e) {
    throw FormatError(std::string("bad inventory: ") + e.what());
  }
  model.alphabet = Alphabet(std::move(chars));

  const std::uint32_t d_e = r.u32("d_e");
  const std::uint32_t d_h = r.u32("d_h");
  const std::uint32_t n_tensors = r.u32("tensor count");
  if (n_tensors != LstmParams::kTensorCount) {
    throw FormatError("expected " + std::to_string(LstmParams::kTensorCount) + " tensors, found " +
                      std::to_string(n_tensors));
  }
  model.params.d_e = d_e;
  model.params.d_h = d_h;
  const auto tensors = model.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const std::string name = r.str("tensor name");
    if (name != LstmParams::kTensorNames[i]) {
      throw FormatError("tensor " + std::to_string(i) + " is '" + name + "', expected '" +
                        std::string(LstmParams::kTensorNames[i]) + "'");
    }
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank != 1 && rank != 2) throw FormatError("tensor " + name + " has unsupported rank " + std::to_string(rank));
    const std::uint64_t rows = r.u32("tensor dims");
    const std::uint64_t cols = rank == 2 ? r.u32("tensor dims") : 1;
    r.require(rows * cols * 8, "tensor " + name);
    std::vector<double> data(rows * cols);
    for (double& x : data) x = r.f64("tensor data");
    *tensors[i] = Tensor::from(rows, cols, std::move(data));
  }
  if (!r.done()) throw FormatError("trailing bytes after tensor table");
  model.params.validate();
  if (model.params.alphabet_size() != model.alphabet.size()) {
    throw FormatError("tensor shapes imply alphabet size " + std::to_string(model.params.alphabet_size()) +
                      " but the file lists " + std::to_string(model.alphabet.size()));
  }
  if (model.params.n_cases() != model.inventory.size()) {
    throw FormatError("tensor shapes imply " + std::to_string(model.params.n_cases()) + " cases but the inventory has " +
                      std::to_string(model.inventory.size()));
  }
  return model;
}

void save_model(const ModelBundle& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

ModelBundle load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

LstmPrediction predict(const ModelBundle& model, std::span<const SymbolId> input_ids, std::size_t max_len) {
  LstmPrediction out;
  const EncoderTrace trace = encode_sequence(model.params, input_ids);
  out.form_ids = decode_form(model.params, trace.final, max_len);
  out.form = model.alphabet.decode(out.form_ids);
  out.case_probs = classify_case(model.params, trace.final.h);
  out.case_index =
      static_cast<std::size_t>(std::max_element(out.case_probs.begin(), out.case_probs.end()) - out.case_probs.begin());
  return out;
}

GradCheckResult gradient_check(std::uint64_t seed, bool corrupt, double eps) {
  constexpr std::size_t kAlphabet = 8;
  constexpr std::size_t kCases = 4;
  constexpr double kLambda = 0.5;

  Prng prng(seed);
  TrainConfig cfg;
  cfg.d_e = 3;
  cfg.d_h = 4;
  LstmParams params = initialize_params(cfg, kAlphabet, kCases, prng);
  // Random biases so every bias coordinate carries a generic gradient.
  for (Tensor* t : {&params.b, &params.b_v, &params.b_case}) {
    for (double& x : t->values()) x = prng.uniform(-0.5, 0.5);
  }

  EncodedInstance enc;
  for (int k = 0; k < 5; ++k) enc.input_ids.push_back(static_cast<SymbolId>(prng.below(kAlphabet)));
  const std::size_t target_len = 1 + static_cast<std::size_t>(prng.below(4));
  for (std::size_t k = 0; k < target_len; ++k) enc.target_ids.push_back(static_cast<SymbolId>(prng.below(kAlphabet)));
  enc.target_ids.push_back(Alphabet::kEos);
  const auto gold_case = static_cast<std::size_t>(prng.below(kCases));

  LossAndGradients analytic = backward(params, enc, gold_case, kLambda);
  if (corrupt) analytic.grads.W[0] += 1e-2;

  GradCheckResult result;
  const auto p_tensors = params.tensors();
  const auto g_tensors = analytic.grads.tensors();
  for (std::size_t i = 0; i < p_tensors.size(); ++i) {
    Tensor* target = p_tensors[i];
    const Tensor original = *target;
    const Tensor numeric = finite_diff_grad(
        [&](const Tensor& probe) {
          *target = probe;
          return instance_loss(params, enc, gold_case, kLambda);
        },
        original, eps);
    *target = original;
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      const double a = (*g_tensors[i])[k];
      const double n = numeric[k];
      const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = std::string(LstmParams::kTensorNames[i]);
        result.worst_index = k;
      }
      ++result.parameters_checked;
    }
  }
  return result;
}

}  // namespace declension
