#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "declension/corpus.hpp"
#include "declension/numerics.hpp"

namespace declension {

/// Trainable tensors of the character LSTM. Gate rows of W and b are ordered
/// [input, forget, candidate, output], each block d_h rows; W multiplies the
/// concatenation [embedding; previous hidden state].
struct LstmParams {
  static constexpr std::size_t kTensorCount = 7;
  static constexpr std::array<std::string_view, kTensorCount> kTensorNames = {"E", "W", "b", "V",
                                                                              "b_v", "U_case", "b_case"};

  std::size_t d_e = 0;
  std::size_t d_h = 0;
  Tensor E;       // alphabet x d_e
  Tensor W;       // 4 d_h x (d_e + d_h)
  Tensor b;       // 4 d_h
  Tensor V;       // alphabet x d_h
  Tensor b_v;     // alphabet
  Tensor U_case;  // cases x d_h
  Tensor b_case;  // cases

  static LstmParams zeros(std::size_t alphabet_size, std::size_t n_cases, std::size_t d_e, std::size_t d_h);

  std::size_t alphabet_size() const noexcept { return E.rows(); }
  std::size_t n_cases() const noexcept { return U_case.rows(); }
  std::size_t parameter_count() const noexcept;

  std::array<Tensor*, kTensorCount> tensors() noexcept;
  std::array<const Tensor*, kTensorCount> tensors() const noexcept;

  /// Throws FormatError if shapes disagree with the recorded dims or any entry is non-finite.
  void validate() const;

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

using Gradients = LstmParams;

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t d_h) { return {std::vector<double>(d_h, 0.0), std::vector<double>(d_h, 0.0)}; }
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

LstmState lstm_step(const LstmParams& p, SymbolId x, const LstmState& s);

struct EncoderTrace {
  LstmState final;
  std::vector<LstmState> states;  // one per consumed symbol
};

/// Runs the LSTM from the zero state over `input_ids`.
EncoderTrace encode_sequence(const LstmParams& p, std::span<const SymbolId> input_ids);

/// Softmax over the case inventory from a hidden state.
std::vector<double> classify_case(const LstmParams& p, std::span<const double> h);

/// Greedy decoding from `start`: feeds BOS, then its own outputs. PAD, BOS and
/// SEP are never emitted. Stops at EOS (not included) or after `max_len` symbols.
std::vector<SymbolId> decode_form(const LstmParams& p, const LstmState& start, std::size_t max_len);

/// Teacher-forced generation loss (mean over target positions) plus
/// lambda_case times the case cross-entropy at the encoder's final state.
double instance_loss(const LstmParams& p, const EncodedInstance& enc, std::size_t gold_case, double lambda_case);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// Exact gradients of instance_loss by full backpropagation through time.
LossAndGradients backward(const LstmParams& p, const EncodedInstance& enc, std::size_t gold_case,
                          double lambda_case);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::array<Tensor, LstmParams::kTensorCount> m;
  std::array<Tensor, LstmParams::kTensorCount> v;
  std::uint64_t t = 0;

  static AdamState for_params(const LstmParams& p);
};

double global_norm(const Gradients& g);

/// Clips the global gradient norm to `clip_norm`, then applies one Adam step.
/// Returns the pre-clipping norm. Throws on non-finite gradients.
double adam_update(LstmParams& p, Gradients grads, AdamState& state, double lr, double clip_norm);

struct TrainConfig {
  std::uint64_t seed = 42;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t d_e = 32;
  std::size_t d_h = 128;
  std::size_t window = 3;
  double clip_norm = 5.0;
  double lambda_case = 0.5;
  std::size_t patience = 5;
  // Decoding budget: decode_scale * |lemma| + decode_offset symbols.
  std::size_t decode_scale = 2;
  std::size_t decode_offset = 8;

  void validate() const;
  std::size_t max_decode_length(std::size_t lemma_length) const noexcept {
    return decode_scale * lemma_length + decode_offset;
  }
};

struct TrainingExample {
  EncodedInstance encoded;
  std::size_t case_index = 0;
  std::size_t lemma_length = 0;
};

std::vector<TrainingExample> prepare_examples(std::span<const NounInstance> instances, const Treebank& treebank,
                                              const Alphabet& alphabet, const CaseInventory& inventory,
                                              std::size_t window);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_accuracy = 0.0;
  double dev_case_accuracy = 0.0;
};

struct TrainResult {
  LstmParams params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  bool dev_was_train = false;
};

/// Uniform fan-in initialization; forget-gate biases start at 1, all other biases at 0.
LstmParams initialize_params(const TrainConfig& cfg, std::size_t alphabet_size, std::size_t n_cases, Prng& prng);

struct DevMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double case_accuracy = 0.0;
};

DevMetrics score_examples(const LstmParams& p, std::span<const TrainingExample> examples, const TrainConfig& cfg);

/// Per-instance Adam training with seeded reshuffling and early stopping on dev
/// exact-match accuracy (ties broken by lower dev loss). When `dev` is empty the
/// training examples double as the selection set.
TrainResult train(const TrainConfig& cfg, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> dev, std::size_t alphabet_size, std::size_t n_cases);

std::string history_to_json(const TrainConfig& cfg, const TrainResult& result);

/// Everything needed to run a trained model.
struct ModelBundle {
  LstmParams params;
  Alphabet alphabet;
  CaseInventory inventory = CaseInventory::default_inventory();
};

inline constexpr std::array<char, 4> kModelMagic = {'D', 'C', 'L', 'N'};
inline constexpr std::uint32_t kModelVersion = 1;

std::string serialize_model(const ModelBundle& model);
ModelBundle deserialize_model(std::string_view bytes);
void save_model(const ModelBundle& model, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

struct LstmPrediction {
  std::vector<SymbolId> form_ids;
  std::string form;
  std::vector<double> case_probs;
  std::size_t case_index = 0;
};

LstmPrediction predict(const ModelBundle& model, std::span<const SymbolId> input_ids, std::size_t max_len);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t parameters_checked = 0;
};

/// Compares backward() with central differences on a random tiny model
/// (d_e=3, d_h=4, alphabet 8, inventory 4). `corrupt` perturbs the analytic
/// gradient so the harness itself can be tested.
GradCheckResult gradient_check(std::uint64_t seed, bool corrupt = false, double eps = 1e-5);

}  // namespace declension
