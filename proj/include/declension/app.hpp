#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "declension/corpus.hpp"
#include "declension/error.hpp"
#include "declension/eval.hpp"
#include "declension/model.hpp"
#include "declension/ngram.hpp"

namespace declension::app {

namespace fs = std::filesystem;

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // verification or metric failure
inline constexpr int kExitUsage = 2;    // usage or I/O error

inline constexpr double kGradCheckTolerance = 1e-4;

/// Everything a command may need; each command reads only its own fields.
struct RunConfig {
  TrainConfig train;
  std::vector<fs::path> treebanks;
  fs::path manifest;
  fs::path model;
  fs::path output;   // manifest, model, n-gram model or report, depending on the command
  fs::path history;  // train only; defaults to <output>.history.json
  CaseInventory cases = CaseInventory::default_inventory();
  bool cases_explicit = false;
  LengthBounds bounds;
  SplitRatios ratios;
  std::string split_name = "test";
  bool oracle = false;
  bool quiet = false;

  // predict
  std::optional<std::string> article;
  std::string lemma;
  std::vector<std::string> left_context;
  std::vector<std::string> right_context;

  // gradcheck
  bool inject_fault = false;
};

/// Thrown for bad flags or unusable inputs; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Parses and merges CoNLL-U files. Sentences without ids get per-file prefixes
/// when more than one file is given.
Treebank load_treebanks(std::span<const fs::path> paths);

/// Noun instances of the listed sentences, in manifest order.
std::vector<NounInstance> instances_for(const Treebank& treebank, std::span<const std::string> ids,
                                        const CaseInventory& inventory);

int cmd_split(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_train_ngram(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, std::ostream& err);

enum class ModelKind { Lstm, Ngram };
/// Sniffs the file: DCLN magic means LSTM, anything else is treated as n-gram JSON.
ModelKind detect_model_kind(const fs::path& path);

}  // namespace declension::app
