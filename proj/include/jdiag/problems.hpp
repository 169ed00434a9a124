#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "jdiag/matcore.hpp"

namespace jdiag {

enum class Ensemble { General, SelfAdjoint };

const char* to_string(Ensemble e);
Ensemble parse_ensemble(const std::string& s);
Field parse_field(const std::string& s);

template <typename Scalar>
struct GroundTruth {
  Mat<Scalar> q;
  std::vector<Vec<Scalar>> diagonals;
  double noise_level = 0;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct GeneratedProblem {
  MatrixCollection<Scalar> collection;
  GroundTruth<Scalar> truth;
};

/// Condition number cap for the generator's ground-truth Q*.
inline constexpr double kMaxGroundTruthCondition = 1e4;

/// A_k = Q* L_k Q*^{-1} + noise E_k (General) or Q* L_k Q*^* + noise sym(E_k)
/// with real L_k and unitary Q* (SelfAdjoint). Deterministic per seed.
template <typename Scalar>
GeneratedProblem<Scalar> generate_jointly_diagonalizable(Eigen::Index n, std::size_t k,
                                                         double noise_level, std::uint64_t seed,
                                                         Ensemble ensemble);

/// K matrices with i.i.d. Gaussian entries; SelfAdjoint returns (G + G^*)/2.
template <typename Scalar>
MatrixCollection<Scalar> random_collection(Eigen::Index n, std::size_t k, std::uint64_t seed,
                                           Ensemble ensemble);

// ---------------------------------------------------------------------------
// CollectionFile JSON.

inline constexpr int kSchemaVersion = 1;

using AnyGroundTruth = std::variant<GroundTruth<double>, GroundTruth<std::complex<double>>>;

struct CollectionFile {
  AnyCollection collection;
  std::optional<AnyGroundTruth> ground_truth;

  Field field() const;
};

std::string to_json(const CollectionFile& file);
CollectionFile from_json(const std::string& text);

void save(const CollectionFile& file, const std::filesystem::path& path);
CollectionFile load(const std::filesystem::path& path);

template <typename Scalar>
void save(const MatrixCollection<Scalar>& collection, const std::filesystem::path& path) {
  save(CollectionFile{collection, std::nullopt}, path);
}

template <typename Scalar>
void save(const GeneratedProblem<Scalar>& problem, const std::filesystem::path& path) {
  save(CollectionFile{problem.collection, problem.truth}, path);
}

/// Single n x n matrix stored as the nested-array layout used for collection
/// entries (optionally wrapped as {"matrix": ...}). Used for --q0 and probe
/// targets.
template <typename Scalar>
Mat<Scalar> load_matrix(const std::filesystem::path& path, Eigen::Index n);

}  // namespace jdiag
