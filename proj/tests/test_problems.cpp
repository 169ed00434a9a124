#include <gtest/gtest.h>

#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "jdiag/problems.hpp"
#include "jdiag/rng.hpp"
#include "jdiag/wellposed.hpp"

using namespace jdiag;
using cd = std::complex<double>;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            (std::string("jdiag_") + info->test_suite_name() + "_" + info->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

template <typename S>
bool bit_equal(const Mat<S>& a, const Mat<S>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(S) * static_cast<std::size_t>(a.size())) == 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string parse_error_of(const std::string& text) {
  try {
    from_json(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Rng, EngineIsStandardMersenneTwister) {
  Rng rng(5489);
  rng.engine().discard(9999);
  EXPECT_EQ(rng.engine()(), 9981545732273789042ull);
}

TEST(Rng, UniformRange) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(2);
  double s = 0, s2 = 0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / m, 0.0, 0.01);
  EXPECT_NEAR(s2 / m, 1.0, 0.01);
  double c2 = 0;
  for (int i = 0; i < m; ++i) c2 += std::norm(rng.normal_scalar<cd>());
  EXPECT_NEAR(c2 / m, 1.0, 0.01);
}

TEST(Generator, NoiselessGroundTruthDiagonalizes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (Ensemble e : {Ensemble::General, Ensemble::SelfAdjoint}) {
      const auto p = generate_jointly_diagonalizable<cd>(4, 3, 0.0, seed, e);
      const TransformPoint<cd> tp(p.truth.q);
      double mass = 0;
      for (const auto& a : p.collection) mass += a.squaredNorm();
      EXPECT_LE(offdiag_cost(p.collection, tp), 1e-20 * mass) << "seed " << seed;
      for (std::size_t k = 0; k < p.collection.k(); ++k) {
        const MatC d = similarity(p.collection[k], tp);
        const MatC expected = p.truth.diagonals[k].asDiagonal();
        EXPECT_LE((d - expected).norm(), 1e-12 * p.collection[k].norm()) << "seed " << seed;
      }
    }
  }
}

TEST(Generator, GroundTruthConditioning) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = generate_jointly_diagonalizable<double>(6, 1, 0.0, seed, Ensemble::General);
    Eigen::JacobiSVD<MatR> svd(p.truth.q);
    const auto& s = svd.singularValues();
    EXPECT_LE(s(0) / s(5), kMaxGroundTruthCondition);
  }
}

TEST(Generator, SelfAdjointEnsemble) {
  const auto p = generate_jointly_diagonalizable<cd>(5, 3, 1e-2, 4, Ensemble::SelfAdjoint);
  for (const auto& a : p.collection) EXPECT_EQ(a, MatC(a.adjoint()));
  const MatC& q = p.truth.q;
  EXPECT_LE((q.adjoint() * q - MatC::Identity(5, 5)).norm(), 1e-14);
  for (const auto& d : p.truth.diagonals) EXPECT_EQ(d.imag(), Eigen::VectorXd::Zero(5));
}

TEST(Generator, Deterministic) {
  const auto a = generate_jointly_diagonalizable<cd>(4, 3, 1e-3, 77, Ensemble::General);
  const auto b = generate_jointly_diagonalizable<cd>(4, 3, 1e-3, 77, Ensemble::General);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_TRUE(bit_equal(a.collection[k], b.collection[k]));
  EXPECT_TRUE(bit_equal(a.truth.q, b.truth.q));
  const auto c = generate_jointly_diagonalizable<cd>(4, 3, 1e-3, 78, Ensemble::General);
  EXPECT_FALSE(bit_equal(a.collection[0], c.collection[0]));
}

TEST(Generator, ParameterValidation) {
  EXPECT_THROW(generate_jointly_diagonalizable<double>(1, 1, 0.0, 0, Ensemble::General), DomainError);
  EXPECT_THROW(generate_jointly_diagonalizable<double>(3, 0, 0.0, 0, Ensemble::General), DomainError);
  EXPECT_THROW(generate_jointly_diagonalizable<double>(3, 1, -1.0, 0, Ensemble::General), DomainError);
  EXPECT_THROW(parse_field("quaternion"), DomainError);
  EXPECT_THROW(parse_ensemble("wishart"), DomainError);
}

TEST(RandomCollection, SelfAdjointExactly) {
  const auto c = random_collection<cd>(5, 4, 3, Ensemble::SelfAdjoint);
  for (const auto& a : c) EXPECT_EQ((a - a.adjoint()).norm(), 0.0);
}

TEST(RandomCollection, SingleMatrixHasDistinctEigenvalues) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto c = random_collection<double>(3, 1, seed, Ensemble::General);
    EXPECT_TRUE(sylvester_discriminant(c[0]).distinct) << "seed " << seed;
    EXPECT_GT(relative_eigen_gap(c[0]), kEigenGapTolerance) << "seed " << seed;
  }
}

TEST(RandomCollection, Deterministic) {
  const auto a = random_collection<double>(4, 2, 5, Ensemble::General);
  const auto b = random_collection<double>(4, 2, 5, Ensemble::General);
  EXPECT_TRUE(bit_equal(a[0], b[0]));
  EXPECT_TRUE(bit_equal(a[1], b[1]));
}

TEST(CollectionFile, ComplexRoundTripIsBitExact) {
  TempDir dir;
  const auto c = random_collection<cd>(3, 2, 6, Ensemble::General);
  save(c, dir / "c.json");
  const auto file = load(dir / "c.json");
  ASSERT_EQ(file.field(), Field::Complex);
  const auto& back = std::get<ComplexCollection>(file.collection);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_TRUE(bit_equal(back[k], c[k]));
  EXPECT_FALSE(file.ground_truth.has_value());
}

TEST(CollectionFile, GroundTruthRoundTrip) {
  TempDir dir;
  const auto p = generate_jointly_diagonalizable<double>(4, 3, 1e-3, 8, Ensemble::General);
  save(p, dir / "p.json");
  const auto file = load(dir / "p.json");
  ASSERT_TRUE(file.ground_truth.has_value());
  const auto& t = std::get<GroundTruth<double>>(*file.ground_truth);
  EXPECT_TRUE(bit_equal(t.q, p.truth.q));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(t.diagonals[k], p.truth.diagonals[k]);
  EXPECT_EQ(t.noise_level, 1e-3);
  EXPECT_EQ(t.seed, 8u);
  save(CollectionFile{std::get<RealCollection>(file.collection), t}, dir / "again.json");
  EXPECT_EQ(slurp(dir / "p.json"), slurp(dir / "again.json"));
}

TEST(CollectionFile, ExtremeValuesRoundTrip) {
  MatR a(2, 2);
  a << 0.1, -std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
      1.0 / 3.0;
  const CollectionFile file{RealCollection({a}), std::nullopt};
  const auto back = from_json(to_json(file));
  EXPECT_TRUE(bit_equal(std::get<RealCollection>(back.collection)[0], a));
}

TEST(CollectionFile, Layout) {
  MatR a(2, 2);
  a << 1, 2.5, -3, 0.1;
  const std::string expected =
      "{\n"
      "  \"schema_version\": 1,\n"
      "  \"field\": \"real\",\n"
      "  \"n\": 2,\n"
      "  \"k\": 1,\n"
      "  \"matrices\": [\n"
      "    [\n"
      "      [1.0,2.5],\n"
      "      [-3.0,0.1]\n"
      "    ]\n"
      "  ]\n"
      "}\n";
  EXPECT_EQ(to_json(CollectionFile{RealCollection({a}), std::nullopt}), expected);
}

TEST(CollectionFile, CountMismatchIsNamed) {
  const std::string text = R"({"schema_version": 1, "field": "real", "n": 1, "k": 2,
                               "matrices": [[[1]], [[2]], [[3]]]})";
  const std::string msg = parse_error_of(text);
  EXPECT_NE(msg.find("k = 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("3 matrices"), std::string::npos) << msg;
}

TEST(CollectionFile, RealFieldRejectsPairs) {
  const std::string text = R"({"schema_version": 1, "field": "real", "n": 1, "k": 1,
                               "matrices": [[[[1, 2]]]]})";
  EXPECT_NE(parse_error_of(text).find("matrices[0][0][0]"), std::string::npos);
}

TEST(CollectionFile, ComplexFieldRequiresPairs) {
  const std::string text = R"({"schema_version": 1, "field": "complex", "n": 1, "k": 1,
                               "matrices": [[[1]]]})";
  EXPECT_NE(parse_error_of(text).find("[re, im]"), std::string::npos);
}

TEST(CollectionFile, UnknownVersion) {
  const std::string text = R"({"schema_version": 2, "field": "real", "n": 1, "k": 1,
                               "matrices": [[[1]]]})";
  EXPECT_NE(parse_error_of(text).find("schema_version 2"), std::string::npos);
}

TEST(CollectionFile, WrongRowLength) {
  const std::string text = R"({"schema_version": 1, "field": "real", "n": 2, "k": 1,
                               "matrices": [[[1, 2], [3]]]})";
  EXPECT_NE(parse_error_of(text).find("matrices[0][1]"), std::string::npos);
}

TEST(CollectionFile, MalformedJsonReportsLine) {
  const std::string text = "{\n  \"schema_version\": 1,\n  \"field\": real\n}";
  EXPECT_NE(parse_error_of(text).find("line 3"), std::string::npos) << parse_error_of(text);
}

TEST(CollectionFile, MissingFile) {
  EXPECT_THROW(load("/nonexistent/dir/x.json"), ParseError);
}

TEST(LoadMatrix, BareAndWrapped) {
  TempDir dir;
  write(dir / "bare.json", "[[1, 2], [3, 4]]");
  write(dir / "wrapped.json", R"({"matrix": [[[1, 0], [2, 0]], [[3, 0], [4, -1]]]})");
  MatR expected(2, 2);
  expected << 1, 2, 3, 4;
  EXPECT_EQ(load_matrix<double>(dir / "bare.json", 2), expected);
  MatC wrapped = expected.cast<cd>();
  wrapped(1, 1) = cd(4, -1);
  EXPECT_EQ(load_matrix<cd>(dir / "wrapped.json", 2), wrapped);
  EXPECT_THROW(load_matrix<double>(dir / "bare.json", 3), ParseError);
}
