#include "jdiag/problems.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "jdiag/rng.hpp"

namespace jdiag {

using nlohmann::json;

const char* to_string(Ensemble e) { return e == Ensemble::General ? "general" : "selfadjoint"; }

Ensemble parse_ensemble(const std::string& s) {
  if (s == "general") return Ensemble::General;
  if (s == "selfadjoint") return Ensemble::SelfAdjoint;
  throw DomainError("unknown ensemble '" + s + "' (expected general or selfadjoint)");
}

Field parse_field(const std::string& s) {
  if (s == "real") return Field::Real;
  if (s == "complex") return Field::Complex;
  throw DomainError("unknown field '" + s + "' (expected real or complex)");
}

namespace {

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t attempt) {
  return seed + attempt * 0x9E3779B97F4A7C15ULL;
}

template <typename Scalar>
Mat<Scalar> hermitian_part(const Mat<Scalar>& m) {
  // mirrored explicitly so the result is self-adjoint bit for bit
  const Eigen::Index n = m.rows();
  Mat<Scalar> out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = Scalar(std::real(m(i, i)));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(i, j) = (m(i, j) + Eigen::numext::conj(m(j, i))) / 2.0;
      out(j, i) = Eigen::numext::conj(out(i, j));
    }
  }
  return out;
}

template <typename Scalar>
double condition_number(const Mat<Scalar>& q) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(q);
  const auto& s = svd.singularValues();
  return s[s.size() - 1] > 0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
}

void validate_sizes(Eigen::Index n, std::size_t k, Eigen::Index min_n) {
  if (n < min_n) throw DomainError("n must be at least " + std::to_string(min_n));
  if (k < 1) throw DomainError("k must be at least 1");
}

}  // namespace

template <typename Scalar>
GeneratedProblem<Scalar> generate_jointly_diagonalizable(Eigen::Index n, std::size_t k,
                                                         double noise_level, std::uint64_t seed,
                                                         Ensemble ensemble) {
  validate_sizes(n, k, 2);
  if (!(noise_level >= 0) || !std::isfinite(noise_level))
    throw DomainError("noise level must be finite and nonnegative");

  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(sub_seed(seed, attempt));
    Mat<Scalar> q = rng.gaussian<Scalar>(n, n);
    if (ensemble == Ensemble::SelfAdjoint) {
      Eigen::HouseholderQR<Mat<Scalar>> qr(q);
      Mat<Scalar> u = qr.householderQ() * Mat<Scalar>::Identity(n, n);
      const Mat<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto mag = std::abs(r(j, j));
        if (mag > 0) u.col(j) *= r(j, j) / mag;
      }
      q = u;
    } else if (condition_number(q) > kMaxGroundTruthCondition) {
      continue;
    }

    GeneratedProblem<Scalar> p;
    p.truth.q = q;
    p.truth.noise_level = noise_level;
    p.truth.seed = seed;
    std::vector<Mat<Scalar>> mats;
    mats.reserve(k);
    const Eigen::PartialPivLU<Mat<Scalar>> lu_t(q.transpose());
    for (std::size_t i = 0; i < k; ++i) {
      Vec<Scalar> lambda(n);
      for (Eigen::Index j = 0; j < n; ++j)
        lambda[j] = ensemble == Ensemble::SelfAdjoint ? Scalar(rng.normal())
                                                      : rng.normal_scalar<Scalar>();
      const Mat<Scalar> ql = q * lambda.asDiagonal();
      Mat<Scalar> a;
      if (ensemble == Ensemble::SelfAdjoint) {
        a = hermitian_part<Scalar>(ql * q.adjoint());
      } else {
        // A Q = Q L  <=>  Q^T A^T = (Q L)^T
        a = lu_t.solve(ql.transpose()).transpose();
      }
      if (noise_level > 0) {
        Mat<Scalar> e = rng.gaussian<Scalar>(n, n);
        if (ensemble == Ensemble::SelfAdjoint) e = hermitian_part<Scalar>(e);
        a += noise_level * e;
      }
      mats.push_back(std::move(a));
      p.truth.diagonals.push_back(std::move(lambda));
    }
    p.collection = MatrixCollection<Scalar>(std::move(mats));
    return p;
  }
}

template <typename Scalar>
MatrixCollection<Scalar> random_collection(Eigen::Index n, std::size_t k, std::uint64_t seed,
                                           Ensemble ensemble) {
  validate_sizes(n, k, 1);
  Rng rng(seed);
  std::vector<Mat<Scalar>> mats;
  mats.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Mat<Scalar> g = rng.gaussian<Scalar>(n, n);
    mats.push_back(ensemble == Ensemble::SelfAdjoint ? hermitian_part<Scalar>(g) : g);
  }
  return MatrixCollection<Scalar>(std::move(mats));
}

// ---------------------------------------------------------------------------
// JSON

Field CollectionFile::field() const {
  return std::holds_alternative<RealCollection>(collection) ? Field::Real : Field::Complex;
}

namespace {

template <typename Scalar>
json scalar_to_json(const Scalar& x) {
  if constexpr (is_complex_v<Scalar>)
    return json::array({x.real(), x.imag()});
  else
    return x;
}

template <typename Scalar>
json matrix_to_json(const Mat<Scalar>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(scalar_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Scalar>
json vector_to_json(const Vec<Scalar>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(scalar_to_json(v[i]));
  return out;
}

double json_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

template <typename Scalar>
Scalar scalar_from_json(const json& j, const std::string& where) {
  if constexpr (is_complex_v<Scalar>) {
    if (!j.is_array() || j.size() != 2)
      throw ParseError(where + ": complex entries must be [re, im] pairs");
    return Scalar(json_number(j[0], where + "[0]"), json_number(j[1], where + "[1]"));
  } else {
    if (j.is_array())
      throw ParseError(where + ": field is real but the entry is an array (complex pair?)");
    return json_number(j, where);
  }
}

template <typename Scalar>
Mat<Scalar> matrix_from_json(const json& j, Eigen::Index n, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw ParseError(where + ": expected " + std::to_string(n) + " rows");
  Mat<Scalar> m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[r];
    const std::string rw = where + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw ParseError(rw + ": expected " + std::to_string(n) + " entries");
    for (Eigen::Index c = 0; c < n; ++c)
      m(r, c) = scalar_from_json<Scalar>(row[c], rw + "[" + std::to_string(c) + "]");
  }
  return m;
}

template <typename Scalar>
json collection_body(const MatrixCollection<Scalar>& c) {
  json mats = json::array();
  for (const auto& a : c) mats.push_back(matrix_to_json(a));
  return mats;
}

template <typename Scalar>
json truth_to_json(const GroundTruth<Scalar>& t) {
  json diags = json::array();
  for (const auto& d : t.diagonals) diags.push_back(vector_to_json(d));
  return json{{"q", matrix_to_json(t.q)},
              {"diagonals", diags},
              {"noise_level", t.noise_level},
              {"seed", t.seed}};
}

template <typename Scalar>
CollectionFile parse_body(const json& doc, Eigen::Index n, std::size_t k) {
  const json& mats = doc.at("matrices");
  if (!mats.is_array()) throw ParseError("matrices: expected an array");
  if (mats.size() != k)
    throw ParseError("matrices: header declares k = " + std::to_string(k) + " but " +
                     std::to_string(mats.size()) + " matrices are present");
  std::vector<Mat<Scalar>> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(matrix_from_json<Scalar>(mats[i], n, "matrices[" + std::to_string(i) + "]"));
  CollectionFile file{MatrixCollection<Scalar>(std::move(out)), std::nullopt};

  if (doc.contains("ground_truth")) {
    const json& gt = doc["ground_truth"];
    if (!gt.is_object()) throw ParseError("ground_truth: expected an object");
    GroundTruth<Scalar> t;
    t.q = matrix_from_json<Scalar>(gt.at("q"), n, "ground_truth.q");
    const json& diags = gt.at("diagonals");
    if (!diags.is_array() || diags.size() != k)
      throw ParseError("ground_truth.diagonals: expected " + std::to_string(k) + " vectors");
    for (std::size_t i = 0; i < k; ++i) {
      const std::string where = "ground_truth.diagonals[" + std::to_string(i) + "]";
      if (!diags[i].is_array() || static_cast<Eigen::Index>(diags[i].size()) != n)
        throw ParseError(where + ": expected " + std::to_string(n) + " entries");
      Vec<Scalar> v(n);
      for (Eigen::Index j = 0; j < n; ++j)
        v[j] = scalar_from_json<Scalar>(diags[i][j], where + "[" + std::to_string(j) + "]");
      t.diagonals.push_back(std::move(v));
    }
    t.noise_level = json_number(gt.at("noise_level"), "ground_truth.noise_level");
    if (!gt.at("seed").is_number_unsigned())
      throw ParseError("ground_truth.seed: expected a nonnegative integer");
    t.seed = gt["seed"].get<std::uint64_t>();
    file.ground_truth = std::move(t);
  }
  return file;
}

std::string parse_error_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at " + parse_error_context(text, e.byte) + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

namespace {

// Matrices are written one row per line; everything else is compact JSON.
void write_matrix(std::ostringstream& os, const json& m, const std::string& indent) {
  os << "[\n";
  for (std::size_t r = 0; r < m.size(); ++r)
    os << indent << "  " << m[r].dump() << (r + 1 < m.size() ? ",\n" : "\n");
  os << indent << "]";
}

void write_matrix_list(std::ostringstream& os, const json& list, const std::string& indent) {
  os << "[\n";
  for (std::size_t i = 0; i < list.size(); ++i) {
    os << indent << "  ";
    write_matrix(os, list[i], indent + "  ");
    os << (i + 1 < list.size() ? ",\n" : "\n");
  }
  os << indent << "]";
}

}  // namespace

std::string to_json(const CollectionFile& file) {
  std::ostringstream os;
  os << "{\n  \"schema_version\": " << kSchemaVersion << ",\n";
  os << "  \"field\": \"" << to_string(file.field()) << "\",\n";
  std::visit(
      [&](const auto& c) {
        os << "  \"n\": " << c.n() << ",\n  \"k\": " << c.k() << ",\n  \"matrices\": ";
        write_matrix_list(os, collection_body(c), "  ");
      },
      file.collection);
  if (file.ground_truth) {
    const bool gt_complex =
        std::holds_alternative<GroundTruth<std::complex<double>>>(*file.ground_truth);
    if (gt_complex != (file.field() == Field::Complex))
      throw DomainError("ground truth field does not match the collection field");
    std::visit(
        [&](const auto& t) {
          const json body = truth_to_json(t);
          os << ",\n  \"ground_truth\": {\n    \"q\": ";
          write_matrix(os, body["q"], "    ");
          os << ",\n    \"diagonals\": ";
          write_matrix(os, body["diagonals"], "    ");
          os << ",\n    \"noise_level\": " << body["noise_level"].dump();
          os << ",\n    \"seed\": " << body["seed"].dump() << "\n  }";
        },
        *file.ground_truth);
  }
  os << "\n}\n";
  return os.str();
}

CollectionFile from_json(const std::string& text) {
  const json doc = parse_document(text);
  try {
    if (!doc.is_object()) throw ParseError("top level: expected an object");
    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer())
      throw ParseError("schema_version: missing or not an integer");
    const int version = doc["schema_version"].get<int>();
    if (version != kSchemaVersion)
      throw ParseError("unsupported schema_version " + std::to_string(version) + " (expected " +
                       std::to_string(kSchemaVersion) + ")");
    if (!doc.contains("field") || !doc["field"].is_string())
      throw ParseError("field: missing or not a string");
    const std::string field = doc["field"].get<std::string>();
    if (field != "real" && field != "complex")
      throw ParseError("field: expected \"real\" or \"complex\", got \"" + field + "\"");
    for (const char* key : {"n", "k"})
      if (!doc.contains(key) || !doc[key].is_number_integer() || doc[key].get<long long>() < 1)
        throw ParseError(std::string(key) + ": missing or not a positive integer");
    if (!doc.contains("matrices")) throw ParseError("matrices: missing");
    const auto n = static_cast<Eigen::Index>(doc["n"].get<long long>());
    const auto k = static_cast<std::size_t>(doc["k"].get<long long>());
    return field == "real" ? parse_body<double>(doc, n, k)
                           : parse_body<std::complex<double>>(doc, n, k);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid collection file: ") + e.what());
  }
}

void save(const CollectionFile& file, const std::filesystem::path& path) {
  const std::string text = to_json(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

CollectionFile load(const std::filesystem::path& path) {
  try {
    return from_json(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

template <typename Scalar>
Mat<Scalar> load_matrix(const std::filesystem::path& path, Eigen::Index n) {
  const std::string text = read_file(path);
  const json doc = parse_document(text);
  try {
    const json& body = doc.is_object() ? doc.at("matrix") : doc;
    return matrix_from_json<Scalar>(body, n, path.string());
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

#define JDIAG_INSTANTIATE_PROBLEMS(S)                                                           \
  template GeneratedProblem<S> generate_jointly_diagonalizable<S>(Eigen::Index, std::size_t,    \
                                                                  double, std::uint64_t,        \
                                                                  Ensemble);                    \
  template MatrixCollection<S> random_collection<S>(Eigen::Index, std::size_t, std::uint64_t,   \
                                                    Ensemble);                                  \
  template Mat<S> load_matrix<S>(const std::filesystem::path&, Eigen::Index);

JDIAG_INSTANTIATE_PROBLEMS(double)
JDIAG_INSTANTIATE_PROBLEMS(std::complex<double>)

}  // namespace jdiag
