#include "mpsumm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "mpsumm/corpus.hpp"
#include "mpsumm/error.hpp"

namespace mpsumm {

namespace {

std::vector<std::string> lowered_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto tok : whitespace_tokens(text)) {
    std::string t(tok);
    for (char& c : t) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    out.push_back(std::move(t));
  }
  return out;
}

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Largest-magnitude coordinate positive, first index on ties.
void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (!v.empty() && v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

// Unit vector orthogonal to `other`, from the first standard basis vector that
// is not parallel to it.
std::vector<double> complete_basis(const std::vector<double>& other) {
  const std::size_t d = other.size();
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> e(d, 0.0);
    e[k] = 1.0;
    double dot = other[k];
    for (std::size_t i = 0; i < d; ++i) e[i] -= dot * other[i];
    double norm = 0.0;
    for (double x : e) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 1e-6) {
      for (double& x : e) x /= norm;
      return e;
    }
  }
  return std::vector<double>(d, 0.0);
}

constexpr double kRankTolerance = 1e-12;

}  // namespace

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  RougeScore s;
  if (candidate.empty() || reference.empty()) return s;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  s.precision = lcs / static_cast<double>(candidate.size());
  s.recall = lcs / static_cast<double>(reference.size());
  s.f1 = (s.precision + s.recall) == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = lowered_tokens(candidate);
  const auto r = lowered_tokens(reference);
  return rouge_l(std::span<const std::string>(c), std::span<const std::string>(r));
}

double nli_score(std::span<const double> entail, std::size_t summary_count, std::size_t source_count) {
  if (summary_count == 0) throw Error(ErrorCode::kEmptySummary, "nli_score needs summary sentences");
  if (source_count == 0) throw Error(ErrorCode::kEmptySource, "nli_score needs source sentences");
  if (entail.size() != summary_count * source_count) {
    throw Error(ErrorCode::kShapeMismatch, "entail matrix size does not match its dimensions");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < summary_count; ++i) {
    const auto row = entail.subspan(i * source_count, source_count);
    total += *std::max_element(row.begin(), row.end());
  }
  return total / static_cast<double>(summary_count);
}

double nli_score(std::span<const std::string> summary, std::span<const std::string> source, Provider& provider) {
  if (summary.empty()) throw Error(ErrorCode::kEmptySummary, "nli_score needs summary sentences");
  if (source.empty()) throw Error(ErrorCode::kEmptySource, "nli_score needs source sentences");
  std::vector<double> entail;
  entail.reserve(summary.size() * source.size());
  for (const auto& claim : summary) {
    for (const auto& premise : source) entail.push_back(provider.nli(premise, claim).entail);
  }
  return nli_score(entail, summary.size(), source.size());
}

ProjectedPoints pca_project(std::span<const EmbeddingVector> embeddings) {
  ProjectedPoints out;
  const std::size_t n = embeddings.size();
  if (n == 0) return out;
  const std::size_t d = embeddings.front().size();
  for (const auto& e : embeddings) {
    if (e.size() != d) throw Error(ErrorCode::kDimMismatch, "embeddings differ in width");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = embeddings[i][j];
  }
  x.rowwise() -= x.colwise().mean();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();
  for (Eigen::Index k = 0; k < 2; ++k) {
    if (k < v.cols() && static_cast<std::size_t>(k) < d) {
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = v(static_cast<Eigen::Index>(j), k);
      fix_sign(row);
      out.projection[static_cast<std::size_t>(k)] = std::move(row);
      out.singular_values[static_cast<std::size_t>(k)] = sv(k);
    } else if (k == 1 && d >= 2) {
      out.projection[1] = complete_basis(out.projection[0]);
    } else {
      out.projection[static_cast<std::size_t>(k)] = std::vector<double>(d, 0.0);
    }
  }
  out.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double px = 0.0;
    double py = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      px += c * out.projection[0][j];
      py += c * out.projection[1][j];
    }
    out.points[i] = {px, py};
  }
  return out;
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
              return a.x == b.x && a.y == b.y;
            }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double shoelace_area(std::span<const Point2> polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % polygon.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2.0;
}

double semantic_area(std::span<const EmbeddingVector> embeddings) {
  if (embeddings.size() < 3) return 0.0;
  const auto projected = pca_project(embeddings);
  const double s1 = projected.singular_values[0];
  const double s2 = projected.singular_values[1];
  if (!(s2 > kRankTolerance * s1)) return 0.0;
  const auto hull = convex_hull(projected.points);
  return shoelace_area(hull);
}

double semantic_area(std::span<const std::string> summary, Provider& provider) {
  if (summary.empty()) throw Error(ErrorCode::kEmptySummary, "semantic_area needs summary sentences");
  const std::vector<std::string> sentences(summary.begin(), summary.end());
  const auto vectors = provider.embed(sentences);
  return semantic_area(std::span<const EmbeddingVector>(vectors));
}

std::vector<double> normalize_area(std::span<const double> raw) {
  if (raw.empty()) return {};
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  std::vector<double> out(raw.size(), 0.5);
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = std::clamp((raw[i] - *lo) / range, 0.0, 1.0);
  return out;
}

double compression_ratio(std::size_t source_tokens, std::size_t summary_tokens) {
  if (summary_tokens == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(source_tokens) / static_cast<double>(summary_tokens);
}

double novel_unigram_rate(std::span<const std::string> summary, std::span<const std::string> source) {
  std::set<std::string> seen;
  for (const auto& s : source) {
    for (auto& t : terms(s)) seen.insert(std::move(t));
  }
  std::size_t total = 0;
  std::size_t novel = 0;
  for (const auto& s : summary) {
    for (const auto& t : terms(s)) {
      ++total;
      if (seen.count(t) == 0) ++novel;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(novel) / static_cast<double>(total);
}

DatasetStats dataset_stats(std::span<const StatsInput> examples) {
  DatasetStats st;
  st.count = examples.size();
  if (examples.empty()) return st;
  std::size_t flagged = 0;
  std::size_t factoid = 0;
  std::size_t with_ratio = 0;
  for (const auto& e : examples) {
    std::size_t src = 0;
    std::size_t sum = 0;
    for (const auto& s : e.source_sentences) src += count_words(s);
    for (const auto& b : e.bullets) sum += count_words(b);
    st.mean_question_tokens += static_cast<double>(count_words(e.question));
    st.mean_source_tokens += static_cast<double>(src);
    st.mean_summary_tokens += static_cast<double>(sum);
    st.mean_bullets += static_cast<double>(e.bullets.size());
    if (sum > 0) {
      st.mean_compression += compression_ratio(src, sum);
      ++with_ratio;
    }
    st.novel_unigram_pct += 100.0 * novel_unigram_rate(e.bullets, e.source_sentences);
    if (e.factoid) {
      ++flagged;
      if (*e.factoid) ++factoid;
    }
  }
  const double n = static_cast<double>(examples.size());
  st.mean_question_tokens /= n;
  st.mean_source_tokens /= n;
  st.mean_summary_tokens /= n;
  st.mean_bullets /= n;
  st.mean_compression = with_ratio == 0 ? 0.0 : st.mean_compression / static_cast<double>(with_ratio);
  st.novel_unigram_pct /= n;
  if (flagged > 0) st.factoid_pct = 100.0 * static_cast<double>(factoid) / static_cast<double>(flagged);
  return st;
}

std::string DatasetStats::table() const {
  std::ostringstream os;
  auto row = [&](const char* name, double value, int precision) {
    os << std::left << std::setw(24) << name << std::right << std::setw(12) << std::fixed
       << std::setprecision(precision) << value << '\n';
  };
  row("examples", static_cast<double>(count), 0);
  row("question tokens", mean_question_tokens, 2);
  row("source tokens", mean_source_tokens, 2);
  row("summary tokens", mean_summary_tokens, 2);
  row("bullets", mean_bullets, 2);
  row("compression ratio", mean_compression, 2);
  row("% novel unigrams", novel_unigram_pct, 2);
  if (factoid_pct) row("% factoid", *factoid_pct, 2);
  return os.str();
}

std::string DatasetStats::record() const {
  nlohmann::ordered_json j;
  j["count"] = count;
  j["mean_question_tokens"] = mean_question_tokens;
  j["mean_source_tokens"] = mean_source_tokens;
  j["mean_summary_tokens"] = mean_summary_tokens;
  j["mean_bullets"] = mean_bullets;
  j["mean_compression"] = mean_compression;
  j["novel_unigram_pct"] = novel_unigram_pct;
  j["factoid_pct"] = factoid_pct ? nlohmann::ordered_json(*factoid_pct) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

}  // namespace mpsumm
