#include "clozer/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "clozer/error.hpp"

namespace clozer {
namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

std::vector<QuestionStats> aggregate(const QuestionBank& bank,
                                     std::span<const AnswerLogRecord> log) {
  struct Tally {
    std::size_t n = 0, exact = 0, stem = 0;
  };
  std::unordered_map<std::string, Tally> tallies;
  for (const AnswerLogRecord& r : log) {
    if (bank.find(r.question_id) == nullptr) {
      throw NotFoundError("answer log references unknown question '" + r.question_id + "'");
    }
    if (r.attempt_number != 1) continue;
    Tally& t = tallies[r.question_id];
    ++t.n;
    t.exact += r.exact ? 1 : 0;
    t.stem += r.stem ? 1 : 0;
  }

  std::vector<QuestionStats> out;
  out.reserve(bank.size());
  for (const Question& q : bank.questions()) {
    QuestionStats s;
    s.question_id = q.question_id;
    s.phi = q.phi;
    const auto it = tallies.find(q.question_id);
    if (it == tallies.end() || it->second.n == 0) {
      s.no_answers = true;
    } else {
      const Tally& t = it->second;
      s.n_answers = t.n;
      s.exact_ratio = 100.0 * static_cast<double>(t.exact) / static_cast<double>(t.n);
      s.stem_ratio = 100.0 * static_cast<double>(t.stem) / static_cast<double>(t.n);
    }
    out.push_back(std::move(s));
  }
  return out;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("series differ in length");
  if (xs.size() < 2) throw std::invalid_argument("need at least two points");
  if (is_constant(xs) || is_constant(ys)) throw ValidationError("zero variance");

  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double correlate(std::span<const QuestionStats> stats, MatchMetric metric) {
  std::vector<double> phis, ratios;
  for (const QuestionStats& s : stats) {
    if (s.n_answers == 0) continue;
    phis.push_back(s.phi);
    ratios.push_back(metric == MatchMetric::kExact ? s.exact_ratio : s.stem_ratio);
  }
  return pearson(phis, ratios);
}

void export_scatter(std::span<const QuestionStats> stats, std::ostream& out) {
  out << "question_id,phi,exact_ratio,stem_ratio,n\n";
  for (const QuestionStats& s : stats) {
    if (s.n_answers == 0) continue;
    out << csv_field(s.question_id) << ',' << format_double(s.phi) << ',' << format_double(s.exact_ratio)
        << ',' << format_double(s.stem_ratio) << ',' << s.n_answers << '\n';
  }
}

}  // namespace clozer
