#include "execopt/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"

namespace execopt {

Score score(double predicted, double gt, double epsilon) {
  const double rel = std::fabs(predicted - gt) / (std::fabs(gt) + epsilon);
  return {rel < kScoreThreshold, rel};
}

std::vector<BenchmarkInstance> parse_suite(std::string_view jsonl) {
  std::vector<BenchmarkInstance> out;
  std::set<std::string> ids;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "suite line " + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw MalformedDocument(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw SchemaViolation(where + ": missing string 'id'");
    }
    BenchmarkInstance b;
    b.id = j["id"].get<std::string>();
    b.description = j.value("description", "");
    if (!j.contains("ground_truth_objective")) {
      throw SchemaViolation(where + ": missing 'ground_truth_objective'");
    }
    const Json& gt = j["ground_truth_objective"];
    if (gt.is_number()) {
      b.ground_truth = gt.get<double>();
    } else if (gt.is_string() && gt.get<std::string>() == "infeasible") {
      b.ground_truth.reset();
    } else {
      throw SchemaViolation(where + ": ground_truth_objective must be a number or \"infeasible\"");
    }
    if (j.contains("tags")) b.tags = j["tags"].get<std::vector<std::string>>();
    if (!ids.insert(b.id).second) throw SchemaViolation(where + ": duplicate id '" + b.id + "'");
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<BenchmarkInstance> load_suite(const std::filesystem::path& path) {
  return parse_suite(read_file(path));
}

std::string_view to_string(ExceptionRule r) {
  return r == ExceptionRule::VerifiedInfeasibility ? "verified_infeasibility" : "none";
}

namespace {

// pred/gt within 1e-6 of 10^k for some k ≠ 0.
bool power_of_ten_ratio(double predicted, double gt) {
  if (predicted == 0.0 || gt == 0.0) return false;
  const double ratio = std::fabs(predicted / gt);
  const double k = std::round(std::log10(ratio));
  if (k == 0.0) return false;
  return std::fabs(ratio / std::pow(10.0, k) - 1.0) < 1e-6;
}

}  // namespace

ScoreRecord score_with_exceptions(const PipelineOutput& out, const BenchmarkInstance& instance) {
  ScoreRecord r;
  r.instance_id = instance.id;
  if (!out.error.empty()) {
    r.predicted = "error";
    r.note = out.error;
    return r;
  }
  const bool has_value = out.objective && std::isfinite(*out.objective) &&
                         (out.status == SolverStatus::Optimal || out.status == SolverStatus::TimeLimit);
  r.predicted = has_value ? Json(*out.objective).dump() : std::string(to_string(out.status));

  if (!instance.ground_truth) {
    if (out.status == SolverStatus::Infeasible && out.gate_passed && !out.feasible_witness) {
      r.correct = true;
      r.exception_rule = ExceptionRule::VerifiedInfeasibility;
    } else if (out.status == SolverStatus::Infeasible) {
      r.note = "infeasibility claimed without simulator evidence";
    }
    return r;
  }

  if (!has_value) {
    r.note = "no objective value";
    return r;
  }
  const Score s = score(*out.objective, *instance.ground_truth);
  r.correct = s.correct;
  r.relative_error = s.relative_error;
  if (!s.correct) {
    if (power_of_ten_ratio(*out.objective, *instance.ground_truth)) r.review_flags.push_back("units");
    if (out.has_integer_structure &&
        std::floor(*instance.ground_truth) != *instance.ground_truth) {
      r.review_flags.push_back("relaxation");
    }
  }
  return r;
}

std::string SuiteReport::accuracy_fraction() const {
  const std::size_t g = std::gcd(correct, total);
  if (g == 0) return "0/" + std::to_string(total);
  return std::to_string(correct / g) + "/" + std::to_string(total / g);
}

SuiteReport run_suite(const std::vector<BenchmarkInstance>& instances, const Pipeline& pipeline,
                      std::size_t parallelism) {
  if (instances.empty()) throw EmptySuite("benchmark suite has no instances");
  std::vector<ScoreRecord> records(instances.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      const auto start = std::chrono::steady_clock::now();
      ScoreRecord rec;
      try {
        rec = score_with_exceptions(pipeline(instances[i]), instances[i]);
      } catch (const std::exception& e) {
        rec = ScoreRecord{};
        rec.instance_id = instances[i].id;
        rec.predicted = "error";
        rec.note = e.what();
      }
      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      records[i] = std::move(rec);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(parallelism, instances.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::sort(records.begin(), records.end(),
            [](const ScoreRecord& a, const ScoreRecord& b) { return a.instance_id < b.instance_id; });
  SuiteReport r;
  r.total = records.size();
  for (const auto& rec : records) {
    if (rec.correct) ++r.correct;
    r.wall_time_total += rec.wall_time;
    r.wall_time_max = std::max(r.wall_time_max, rec.wall_time);
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.wall_time_mean = r.wall_time_total / static_cast<double>(r.total);
  r.records = std::move(records);
  return r;
}

Json suite_report_to_json(const SuiteReport& r, bool timings) {
  Json doc = Json::object();
  doc["total"] = r.total;
  doc["correct"] = r.correct;
  doc["accuracy"] = r.accuracy;
  doc["accuracy_fraction"] = r.accuracy_fraction();
  if (timings) {
    doc["wall_time"] = Json{{"total", r.wall_time_total}, {"mean", r.wall_time_mean}, {"max", r.wall_time_max}};
  }
  Json list = Json::array();
  for (const auto& rec : r.records) {
    Json j = Json::object();
    j["instance_id"] = rec.instance_id;
    j["predicted"] = rec.predicted;
    j["correct"] = rec.correct;
    j["relative_error"] = number_or_null(rec.relative_error);
    j["exception_rule"] = to_string(rec.exception_rule);
    j["review_flags"] = rec.review_flags;
    j["note"] = rec.note;
    if (timings) j["wall_time"] = rec.wall_time;
    list.push_back(std::move(j));
  }
  doc["records"] = list;
  return doc;
}

std::string suite_report_text(const SuiteReport& r) {
  std::size_t id_width = 8;
  for (const auto& rec : r.records) id_width = std::max(id_width, rec.instance_id.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("instance", id_width) << "  " << pad("predicted", 18) << "  " << pad("correct", 7)
      << "  " << pad("rel_error", 12) << "  notes\n";
  for (const auto& rec : r.records) {
    std::string notes;
    if (rec.exception_rule != ExceptionRule::None) notes += std::string(to_string(rec.exception_rule));
    for (const auto& f : rec.review_flags) notes += (notes.empty() ? "" : " ") + ("review:" + f);
    if (!rec.note.empty()) notes += (notes.empty() ? "" : " ") + rec.note;
    char rel[32] = "-";
    if (rec.relative_error) std::snprintf(rel, sizeof rel, "%.3e", *rec.relative_error);
    out << pad(rec.instance_id, id_width) << "  " << pad(rec.predicted, 18) << "  "
        << pad(rec.correct ? "yes" : "no", 7) << "  " << pad(rel, 12) << "  " << notes << "\n";
  }
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.4f", r.accuracy);
  out << "accuracy " << acc << " (" << r.correct << "/" << r.total << ", " << r.accuracy_fraction()
      << ")\n";
  return out.str();
}

}  // namespace execopt
