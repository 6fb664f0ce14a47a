#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"
#include "execopt/mbr.hpp"
#include "execopt/mock_providers.hpp"
#include "test_support.hpp"

using namespace execopt;
using execopt::testing::fixture;

namespace {

ExtractionCandidate with_embeddings(int id, const std::map<std::string, Embedding>& comps,
                                    Embedding full = {1.0}) {
  ExtractionCandidate c;
  c.id = id;
  c.component_embeddings = comps;
  c.full_embedding = std::move(full);
  return c;
}

std::map<std::string, Embedding> same_for_all(const Embedding& e) {
  std::map<std::string, Embedding> m;
  for (auto t : kComponentTypes) m[std::string(t)] = e;
  return m;
}

std::vector<ExtractionCandidate> random_candidates(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ExtractionCandidate> cs;
  for (int i = 1; i <= n; ++i) {
    std::map<std::string, Embedding> m;
    for (auto t : kComponentTypes) m[std::string(t)] = {u(rng), u(rng), u(rng), u(rng)};
    cs.push_back(with_embeddings(i, m));
  }
  return cs;
}

class FixedLlm final : public LlmProvider {
 public:
  explicit FixedLlm(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const ProviderRequest& r) override {
    prompts.push_back(r.prompt);
    return replies_.at(std::min<std::size_t>(calls++, replies_.size() - 1));
  }
  std::string id() const override { return "fixed"; }
  std::size_t calls = 0;
  std::vector<std::string> prompts;

 private:
  std::vector<std::string> replies_;
};

std::vector<ExtractionCandidate> food_candidates() {
  std::vector<ExtractionCandidate> cs;
  for (int i = 1; i <= 5; ++i) {
    cs.push_back(make_candidate(
        i, parse_decision_process(read_file(fixture("food/candidates/candidate_" + std::to_string(i) + ".json")))));
  }
  return cs;
}

}  // namespace

TEST(Mbr, ConfigValidation) {
  MbrConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.weights["constraints"] = 0.5;
  EXPECT_THROW(cfg.validate(), WeightMismatch);
  cfg = {};
  cfg.weights.erase("inputs");
  EXPECT_THROW(cfg.validate(), WeightMismatch);
  cfg = {};
  cfg.top_q = 6;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.num_candidates = 1;
  cfg.top_q = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Mbr, ComponentUtilityExamples) {
  std::vector<ExtractionCandidate> same;
  for (int i = 1; i <= 4; ++i) same.push_back(with_embeddings(i, same_for_all({0.3, 0.4})));
  for (int i = 1; i <= 4; ++i) {
    EXPECT_DOUBLE_EQ(component_utility(same, i, "constraints"), 1.0);
    EXPECT_DOUBLE_EQ(candidate_utility(same, i, MbrConfig{}), 1.0);
  }

  const double r = 1.0 / std::sqrt(2.0);
  std::vector<ExtractionCandidate> three = {with_embeddings(1, same_for_all({1, 0})),
                                            with_embeddings(2, same_for_all({0, 1})),
                                            with_embeddings(3, same_for_all({r, r}))};
  EXPECT_NEAR(component_utility(three, 3, "objective"), std::sqrt(2.0) / 2.0, 1e-15);

  std::vector<ExtractionCandidate> ortho = {with_embeddings(1, same_for_all({1, 0})),
                                            with_embeddings(2, same_for_all({0, 1}))};
  EXPECT_EQ(component_utility(ortho, 1, "inputs"), 0.0);
  EXPECT_EQ(component_utility(ortho, 2, "inputs"), 0.0);

  auto missing = ortho;
  missing[1].component_embeddings.erase("inputs");
  EXPECT_THROW(component_utility(missing, 1, "inputs"), MissingEmbedding);
}

TEST(Mbr, CandidateUtilityIsWeightedSum) {
  // S = 0.8 on constraints, 1.0 elsewhere: candidates 1 and 2 share every
  // component; constraints of candidate 3 sit at cos 0.6 to theirs.
  auto base = same_for_all({1, 0});
  auto off = base;
  off["constraints"] = {0.6, 0.8};
  std::vector<ExtractionCandidate> cs = {with_embeddings(1, base), with_embeddings(2, base),
                                         with_embeddings(3, off)};
  EXPECT_NEAR(component_utility(cs, 1, "constraints"), 0.8, 1e-15);
  EXPECT_NEAR(candidate_utility(cs, 1, MbrConfig{}), 0.88, 1e-15);

  auto zero = same_for_all({1, 0});
  zero["constraints"] = {0, 1};
  std::vector<ExtractionCandidate> two = {with_embeddings(1, same_for_all({1, 0})), with_embeddings(2, zero)};
  EXPECT_NEAR(candidate_utility(two, 1, MbrConfig{}), 0.4, 1e-15);

  MbrConfig partial;
  partial.weights.erase("objective");
  EXPECT_THROW(candidate_utility(two, 1, partial), WeightMismatch);
}

TEST(Mbr, RandomizedProperties) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> scale(0.01, 50.0);
  MbrConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 6;
    cfg.num_candidates = n;
    cfg.top_q = 1 + trial % n;
    auto cs = random_candidates(rng, n);
    const auto scores = score_candidates(cs, cfg);
    for (const auto& s : scores) {
      double lo = 1e9, hi = -1e9;
      for (const auto& [k, v] : s.components) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      EXPECT_LE(lo, s.utility + 1e-12);
      EXPECT_GE(hi, s.utility - 1e-12);
    }
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return a.utility != b.utility ? a.utility > b.utility : a.id < b.id;
    });
    std::vector<int> expect, got;
    for (int i = 0; i < cfg.top_q; ++i) expect.push_back(sorted[i].id);
    for (const auto& c : select_top_q(cs, cfg)) got.push_back(c.id);
    EXPECT_EQ(got, expect);

    auto shuffled = cs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<int> got_shuffled;
    for (const auto& c : select_top_q(shuffled, cfg)) got_shuffled.push_back(c.id);
    EXPECT_EQ(got_shuffled, got);

    auto scaled = cs;
    const std::string comp(kComponentTypes[trial % 4]);
    const double k = scale(rng);
    for (auto& c : scaled) {
      for (auto& x : c.component_embeddings[comp]) x *= k;
    }
    std::vector<int> got_scaled;
    for (const auto& c : select_top_q(scaled, cfg)) got_scaled.push_back(c.id);
    std::sort(got.begin(), got.end());
    std::sort(got_scaled.begin(), got_scaled.end());
    EXPECT_EQ(got_scaled, got);
  }
}

TEST(Mbr, SelectTopQTiesAndFullSet) {
  std::vector<ExtractionCandidate> same;
  for (int i = 5; i >= 1; --i) same.push_back(with_embeddings(i, same_for_all({1, 1})));
  MbrConfig cfg;
  std::vector<int> ids;
  for (const auto& c : select_top_q(same, cfg)) ids.push_back(c.id);
  EXPECT_EQ(ids, (std::vector<int>{1, 2, 3}));
  cfg.top_q = 5;
  EXPECT_EQ(select_top_q(same, cfg).size(), 5u);
}

TEST(Mbr, FoodCandidatesKeepCandidateFiveInTopThree) {
  auto cs = food_candidates();
  HashingEmbedder emb(256);
  embed_candidates(cs, emb);
  std::vector<int> ids;
  for (const auto& c : select_top_q(cs, MbrConfig{})) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<int>{2, 3, 5}));
}

TEST(Judge, ScriptedVerdictSelectsCandidateFive) {
  auto cs = food_candidates();
  std::vector<ExtractionCandidate> top = {cs[2], cs[4], cs[1]};
  FixedLlm judge({read_file(fixture("food/judge.json"))});
  const auto out = judge_rerank(top, read_file(fixture("food/problem.txt")), &judge);
  EXPECT_EQ(out.chosen.id, 5);
  ASSERT_TRUE(out.verdict);
  EXPECT_EQ(out.verdict->confidence, Confidence::High);
  EXPECT_FALSE(out.fallback);
  EXPECT_EQ(judge.calls, 1u);
  EXPECT_NE(judge.prompts[0].find("Candidate formulations (JSON)"), std::string::npos);
}

TEST(Judge, SingleCandidateSkipsJudge) {
  auto cs = food_candidates();
  FixedLlm judge({"{}"});
  const auto out = judge_rerank({cs[0]}, "p", &judge);
  EXPECT_EQ(out.chosen.id, 1);
  EXPECT_FALSE(out.judge_called);
  EXPECT_EQ(judge.calls, 0u);
}

TEST(Judge, UnknownIdFallsBackAfterOneRetry) {
  auto cs = food_candidates();
  std::vector<ExtractionCandidate> top = {cs[2], cs[4], cs[1]};
  Json v = Json::parse(read_file(fixture("food/judge.json")));
  v["best_candidate_id"] = 99;
  FixedLlm judge({v.dump()});
  const auto out = judge_rerank(top, "p", &judge);
  EXPECT_EQ(judge.calls, 2u);
  EXPECT_TRUE(out.fallback);
  EXPECT_EQ(out.chosen.id, 3);
  ASSERT_FALSE(out.diagnostics.empty());
  EXPECT_NE(out.diagnostics[0].find("JudgeContractViolation"), std::string::npos);
}

TEST(Judge, RetrySucceedsAfterMalformedReply) {
  auto cs = food_candidates();
  FixedLlm judge({"not json", read_file(fixture("food/judge.json"))});
  const auto out = judge_rerank({cs[2], cs[4]}, "p", &judge);
  EXPECT_EQ(out.chosen.id, 5);
  EXPECT_FALSE(out.fallback);
}

TEST(Judge, UnavailableJudgeFallsBack) {
  auto cs = food_candidates();
  UnconfiguredLlm judge;
  const auto out = judge_rerank({cs[3], cs[0]}, "p", &judge);
  EXPECT_TRUE(out.fallback);
  EXPECT_EQ(out.chosen.id, 4);
  const auto none = judge_rerank({cs[3], cs[0]}, "p", nullptr);
  EXPECT_TRUE(none.fallback);
}

TEST(Judge, VerdictParsing) {
  EXPECT_THROW(parse_judge_verdict("{\"best_candidate_id\": 1}", {1}), ContractViolation);
  const auto v = parse_judge_verdict(read_file(fixture("food/judge.json")), {2, 3, 5});
  EXPECT_EQ(v.best_candidate_id, 5);
  EXPECT_EQ(judge_verdict_to_json(v)["confidence"], "high");
}

TEST(Consistency, Examples) {
  std::vector<ExtractionCandidate> same = {with_embeddings(1, {}, {1, 2}), with_embeddings(2, {}, {1, 2})};
  auto m = consistency_metrics(same);
  EXPECT_DOUBLE_EQ(m.consistency, 1.0);
  EXPECT_EQ(m.stability, 0.0);

  std::vector<ExtractionCandidate> pair = {with_embeddings(1, {}, {1, 0}),
                                           with_embeddings(2, {}, {0.9, std::sqrt(1 - 0.81)})};
  m = consistency_metrics(pair);
  EXPECT_NEAR(m.consistency, 0.9, 1e-15);
  EXPECT_EQ(m.stability, 0.0);
}

TEST(Consistency, ThreeCandidatePopulationStd) {
  // Cosines 0.8, 0.9, 1.0 cannot occur together (cos 1 means equal vectors),
  // so use the realizable 0.9, 0.8, 0.7: mean 0.8, population std sqrt(0.02/3).
  const double s = std::sqrt(0.19);
  const double y = (0.7 - 0.72) / s;
  const double z = std::sqrt(1.0 - 0.64 - y * y);
  std::vector<ExtractionCandidate> cs = {with_embeddings(1, {}, {1, 0, 0}),
                                         with_embeddings(2, {}, {0.9, s, 0}),
                                         with_embeddings(3, {}, {0.8, y, z})};
  const auto m = consistency_metrics(cs);
  EXPECT_NEAR(m.consistency, 0.8, 1e-12);
  EXPECT_NEAR(m.stability, std::sqrt(0.02 / 3.0), 1e-12);
}
