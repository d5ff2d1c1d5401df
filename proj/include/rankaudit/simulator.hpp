#pragma once

// Synthetic ranking datasets with known ground truth.
//
// Each query draws a candidate pool (group by categorical draw from the
// query's target shares, score from the group's score model), ranks it by
// score or by DetGreedy, and then evolves for `days` days: every candidate
// independently departs with its group's daily probability and is replaced
// by a fresh candidate. Anonymization masks labels and names but keeps the
// candidate's id and rank.
//
// Scores follow a normal(mean, spread) truncated to [0, 1] by rejection.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rankaudit/data_model.hpp"
#include "rankaudit/detgreedy.hpp"
#include "rankaudit/group_inference.hpp"

namespace rankaudit {

struct ScoreModel {
  double mean = 0.5;
  double spread = 0.15;
};

enum class Postprocess { None, DetGreedy };
enum class Replacement { SameGroup, QueryShares };

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t n_queries = 10;
  std::size_t pool_min = 200;
  std::size_t pool_max = 200;
  GroupScheme scheme{"gender", {"F", "M"}};
  std::vector<double> shares{0.4, 0.6};
  // Per-query multiplicative log-normal jitter on shares (0 = identical).
  double share_jitter = 0.0;
  std::vector<ScoreModel> scores;  // per label; empty = default model for all
  Postprocess postprocess = Postprocess::None;
  SelectionRule rule = SelectionRule::MostUnderrepresented;
  int days = 1;
  std::vector<double> departure;  // per label daily probability; empty = 0
  Replacement replacement = Replacement::SameGroup;
  // Per-day N(0, noise) perturbation of scores before re-ranking.
  double daily_score_noise = 0.0;
  double missing_probability = 0.0;
  std::size_t names_per_group = 50;
  std::string query_prefix = "q";

  // Throws Error(InvalidConfig).
  void validate() const;
};

struct TruthQuery {
  std::string query_id;
  std::vector<double> target_shares;
  std::vector<std::size_t> day1_counts;  // true label counts in the day-1 pool
  std::size_t pool_size = 0;
};

struct TruthCandidate {
  std::string query_id;
  std::string candidate_id;
  std::string label;
  double score = 0.0;
  int first_day = 1;
  bool masked = false;
};

struct TruthDeparture {
  std::string query_id;
  std::string candidate_id;
  std::string label;
  int day = 0;  // first day the candidate is absent
};

struct TruthBias {
  std::string query_id;
  int day = 0;
  std::string label;
  double strength = 0.0;
  std::size_t region = 0;
  std::size_t demoted = 0;
};

struct GroundTruth {
  std::vector<TruthQuery> queries;
  std::vector<TruthCandidate> candidates;
  std::vector<TruthDeparture> departures;
  std::vector<TruthBias> biases;
};

struct SimulatedDataset {
  std::vector<QuerySeries> series;
  GroundTruth truth;
};

SimulatedDataset generate(const SimConfig& config);

// Deterministic first name of the j-th synthetic name for a label.
std::string synthetic_first_name(const std::string& label, std::size_t j);

// Name table under which every synthetic first name resolves to its label.
NameFrequencyTable synthetic_name_table(const SimConfig& config);

struct BiasedSeries {
  QuerySeries series;
  std::vector<TruthBias> records;
};

// Walks each snapshot top-down; every member of `label` met while the top
// `region` positions are still being filled is pushed out with probability
// `strength` and re-inserted, in order, directly below the region. The
// draws come from a stream keyed by (seed, query_id, day).
BiasedSeries inject_topk_bias(const QuerySeries& series, const GroupScheme& scheme,
                              const std::string& label, double strength, std::uint64_t seed,
                              std::size_t region = 25);

// Applies inject_topk_bias to a whole dataset, appending to its ledger.
void inject_topk_bias(SimulatedDataset& dataset, const GroupScheme& scheme, const std::string& label,
                      double strength, std::uint64_t seed, std::size_t region = 25);

// One JSON object per line with a "type" of query, candidate, departure
// or bias.
void write_ledger(std::ostream& out, const GroundTruth& truth);

std::uint64_t stable_hash(std::string_view text);

}  // namespace rankaudit
